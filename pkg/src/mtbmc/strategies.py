"""The three verification drivers: lazy, schedule recording and widening.

All of them explore the same interleaving tree and report through the same
``Report``.  Real property obligations are decided first; unwinding
assertions are only checked when no real violation exists, so a bound that is
too small shows up as ``BOUND-INSUFFICIENT`` rather than as a bug.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from . import encoder as E
from . import terms as T
from .cfg import ProgramCfg, prepare
from .frontend.typecheck import TypedProgram
from .replay import ReplayError, ReplayStep, replay
from .solver import SolveResult, Solver, Status
from .symex import (
    ExecContext,
    ExplorationLimit,
    Obligation,
    TreeNode,
    explore,
    explore_all,
)

log = logging.getLogger(__name__)

STRATEGIES = ("lazy", "schedule", "uw")


class Verdict(Enum):
    SAFE = "SAFE"
    VIOLATED = "VIOLATED"
    BOUND_INSUFFICIENT = "BOUND-INSUFFICIENT"
    RESOURCE_OUT = "RESOURCE-OUT"


@dataclass
class VerifyConfig:
    strategy: str = "lazy"
    unwind: int = 10
    width: int = 32
    por: bool = True
    unwinding_assertions: bool = True
    seed: int = 0
    max_core: int = 500
    conflict_limit: Optional[int] = None
    exhaustive: bool = False
    division_checks: bool = False
    max_interleavings: Optional[int] = None
    dump_smtlib: Optional[Path] = None
    dump_cnf: Optional[Path] = None
    name: str = "program"

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.unwind < 1:
            raise ValueError("unwind bound must be >= 1")
        if self.width < 1:
            raise ValueError("bit width must be >= 1")
        if self.max_core < 1:
            raise ValueError("core cap must be >= 1")


@dataclass
class Stats:
    interleavings: int = 0
    failed_interleavings: int = 0
    iterations: int = 0
    solver_calls: int = 0
    core_fallbacks: int = 0
    wall_time: float = 0.0


@dataclass
class TraceStep:
    index: int
    tid: int
    loc: str
    text: str
    values: dict[str, object]

    def format(self) -> str:
        vals = ",".join(f"{k}={_fmt(v)}" for k, v in self.values.items())
        return f"#{self.index} T{self.tid} {self.loc} {self.text} {{{vals}}}"


def _fmt(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass
class Counterexample:
    steps: list[TraceStep]
    violated: Obligation
    schedule: list[int]  # thread of every step in the interleaving
    ts: dict[str, int] = field(default_factory=dict)  # block selections (schedule / uw)
    inputs: dict[str, object] = field(default_factory=dict)
    replay_ok: bool = False
    replay_note: str = ""


@dataclass
class Report:
    verdict: Verdict
    strategy: str
    stats: Stats
    counterexample: Optional[Counterexample] = None
    warnings: list[str] = field(default_factory=list)
    message: str = ""

    @property
    def tag(self) -> Optional[str]:
        if self.counterexample is not None:
            return self.counterexample.violated.tag
        return None


class _Driver:
    """Counts and optionally dumps every solver call."""

    def __init__(self, config: VerifyConfig, stats: Stats):
        self.config = config
        self.stats = stats

    def solve(self, f: E.Formula, assume: Optional[list[str]] = None) -> tuple[SolveResult, E.Encoded]:
        enc = E.bitblast(f)
        assumptions = enc.assumptions(assume or [])
        self.stats.solver_calls += 1
        n = self.stats.solver_calls
        stem = f"{self.config.name}-{n:03d}"
        if self.config.dump_smtlib is not None:
            Path(self.config.dump_smtlib).mkdir(parents=True, exist_ok=True)
            text = E.to_smtlib(f, assume or [])
            (Path(self.config.dump_smtlib) / f"{stem}.smt2").write_text(text)
        if self.config.dump_cnf is not None:
            Path(self.config.dump_cnf).mkdir(parents=True, exist_ok=True)
            (Path(self.config.dump_cnf) / f"{stem}.cnf").write_text(enc.cnf.to_dimacs(assumptions))
        res = Solver(enc.cnf, seed=self.config.seed, conflict_limit=self.config.conflict_limit).solve(
            assumptions
        )
        log.debug("solver call %d: %s (%d vars, %d clauses)", n, res.status.value, enc.cnf.num_vars, len(enc.cnf.clauses))
        return res, enc


def _context(cfg: ProgramCfg, config: VerifyConfig) -> ExecContext:
    return ExecContext(cfg, config.width, config.por, config.division_checks)


# -- counterexamples -----------------------------------------------------------------


def _inputs(enc: E.Encoded, res: SolveResult, f: E.Formula) -> dict[str, object]:
    """Values of every free variable that reached the CNF."""
    out: dict[str, object] = {}
    for name, bits in enc.blaster.var_bits.items():
        if name in f.defs:
            continue
        sort = T.BOOL if isinstance(bits, int) else len(bits)  # type: ignore[arg-type]
        out[name] = enc.blaster.value_of(name, res.model, sort)  # type: ignore[arg-type]
    return out


def _default(t: T.Term):
    return False if t.sort == T.BOOL else 0


def _path_env(leaf: TreeNode, inputs: dict[str, object]) -> dict[str, object]:
    env = dict(inputs)
    for node in leaf.path():
        for d in node.record.defs:  # type: ignore[union-attr]
            env[d.sym] = T.evaluate(d.term, env, _default)
    return env


def _failing(leaves: list[TreeNode], f: E.Formula, inputs: dict[str, object]) -> Optional[tuple[TreeNode, E.Goal]]:
    """First leaf whose goal holds under the model, evaluated on that path alone."""
    by_leaf: dict[int, list[E.Goal]] = {}
    for g in f.goals:
        by_leaf.setdefault(id(g.node), []).append(g)
    for leaf in leaves:
        on_path = {id(n) for n in leaf.path()}
        goals = [g for key, gs in by_leaf.items() if key in on_path for g in gs]
        if not goals:
            continue
        env = _path_env(leaf, inputs)
        for g in goals:
            if T.evaluate(g.term, env, _default):
                return leaf, g
    return None


def _decode(
    cfg: ProgramCfg, config: VerifyConfig, leaf: TreeNode, goal: E.Goal, inputs: dict[str, object]
) -> Counterexample:
    env = _path_env(leaf, inputs)
    steps: list[TraceStep] = []
    replay_steps: list[ReplayStep] = []
    ob = goal.obligation
    done = False
    for node in leaf.path():
        for ex in node.record.execs:  # type: ignore[union-attr]
            if not T.evaluate(ex.guard, env, _default):
                continue
            values = {name: T.evaluate(v, env, _default) for name, v in ex.writes}
            steps.append(TraceStep(len(steps), ex.tid, f"{ex.loc.origin}:{ex.loc.line}", ex.text, values))
            nondets = [
                ("divz" if v.payload.startswith("divz") else "nondet", T.evaluate(v, env, _default))
                for v in ex.nondets
            ]
            replay_steps.append(ReplayStep(ex.tid, ex.node, nondets))
            if ob.tid == ex.tid and ob.text == ex.text and ob.loc == ex.loc and node is goal.node:
                done = True
                break
        if done or node is goal.node:
            break
    ts = {k: v for k, v in inputs.items() if k.startswith("ts")}
    cex = Counterexample(
        steps,
        ob,
        [n.tid for n in leaf.path()],
        ts=ts,  # type: ignore[arg-type]
        inputs={k: v for k, v in inputs.items() if not k.startswith("ts")},
    )
    try:
        machine = replay(cfg, config.width, replay_steps)
        seen = {v.tag for v in machine.violations}
        if ob.tag == "deadlock":
            cex.replay_ok = "deadlock" in seen or machine.deadlocked()
        else:
            cex.replay_ok = ob.tag in seen
        if not cex.replay_ok:
            cex.replay_note = f"replay did not reach a {ob.tag} violation"
    except ReplayError as err:
        cex.replay_note = str(err)
    return cex


def _counterexample(
    cfg: ProgramCfg, config: VerifyConfig, leaves: list[TreeNode], f: E.Formula, res: SolveResult, enc: E.Encoded
) -> Optional[Counterexample]:
    inputs = _inputs(enc, res, f)
    found = _failing(leaves, f, inputs)
    if found is None:
        return None
    leaf, goal = found
    return _decode(cfg, config, leaf, goal, inputs)


# -- drivers ------------------------------------------------------------------------------


def _unknown(res: SolveResult) -> bool:
    return res.status is Status.UNKNOWN


def verify_lazy(cfg: ProgramCfg, config: VerifyConfig, stats: Stats) -> Report:
    drv = _Driver(config, stats)
    ctx = _context(cfg, config)
    leaves: list[TreeNode] = []
    cex: Optional[Counterexample] = None
    resource_out = False
    try:
        for leaf in explore(ctx, config.max_interleavings):
            leaves.append(leaf)
            stats.interleavings += 1
            f = E.real_goals(E.encode_lazy(leaf))
            res, enc = drv.solve(f)
            if _unknown(res):
                resource_out = True
                continue
            if res.sat:
                stats.failed_interleavings += 1
                if cex is None:
                    cex = _counterexample(cfg, config, [leaf], f, res, enc)
                if not config.exhaustive:
                    break
    except ExplorationLimit as err:
        return Report(Verdict.RESOURCE_OUT, "lazy", stats, message=str(err))
    if cex is not None:
        return Report(Verdict.VIOLATED, "lazy", stats, cex)
    if resource_out:
        return Report(Verdict.RESOURCE_OUT, "lazy", stats, message="solver conflict limit reached")
    for leaf in leaves:
        f = E.unwinding_goals(E.encode_lazy(leaf))
        if not f.goals:
            continue
        res, enc = drv.solve(f)
        if res.sat:
            cex = _counterexample(cfg, config, [leaf], f, res, enc)
            return Report(Verdict.BOUND_INSUFFICIENT, "lazy", stats, cex)
        if _unknown(res):
            return Report(Verdict.RESOURCE_OUT, "lazy", stats, message="solver conflict limit reached")
    return Report(Verdict.SAFE, "lazy", stats)


def _unwinding_check(
    drv: _Driver, cfg: ProgramCfg, config: VerifyConfig, ex, full: E.Formula, strategy: str
) -> Report:
    f = E.unwinding_goals(full)
    if f.goals:
        res, enc = drv.solve(f)
        if res.sat:
            cex = _counterexample(cfg, config, ex.leaves, f, res, enc)
            return Report(Verdict.BOUND_INSUFFICIENT, strategy, drv.stats, cex)
        if _unknown(res):
            return Report(Verdict.RESOURCE_OUT, strategy, drv.stats, message="solver conflict limit reached")
    return Report(Verdict.SAFE, strategy, drv.stats)


def verify_schedule(cfg: ProgramCfg, config: VerifyConfig, stats: Stats, extra=()) -> Report:
    drv = _Driver(config, stats)
    ctx = _context(cfg, config)
    try:
        ex = explore_all(ctx, config.max_interleavings)
    except ExplorationLimit as err:
        return Report(Verdict.RESOURCE_OUT, "schedule", stats, message=str(err))
    stats.interleavings = len(ex.leaves)
    full = E.encode_schedule(ex.root, ex.leaves, extra)
    f = E.real_goals(full)
    res, enc = drv.solve(f)
    if _unknown(res):
        return Report(Verdict.RESOURCE_OUT, "schedule", stats, message="solver conflict limit reached")
    if res.sat:
        stats.failed_interleavings = 1
        cex = _counterexample(cfg, config, ex.leaves, f, res, enc)
        return Report(Verdict.VIOLATED, "schedule", stats, cex)
    return _unwinding_check(drv, cfg, config, ex, full, "schedule")


def verify_uw(cfg: ProgramCfg, config: VerifyConfig, stats: Stats) -> Report:
    drv = _Driver(config, stats)
    ctx = _context(cfg, config)
    try:
        ex = explore_all(ctx, config.max_interleavings)
    except ExplorationLimit as err:
        return Report(Verdict.RESOURCE_OUT, "uw", stats, message=str(err))
    stats.interleavings = len(ex.leaves)
    blocks = E.assign_blocks(ex.root)
    full = E.encode_schedule(ex.root, ex.leaves, blocks=blocks)
    lits = E.control_literals(ex.root, blocks)
    f = E.encode_uw(E.real_goals(full), lits)
    while True:
        stats.iterations += 1
        res, enc = drv.solve(f, lits.active)
        if _unknown(res):
            return Report(Verdict.RESOURCE_OUT, "uw", stats, message="solver conflict limit reached")
        if res.sat:
            stats.failed_interleavings = 1
            cex = _counterexample(cfg, config, ex.leaves, f, res, enc)
            return Report(Verdict.VIOLATED, "uw", stats, cex)
        core = set(enc.names_of(res.core or []))
        relax = core & set(lits.active)
        if not relax:
            break
        if len(core) > config.max_core:
            stats.core_fallbacks += 1
            relax = set(lits.active)
        lits.relax(relax)
    return _unwinding_check(drv, cfg, config, ex, full, "uw")


def verify(program: TypedProgram, config: VerifyConfig) -> Report:
    """Run the configured strategy on a typed program."""
    start = time.perf_counter()
    stats = Stats()
    cfg = prepare(program, config.unwind, config.unwinding_assertions)
    driver = {"lazy": verify_lazy, "schedule": verify_schedule, "uw": verify_uw}[config.strategy]
    report = driver(cfg, config, stats)
    report.warnings = list(cfg.warnings)
    stats.wall_time = time.perf_counter() - start
    return report


def seed_from_env(default: int = 0) -> int:
    raw = os.environ.get("MTBMC_SEED")
    return int(raw) if raw not in (None, "") else default


def schedule_formula(program: TypedProgram, config: VerifyConfig, unwinding: bool = False) -> E.Formula:
    """The single-formula encoding of every explored interleaving.

    Real property goals by default; ``unwinding`` selects the bound checks.
    """
    cfg = prepare(program, config.unwind, config.unwinding_assertions)
    ex = explore_all(_context(cfg, config), config.max_interleavings)
    full = E.encode_schedule(ex.root, ex.leaves)
    return E.unwinding_goals(full) if unwinding else E.real_goals(full)
