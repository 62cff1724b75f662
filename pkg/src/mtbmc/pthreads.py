"""Operational models of mutexes, condition variables and thread lifetime.

The models are expanded into guarded SSA updates while a thread executes, in
the style of the two-part lock and wait procedures: the first part runs
atomically and may leave the thread blocked; the second part runs in a later
step, emits the global-deadlock obligation for paths that are still blocked
and then prunes them with an assumption (only wait-free paths continue).

State kept per synchronization object, all of it symbolic:

* mutex ``m``: ``m.lock`` (0/1), ``m.count`` (blocked lockers), ``m.gen``
  (bumped by every unlock, so a blocked locker can tell it was released)
* cond ``c``: ``c.lock``, ``c.nwaiters``, ``c.gen`` (bumped by signal and
  broadcast when someone waits)
* registry: ``__trds_in_run``, ``__blocked`` and ``__broadcast_id``

A global deadlock is reported when the number of blocked threads reaches the
number of running threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from . import terms as T

if TYPE_CHECKING:  # pragma: no cover
    from .symex import StepExecutor


TRDS = "__trds_in_run"
BLOCKED = "__blocked"
BROADCAST_ID = "__broadcast_id"

LOCK_BLOCKED = "__lockblk"  # per-thread: last lock attempt is still pending
LOCK_RECORD = "__lockrec"  # per-thread: mutex generation seen when blocking
WAIT_RECORD = "__waitrec"  # per-thread: cond generation seen when waiting


class VerificationError(Exception):
    """The program uses threads in a way the models cannot represent."""


class ThreadStatus(Enum):
    FREE = "free"
    JOIN_WAIT = "join-wait"
    LOCK_WAIT = "lock-wait"
    COND_WAIT = "cond-wait"
    EXITED = "exited"


@dataclass(frozen=True)
class MutexModel:
    name: str

    @property
    def lock_field(self) -> str:
        return f"{self.name}.lock"

    @property
    def count_field(self) -> str:
        return f"{self.name}.count"

    @property
    def gen_field(self) -> str:
        return f"{self.name}.gen"


@dataclass(frozen=True)
class CondModel:
    name: str

    @property
    def lock_field(self) -> str:
        return f"{self.name}.lock"

    @property
    def nwaiters_field(self) -> str:
        return f"{self.name}.nwaiters"

    @property
    def gen_field(self) -> str:
        return f"{self.name}.gen"


def initial_fields(mutexes: list[str], conds: list[str]) -> dict[str, int]:
    out = {TRDS: 1, BLOCKED: 0, BROADCAST_ID: 0}
    for m in mutexes:
        mm = MutexModel(m)
        out.update({mm.lock_field: 0, mm.count_field: 0, mm.gen_field: 0})
    for c in conds:
        cm = CondModel(c)
        out.update({cm.lock_field: 0, cm.nwaiters_field: 0, cm.gen_field: 0})
    return out


# -- mutex ------------------------------------------------------------------


def model_lock(ex: "StepExecutor", g: T.Term, m: MutexModel) -> T.Term:
    """First atomic part of lock; returns the condition under which it blocked."""
    one = ex.const(1)
    unlocked = T.Eq(ex.read(m.lock_field), ex.const(0))
    blk = T.And(g, T.Not(unlocked))
    # either the lock was free and is now taken, or it was already held
    ex.write(m.lock_field, one, g)
    ex.write(m.count_field, T.Add(ex.read(m.count_field), one), blk)
    ex.write(BLOCKED, T.Add(ex.read(BLOCKED), one), blk)
    ex.write(ex.local(LOCK_RECORD), ex.read(m.gen_field), g)
    ex.write(ex.local(LOCK_BLOCKED), T.Not(unlocked), g, sort=T.BOOL)
    return blk


def lock_retry_state(ex: "StepExecutor", g: T.Term, m: MutexModel) -> tuple[T.Term, T.Term, T.Term]:
    """(guard, still-blocked, deadlocked) for the second part of lock."""
    gr = T.And(g, ex.read(ex.local(LOCK_BLOCKED), sort=T.BOOL))
    woken = T.Ne(ex.read(m.gen_field), ex.read(ex.local(LOCK_RECORD)))
    free = T.Eq(ex.read(m.lock_field), ex.const(0))
    still = T.And(gr, T.Not(T.And(woken, free)))
    retaken = T.And(woken, T.Not(free))
    count = T.Add(ex.read(BLOCKED), T.Ite(retaken, ex.const(1), ex.const(0)))
    deadlocked = T.Not(T.Slt(count, ex.read(TRDS)))
    return gr, still, deadlocked


def model_lock_retry(ex: "StepExecutor", g: T.Term, m: MutexModel) -> None:
    gr, still, deadlocked = lock_retry_state(ex, g, m)
    acquire = T.And(gr, T.Not(still))
    ex.write(m.lock_field, ex.const(1), acquire)
    # a still-blocked path must not be a global deadlock ...
    ex.check(still, T.Not(deadlocked), "deadlock")
    # ... and is then dropped: only wait-free paths continue
    ex.assume(gr, T.Not(still))
    ex.write(ex.local(LOCK_BLOCKED), T.FALSE, gr, sort=T.BOOL)


def _release(ex: "StepExecutor", g: T.Term, m: MutexModel) -> None:
    ex.write(m.lock_field, ex.const(0), g)
    ex.write(m.gen_field, T.Add(ex.read(m.gen_field), ex.const(1)), g)
    ex.write(BLOCKED, T.Sub(ex.read(BLOCKED), ex.read(m.count_field)), g)
    ex.write(m.count_field, ex.const(0), g)


def model_unlock(ex: "StepExecutor", g: T.Term, m: MutexModel) -> None:
    ex.check(g, T.Ne(ex.read(m.lock_field), ex.const(0)), "bad-unlock")
    _release(ex, g, m)


# -- condition variables ----------------------------------------------------


def model_wait_release(ex: "StepExecutor", g: T.Term, c: CondModel, m: MutexModel) -> None:
    one = ex.const(1)
    ex.write(c.lock_field, one, g)
    ex.check(g, T.Ne(ex.read(m.lock_field), ex.const(0)), "bad-wait")
    _release(ex, g, m)
    ex.write(c.nwaiters_field, T.Add(ex.read(c.nwaiters_field), one), g)
    ex.write(BLOCKED, T.Add(ex.read(BLOCKED), one), g)
    ex.write(ex.local(WAIT_RECORD), ex.read(c.gen_field), g)


def wait_check_state(ex: "StepExecutor", g: T.Term, c: CondModel) -> tuple[T.Term, T.Term]:
    """(still-waiting, deadlocked) for the wake-up check of wait."""
    woken = T.Ne(ex.read(c.gen_field), ex.read(ex.local(WAIT_RECORD)))
    still = T.And(g, T.Not(woken))
    deadlocked = T.Not(T.Slt(ex.read(BLOCKED), ex.read(TRDS)))
    return still, deadlocked


def model_wait_check(ex: "StepExecutor", g: T.Term, c: CondModel) -> None:
    still, deadlocked = wait_check_state(ex, g, c)
    ex.check(still, T.Not(deadlocked), "deadlock")
    ex.assume(g, T.Not(still))


def model_signal(ex: "StepExecutor", g: T.Term, c: CondModel, broadcast: bool = False) -> None:
    nw = ex.read(c.nwaiters_field)
    waiting = T.And(g, T.Slt(ex.const(0), nw))
    ex.write(c.lock_field, ex.const(0), g)
    # every waiter is woken; each one re-checks and re-acquires the mutex itself
    ex.write(c.gen_field, T.Add(ex.read(c.gen_field), ex.const(1)), waiting)
    ex.write(BLOCKED, T.Sub(ex.read(BLOCKED), nw), waiting)
    ex.write(c.nwaiters_field, ex.const(0), waiting)
    if broadcast:
        ex.write(BROADCAST_ID, T.Add(ex.read(BROADCAST_ID), ex.const(1)), g)


# -- thread lifetime ----------------------------------------------------------


def model_create(ex: "StepExecutor", g: T.Term, handle_key: str, func: str, args: list[T.Term]) -> int:
    if not g.is_true():
        raise VerificationError(
            f"{ex.where()}: thread creation must not depend on a symbolic condition"
        )
    tid = ex.spawn(func, args)
    ex.write(handle_key, ex.const(tid), g, show=True)
    ex.write(TRDS, T.Add(ex.read(TRDS), ex.const(1)), g)
    return tid


def model_join(ex: "StepExecutor", g: T.Term, handle: T.Term) -> bool:
    """Returns True when the caller blocks."""
    if not handle.is_const:
        raise VerificationError(f"{ex.where()}: join on a handle that is not a known thread")
    target = handle.value
    if not ex.thread_exists(target) or target == ex.tid:
        raise VerificationError(f"{ex.where()}: join on unknown thread handle {target}")
    if ex.thread_status(target) is ThreadStatus.EXITED:
        return False
    ex.write(BLOCKED, T.Add(ex.read(BLOCKED), ex.const(1)), g)
    ex.block_on_join(target, g)
    return True


def model_exit(ex: "StepExecutor", g: T.Term, final: bool) -> None:
    ex.write(TRDS, T.Sub(ex.read(TRDS), ex.const(1)), g)
    if final or g.is_true():
        for joiner, jg in ex.finish_thread():
            ex.write(BLOCKED, T.Sub(ex.read(BLOCKED), ex.const(1)), jg)
