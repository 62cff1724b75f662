from __future__ import annotations

import io
import re
import subprocess
import sys

import pytest

from mtbmc import corpus
from mtbmc.cli import main


def call(*argv: str) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, src in {
        "running": corpus.RUNNING_EXAMPLE,
        "safe": corpus.LOCK_SAFE,
        "loop": corpus.COUNTER_LOOP,
        "bad": "main {\n  x = ;\n}\n",
    }.items():
        p = tmp_path / f"{name}.mtc"
        p.write_text(src)
        paths[name] = str(p)
    return paths


def fields(text: str) -> dict[str, str]:
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line and not line.startswith("step="))


def test_exit_codes(files):
    assert call("verify", files["safe"], "--bitwidth", "8")[0] == 0
    assert call("verify", files["running"], "--bitwidth", "8")[0] == 10
    assert call("verify", files["loop"], "--unwind", "1", "--bitwidth", "8")[0] == 20
    assert call("verify", files["running"], "--bitwidth", "32", "--conflict-limit", "1")[0] in (10, 30)


def test_usage_and_input_errors(files, tmp_path):
    assert call("verify")[0] == 2
    assert call("verify", files["safe"], "--strategy", "eager")[0] == 2
    assert call("verify", files["safe"], "--unwind", "0")[0] == 2
    code, _, err = call("verify", str(tmp_path / "missing.mtc"))
    assert code == 2 and "error" in err
    code, _, err = call("verify", files["bad"])
    assert code == 2 and ":2:" in err


def test_several_files_take_the_worst_code(files):
    code, out, _ = call("verify", files["safe"], files["running"], "--bitwidth", "8", "--format", "machine")
    assert code == 10
    assert out.count("verdict=") == 2
    assert out.index(files["safe"]) < out.index(files["running"])


def test_machine_format(files):
    code, out, _ = call("verify", files["running"], "--strategy", "schedule", "--bitwidth", "8", "--format", "machine", "--trace")
    keys = [line.split("=", 1)[0] for line in out.splitlines()]
    head = ["file", "verdict", "strategy", "interleavings", "failed_interleavings", "iterations",
            "solver_calls", "core_fallbacks", "tag", "replay", "schedule"]
    assert keys[: len(head)] == head
    assert keys[-1] == "wall_time" and "step" in keys
    f = fields(out)
    assert (f["verdict"], f["tag"], f["replay"], f["schedule"]) == ("VIOLATED", "assertion", "ok", "ts1=2,ts2=1")
    steps = [line for line in out.splitlines() if line.startswith("step=")]
    assert all(re.match(r"step=#\d+ T\d+ \S+:\d+ ", s) for s in steps)


def test_human_format(files):
    code, out, _ = call("verify", files["running"], "--strategy", "uw", "--bitwidth", "8", "--trace")
    assert out.splitlines()[0].endswith("VIOLATED (assertion)")
    assert "iterations=3" in out and "trace:" in out


def test_gen_output_parses_and_verifies(tmp_path):
    code, out, _ = call("gen", "philosophers", "3", "--variant", "sat")
    assert code == 0
    p = tmp_path / "p3.mtc"
    p.write_text(out)
    code, out, _ = call("verify", str(p), "--exhaustive", "--bitwidth", "8", "--format", "machine")
    f = fields(out)
    assert code == 10 and f["interleavings"] == f["failed_interleavings"] == "6"
    assert call("gen", "lock-order", "1", "--variant", "buggy")[0] == 2
    assert call("gen", "nope", "3")[0] == 2


def test_dump_formats(files):
    code, out, _ = call("dump", files["running"], "--bitwidth", "8")
    assert code == 0 and out.startswith("(set-logic QF_BV)") and "ts1" in out
    code, out, _ = call("dump", files["running"], "--bitwidth", "8", "--as", "cnf")
    assert code == 0 and out.startswith("p cnf")
    code, out, _ = call("dump", files["loop"], "--unwind", "1", "--bitwidth", "8", "--unwinding")
    assert code == 0 and "check-sat" in out


def test_dump_directories(files, tmp_path):
    call("verify", files["running"], "--bitwidth", "8", "--dump-smtlib", str(tmp_path / "s"), "--dump-cnf", str(tmp_path / "c"))
    assert sorted(p.name for p in (tmp_path / "s").iterdir())[0] == "running-001.smt2"
    assert sorted(p.name for p in (tmp_path / "c").iterdir())[0] == "running-001.cnf"


def machine_run(path: str, *extra: str) -> str:
    code, out, _ = call("verify", path, "--format", "machine", "--trace", "--bitwidth", "8", *extra)
    return re.sub(r"wall_time=\S+", "wall_time=*", out)


@pytest.mark.parametrize("strategy", ["lazy", "schedule", "uw"])
def test_identical_runs_are_byte_identical(files, strategy):
    a = machine_run(files["running"], "--strategy", strategy, "--seed", "7")
    b = machine_run(files["running"], "--strategy", strategy, "--seed", "7")
    assert a == b


def test_seed_from_environment(files, monkeypatch):
    monkeypatch.setenv("MTBMC_SEED", "5")
    a = machine_run(files["running"])
    monkeypatch.delenv("MTBMC_SEED")
    b = machine_run(files["running"], "--seed", "5")
    assert a == b
    monkeypatch.setenv("MTBMC_SEED", "junk")
    assert call("verify", files["running"])[0] == 2


def test_console_script(files):
    proc = subprocess.run(
        [sys.executable, "-m", "mtbmc.cli", "verify", files["running"], "--bitwidth", "8", "--format", "machine"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 10 and "verdict=VIOLATED" in proc.stdout
