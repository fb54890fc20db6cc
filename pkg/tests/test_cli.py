import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from betamachine.cli import main

SCHEMAS = {name: json.loads(resources.files("betamachine.schemas").joinpath(f"{name}.schema.json").read_text())
           for name in ("run", "omega", "lattice", "hypothesis")}


def run_cli(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:  # argparse usage errors
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def validate(kind, text):
    doc = json.loads(text)
    jsonschema.validate(doc, SCHEMAS[kind])
    return doc


@pytest.fixture
def fib_traj(tmp_path):
    p = tmp_path / "fib.json"
    p.write_text(json.dumps([[1, 0], [1, 1], [2, 1], [3, 2]]))
    return p


def test_run_putnam_json(capsys, putnam_path):
    code, out, _ = run_cli(capsys, "run", str(putnam_path), "--json")
    assert code == 0
    doc = validate("run", out)
    assert "branches_fired" in doc and doc["branches_fired"][0]["branch"] == 2


def test_run_text_output(capsys, putnam_path):
    code, out, _ = run_cli(capsys, "run", str(putnam_path))
    assert code == 0 and "conjunction true" in out and "converged at T=1" in out


def test_run_missing_file(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", str(tmp_path / "missing.beta"))
    assert code == 2 and "cannot read" in err


def test_run_syntax_error_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.beta"
    bad.write_text("system { subsystem a { states: x, y } }\nrule r { if any( -> print(\"x\") }\n")
    code, _, err = run_cli(capsys, "run", str(bad))
    assert code == 1
    assert f"{bad}:2:" in err


def test_run_resolution_error(capsys, tmp_path):
    bad = tmp_path / "bad.beta"
    bad.write_text("system { subsystem a { states: x, y, z } }\n")
    code, _, err = run_cli(capsys, "run", str(bad))
    assert code == 1 and "even" in err


def test_run_out_file(capsys, putnam_path, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "run", str(putnam_path), "--out", str(target), "--seed", "5")
    assert code == 0
    doc = validate("run", target.read_text())
    assert doc["seed"] == 5


@pytest.mark.parametrize("flag, value", [("--shots", "0"), ("--epsilon", "0"), ("--epsilon", "-1"),
                                         ("--seed", "-3"), ("--max-steps", "0")])
def test_run_bad_flags_are_usage_errors(capsys, putnam_path, flag, value):
    code, _, _ = run_cli(capsys, "run", str(putnam_path), flag, value)
    assert code == 2


def test_omega_classify(capsys):
    code, out, _ = run_cli(capsys, "omega", "classify", "--json")
    doc = validate("omega", out)
    assert code == 0 and doc["count"] == 16 and len(doc["in_omega"]) == 2 and doc["notes"]


def test_omega_euclid(capsys):
    code, out, _ = run_cli(capsys, "omega", "euclid", "34", "55", "--json")
    assert code == 0 and validate("omega", out)["quotients"] == [1, 1, 1, 1, 1, 1, 1, 2]


def test_omega_word(capsys):
    code, out, _ = run_cli(capsys, "omega", "word", "5", "--json")
    doc = validate("omega", out)
    # the rewriting rule gives ...001 here; see the word report notes
    assert code == 0 and doc["word"] == "0100101001001"


@pytest.mark.parametrize("argv", [
    ["omega", "fib", "9"], ["omega", "gap", "20"], ["omega", "ca"], ["omega", "ca", "--arith", "mod2"],
    ["omega", "almost-period", "--freq", "1", "1", "--epsilon", "1e-6", "--stop", "10"],
])
def test_omega_subtasks_validate(capsys, argv):
    code, out, _ = run_cli(capsys, *argv, "--json")
    assert code == 0
    validate("omega", out)


@pytest.mark.parametrize("argv", [
    ["omega", "fib", "91"], ["omega", "fib", "-1"], ["omega", "euclid", "5", "3"], ["omega", "word", "-2"],
    ["omega", "nope"], ["omega", "fib", "x"], ["omega", "gap", "0"],
])
def test_omega_bad_args(capsys, argv):
    code, _, _ = run_cli(capsys, *argv)
    assert code == 2


def test_lattice_dim2(capsys):
    code, out, _ = run_cli(capsys, "lattice", "--dim", "2", "--trials", "50", "--json")
    doc = validate("lattice", out)
    assert code == 0 and (doc["witness"]["lhs_rank"], doc["witness"]["rhs_rank"]) == (1, 0)


def test_lattice_dim8_seeded(capsys):
    code, out, _ = run_cli(capsys, "lattice", "--dim", "8", "--trials", "1000", "--seed", "7", "--json")
    doc = validate("lattice", out)
    assert code == 0 and doc["orthomodular"]["passed"]


def test_lattice_dim1(capsys):
    assert run_cli(capsys, "lattice", "--dim", "1")[0] == 2


def test_hypothesize_fibonacci(capsys, fib_traj):
    code, out, _ = run_cli(capsys, "hypothesize", str(fib_traj), "--json")
    doc = validate("hypothesis", out)
    assert code == 0 and doc["matches"] == [{"operator": [[1, 1], [1, 0]], "exact": True}]


def test_hypothesize_identity(capsys, tmp_path):
    p = tmp_path / "id.json"
    p.write_text("[[1, 0], [1, 0], [1, 0]]")
    code, out, _ = run_cli(capsys, "hypothesize", str(p), "--json")
    assert code == 0 and [[1, 0], [0, 1]] in [m["operator"] for m in json.loads(out)["matches"]]


def test_hypothesize_family_file(capsys, fib_traj, tmp_path):
    fam = tmp_path / "fam.json"
    fam.write_text("[[[1, 0], [0, 1]], [[1, 1], [1, 0]]]")
    code, out, _ = run_cli(capsys, "hypothesize", str(fib_traj), "--family", str(fam), "--json")
    assert code == 0 and len(json.loads(out)["matches"]) == 1


@pytest.mark.parametrize("content, code", [
    ("[]", 2), ("[[1, 0]]", 2), ("{not json", 1), ('{"a": 1}', 1), ('[[1, "x"], [1, 2]]', 1),
    ("[[1, 0], [1, 0, 0]]", 2),
])
def test_hypothesize_bad_trajectories(capsys, tmp_path, content, code):
    p = tmp_path / "t.json"
    p.write_text(content)
    assert run_cli(capsys, "hypothesize", str(p))[0] == code


def test_hypothesize_missing_file(capsys, tmp_path):
    assert run_cli(capsys, "hypothesize", str(tmp_path / "none.json"))[0] == 2


def test_fmt(capsys, tmp_path):
    f = tmp_path / "a.beta"
    f.write_text("system{subsystem a{states:x,y}}")
    code, out, _ = run_cli(capsys, "fmt", str(f))
    assert code == 0 and out == "system {\n  subsystem a {\n    states: x, y\n  }\n}\n"
    assert run_cli(capsys, "fmt", str(f), "--check")[0] == 1
    f.write_text(out)
    assert run_cli(capsys, "fmt", str(f), "--check")[0] == 0


def test_no_command_is_usage_error(capsys):
    assert run_cli(capsys)[0] == 2


def test_capacity_env_override(capsys, tmp_path, monkeypatch):
    f = tmp_path / "big.beta"
    f.write_text("system { subsystem a { states: a1, a2, a3, a4 } subsystem b { states: b1, b2, b3, b4 } }")
    monkeypatch.setenv("BETA_DIM_CAP", "8")
    code, _, err = run_cli(capsys, "run", str(f))
    assert code == 1 and "cap" in err


def _subprocess(*argv):
    return subprocess.run([sys.executable, "-m", "betamachine", *argv], capture_output=True, check=False)


def test_json_output_byte_identical_across_processes(putnam_path, tmp_path):
    prog = tmp_path / "p.beta"
    prog.write_text(putnam_path.read_text().replace("max 10 shots 1024 seed 0", "max 5 shots 300 seed 77 mode sampled"))
    a = _subprocess("run", str(prog), "--json")
    b = _subprocess("run", str(prog), "--json")
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_entry_point_module_exit_codes():
    assert _subprocess("lattice", "--dim", "1").returncode == 2
    assert _subprocess("omega", "euclid", "34", "55").returncode == 0
