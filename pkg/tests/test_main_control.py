"""Tests for the subkit command line (run() with captured output)."""
import json

import pytest

from subkit.main_control import run
from subkit.order_core import chain
from subkit.utilities import config

DIAMOND = config.data_path("models", "diamond.json")
PRIORITY = config.data_path("models", "priority.json")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in (config.ENV_MAX_ELEMS, config.ENV_DEPTH_LIMIT, config.ENV_SEED):
        monkeypatch.delenv(name, raising=False)


def test_parse_prints_canonical_form(capsys):
    assert run(["parse", "--term", "a -> b -> c"]) == 0
    assert capsys.readouterr().out == "a -> (b -> c)\n"


def test_parse_condition_json(capsys):
    assert run(["parse", "--cond", "a prec b ==> a <= b", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == {"kind": "condition", "text": "forall a. forall b. a prec b ==> a <= b"}


def test_parse_error_exit_code(capsys):
    assert run(["parse", "--ineq", "a <="]) == 2
    assert capsys.readouterr().err.startswith("Error: ")


def test_classify(capsys):
    assert run(["classify", "--ineq", "a -> (b >- c) <= d"]) == 0
    out = capsys.readouterr().out
    assert "NOT analytic" in out.splitlines()[0]
    assert "[BAD]" in out


def test_correspond_rejects_non_analytic(capsys):
    assert run(["correspond", "--ineq", "a -> (b >- c) <= d"]) == 2
    assert "Error: " in capsys.readouterr().err


def test_correspond_json(capsys):
    assert run(["correspond", "--ineq", "neg top <= bot", "--json", "--trace"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["condition"] == "forall d. d prec bot ==> d <= bot"
    assert doc["trace"][0]["rule"] == "preprocess"


def test_correspond_trace_text(capsys):
    assert run(["correspond", "--ineq", "top -> (top -> c) <= top -> c", "--trace"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert all(line.startswith("RULE ") for line in lines[:-1])
    assert lines[-1].startswith("forall ")


def test_inverse(capsys):
    assert run(["inverse", "--cond", "a prec b & b prec c ==> a prec c"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].endswith(": Kracht")
    assert lines[-1] == "top -> (top -> c) <= top -> c"


def test_inverse_not_kracht(capsys):
    code = run(["inverse", "--cond", "x /\\ y prec z ==> x prec z", "--roles", "x:a,y:a"])
    captured = capsys.readouterr()
    assert code == 2
    assert "NOT Kracht" in captured.out
    assert "clause 8" in captured.out


def test_verify_on_quick_corpus(capsys):
    code = run(["verify", "--ineq", "neg top <= bot", "--cond", "a prec bot ==> a <= bot",
                "--corpus", "quick"])
    assert code == 0
    assert "Equivalent" in capsys.readouterr().out


def test_verify_single_model_counterexample(capsys):
    code = run(["verify", "--ineq", "neg top <= bot", "--cond", "a prec b ==> b prec a",
                "--model", DIAMOND, "--json"])
    assert code == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdict"] == "Counterexample"
    assert doc["counterexample"]["cond_holds"] is False


def test_eval_with_atoms(capsys):
    assert run(["eval", "--model", DIAMOND, "--ineq", "neg p <= q"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "neg p <= q : holds  [p={p}, q={q}]"


def test_eval_counterexample(capsys):
    assert run(["eval", "--model", DIAMOND, "--ineq", "a <= b"]) == 1
    assert "counterexample: " in capsys.readouterr().out


def test_eval_priority_model(capsys):
    assert run(["eval", "--model", PRIORITY, "--cond", "doctor prec save"]) == 0
    assert run(["eval", "--model", PRIORITY, "--cond", "save prec doctor"]) == 1
    out = capsys.readouterr().out.splitlines()
    assert out[0].endswith("holds  [doctor={doctor}, save={save}]")
    assert "fails" in out[1]


def test_closure(capsys):
    assert run(["closure", "--model", DIAMOND]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "8 pairs"
    assert run(["closure", "--model", DIAMOND, "--pairs", '[["p", "q"]]', "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["subordination"]) == 8


@pytest.mark.parametrize("pairs", ["not json", '[["p"]]', '[["p", "zz"]]'])
def test_closure_bad_pairs(pairs, capsys):
    assert run(["closure", "--model", DIAMOND, "--pairs", pairs]) == 2
    assert capsys.readouterr().err.startswith("Error: ")


def test_enumerate_poset(tmp_path, capsys):
    path = tmp_path / "two.json"
    path.write_text(json.dumps(chain(1).to_json()))
    assert run(["enumerate", "--poset", str(path)]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "2 subordination relations (exhaustive) on 2 elements"
    assert run(["enumerate", "--poset", str(path), "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["count"] == 2


def test_regress_empty_suite(tmp_path, capsys):
    path = tmp_path / "suite.json"
    path.write_text("[]")
    assert run(["regress", "--suite", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "0 checked, 0 failed (0 models)"


def test_regress_bad_suite(tmp_path, capsys):
    path = tmp_path / "suite.json"
    path.write_text('{"name": "T"}')
    assert run(["regress", "--suite", str(path)]) == 2


@pytest.mark.parametrize("argv", [[], ["bogus"], ["parse"], ["correspond"],
                                  ["verify", "--ineq", "a <= a", "--corpus", "huge"]])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2
    assert "usage:" in capsys.readouterr().err


def test_limit_exceeded_exit_code(capsys):
    assert run(["eval", "--model", DIAMOND, "--ineq", "a <= a", "--max-elems", "1"]) == 3
    assert capsys.readouterr().err.startswith("Error: ")


def test_environment_cap(monkeypatch, capsys):
    monkeypatch.setenv(config.ENV_MAX_ELEMS, "1")
    assert run(["closure", "--model", DIAMOND]) == 3


@pytest.mark.parametrize("argv", [
    ["correspond", "--ineq", "top <= (a -> b) \\/ (b -> a)", "--trace"],
    ["enumerate", "--model", DIAMOND, "--mode", "sampled", "--count", "4", "--seed", "11", "--json"],
    ["regress", "--corpus", "quick", "--seed", "5"],
])
def test_repeated_runs_print_identical_output(argv, capsys):
    first = run(argv)
    out = capsys.readouterr().out
    assert run(argv) == first
    assert capsys.readouterr().out == out
    assert out


def test_regress_limit_exit_code(tmp_path, capsys):
    path = tmp_path / "suite.json"
    path.write_text(json.dumps([{
        "name": "Goedel-Dummett", "ineq": "top <= (a -> b) \\/ (b -> a)",
        "cond": "exists e. exists f. top <= e \\/ f & a /\\ e prec b & b /\\ f prec a"}]))
    assert run(["regress", "--suite", str(path), "--corpus", "quick", "--depth-limit", "1"]) == 3
    assert capsys.readouterr().err.startswith("Error: ")
