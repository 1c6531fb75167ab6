"""Unit tests for model enumeration, equivalence checking and the regression runner."""
import collections

import numpy as np
import pytest

from subkit.order_core import FiniteDistributiveLattice, antichain, chain
from subkit.subord_algebra import SubordinationRelation
from subkit.syntax import ForAll, Implies, parse_condition, parse_inequality, print_condition
from subkit.utilities import config
from subkit.utilities.errors import InputError, LimitExceeded, SuiteError
from subkit.verifier import (
    CLOSURE_PER_LATTICE, SAMPLED_MAX_ELEMENTS, ModelCorpus, build_corpus, check_equivalence,
    enumerate_subordinations, load_suite, reverify, run_regression, strip_universals,
)

QUICK = config.load_settings(env={}, corpus="quick")
DEFAULT = config.load_settings(env={})

T_INEQ = "top -> (top -> c) <= top -> c"
T_COND = "a prec b & b prec c ==> a prec c"


@pytest.fixture(scope="module")
def quick_corpus():
    return build_corpus(QUICK)


@pytest.fixture(scope="module")
def default_corpus():
    return build_corpus(DEFAULT)


# ============================================================
# ENUMERATION
# ============================================================
def test_two_element_chain_has_two_relations():
    rels = enumerate_subordinations(FiniteDistributiveLattice(chain(1)), "exhaustive")
    assert len(rels) == 2
    assert not rels[0].holds(1, 0)
    assert rels[1].holds(1, 0)


def test_closure_mode_is_a_subset_of_exhaustive():
    diamond = FiniteDistributiveLattice(antichain(2))
    everything = {r.rel.tobytes() for r in enumerate_subordinations(diamond, "exhaustive")}
    seeded = enumerate_subordinations(diamond, "closure")
    assert seeded
    assert {r.rel.tobytes() for r in seeded} <= everything
    assert len({r.rel.tobytes() for r in seeded}) == len(seeded)


def test_sampled_mode_is_deterministic():
    l = FiniteDistributiveLattice(antichain(3))
    first = enumerate_subordinations(l, "sampled", count=5, seed=7)
    second = enumerate_subordinations(l, "sampled", count=5, seed=7)
    assert [r.rel.tobytes() for r in first] == [r.rel.tobytes() for r in second]
    assert 0 < len(first) <= 5


def test_exhaustive_needs_a_small_lattice():
    with pytest.raises(LimitExceeded):
        enumerate_subordinations(FiniteDistributiveLattice(antichain(3)), "exhaustive")


def test_unknown_mode():
    with pytest.raises(InputError):
        enumerate_subordinations(FiniteDistributiveLattice(chain(1)), "everything")


def test_quick_corpus_contents(quick_corpus):
    assert quick_corpus.metadata["profile"] == "quick"
    assert quick_corpus.models[0].id == "P1.0#0"
    assert all(m.lattice.size <= 4 for m in quick_corpus)
    ids = [m.id for m in quick_corpus]
    assert len(ids) == len(set(ids))


def test_corpus_respects_the_irreducible_cap():
    corpus = build_corpus(config.load_settings(env={}, corpus="quick", max_irreducibles=1))
    assert {m.lattice.size for m in corpus} == {2}


def test_default_corpus_contents(default_corpus):
    sampled = [m for m in default_corpus if m.mode == "sampled"]
    assert len(sampled) == DEFAULT.sample_count
    assert all(len(m.lattice.base.elements) in (5, 6) for m in sampled)
    assert all(m.lattice.size <= SAMPLED_MAX_ELEMENTS for m in sampled)
    per_lattice = collections.Counter(m.id.split("#")[0] for m in default_corpus if m.mode == "closure")
    assert len(per_lattice) == 5 + 16
    assert max(per_lattice.values()) <= CLOSURE_PER_LATTICE
    ids = [m.id for m in default_corpus]
    assert len(ids) == len(set(ids))


def test_default_corpus_is_reproducible():
    small = config.load_settings(env={}, sample_count=8)
    first, second = build_corpus(small), build_corpus(small)
    assert [m.id for m in first] == [m.id for m in second]
    assert [m.relation for m in first] == [m.relation for m in second]


def test_closure_mode_limit():
    l = FiniteDistributiveLattice(antichain(3))
    capped = enumerate_subordinations(l, "closure", limit=5)
    assert len(capped) == 5
    assert capped == enumerate_subordinations(l, "closure")[:5]


# ============================================================
# EQUIVALENCE
# ============================================================
def test_transitivity_pair_is_equivalent(quick_corpus):
    report = check_equivalence(parse_inequality(T_INEQ), parse_condition(T_COND), quick_corpus, QUICK)
    assert report.equivalent
    assert report.verdict == "Equivalent"
    assert report.checked == len(quick_corpus)
    assert report.to_json()["counterexample"] is None


def test_mutated_condition_gets_a_counterexample(quick_corpus):
    ineq, cond = parse_inequality(T_INEQ), parse_condition("a prec b ==> b prec a")
    report = check_equivalence(ineq, cond, quick_corpus, QUICK)
    assert not report.equivalent
    cex = report.counterexample
    assert cex.ineq_holds and not cex.cond_holds
    assert set(cex.assignment) == {"a", "b"}
    assert reverify(cex, ineq, cond, QUICK)
    assert "condition fails" in report.lines()[-1]


def test_failing_inequality_reports_side_values(quick_corpus):
    ineq, cond = parse_inequality("neg top <= bot"), parse_condition("a <= a")
    report = check_equivalence(ineq, cond, quick_corpus, QUICK)
    cex = report.counterexample
    assert cex.model_id == "P1.0#1"
    assert not cex.ineq_holds and cex.cond_holds
    assert cex.side_values == {"lhs": 1, "rhs": 0}
    assert reverify(cex, ineq, cond, QUICK)
    doc = cex.to_json()
    assert doc["side_values"] == {"lhs": ["p"], "rhs": []}


def test_corpus_from_relations():
    diamond = FiniteDistributiveLattice(antichain(2))
    full = SubordinationRelation(diamond, np.ones((4, 4), dtype=bool))
    corpus = ModelCorpus.from_relations([full], label="full")
    assert len(corpus) == 1 and corpus.models[0].id == "full#0"
    report = check_equivalence(parse_inequality("neg top <= bot"),
                               parse_condition("a prec bot ==> a <= bot"), corpus, QUICK)
    assert report.equivalent


def test_strip_universals():
    cond = parse_condition("a prec b ==> exists e. a <= e")
    stripped = strip_universals(cond, ["a"])
    assert isinstance(stripped, ForAll) and stripped.var == "b"
    assert isinstance(strip_universals(cond, ["a", "b"]), Implies)


def test_strip_universals_keeps_restrictor_as_guard():
    cond = parse_condition("forall (x, y) <=or top. x prec y", close=False)
    stripped = strip_universals(cond, ["x", "y"])
    assert print_condition(stripped) == "top <= x \\/ y ==> x prec y"


# ============================================================
# REGRESSION SUITE
# ============================================================
def test_suite_errors():
    with pytest.raises(SuiteError):
        load_suite({"name": "T"})
    with pytest.raises(SuiteError):
        load_suite([{"name": "T", "ineq": T_INEQ}])
    with pytest.raises(SuiteError) as e:
        load_suite([{"name": "broken", "ineq": "a <=", "cond": T_COND}])
    assert "broken" in str(e.value)


def test_missing_suite_file(tmp_path):
    with pytest.raises(InputError):
        load_suite(str(tmp_path / "absent.json"))


def test_empty_suite():
    summary = run_regression([], settings=QUICK)
    assert summary.ok
    assert summary.lines() == ["0 checked, 0 failed (0 models)"]


def test_shipped_suite_passes(quick_corpus):
    summary = run_regression(corpus=quick_corpus, settings=QUICK)
    assert summary.ok, summary.lines()
    assert len(summary.results) == len(load_suite(config.data_path("regression_suite.json")))
    assert summary.models == len(quick_corpus)


def test_suite_with_derived_conditions(quick_corpus):
    suite = [{"name": "T", "ineq": T_INEQ, "cond": T_COND},
             {"name": "negtop", "ineq": "neg top <= bot", "cond": "a prec bot ==> a <= bot"}]
    summary = run_regression(suite, corpus=quick_corpus, settings=QUICK, with_correspond=True)
    assert summary.ok
    assert all(r.derived is not None and r.derived.equivalent for r in summary.results)


def test_mutated_suite_is_flagged(quick_corpus):
    suite = [{"name": "T", "ineq": T_INEQ, "cond": T_COND},
             {"name": "T-mutated", "ineq": T_INEQ, "cond": "a prec b ==> b prec a"}]
    summary = run_regression(suite, corpus=quick_corpus, settings=QUICK)
    assert [r.name for r in summary.failed] == ["T-mutated"]
    assert summary.lines()[1].startswith("FAIL T-mutated: ")
    assert summary.to_json()["failed"] == ["T-mutated"]


def test_non_analytic_pair_is_reported_not_raised(quick_corpus):
    suite = [{"name": "bad", "ineq": "a -> (b >- c) <= d", "cond": "a <= a"}]
    summary = run_regression(suite, corpus=quick_corpus, settings=QUICK, with_correspond=True)
    assert summary.results[0].error
    assert summary.lines()[0].startswith("FAIL bad: ")


def test_limit_breach_is_raised_not_reported(quick_corpus):
    suite = [{"name": "Goedel-Dummett", "ineq": "top <= (a -> b) \\/ (b -> a)",
              "cond": "exists e. exists f. top <= e \\/ f & a /\\ e prec b & b /\\ f prec a"}]
    tight = config.load_settings(env={}, corpus="quick", depth_limit=1)
    with pytest.raises(LimitExceeded):
        run_regression(suite, corpus=quick_corpus, settings=tight)


def test_shipped_suite_passes_on_default_corpus(default_corpus):
    summary = run_regression(corpus=default_corpus, settings=DEFAULT)
    assert summary.ok, summary.lines()
    assert summary.models == len(default_corpus)
