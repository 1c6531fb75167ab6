"""Unit tests for signed generation trees and the analyticity check."""
import pytest

from subkit.analyticity import DELTA, SLR, SRA, SRR, is_analytic, require_analytic, signed_tree
from subkit.syntax import parse_inequality, parse_term
from subkit.utilities import config
from subkit.utilities.errors import NonAnalyticError
from subkit.verifier import load_suite

SUITE = load_suite(config.data_path("regression_suite.json"))


@pytest.mark.parametrize("entry", SUITE, ids=lambda e: e.name)
def test_regression_inequalities_are_analytic(entry):
    verdict = is_analytic(entry.ineq)
    assert verdict.analytic, verdict.lines()


def test_node_classes():
    root = signed_tree(parse_term("a -> b \\/ c"), "+")
    assert root.classes == {SRR}
    assert root.children[0].sign == "-"
    assert root.children[1].classes == {DELTA, SRR}

    root = signed_tree(parse_term("a /\\ neg b"), "+")
    assert root.classes == {SLR, SRA}
    assert root.children[1].children[0].sign == "-"


def test_negative_neg_is_rewritten():
    root = signed_tree(parse_term("neg a"), "-")
    assert root.label == "->" and root.classes == {SLR}
    native = signed_tree(parse_term("neg a"), "-", expand=False)
    assert native.unclassified


def test_slanted_co_implication_under_implication_is_not_analytic():
    verdict = is_analytic(parse_inequality("a -> (b >- c) <= d"))
    assert not verdict.analytic
    bad = verdict.bad_branches
    assert [br.leaf for br in bad] == ["b", "c"]
    assert "no PIA/skeleton split" in bad[0].describe()
    with pytest.raises(NonAnalyticError) as e:
        require_analytic(verdict.inequality)
    assert e.value.verdict.bad_branches


def test_native_table_differs_on_negative_neg():
    verdict = is_analytic(parse_inequality("b <= neg a"))
    assert verdict.analytic
    assert not verdict.native_analytic
    assert verdict.differs
    assert "native table alone" in verdict.lines()[1]


def test_branch_report():
    verdict = is_analytic(parse_inequality("(a -> b) /\\ (b -> c) <= a -> c"))
    doc = verdict.to_json()
    assert doc["analytic"]
    assert len(doc["branches"]) == 6
    lhs_a = doc["branches"][0]
    assert lhs_a["side"] == "lhs" and lhs_a["leaf"] == "a"
    assert lhs_a["path"] == ["+/\\", "+->"]
    assert lhs_a["good"]


def test_constant_leaves_have_no_branch():
    verdict = is_analytic(parse_inequality("top <= bot"))
    assert verdict.analytic
    assert verdict.branches == []
