"""Unit tests for the parser, printer, condition utilities and evaluators."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subkit.order_core import FiniteDistributiveLattice, antichain
from subkit.subord_algebra import SubordinationRelation, closure, relation_from_pairs
from subkit.syntax import (
    BOT, TOP, And, CoImp, Exists, ForAll, Imp, Implies, Leq, Neg, Or, Prec, RestrictedExists,
    Restrictor, Sim, Var, alpha_equivalent, condition_counterexample, condition_depth,
    eval_condition, eval_inequality, eval_term, expand_derived, fold_derived, free_variables,
    inequality_counterexample, parse_condition, parse_inequality, parse_term, print_condition,
    print_term, restrictor_atom,
)
from subkit.utilities.errors import ConditionError, InputError, LimitExceeded, ParseError

a, b, c = Var("a"), Var("b"), Var("c")


@pytest.fixture
def diamond():
    return FiniteDistributiveLattice(antichain(2))


@pytest.fixture
def prec1(diamond):
    return closure(diamond, relation_from_pairs(diamond, [[["p"], ["q"]]]))


@pytest.fixture
def full(diamond):
    return SubordinationRelation(diamond, np.ones((4, 4), dtype=bool))


# ============================================================
# PARSER AND PRINTER
# ============================================================
def test_implication_is_right_associative():
    assert parse_term("a -> b -> c") == Imp(a, Imp(b, c))
    assert print_term(parse_term("a -> b -> c")) == "a -> (b -> c)"


def test_precedence():
    assert parse_term("a \\/ b /\\ c -> c") == Imp(Or(a, And(b, c)), c)
    assert parse_term("neg a /\\ b") == And(Neg(a), b)
    assert parse_term("sim (a >- b)") == Sim(CoImp(a, b))
    assert print_term(Neg(And(a, b))) == "neg (a /\\ b)"


def test_coimp_does_not_chain():
    with pytest.raises(ParseError) as e:
        parse_term("a >- b >- c")
    assert e.value.column is not None


def test_parse_error_lists_expected_tokens():
    with pytest.raises(ParseError) as e:
        parse_inequality("a /\\ <= b")
    assert e.value.expected
    assert "line 1" in str(e.value)


def test_unexpected_end_of_input():
    with pytest.raises(ParseError):
        parse_inequality("a <=")


terms = st.recursive(
    st.sampled_from([a, b, c, BOT, TOP]),
    lambda kids: st.one_of(
        st.builds(And, kids, kids), st.builds(Or, kids, kids), st.builds(Imp, kids, kids),
        st.builds(CoImp, kids, kids), st.builds(Neg, kids), st.builds(Sim, kids),
    ),
    max_leaves=8,
)


@settings(max_examples=200, deadline=None)
@given(terms)
def test_printed_terms_parse_back(t):
    assert parse_term(print_term(t)) == t


def test_expand_and_fold_derived():
    t = parse_term("neg a -> sim b")
    expanded = expand_derived(t)
    assert expanded == Imp(Imp(a, BOT), CoImp(b, TOP))
    assert fold_derived(expanded) == t


# ============================================================
# CONDITIONS
# ============================================================
def test_free_variables_are_closed_universally():
    cond = parse_condition("a prec b & b prec c ==> a prec c")
    assert isinstance(cond, ForAll) and cond.var == "a"
    assert free_variables(cond) == []
    assert free_variables(parse_condition("a prec b", close=False)) == ["a", "b"]


def test_restricted_quantifiers():
    cond = parse_condition("forall a. exists (y1, y2) <=or a. y1 prec y2", close=False)
    inner = cond.body
    assert isinstance(inner, RestrictedExists)
    assert inner.restrictor == Restrictor("leor", a)
    assert restrictor_atom(inner.vars, inner.restrictor) == Leq(a, Or(Var("y1"), Var("y2")))
    assert print_condition(cond) == "forall a. exists (y1, y2) <=or a. y1 prec y2"


def test_restrictor_arity_checked():
    with pytest.raises(ConditionError):
        restrictor_atom(("y",), Restrictor("leor", a))


def test_slanted_atoms_rejected_in_conditions():
    with pytest.raises(ConditionError):
        parse_condition("a <= b -> c")


def test_double_binding_rejected():
    with pytest.raises(ConditionError):
        parse_condition("forall a. exists a. a <= a")


def test_condition_depth():
    cond = parse_condition("d /\\ a prec b ==> exists e. exists f. d <= e \\/ f")
    assert condition_depth(cond) == 2


def test_alpha_equivalence():
    t = parse_condition("a prec b & b prec c ==> a prec c")
    assert alpha_equivalent(t, parse_condition("y prec z & x prec y ==> x prec z"))
    assert not alpha_equivalent(t, parse_condition("a prec b & b prec c ==> c prec a"))
    assert alpha_equivalent(
        parse_condition("exists e. exists f. top <= e \\/ f & a /\\ e prec b"),
        parse_condition("exists g. exists h. top <= h \\/ g & g /\\ a prec b"),
    )


# ============================================================
# EVALUATION
# ============================================================
def test_eval_term(diamond, prec1):
    p, q = diamond.principal("p"), diamond.principal("q")
    assert eval_term(prec1, {"a": p, "b": q}, parse_term("a -> b")) == diamond.top
    assert eval_term(prec1, {"a": p}, parse_term("neg a")) == q


def test_unbound_variable(prec1):
    with pytest.raises(InputError):
        eval_term(prec1, {}, parse_term("a"))


def test_neg_top_on_two_models(prec1, full, diamond):
    ineq = parse_inequality("neg top <= bot")
    assert eval_inequality(prec1, ineq)
    failure = inequality_counterexample(full, ineq)
    assert failure is not None
    assert failure.lhs == diamond.top and failure.rhs == diamond.bot


def test_inequality_counterexample_is_first_in_order(prec1, diamond):
    failure = inequality_counterexample(prec1, parse_inequality("a <= b"))
    assert failure.assignment == {"a": 1, "b": 0}


def test_small_grid_limit_gives_same_answer(prec1):
    ineq = parse_inequality("(a -> b) /\\ (b -> c) <= a -> c")
    assert inequality_counterexample(prec1, ineq, grid_limit=4) == inequality_counterexample(prec1, ineq)


def test_eval_condition(prec1, full):
    transitivity = parse_condition("a prec b & b prec c ==> a prec c")
    assert eval_condition(prec1, transitivity)
    assert eval_condition(full, transitivity)
    inclusion = parse_condition("a prec b ==> a <= b")
    assert condition_counterexample(prec1, inclusion) is not None
    assert condition_counterexample(full, inclusion) == {"a": 1, "b": 0}


def test_existential_condition(prec1, full):
    cond = parse_condition("exists e. top <= e & e prec bot")
    assert not eval_condition(prec1, cond)
    assert eval_condition(full, cond)


def test_bindings_fix_free_variables(diamond, prec1):
    cond = parse_condition("x prec y", close=False)
    p, q = diamond.principal("p"), diamond.principal("q")
    assert eval_condition(prec1, cond, {"x": p, "y": q})
    assert not eval_condition(prec1, cond, {"x": q, "y": p})
    with pytest.raises(InputError):
        eval_condition(prec1, cond, {"x": p})


def test_depth_limit(prec1):
    cond = parse_condition("a prec b ==> exists e. exists f. a <= e \\/ f")
    with pytest.raises(LimitExceeded):
        eval_condition(prec1, cond, depth_limit=1)


def test_alternating_quantifiers(prec1, full):
    cond = parse_condition("exists e. forall f. f <= e & e prec f")
    assert not eval_condition(prec1, cond)
    assert eval_condition(full, cond)


@pytest.mark.parametrize("text", [
    "a prec b & b prec c ==> a prec c",
    "d /\\ a prec b \\/ c ==> exists e. exists f. d <= e \\/ f & e /\\ a prec b & a /\\ f prec c",
    "exists e. exists f. top <= e \\/ f & a /\\ e prec b & b /\\ f prec a",
])
def test_small_grid_limit_gives_same_verdict(text, prec1, full):
    cond = parse_condition(text)
    for model in (prec1, full):
        wide = condition_counterexample(model, cond)
        narrow = condition_counterexample(model, cond, grid_limit=4)
        assert (wide is None) == (narrow is None)


def test_implies_with_empty_consequent_prefix():
    cond = parse_condition("a prec b ==> b prec a", close=False)
    assert isinstance(cond, Implies)
    assert isinstance(cond.consequent.atoms[0], Prec)
    assert not isinstance(cond.consequent, (Exists, ForAll))
