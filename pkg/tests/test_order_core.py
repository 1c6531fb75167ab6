"""Unit tests for posets, downset lattices and sublattice embeddings."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from subkit.order_core import (
    FiniteDistributiveLattice, LatticeEmbedding, Poset, antichain, chain, check_canext_props,
    closed_elements, downset_lattice, enumerate_posets, is_compact, is_dense, open_elements,
    poset_from_json, random_poset,
)
from subkit.utilities import config
from subkit.utilities.errors import ElementError, InputError, LimitExceeded, PosetError
from subkit.verifier import build_corpus


def random_lattice(seed, n):
    rng = np.random.default_rng(seed)
    return FiniteDistributiveLattice(random_poset(n, rng))


# ============================================================
# POSETS
# ============================================================
def test_poset_rejects_cycle():
    with pytest.raises(PosetError):
        Poset(["p", "q"], [("p", "q"), ("q", "p")])


def test_poset_rejects_missing_transitive_pair():
    with pytest.raises(PosetError) as e:
        Poset(["p", "q", "r"], [("p", "q"), ("q", "r")])
    assert "transitive" in str(e.value)


def test_poset_rejects_unknown_element():
    with pytest.raises(PosetError):
        Poset(["p"], [("p", "z")])


def test_poset_json_round_trip():
    p = chain(3)
    assert poset_from_json(p.to_json()) == p
    assert p.pairs() == [("p", "q"), ("p", "r"), ("q", "r")]


def test_enumerate_posets_counts():
    # unlabelled posets on 1..4 points
    assert [len(enumerate_posets(n)) for n in (1, 2, 3, 4)] == [1, 2, 5, 16]


def test_enumerate_posets_limit():
    with pytest.raises(LimitExceeded):
        enumerate_posets(5)


# ============================================================
# LATTICES
# ============================================================
def test_chain_and_diamond_sizes():
    assert FiniteDistributiveLattice(chain(2)).size == 3
    diamond = downset_lattice(antichain(2))
    assert diamond.size == 4
    assert diamond.bot == 0 and diamond.top == 3


def test_diamond_operations():
    l = downset_lattice(antichain(2))
    p, q = l.principal("p"), l.principal("q")
    assert l.meet(p, q) == l.bot
    assert l.join(p, q) == l.top
    assert l.leq(p, l.top) and not l.leq(p, q)
    assert l.element_names(l.top) == ["p", "q"]
    assert l.label(p) == "{p}"


def test_element_from_names_needs_a_downset():
    l = FiniteDistributiveLattice(chain(2))
    assert l.element_from_names(["p"]) == l.principal("p")
    with pytest.raises(ElementError):
        l.element_from_names(["q"])
    with pytest.raises(ElementError):
        l.principal("z")


def test_element_index_out_of_range():
    l = FiniteDistributiveLattice(chain(1))
    with pytest.raises(ElementError):
        l.meet(0, 7)


def test_irreducible_cap():
    with pytest.raises(LimitExceeded):
        FiniteDistributiveLattice(antichain(7))
    assert FiniteDistributiveLattice(antichain(7), max_irreducibles=7).size == 128


def test_big_meet_and_join_of_nothing():
    l = FiniteDistributiveLattice(antichain(2))
    assert l.big_meet([]) == l.top
    assert l.big_join([]) == l.bot


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.integers(min_value=1, max_value=4))
def test_lattice_laws_on_random_posets(seed, n):
    l = random_lattice(seed, n)
    for x, y, z in itertools.product(l.elements(), repeat=3):
        assert l.meet(x, l.join(y, z)) == l.join(l.meet(x, y), l.meet(x, z))
        assert l.meet(x, l.join(x, y)) == x
        assert l.leq(x, y) == (l.meet(x, y) == x)


# ============================================================
# EMBEDDINGS
# ============================================================
def test_identity_embedding_is_dense_and_compact():
    e = LatticeEmbedding.identity(FiniteDistributiveLattice(antichain(2)))
    assert closed_elements(e) == open_elements(e) == e.image
    assert is_dense(e) and is_compact(e)
    report = check_canext_props(e)
    assert report.ok
    assert {c.item for c in report.items} >= {"meet-split", "join-split", "general-order"}


def test_two_element_chain_in_diamond_is_not_dense():
    two = FiniteDistributiveLattice(chain(1))
    diamond = FiniteDistributiveLattice(antichain(2))
    e = LatticeEmbedding(two, diamond, [diamond.bot, diamond.top])
    assert not is_dense(e)
    report = check_canext_props(e)
    assert not report.precondition_ok
    assert "not dense" in report.diagnostic


def test_three_element_chain_in_diamond():
    three = FiniteDistributiveLattice(chain(2))
    diamond = FiniteDistributiveLattice(antichain(2))
    p = diamond.principal("p")
    e = LatticeEmbedding(three, diamond, [diamond.bot, p, diamond.top])
    assert closed_elements(e) == {diamond.bot, p, diamond.top}
    assert open_elements(e) == {diamond.bot, p, diamond.top}
    assert not is_dense(e)
    assert not check_canext_props(e).ok


def test_identity_embeddings_of_corpus_lattices():
    corpus = build_corpus(config.load_settings(env={}))
    lattices = {id(m.lattice): m.lattice for m in corpus}
    for l in lattices.values():
        report = check_canext_props(LatticeEmbedding.identity(l))
        assert report.ok, [c for c in report.items if not c.passed]


def test_embedding_must_preserve_bounds():
    two = FiniteDistributiveLattice(chain(1))
    diamond = FiniteDistributiveLattice(antichain(2))
    with pytest.raises(InputError):
        LatticeEmbedding(two, diamond, [diamond.bot, diamond.principal("p")])
