"""
Subordination relations and the slanted operators they induce.

A subordination relation on a finite distributive lattice is stored as a
boolean matrix rel[a, b] meaning a ≺ b. The derived operators are tabulated
once per relation:

    a -> b   = join of {c | a ∧ c ≺ b}
    a >- b   = meet of {c | b ≺ a ∨ c}
    neg a    = a -> bot
    sim a    = a >- top
    u circ v = meet of {w | v <= u -> w}
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from subkit.order_core import FiniteDistributiveLattice, poset_from_json
from subkit.utilities.errors import AlgebraError, InputError

logger = logging.getLogger(__name__)

# axiom name -> clause number of the slanted (co-)Heyting definition
SLANTED_CLAUSES = {
    "imp-meet": 2, "imp-top": 2, "imp-join": 3, "imp-bot": 3, "imp-residuation": 4,
    "coimp-join": 2, "coimp-bot": 2, "coimp-meet": 3, "coimp-top": 3, "coimp-residuation": 4,
}


@dataclass(frozen=True)
class Violation:
    """A failed axiom instance. Witness entries are lattice element indices."""

    axiom: str
    witness: tuple

    @property
    def clause(self):
        return SLANTED_CLAUSES.get(self.axiom)

    def describe(self, lattice):
        names = ", ".join(lattice.label(x) for x in self.witness)
        return f"{self.axiom}: ({names})"


def _as_matrix(lattice, rel):
    rel = np.asarray(rel, dtype=bool)
    if rel.shape != (lattice.size, lattice.size):
        raise InputError(
            f"Relation has shape {rel.shape}, lattice needs ({lattice.size}, {lattice.size})"
        )
    return rel


def _witnesses(mask):
    """Witness rows of a boolean tensor, lexicographically ordered."""
    return [tuple(int(i) for i in row) for row in np.argwhere(mask)]


# ============================================================
# VALIDATION AND CLOSURE
# ============================================================
def validate_subordination(lattice, rel):
    """Check the four subordination axioms.

    Args:
        lattice: FiniteDistributiveLattice
        rel: boolean array-like of shape (n, n)

    Returns:
        list of Violation; empty iff rel is a subordination relation.
    """
    R = _as_matrix(lattice, rel)
    n = lattice.size
    meet_t, join_t, leq_t = lattice.meet_table, lattice.join_table, lattice.leq_table
    idx = np.arange(n)
    violations = []

    for x in (lattice.bot, lattice.top):
        if not R[x, x]:
            violations.append(Violation("bot-top", (x, x)))

    # AND: a≺b, a≺c => a ≺ b∧c
    premise = R[:, :, None] & R[:, None, :]
    conclusion = R[idx[:, None, None], meet_t[None, :, :]]
    violations += [Violation("AND", w) for w in _witnesses(premise & ~conclusion)]

    # OR: a≺c, b≺c => a∨b ≺ c
    premise = R[:, None, :] & R[None, :, :]
    conclusion = R[join_t[:, :, None], idx[None, None, :]]
    violations += [Violation("OR", w) for w in _witnesses(premise & ~conclusion)]

    # WO-SI: a≤b≺c≤d => a≺d
    L = leq_t.astype(np.int64)
    required = (L @ R.astype(np.int64) @ L) > 0
    for a, d in np.argwhere(required & ~R):
        chain = np.argwhere(leq_t[a, :, None] & R & leq_t[None, :, d])
        b, c = chain[0]
        violations.append(Violation("WO-SI", (int(a), int(b), int(c), int(d))))

    return violations


def closure(lattice, seed):
    """Least subordination relation containing seed, by saturation."""
    R = _as_matrix(lattice, seed).copy()
    meet_t, join_t, leq_t = lattice.meet_table, lattice.join_table, lattice.leq_table
    L = leq_t.astype(np.int64)

    passes = 0
    while True:
        passes += 1
        before = R.copy()
        R[lattice.bot, lattice.bot] = True
        R[lattice.top, lattice.top] = True
        R = (L @ R.astype(np.int64) @ L) > 0

        a, b, c = np.nonzero(R[:, :, None] & R[:, None, :])
        R[a, meet_t[b, c]] = True
        a, b, c = np.nonzero(R[:, None, :] & R[None, :, :])
        R[join_t[a, b], c] = True

        if np.array_equal(R, before):
            break
    logger.debug("closure stable after %d passes, %d pairs", passes, int(R.sum()))
    return SubordinationRelation(lattice, R, check=False)


class SubordinationRelation:
    """
    Subordination relation on a finite distributive lattice.

    Args:
        lattice: FiniteDistributiveLattice
        rel: boolean (n, n) matrix, rel[a, b] iff a ≺ b
        check: validate the axioms and raise AlgebraError on failure
    """

    def __init__(self, lattice, rel, check=True):
        R = _as_matrix(lattice, rel).copy()
        if check:
            violations = validate_subordination(lattice, R)
            if violations:
                raise AlgebraError(
                    f"Not a subordination relation: {violations[0].describe(lattice)}"
                    + (f" and {len(violations) - 1} more" if len(violations) > 1 else ""),
                    violations,
                )
        R.setflags(write=False)
        self.lattice = lattice
        self.rel = R

    def holds(self, a, b):
        return bool(self.rel[a, b])

    def pairs(self):
        return [(int(a), int(b)) for a, b in np.argwhere(self.rel)]

    def to_json(self):
        l = self.lattice
        return [[l.element_names(a), l.element_names(b)] for a, b in self.pairs()]

    def __eq__(self, other):
        return (
            isinstance(other, SubordinationRelation)
            and self.lattice.base == other.lattice.base
            and bool(np.array_equal(self.rel, other.rel))
        )

    def __hash__(self):
        return hash((self.lattice.base, self.rel.tobytes()))

    def __repr__(self):
        return f"SubordinationRelation({len(self.pairs())} pairs on {self.lattice.size} elements)"

    # ============================================================
    # OPERATOR TABLES
    # ============================================================
    @cached_property
    def imp_table(self):
        l = self.lattice
        idx = np.arange(l.size)
        # cond[a, b, c] iff a∧c ≺ b
        cond = self.rel[l.meet_table[:, None, :], idx[None, :, None]]
        masks = np.where(cond, l.masks[None, None, :], 0)
        table = l.mask_index[np.bitwise_or.reduce(masks, axis=2)]
        table.setflags(write=False)
        return table

    @cached_property
    def coimp_table(self):
        l = self.lattice
        idx = np.arange(l.size)
        # cond[a, b, c] iff b ≺ a∨c
        cond = self.rel[idx[None, :, None], l.join_table[:, None, :]]
        masks = np.where(cond, l.masks[None, None, :], l.masks[l.top])
        table = l.mask_index[np.bitwise_and.reduce(masks, axis=2)]
        table.setflags(write=False)
        return table

    @cached_property
    def neg_table(self):
        return self.imp_table[:, self.lattice.bot]

    @cached_property
    def sim_table(self):
        return self.coimp_table[:, self.lattice.top]

    @cached_property
    def circ_table(self):
        l = self.lattice
        idx = np.arange(l.size)
        # cond[u, v, w] iff v <= u -> w
        cond = l.leq_table[idx[None, :, None], self.imp_table[:, None, :]]
        masks = np.where(cond, l.masks[None, None, :], l.masks[l.top])
        table = l.mask_index[np.bitwise_and.reduce(masks, axis=2)]
        table.setflags(write=False)
        return table


def slanted_imp(s, a, b):
    s.lattice.check_elements(a, b)
    return int(s.imp_table[a, b])


def slanted_coimp(s, a, b):
    s.lattice.check_elements(a, b)
    return int(s.coimp_table[a, b])


def neg(s, a):
    s.lattice.check_elements(a)
    return int(s.neg_table[a])


def sim(s, a):
    s.lattice.check_elements(a)
    return int(s.sim_table[a])


def circ(s, u, v):
    """Left residual of ->: meet of {w | v <= u -> w}."""
    s.lattice.check_elements(u, v)
    return int(s.circ_table[u, v])


# ============================================================
# SLANTED ALGEBRAS
# ============================================================
@dataclass
class SlantedAlgebra:
    """Lattice with an implication table, a co-implication table, or both."""

    lattice: FiniteDistributiveLattice
    imp: np.ndarray = None
    coimp: np.ndarray = None

    def __post_init__(self):
        if self.imp is None and self.coimp is None:
            raise InputError("A slanted algebra needs an imp or a coimp table")
        n = self.lattice.size
        for name in ("imp", "coimp"):
            table = getattr(self, name)
            if table is None:
                continue
            table = np.asarray(table, dtype=np.int64)
            if table.shape != (n, n):
                raise InputError(f"{name} table has shape {table.shape}, expected ({n}, {n})")
            if table.min() < 0 or table.max() >= n:
                raise InputError(f"{name} table holds values outside 0..{n - 1}")
            setattr(self, name, table)


def to_slanted(s):
    return SlantedAlgebra(s.lattice, np.array(s.imp_table), np.array(s.coimp_table))


def _imp_violations(l, I):
    meet_t, join_t, leq_t = l.meet_table, l.join_table, l.leq_table
    idx = np.arange(l.size)
    found = []
    bad = I[:, meet_t] != meet_t[I[:, :, None], I[:, None, :]]
    found += [Violation("imp-meet", w) for w in _witnesses(bad)]
    found += [Violation("imp-top", (int(a), l.top)) for a in np.flatnonzero(I[:, l.top] != l.top)]
    bad = I[join_t] != meet_t[I[:, None, :], I[None, :, :]]
    found += [Violation("imp-join", w) for w in _witnesses(bad)]
    found += [Violation("imp-bot", (l.bot, int(b))) for b in np.flatnonzero(I[l.bot, :] != l.top)]
    # (a, b, c): c <= a -> b  iff  a∧c <= top -> b
    lhs = leq_t[idx[None, None, :], I[:, :, None]]
    rhs = leq_t[meet_t[:, None, :], I[l.top][None, :, None]]
    found += [Violation("imp-residuation", w) for w in _witnesses(lhs != rhs)]
    return found


def _coimp_violations(l, C):
    meet_t, join_t, leq_t = l.meet_table, l.join_table, l.leq_table
    idx = np.arange(l.size)
    found = []
    bad = C[:, join_t] != join_t[C[:, :, None], C[:, None, :]]
    found += [Violation("coimp-join", w) for w in _witnesses(bad)]
    found += [Violation("coimp-bot", (int(a), l.bot)) for a in np.flatnonzero(C[:, l.bot] != l.bot)]
    bad = C[meet_t] != join_t[C[:, None, :], C[None, :, :]]
    found += [Violation("coimp-meet", w) for w in _witnesses(bad)]
    found += [Violation("coimp-top", (l.top, int(b))) for b in np.flatnonzero(C[l.top, :] != l.bot)]
    # (a, b, c): a >- b <= c  iff  bot >- b <= a∨c
    lhs = leq_t[C[:, :, None], idx[None, None, :]]
    rhs = leq_t[C[l.bot][None, :, None], join_t[:, None, :]]
    found += [Violation("coimp-residuation", w) for w in _witnesses(lhs != rhs)]
    return found


def validate_slanted(alg):
    """All violated clause instances of the present tables (empty means valid)."""
    violations = []
    if alg.imp is not None:
        violations += _imp_violations(alg.lattice, alg.imp)
    if alg.coimp is not None:
        violations += _coimp_violations(alg.lattice, alg.coimp)
    return violations


def to_subordination(alg):
    """Read back a ≺ b as a <= top -> b (or bot >- a <= b)."""
    l = alg.lattice
    violations = validate_slanted(alg)
    if violations:
        raise AlgebraError(
            f"Tables are not slanted: {violations[0].describe(l)}"
            + (f" and {len(violations) - 1} more" if len(violations) > 1 else ""),
            violations,
        )
    from_imp = from_coimp = None
    if alg.imp is not None:
        from_imp = l.leq_table[:, alg.imp[l.top]]
    if alg.coimp is not None:
        from_coimp = l.leq_table[alg.coimp[l.bot]]
    if from_imp is not None and from_coimp is not None:
        differ = np.argwhere(from_imp != from_coimp)
        if len(differ):
            a, b = differ[0]
            raise AlgebraError(
                f"imp and coimp induce different relations, first at "
                f"({l.label(int(a))}, {l.label(int(b))})",
                [Violation("imp-coimp-agreement", (int(a), int(b))) for a, b in differ],
            )
    rel = from_imp if from_imp is not None else from_coimp
    return SubordinationRelation(l, rel)


# ============================================================
# MODEL FILES
# ============================================================
def relation_from_pairs(lattice, pairs):
    """Boolean matrix from [[X, Y], ...] where X, Y are downset name lists."""
    R = np.zeros((lattice.size, lattice.size), dtype=bool)
    for pair in pairs:
        if len(pair) != 2:
            raise InputError(f"Relation pair must have two entries, got {pair!r}")
        a = lattice.element_from_names(pair[0])
        b = lattice.element_from_names(pair[1])
        R[a, b] = True
    return R


def model_from_json(doc, max_irreducibles=None):
    """
    Build a SubordinationRelation from a model document.

    Args:
        doc: {"poset": {...}, "subordination": [[X, Y], ...], "closed": bool}
        max_irreducibles: lattice cap passed to the lattice constructor

    Returns:
        SubordinationRelation; closed under the axioms first when "closed"
        is false, validated as given otherwise.
    """
    if not isinstance(doc, dict) or "poset" not in doc:
        raise InputError("Model JSON needs a 'poset' entry")
    lattice = FiniteDistributiveLattice(poset_from_json(doc["poset"]), max_irreducibles)
    seed = relation_from_pairs(lattice, doc.get("subordination", []))
    if doc.get("closed", False):
        return SubordinationRelation(lattice, seed)
    return closure(lattice, seed)
