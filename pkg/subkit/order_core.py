"""
Finite distributive lattices via Birkhoff duality.

A finite distributive lattice is represented as the lattice of downsets of a
finite poset of join-irreducibles. Every downset is a bit mask over the poset
elements; lattice elements are the indices of those masks in ascending
integer order, so bottom is index 0 and top is the last index.

This module also houses the finite versions of the canonical-extension
notions (closed/open elements, density, compactness) for sublattice
embeddings.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from subkit.utilities import config
from subkit.utilities.errors import ElementError, InputError, LimitExceeded, PosetError

logger = logging.getLogger(__name__)

DEFAULT_NAMES = "pqrstuvwxyz"


class Poset:
    """
    Finite partial order on named atoms.

    Args:
        elements: ordered list of atom names
        leq_pairs: iterable of (x, y) name pairs meaning x <= y; reflexive
            pairs may be omitted

    The order is stored as a read-only boolean matrix: leq[i, j] is True iff
    element i <= element j.
    """

    def __init__(self, elements, leq_pairs=()):
        self.elements = [str(e) for e in elements]
        if len(set(self.elements)) != len(self.elements):
            raise PosetError(f"Duplicate poset element in {self.elements}")
        self.index = {name: i for i, name in enumerate(self.elements)}

        n = len(self.elements)
        leq = np.eye(n, dtype=bool)
        for pair in leq_pairs:
            if len(pair) != 2:
                raise PosetError(f"Order pair must have two entries, got {pair!r}")
            x, y = pair
            if x not in self.index or y not in self.index:
                raise PosetError(f"Order pair ({x}, {y}) names an unknown element")
            leq[self.index[x], self.index[y]] = True

        # ====== transitivity ======
        composed = (leq.astype(np.uint8) @ leq.astype(np.uint8)) > 0
        missing = np.argwhere(composed & ~leq)
        if len(missing):
            i, k = missing[0]
            j = int(np.flatnonzero(leq[i] & leq[:, k])[0])
            raise PosetError(
                f"Order is not transitive: {self.elements[i]} <= {self.elements[j]} <= "
                f"{self.elements[k]} but not {self.elements[i]} <= {self.elements[k]}"
            )

        # ====== antisymmetry ======
        both = np.argwhere(leq & leq.T & ~np.eye(n, dtype=bool))
        if len(both):
            i, j = both[0]
            raise PosetError(
                f"Order is not antisymmetric: {self.elements[i]} and {self.elements[j]} "
                f"are below each other"
            )

        leq.setflags(write=False)
        self.leq = leq
        # below[i]: bit mask of all elements <= i
        self.below = [
            sum(1 << j for j in range(n) if leq[j, i]) for i in range(n)
        ]

    @property
    def size(self):
        return len(self.elements)

    def pairs(self):
        """Strict order pairs (x, y) with x < y, in index order."""
        return [
            (self.elements[i], self.elements[j])
            for i, j in itertools.product(range(self.size), repeat=2)
            if i != j and self.leq[i, j]
        ]

    def to_json(self):
        return {"elements": list(self.elements), "leq": [list(p) for p in self.pairs()]}

    def __eq__(self, other):
        return (
            isinstance(other, Poset)
            and self.elements == other.elements
            and bool(np.array_equal(self.leq, other.leq))
        )

    def __hash__(self):
        return hash((tuple(self.elements), self.leq.tobytes()))

    def __repr__(self):
        return f"Poset({self.elements}, {self.pairs()})"


def poset_from_json(doc):
    """Build a Poset from `{"elements": [...], "leq": [[x, y], ...]}`."""
    if not isinstance(doc, dict) or "elements" not in doc:
        raise PosetError("Poset JSON needs an 'elements' list")
    return Poset(doc["elements"], [tuple(p) for p in doc.get("leq", [])])


def chain(n, names=DEFAULT_NAMES):
    """n-element chain names[0] < names[1] < ...; its lattice has n+1 elements."""
    elements = list(names[:n])
    return Poset(elements, [(elements[i], elements[j]) for i in range(n) for j in range(i + 1, n)])


def antichain(n, names=DEFAULT_NAMES):
    return Poset(list(names[:n]))


def _canonical_key(leq, n):
    best = None
    for perm in itertools.permutations(range(n)):
        key = tuple(bool(leq[perm[i], perm[j]]) for i in range(n) for j in range(n))
        if best is None or key < best:
            best = key
    return best


def enumerate_posets(n, names=DEFAULT_NAMES):
    """All posets on n points up to isomorphism, in a fixed order.

    Strict orders are generated as transitive, acyclic subsets of the
    off-diagonal pairs and deduplicated by a permutation-minimal key.
    """
    if n > 4:
        raise LimitExceeded(f"Poset enumeration is limited to 4 points, asked for {n}")
    elements = list(names[:n])
    off_diagonal = [(i, j) for i in range(n) for j in range(n) if i != j]
    seen = set()
    result = []
    for bits in range(1 << len(off_diagonal)):
        strict = np.zeros((n, n), dtype=bool)
        for k, (i, j) in enumerate(off_diagonal):
            if bits >> k & 1:
                strict[i, j] = True
        if (strict & strict.T).any():
            continue
        composed = (strict.astype(np.uint8) @ strict.astype(np.uint8)) > 0
        if (composed & ~strict).any():
            continue
        leq = strict | np.eye(n, dtype=bool)
        key = _canonical_key(leq, n)
        if key in seen:
            continue
        seen.add(key)
        result.append(Poset(elements, [(elements[i], elements[j]) for i, j in zip(*np.nonzero(strict))]))
    return result


def random_poset(n, rng, density=0.4, names=DEFAULT_NAMES):
    """Random poset: a random DAG along index order, transitively closed."""
    elements = list(names[:n])
    strict = np.triu(rng.random((n, n)) < density, k=1)
    order = strict.copy()
    for k in range(n):
        order |= np.outer(order[:, k], order[k, :])
    return Poset(elements, [(elements[i], elements[j]) for i, j in zip(*np.nonzero(order))])


class FiniteDistributiveLattice:
    """
    Lattice of all downsets of a poset, ordered by inclusion.

    Args:
        base: Poset of join-irreducibles
        max_irreducibles: cap on base size (defaults to config.MAX_IRREDUCIBLES)

    Attributes:
        masks: downset bit masks in ascending order (element i <-> masks[i])
        meet_table, join_table: int arrays of element indices
        leq_table: boolean array, leq_table[x, y] iff x <= y
        bot, top: indices of the empty and the full downset
    """

    def __init__(self, base, max_irreducibles=None):
        cap = config.MAX_IRREDUCIBLES if max_irreducibles is None else max_irreducibles
        if base.size > cap:
            raise LimitExceeded(
                f"Poset has {base.size} join-irreducibles, cap is {cap} "
                f"(raise it with --max-elems or {config.ENV_MAX_ELEMS})"
            )
        self.base = base
        n = base.size

        masks = [m for m in range(1 << n) if self._is_downset(m)]
        self.masks = np.array(masks, dtype=np.int64)
        self.size = len(masks)
        self.bot = 0
        self.top = self.size - 1

        self.mask_index = np.full(1 << n, -1, dtype=np.int64)
        self.mask_index[self.masks] = np.arange(self.size)

        self.meet_table = self.mask_index[self.masks[:, None] & self.masks[None, :]]
        self.join_table = self.mask_index[self.masks[:, None] | self.masks[None, :]]
        self.leq_table = (self.masks[:, None] & ~self.masks[None, :]) == 0
        for table in (self.meet_table, self.join_table, self.leq_table):
            table.setflags(write=False)

        # plain lists for scalar lookups in tight loops
        self.meet_rows = self.meet_table.tolist()
        self.join_rows = self.join_table.tolist()
        self.leq_rows = self.leq_table.tolist()

        logger.debug("built lattice with %d elements over %d irreducibles", self.size, n)

    def _is_downset(self, mask):
        return all(
            (self.base.below[i] & ~mask) == 0
            for i in range(self.base.size)
            if mask >> i & 1
        )

    # ============================================================
    # ORDER OPERATIONS
    # ============================================================
    def check_elements(self, *xs):
        for x in xs:
            if not isinstance(x, (int, np.integer)) or not 0 <= x < self.size:
                raise ElementError(f"Element index {x!r} out of range 0..{self.size - 1}")

    def meet(self, x, y):
        self.check_elements(x, y)
        return self.meet_rows[x][y]

    def join(self, x, y):
        self.check_elements(x, y)
        return self.join_rows[x][y]

    def leq(self, x, y):
        self.check_elements(x, y)
        return self.leq_rows[x][y]

    def big_meet(self, items):
        """Meet of an iterable of elements; the empty meet is top."""
        mask = int(self.masks[self.top])
        for x in items:
            mask &= int(self.masks[x])
        return int(self.mask_index[mask])

    def big_join(self, items):
        """Join of an iterable of elements; the empty join is bottom."""
        mask = 0
        for x in items:
            mask |= int(self.masks[x])
        return int(self.mask_index[mask])

    def elements(self):
        return range(self.size)

    # ============================================================
    # NAMES AND SERIALIZATION
    # ============================================================
    def element_names(self, x):
        """Irreducible names of the downset x, in base order."""
        self.check_elements(x)
        mask = int(self.masks[x])
        return [name for i, name in enumerate(self.base.elements) if mask >> i & 1]

    def element_from_names(self, names):
        """Index of the downset given by a list of irreducible names.

        The list must already be a downset; nothing is closed downward.
        """
        mask = 0
        for name in names:
            if name not in self.base.index:
                raise ElementError(f"Unknown irreducible {name!r}")
            mask |= 1 << self.base.index[name]
        index = int(self.mask_index[mask])
        if index < 0:
            raise ElementError(f"{sorted(names)} is not a downset of the base poset")
        return index

    def principal(self, name):
        """Index of the principal downset of an irreducible."""
        if name not in self.base.index:
            raise ElementError(f"Unknown irreducible {name!r}")
        return int(self.mask_index[self.base.below[self.base.index[name]]])

    def label(self, x):
        if x == self.bot:
            return "bot"
        if x == self.top:
            return "top"
        return "{" + ",".join(self.element_names(x)) + "}"

    def __repr__(self):
        return f"FiniteDistributiveLattice(size={self.size}, base={self.base.elements})"


def downset_lattice(p, max_irreducibles=None):
    """Lattice of all downsets of p, ordered by inclusion."""
    return FiniteDistributiveLattice(p, max_irreducibles=max_irreducibles)


def meet(l, x, y):
    return l.meet(x, y)


def join(l, x, y):
    return l.join(x, y)


def leq(l, x, y):
    return l.leq(x, y)


# ============================================================
# SUBLATTICE EMBEDDINGS
# ============================================================
class LatticeEmbedding:
    """
    Injective bounded-lattice homomorphism sub -> ambient.

    Args:
        sub: FiniteDistributiveLattice
        ambient: FiniteDistributiveLattice
        mapping: mapping[i] is the ambient index of sub element i
    """

    def __init__(self, sub, ambient, mapping):
        mapping = [int(m) for m in mapping]
        if len(mapping) != sub.size:
            raise InputError(f"Embedding maps {len(mapping)} elements, sub has {sub.size}")
        ambient.check_elements(*mapping)
        if len(set(mapping)) != len(mapping):
            raise InputError("Embedding is not injective")
        if mapping[sub.bot] != ambient.bot or mapping[sub.top] != ambient.top:
            raise InputError("Embedding does not preserve bottom and top")
        for x, y in itertools.product(range(sub.size), repeat=2):
            if mapping[sub.meet(x, y)] != ambient.meet(mapping[x], mapping[y]):
                raise InputError(f"Embedding does not preserve the meet of {x} and {y}")
            if mapping[sub.join(x, y)] != ambient.join(mapping[x], mapping[y]):
                raise InputError(f"Embedding does not preserve the join of {x} and {y}")
        self.sub = sub
        self.ambient = ambient
        self.mapping = tuple(mapping)

    @property
    def image(self):
        return frozenset(self.mapping)

    @classmethod
    def identity(cls, lattice):
        return cls(lattice, lattice, list(range(lattice.size)))


def _close_under(lattice, seed, op):
    table = lattice.meet_rows if op == "meet" else lattice.join_rows
    current = set(seed)
    changed = True
    while changed:
        changed = False
        for x, y in itertools.product(list(current), repeat=2):
            z = table[x][y]
            if z not in current:
                current.add(z)
                changed = True
    return frozenset(current)


def closed_elements(e):
    """Ambient elements that are meets of non-empty subsets of the image."""
    return _close_under(e.ambient, e.image, "meet")


def open_elements(e):
    """Ambient elements that are joins of non-empty subsets of the image."""
    return _close_under(e.ambient, e.image, "join")


def is_dense(e):
    """Every ambient element is a join of closed and a meet of open elements."""
    amb = e.ambient
    closed = closed_elements(e)
    opened = open_elements(e)
    for u in amb.elements():
        below = [k for k in closed if amb.leq(k, u)]
        above = [o for o in opened if amb.leq(u, o)]
        if not below or amb.big_join(below) != u:
            return False
        if not above or amb.big_meet(above) != u:
            return False
    return True


def is_compact(e):
    """Compactness in its closed/open form.

    For every closed k and open o with k <= o there is an image element a
    with k <= a <= o. On finite embeddings every meet and join is already a
    finite one, so this always holds; it is still checked directly.
    """
    amb = e.ambient
    image = e.image
    for k in closed_elements(e):
        for o in open_elements(e):
            if amb.leq(k, o) and not any(amb.leq(k, a) and amb.leq(a, o) for a in image):
                return False
    return True


@dataclass
class PropertyCheck:
    item: str
    passed: bool
    witness: tuple = ()


@dataclass
class CanExtReport:
    precondition_ok: bool
    diagnostic: str = ""
    items: list = field(default_factory=list)

    @property
    def ok(self):
        return self.precondition_ok and all(c.passed for c in self.items)


def check_canext_props(e):
    """Check the standard order/splitting facts about closed and open elements.

    Returns a CanExtReport. If the embedding is not dense and compact, the
    report carries a precondition diagnostic and no items.
    """
    if not is_dense(e):
        return CanExtReport(False, "precondition failed: embedding is not dense")
    if not is_compact(e):
        return CanExtReport(False, "precondition failed: embedding is not compact")

    amb = e.ambient
    L = amb.leq_rows
    A = sorted(e.image)
    K = sorted(closed_elements(e))
    O = sorted(open_elements(e))
    U = list(amb.elements())
    report = CanExtReport(True)

    def record(item, witness):
        report.items.append(PropertyCheck(item, witness is None, witness or ()))

    def first(iterable):
        return next(iter(iterable), None)

    # ====== order characterisations ======
    record("closed-order", first(
        (k1, k2) for k1 in K for k2 in K
        if L[k1][k2] != all(L[k1][b] for b in A if L[k2][b])
    ))
    record("open-order", first(
        (o1, o2) for o1 in O for o2 in O
        if L[o1][o2] != all(L[b][o2] for b in A if L[b][o1])
    ))
    record("general-order", first(
        (u1, u2) for u1 in U for u2 in U
        if L[u1][u2] != all(L[k][u2] for k in K if L[k][u1])
        or L[u1][u2] != all(L[u1][o] for o in O if L[u2][o])
    ))
    record("join-of-closed-meet-of-open", first(
        (x, y) for x in K for y in K if amb.join(x, y) not in K
    ) or first(
        (x, y) for x in O for y in O if amb.meet(x, y) not in O
    ))

    # ====== splitting and completeness ======
    record("meet-split", first(
        (k1, k2, b) for k1 in K for k2 in K for b in A
        if L[amb.meet(k1, k2)][b]
        and not any(L[k1][a1] and L[k2][a2] and L[amb.meet(a1, a2)][b] for a1 in A for a2 in A)
    ))
    record("meet-split-open", first(
        (k1, k2, o) for k1 in K for k2 in K for o in O
        if L[amb.meet(k1, k2)][o]
        and not any(
            L[k1][a1] and L[k2][a2] and L[b][o] and L[amb.meet(a1, a2)][b]
            for a1 in A for a2 in A for b in A
        )
    ))
    record("meets-of-closed", first(
        (x, y) for x in K for y in K if amb.meet(x, y) not in K
    ))
    record("join-split", first(
        (a, o1, o2) for a in A for o1 in O for o2 in O
        if L[a][amb.join(o1, o2)]
        and not any(L[b1][o1] and L[b2][o2] and L[a][amb.join(b1, b2)] for b1 in A for b2 in A)
    ))
    record("join-split-closed", first(
        (k, o1, o2) for k in K for o1 in O for o2 in O
        if L[k][amb.join(o1, o2)]
        and not any(
            L[b1][o1] and L[b2][o2] and L[k][a] and L[a][amb.join(b1, b2)]
            for a in A for b1 in A for b2 in A
        )
    ))
    record("joins-of-open", first(
        (x, y) for x in O for y in O if amb.join(x, y) not in O
    ))
    return report
