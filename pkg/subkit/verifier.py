"""
Finite-model corpus and brute-force equivalence checking.

A corpus is a list of subordination relations, each on its own downset
lattice. check_equivalence evaluates an inequality and a condition on
every model (concurrently, aggregated in corpus order) and returns the
first model where they disagree.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from subkit.correspond import correspond
from subkit.order_core import FiniteDistributiveLattice, antichain, enumerate_posets, random_poset
from subkit.subord_algebra import SubordinationRelation, closure, validate_subordination
from subkit.syntax import (
    Conj, ForAll, Implies, RestrictedForAll, condition_counterexample, eval_condition,
    inequality_counterexample, parse_condition, parse_inequality, print_condition,
    print_inequality, restrictor_atom,
)
from subkit.utilities import config
from subkit.utilities.errors import InputError, LimitExceeded, SubkitError, SuiteError

logger = logging.getLogger(__name__)

MODES = ("exhaustive", "closure", "sampled")
SAMPLE_SEED_PAIRS = 3          # random seed relations have 1..3 pairs
SAMPLE_ATTEMPTS = 10           # attempts per requested sampled relation
SAMPLED_PER_POSET = 4
SAMPLED_MAX_ELEMENTS = 16      # lattices drawn for the sampled part of the default corpus
SAMPLED_DENSITY = 0.6
CLOSURE_PER_LATTICE = 16       # closure-seeded relations per lattice in the default corpus


# ============================================================
# CORPUS
# ============================================================
def _required_pairs(lattice):
    """bot prec x and x prec top hold in every subordination relation."""
    R = np.zeros((lattice.size, lattice.size), dtype=bool)
    R[lattice.bot, :] = True
    R[:, lattice.top] = True
    return R


def _exhaustive(lattice):
    if lattice.size > config.EXHAUSTIVE_MAX_ELEMENTS:
        raise LimitExceeded(
            f"Exhaustive enumeration needs at most {config.EXHAUSTIVE_MAX_ELEMENTS} elements, "
            f"lattice has {lattice.size}"
        )
    base = _required_pairs(lattice)
    free = [tuple(p) for p in np.argwhere(~base)]
    found = []
    for bits in range(1 << len(free)):
        R = base.copy()
        for k, (a, b) in enumerate(free):
            if bits >> k & 1:
                R[a, b] = True
        if not validate_subordination(lattice, R):
            found.append(SubordinationRelation(lattice, R, check=False))
    return found


def _dedupe(relations):
    seen, out = set(), []
    for r in relations:
        key = r.rel.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def _closure_seeded(lattice, limit=None):
    """Closures of the empty seed, <=, A x A, then single pairs, then two pairs, in that order."""
    n = lattice.size
    empty = np.zeros((n, n), dtype=bool)
    found, seen = [], set()

    def keep(rel):
        key = rel.rel.tobytes()
        if key not in seen:
            seen.add(key)
            found.append(rel)
        return limit is not None and len(found) >= limit

    for seed in (empty, lattice.leq_table, np.ones((n, n), dtype=bool)):
        if keep(closure(lattice, seed)):
            return found

    singles = []
    for a, b in np.argwhere(~_required_pairs(lattice)):
        seed = empty.copy()
        seed[a, b] = True
        rel = closure(lattice, seed)
        singles.append(rel)
        if keep(rel):
            return found
    singles = _dedupe(singles)

    for r1, r2 in itertools.combinations(singles, 2):
        union = r1.rel | r2.rel
        if np.array_equal(union, r1.rel) or np.array_equal(union, r2.rel):
            continue
        if keep(closure(lattice, union)):
            return found
    return found


def _sampled(lattice, count, seed):
    rng = np.random.default_rng(seed)
    n = lattice.size
    found, seen = [], set()
    for _ in range(count * SAMPLE_ATTEMPTS):
        if len(found) >= count:
            break
        seed_rel = np.zeros((n, n), dtype=bool)
        k = int(rng.integers(1, SAMPLE_SEED_PAIRS + 1))
        seed_rel[rng.integers(0, n, size=k), rng.integers(0, n, size=k)] = True
        rel = closure(lattice, seed_rel)
        key = rel.rel.tobytes()
        if key not in seen:
            seen.add(key)
            found.append(rel)
    return found


def enumerate_subordinations(lattice, mode="exhaustive", count=None, seed=None, limit=None):
    """
    Subordination relations on a lattice.

    Args:
        lattice: FiniteDistributiveLattice
        mode: "exhaustive" (all relations, at most 4 elements), "closure"
            (closures of seeds with at most two pairs, plus <= and A x A)
            or "sampled" (closures of random seeds)
        count: number of relations for "sampled"
        seed: RNG seed for "sampled"
        limit: stop "closure" after this many distinct relations

    Returns:
        list of SubordinationRelation, deduplicated, in a fixed order
    """
    if mode == "exhaustive":
        found = _exhaustive(lattice)
    elif mode == "closure":
        if lattice.size > 64:
            raise LimitExceeded(f"Closure-seeded enumeration needs at most 64 elements, lattice has {lattice.size}")
        found = _closure_seeded(lattice, limit)
    elif mode == "sampled":
        found = _sampled(lattice, config.SAMPLE_COUNT if count is None else count,
                         config.DEFAULT_SEED if seed is None else seed)
    else:
        raise InputError(f"Unknown enumeration mode {mode!r}; expected one of {', '.join(MODES)}")
    logger.debug("%s enumeration on %d elements: %d relations", mode, lattice.size, len(found))
    return found


@dataclass
class Model:
    id: str
    relation: SubordinationRelation
    mode: str

    @property
    def lattice(self):
        return self.relation.lattice

    def describe(self):
        base = self.lattice.base
        order = ", ".join(f"{x}<{y}" for x, y in base.pairs() if x != y) or "antichain"
        return f"{self.id} ({self.mode}; irreducibles {','.join(base.elements)}; {order}; {len(self.relation.pairs())} pairs)"


@dataclass
class ModelCorpus:
    models: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def add(self, relations, mode, label):
        for k, rel in enumerate(relations):
            self.models.append(Model(f"{label}#{k}", rel, mode))

    @classmethod
    def from_relations(cls, relations, mode="file", label="model"):
        corpus = cls(metadata={"profile": mode})
        corpus.add(relations, mode, label)
        return corpus


def _lattices(n, cap):
    if n > cap:
        return []
    return [FiniteDistributiveLattice(p, cap) for p in enumerate_posets(n)]


def _small_random_lattice(n, rng, cap):
    """Random n-irreducible lattice with at most SAMPLED_MAX_ELEMENTS elements.

    Rejected draws raise the edge density; at density 1 the poset is a chain.
    """
    density = SAMPLED_DENSITY
    while True:
        lattice = FiniteDistributiveLattice(random_poset(n, rng, density), cap)
        if lattice.size <= SAMPLED_MAX_ELEMENTS:
            return lattice
        density = min(1.0, density + 0.05)


def build_corpus(settings=None):
    """
    The model corpus for a settings profile.

    "quick": every relation on every lattice with at most four elements,
    plus the closure-seeded relations on the diamond.
    "default": exhaustive for 1-2 irreducibles, closure-seeded for 3-4
    (at most CLOSURE_PER_LATTICE relations each), and settings.sample_count
    sampled models on random 5-6 irreducible posets drawn from settings.seed,
    each with at most SAMPLED_MAX_ELEMENTS lattice elements.
    """
    settings = settings or config.load_settings()
    cap = settings.max_irreducibles
    corpus = ModelCorpus(metadata={
        "profile": settings.corpus, "seed": settings.seed,
        "max_irreducibles": cap, "sample_count": settings.sample_count,
    })

    if settings.corpus == "quick":
        for n in (1, 2, 3):
            for i, lattice in enumerate(_lattices(n, cap)):
                if lattice.size <= config.EXHAUSTIVE_MAX_ELEMENTS:
                    corpus.add(enumerate_subordinations(lattice, "exhaustive"), "exhaustive", f"P{n}.{i}")
        if cap >= 2:
            diamond = FiniteDistributiveLattice(antichain(2), cap)
            known = {m.relation.rel.tobytes() for m in corpus if m.lattice.base == diamond.base}
            extra = [r for r in enumerate_subordinations(diamond, "closure") if r.rel.tobytes() not in known]
            corpus.add(extra, "closure", "diamond")
        logger.debug("quick corpus: %d models", len(corpus))
        return corpus

    for n in (1, 2):
        for i, lattice in enumerate(_lattices(n, cap)):
            corpus.add(enumerate_subordinations(lattice, "exhaustive"), "exhaustive", f"P{n}.{i}")
    for n in (3, 4):
        for i, lattice in enumerate(_lattices(n, cap)):
            corpus.add(enumerate_subordinations(lattice, "closure", limit=CLOSURE_PER_LATTICE),
                       "closure", f"P{n}.{i}")

    sizes = [n for n in (5, 6) if n <= cap]
    if sizes:
        rng = np.random.default_rng(settings.seed)
        sampled, k = 0, 0
        while sampled < settings.sample_count:
            n = int(rng.choice(sizes))
            lattice = _small_random_lattice(n, rng, cap)
            want = min(SAMPLED_PER_POSET, settings.sample_count - sampled)
            rels = enumerate_subordinations(lattice, "sampled", count=want, seed=int(rng.integers(2 ** 32)))
            corpus.add(rels, "sampled", f"R{n}.{k}")
            sampled += len(rels)
            k += 1
    logger.debug("default corpus: %d models", len(corpus))
    return corpus


# ============================================================
# EQUIVALENCE
# ============================================================
def strip_universals(cond, names):
    """Drop the leading universal quantifiers binding names; their guards become antecedents."""
    names = set(names)
    guards = []
    node = cond
    kept = []
    while isinstance(node, (ForAll, RestrictedForAll)):
        if isinstance(node, ForAll) and node.var in names:
            pass
        elif isinstance(node, RestrictedForAll) and set(node.vars) <= names:
            guards.append(restrictor_atom(node.vars, node.restrictor))
        else:
            kept.append(node)
        node = node.body
    if guards:
        if isinstance(node, Implies):
            node = Implies(Conj(tuple(guards) + node.antecedent.atoms), node.consequent)
        else:
            node = Implies(Conj(tuple(guards)), node)
    for q in reversed(kept):
        if isinstance(q, ForAll):
            node = ForAll(q.var, node)
        else:
            node = RestrictedForAll(q.vars, q.restrictor, node)
    return node


@dataclass
class Counterexample:
    model: Model
    ineq_holds: bool
    cond_holds: bool
    assignment: dict
    side_values: dict = field(default_factory=dict)

    @property
    def model_id(self):
        return self.model.id

    def describe(self):
        l = self.model.lattice
        values = ", ".join(f"{k}={l.label(v)}" for k, v in self.assignment.items()) or "-"
        sides = ", ".join(f"{k}={l.label(v)}" for k, v in self.side_values.items())
        which = "inequality fails, condition holds" if self.cond_holds else "condition fails, inequality holds"
        return f"{self.model.describe()}: {which} at {values}" + (f" ({sides})" if sides else "")

    def to_json(self):
        l = self.model.lattice
        return {
            "model": self.model.id,
            "relation": self.model.relation.to_json(),
            "poset": l.base.to_json(),
            "ineq_holds": self.ineq_holds,
            "cond_holds": self.cond_holds,
            "assignment": {k: l.element_names(v) for k, v in self.assignment.items()},
            "side_values": {k: l.element_names(v) for k, v in self.side_values.items()},
        }


@dataclass
class EquivalenceReport:
    ineq: object
    cond: object
    checked: int
    counterexample: Counterexample = None

    @property
    def equivalent(self):
        return self.counterexample is None

    @property
    def verdict(self):
        return "Equivalent" if self.equivalent else "Counterexample"

    def lines(self):
        out = [f"{print_inequality(self.ineq)}  vs  {print_condition(self.cond)}",
               f"  {self.verdict} ({self.checked} models checked)"]
        if self.counterexample is not None:
            out.append(f"  {self.counterexample.describe()}")
        return out

    def to_json(self):
        return {
            "inequality": print_inequality(self.ineq),
            "condition": print_condition(self.cond),
            "verdict": self.verdict,
            "checked": self.checked,
            "counterexample": None if self.equivalent else self.counterexample.to_json(),
        }


def _check_model(model, ineq, cond, settings):
    failure = inequality_counterexample(model.relation, ineq, grid_limit=settings.grid_limit)
    witness = condition_counterexample(model.relation, cond, depth_limit=settings.depth_limit,
                                       grid_limit=settings.grid_limit)
    ineq_holds, cond_holds = failure is None, witness is None
    if ineq_holds == cond_holds:
        return None
    if not ineq_holds:
        return Counterexample(model, False, True, dict(failure.assignment),
                              {"lhs": failure.lhs, "rhs": failure.rhs})
    return Counterexample(model, True, False, dict(witness))


def reverify(counterexample, ineq, cond, settings=None):
    """True iff re-evaluating the witness reproduces the disagreement."""
    settings = settings or config.load_settings()
    model = counterexample.model.relation
    if not counterexample.ineq_holds:
        again = inequality_counterexample(model, ineq, counterexample.assignment, settings.grid_limit)
        return again is not None and eval_condition(model, cond, depth_limit=settings.depth_limit,
                                                    grid_limit=settings.grid_limit)
    stripped = strip_universals(cond, counterexample.assignment)
    fails_here = not eval_condition(model, stripped, counterexample.assignment, settings.depth_limit,
                                    settings.grid_limit)
    return fails_here and inequality_counterexample(model, ineq, grid_limit=settings.grid_limit) is None


def check_equivalence(ineq, cond, corpus, settings=None):
    """
    Compare an inequality with a condition on every model of a corpus.

    Args:
        ineq: Inequality
        cond: condition
        corpus: ModelCorpus
        settings: caps and worker count (load_settings() when omitted)

    Returns:
        EquivalenceReport; its counterexample is the first disagreement in
        corpus order.
    """
    settings = settings or config.load_settings()
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        results = list(pool.map(lambda m: _check_model(m, ineq, cond, settings), corpus.models))
    for model, result in zip(corpus.models, results):
        logger.debug("model %s: %s", model.id, "agree" if result is None else "disagree")
        if result is not None:
            return EquivalenceReport(ineq, cond, len(corpus), result)
    return EquivalenceReport(ineq, cond, len(corpus))


# ============================================================
# REGRESSION SUITE
# ============================================================
@dataclass
class SuiteEntry:
    name: str
    ineq: object
    cond: object


def load_suite(doc_or_path):
    """
    Parse a regression suite: [{"name": ..., "ineq": ..., "cond": ...}, ...].

    Raises:
        SuiteError: not a list, missing keys, or an entry that does not parse
    """
    doc = config.load_json(doc_or_path) if isinstance(doc_or_path, str) else doc_or_path
    if not isinstance(doc, list):
        raise SuiteError("Regression suite must be a JSON list of {name, ineq, cond} objects")
    entries = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or not {"name", "ineq", "cond"} <= set(item):
            raise SuiteError(f"Suite entry {i} needs 'name', 'ineq' and 'cond'")
        try:
            entries.append(SuiteEntry(item["name"], parse_inequality(item["ineq"]),
                                      parse_condition(item["cond"])))
        except InputError as e:
            raise SuiteError(f"Suite entry {item['name']!r}: {e}")
    return entries


@dataclass
class PairResult:
    name: str
    report: EquivalenceReport = None
    derived: EquivalenceReport = None
    error: str = None

    @property
    def passed(self):
        if self.error is not None:
            return False
        return self.report.equivalent and (self.derived is None or self.derived.equivalent)

    def line(self):
        if self.error is not None:
            return f"FAIL {self.name}: {self.error}"
        if not self.report.equivalent:
            return f"FAIL {self.name}: {self.report.counterexample.describe()}"
        if self.derived is not None and not self.derived.equivalent:
            return f"FAIL {self.name} (derived condition): {self.derived.counterexample.describe()}"
        return f"PASS {self.name}"


@dataclass
class RegressionSummary:
    results: list = field(default_factory=list)
    models: int = 0

    @property
    def failed(self):
        return [r for r in self.results if not r.passed]

    @property
    def ok(self):
        return not self.failed

    def lines(self):
        out = [r.line() for r in self.results]
        out.append(f"{len(self.results)} checked, {len(self.failed)} failed ({self.models} models)")
        return out

    def to_json(self):
        return {
            "checked": len(self.results),
            "failed": [r.name for r in self.failed],
            "models": self.models,
            "results": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "error": r.error,
                    "report": r.report.to_json() if r.report else None,
                    "derived": r.derived.to_json() if r.derived else None,
                }
                for r in self.results
            ],
        }


def run_regression(suite=None, corpus=None, settings=None, with_correspond=False):
    """
    Check every suite pair on a corpus.

    Args:
        suite: path, parsed list, or None for the shipped suite
        corpus: ModelCorpus (built from settings when omitted)
        settings: Settings
        with_correspond: also certify correspond(ineq) against ineq

    Returns:
        RegressionSummary

    Raises:
        LimitExceeded: a pair needs more than the configured caps allow
    """
    settings = settings or config.load_settings()
    entries = load_suite(config.data_path("regression_suite.json") if suite is None else suite)
    summary = RegressionSummary()
    if not entries:
        return summary
    corpus = corpus if corpus is not None else build_corpus(settings)
    summary.models = len(corpus)
    for entry in entries:
        result = PairResult(entry.name)
        try:
            result.report = check_equivalence(entry.ineq, entry.cond, corpus, settings)
            if with_correspond:
                derived, _ = correspond(entry.ineq)
                result.derived = check_equivalence(entry.ineq, derived, corpus, settings)
        except LimitExceeded:
            raise
        except SubkitError as e:
            result.error = str(e)
        logger.debug("%s", result.line())
        summary.results.append(result)
    return summary
