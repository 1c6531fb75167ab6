"""
Correspondence engine: analytic inequality -> first-order condition on ≺.

The working state is a quasi-inequality

    forall U ( H ==> exists E ( G ) )

with atoms s <= t and s prec t whose terms may still contain slanted
connectives. Starting from the goal [lhs <= rhs], rules are tried in a
fixed priority order, hypotheses before goals and left to right:

    preprocess   expand neg/sim, distribute -> and >- over meets and joins
    approximate  lhs <= rhs  ~>  d <= lhs ==> d <= rhs   (once, if lhs is slanted)
    split        x <= a /\\ b, a \\/ b <= x, x prec a /\\ b, a \\/ b prec x
    residuate    x <= a -> b  ~>  a /\\ x prec b ;  a >- b <= x  ~>  b prec a \\/ x
    flatten      name the leftmost maximal slanted subterm by a fresh variable
    eliminate    lattice identities, monotone elimination, unused variables

Every application is recorded in a RewriteTrace that replay() re-runs.
"""

import itertools
import logging
from dataclasses import dataclass, field, replace

from subkit.analyticity import require_analytic
from subkit.syntax import (
    BOT, TOP, And, Bot, CoImp, Conj, Exists, ForAll, Imp, Implies, Leq, Or, Prec, Top, Var,
    atom_variables, children, expand_derived, has_slanted, inequality_variables,
    print_atom, print_condition, print_inequality, rebuild, substitute_atom, term_variables,
)
from subkit.utilities.errors import RuleSearchExhausted, TraceMismatch

logger = logging.getLogger(__name__)

MAX_STEPS = 500
FRESH_NAMES = "defghijklmnopqrstuvwxyz"


# ============================================================
# STATE AND TRACE
# ============================================================
@dataclass(frozen=True)
class QuasiInequality:
    universals: tuple
    hyps: tuple
    existentials: tuple
    goals: tuple

    def atoms(self, part):
        return self.hyps if part == "hyp" else self.goals

    def with_atoms(self, part, atoms):
        return replace(self, hyps=tuple(atoms)) if part == "hyp" else replace(self, goals=tuple(atoms))

    def used_names(self):
        names = set(self.universals) | set(self.existentials)
        for atom in self.hyps + self.goals:
            names.update(atom_variables(atom))
        return names

    def to_condition(self):
        goals = self.goals or (Leq(BOT, TOP),)
        body = Conj(tuple(goals))
        for name in reversed(self.existentials):
            body = Exists(name, body)
        if self.hyps:
            body = Implies(Conj(tuple(self.hyps)), body)
        for name in reversed(self.universals):
            body = ForAll(name, body)
        return body

    def text(self):
        return print_condition(self.to_condition())


# Reference code printed in brackets on every trace line, keyed by law.
# R1-R5 are the decomposition rules, E1-E5 the elimination rules.
LAW_REFS = {
    "definitions of neg and sim, distribution of -> and >-": "P",
    "approximation by elements below": "A",
    "universal approximation": "A'",
    "meet splitting": "R1",
    "join splitting": "R2",
    "residuation of ->": "R3",
    "residuation of >-": "R4",
    "open approximation": "R5",
    "closed approximation": "R5'",
    "lattice identities": "E1",
    "monotone elimination": "E2",
    "vacuous quantifiers": "E3",
    "Ackermann elimination": "E4",
    "compactness": "E5",
    "meet of upper bounds": "M",
    "join of lower bounds": "M'",
    "a prec b iff a <= top -> b": "U",
    "definitions of neg and sim": "D",
}


@dataclass
class TraceStep:
    rule: str
    law: str
    before: str
    after: str
    target: tuple = ()
    fresh: str = None
    state: str = ""

    @property
    def ref(self):
        return LAW_REFS.get(self.law, "?")

    def line(self):
        return f"RULE {self.rule} [{self.ref} {self.law}] : {self.before} ==> {self.after}"

    def to_json(self):
        return {"rule": self.rule, "ref": self.ref, "law": self.law, "before": self.before,
                "after": self.after, "target": list(self.target), "fresh": self.fresh,
                "state": self.state}


@dataclass
class RewriteTrace:
    steps: list = field(default_factory=list)

    def lines(self):
        return [s.line() for s in self.steps]

    def to_json(self):
        return [s.to_json() for s in self.steps]

    def __len__(self):
        return len(self.steps)


def _fresh(state, avoid=()):
    used = state.used_names() | set(avoid)
    for name in itertools.chain(FRESH_NAMES, (f"x{i}" for i in itertools.count(1))):
        if name not in used:
            return name


def _atoms_text(atoms):
    return " & ".join(print_atom(a) for a in atoms) if atoms else "true"


# ============================================================
# TERM REWRITES
# ============================================================
def _distribute(t):
    """-> over meets in its second and joins in its first argument; >- dually."""
    kids = children(t)
    if kids:
        t = rebuild(t, [_distribute(c) for c in kids])
    if isinstance(t, Imp):
        if isinstance(t.right, And):
            return And(_distribute(Imp(t.left, t.right.left)), _distribute(Imp(t.left, t.right.right)))
        if isinstance(t.left, Or):
            return And(_distribute(Imp(t.left.left, t.right)), _distribute(Imp(t.left.right, t.right)))
    if isinstance(t, CoImp):
        if isinstance(t.right, Or):
            return Or(_distribute(CoImp(t.left, t.right.left)), _distribute(CoImp(t.left, t.right.right)))
        if isinstance(t.left, And):
            return Or(_distribute(CoImp(t.left.left, t.right)), _distribute(CoImp(t.left.right, t.right)))
    return t


def simplify_lattice(t):
    """Unit, zero and idempotence laws for /\\ and \\/."""
    kids = [simplify_lattice(c) for c in children(t)]
    t = rebuild(t, kids) if kids else t
    if isinstance(t, And):
        if isinstance(t.left, Top) or t.left == t.right:
            return t.right
        if isinstance(t.right, Top):
            return t.left
        if isinstance(t.left, Bot) or isinstance(t.right, Bot):
            return BOT
    if isinstance(t, Or):
        if isinstance(t.left, Bot) or t.left == t.right:
            return t.right
        if isinstance(t.right, Bot):
            return t.left
        if isinstance(t.left, Top) or isinstance(t.right, Top):
            return TOP
    return t


def is_trivial(atom):
    """Atoms true in every subordination algebra by the axioms alone."""
    s, t = atom.lhs, atom.rhs
    if isinstance(s, Bot) or isinstance(t, Top):
        return True
    return isinstance(atom, Leq) and s == t


def _maximal_slanted(t, path=()):
    """Path to the leftmost subterm rooted in a slanted connective."""
    if isinstance(t, (Imp, CoImp)):
        return path
    for i, c in enumerate(children(t)):
        found = _maximal_slanted(c, path + (i,))
        if found is not None:
            return found
    return None


def _subterm(t, path):
    for i in path:
        t = children(t)[i]
    return t


def _replace_at(t, path, new):
    if not path:
        return new
    kids = list(children(t))
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], new)
    return rebuild(t, kids)


# ============================================================
# RULES
# ============================================================
# Each rule takes (state, target, fresh) and returns (state, before, after,
# law, fresh) or None when it does not apply at target.

def _rule_preprocess(state, target, fresh=None):
    new_goals = []
    for atom in state.goals:
        new_goals.append(type(atom)(_distribute(expand_derived(atom.lhs)),
                                    _distribute(expand_derived(atom.rhs))))
    if tuple(new_goals) == state.goals:
        return None
    return (state.with_atoms("goal", new_goals), _atoms_text(state.goals),
            _atoms_text(new_goals), "definitions of neg and sim, distribution of -> and >-", None)


def _rule_approximate(state, target, fresh=None):
    part, i = target
    atom = state.atoms(part)[i]
    if part != "goal" or not isinstance(atom, Leq) or not has_slanted(atom.lhs) or state.hyps:
        return None
    d = fresh or _fresh(state)
    new_state = QuasiInequality(
        state.universals + (d,),
        state.hyps + (Leq(Var(d), atom.lhs),),
        state.existentials,
        state.goals[:i] + (Leq(Var(d), atom.rhs),) + state.goals[i + 1:],
    )
    after = f"{print_atom(Leq(Var(d), atom.lhs))} ==> {print_atom(Leq(Var(d), atom.rhs))}"
    return new_state, print_atom(atom), after, "approximation by elements below", d


def _split_parts(atom):
    s, t = atom.lhs, atom.rhs
    if isinstance(t, And) and has_slanted(t):
        return [type(atom)(s, t.left), type(atom)(s, t.right)], "meet splitting"
    if isinstance(s, Or) and has_slanted(s):
        return [type(atom)(s.left, t), type(atom)(s.right, t)], "join splitting"
    return None, None


def _rule_split(state, target, fresh=None):
    part, i = target
    atoms = state.atoms(part)
    parts, law = _split_parts(atoms[i])
    if parts is None:
        return None
    new_atoms = atoms[:i] + tuple(parts) + atoms[i + 1:]
    return state.with_atoms(part, new_atoms), print_atom(atoms[i]), _atoms_text(parts), law, None


def _residual(atom):
    if not isinstance(atom, Leq):
        return None, None
    s, t = atom.lhs, atom.rhs
    if isinstance(t, Imp) and not has_slanted(s):
        lhs = s if isinstance(t.left, Top) else And(t.left, s)
        return Prec(lhs, t.right), "residuation of ->"
    if isinstance(s, CoImp) and not has_slanted(t):
        rhs = t if isinstance(s.left, Bot) else Or(s.left, t)
        return Prec(s.right, rhs), "residuation of >-"
    return None, None


def _rule_residuate(state, target, fresh=None):
    part, i = target
    atoms = state.atoms(part)
    new, law = _residual(atoms[i])
    if new is None:
        return None
    new_atoms = atoms[:i] + (new,) + atoms[i + 1:]
    return state.with_atoms(part, new_atoms), print_atom(atoms[i]), print_atom(new), law, None


def _flatten_site(atom):
    for side, polarity in (("lhs", "anti"), ("rhs", "mono")):
        term = getattr(atom, side)
        path = _maximal_slanted(term)
        if path is not None:
            return side, polarity, path, _subterm(term, path)
    return None


def _rule_flatten(state, target, fresh=None):
    part, i = target
    atoms = state.atoms(part)
    atom = atoms[i]
    site = _flatten_site(atom)
    if site is None:
        return None
    side, polarity, path, t = site
    # values of -> are approximated from below, values of >- from above
    direction = "lower" if isinstance(t, Imp) else "upper"
    bound_from_below = polarity == "mono"

    def renamed(name):
        term = _replace_at(getattr(atom, side), path, Var(name))
        return type(atom)(term, atom.rhs) if side == "lhs" else type(atom)(atom.lhs, term)

    if (direction == "lower") == bound_from_below:
        h = fresh or _fresh(state)
        bound = Leq(Var(h), t) if bound_from_below else Leq(t, Var(h))
        new_atoms = atoms[:i] + (renamed(h), bound) + atoms[i + 1:]
        if part == "hyp":
            new_state = replace(state.with_atoms(part, new_atoms), universals=state.universals + (h,))
        else:
            new_state = replace(state.with_atoms(part, new_atoms), existentials=state.existentials + (h,))
        law = "open approximation" if direction == "lower" else "closed approximation"
        return new_state, print_atom(atom), _atoms_text([renamed(h), bound]), law, h

    if part == "goal" and not set(term_variables(t)) & set(state.existentials):
        c = fresh or _fresh(state)
        bound = Leq(t, Var(c)) if bound_from_below else Leq(Var(c), t)
        new_goals = atoms[:i] + (renamed(c),) + atoms[i + 1:]
        new_state = QuasiInequality(state.universals + (c,), state.hyps + (bound,),
                                    state.existentials, new_goals)
        after = f"{print_atom(bound)} ==> {print_atom(renamed(c))}"
        return new_state, print_atom(atom), after, "universal approximation", c
    return None


def _rule_simplify(state, target, fresh=None):
    def clean(atoms):
        out = []
        for atom in atoms:
            atom = type(atom)(simplify_lattice(atom.lhs), simplify_lattice(atom.rhs))
            if not is_trivial(atom) and atom not in out:
                out.append(atom)
        return tuple(out)

    hyps, goals = clean(state.hyps), clean(state.goals)
    if (hyps, goals) == (state.hyps, state.goals):
        return None
    before = _atoms_text(state.hyps + state.goals)
    new_state = replace(state, hyps=hyps, goals=goals)
    return new_state, before, _atoms_text(hyps + goals), "lattice identities", None


def _occurrences(state, name):
    where = []
    for part in ("hyp", "goal"):
        for i, atom in enumerate(state.atoms(part)):
            if name in atom_variables(atom):
                where.append((part, i))
    return where


def _rule_ackermann(state, target, fresh=None):
    """A variable living in a single atom, on one side only, takes its best value."""
    (name,) = target
    where = _occurrences(state, name)
    if len(where) != 1:
        return None
    part, i = where[0]
    if (part == "hyp") != (name in state.universals):
        return None
    atom = state.atoms(part)[i]
    in_lhs = name in term_variables(atom.lhs)
    in_rhs = name in term_variables(atom.rhs)
    if in_lhs == in_rhs:
        return None
    value = BOT if in_lhs else TOP
    new = substitute_atom(atom, {name: value})
    new = type(new)(simplify_lattice(new.lhs), simplify_lattice(new.rhs))
    atoms = state.atoms(part)
    new_atoms = atoms[:i] + (() if is_trivial(new) else (new,)) + atoms[i + 1:]
    new_state = replace(
        state.with_atoms(part, new_atoms),
        universals=tuple(v for v in state.universals if v != name),
        existentials=tuple(v for v in state.existentials if v != name),
    )
    after = "true" if is_trivial(new) else print_atom(new)
    return new_state, print_atom(atom), after, "monotone elimination", None


def _rule_drop_unused(state, target, fresh=None):
    used = set()
    for atom in state.hyps + state.goals:
        used.update(atom_variables(atom))
    universals = tuple(v for v in state.universals if v in used)
    existentials = tuple(v for v in state.existentials if v in used)
    dropped = [v for v in state.universals + state.existentials if v not in used]
    if not dropped:
        return None
    new_state = replace(state, universals=universals, existentials=existentials)
    return new_state, ", ".join(dropped), "-", "vacuous quantifiers", None


RULES = {
    "preprocess": _rule_preprocess,
    "approximate": _rule_approximate,
    "split": _rule_split,
    "residuate": _rule_residuate,
    "flatten": _rule_flatten,
    "simplify": _rule_simplify,
    "ackermann": _rule_ackermann,
    "drop-unused": _rule_drop_unused,
}
DECOMPOSITION = ("split", "residuate", "flatten")


def _is_lattice_state(state):
    return not any(has_slanted(a.lhs) or has_slanted(a.rhs) for a in state.hyps + state.goals)


def _candidates(state):
    """Rule applications in priority order."""
    for rule in DECOMPOSITION:
        for part in ("hyp", "goal"):
            for i in range(len(state.atoms(part))):
                yield rule, (part, i)


def _elimination_candidates(state):
    yield "simplify", ("all",)
    for name in state.universals + state.existentials:
        yield "ackermann", (name,)
    yield "drop-unused", ("all",)


class _Engine:
    def __init__(self, ineq):
        self.trace = RewriteTrace()
        names = tuple(inequality_variables(ineq))
        self.state = QuasiInequality(names, (), (), (Leq(ineq.lhs, ineq.rhs),))

    def apply(self, rule, target, fresh=None):
        result = RULES[rule](self.state, target, fresh)
        if result is None:
            return False
        self.state, before, after, law, used = result
        step = TraceStep(rule, law, before, after, tuple(target), used, self.state.text())
        self.trace.steps.append(step)
        logger.debug("%s", step.line())
        return True

    def stuck(self, message):
        raise RuleSearchExhausted(f"{message}: {self.state.text()}", self.trace, self.state)

    def run(self):
        self.apply("preprocess", ("all",))
        self.apply("approximate", ("goal", 0))

        while not _is_lattice_state(self.state):
            if len(self.trace) > MAX_STEPS:
                self.stuck(f"no result after {MAX_STEPS} rule applications")
            if not any(self.apply(rule, target) for rule, target in _candidates(self.state)):
                self.stuck("no rule applies")

        progress = True
        while progress:
            progress = any(self.apply(rule, target)
                           for rule, target in _elimination_candidates(self.state))
        return self.state.to_condition()


def correspond(ineq):
    """
    First-order correspondent of an analytic inequality.

    Args:
        ineq: Inequality

    Returns:
        (condition, RewriteTrace)

    Raises:
        NonAnalyticError: some branch of the inequality is not good
        RuleSearchExhausted: the rules got stuck (carries trace and state)
    """
    require_analytic(ineq)
    engine = _Engine(ineq)
    cond = engine.run()
    logger.debug("correspondent of %s: %s", print_inequality(ineq), print_condition(cond))
    return cond, engine.trace


def replay(ineq, trace):
    """Re-apply a trace step by step; returns the resulting condition."""
    engine = _Engine(ineq)
    for k, step in enumerate(trace.steps):
        if not engine.apply(step.rule, step.target, step.fresh):
            raise TraceMismatch(f"step {k} ({step.rule}) does not apply during replay")
        if engine.state.text() != step.state:
            raise TraceMismatch(
                f"step {k} ({step.rule}) gave {engine.state.text()!r}, trace has {step.state!r}"
            )
    return engine.state.to_condition()
