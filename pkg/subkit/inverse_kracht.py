"""
Kracht shapes and the inverse direction: condition -> inequality.

A condition is a Kracht formula when its variables can be given roles

    v  variables of the target inequality
    a  positive variables eliminated with  forall a (a <= x ==> a <= y)  iff  x <= y
    b  negative variables, dually
    c  universals of the antecedent eliminated by substitution
    d  existentials of the consequent eliminated by substitution

so that the nine shape clauses hold (see CLAUSES). Roles are found by
search, fewest non-v roles first, or fixed with a role map such as
"d:a,e:d,f:d".
"""

import itertools
import logging
from dataclasses import dataclass, field

from subkit.correspond import QuasiInequality, RewriteTrace, TraceStep, is_trivial, simplify_lattice
from subkit.syntax import (
    BOT, TOP, And, Bot, CoImp, Conj, Exists, ForAll, Imp, Implies, Inequality, Leq, Neg, Or,
    Prec, RestrictedExists, RestrictedForAll, Sim, Top, Var, atom_variables, children,
    fold_derived, print_atom, print_condition, print_inequality, print_term, restrictor_atom,
    substitute_atom, term_variables,
)
from subkit.utilities import config
from subkit.utilities.errors import InputError, LimitExceeded, ShapeError, StuckMerge

logger = logging.getLogger(__name__)

ROLES = ("a", "b", "c", "v")
CLAUSES = {
    1: "restrictors use <=, >=, prec, succ, <=or, <=and, <=coimp or >=imp",
    2: "restricting terms are a, b, c variables (antecedent) or a, b, d variables (consequent)",
    3: "forall prefix, antecedent, exists prefix, consequent of relational atoms",
    4: "a variables occur only positively, b variables only negatively",
    5: "every c variable is uniform in the antecedent, every d variable in the consequent",
    6: "c and d variables restrict with the polarity they have in the body",
    7: "occurrences of a, b, c, d variables in the body are displayable",
    8: "each antecedent atom has exactly one occurrence of an a, b or c variable",
    9: "each consequent atom has at most one d variable; repeated a/b occurrences meet at +/\\ or -\\/",
}


# ============================================================
# SHAPE
# ============================================================
@dataclass
class Restricting:
    """A restricting inequality, explicit (restricted quantifier) or read off an atom."""

    kind: str
    restricted: tuple
    target: object
    atom: object
    part: str
    explicit: bool = False


@dataclass
class ClauseViolation:
    clause: int
    message: str
    witness: str = ""

    def describe(self):
        tail = f" [{self.witness}]" if self.witness else ""
        return f"clause {self.clause}: {self.message}{tail}"


@dataclass
class KrachtFormula:
    condition: object
    roles: dict
    universals: list
    existentials: list
    restrictors: list
    eta: list
    zeta: list
    extension: list = field(default_factory=list)

    def role_vars(self, role):
        return [v for v in self.universals + self.existentials if self.roles.get(v) == role]

    def describe_roles(self):
        return ", ".join(f"{v}:{self.roles[v]}" for v in self.universals + self.existentials)


@dataclass
class ShapeReport:
    condition: object
    formula: KrachtFormula = None
    violations: list = field(default_factory=list)
    roles: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.formula is not None and not self.violations

    def lines(self):
        head = print_condition(self.condition)
        if self.ok:
            out = [f"{head} : Kracht", f"  roles: {self.formula.describe_roles()}"]
            out += [f"  restricting: {print_atom(r.atom)}" for r in self.formula.restrictors]
            out += [f"  note: {note}" for note in self.formula.extension]
            return out
        out = [f"{head} : NOT Kracht"]
        if self.roles:
            out.append("  closest roles: " + ", ".join(f"{k}:{v}" for k, v in self.roles.items()))
        out += [f"  {v.describe()}" for v in self.violations]
        return out

    def to_json(self):
        return {
            "condition": print_condition(self.condition),
            "kracht": self.ok,
            "roles": dict(self.formula.roles if self.ok else self.roles),
            "restricting": [print_atom(r.atom) for r in self.formula.restrictors] if self.ok else [],
            "extension": list(self.formula.extension) if self.ok else [],
            "violations": [
                {"clause": v.clause, "message": v.message, "witness": v.witness} for v in self.violations
            ],
        }


def parse_roles(text):
    """'d:a,e:d' -> {'d': 'a', 'e': 'd'}"""
    roles = {}
    for item in filter(None, (s.strip() for s in (text or "").split(","))):
        name, sep, role = item.partition(":")
        name, role = name.strip(), role.strip()
        if not sep or not name or role not in ("a", "b", "c", "d", "v"):
            raise InputError(f"Bad role entry {item!r}; expected name:role with role in a,b,c,d,v")
        roles[name] = role
    return roles


def _prenex(cond):
    """Split cond into universals, antecedent, existentials, consequent; None if it has another shape."""
    universals, existentials = [], []
    ante, cons = [], []
    node = cond
    while isinstance(node, (ForAll, RestrictedForAll)):
        if isinstance(node, ForAll):
            universals.append(node.var)
        else:
            universals.extend(node.vars)
            atom = restrictor_atom(node.vars, node.restrictor)
            ante.append(Restricting(node.restrictor.kind, tuple(node.vars), node.restrictor.target,
                                    atom, "hyp", explicit=True))
        node = node.body
    body_ante = []
    if isinstance(node, Implies):
        body_ante = list(node.antecedent.atoms)
        node = node.consequent
    while isinstance(node, (Exists, RestrictedExists)):
        if isinstance(node, Exists):
            existentials.append(node.var)
        else:
            existentials.extend(node.vars)
            atom = restrictor_atom(node.vars, node.restrictor)
            cons.append(Restricting(node.restrictor.kind, tuple(node.vars), node.restrictor.target,
                                    atom, "goal", explicit=True))
        node = node.body
    if not isinstance(node, Conj):
        return None
    return universals, ante, body_ante, existentials, cons, list(node.atoms)


# ------------------------------------------------------------
# occurrences, polarity, display
# ------------------------------------------------------------
def _occurrences(atom, name):
    """(sign, side, path) of every occurrence; lhs is +, argument 1 of -> and >- flips."""
    out = []

    def walk(t, sign, side, path):
        if isinstance(t, Var):
            if t.name == name:
                out.append((sign, side, path))
            return
        flips = {Imp: (True, False), CoImp: (True, False), Neg: (True,), Sim: (True,)}.get(type(t))
        for i, c in enumerate(children(t)):
            s = ("-" if sign == "+" else "+") if flips and flips[i] else sign
            walk(c, s, side, path + (i,))

    walk(atom.lhs, "+", "lhs", ())
    walk(atom.rhs, "-", "rhs", ())
    return out


def _signs(atom, name):
    return {sign for sign, _, _ in _occurrences(atom, name)}


def _flat(t, kind):
    if isinstance(t, kind):
        return _flat(t.left, kind) + _flat(t.right, kind)
    return [t]


def _fold(parts, kind, unit):
    if not parts:
        return unit
    out = parts[0]
    for p in parts[1:]:
        out = kind(out, p)
    return out


def _display(atom, name, positive):
    """
    Rewrite atom so that name stands alone on one side.

    Args:
        atom: Leq or Prec over lattice terms and slanted terms
        name: variable to display
        positive: display on the left (name <= ...) or on the right (... <= name)

    Returns:
        list of equivalent atoms, the displayed ones first, or None when
        the occurrence cannot be displayed
    """
    x = Var(name)
    kind = type(atom)
    if positive:
        disjuncts = _flat(atom.lhs, Or)
        if len(disjuncts) > 1:
            parts = [kind(dj, atom.rhs) for dj in disjuncts]
            return _display_parts(parts, name, positive)
        if name in term_variables(atom.rhs):
            return None
        if atom.lhs == x:
            return [atom if kind is Leq else Leq(x, Imp(TOP, atom.rhs))]
        conjuncts = _flat(atom.lhs, And)
        if kind is Prec and conjuncts.count(x) == 1:
            rest = [c for c in conjuncts if c != x]
            if any(name in term_variables(c) for c in rest):
                return None
            return [Leq(x, Imp(_fold(rest, And, TOP), atom.rhs))]
        return None

    conjuncts = _flat(atom.rhs, And)
    if len(conjuncts) > 1:
        parts = [kind(atom.lhs, cj) for cj in conjuncts]
        return _display_parts(parts, name, positive)
    if name in term_variables(atom.lhs):
        return None
    if atom.rhs == x:
        return [atom if kind is Leq else Leq(CoImp(BOT, atom.lhs), x)]
    disjuncts = _flat(atom.rhs, Or)
    if kind is Prec and disjuncts.count(x) == 1:
        rest = [d for d in disjuncts if d != x]
        if any(name in term_variables(d) for d in rest):
            return None
        return [Leq(CoImp(_fold(rest, Or, BOT), atom.lhs), x)]
    return None


def _display_parts(parts, name, positive):
    shown, others = [], []
    for part in parts:
        if name not in atom_variables(part):
            others.append(part)
            continue
        displayed = _display(part, name, positive)
        if displayed is None:
            return None
        shown.extend(displayed)
    return shown + others


def _first_common_ancestor_ok(atom, occ1, occ2):
    (_, side1, p1), (_, side2, p2) = occ1, occ2
    if side1 != side2:
        return False
    k = 0
    while k < min(len(p1), len(p2)) and p1[k] == p2[k]:
        k += 1
    node = atom.lhs if side1 == "lhs" else atom.rhs
    for i in p1[:k]:
        node = children(node)[i]
    sign = "+" if side1 == "lhs" else "-"
    return (sign == "+" and isinstance(node, And)) or (sign == "-" and isinstance(node, Or))


# ------------------------------------------------------------
# restricting inequalities read off plain atoms
# ------------------------------------------------------------
def _restrictor_patterns(atom):
    """(kind, restricted names, restricting term) readings of atom."""
    s, t = atom.lhs, atom.rhs
    out = []
    is_var = lambda u: isinstance(u, Var)
    if isinstance(atom, Prec):
        if is_var(s):
            out.append(("prec", (s.name,), t))
        if is_var(t):
            out.append(("succ", (t.name,), s))
        if is_var(s) and isinstance(t, Or) and is_var(t.left):
            out.append(("lecoimp", (t.left.name, s.name), t.right))
        if is_var(t) and isinstance(s, And) and is_var(s.right):
            out.append(("geimp", (s.right.name, t.name), s.left))
    else:
        if is_var(s):
            out.append(("le", (s.name,), t))
        if is_var(t):
            out.append(("ge", (t.name,), s))
        if isinstance(t, Or) and is_var(t.left) and is_var(t.right):
            out.append(("leor", (t.left.name, t.right.name), s))
        if isinstance(s, And) and is_var(s.left) and is_var(s.right):
            out.append(("leand", (s.left.name, s.right.name), t))
    return out


def _restricting_ok(target, roles, allowed, extension):
    """None if not allowed, else a flag: '' (strict) or the extension note."""
    if isinstance(target, Var):
        role = roles.get(target.name, "v")
        if role in allowed:
            return ""
        if extension and role == "v":
            return f"v variable {target.name} used as restricting term"
        return None
    if extension and isinstance(target, (Bot, Top)):
        return f"constant {'top' if isinstance(target, Top) else 'bot'} used as restricting term"
    return None


# ------------------------------------------------------------
# clause checks for one role assignment
# ------------------------------------------------------------
class _Candidate:
    def __init__(self, cond, shape, roles, extension):
        self.cond = cond
        self.universals, explicit_ante, body_ante, self.existentials, explicit_cons, body_cons = shape
        self.roles = dict(roles)
        self.extension = extension
        self.notes = []
        self.violations = []
        self.restrictors = list(explicit_ante) + list(explicit_cons)
        self.eta = self._pick_restrictors(body_ante, "hyp", "c", ("a", "b", "c"))
        self.zeta = self._pick_restrictors(body_cons, "goal", "d", ("a", "b", "d"))

    def _pick_restrictors(self, atoms, part, role, allowed):
        restricted = {n for r in self.restrictors for n in r.restricted}
        body, taken = [], []
        for atom in atoms:
            chosen = None
            for kind, names, target in _restrictor_patterns(atom):
                if len(set(names)) != len(names) or any(n in restricted for n in names):
                    continue
                if any(self.roles.get(n, "v") != role for n in names):
                    continue
                if isinstance(target, Var) and target.name in names:
                    continue
                if _restricting_ok(target, self.roles, allowed, self.extension) is None:
                    continue
                chosen = Restricting(kind, names, target, atom, part)
                break
            if chosen is None:
                body.append(atom)
            else:
                restricted.update(chosen.restricted)
                taken.append(chosen)
        self.restrictors.extend(taken)
        return body

    def fail(self, clause, message, witness=""):
        self.violations.append(ClauseViolation(clause, message, witness))

    def check(self):
        roles = self.roles
        for r in self.restrictors:
            role = "c" if r.part == "hyp" else "d"
            if r.kind not in ("le", "ge", "prec", "succ", "leor", "leand", "lecoimp", "geimp"):
                self.fail(1, f"restrictor {r.kind} not allowed", print_atom(r.atom))
            if any(roles.get(n, "v") != role for n in r.restricted):
                self.fail(1, f"restricted variables must be {role} variables", print_atom(r.atom))
            allowed = ("a", "b", "c") if r.part == "hyp" else ("a", "b", "d")
            flag = _restricting_ok(r.target, roles, allowed, self.extension)
            if flag is None:
                self.fail(2, "restricting term has the wrong role", print_atom(r.atom))
            elif flag:
                self.notes.append(flag)

        all_atoms = [r.atom for r in self.restrictors] + self.eta + self.zeta
        for name in self.universals + self.existentials:
            role = roles.get(name, "v")
            signs = set().union(*(_signs(a, name) for a in all_atoms)) if all_atoms else set()
            if role == "a" and "-" in signs:
                self.fail(4, f"a variable {name} occurs negatively", name)
            if role == "b" and "+" in signs:
                self.fail(4, f"b variable {name} occurs positively", name)

        for name, body, role in [(n, self.eta, "c") for n in self.universals] + \
                                [(n, self.zeta, "d") for n in self.existentials]:
            if roles.get(name, "v") != role:
                continue
            signs = set().union(*(_signs(a, name) for a in body)) if body else set()
            if len(signs) > 1:
                self.fail(5, f"{role} variable {name} is not uniform", name)
            for r in self.restrictors:
                if isinstance(r.target, Var) and r.target.name == name and signs:
                    if _signs(r.atom, name) != signs:
                        self.fail(6, f"{name} restricts with the opposite polarity", print_atom(r.atom))

        special = {n for n in self.universals + self.existentials if roles.get(n, "v") != "v"}
        for atom in self.eta + self.zeta:
            for name in special & set(atom_variables(atom)):
                for sign, _, _ in _occurrences(atom, name):
                    if _display(atom, name, sign == "+") is None:
                        self.fail(7, f"{name} is not displayable", print_atom(atom))
                        break

        for atom in self.eta:
            count = sum(len(_occurrences(atom, n)) for n in self.universals
                        if roles.get(n, "v") in ("a", "b", "c"))
            if count != 1:
                self.fail(8, f"{count} occurrences of a, b, c variables", print_atom(atom))

        for atom in self.zeta:
            ds = sum(len(_occurrences(atom, n)) for n in self.existentials)
            if ds > 1:
                self.fail(9, f"{ds} occurrences of d variables", print_atom(atom))
            for name in self.universals:
                if roles.get(name, "v") not in ("a", "b"):
                    continue
                occ = _occurrences(atom, name)
                for o1, o2 in itertools.combinations(occ, 2):
                    if not _first_common_ancestor_ok(atom, o1, o2):
                        self.fail(9, f"repeated {name} not below +/\\ or -\\/", print_atom(atom))
                        break
        return self

    def formula(self):
        return KrachtFormula(self.cond, self.roles, list(self.universals), list(self.existentials),
                             self.restrictors, self.eta, self.zeta, sorted(set(self.notes)))


def _role_options(shape, fixed):
    universals, explicit_ante, body_ante, existentials, explicit_cons, body_cons = shape
    atoms = [r.atom for r in explicit_ante + explicit_cons] + body_ante + body_cons
    explicit = {n for r in explicit_ante for n in r.restricted}
    options = []
    for name in universals:
        if name in fixed:
            options.append([fixed[name]])
            continue
        if name in explicit:
            options.append(["c"])
            continue
        signs = set().union(*(_signs(a, name) for a in atoms)) if atoms else set()
        opts = [r for r in ROLES if not (r == "a" and "-" in signs) and not (r == "b" and "+" in signs)]
        options.append(opts)
    return options


def _assignments(universals, options):
    """Role assignments, fewest non-v roles first."""
    n = len(universals)
    forced = [i for i in range(n) if "v" not in options[i]]
    free = [i for i in range(n) if i not in forced]
    for k in range(len(free) + 1):
        for chosen in itertools.combinations(free, k):
            pools = []
            for i in range(n):
                if i in forced:
                    pools.append(options[i])
                elif i in chosen:
                    pools.append([r for r in options[i] if r != "v"])
                else:
                    pools.append(["v"])
            for combo in itertools.product(*pools):
                yield dict(zip(universals, combo))


def validate_shape(cond, roles=None):
    """
    Look for a role assignment making cond a Kracht formula.

    Args:
        cond: condition (parsed)
        roles: optional name -> role map fixing some roles

    Returns:
        ShapeReport; report.formula is the KrachtFormula when report.ok,
        otherwise report.violations lists the clauses broken by the closest
        candidate (fewest violations).
    """
    roles = dict(roles or {})
    shape = _prenex(cond)
    if shape is None:
        return ShapeReport(cond, violations=[ClauseViolation(3, CLAUSES[3], print_condition(cond))])
    universals, existentials = shape[0], shape[3]
    if len(universals) + len(existentials) > config.ROLE_VARIABLE_LIMIT:
        raise LimitExceeded(
            f"Role search over {len(universals) + len(existentials)} variables, "
            f"limit is {config.ROLE_VARIABLE_LIMIT}"
        )
    for name, role in roles.items():
        if name in existentials and role != "d":
            return ShapeReport(cond, violations=[ClauseViolation(1, f"existential {name} must be a d variable", name)])
        if name in universals and role == "d":
            return ShapeReport(cond, violations=[ClauseViolation(1, f"universal {name} cannot be a d variable", name)])

    best = None
    options = _role_options(shape, roles)
    for extension in (False, True):
        for assignment in _assignments(universals, options):
            assignment.update({n: "d" for n in existentials})
            cand = _Candidate(cond, shape, assignment, extension).check()
            if not cand.violations:
                logger.debug("Kracht roles for %s: %s", print_condition(cond), assignment)
                return ShapeReport(cond, cand.formula(), [], cand.roles)
            if best is None or len(cand.violations) < len(best.violations):
                best = cand
    if best is None:
        return ShapeReport(cond, violations=[ClauseViolation(3, "no role assignment to try")])
    return ShapeReport(cond, None, best.violations, best.roles)


# ============================================================
# INVERSION
# ============================================================
class _Inverter:
    def __init__(self, kf):
        self.kf = kf
        self.trace = RewriteTrace()
        hyps = [r.atom for r in kf.restrictors if r.part == "hyp"] + list(kf.eta)
        goals = [r.atom for r in kf.restrictors if r.part == "goal"] + list(kf.zeta)
        self.state = QuasiInequality(tuple(kf.universals), tuple(hyps),
                                     tuple(kf.existentials), tuple(goals))

    def record(self, rule, law, before, after):
        step = TraceStep(rule, law, before, after, state=self.state.text())
        self.trace.steps.append(step)
        logger.debug("%s", step.line())

    def _directions(self, name):
        role = self.kf.roles.get(name, "v")
        return {"a": ["upper"], "b": ["lower"]}.get(role, ["upper", "lower"])

    def _attempt(self, name, direction):
        """Eliminate name by substituting its merged bound; None if the shape does not allow it."""
        universal = name in self.state.universals
        bound_part = "hyp" if universal else "goal"
        other_part = "goal" if universal else "hyp"
        bound_sign = "+" if direction == "upper" else "-"
        other_sign = "-" if direction == "upper" else "+"
        positive = direction == "upper"
        if not universal and any(name in atom_variables(a) for a in self.state.hyps):
            return None

        bounds, kept, displays = [], [], []
        for atom in self.state.atoms(bound_part):
            signs = _signs(atom, name)
            if not signs:
                kept.append(atom)
            elif signs == {other_sign}:
                kept.append(atom)
            elif signs == {bound_sign}:
                shown = _display(atom, name, positive)
                if shown is None:
                    return None
                for part in shown:
                    if name not in atom_variables(part):
                        kept.append(part)
                    elif positive and part.lhs == Var(name) and name not in term_variables(part.rhs):
                        bounds.append(part.rhs)
                    elif not positive and part.rhs == Var(name) and name not in term_variables(part.lhs):
                        bounds.append(part.lhs)
                    else:
                        return None
                displays.append((atom, shown))
            else:
                return None

        shaped = []
        for atom in self.state.atoms(other_part):
            signs = _signs(atom, name)
            if signs and signs != {bound_sign}:
                return None
            shown = _display(atom, name, positive) if signs else None
            if shown is not None and len(shown) == 1:
                displays.append((atom, shown))
                shaped.append(shown[0])
            else:
                shaped.append(atom)
        return bounds, kept, shaped, displays

    def eliminate(self, name):
        for direction in self._directions(name):
            found = self._attempt(name, direction)
            if found is None:
                continue
            bounds, kept, shaped, displays = found
            for before, after in displays:
                if [before] != after:
                    law = "residuation of ->" if direction == "upper" else "residuation of >-"
                    self.record("display", law, print_atom(before), " & ".join(print_atom(a) for a in after))
            if direction == "upper":
                value = _fold(bounds, And, TOP)
            else:
                value = _fold(bounds, Or, BOT)
            if len(bounds) > 1:
                self.record("merge", "meet of upper bounds" if direction == "upper" else "join of lower bounds",
                            " & ".join(print_term(b) for b in bounds), print_term(value))
            universal = name in self.state.universals
            bound_part = "hyp" if universal else "goal"
            new_bound = [substitute_atom(a, {name: value}) for a in kept]
            new_other = [substitute_atom(a, {name: value}) for a in shaped]
            hyps, goals = (new_bound, new_other) if universal else (new_other, new_bound)
            before = self.state.text()
            self.state = QuasiInequality(
                tuple(v for v in self.state.universals if v != name),
                tuple(hyps),
                tuple(v for v in self.state.existentials if v != name),
                tuple(goals),
            )
            law = "Ackermann elimination" if universal else "compactness"
            self.record("eliminate", law, f"{name} := {print_term(value)}", self.state.text())
            logger.debug("eliminated %s from %s", name, before)
            return True
        return False

    def blocking_atom(self, names):
        for atom in self.state.hyps + self.state.goals:
            if set(atom_variables(atom)) & set(names):
                return atom
        return (self.state.hyps + self.state.goals or (None,))[0]

    def run(self):
        kf = self.kf
        pending = list(reversed(kf.role_vars("d"))) + kf.role_vars("c") + \
            [v for v in kf.universals if kf.roles.get(v) in ("a", "b")]
        while pending:
            for name in pending:
                if self.eliminate(name):
                    pending.remove(name)
                    break
            else:
                atom = self.blocking_atom(pending)
                raise StuckMerge(
                    f"No displayable side to eliminate {', '.join(pending)} at {print_atom(atom)}",
                    atom, self.trace,
                )

        goals = [a for a in self.state.goals if not is_trivial(a)]
        if self.state.hyps:
            atom = self.state.hyps[0]
            raise StuckMerge(f"Antecedent atom {print_atom(atom)} survives elimination", atom, self.trace)
        if len(goals) != 1:
            atom = goals[1] if goals else None
            raise StuckMerge(f"{len(goals)} consequent atoms remain; expected one inequality", atom, self.trace)
        goal = goals[0]
        if isinstance(goal, Prec):
            ineq_atom = Leq(goal.lhs, Imp(TOP, goal.rhs))
            self.record("unfold", "a prec b iff a <= top -> b", print_atom(goal), print_atom(ineq_atom))
            goal = ineq_atom
        ineq = Inequality(fold_derived(simplify_lattice(goal.lhs)),
                          fold_derived(simplify_lattice(goal.rhs)))
        if print_inequality(ineq) != print_atom(goal):
            self.record("fold", "definitions of neg and sim", print_atom(goal), print_inequality(ineq))
        return ineq


def invert(kf):
    """
    Inequality equivalent to a Kracht formula.

    Args:
        kf: KrachtFormula, or a ShapeReport that is ok

    Returns:
        (Inequality, RewriteTrace)

    Raises:
        ShapeError: given a report that is not ok
        StuckMerge: some variable could not be displayed and eliminated
    """
    if isinstance(kf, ShapeReport):
        if not kf.ok:
            raise ShapeError(
                f"{print_condition(kf.condition)} is not a Kracht formula: "
                + "; ".join(v.describe() for v in kf.violations),
                kf.violations,
            )
        kf = kf.formula
    inverter = _Inverter(kf)
    ineq = inverter.run()
    logger.debug("inverse of %s: %s", print_condition(kf.condition), print_inequality(ineq))
    return ineq, inverter.trace


def invert_condition(cond, roles=None):
    """validate_shape followed by invert."""
    return invert(validate_shape(cond, roles))
