"""
Object language, first-order conditions, parser, printer and evaluators.

Terms are built from variables, bot, top, /\\, \\/, -> (slanted implication),
>- (slanted co-implication), neg and sim. Conditions speak about the lattice
order and the subordination relation only:

    forall a. forall b. forall c. a prec b & b prec c ==> a prec c
    d /\\ a prec b \\/ c ==> exists e. exists f. d <= e \\/ f & e /\\ a prec b & a /\\ f prec c

Restricted quantifiers are written `forall y prec x.`, `exists y succ x.`,
`exists y <= x.`, `exists y >= x.` and, for pairs,
`exists (y1, y2) <=or x.` (also `<=and`, `<=coimp`, `>=imp`).
"""

import functools
import itertools
import logging
from dataclasses import dataclass

import numpy as np
from lark import Lark, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from subkit.utilities import config
from subkit.utilities.errors import ConditionError, InputError, LimitExceeded, ParseError

logger = logging.getLogger(__name__)


# ============================================================
# TERMS
# ============================================================
@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bot:
    pass


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Imp:
    left: object
    right: object


@dataclass(frozen=True)
class CoImp:
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Sim:
    arg: object


BOT = Bot()
TOP = Top()

BINARY = (And, Or, Imp, CoImp)
UNARY = (Neg, Sim)
SLANTED = (Imp, CoImp, Neg, Sim)


@dataclass(frozen=True)
class Inequality:
    lhs: object
    rhs: object


# ============================================================
# CONDITIONS
# ============================================================
RESTRICTOR_TOKENS = {
    "prec": "prec", "succ": "succ", "le": "<=", "ge": ">=",
    "leor": "<=or", "leand": "<=and", "lecoimp": "<=coimp", "geimp": ">=imp",
}
PAIR_RESTRICTORS = ("leor", "leand", "lecoimp", "geimp")


@dataclass(frozen=True)
class Restrictor:
    kind: str
    target: object


@dataclass(frozen=True)
class Leq:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Prec:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class Conj:
    atoms: tuple


@dataclass(frozen=True)
class Implies:
    antecedent: Conj
    consequent: object


@dataclass(frozen=True)
class ForAll:
    var: str
    body: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class RestrictedForAll:
    vars: tuple
    restrictor: Restrictor
    body: object


@dataclass(frozen=True)
class RestrictedExists:
    vars: tuple
    restrictor: Restrictor
    body: object


QUANTIFIERS = (ForAll, Exists, RestrictedForAll, RestrictedExists)


def restrictor_atom(names, restrictor):
    """The restricting inequality behind a restricted quantifier."""
    x = restrictor.target
    ys = [Var(n) for n in names]
    kind = restrictor.kind
    if kind in PAIR_RESTRICTORS and len(ys) != 2:
        raise ConditionError(f"Restrictor {RESTRICTOR_TOKENS[kind]} binds two variables, got {names}")
    if kind not in PAIR_RESTRICTORS and len(ys) != 1:
        raise ConditionError(f"Restrictor {RESTRICTOR_TOKENS.get(kind, kind)} binds one variable, got {names}")
    if kind == "prec":
        return Prec(ys[0], x)
    if kind == "succ":
        return Prec(x, ys[0])
    if kind == "le":
        return Leq(ys[0], x)
    if kind == "ge":
        return Leq(x, ys[0])
    if kind == "leor":
        return Leq(x, Or(ys[0], ys[1]))
    if kind == "leand":
        return Leq(And(ys[0], ys[1]), x)
    if kind == "lecoimp":
        return Prec(ys[1], Or(ys[0], x))
    if kind == "geimp":
        return Prec(And(x, ys[0]), ys[1])
    raise ConditionError(f"Unknown restrictor kind {kind!r}")


# ============================================================
# TERM UTILITIES
# ============================================================
def children(t):
    if isinstance(t, BINARY):
        return (t.left, t.right)
    if isinstance(t, UNARY):
        return (t.arg,)
    return ()


def rebuild(t, kids):
    if isinstance(t, BINARY):
        return type(t)(*kids)
    if isinstance(t, UNARY):
        return type(t)(kids[0])
    return t


def term_variables(t, acc=None):
    """Variable names of t in order of first appearance."""
    acc = [] if acc is None else acc
    if isinstance(t, Var):
        if t.name not in acc:
            acc.append(t.name)
    for c in children(t):
        term_variables(c, acc)
    return acc


def inequality_variables(ineq):
    return term_variables(ineq.rhs, term_variables(ineq.lhs))


def substitute(t, mapping):
    """Replace variables by terms; mapping is name -> term."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    kids = children(t)
    if not kids:
        return t
    return rebuild(t, [substitute(c, mapping) for c in kids])


def has_slanted(t):
    if isinstance(t, SLANTED):
        return True
    return any(has_slanted(c) for c in children(t))


def count_occurrences(t, name):
    if isinstance(t, Var):
        return int(t.name == name)
    return sum(count_occurrences(c, name) for c in children(t))


def expand_derived(t):
    """neg x -> x -> bot and sim x -> x >- top, everywhere."""
    if isinstance(t, Neg):
        return Imp(expand_derived(t.arg), BOT)
    if isinstance(t, Sim):
        return CoImp(expand_derived(t.arg), TOP)
    kids = children(t)
    return rebuild(t, [expand_derived(c) for c in kids]) if kids else t


def fold_derived(t):
    """x -> bot back to neg x and x >- top back to sim x."""
    kids = [fold_derived(c) for c in children(t)]
    t = rebuild(t, kids) if kids else t
    if isinstance(t, Imp) and isinstance(t.right, Bot):
        return Neg(t.left)
    if isinstance(t, CoImp) and isinstance(t.right, Top):
        return Sim(t.left)
    return t


def atom_terms(atom):
    return (atom.lhs, atom.rhs)


def atom_variables(atom, acc=None):
    acc = [] if acc is None else acc
    term_variables(atom.lhs, acc)
    term_variables(atom.rhs, acc)
    return acc


def substitute_atom(atom, mapping):
    return type(atom)(substitute(atom.lhs, mapping), substitute(atom.rhs, mapping))


# ============================================================
# CONDITION UTILITIES
# ============================================================
def bound_variables(cond):
    """All bound variable names, outermost first (duplicates kept)."""
    names = []
    node = cond
    while True:
        if isinstance(node, (ForAll, Exists)):
            names.append(node.var)
            node = node.body
        elif isinstance(node, (RestrictedForAll, RestrictedExists)):
            names.extend(node.vars)
            node = node.body
        elif isinstance(node, Implies):
            node = node.consequent
        else:
            return names


def condition_atoms(cond):
    """Every atom in reading order, including restricting inequalities."""
    out = []
    node = cond
    while True:
        if isinstance(node, (ForAll, Exists)):
            node = node.body
        elif isinstance(node, (RestrictedForAll, RestrictedExists)):
            out.append(restrictor_atom(node.vars, node.restrictor))
            node = node.body
        elif isinstance(node, Implies):
            out.extend(node.antecedent.atoms)
            node = node.consequent
        elif isinstance(node, Conj):
            out.extend(node.atoms)
            return out
        else:
            raise ConditionError(f"Unexpected condition node {node!r}")


def free_variables(cond):
    """Free variables in order of first appearance."""
    bound = set(bound_variables(cond))
    seen = []
    for atom in condition_atoms(cond):
        atom_variables(atom, seen)
    return [v for v in seen if v not in bound]


def universal_closure(cond, exclude=()):
    """Bind the free variables universally, outermost in order of appearance."""
    for name in reversed([v for v in free_variables(cond) if v not in exclude]):
        cond = ForAll(name, cond)
    return cond


def check_condition(cond):
    """Reject slanted connectives and variables bound twice."""
    for atom in condition_atoms(cond):
        for t in atom_terms(atom):
            if has_slanted(t):
                raise ConditionError(
                    f"Slanted connective in condition atom {print_atom(atom)}; "
                    f"conditions use only /\\, \\/, bot and top"
                )
    names = bound_variables(cond)
    for name in names:
        if names.count(name) > 1:
            raise ConditionError(f"Variable {name} is bound more than once")
    return cond


def condition_depth(cond):
    """Number of variables bound below the outermost universal block."""
    node = cond
    while isinstance(node, (ForAll, RestrictedForAll)):
        node = node.body
    return len(bound_variables(node))


# ============================================================
# PARSER
# ============================================================
GRAMMAR = r"""
start_term: term
start_ineq: term "<=" term
start_cond: quant* clause

?term: or_
     | or_ "->" imp_tail      -> t_imp
     | or_ ">-" or_           -> t_coimp
?imp_tail: or_
         | or_ "->" imp_tail  -> t_imp
?or_: and_
    | or_ "\\/" and_          -> t_or
?and_: unary
     | and_ "/\\" unary       -> t_and
?unary: "neg" unary           -> t_neg
      | "sim" unary           -> t_sim
      | constant
      | "(" term ")"
?constant: "bot"              -> t_bot
         | "top"              -> t_top
         | IDENT              -> t_var

quant: "forall" binder "."    -> q_forall
     | "exists" binder "."    -> q_exists
binder: IDENT                                     -> b_plain
      | IDENT restr_one constant                  -> b_one
      | "(" IDENT "," IDENT ")" restr_two constant -> b_two
restr_one: "prec"   -> r_prec
         | "succ"   -> r_succ
         | "<="     -> r_le
         | ">="     -> r_ge
restr_two: "<=or"    -> r_leor
         | "<=and"   -> r_leand
         | "<=coimp" -> r_lecoimp
         | ">=imp"   -> r_geimp

clause: conj
      | conj "==>" quant* conj -> c_implies
conj: atom ("&" atom)*
atom: term "<=" term           -> c_leq
    | term "prec" term         -> c_prec

IDENT: /[A-Za-z_][A-Za-z0-9_']*/

%import common.WS
%ignore WS
"""


class _ToAst(Transformer):
    """Turns lark trees into the frozen dataclass AST."""

    def start_term(self, kids):
        return kids[0]

    def start_ineq(self, kids):
        return Inequality(kids[0], kids[1])

    def start_cond(self, kids):
        *quants, body = kids
        return _wrap(quants, body)

    def t_imp(self, kids):
        return Imp(kids[0], kids[1])

    def t_coimp(self, kids):
        return CoImp(kids[0], kids[1])

    def t_or(self, kids):
        return Or(kids[0], kids[1])

    def t_and(self, kids):
        return And(kids[0], kids[1])

    def t_neg(self, kids):
        return Neg(kids[0])

    def t_sim(self, kids):
        return Sim(kids[0])

    def t_bot(self, kids):
        return BOT

    def t_top(self, kids):
        return TOP

    def t_var(self, kids):
        return Var(str(kids[0]))

    def q_forall(self, kids):
        return ("forall",) + kids[0]

    def q_exists(self, kids):
        return ("exists",) + kids[0]

    def b_plain(self, kids):
        return ((str(kids[0]),), None)

    def b_one(self, kids):
        return ((str(kids[0]),), Restrictor(kids[1], kids[2]))

    def b_two(self, kids):
        return ((str(kids[0]), str(kids[1])), Restrictor(kids[2], kids[3]))

    def r_prec(self, _):
        return "prec"

    def r_succ(self, _):
        return "succ"

    def r_le(self, _):
        return "le"

    def r_ge(self, _):
        return "ge"

    def r_leor(self, _):
        return "leor"

    def r_leand(self, _):
        return "leand"

    def r_lecoimp(self, _):
        return "lecoimp"

    def r_geimp(self, _):
        return "geimp"

    def clause(self, kids):
        return kids[0]

    def c_implies(self, kids):
        antecedent, *quants, consequent = kids
        return Implies(antecedent, _wrap(quants, consequent))

    def conj(self, kids):
        return Conj(tuple(kids))

    def c_leq(self, kids):
        return Leq(kids[0], kids[1])

    def c_prec(self, kids):
        return Prec(kids[0], kids[1])


def _wrap(quants, body):
    for kind, names, restrictor in reversed(quants):
        if restrictor is None:
            body = ForAll(names[0], body) if kind == "forall" else Exists(names[0], body)
        elif kind == "forall":
            body = RestrictedForAll(names, restrictor, body)
        else:
            body = RestrictedExists(names, restrictor, body)
    return body


_PARSER = Lark(GRAMMAR, parser="lalr", start=["start_term", "start_ineq", "start_cond"])


def _token_text(name):
    try:
        pattern = _PARSER.get_terminal(name).pattern
    except KeyError:
        return name
    return pattern.value if pattern.type == "str" else name


def _parse(text, start):
    try:
        tree = _PARSER.parse(text, start=start)
    except UnexpectedEOF as e:
        raise ParseError("Unexpected end of input", None, None,
                         {_token_text(n) for n in e.expected}) from None
    except UnexpectedToken as e:
        raise ParseError(f"Unexpected token {e.token!r}", e.line, e.column,
                         {_token_text(n) for n in e.expected}) from None
    except UnexpectedCharacters as e:
        raise ParseError(f"Unexpected character {text[e.pos_in_stream]!r}", e.line, e.column,
                         {_token_text(n) for n in (e.allowed or ())}) from None
    except UnexpectedInput as e:
        raise ParseError(str(e), getattr(e, "line", None), getattr(e, "column", None)) from None
    return _ToAst().transform(tree)


def parse_term(text):
    return _parse(text, "start_term")


def parse_inequality(text):
    return _parse(text, "start_ineq")


def parse_condition(text, close=True):
    """Parse a condition; free variables are closed universally unless close=False."""
    cond = check_condition(_parse(text, "start_cond"))
    return universal_closure(cond) if close else cond


# ============================================================
# PRINTER
# ============================================================
def _prec(t):
    if isinstance(t, (Imp, CoImp)):
        return 1
    if isinstance(t, Or):
        return 2
    if isinstance(t, And):
        return 3
    if isinstance(t, UNARY):
        return 4
    return 5


def print_term(t):
    """Text form with the fewest parentheses the grammar needs.

    Nested implications are always parenthesised.
    """
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Bot):
        return "bot"
    if isinstance(t, Top):
        return "top"
    if isinstance(t, UNARY):
        word = "neg" if isinstance(t, Neg) else "sim"
        inner = print_term(t.arg)
        return f"{word} ({inner})" if _prec(t.arg) < 4 else f"{word} {inner}"

    level = _prec(t)
    op = {And: "/\\", Or: "\\/", Imp: "->", CoImp: ">-"}[type(t)]
    left, right = print_term(t.left), print_term(t.right)
    if level == 1:
        left_paren = _prec(t.left) <= 1
        right_paren = _prec(t.right) <= 1
    else:
        left_paren = _prec(t.left) < level
        right_paren = _prec(t.right) <= level
    if left_paren:
        left = f"({left})"
    if right_paren:
        right = f"({right})"
    return f"{left} {op} {right}"


def print_inequality(ineq):
    return f"{print_term(ineq.lhs)} <= {print_term(ineq.rhs)}"


def print_atom(atom):
    rel = "<=" if isinstance(atom, Leq) else "prec"
    return f"{print_term(atom.lhs)} {rel} {print_term(atom.rhs)}"


def print_condition(cond):
    if isinstance(cond, ForAll):
        return f"forall {cond.var}. {print_condition(cond.body)}"
    if isinstance(cond, Exists):
        return f"exists {cond.var}. {print_condition(cond.body)}"
    if isinstance(cond, (RestrictedForAll, RestrictedExists)):
        word = "forall" if isinstance(cond, RestrictedForAll) else "exists"
        names = cond.vars[0] if len(cond.vars) == 1 else f"({', '.join(cond.vars)})"
        token = RESTRICTOR_TOKENS[cond.restrictor.kind]
        return f"{word} {names} {token} {print_term(cond.restrictor.target)}. {print_condition(cond.body)}"
    if isinstance(cond, Implies):
        return f"{print_condition(cond.antecedent)} ==> {print_condition(cond.consequent)}"
    if isinstance(cond, Conj):
        return " & ".join(print_atom(a) for a in cond.atoms)
    if isinstance(cond, (Leq, Prec)):
        return print_atom(cond)
    raise ConditionError(f"Cannot print {cond!r}")


# ============================================================
# EQUIVALENCE UP TO RENAMING
# ============================================================
def _flatten(t, kind):
    if isinstance(t, kind):
        return _flatten(t.left, kind) + _flatten(t.right, kind)
    return [t]


def _canonical_term(t, names):
    """Hashable normal form modulo /\\, \\/ commutativity and associativity."""
    if isinstance(t, Var):
        return ("var", names.get(t.name, t.name))
    if isinstance(t, Bot):
        return ("bot",)
    if isinstance(t, Top):
        return ("top",)
    if isinstance(t, (And, Or)):
        parts = sorted((_canonical_term(c, names) for c in _flatten(t, type(t))), key=repr)
        return (type(t).__name__, tuple(parts))
    return (type(t).__name__,) + tuple(_canonical_term(c, names) for c in children(t))


def _canonical_atoms(atoms, names):
    return frozenset(
        (type(a).__name__, _canonical_term(a.lhs, names), _canonical_term(a.rhs, names))
        for a in atoms
    )


def _normal_shape(cond):
    """(universals, antecedent atoms, existentials, consequent atoms) or None."""
    universals, antecedent, existentials, consequent = [], [], [], []
    node = cond
    while isinstance(node, (ForAll, RestrictedForAll)):
        if isinstance(node, ForAll):
            universals.append(node.var)
        else:
            universals.extend(node.vars)
            antecedent.append(restrictor_atom(node.vars, node.restrictor))
        node = node.body
    if isinstance(node, Implies):
        antecedent.extend(node.antecedent.atoms)
        node = node.consequent
    target = consequent
    while isinstance(node, (Exists, RestrictedExists)):
        if isinstance(node, Exists):
            existentials.append(node.var)
        else:
            existentials.extend(node.vars)
            target.append(restrictor_atom(node.vars, node.restrictor))
        node = node.body
    if not isinstance(node, Conj):
        return None
    target.extend(node.atoms)
    return universals, antecedent, existentials, consequent


def alpha_equivalent(c1, c2):
    """Equal up to renaming bound variables, /\\ and \\/ reordering and atom order."""
    s1, s2 = _normal_shape(c1), _normal_shape(c2)
    if s1 is None or s2 is None:
        return c1 == c2
    u1, a1, e1, g1 = s1
    u2, a2, e2, g2 = s2
    if (len(u1), len(e1), len(a1), len(g1)) != (len(u2), len(e2), len(a2), len(g2)):
        return False
    target_ante = _canonical_atoms(a2, {})
    target_goal = _canonical_atoms(g2, {})
    for pu in itertools.permutations(u2):
        names = dict(zip(u1, pu))
        if _canonical_atoms(a1, names) != target_ante:
            continue
        for pe in itertools.permutations(e2):
            full = dict(names, **dict(zip(e1, pe)))
            if (_canonical_atoms(a1, full) == target_ante
                    and _canonical_atoms(g1, full) == target_goal):
                return True
    return False


# ============================================================
# EVALUATION
# ============================================================
def _eval_vec(model, t, env):
    """Evaluate t with numpy broadcasting; env values are ints or index arrays."""
    l = model.lattice
    if isinstance(t, Var):
        try:
            return env[t.name]
        except KeyError:
            raise InputError(f"Unbound variable {t.name}") from None
    if isinstance(t, Bot):
        return np.int64(l.bot)
    if isinstance(t, Top):
        return np.int64(l.top)
    if isinstance(t, And):
        return l.meet_table[_eval_vec(model, t.left, env), _eval_vec(model, t.right, env)]
    if isinstance(t, Or):
        return l.join_table[_eval_vec(model, t.left, env), _eval_vec(model, t.right, env)]
    if isinstance(t, Imp):
        return model.imp_table[_eval_vec(model, t.left, env), _eval_vec(model, t.right, env)]
    if isinstance(t, CoImp):
        return model.coimp_table[_eval_vec(model, t.left, env), _eval_vec(model, t.right, env)]
    if isinstance(t, Neg):
        return model.neg_table[_eval_vec(model, t.arg, env)]
    if isinstance(t, Sim):
        return model.sim_table[_eval_vec(model, t.arg, env)]
    raise InputError(f"Not a term: {t!r}")


def _eval_atom(model, atom, env):
    lhs = _eval_vec(model, atom.lhs, env)
    rhs = _eval_vec(model, atom.rhs, env)
    table = model.lattice.leq_table if isinstance(atom, Leq) else model.rel
    return table[lhs, rhs]


def eval_term(model, assignment, t):
    """Value of t in the slanted algebra of model under assignment (name -> index)."""
    model.lattice.check_elements(*assignment.values())
    return int(_eval_vec(model, t, dict(assignment)))


@functools.lru_cache(maxsize=64)
def _assignment_grid(n, k):
    """All k-tuples over range(n), one row per variable, shared across models of size n."""
    grid = np.indices((n,) * k).reshape(k, -1) if k else np.zeros((0, 1), dtype=np.int64)
    grid.setflags(write=False)
    return grid


@dataclass
class InequalityFailure:
    assignment: dict
    lhs: int
    rhs: int


def inequality_counterexample(model, ineq, bindings=None, grid_limit=None):
    """First assignment (lexicographic in variable order) with lhs not <= rhs.

    Variables in bindings are held fixed; the rest range over the lattice.
    The assignment grid is evaluated in numpy chunks of at most grid_limit cells.
    """
    bindings = dict(bindings or {})
    grid_limit = config.GRID_LIMIT if grid_limit is None else grid_limit
    names = [v for v in inequality_variables(ineq) if v not in bindings]
    n = model.lattice.size
    inner = len(names)
    while inner > 0 and n ** inner > grid_limit:
        inner -= 1
    outer_names, inner_names = names[:len(names) - inner], names[len(names) - inner:]
    grid = _assignment_grid(n, inner)

    for outer in itertools.product(range(n), repeat=len(outer_names)):
        env = dict(bindings)
        env.update(zip(outer_names, outer))
        env.update((name, grid[i]) for i, name in enumerate(inner_names))
        lhs = _eval_vec(model, ineq.lhs, env)
        rhs = _eval_vec(model, ineq.rhs, env)
        holds = np.broadcast_to(model.lattice.leq_table[lhs, rhs], (grid.shape[1],))
        failing = np.flatnonzero(~holds)
        if len(failing):
            k = failing[0]
            assignment = dict(zip(outer_names, outer))
            assignment.update((name, int(grid[i][k])) for i, name in enumerate(inner_names))
            lhs_k = int(np.broadcast_to(lhs, (grid.shape[1],))[k])
            rhs_k = int(np.broadcast_to(rhs, (grid.shape[1],))[k])
            return InequalityFailure(assignment, lhs_k, rhs_k)
    return None


def eval_inequality(model, ineq, bindings=None, grid_limit=None):
    """True iff lhs <= rhs under every assignment of the free variables."""
    return inequality_counterexample(model, ineq, bindings, grid_limit) is None


@dataclass
class _Level:
    kind: str                 # "forall" or "exists"
    var: str
    guard: object = None      # restricting atom decided at this level
    atoms: list = None        # body atoms whose last variable is bound here


@dataclass
class _Plan:
    levels: list
    body_kind: str            # "conj" or "imp"
    early: list               # body atoms with no variable bound in this plan
    consequent: object = None


def _compile(cond):
    levels = []
    node = cond
    while isinstance(node, QUANTIFIERS):
        if isinstance(node, (ForAll, Exists)):
            kind = "forall" if isinstance(node, ForAll) else "exists"
            levels.append(_Level(kind, node.var, atoms=[]))
        else:
            kind = "forall" if isinstance(node, RestrictedForAll) else "exists"
            for name in node.vars:
                levels.append(_Level(kind, name, atoms=[]))
            levels[-1].guard = restrictor_atom(node.vars, node.restrictor)
        node = node.body

    if isinstance(node, Implies):
        plan = _Plan(levels, "imp", [], _compile(node.consequent))
        atoms = node.antecedent.atoms
    elif isinstance(node, Conj):
        plan = _Plan(levels, "conj", [])
        atoms = node.atoms
    else:
        raise ConditionError(f"Unexpected condition node {node!r}")

    position = {lvl.var: i for i, lvl in enumerate(levels)}
    for atom in atoms:
        spots = [position[v] for v in atom_variables(atom) if v in position]
        if spots:
            levels[max(spots)].atoms.append(atom)
        else:
            plan.early.append(atom)
    return plan


class _ConditionEvaluator:
    """
    Backtracking evaluator for conditions over one model.

    Each quantifier level filters its candidate values with numpy, using
    the restricting atom of the level and the body atoms that become fully
    bound there. A failed antecedent atom settles a candidate as true, a
    failed conjunct settles it as false; only the undecided candidates are
    explored further.
    """

    def __init__(self, model, cond):
        self.model = model
        self.n = model.lattice.size
        self.plan = _compile(cond)
        self.leading = 0
        for lvl in self.plan.levels:
            if lvl.kind != "forall":
                break
            self.leading += 1
        self.witness = None

    def run(self, env):
        return self._plan(self.plan, env, top=True)

    def _plan(self, plan, env, top=False):
        for atom in plan.early:
            if not bool(_eval_atom(self.model, atom, env)):
                return plan.body_kind == "imp"
        return self._level(plan, 0, env, top)

    def _record(self, plan, env, i, value):
        if self.witness is not None:
            return
        witness = {}
        for j, lvl in enumerate(plan.levels[:self.leading]):
            if j < i:
                witness[lvl.var] = int(env[lvl.var])
            elif j == i:
                witness[lvl.var] = int(value)
            else:
                witness[lvl.var] = self.model.lattice.bot
        self.witness = witness

    def _level(self, plan, i, env, top):
        if i == len(plan.levels):
            if plan.body_kind == "conj":
                return True
            return self._plan(plan.consequent, env)

        lvl = plan.levels[i]
        n = self.n
        env[lvl.var] = np.arange(n)
        settled_true = np.zeros(n, dtype=bool)
        settled_false = np.zeros(n, dtype=bool)
        open_ = np.ones(n, dtype=bool)
        if lvl.guard is not None:
            g = np.broadcast_to(_eval_atom(self.model, lvl.guard, env), (n,))
            if lvl.kind == "forall":
                settled_true |= ~g
            else:
                settled_false |= ~g
            open_ &= g
        for atom in lvl.atoms:
            a = np.broadcast_to(_eval_atom(self.model, atom, env), (n,))
            failing = open_ & ~a
            if plan.body_kind == "imp":
                settled_true |= failing
            else:
                settled_false |= failing
            open_ &= a

        in_leading = top and i < self.leading
        try:
            if lvl.kind == "forall":
                if settled_false.any():
                    if in_leading:
                        self._record(plan, env, i, np.flatnonzero(settled_false)[0])
                    return False
                for x in np.flatnonzero(open_):
                    env[lvl.var] = int(x)
                    if not self._level(plan, i + 1, env, top):
                        if in_leading:
                            self._record(plan, env, i, x)
                        return False
                return True
            if settled_true.any():
                return True
            for x in np.flatnonzero(open_):
                env[lvl.var] = int(x)
                if self._level(plan, i + 1, env, top):
                    return True
            return False
        finally:
            del env[lvl.var]


class _TooWide(Exception):
    """An existential table would exceed the grid limit."""


def _join_order(universals, atoms):
    """Universals ordered so that antecedent atoms are complete as early as possible."""
    scopes = [set(atom_variables(a)) & set(universals) for a in atoms]
    order, bound = [], set()
    remaining = list(dict.fromkeys(universals))

    def score(v):
        now = bound | {v}
        done = sum(1 for s in scopes if v in s and s <= now)
        near = sum(len(s & bound) + 1 for s in scopes if v in s)
        return done, near

    while remaining:
        best = max(remaining, key=score)
        order.append(best)
        bound.add(best)
        remaining.remove(best)
    return order


def _align(names, table, scope):
    """View of table with one axis per scope variable (size 1 where absent)."""
    axes = [names.index(v) for v in scope if v in names]
    shape = [table.shape[names.index(v)] if v in names else 1 for v in scope]
    return np.transpose(table, axes).reshape(shape)


class _PrenexEvaluator:
    """
    Set-at-a-time evaluator for universal prefix ==> existential block.

    Universal assignments are grown one variable at a time as numpy
    columns; an antecedent atom drops rows as soon as its variables are
    bound. The existential block is reduced once per model to boolean
    tables over universal variables, eliminating one existential at a time
    (smallest table first), so checking a row is a table lookup. Rows are
    expanded depth first in chunks of at most grid_limit cells.
    """

    def __init__(self, model, shape, grid_limit):
        self.model = model
        self.n = model.lattice.size
        self.universals, antecedent, self.existentials, consequent = shape
        self.limit = grid_limit
        self.order = _join_order(self.universals, antecedent)
        position = {v: i for i, v in enumerate(self.order)}
        self.stages = [[] for _ in self.order]
        self.early = []
        for atom in antecedent:
            spots = [position[v] for v in atom_variables(atom) if v in position]
            (self.stages[max(spots)] if spots else self.early).append(atom)
        hidden = set(self.existentials)
        self.open_goals = [a for a in consequent if not set(atom_variables(a)) & hidden]
        self.hidden_goals = [a for a in consequent if set(atom_variables(a)) & hidden]
        self.tables = []

    def _atom_table(self, atom, env):
        names = [v for v in atom_variables(atom) if v not in env]
        if self.n ** len(names) > self.limit:
            raise _TooWide(atom)
        scope = dict(env)
        for i, v in enumerate(names):
            shape = [1] * len(names)
            shape[i] = self.n
            scope[v] = np.arange(self.n).reshape(shape)
        table = np.broadcast_to(_eval_atom(self.model, atom, scope), (self.n,) * len(names))
        return names, table

    @staticmethod
    def _scope(factors, x):
        return list(dict.fromkeys(v for names, _ in factors if x in names for v in names))

    def _eliminate(self, env):
        factors = [self._atom_table(atom, env) for atom in self.hidden_goals]
        pending = list(self.existentials)
        while pending:
            x = min(pending, key=lambda v: len(self._scope(factors, v)))
            pending.remove(x)
            scope = self._scope(factors, x)
            if not scope:
                continue
            if self.n ** len(scope) > self.limit:
                raise _TooWide(x)
            joined = np.ones((1,) * len(scope), dtype=bool)
            rest = []
            for names, table in factors:
                if x in names:
                    joined = joined & _align(names, table, scope)
                else:
                    rest.append((names, table))
            rest.append(([v for v in scope if v != x], joined.any(axis=scope.index(x))))
            factors = rest
        return factors

    def counterexample(self, env):
        self.tables = self._eliminate(env)
        for atom in self.early:
            if not bool(_eval_atom(self.model, atom, env)):
                return None
        return self._extend(env, {}, 1, 0)

    def _extend(self, env, cols, count, k):
        if k == len(self.order):
            return self._check(env, cols, count)
        n = self.n
        step = max(1, self.limit // n)
        for start in range(0, count, step):
            stop = min(count, start + step)
            size = (stop - start) * n
            block = {v: np.repeat(c[start:stop], n) for v, c in cols.items()}
            block[self.order[k]] = np.tile(np.arange(n), stop - start)
            keep = np.ones(size, dtype=bool)
            scope = dict(env, **block)
            for atom in self.stages[k]:
                keep &= np.broadcast_to(_eval_atom(self.model, atom, scope), (size,))
            block = {v: c[keep] for v, c in block.items()}
            found = self._extend(env, block, int(keep.sum()), k + 1)
            if found is not None:
                return found
        return None

    def _check(self, env, cols, count):
        if count == 0:
            return None
        ok = np.ones(count, dtype=bool)
        scope = dict(env, **cols)
        for atom in self.open_goals:
            ok &= np.broadcast_to(_eval_atom(self.model, atom, scope), (count,))
        for names, table in self.tables:
            ok &= table[tuple(cols[v] for v in names)] if names else bool(table)
        failing = np.flatnonzero(~ok)
        if not len(failing):
            return None
        names = list(dict.fromkeys(self.universals))
        if not names:
            return {}
        first = failing[np.lexsort([cols[v][failing] for v in reversed(names)])[0]]
        return {v: int(cols[v][first]) for v in names}


def _prenex_shape(cond, env):
    """_normal_shape when every quantified name is distinct and unbound, else None."""
    shape = _normal_shape(cond)
    if shape is None:
        return None
    names = shape[0] + shape[2]
    if len(set(names)) != len(names) or set(names) & set(env):
        return None
    return shape


def _search(model, cond, env, grid_limit):
    grid_limit = config.GRID_LIMIT if grid_limit is None else grid_limit
    shape = _prenex_shape(cond, env)
    if shape is not None:
        try:
            return _PrenexEvaluator(model, shape, grid_limit).counterexample(env)
        except _TooWide:
            logger.debug("existential tables too wide, backtracking instead")
    evaluator = _ConditionEvaluator(model, cond)
    if evaluator.run(env):
        return None
    return evaluator.witness or {}


def _prepare_condition(model, cond, bindings, depth_limit):
    depth_limit = config.DEPTH_LIMIT if depth_limit is None else depth_limit
    depth = condition_depth(cond)
    if depth > depth_limit:
        raise LimitExceeded(f"Condition binds {depth} variables below its universal prefix, limit is {depth_limit}")
    bindings = dict(bindings or {})
    missing = [v for v in free_variables(cond) if v not in bindings]
    if missing:
        raise InputError(f"Unbound variable {missing[0]}")
    model.lattice.check_elements(*bindings.values())
    return bindings


def condition_counterexample(model, cond, bindings=None, depth_limit=None, grid_limit=None):
    """None if cond holds, else the failing values of its leading universal variables."""
    env = _prepare_condition(model, cond, bindings, depth_limit)
    return _search(model, cond, env, grid_limit)


def eval_condition(model, cond, bindings=None, depth_limit=None, grid_limit=None):
    """Brute-force truth of a closed condition on a model."""
    env = _prepare_condition(model, cond, bindings, depth_limit)
    return _search(model, cond, env, grid_limit) is None
