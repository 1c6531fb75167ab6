"""
Signed generation trees and the analyticity check.

Each node of a signed tree is classified by its sign and connective:

    Delta-adjoint  +\\/  -/\\
    SLR            +/\\  +>-  +neg  -\\/  -->  -sim
    SRA            +/\\  +neg  -\\/  -sim
    SRR            +\\/  +->  -/\\  ->-

Delta-adjoints and SLR nodes form the skeleton, SRA and SRR nodes the PIA
part. A branch is good when, reading from its leaf upwards, a run of PIA
nodes is followed by a run of skeleton nodes. -neg and +sim have no class;
they are rewritten as x -> bot and x >- top before classification.
"""

import logging
from dataclasses import dataclass, field

from subkit.syntax import (
    And, Bot, CoImp, Imp, Neg, Or, Sim, Top, Var, children, print_inequality,
)
from subkit.utilities.errors import NonAnalyticError

logger = logging.getLogger(__name__)

DELTA = "Delta"
SLR = "SLR"
SRA = "SRA"
SRR = "SRR"
SKELETON = frozenset({DELTA, SLR})
PIA = frozenset({SRA, SRR})

NODE_CLASSES = {
    ("+", Or): frozenset({DELTA, SRR}),
    ("-", And): frozenset({DELTA, SRR}),
    ("+", And): frozenset({SLR, SRA}),
    ("-", Or): frozenset({SLR, SRA}),
    ("+", CoImp): frozenset({SLR}),
    ("-", Imp): frozenset({SLR}),
    ("+", Neg): frozenset({SLR, SRA}),
    ("-", Sim): frozenset({SLR, SRA}),
    ("+", Imp): frozenset({SRR}),
    ("-", CoImp): frozenset({SRR}),
}

SYMBOLS = {And: "/\\", Or: "\\/", Imp: "->", CoImp: ">-", Neg: "neg", Sim: "sim"}


def flip(sign):
    return "-" if sign == "+" else "+"


@dataclass
class SignedNode:
    label: str
    sign: str
    children: list = field(default_factory=list)
    classes: frozenset = frozenset()
    connective: type = None

    @property
    def is_leaf(self):
        return not self.children

    @property
    def unclassified(self):
        return self.connective is not None and not self.classes

    def tag(self):
        return f"{self.sign}{self.label}"


def signed_tree(t, sign="+", expand=True):
    """
    Signed generation tree of a term.

    Args:
        t: term
        sign: "+" or "-" for the root
        expand: rewrite -neg and +sim nodes as -> bot / >- top first

    Returns:
        SignedNode; nodes without a class keep an empty class set.
    """
    if expand and ((sign == "-" and isinstance(t, Neg)) or (sign == "+" and isinstance(t, Sim))):
        t = Imp(t.arg, Bot()) if isinstance(t, Neg) else CoImp(t.arg, Top())

    if isinstance(t, Var):
        return SignedNode(t.name, sign)
    if isinstance(t, Bot):
        return SignedNode("bot", sign)
    if isinstance(t, Top):
        return SignedNode("top", sign)

    kind = type(t)
    kids = children(t)
    if kind in (Imp, CoImp):
        signs = [flip(sign), sign]
    elif kind in (Neg, Sim):
        signs = [flip(sign)]
    else:
        signs = [sign, sign]
    node = SignedNode(SYMBOLS[kind], sign, connective=kind,
                      classes=NODE_CLASSES.get((sign, kind), frozenset()))
    node.children = [signed_tree(c, s, expand) for c, s in zip(kids, signs)]
    return node


@dataclass
class Branch:
    """Root-to-leaf path with its split certificate.

    path lists the inner nodes from the root down; split counts the PIA
    nodes directly above the leaf (None when no split exists).
    """

    leaf: str
    side: str
    path: list
    leaf_sign: str = "+"
    split: int = None
    chosen: list = field(default_factory=list)

    @property
    def good(self):
        return self.split is not None

    def describe(self):
        nodes = " ".join(n.tag() for n in self.path) or "(leaf is the root)"
        if not self.good:
            return f"{self.side} leaf {self.leaf_sign}{self.leaf}: {nodes} -- no PIA/skeleton split"
        classes = " ".join(self.chosen)
        return f"{self.side} leaf {self.leaf_sign}{self.leaf}: {nodes} | classes {classes} | split {self.split}"

    def to_json(self):
        return {
            "side": self.side,
            "leaf": self.leaf,
            "path": [n.tag() for n in self.path],
            "classes": list(self.chosen),
            "split": self.split,
            "good": self.good,
        }


def _branches(root, side):
    out = []

    def walk(node, path):
        if node.is_leaf:
            if node.label not in ("bot", "top"):
                out.append(Branch(node.label, side, list(path), node.sign))
            return
        for c in node.children:
            walk(c, path + [node])

    walk(root, [])
    return out


def _certify(branch):
    upward = list(reversed(branch.path))
    for s in range(len(upward) + 1):
        lower, upper = upward[:s], upward[s:]
        if all(n.classes & PIA for n in lower) and all(n.classes & SKELETON for n in upper):
            branch.split = s
            chosen = [sorted(n.classes & PIA)[0] for n in lower]
            chosen += [sorted(n.classes & SKELETON)[0] for n in upper]
            branch.chosen = list(reversed(chosen))
            return branch
    branch.split = None
    return branch


@dataclass
class AnalyticityVerdict:
    """Result of is_analytic.

    analytic is the verdict after rewriting -neg / +sim; native_analytic is
    the verdict on the table alone, where those nodes have no class.
    """

    inequality: object
    analytic: bool
    branches: list
    native_analytic: bool
    native_branches: list

    @property
    def bad_branches(self):
        return [b for b in self.branches if not b.good]

    @property
    def differs(self):
        return self.analytic != self.native_analytic

    def to_json(self):
        return {
            "inequality": print_inequality(self.inequality),
            "analytic": self.analytic,
            "native_analytic": self.native_analytic,
            "branches": [b.to_json() for b in self.branches],
            "native_branches": [b.to_json() for b in self.native_branches],
        }

    def lines(self):
        verdict = "analytic" if self.analytic else "NOT analytic"
        out = [f"{print_inequality(self.inequality)} : {verdict}"]
        if self.differs:
            native = "analytic" if self.native_analytic else "not analytic"
            out.append(f"  (native table alone: {native})")
        for b in self.branches:
            mark = "ok " if b.good else "BAD"
            out.append(f"  [{mark}] {b.describe()}")
        return out


def _verdict(ineq, expand):
    branches = _branches(signed_tree(ineq.lhs, "+", expand), "lhs")
    branches += _branches(signed_tree(ineq.rhs, "-", expand), "rhs")
    branches = [_certify(b) for b in branches]
    return all(b.good for b in branches), branches


def is_analytic(ineq):
    """Classify every branch of +lhs and -rhs."""
    analytic, branches = _verdict(ineq, expand=True)
    native, native_branches = _verdict(ineq, expand=False)
    logger.debug("analyticity of %s: %s (native %s)", print_inequality(ineq), analytic, native)
    return AnalyticityVerdict(ineq, analytic, branches, native, native_branches)


def require_analytic(ineq):
    verdict = is_analytic(ineq)
    if not verdict.analytic:
        bad = verdict.bad_branches[0]
        raise NonAnalyticError(
            f"{print_inequality(ineq)} is not analytic; offending branch {bad.describe()}",
            verdict,
        )
    return verdict
