"""
subkit command line.

    subkit parse      --term T | --ineq I | --cond C
    subkit classify   --ineq I
    subkit correspond --ineq I [--trace]
    subkit inverse    --cond C [--roles d:a,e:d] [--trace]
    subkit verify     --ineq I [--cond C] [--model FILE] [--corpus quick|default]
    subkit eval       --model FILE (--ineq I | --cond C)
    subkit closure    --model FILE [--pairs JSON]
    subkit enumerate  (--model FILE | --poset FILE) [--mode exhaustive|closure|sampled] [--count N]
    subkit regress    [--suite FILE] [--with-correspond]

Exit codes: 0 ok, 1 counterexample or failed check, 2 input error, 3 limit exceeded.
"""

import argparse
import json
import logging
import sys

import numpy as np

from subkit import analyticity, correspond as correspond_mod, inverse_kracht, verifier
from subkit.order_core import FiniteDistributiveLattice, poset_from_json
from subkit.subord_algebra import closure, model_from_json
from subkit.syntax import (
    condition_counterexample, free_variables, inequality_counterexample, inequality_variables,
    parse_condition, parse_inequality, parse_term, print_condition, print_inequality, print_term,
    universal_closure,
)
from subkit.utilities import config
from subkit.utilities.errors import InputError, RuleSearchExhausted, ShapeError, SubkitError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COUNTEREXAMPLE = 1


# ============================================================
# OUTPUT
# ============================================================
class Output:
    """Text or JSON printing for one command."""

    def __init__(self, as_json):
        self.as_json = as_json

    def emit(self, lines, doc):
        if self.as_json:
            print(json.dumps(doc, indent=2, sort_keys=True))
        else:
            for line in lines:
                print(line)


def _settings(args):
    return config.load_settings(
        max_irreducibles=args.max_elems,
        depth_limit=args.depth_limit,
        seed=args.seed,
        corpus=args.corpus,
    )


def _load_model(path, settings):
    doc = config.load_json(path)
    return model_from_json(doc, settings.max_irreducibles), doc


def _atom_bindings(model, names):
    """Free variables named after irreducibles denote their principal downsets."""
    base = model.lattice.base.elements
    return {n: model.lattice.principal(n) for n in names if n in base}


def _element_from_entry(lattice, entry):
    if entry == "bot":
        return lattice.bot
    if entry == "top":
        return lattice.top
    if isinstance(entry, str):
        return lattice.principal(entry)
    return lattice.element_from_names(entry)


# ============================================================
# COMMANDS
# ============================================================
def cmd_parse(args, out, settings):
    if args.term is not None:
        t = parse_term(args.term)
        out.emit([print_term(t)], {"kind": "term", "text": print_term(t)})
    elif args.ineq is not None:
        ineq = parse_inequality(args.ineq)
        out.emit([print_inequality(ineq)], {"kind": "inequality", "text": print_inequality(ineq)})
    else:
        cond = parse_condition(args.cond)
        out.emit([print_condition(cond)], {"kind": "condition", "text": print_condition(cond)})
    return EXIT_OK


def cmd_classify(args, out, settings):
    verdict = analyticity.is_analytic(parse_inequality(args.ineq))
    out.emit(verdict.lines(), verdict.to_json())
    return EXIT_OK


def cmd_correspond(args, out, settings):
    ineq = parse_inequality(args.ineq)
    try:
        cond, trace = correspond_mod.correspond(ineq)
    except RuleSearchExhausted as e:
        if args.trace:
            for line in e.trace.lines():
                print(line, file=sys.stderr)
        raise
    lines = trace.lines() if args.trace else []
    lines.append(print_condition(cond))
    doc = {"inequality": print_inequality(ineq), "condition": print_condition(cond)}
    if args.trace:
        doc["trace"] = trace.to_json()
    out.emit(lines, doc)
    return EXIT_OK


def cmd_inverse(args, out, settings):
    cond = parse_condition(args.cond)
    roles = inverse_kracht.parse_roles(args.roles)
    report = inverse_kracht.validate_shape(cond, roles)
    if not report.ok:
        out.emit(report.lines(), report.to_json())
        raise ShapeError(f"{print_condition(cond)} is not a Kracht formula", report.violations)
    ineq, trace = inverse_kracht.invert(report)
    lines = report.lines() + (trace.lines() if args.trace else []) + [print_inequality(ineq)]
    doc = dict(report.to_json(), inequality=print_inequality(ineq))
    if args.trace:
        doc["trace"] = trace.to_json()
    out.emit(lines, doc)
    return EXIT_OK


def _corpus(args, settings):
    if args.model:
        model, _ = _load_model(args.model, settings)
        return verifier.ModelCorpus.from_relations([model], label=args.model)
    return verifier.build_corpus(settings)


def cmd_verify(args, out, settings):
    ineq = parse_inequality(args.ineq)
    if args.cond is not None:
        cond = parse_condition(args.cond)
    else:
        cond, _ = correspond_mod.correspond(ineq)
    report = verifier.check_equivalence(ineq, cond, _corpus(args, settings), settings)
    out.emit(report.lines(), report.to_json())
    return EXIT_OK if report.equivalent else EXIT_COUNTEREXAMPLE


def cmd_eval(args, out, settings):
    model, _ = _load_model(args.model, settings)
    l = model.lattice
    if args.ineq is not None:
        ineq = parse_inequality(args.ineq)
        bindings = _atom_bindings(model, inequality_variables(ineq))
        failure = inequality_counterexample(model, ineq, bindings, settings.grid_limit)
        holds = failure is None
        text = print_inequality(ineq)
        witness = {} if holds else failure.assignment
    else:
        cond = parse_condition(args.cond, close=False)
        bindings = _atom_bindings(model, free_variables(cond))
        cond = universal_closure(cond, exclude=bindings)
        witness = condition_counterexample(model, cond, bindings, settings.depth_limit, settings.grid_limit)
        holds = witness is None
        text = print_condition(cond)
        witness = witness or {}
    atoms = ", ".join(f"{n}={l.label(v)}" for n, v in bindings.items())
    lines = [f"{text} : {'holds' if holds else 'fails'}" + (f"  [{atoms}]" if atoms else "")]
    if witness:
        lines.append("  counterexample: " + ", ".join(f"{n}={l.label(v)}" for n, v in witness.items()))
    doc = {
        "formula": text,
        "holds": holds,
        "atoms": {n: l.element_names(v) for n, v in bindings.items()},
        "counterexample": {n: l.element_names(v) for n, v in witness.items()},
    }
    out.emit(lines, doc)
    return EXIT_OK if holds else EXIT_COUNTEREXAMPLE


def cmd_closure(args, out, settings):
    doc = config.load_json(args.model)
    if not isinstance(doc, dict) or "poset" not in doc:
        raise InputError("Model JSON needs a 'poset' entry")
    lattice = FiniteDistributiveLattice(poset_from_json(doc["poset"]), settings.max_irreducibles)
    try:
        pairs = json.loads(args.pairs) if args.pairs else doc.get("subordination", [])
    except json.JSONDecodeError as e:
        raise InputError(f"Invalid --pairs JSON: {e}")
    seed = np.zeros((lattice.size, lattice.size), dtype=bool)
    for pair in pairs:
        if len(pair) != 2:
            raise InputError(f"Seed pair must have two entries, got {pair!r}")
        seed[_element_from_entry(lattice, pair[0]), _element_from_entry(lattice, pair[1])] = True
    rel = closure(lattice, seed)
    lines = [f"{lattice.label(a)} prec {lattice.label(b)}" for a, b in rel.pairs()]
    lines.append(f"{len(rel.pairs())} pairs")
    out.emit(lines, {"poset": lattice.base.to_json(), "subordination": rel.to_json()})
    return EXIT_OK


def cmd_enumerate(args, out, settings):
    if args.model:
        doc = config.load_json(args.model)
        poset_doc = doc.get("poset") if isinstance(doc, dict) else None
    else:
        poset_doc = config.load_json(args.poset)
    if poset_doc is None:
        raise InputError("enumerate needs a poset file or a model file with a 'poset' entry")
    lattice = FiniteDistributiveLattice(poset_from_json(poset_doc), settings.max_irreducibles)
    relations = verifier.enumerate_subordinations(lattice, args.mode, count=args.count, seed=settings.seed)
    lines = [f"{len(relations)} subordination relations ({args.mode}) on {lattice.size} elements"]
    for k, rel in enumerate(relations):
        pairs = " ".join(f"{lattice.label(a)}<{lattice.label(b)}" for a, b in rel.pairs())
        lines.append(f"  #{k}: {pairs}")
    out.emit(lines, {"mode": args.mode, "count": len(relations), "relations": [r.to_json() for r in relations]})
    return EXIT_OK


def cmd_regress(args, out, settings):
    summary = verifier.run_regression(args.suite, settings=settings, with_correspond=args.with_correspond)
    out.emit(summary.lines(), summary.to_json())
    return EXIT_OK if summary.ok else EXIT_COUNTEREXAMPLE


COMMANDS = {
    "parse": cmd_parse,
    "classify": cmd_classify,
    "correspond": cmd_correspond,
    "inverse": cmd_inverse,
    "verify": cmd_verify,
    "eval": cmd_eval,
    "closure": cmd_closure,
    "enumerate": cmd_enumerate,
    "regress": cmd_regress,
}


# ============================================================
# ARGUMENTS
# ============================================================
class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so run() controls the exit code."""

    def error(self, message):
        raise _UsageError(self.format_usage() + f"{self.prog}: error: {message}")


class _UsageError(Exception):
    pass


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument('--json', action='store_true', help='JSON output')
    common.add_argument('--trace', action='store_true', help='print rewrite traces')
    common.add_argument('--seed', type=int, default=None, help=f'RNG seed (default {config.DEFAULT_SEED:#x})')
    common.add_argument('--max-elems', type=int, default=None, dest='max_elems',
                        help=f'max join-irreducibles per lattice (env {config.ENV_MAX_ELEMS})')
    common.add_argument('--depth-limit', type=int, default=None, dest='depth_limit',
                        help=f'max quantifier depth (env {config.ENV_DEPTH_LIMIT})')
    common.add_argument('--corpus', choices=config.CORPUS_PROFILES, default=None, help='model corpus profile')
    common.add_argument('--verbose', '-v', action='store_true', help='debug logging')

    p = _Parser(prog='subkit', description='Slanted Heyting algebras and subordination correspondence')
    sub = p.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    s = sub.add_parser('parse', parents=[common], help='parse and print a term, inequality or condition')
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument('--term')
    g.add_argument('--ineq')
    g.add_argument('--cond')

    s = sub.add_parser('classify', parents=[common], help='analyticity of an inequality')
    s.add_argument('--ineq', required=True)

    s = sub.add_parser('correspond', parents=[common], help='first-order correspondent of an analytic inequality')
    s.add_argument('--ineq', required=True)

    s = sub.add_parser('inverse', parents=[common], help='inequality for a Kracht condition')
    s.add_argument('--cond', required=True)
    s.add_argument('--roles', default=None, help='role overrides, e.g. d:a,e:d,f:d')

    s = sub.add_parser('verify', parents=[common], help='check an inequality against a condition on models')
    s.add_argument('--ineq', required=True)
    s.add_argument('--cond', default=None, help='defaults to the computed correspondent')
    s.add_argument('--model', default=None, help='single model file instead of the corpus')

    s = sub.add_parser('eval', parents=[common], help='evaluate on one model; irreducible names denote atoms')
    s.add_argument('--model', required=True)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument('--ineq')
    g.add_argument('--cond')

    s = sub.add_parser('closure', parents=[common], help='least subordination relation containing a seed')
    s.add_argument('--model', required=True)
    s.add_argument('--pairs', default=None, help='seed pairs as JSON, e.g. [["p","q"]]')

    s = sub.add_parser('enumerate', parents=[common], help='subordination relations on a lattice')
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument('--model')
    g.add_argument('--poset')
    s.add_argument('--mode', choices=verifier.MODES, default='exhaustive')
    s.add_argument('--count', type=int, default=None, help='relations to sample')

    s = sub.add_parser('regress', parents=[common], help='run the regression suite')
    s.add_argument('--suite', default=None, help='suite JSON (default: shipped suite)')
    s.add_argument('--with-correspond', action='store_true', dest='with_correspond',
                   help='also certify the computed correspondents')
    return p


def run(argv=None):
    """Parse argv, dispatch, and return the exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return 2

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        settings = _settings(args)
        return COMMANDS[args.command](args, Output(args.json), settings)
    except SubkitError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
