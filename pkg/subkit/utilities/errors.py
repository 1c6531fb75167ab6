"""Exception hierarchy shared by every subkit module.

Each exception carries the process exit code the CLI reports for it:
2 for bad input, 3 for exceeded limits.
"""


class SubkitError(Exception):
    """Base class for all subkit failures."""

    exit_code = 2


class InputError(SubkitError, ValueError):
    """Malformed user input (files, expressions, element names)."""


class PosetError(InputError):
    pass


class ElementError(InputError):
    pass


class ParseError(InputError):
    """Syntax error in a term, inequality or condition.

    Args:
        message: human readable description
        line: 1-based line of the offending token (None if unknown)
        column: 1-based column of the offending token (None if unknown)
        expected: set of token names the parser would have accepted
    """

    def __init__(self, message, line=None, column=None, expected=None):
        self.line = line
        self.column = column
        self.expected = sorted(expected or [])
        where = f" at line {line}, column {column}" if line is not None else ""
        hint = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message}{where}{hint}")


class ConditionError(InputError):
    pass


class ConfigError(InputError):
    pass


class SuiteError(InputError):
    pass


class LimitExceeded(SubkitError):
    """A configured cap (irreducibles, quantifier depth, grid size) was hit."""

    exit_code = 3


class AlgebraError(SubkitError):
    """Operator tables violate the slanted clauses or disagree with each other."""

    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        super().__init__(message)


class NonAnalyticError(SubkitError):
    def __init__(self, message, verdict=None):
        self.verdict = verdict
        super().__init__(message)


class RuleSearchExhausted(SubkitError):
    """The correspondence engine found no applicable rule.

    The partial trace and the stuck quasi-inequality are kept for diagnostics.
    """

    def __init__(self, message, trace=None, state=None):
        self.trace = trace
        self.state = state
        super().__init__(message)


class ShapeError(SubkitError):
    def __init__(self, message, violations=None):
        self.violations = list(violations or [])
        super().__init__(message)


class StuckMerge(SubkitError):
    def __init__(self, message, atom=None, trace=None):
        self.atom = atom
        self.trace = trace
        super().__init__(message)


class TraceMismatch(SubkitError):
    pass
