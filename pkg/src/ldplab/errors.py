"""Exception hierarchy shared by all ldplab modules.

Every domain error raised by the library derives from :class:`LdplabError`,
so callers (in particular the CLI) can map any library failure to a single
machine-readable error record.
"""


class LdplabError(Exception):
    """Base class for all ldplab domain errors."""


class ValidationError(LdplabError):
    """Input data violates a documented invariant."""


class NotPrimitive(ValidationError):
    """Transition matrix is reducible or periodic, the shift is not mixing."""


class EmptyRowOrColumn(ValidationError):
    """A symbol has no allowed successor or no allowed predecessor."""


class IncompleteTable(ValidationError):
    """A potential table is missing an admissible word of its memory length."""


class ParseError(LdplabError):
    """A system description file could not be parsed."""


class BracketUndefined(LdplabError):
    """Bracket of two points whose coordinate-0 symbols differ."""


class InadmissibleConcatenation(LdplabError):
    """Word plus continuation contains a forbidden symbol pair."""


class InadmissiblePast(LdplabError):
    """A leaf base-point past is not an admissible word."""


class InconsistentStart(LdplabError):
    """Cylinder word does not start at the leaf's start symbol."""


class WordTooShort(LdplabError):
    """Word does not carry enough symbols for the requested depth."""


class MemoryTooLarge(LdplabError):
    """Potential memory exceeds the recoding block of the chain."""


class NoConvergence(LdplabError):
    """Power iteration failed to reach the requested residual."""


class EnumerationTooLarge(LdplabError):
    """Word enumeration would exceed the configured budget."""


class BudgetExceeded(LdplabError):
    """Requested exact computation exceeds the configured budget."""


class EmptyInterval(LdplabError):
    """Target interval contains no points."""


class DegenerateFit(LdplabError):
    """Not enough usable data points for an asymptotic rate fit."""


class IncompatibleSupport(LdplabError):
    """Markov measure puts mass on transitions the subshift forbids."""
