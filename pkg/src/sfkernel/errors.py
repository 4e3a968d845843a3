"""Exception types shared across the calculus.

Semantic partiality (a partial function returning no value) is *not* an
error and is signalled by the BOTTOM point instead; these exceptions are
diagnostics: bad inputs, unsupported fragments, or violated preconditions.
"""


class SfkError(Exception):
    """Base class for all calculus errors."""


class TypeMismatch(SfkError):
    """A point, set, or function does not fit the expected space."""


class NumericDomain(SfkError):
    """A numeric primitive was applied outside its domain (e.g. log(-1)).

    Distinct from the BOTTOM point: BOTTOM is semantic partiality,
    NumericDomain is a diagnostic.
    """


class Indeterminate(SfkError):
    """inf/inf was requested where it has no defined value."""


class Unsupported(SfkError):
    """The operation is not available outside the structured fragment."""


class NotZeroInftyAbsCont(SfkError):
    """Radon-Nikodym precondition failed: not 0-inf-absolutely continuous."""


class NotAbsCont(SfkError):
    """Plain absolute-continuity precondition failed."""


class InftyCompatibilityFailed(SfkError):
    """Disintegration's infinity-compatibility hypothesis failed."""


class NotProbability(SfkError):
    """Kernel is not certifiably a probability kernel."""


class NotSubprobability(SfkError):
    """Kernel is not certifiably a subprobability kernel."""


class FiniteTotalMass(SfkError):
    """Total randomisation requires infinite total mass."""


class BoundViolation(SfkError):
    """A probed density ratio exceeded the rejection bound."""


class UnsampleableSite(SfkError):
    """A sample site is not a (sub)probability measure."""


class ScopeError(SfkError):
    """Unbound variable in a program."""


class ProgramSyntaxError(SfkError):
    """Parse failure, with position information."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column

    def __str__(self):
        base = super().__str__()
        if self.line is not None:
            return f"{base} (line {self.line}, column {self.column})"
        return base
