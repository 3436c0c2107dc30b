"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class MteError(Exception):
    """Base class for all package errors."""

    code = "E_MTE"


class DomainError(MteError):
    """A point, state, or variable does not belong to the relevant domain."""

    code = "E_DOMAIN"


class DomainMismatchError(MteError):
    code = "E_DOMAIN_MISMATCH"


class NotContinuousError(MteError):
    code = "E_NOT_CONTINUOUS"


class NotDiscreteError(MteError):
    code = "E_NOT_DISCRETE"


class NonPositiveMassError(MteError):
    code = "E_NONPOSITIVE_MASS"


class NonConstantMassError(MteError):
    """Normalisation constant varies with a continuous parent inside a cell."""

    code = "E_NONCONSTANT_K"


class BadIntervalError(MteError):
    code = "E_BAD_INTERVAL"


class NotUtilityError(MteError):
    code = "E_NOT_UTILITY"


class UnsupportedMaxDimError(MteError):
    """Maximisation over a decision with >= 2 remaining continuous variables."""

    code = "E_UNSUPPORTED_MAXDIM"


class BadSigmaError(MteError):
    code = "E_BAD_SIGMA"


class FitDivergedError(MteError):
    code = "E_FIT_DIVERGED"


class MissingFitError(MteError):
    code = "E_MISSING_FIT"


class NotPermutationError(MteError):
    code = "E_NOT_PERMUTATION"


class DecisionInProbabilityError(MteError):
    """A probability potential still mentions the decision being eliminated."""

    code = "E_DECISION_IN_PROBABILITY"


class InvalidOrderError(MteError):
    code = "E_INVALID_ORDER"


class InvalidModelError(MteError):
    code = "E_INVALID_MODEL"


class ParseError(MteError):
    """Model file could not be parsed; carries a 1-based line/column."""

    code = "E_PARSE"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{line}:{column}: {message}"
        super().__init__(message)


class UnknownTemplateError(MteError):
    code = "E_UNKNOWN_TEMPLATE"


class IoError(MteError):
    code = "E_IO"


class MaxDepthError(MteError):
    code = "E_MAX_DEPTH"


class UncoveredObservationError(MteError):
    code = "E_UNCOVERED_OBSERVATION"
