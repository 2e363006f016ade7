"""Exception hierarchy shared across the toolkit."""


class SkelAttackError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SkelAttackError, ValueError):
    """An input violates a documented contract (shape, range, structure)."""


class ParseError(ValidationError):
    """A file could not be parsed or failed schema validation.

    ``context`` carries a human-readable location (line/column for malformed
    JSON, frame/joint index for semantic problems).
    """

    def __init__(self, message, context=None):
        self.context = context
        if context:
            message = f"{message} ({context})"
        super().__init__(message)


class NumericError(SkelAttackError, ArithmeticError):
    """A computation produced a non-finite intermediate or result."""


class DivergenceError(NumericError):
    """The attack optimization diverged and could not be rescued.

    ``iteration`` is the iterate index at which the loss became non-finite.
    """

    def __init__(self, message, iteration):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")


class TrainingError(SkelAttackError):
    """Classifier training failed (e.g. the loss became non-finite)."""


class SampleRejectedError(SkelAttackError):
    """A sample does not satisfy the precondition of the requested operation."""


class StratificationError(ValidationError):
    """A dataset split cannot be stratified as requested."""


class EmptyInputError(ValidationError):
    """An aggregate operation received no usable input."""
