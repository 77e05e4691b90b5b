"""Exception hierarchy for the label-shift toolkit."""


class LabelShiftError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(LabelShiftError, ValueError):
    pass


class InvalidParameterError(LabelShiftError, ValueError):
    pass


class InsufficientHoldoutError(LabelShiftError):
    """A class has no holdout examples, so its confusion column is undefined."""


class SingularConfusionError(LabelShiftError):
    """Smallest singular value of the confusion matrix is below the floor."""


class DegenerateReweightError(LabelShiftError):
    """All importance-reweighted probabilities vanished."""


class DegenerateWeightError(LabelShiftError):
    """An observed label has zero estimated probability at its round."""


class DataExhaustedError(LabelShiftError):
    """A per-class sample pool ran out while sampling without replacement."""


class TrainingDivergedError(LabelShiftError):
    pass


class StreamParseError(LabelShiftError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IncompleteStreamError(LabelShiftError):
    """A softmax stream has no rows for at least one class."""
