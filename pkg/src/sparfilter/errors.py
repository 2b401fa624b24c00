"""Exception hierarchy. Every error raised by the library derives from SparFilterError."""


class SparFilterError(ValueError):
    """Base class for all library errors."""


class TooFewRows(SparFilterError):
    pass


class NonFiniteValue(SparFilterError):
    pass


class NonPositivePrice(SparFilterError):
    def __init__(self, row: int, col: int, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"non-positive price {value!r} at row {row}, column {col}")


class ZeroVarianceNode(SparFilterError):
    def __init__(self, index: int, label: str | None = None):
        self.index = index
        name = f" ({label})" if label is not None else ""
        super().__init__(f"node {index}{name} has zero variance")


class NotSymmetric(SparFilterError):
    pass


class DegenerateData(SparFilterError):
    pass


class SplitTooSmall(SparFilterError):
    pass


class DecompositionFailure(SparFilterError):
    pass


class LengthMismatch(SparFilterError):
    pass


class InvalidBand(SparFilterError):
    pass


class InsufficientDimensions(SparFilterError):
    pass


class NodeSetMismatch(SparFilterError):
    pass


class EmptyTruth(SparFilterError):
    pass


class WeightOutOfRange(SparFilterError):
    pass


class NotPSD(SparFilterError):
    pass


class InvalidInput(SparFilterError):
    """Malformed CSV or parameter values."""
