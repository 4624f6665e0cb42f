"""Exception types raised across the package."""


class TDSelectorError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(TDSelectorError):
    """A dataset file or config does not match the declared column schema."""


class RowParseError(TDSelectorError):
    """A cell could not be parsed; carries the offending 0-based row index."""

    def __init__(self, message, row):
        super().__init__(f"{message} (row {row})")
        self.row = row


class ValidationError(TDSelectorError):
    """Loaded data violates an invariant (e.g. negative defect count)."""


class DatasetNotFoundError(TDSelectorError):
    """A requested target project is not present in the repository."""


class DimensionMismatchError(TDSelectorError):
    """Two vectors (or a vector and a model) differ in length."""


class ZeroVectorError(TDSelectorError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyPoolError(TDSelectorError):
    """Selection was asked to rank an empty candidate pool."""


class UndefinedAUCError(TDSelectorError):
    """AUC needs at least one positive and one negative label."""


class AlphaSearchError(TDSelectorError):
    """The end-to-end evaluator failed at some grid point; carries alpha."""

    def __init__(self, message, alpha):
        super().__init__(f"{message} (alpha={alpha:g})")
        self.alpha = alpha
