"""Exception hierarchy for the allocation engine.

Every engine error derives from AllocsimError so callers (CLI, service)
can map failures to exit codes / HTTP statuses in one place.
"""


class AllocsimError(Exception):
    """Base class for all engine errors."""


class DataError(AllocsimError):
    """Problems with input data (ingestion, schema)."""


class MissingColumn(DataError):
    pass


class MalformedValue(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyPopulation(DataError):
    pass


class UnknownField(DataError):
    pass


class InvalidBandwidth(AllocsimError):
    pass


class EmptyMask(AllocsimError):
    pass


class DomainError(AllocsimError):
    """Utility evaluated outside its mathematical domain."""


class ZeroBaseline(AllocsimError):
    """Welfare ratio against a zero baseline is undefined."""


class InfeasibleConstraint(AllocsimError):
    """Subgroup caps jointly unsatisfiable; allocation degrades to best effort."""


class UnlabeledInMask(AllocsimError):
    pass


class CapacityOverflow(AllocsimError):
    pass


class VariantMismatch(AllocsimError):
    """Lever applied to a utility variant it does not support."""


class CostOutOfRange(AllocsimError):
    pass


class NonInvertibleCost(AllocsimError):
    """Spend cannot be converted back to a lever magnitude."""


class NonMonotoneBenchmark(AllocsimError):
    """Benchmark gain curve failed the sampled monotonicity check."""


class TooLargeToEnumerate(AllocsimError):
    pass


class InvalidSpec(AllocsimError):
    pass


class ConfigError(AllocsimError):
    """Scenario configuration failed to parse or validate."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class AnalysisError(AllocsimError):
    """Analysis-level failure, optionally tagged with a sweep cell."""

    def __init__(self, message: str, cell: tuple | None = None):
        super().__init__(message if cell is None else f"cell {cell}: {message}")
        self.cell = cell
