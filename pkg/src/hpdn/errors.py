"""Exception hierarchy shared by every stage of the pipeline."""


class HpdnError(Exception):
    """Base class for all errors raised by this package."""


class MissingColumn(HpdnError):
    pass


class MalformedRow(HpdnError):
    def __init__(self, row_number: int, message: str):
        super().__init__(f"row {row_number}: {message}")
        self.row_number = row_number


class EmptySelection(HpdnError):
    pass


class EmptyGraph(HpdnError):
    pass


class UnknownNode(HpdnError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class PartitionMismatch(HpdnError):
    pass


class NonIntegerWeights(HpdnError):
    pass


class EmptyValues(HpdnError):
    pass


class UnmappedFacility(HpdnError):
    pass


class MissingAdjacency(HpdnError):
    pass


class InvalidConfig(HpdnError):
    pass


class SchemaMismatch(HpdnError):
    pass


class BadBoundaryFile(HpdnError):
    pass


class NoResidentDischarges(HpdnError):
    """A community whose ZCTAs send no discharges has no localization index."""


class ZeroStrength(HpdnError):
    """A community with no incident link weight has no conductance."""
