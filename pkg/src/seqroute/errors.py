"""Shared exception types."""


class SeqRouteError(Exception):
    pass


class DegenerateDesign(SeqRouteError, ValueError):
    """Fit cannot identify the requested coefficients from the data given."""


class AllFiltered(SeqRouteError, ValueError):
    """Pre-filtering removed every pair."""


class ParseError(SeqRouteError, ValueError):
    """A data file failed to parse; carries the offending row number."""

    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class EmptyCorpus(SeqRouteError, ValueError):
    pass


class EmptyFile(SeqRouteError, ValueError):
    pass


class ConfigError(SeqRouteError, ValueError):
    pass
