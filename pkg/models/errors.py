# models/errors.py
from typing import List, Optional


class CarbonSchedError(Exception):
    """Base class for every error raised by the scheduler and simulator"""


class IngestionError(CarbonSchedError, ValueError):
    def __init__(self, message: str, path: Optional[str] = None,
                 row: Optional[int] = None, timestamp: Optional[str] = None):
        self.path = path
        self.row = row
        self.timestamp = timestamp
        context = []
        if path:
            context.append(str(path))
        if row is not None:
            context.append(f"row {row}")
        if timestamp:
            context.append(timestamp)
        super().__init__(f"{message} ({', '.join(context)})" if context else message)


class SlotRangeError(CarbonSchedError, IndexError):
    pass


class CostError(SlotRangeError):
    pass


class ForecastError(CarbonSchedError, ValueError):
    pass


class PolicyDataError(CarbonSchedError, ValueError):
    pass


class NoEligibleRegionError(CarbonSchedError, ValueError):
    pass


class CommitError(CarbonSchedError, ValueError):
    pass


class PlacementError(CarbonSchedError, ValueError):
    pass


class TraceError(CarbonSchedError, ValueError):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"{message} (row {row})" if row is not None else message)


class ConfigError(CarbonSchedError, ValueError):
    """Collects every problem found in a config so they can be listed at once"""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DatasetMissingError(ConfigError):
    pass


class SchemaVersionError(CarbonSchedError, ValueError):
    pass


class PowerModelError(CarbonSchedError, ValueError):
    pass
