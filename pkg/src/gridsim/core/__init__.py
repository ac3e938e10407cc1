from .collections import (
    ComponentCollection,
    DuplicateKeyError,
    Handle,
    MissingKeyError,
)
from .events import ActionToken, Event, StaleTokenError
from .properties import (
    PropertyBag,
    PropertyTypeError,
    ReadOnlyPropertyError,
    UnknownPropertyError,
    to_json_value,
)
from .timeseries import (
    CLAMP,
    ERROR,
    LINEAR,
    STEPWISE,
    TimeSeries,
    TimeSeriesRangeError,
    parse_time,
)

__all__ = [
    "ComponentCollection",
    "DuplicateKeyError",
    "Handle",
    "MissingKeyError",
    "ActionToken",
    "Event",
    "StaleTokenError",
    "PropertyBag",
    "PropertyTypeError",
    "ReadOnlyPropertyError",
    "UnknownPropertyError",
    "to_json_value",
    "TimeSeries",
    "TimeSeriesRangeError",
    "parse_time",
    "STEPWISE",
    "LINEAR",
    "CLAMP",
    "ERROR",
]
