"""Time series with stepwise or linear interpolation.

Times are integer seconds since the Unix epoch; quasi-steady-state work
never needs sub-second resolution.  Values are fixed-dimension real
vectors, so a single series can carry e.g. (P, Q) pairs per knot.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

import numpy as np

STEPWISE = "stepwise"
LINEAR = "linear"
CLAMP = "clamp"
ERROR = "error"


class TimeSeriesRangeError(ValueError):
    """Raised when a lookup falls outside the series and policy is 'error'."""


def parse_time(value) -> int:
    """Parse an ISO-8601 timestamp or an integer second count."""
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float):
        if value != int(value):
            raise ValueError(f"non-integer timestamp: {value!r}")
        return int(value)
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        pass
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


class TimeSeries:
    def __init__(
        self,
        times,
        values,
        interpolation: str = STEPWISE,
        out_of_range: str = CLAMP,
    ):
        self.times = np.asarray(times, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.values = values
        if interpolation not in (STEPWISE, LINEAR):
            raise ValueError(f"unknown interpolation {interpolation!r}")
        if out_of_range not in (CLAMP, ERROR):
            raise ValueError(f"unknown out-of-range policy {out_of_range!r}")
        self.interpolation = interpolation
        self.out_of_range = out_of_range
        if len(self.times) == 0:
            raise ValueError("time series must contain at least one point")
        if len(self.times) != len(self.values):
            raise ValueError("times and values must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def start_time(self) -> int:
        return int(self.times[0])

    @property
    def end_time(self) -> int:
        return int(self.times[-1])

    def value_at(self, t) -> np.ndarray:
        t = parse_time(t)
        if t < self.times[0] or t > self.times[-1]:
            if self.out_of_range == ERROR:
                raise TimeSeriesRangeError(
                    f"time {t} outside series range "
                    f"[{self.times[0]}, {self.times[-1]}]"
                )
            t = min(max(t, int(self.times[0])), int(self.times[-1]))
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        if self.interpolation == STEPWISE or self.times[idx] == t:
            return self.values[idx].copy()
        t0, t1 = self.times[idx], self.times[idx + 1]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.values[idx] + w * self.values[idx + 1]

    def next_knot_after(self, t) -> int | None:
        """Earliest knot time strictly greater than t, or None."""
        t = parse_time(t)
        idx = int(np.searchsorted(self.times, t, side="right"))
        if idx >= len(self.times):
            return None
        return int(self.times[idx])

    @classmethod
    def from_csv(
        cls,
        path,
        interpolation: str = STEPWISE,
        out_of_range: str = CLAMP,
    ) -> "TimeSeries":
        """Load `time,value1[,value2...]` rows; '#' starts a comment line."""
        times: list[int] = []
        values: list[list[float]] = []
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected time,value[,...]")
            times.append(parse_time(parts[0]))
            values.append([float(p) for p in parts[1:]])
        return cls(times, values, interpolation, out_of_range)
