"""Generate the synthetic daily load profiles used by the 57-bus PV demo.

One CSV per load bus with `time_s,P_MW,Q_MVAr` rows at 10-minute
resolution over 24 hours.  The shape is a smooth double-peaked daily
curve scaled so each bus peaks at 1.2x its static case load, with a
small amount of seeded noise so the profiles are not identical up to
scale.  Rerunning the script reproduces the files byte for byte.
"""

from __future__ import annotations

import pathlib
import sys

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from gridsim.parsers import load_case  # noqa: E402

CASE = ROOT / "src/gridsim/data/cases/case57.m"
OUT = ROOT / "src/gridsim/data/pvdemo/loads"

STEP_S = 600
DAY_S = 86400
PEAK_FACTOR = 1.2


def daily_shape(hours: np.ndarray) -> np.ndarray:
    """Normalized demand curve: overnight trough, morning rise, 19:00 peak."""
    base = 0.68
    morning = 0.22 * np.exp(-(((hours - 9.0) / 2.5) ** 2))
    evening = 0.50 * np.exp(-(((hours - 19.0) / 2.0) ** 2))
    return base + morning + evening


def main() -> None:
    case = load_case(CASE)
    OUT.mkdir(parents=True, exist_ok=True)
    times = np.arange(0, DAY_S + STEP_S, STEP_S)
    hours = times / 3600.0
    shape = daily_shape(hours)
    rng = np.random.default_rng(57)
    written = 0
    for row in case.bus:
        bus_id, pd, qd = int(row[0]), float(row[2]), float(row[3])
        if pd <= 0.0 and qd <= 0.0:
            continue
        noise = 1.0 + 0.02 * rng.standard_normal(len(times))
        profile = shape * noise
        profile *= PEAK_FACTOR / profile.max()
        lines = ["# time_s,P_MW,Q_MVAr"]
        for t, f in zip(times, profile):
            lines.append(f"{int(t)},{pd * f:.6f},{qd * f:.6f}")
        (OUT / f"load_{bus_id}.csv").write_text("\n".join(lines) + "\n")
        written += 1
    print(f"wrote {written} load profiles to {OUT}")


if __name__ == "__main__":
    main()
