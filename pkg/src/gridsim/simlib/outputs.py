"""CSV writers for per-component output channels."""

from __future__ import annotations

from pathlib import Path


class ChannelWriter:
    """Samples every component output channel after each timestep.

    Each channel becomes one CSV file ``<name>.csv`` in the output
    directory, with the channel's declared header followed by one row per
    sample.
    """

    def __init__(self, sim, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._channels = []
        for comp in sim.components:
            for name, header, row_fn in comp.output_channels():
                path = self.out_dir / f"{name}.csv"
                fh = open(path, "w")
                fh.write(header + "\n")
                self._channels.append((fh, row_fn))
        sim.add_timestep_listener(self._sample)

    def _sample(self, t: float) -> None:
        for fh, row_fn in self._channels:
            for row in row_fn(t):
                fh.write(",".join(_fmt(x) for x in row) + "\n")

    def close(self) -> None:
        for fh, _ in self._channels:
            fh.close()
        self._channels = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)
