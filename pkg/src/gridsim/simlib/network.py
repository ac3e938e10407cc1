"""Network wrapper and time-series-driven network members."""

from __future__ import annotations

import math

import numpy as np

from ..core import TimeSeries
from ..powerflow import PfOptions, apply_solution, nr_solve, solve_network
from ..simulation import SimComponent, SimulationError


class PowerFlowAbort(SimulationError):
    """Raised when the quasi-steady-state solve fails mid-simulation."""

    def __init__(self, t, detail):
        self.t = t
        self.detail = detail
        super().__init__(f"power flow did not converge at t={t}: {detail}")


class SimNetwork(SimComponent):
    """Holds a network and re-solves it when members mark it dirty.

    Components that change network state call :meth:`mark_dirty`; the engine
    then runs this component's contingent update, which performs exactly one
    solve per timestep no matter how many members changed.
    """

    def __init__(self, id: str, network, pf_options: PfOptions | None = None):
        super().__init__(id)
        self.network = network
        self.pf_options = pf_options or PfOptions(start="warm")
        self.solution = None
        self.solve_count = 0
        self.dirty = True

    def pre_rank(self, sim) -> None:
        # Every component that feeds this network must update first.
        # Components that declare the reverse dependency (they read the
        # solved state, e.g. a controller) are consumers, not feeders.
        for comp in sim.components:
            if (getattr(comp, "network_id", None) == self.id
                    and self.id not in comp.dependencies):
                self.depends_on(comp.id)

    def mark_dirty(self) -> None:
        self.dirty = True
        # between timesteps the flag alone is enough: the next update
        # (scheduled or contingent) performs the solve
        sim = getattr(self, "sim", None)
        if sim is not None and sim.in_timestep:
            self.needs_update.trigger()

    def initialize(self, sim) -> None:
        self.dirty = True
        self.next_update_time = sim.start_time

    def solve(self, t: float) -> None:
        try:
            sol = solve_network(self.network, self.pf_options)
        except Exception as exc:
            raise PowerFlowAbort(t, exc) from exc
        if not sol.converged:
            raise PowerFlowAbort(t, f"residual {sol.residual_norm:.3e}")
        apply_solution(self.network, sol)
        self.solution = sol
        self.solve_count += 1
        self.dirty = False

    def update(self, t: float) -> None:
        if self.dirty:
            self.solve(t)

    def node_voltage(self, bus_id, phase=None):
        bus = self.network.buses[bus_id]
        if phase is None:
            return bus.v[0]
        return bus.v[bus.phase_index(phase)]

    def output_channels(self):
        def rows(t):
            index = self.network.node_index()
            out = []
            for bus in self.network.buses:
                for j, phase in enumerate(bus.phases):
                    out.append((t, f"{bus.id}:{phase.name}", abs(bus.v[j])))
            return out

        return (("network", "time,node,Vmag_pu", rows),)


class TimeSeriesZip(SimComponent):
    """Drives a ZIP load's constant-power part from a time series.

    Series values are ``[P, Q]`` pairs per phase slot, in MW/MVAr by default
    (``units="pu"`` for per-unit).  Stepwise series schedule updates exactly
    at their knots; linearly interpolated series resample at a fixed
    interval.
    """

    def __init__(self, id: str, network_id: str, zip_id: str,
                 series: TimeSeries, units: str = "MW", scale: float = 1.0,
                 resample_interval_s: float = 600.0):
        super().__init__(id)
        self.network_id = network_id
        self.zip_id = zip_id
        self.series = series
        if units not in ("MW", "pu"):
            raise ValueError(f"unknown units {units!r}")
        self.units = units
        self.scale = float(scale)
        self.resample_interval_s = float(resample_interval_s)
        self._net = None
        self._zip = None

    def resolve(self, sim) -> None:
        self._net = sim.get(self.network_id)
        self._zip = self._net.network.zips[self.zip_id]
        if self.series.dimension != 2 * self._zip.n_phase:
            raise ValueError(
                f"{self.id}: series dimension {self.series.dimension} does not "
                f"match {2 * self._zip.n_phase} (P,Q per phase slot)"
            )

    def initialize(self, sim) -> None:
        self.next_update_time = sim.start_time

    def update(self, t: float) -> None:
        value = self.series.value_at(t) * self.scale
        base = self._net.network.s_base_mva if self.units == "MW" else 1.0
        for slot in range(self._zip.n_phase):
            p, q = value[2 * slot], value[2 * slot + 1]
            self._zip.set_wye(slot, s=complex(p, q) / base)
        self._net.mark_dirty()
        if self.series.interpolation == "stepwise":
            nxt = self.series.next_knot_after(t)
            self.next_update_time = math.inf if nxt is None else float(nxt)
        else:
            if t + self.resample_interval_s <= self.series.end_time:
                self.next_update_time = t + self.resample_interval_s
            else:
                self.next_update_time = math.inf


class TimeSeriesTapChanger(SimComponent):
    """Replays a recorded tap schedule onto a branch model."""

    def __init__(self, id: str, network_id: str, branch_id: str,
                 series: TimeSeries):
        super().__init__(id)
        self.network_id = network_id
        self.branch_id = branch_id
        self.series = series
        self._net = None
        self._branch = None

    def resolve(self, sim) -> None:
        self._net = sim.get(self.network_id)
        self._branch = self._net.network.branches[self.branch_id]

    def initialize(self, sim) -> None:
        self.next_update_time = sim.start_time

    def update(self, t: float) -> None:
        tap = float(self.series.value_at(t)[0])
        if tap != self._branch.model.tap:
            self._branch.model.tap = tap
            self._net.mark_dirty()
        nxt = self.series.next_knot_after(t)
        self.next_update_time = math.inf if nxt is None else float(nxt)
