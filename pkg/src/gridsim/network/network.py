"""The Network container and nodal admittance assembly."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from ..core import ComponentCollection, PropertyBag
from .branches import BranchModel
from .components import (
    Bus,
    Gen,
    NetworkModelError,
    PhaseNotOnBusError,
    TerminalIndexError,
    Zip,
)
from .phases import Phase, parse_phase


class UnknownIdError(NetworkModelError):
    pass


class UnconnectedTerminalError(NetworkModelError):
    pass


class Branch(PropertyBag):
    """A branch instance: a model plus its two terminals and a rating."""

    def __init__(
        self,
        id: str,
        model: BranchModel,
        s_max_mva: float = np.inf,
        in_service: bool = True,
    ):
        from .components import Terminal

        self.id = id
        self.model = model
        self.terminals = (Terminal(), Terminal())
        self.s_max_mva = float(s_max_mva)
        self.in_service = bool(in_service)

    def __repr__(self) -> str:
        return f"Branch({self.id!r}, {type(self.model).__name__})"


class NodeIndex:
    """Deterministic (bus, phase) -> flat node numbering.

    Nodes are ordered by bus insertion order, then by the canonical phase
    order within each bus.  This ordering is part of the public contract.
    """

    def __init__(self, buses: Iterable[Bus]):
        self.nodes: list[tuple[str, Phase]] = []
        self._lookup: dict[tuple[str, Phase], int] = {}
        self.bus_slices: dict[str, slice] = {}
        for bus in buses:
            start = len(self.nodes)
            for phase in bus.phases:
                self._lookup[(bus.id, phase)] = len(self.nodes)
                self.nodes.append((bus.id, phase))
            self.bus_slices[bus.id] = slice(start, len(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)

    def index(self, bus_id: str, phase: Phase) -> int:
        return self._lookup[(bus_id, phase)]

    def bus_nodes(self, bus_id: str) -> slice:
        return self.bus_slices[bus_id]


class Network:
    def __init__(self, s_base_mva: float = 100.0, frequency_hz: float = 50.0):
        self.buses = ComponentCollection()
        self.branches = ComponentCollection()
        self.gens = ComponentCollection()
        self.zips = ComponentCollection()
        self.s_base_mva = float(s_base_mva)
        self.frequency_hz = float(frequency_hz)

    # -- construction -----------------------------------------------------

    def add_bus(self, bus: Bus) -> Bus:
        self.buses.insert(bus.id, bus)
        return bus

    def add_branch(
        self,
        branch: Branch,
        bus0: Optional[str] = None,
        bus1: Optional[str] = None,
        phase_map0=None,
        phase_map1=None,
    ) -> Branch:
        self.branches.insert(branch.id, branch)
        if bus0 is not None:
            self.connect_terminal(branch, 0, bus0, phase_map0)
        if bus1 is not None:
            self.connect_terminal(branch, 1, bus1, phase_map1)
        return branch

    def add_gen(self, gen: Gen, bus: Optional[str] = None, phase_map=None) -> Gen:
        self.gens.insert(gen.id, gen)
        if bus is not None:
            self.connect_terminal(gen, 0, bus, phase_map)
        return gen

    def add_zip(self, zip_: Zip, bus: Optional[str] = None, phase_map=None) -> Zip:
        self.zips.insert(zip_.id, zip_)
        if bus is not None:
            self.connect_terminal(zip_, 0, bus, phase_map)
        return zip_

    def find_device(self, device_id: str):
        for coll in (self.branches, self.gens, self.zips):
            item = coll.get(device_id)
            if item is not None:
                return item
        raise UnknownIdError(f"no branch/gen/zip with id {device_id!r}")

    def connect_terminal(self, device, terminal_index: int, bus_id: str, phase_map=None):
        """Bind one device terminal to a bus through a phase map.

        phase_map lists the bus phase wired to each device phase slot; by
        default slots map onto the bus phases in order.
        """
        if isinstance(device, str):
            device = self.find_device(device)
        bus = self.buses.get(bus_id)
        if bus is None:
            raise UnknownIdError(f"no bus with id {bus_id!r}")
        if isinstance(device, Branch):
            if terminal_index not in (0, 1):
                raise TerminalIndexError(
                    f"branch terminal index must be 0 or 1, got {terminal_index}"
                )
            terminal = device.terminals[terminal_index]
            n_slot = (device.model.n_phase0, device.model.n_phase1)[terminal_index]
        else:
            if terminal_index != 0:
                raise TerminalIndexError(
                    f"{type(device).__name__.lower()} has a single terminal 0, "
                    f"got index {terminal_index}"
                )
            terminal = device.terminal
            n_slot = device.n_phase
        if phase_map is None:
            phase_map = bus.phases[:n_slot]
        phase_map = tuple(parse_phase(p) for p in phase_map)
        if len(phase_map) != n_slot:
            raise NetworkModelError(
                f"{device.id}: phase map has {len(phase_map)} entries, "
                f"terminal has {n_slot} slots"
            )
        for phase in phase_map:
            if phase not in bus.phases:
                raise PhaseNotOnBusError(
                    f"{device.id}: phase {phase.name} not on bus {bus_id}"
                )
        terminal.bus_id = bus_id
        terminal.phase_map = phase_map

    # -- assembly ---------------------------------------------------------

    def node_index(self) -> NodeIndex:
        return NodeIndex(self.buses)

    def _z_base_ohm(self, bus: Bus) -> float:
        return bus.v_base**2 / (self.s_base_mva * 1e6)

    def _terminal_nodes(self, terminal, index: NodeIndex) -> list[int]:
        return [index.index(terminal.bus_id, p) for p in terminal.phase_map]

    def branch_y_pu(self, branch: Branch) -> np.ndarray:
        """Branch terminal admittance in per unit."""
        y = branch.model.y_matrix()
        if branch.model.physical_units:
            buses = [
                self.buses[t.bus_id]
                for t in branch.terminals
                if t.connected
            ]
            if len(buses) < 2:
                raise UnconnectedTerminalError(
                    f"branch {branch.id}: both terminals must be connected"
                )
            zb0, zb1 = (self._z_base_ohm(b) for b in buses)
            if not np.isclose(zb0, zb1):
                raise NetworkModelError(
                    f"branch {branch.id}: physical-unit model between buses "
                    "with different impedance bases"
                )
            y = y * zb0
        return y

    def ybus(self) -> tuple[sp.csr_matrix, NodeIndex]:
        """Assemble the sparse nodal admittance matrix, per unit on S_base."""
        index = self.node_index()
        n = len(index)
        rows: list[int] = []
        cols: list[int] = []
        vals: list[complex] = []

        def stamp(i: int, k: int, y: complex):
            rows.append(i)
            cols.append(k)
            vals.append(y)

        for branch in self.branches:
            if not branch.in_service:
                continue
            for t_idx, terminal in enumerate(branch.terminals):
                if not terminal.connected:
                    raise UnconnectedTerminalError(
                        f"branch {branch.id} terminal {t_idx} is not connected"
                    )
            y = self.branch_y_pu(branch)
            gidx = self._terminal_nodes(
                branch.terminals[0], index
            ) + self._terminal_nodes(branch.terminals[1], index)
            for a, ga in enumerate(gidx):
                for b, gb in enumerate(gidx):
                    if y[a, b] != 0.0:
                        stamp(ga, gb, y[a, b])

        for zip_ in self.zips:
            if not zip_.in_service:
                continue
            if not zip_.terminal.connected:
                raise UnconnectedTerminalError(
                    f"zip {zip_.id} terminal is not connected"
                )
            gidx = self._terminal_nodes(zip_.terminal, index)
            yc = zip_.y_const
            m = zip_.n_phase
            for i in range(m):
                y_gnd = yc[i + 1, 0]
                if y_gnd != 0.0:
                    stamp(gidx[i], gidx[i], y_gnd)
                for k in range(i + 1, m):
                    y_pp = yc[i + 1, k + 1]
                    if y_pp != 0.0:
                        stamp(gidx[i], gidx[i], y_pp)
                        stamp(gidx[k], gidx[k], y_pp)
                        stamp(gidx[i], gidx[k], -y_pp)
                        stamp(gidx[k], gidx[i], -y_pp)

        for gen in self.gens:
            if gen.in_service and not gen.terminal.connected:
                raise UnconnectedTerminalError(
                    f"gen {gen.id} terminal is not connected"
                )

        y = sp.coo_matrix(
            (np.asarray(vals, complex), (rows, cols)), shape=(n, n)
        ).tocsr()
        return y, index

    # -- diagnostics --------------------------------------------------------

    def to_json_dict(self) -> dict:
        """Diagnostic dump: ids, phases, and Y-bus triplets."""
        y, index = self.ybus()
        coo = y.tocoo()
        return {
            "s_base_mva": self.s_base_mva,
            "frequency_hz": self.frequency_hz,
            "buses": [
                {
                    "id": b.id,
                    "type": b.bus_type,
                    "phases": [p.name for p in b.phases],
                    "v_base": b.v_base,
                }
                for b in self.buses
            ],
            "branches": [
                {
                    "id": br.id,
                    "model": type(br.model).__name__,
                    "bus0": br.terminals[0].bus_id,
                    "bus1": br.terminals[1].bus_id,
                    "in_service": br.in_service,
                }
                for br in self.branches
            ],
            "gens": [
                {"id": g.id, "bus": g.terminal.bus_id, "in_service": g.in_service}
                for g in self.gens
            ],
            "zips": [
                {"id": z.id, "bus": z.terminal.bus_id, "in_service": z.in_service}
                for z in self.zips
            ],
            "nodes": [[bus_id, phase.name] for bus_id, phase in index.nodes],
            "ybus_triplets": [
                [int(i), int(k), v.real, v.imag]
                for i, k, v in zip(coo.row, coo.col, coo.data)
            ],
        }
