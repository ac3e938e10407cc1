"""Buses, terminals, generators, and ZIP loads."""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core import PropertyBag
from .phases import Phase, nominal_voltage, sorted_phases


class NetworkModelError(ValueError):
    pass


class PhaseNotOnBusError(NetworkModelError):
    pass


class TerminalIndexError(NetworkModelError):
    pass


class Terminal:
    """Connection of one device terminal to a bus.

    phase_map lists, per device phase slot, the bus phase the slot is
    wired to.  It is ordered: slot j maps to phase_map[j].
    """

    __slots__ = ("bus_id", "phase_map")

    def __init__(self, bus_id: Optional[str] = None, phase_map: tuple[Phase, ...] = ()):
        self.bus_id = bus_id
        self.phase_map = tuple(phase_map)

    @property
    def connected(self) -> bool:
        return self.bus_id is not None

    @property
    def n_phase(self) -> int:
        return len(self.phase_map)

    def __repr__(self) -> str:
        return f"Terminal(bus={self.bus_id!r}, phases={[p.name for p in self.phase_map]})"


class Bus(PropertyBag):
    def __init__(
        self,
        id: str,
        phases=(Phase.BAL,),
        v_base: float = 1.0,
        bus_type: str = "PQ",
        v_nom=None,
        v_mag_min: float = 0.0,
        v_mag_max: float = np.inf,
    ):
        self.id = id
        self.phases = sorted_phases(phases)
        self.v_base = float(v_base)
        if bus_type not in ("SL", "PV", "PQ"):
            raise NetworkModelError(f"bus {id}: unknown type {bus_type!r}")
        self.bus_type = bus_type
        n = len(self.phases)
        if v_nom is None:
            v_nom = np.array([nominal_voltage(p) for p in self.phases])
        self.v_nom = np.asarray(v_nom, dtype=complex)
        if self.v_nom.shape != (n,):
            raise NetworkModelError(f"bus {id}: v_nom must have {n} entries")
        self.v = self.v_nom.copy()  # solution state, per unit
        self.v_mag_min = np.broadcast_to(np.asarray(v_mag_min, float), (n,)).copy()
        self.v_mag_max = np.broadcast_to(np.asarray(v_mag_max, float), (n,)).copy()
        if np.any(self.v_mag_min > self.v_mag_max):
            raise NetworkModelError(f"bus {id}: v_mag_min > v_mag_max")

    @property
    def n_phase(self) -> int:
        return len(self.phases)

    def phase_index(self, phase: Phase) -> int:
        try:
            return self.phases.index(phase)
        except ValueError:
            raise PhaseNotOnBusError(f"phase {phase.name} not on bus {self.id}") from None

    def __repr__(self) -> str:
        return f"Bus({self.id!r}, {[p.name for p in self.phases]}, {self.bus_type})"


Bus.declare_property("VMagPu", lambda bus: np.abs(bus.v))
Bus.declare_property(
    "VAngDeg", lambda bus: np.angle(bus.v, deg=True)
)
Bus.declare_property("type", lambda bus: bus.bus_type)


class Gen(PropertyBag):
    """Generator injecting complex power at one terminal.

    Powers are in MW / MVAr; the per-unit conversion happens when a solver
    model is built.
    """

    def __init__(
        self,
        id: str,
        n_phase: int = 1,
        s: complex = 0.0,
        p_min: float = -np.inf,
        p_max: float = np.inf,
        q_min: float = -np.inf,
        q_max: float = np.inf,
        v_setpoint: float = 1.0,
        cost=(0.0, 1.0, 0.0),
        in_service: bool = True,
    ):
        self.id = id
        self.terminal = Terminal()
        self.s = np.broadcast_to(np.asarray(s, complex), (n_phase,)).copy()
        self.p_min = float(p_min)
        self.p_max = float(p_max)
        self.q_min = float(q_min)
        self.q_max = float(q_max)
        if self.p_min > self.p_max:
            raise NetworkModelError(f"gen {id}: p_min > p_max")
        if self.q_min > self.q_max:
            raise NetworkModelError(f"gen {id}: q_min > q_max")
        self.v_setpoint = float(v_setpoint)
        c0, c1, c2 = cost
        self.cost = (float(c0), float(c1), float(c2))
        self.in_service = bool(in_service)

    @property
    def n_phase(self) -> int:
        return len(self.s)

    def total_cost(self, p_mw: float) -> float:
        c0, c1, c2 = self.cost
        return c0 + c1 * p_mw + c2 * p_mw * p_mw

    def __repr__(self) -> str:
        return f"Gen({self.id!r}, S={self.s})"


Gen.declare_property("P_MW", lambda g: g.s.real.sum())
Gen.declare_property("Q_MVAr", lambda g: g.s.imag.sum())
Gen.declare_property("inService", lambda g: g.in_service)


class Zip(PropertyBag):
    """ZIP load between phases and/or phase to ground, in per unit.

    The component matrices are (n+1) x (n+1) with slot 0 representing
    ground and slot j >= 1 representing terminal phase slot j-1.  Entry
    (i, 0) is a phase-to-ground (wye) component on slot i-1; entry (i, k)
    with i, k >= 1 and i != k is a phase-to-phase (delta) component and is
    stored symmetrically.  Diagonal entries are unused and stay zero.
    """

    def __init__(self, id: str, n_phase: int = 1, in_service: bool = True):
        self.id = id
        self.terminal = Terminal()
        m = n_phase + 1
        self.y_const = np.zeros((m, m), dtype=complex)
        self.i_const = np.zeros((m, m), dtype=complex)
        self.s_const = np.zeros((m, m), dtype=complex)
        self.in_service = bool(in_service)

    @property
    def n_phase(self) -> int:
        return self.y_const.shape[0] - 1

    def _check_slot(self, slot: int) -> None:
        if not 0 <= slot < self.n_phase:
            raise NetworkModelError(f"zip {self.id}: phase slot {slot} out of range")

    def set_wye(self, slot: int, s: complex = None, i: complex = None, y: complex = None):
        self._check_slot(slot)
        if s is not None:
            self.s_const[slot + 1, 0] = s
        if i is not None:
            self.i_const[slot + 1, 0] = i
        if y is not None:
            self.y_const[slot + 1, 0] = y

    def set_delta(self, slot_a: int, slot_b: int, s: complex = None, i: complex = None, y: complex = None):
        self._check_slot(slot_a)
        self._check_slot(slot_b)
        if slot_a == slot_b:
            raise NetworkModelError(f"zip {self.id}: delta needs two distinct slots")
        a, b = slot_a + 1, slot_b + 1
        if s is not None:
            self.s_const[a, b] = self.s_const[b, a] = s
        if i is not None:
            self.i_const[a, b] = self.i_const[b, a] = i
        if y is not None:
            self.y_const[a, b] = self.y_const[b, a] = y

    def __repr__(self) -> str:
        return f"Zip({self.id!r}, n_phase={self.n_phase})"


Zip.declare_property("SConstTotal", lambda z: complex(z.s_const.sum()))
Zip.declare_property("inService", lambda z: z.in_service)
