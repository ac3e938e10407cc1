"""Flattened solver model: nodes, partition, and injection parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..network import Network, NodeIndex


class NoSlackInIslandError(ValueError):
    pass


class ZeroVoltageError(ZeroDivisionError):
    pass


SL, PV, PQ = 0, 1, 2
_TYPE_CODE = {"SL": SL, "PV": PV, "PQ": PQ}


@dataclass
class PfOptions:
    tol_pu: float = 1e-8
    max_iter: int = 50
    damping: float = 1.0
    start: str = "flat"  # flat | warm

    def __post_init__(self):
        if self.tol_pu <= 0:
            raise ValueError("tol_pu must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")
        if self.start not in ("flat", "warm"):
            raise ValueError(f"unknown start mode {self.start!r}")


@dataclass
class PowerFlowModel:
    y: sp.csr_matrix
    index: NodeIndex
    node_type: np.ndarray          # int codes SL/PV/PQ per node
    s_g: np.ndarray                # fixed complex gen injection per node (pu)
    v_sl: np.ndarray               # slack complex voltage per node (nonzero at SL)
    v_set_pv: np.ndarray           # PV magnitude setpoint per node
    s_wye: np.ndarray              # constant-power wye component per node (pu)
    i_wye: np.ndarray              # constant-current wye component per node (pu)
    v_nom: np.ndarray              # nominal complex voltage per node (pu)
    s_base_mva: float
    # Directed delta entries: entry j couples node di[j] to node dk[j].
    di: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dk: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ds: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    dc: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def n_node(self) -> int:
        return len(self.node_type)

    def partition_counts(self) -> dict[str, int]:
        return {
            "SL": int(np.sum(self.node_type == SL)),
            "PV": int(np.sum(self.node_type == PV)),
            "PQ": int(np.sum(self.node_type == PQ)),
        }


def model_build(net: Network) -> PowerFlowModel:
    """Assemble the power-flow model from a network.

    PV nodes are gen buses holding a voltage magnitude setpoint; gen buses
    without an in-service generator fall back to PQ.  Every electrical
    island must contain at least one slack node.
    """
    y, index = net.ybus()
    n = len(index)
    node_type = np.full(n, PQ, dtype=int)
    s_g = np.zeros(n, dtype=complex)
    v_sl = np.zeros(n, dtype=complex)
    v_set_pv = np.ones(n, dtype=float)
    s_wye = np.zeros(n, dtype=complex)
    i_wye = np.zeros(n, dtype=complex)
    v_nom = np.zeros(n, dtype=complex)

    gens_by_bus: dict[str, list] = {}
    for gen in net.gens:
        if gen.in_service and gen.terminal.connected:
            gens_by_bus.setdefault(gen.terminal.bus_id, []).append(gen)

    for bus in net.buses:
        sl = index.bus_nodes(bus.id)
        v_nom[sl] = bus.v_nom
        bus_gens = gens_by_bus.get(bus.id, [])
        btype = bus.bus_type
        if btype in ("PV", "SL") and not bus_gens:
            btype = "PQ"
        code = _TYPE_CODE[btype]
        node_type[sl] = code
        if code == SL:
            v_sl[sl] = bus.v_nom
        elif code == PV:
            v_set_pv[sl] = bus_gens[0].v_setpoint

    for bus_id, bus_gens in gens_by_bus.items():
        for gen in bus_gens:
            nodes = [index.index(bus_id, p) for p in gen.terminal.phase_map]
            s_g[nodes] += gen.s / net.s_base_mva

    di: list[int] = []
    dk: list[int] = []
    ds: list[complex] = []
    dc: list[complex] = []
    for zip_ in net.zips:
        if not (zip_.in_service and zip_.terminal.connected):
            continue
        nodes = [
            index.index(zip_.terminal.bus_id, p) for p in zip_.terminal.phase_map
        ]
        m = zip_.n_phase
        for i in range(m):
            s_wye[nodes[i]] += zip_.s_const[i + 1, 0]
            i_wye[nodes[i]] += zip_.i_const[i + 1, 0]
            for k in range(m):
                if k == i:
                    continue
                s_d = zip_.s_const[i + 1, k + 1]
                i_d = zip_.i_const[i + 1, k + 1]
                if s_d != 0.0 or i_d != 0.0:
                    di.append(nodes[i])
                    dk.append(nodes[k])
                    ds.append(s_d)
                    dc.append(i_d)

    _check_islands(y, node_type, index)

    return PowerFlowModel(
        y=y,
        index=index,
        node_type=node_type,
        s_g=s_g,
        v_sl=v_sl,
        v_set_pv=v_set_pv,
        s_wye=s_wye,
        i_wye=i_wye,
        v_nom=v_nom,
        s_base_mva=net.s_base_mva,
        di=np.asarray(di, dtype=int),
        dk=np.asarray(dk, dtype=int),
        ds=np.asarray(ds, dtype=complex),
        dc=np.asarray(dc, dtype=complex),
    )


def _check_islands(y: sp.csr_matrix, node_type: np.ndarray, index: NodeIndex):
    n = y.shape[0]
    structure = sp.csr_matrix(
        (np.ones(len(y.data)), y.indices, y.indptr), shape=(n, n)
    )
    n_comp, labels = connected_components(structure, directed=False)
    for comp in range(n_comp):
        members = np.flatnonzero(labels == comp)
        if not np.any(node_type[members] == SL):
            names = [f"{b}:{p.name}" for b, p in (index.nodes[i] for i in members[:5])]
            raise NoSlackInIslandError(
                f"island containing nodes {names} has no slack bus"
            )
