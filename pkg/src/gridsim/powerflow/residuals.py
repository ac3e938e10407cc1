"""Generalized power-flow residuals in current and power injection form."""

from __future__ import annotations

import numpy as np

from .model import PowerFlowModel, ZeroVoltageError


def _check_voltages(model: PowerFlowModel, v: np.ndarray, vd: np.ndarray):
    """Guard the divisions: wye terms divide by V_i, delta terms by V_ik."""
    bad = (np.abs(v) == 0.0) & (
        (model.s_wye != 0.0) | (model.i_wye != 0.0) | (model.s_g != 0.0)
    )
    if np.any(bad):
        node = int(np.flatnonzero(bad)[0])
        bus, phase = model.index.nodes[node]
        raise ZeroVoltageError(
            f"zero voltage at node {bus}:{phase.name} with nonzero power term"
        )
    if len(vd):
        badd = (np.abs(vd) == 0.0) & ((model.ds != 0.0) | (model.dc != 0.0))
        if np.any(badd):
            j = int(np.flatnonzero(badd)[0])
            bus, phase = model.index.nodes[int(model.di[j])]
            raise ZeroVoltageError(
                f"zero phase-phase voltage on delta load at {bus}:{phase.name}"
            )


def _load_current(model: PowerFlowModel, v: np.ndarray) -> np.ndarray:
    """Current drawn by the non-admittance ZIP components, per node."""
    vd = v[model.di] - v[model.dk] if len(model.di) else np.zeros(0, complex)
    _check_voltages(model, v, vd)
    i_load = np.zeros(model.n_node, dtype=complex)
    wye = (model.s_wye != 0.0) | (model.i_wye != 0.0)
    if np.any(wye):
        vv = v[wye]
        i_load[wye] = (
            model.s_wye[wye].conj() / vv.conj()
            + model.i_wye[wye] * vv / np.abs(vv)
        )
    if len(model.di):
        contrib = model.ds.conj() / vd.conj() + model.dc * vd / np.abs(vd)
        np.add.at(i_load, model.di, contrib)
    return i_load


def residual_current(
    model: PowerFlowModel, v: np.ndarray, s_g: np.ndarray | None = None
) -> np.ndarray:
    """Complex current mismatch per node; zero iff v solves the network."""
    if s_g is None:
        s_g = model.s_g
    v = np.asarray(v, dtype=complex)
    i_gen = np.zeros(model.n_node, dtype=complex)
    has_gen = s_g != 0.0
    i_gen[has_gen] = s_g[has_gen].conj() / v[has_gen].conj()
    return i_gen - model.y @ v - _load_current(model, v)


def residual_power(
    model: PowerFlowModel, v: np.ndarray, s_g: np.ndarray | None = None
) -> np.ndarray:
    """Complex power mismatch per node; equals v * conj(current residual)."""
    if s_g is None:
        s_g = model.s_g
    v = np.asarray(v, dtype=complex)
    return s_g - v * np.conj(model.y @ v + _load_current(model, v))


def network_current(model: PowerFlowModel, v: np.ndarray) -> np.ndarray:
    """Current that must be injected by generation: Y v + ZIP draw."""
    v = np.asarray(v, dtype=complex)
    return model.y @ v + _load_current(model, v)
