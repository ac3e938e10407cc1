"""Rectangular current-injection Newton-Raphson solver."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..network import Network
from .jacobian import JacobianAssembler
from .model import PQ, PV, SL, PfOptions, PowerFlowModel, model_build
from .residuals import network_current, residual_current


class SingularJacobianError(RuntimeError):
    pass


class PowerFlowDidNotConverge(RuntimeError):
    def __init__(self, solution: "PfSolution"):
        self.solution = solution
        super().__init__(
            f"power flow did not converge in {solution.iterations} iterations "
            f"(residual {solution.residual_norm:.3e} pu)"
        )


@dataclass
class PfSolution:
    v: np.ndarray                  # complex node voltages (pu)
    s_g: np.ndarray                # complex gen injection per node (pu)
    iterations: int
    converged: bool
    residual_norm: float
    build_s: float = 0.0
    solve_s: float = 0.0
    factor_s: float = 0.0
    model: PowerFlowModel | None = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        model = self.model
        per_node = []
        if model is not None:
            for i, (bus, phase) in enumerate(model.index.nodes):
                per_node.append(
                    {
                        "bus": bus,
                        "phase": phase.name,
                        "Vmag_pu": float(np.abs(self.v[i])),
                        "Varg_deg": float(np.angle(self.v[i], deg=True)),
                    }
                )
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "residual_pu": float(self.residual_norm),
            "timing": {
                "build_s": self.build_s,
                "solve_s": self.solve_s,
                "factor_s": self.factor_s,
            },
            "nodes": per_node,
        }


def flat_start(model: PowerFlowModel) -> np.ndarray:
    """Nominal angles, unit magnitude at PQ, setpoint magnitude at PV."""
    v = np.array(model.v_nom, dtype=complex)
    mag = np.abs(v)
    unit = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)
    v = np.where(model.node_type == PQ, np.where(mag > 0, unit, 0.0), v)
    pv = model.node_type == PV
    v[pv] = unit[pv] * model.v_set_pv[pv]
    sl = model.node_type == SL
    v[sl] = model.v_sl[sl]
    return v


def _residual_vector(model, v, s_g, free, pv_nodes):
    r = residual_current(model, v, s_g)
    mag = np.abs(v[pv_nodes]) ** 2 - model.v_set_pv[pv_nodes] ** 2
    return np.concatenate([r[free].real, r[free].imag, mag])


def nr_solve(model: PowerFlowModel, opts: PfOptions | None = None) -> PfSolution:
    """Newton iteration on the current-injection residuals.

    PV nodes keep |V| at the setpoint through an added magnitude equation
    with the reactive generation as a matching extra unknown.  Slack nodes
    are held fixed and their generation recovered afterwards.
    """
    if opts is None:
        opts = PfOptions()
    t0 = time.perf_counter()
    n = model.n_node
    free = np.flatnonzero(model.node_type != SL)
    pv_nodes = np.flatnonzero(model.node_type == PV)
    nf, npv = len(free), len(pv_nodes)

    if opts.start == "flat":
        v = flat_start(model)
    else:
        v = np.array(model.v_nom, dtype=complex)
        sl = model.node_type == SL
        v[sl] = model.v_sl[sl]

    q_g = model.s_g[pv_nodes].imag.copy()
    s_g = model.s_g.copy()

    factor_s = 0.0
    iterations = 0
    converged = False
    fvec = _residual_vector(model, v, s_g, free, pv_nodes)
    norm = float(np.max(np.abs(fvec))) if len(fvec) else 0.0

    # Column positions of each free node inside the reduced real system.
    col_of = np.full(n, -1, dtype=int)
    col_of[free] = np.arange(nf)

    extra_pattern = None
    if npv:
        pv_cols = col_of[pv_nodes]
        # dQg column / magnitude-row positions are fixed; values per iter.
        extra_rows = np.concatenate([
            pv_cols, nf + pv_cols,                      # dQg columns
            2 * nf + np.arange(npv), 2 * nf + np.arange(npv),  # |V| rows
        ])
        extra_cols = np.concatenate([
            2 * nf + np.arange(npv), 2 * nf + np.arange(npv),
            pv_cols, nf + pv_cols,
        ])
        extra_pattern = (extra_rows, extra_cols, npv)
    assembler = JacobianAssembler(model, free, extra_pattern)

    while iterations < opts.max_iter:
        if norm <= opts.tol_pu:
            converged = True
            break
        iterations += 1

        if npv:
            # dQg columns: dr_i/dQg_i = -1j / conj(V_i).
            dq = -1j / v[pv_nodes].conj()
            extra_vals = np.concatenate([
                dq.real, dq.imag,
                2.0 * v[pv_nodes].real, 2.0 * v[pv_nodes].imag,
            ])
            jac = assembler.assemble(v, s_g, extra_vals)
        else:
            jac = assembler.assemble(v, s_g)

        tf = time.perf_counter()
        try:
            lu = spla.splu(jac)
        except RuntimeError as exc:
            raise SingularJacobianError(f"singular Jacobian: {exc}") from None
        factor_s += time.perf_counter() - tf
        dx = lu.solve(-fvec)

        alpha = opts.damping
        best = None
        for _ in range(5):
            v_try = v.copy()
            v_try[free] = v[free] + alpha * (dx[:nf] + 1j * dx[nf : 2 * nf])
            q_try = q_g + alpha * dx[2 * nf :]
            s_try = s_g.copy()
            s_try[pv_nodes] = model.s_g[pv_nodes].real + 1j * q_try
            f_try = _residual_vector(model, v_try, s_try, free, pv_nodes)
            norm_try = float(np.max(np.abs(f_try))) if len(f_try) else 0.0
            best = (v_try, q_try, s_try, f_try, norm_try)
            if norm_try < norm or norm <= opts.tol_pu:
                break
            alpha *= 0.5
        v, q_g, s_g, fvec, norm = best

    if norm <= opts.tol_pu:
        converged = True

    # Recover generation at slack (and final PV reactive power).
    s_g_out = s_g.copy()
    sl = np.flatnonzero(model.node_type == SL)
    if len(sl):
        inj = network_current(model, v)
        s_g_out[sl] = v[sl] * np.conj(inj[sl])

    return PfSolution(
        v=v,
        s_g=s_g_out,
        iterations=iterations,
        converged=converged,
        residual_norm=norm,
        solve_s=time.perf_counter() - t0,
        factor_s=factor_s,
        model=model,
    )


def apply_solution(net: Network, sol: PfSolution) -> None:
    """Write solved voltages and recovered generation back to the network."""
    model = sol.model
    index = model.index
    for bus in net.buses:
        bus.v = sol.v[index.bus_nodes(bus.id)].copy()

    gens_by_bus: dict[str, list] = {}
    for gen in net.gens:
        if gen.in_service and gen.terminal.connected:
            gens_by_bus.setdefault(gen.terminal.bus_id, []).append(gen)
    for bus in net.buses:
        bus_gens = gens_by_bus.get(bus.id)
        if not bus_gens:
            continue
        sl = index.bus_slices[bus.id]
        node_codes = model.node_type[sl]
        if np.all(node_codes == PQ):
            continue
        nodes = list(range(sl.start, sl.stop))
        for node_pos, node in enumerate(nodes):
            code = model.node_type[node]
            phase = bus.phases[node_pos]
            attached = [
                g for g in bus_gens if phase in g.terminal.phase_map
            ]
            if not attached:
                continue
            if code == SL:
                share = sol.s_g[node] * net.s_base_mva / len(attached)
                for gen in attached:
                    gen.s[gen.terminal.phase_map.index(phase)] = share
            elif code == PV:
                q_total = sol.s_g[node].imag * net.s_base_mva
                q_fixed = sum(
                    g.s[g.terminal.phase_map.index(phase)].imag for g in attached
                )
                dq = (q_total - q_fixed) / len(attached)
                for gen in attached:
                    slot = gen.terminal.phase_map.index(phase)
                    gen.s[slot] = gen.s[slot].real + 1j * (gen.s[slot].imag + dq)


def solve_network(
    net: Network, opts: PfOptions | None = None, raise_on_failure: bool = False
) -> PfSolution:
    """Build the model, run Newton, and write the solution back."""
    t0 = time.perf_counter()
    model = model_build(net)
    build_s = time.perf_counter() - t0
    sol = nr_solve(model, opts)
    sol.build_s = build_s
    if sol.converged:
        apply_solution(net, sol)
    elif raise_on_failure:
        raise PowerFlowDidNotConverge(sol)
    return sol


def recover_flows(net: Network, sol: PfSolution) -> dict:
    """Per-terminal complex power and current, bus-into-terminal sign."""
    model = sol.model
    index = model.index
    flows: dict[str, dict] = {}
    for branch in net.branches:
        if not branch.in_service:
            continue
        y = net.branch_y_pu(branch)
        gidx = [
            index.index(t.bus_id, p)
            for t in branch.terminals
            for p in t.phase_map
        ]
        v_term = sol.v[gidx]
        i_term = y @ v_term
        s_term = v_term * np.conj(i_term)
        n0 = branch.model.n_phase0
        flows[branch.id] = {
            "I0": i_term[:n0],
            "I1": i_term[n0:],
            "S0": s_term[:n0],
            "S1": s_term[n0:],
        }
    return flows


def total_balance(net: Network, sol: PfSolution) -> complex:
    """Total generation minus load minus losses; ~0 at a converged state."""
    model = sol.model
    inj = network_current(model, sol.v)
    total_gen = np.sum(sol.s_g)
    total_consumed = np.sum(sol.v * np.conj(inj))
    return complex(total_gen - total_consumed)
