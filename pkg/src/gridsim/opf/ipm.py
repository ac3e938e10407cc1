"""Primal-dual interior-point solver for the assembled optimization model.

Monotone barrier strategy: a damped Newton method on the perturbed KKT
conditions at fixed barrier parameter, shrinking the barrier by a constant
factor once the inner system is solved to the barrier's own scale.  Dense
linear algebra throughout — the model sizes this library targets stay in
the low hundreds of variables.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np


class NumericalBreakdownError(RuntimeError):
    pass


@dataclass
class IpmOptions:
    mu0: float = 0.1
    mu_shrink: float = 0.2
    tol: float = 1e-6
    max_iter: int = 100
    fraction_to_boundary: float = 0.995
    mu_min: float = 1e-12
    # each multiplier is kept within this factor of mu_b / s after a step,
    # preventing dual blowup on slacks that crash into their bounds
    kappa_sigma: float = 1e10

    def __post_init__(self):
        if not 0.0 < self.mu_shrink < 1.0:
            raise ValueError("mu_shrink must be in (0, 1)")
        if not 0.0 < self.fraction_to_boundary < 1.0:
            raise ValueError("fraction_to_boundary must be in (0, 1)")


@dataclass
class OpfSolution:
    x: np.ndarray                  # full variable vector
    x_free: np.ndarray
    lam: np.ndarray                # equality multipliers
    mu: np.ndarray                 # inequality multipliers (>= 0)
    s: np.ndarray                  # inequality slacks (> 0)
    objective: float
    status: str                    # optimal | max_iter | infeasible-detected
    kkt: dict
    iterations: int
    problem: object
    build_s: float = 0.0
    solve_s: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == "optimal"

    def gen_dispatch(self) -> dict:
        """Per-generator dispatch in MW / MVAr."""
        sb = self.problem.s_base_mva
        return {
            ge.key: {
                "P_MW": float(self.x[ge.p_pos] * sb),
                "Q_MVAr": float(self.x[ge.q_pos] * sb),
            }
            for ge in self.problem.gens
        }

    def node_voltages(self) -> np.ndarray:
        return self.problem.node_voltages(self.x)

    def binding_constraints(self, tol: float = 1e-6) -> list[str]:
        names = self.problem.ineq_names
        out = []
        for i in range(len(self.s)):
            if abs(float(self.s[i])) < 1e-5 and self.mu[i] > tol:
                out.append(names[i])
        return out

    def extension_value(self, ext_name: str, var_name: str) -> float:
        return float(self.x[self.problem.var_index(f"x:{ext_name}:{var_name}")])

    def to_json_dict(self) -> dict:
        V = self.node_voltages()
        return {
            "status": self.status,
            "objective": self.objective,
            "iterations": self.iterations,
            "kkt": {k: float(v) for k, v in self.kkt.items()},
            "gens": self.gen_dispatch(),
            "nodes": [
                {
                    "bus": bid,
                    "phase": ph.name,
                    "Vmag_pu": float(abs(V[i])),
                    "Varg_deg": float(np.degrees(np.angle(V[i]))),
                }
                for i, (bid, ph) in enumerate(self.problem.index.nodes)
            ],
            "binding_constraints": self.binding_constraints(),
            "timing": {"build_s": self.build_s, "solve_s": self.solve_s},
        }


def _kkt_norms(res, lam, mu, s):
    """Scaled residual norms of the (unperturbed) KKT system."""
    r_d = res.grad + res.jac_g.T @ lam + res.jac_h.T @ mu
    scale_d = 1.0 + max(
        np.max(np.abs(lam)) if len(lam) else 0.0,
        np.max(np.abs(mu)) if len(mu) else 0.0,
    )
    return {
        "stationarity": float(np.max(np.abs(r_d)) / scale_d) if len(r_d) else 0.0,
        "primal": float(np.max(np.abs(res.g))) if len(res.g) else 0.0,
        "dual": float(np.max(np.abs(res.h + s))) if len(s) else 0.0,
        "complementarity": float(np.max(np.abs(mu * s)) / scale_d) if len(s) else 0.0,
    }


def kkt_residual(problem, solution) -> dict:
    """Recompute the four KKT residual norms at a solution point."""
    res = problem.eval_all(solution.x_free)
    return _kkt_norms(res, solution.lam, solution.mu, solution.s)


def ipm_solve(problem, opts: IpmOptions | None = None) -> OpfSolution:
    opts = opts or IpmOptions()
    t0 = time.perf_counter()
    nx = problem.n_var
    x = problem.x0.copy()
    res = problem.eval_all(x)
    n_eq = len(res.g)
    n_in = len(res.h)
    lam = np.zeros(n_eq)
    s = np.maximum(-res.h, 1e-2)
    mu_b = opts.mu0
    mu = np.full(n_in, mu_b) / s if n_in else np.zeros(0)

    status = "max_iter"
    it = 0
    for it in range(1, opts.max_iter + 1):
        norms = _kkt_norms(res, lam, mu, s)
        if max(norms.values()) <= opts.tol:
            status = "optimal"
            break

        # Newton step on the barrier KKT system with the slack/multiplier
        # block eliminated
        r_d = res.grad + res.jac_g.T @ lam + res.jac_h.T @ mu
        r_g = res.g
        r_h = res.h + s
        r_c = mu * s - mu_b

        H = res.hess(lam, mu, sigma=1.0)
        if n_in:
            sigma = mu / s
            Hbar = H + res.jac_h.T @ (sigma[:, None] * res.jac_h)
            rhs_x = -r_d - res.jac_h.T @ ((mu * r_h - r_c) / s)
        else:
            Hbar = H
            rhs_x = -r_d

        kkt = np.zeros((nx + n_eq, nx + n_eq))
        kkt[:nx, :nx] = Hbar
        kkt[:nx, nx:] = res.jac_g.T
        kkt[nx:, :nx] = res.jac_g
        rhs = np.concatenate([rhs_x, -r_g])
        step = _solve_reg(kkt, rhs, nx)
        dx = step[:nx]
        dlam = step[nx:]
        if n_in:
            ds = -r_h - res.jac_h @ dx
            dmu = (mu_b - mu * s - mu * ds) / s
        else:
            ds = np.zeros(0)
            dmu = np.zeros(0)

        tau = opts.fraction_to_boundary
        alpha_p = _max_step(s, ds, tau)
        alpha_d = _max_step(mu, dmu, tau)
        # keep voltage magnitudes in the open domain
        alpha_p = min(alpha_p, _domain_step(problem, x, dx))

        x = x + alpha_p * dx
        s = s + alpha_p * ds
        lam = lam + alpha_d * dlam
        mu = mu + alpha_d * dmu
        if n_in:
            kappa = opts.kappa_sigma
            mu = np.clip(mu, mu_b / (kappa * s), kappa * mu_b / s)

        res = problem.eval_all(x)

        # monotone barrier update once the inner system is solved to the
        # barrier's own scale
        inner = _kkt_norms_barrier(res, lam, mu, s, mu_b)
        if inner <= max(mu_b, opts.tol):
            mu_b = max(mu_b * opts.mu_shrink, opts.mu_min)

    norms = _kkt_norms(res, lam, mu, s)
    if status != "optimal" and max(norms.values()) <= opts.tol:
        status = "optimal"
    if status == "max_iter":
        mult_scale = max(
            np.max(np.abs(lam)) if n_eq else 0.0,
            np.max(np.abs(mu)) if n_in else 0.0,
        )
        if mult_scale > 1e8 and norms["primal"] > opts.tol:
            status = "infeasible-detected"

    return OpfSolution(
        x=problem.expand(x),
        x_free=x,
        lam=lam,
        mu=mu,
        s=s,
        objective=res.f,
        status=status,
        kkt=norms,
        iterations=it,
        problem=problem,
        solve_s=time.perf_counter() - t0,
    )


def _kkt_norms_barrier(res, lam, mu, s, mu_b) -> float:
    r_d = res.grad + res.jac_g.T @ lam + res.jac_h.T @ mu
    parts = [np.max(np.abs(r_d)) if len(r_d) else 0.0]
    if len(res.g):
        parts.append(np.max(np.abs(res.g)))
    if len(s):
        parts.append(np.max(np.abs(res.h + s)))
        parts.append(np.max(np.abs(mu * s - mu_b)))
    return float(max(parts))


def _max_step(z, dz, tau) -> float:
    neg = dz < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, tau * np.min(-z[neg] / dz[neg])))


def _domain_step(problem, x, dx) -> float:
    """Largest step keeping every free voltage magnitude positive."""
    free = problem.free
    v_mask = np.isin(free, problem.iv)
    v = x[v_mask]
    dv = dx[v_mask]
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, 0.9 * np.min(-v[neg] / dv[neg])))


def _solve_reg(kkt, rhs, nx):
    """Solve the KKT system, adding diagonal regularization on breakdown."""
    reg = 0.0
    for attempt in range(6):
        m = kkt
        if reg > 0.0:
            m = kkt.copy()
            m[:nx, :nx] += reg * np.eye(nx)
            m[nx:, nx:] -= reg * np.eye(kkt.shape[0] - nx)
        try:
            step = np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError:
            reg = max(reg * 100.0, 1e-10)
            continue
        if np.all(np.isfinite(step)):
            return step
        reg = max(reg * 100.0, 1e-10)
    raise NumericalBreakdownError("KKT system is numerically singular")
