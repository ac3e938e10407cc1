"""Polar optimal-power-flow model construction with analytic derivatives.

Variables are voltage magnitudes for every node, voltage angles for every
node (slack angles are pinned through equal bounds), real and reactive
dispatch per in-service generator, and any extension variables.  Power
balance at every node forms the nonlinear equality set; box bounds and
branch apparent-power limits form the inequality set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..powerflow.model import PQ, SL, model_build


class OpfBuildError(ValueError):
    pass


class InconsistentBoundsError(OpfBuildError):
    pass


class UnsupportedLoadError(OpfBuildError):
    pass


class DomainViolationError(ValueError):
    pass


@dataclass
class _GenEntry:
    key: str
    node_idx: np.ndarray     # node indices the gen injects into
    n_phase: int
    cost: tuple              # (c0, c1, c2) in $/h on MW
    p_pos: int               # full-vector position of P variable (pu)
    q_pos: int


@dataclass
class _BranchLimit:
    key: str
    node_idx: np.ndarray     # global node indices of the branch terminals
    y: np.ndarray            # dense per-unit terminal admittance matrix
    side0: np.ndarray        # boolean mask over terminal rows
    side1: np.ndarray
    s_max_pu: float


@dataclass
class _LinearRow:
    name: str
    cols: np.ndarray
    coeffs: np.ndarray
    const: float


@dataclass
class EvalResult:
    """Values and first derivatives at a point, plus a Hessian closure."""

    f: float
    grad: np.ndarray
    g: np.ndarray
    jac_g: np.ndarray
    h: np.ndarray
    jac_h: np.ndarray
    hess: object  # hess(lam_eq, mu_ineq, sigma=1.0) -> dense matrix over free vars


class OpfProblem:
    """Assembled optimization model over a network.

    Public attributes of note: ``n_var`` (free variable count), ``x0``
    (strictly interior start), ``names`` (full-variable names), and the
    evaluation entry point :meth:`eval_all`.
    """

    def __init__(self):
        self.names: list[str] = []
        self.lb = None
        self.ub = None
        self.x0_full = None
        self.free = None            # indices of free variables
        self.fixed_values = None    # full-length template with fixed entries set
        self.index = None           # NodeIndex
        self.y = None               # dense nodal admittance (pu)
        self.s_wye = None
        self.i_wye = None
        self.s_base_mva = 100.0
        self.gens: list[_GenEntry] = []
        self.branch_limits: list[_BranchLimit] = []
        self.lin_eq: list[_LinearRow] = []
        self.lin_ineq: list[_LinearRow] = []
        self.callback_ineq: list = []    # ExtConstraint objects
        self.q_cost = None          # direct quadratic coefficients per full var
        self.c_cost = None          # linear coefficients per full var
        self.cost0 = 0.0
        self.iv = None              # full positions of v per node
        self.ith = None             # full positions of theta per node
        self.box_ub = None          # free-var box rows (indices into full vector)
        self.box_lb = None
        self.eq_names: list[str] = []
        self.ineq_names: list[str] = []

    # -- sizes ---------------------------------------------------------------

    @property
    def n_full(self) -> int:
        return len(self.names)

    @property
    def n_var(self) -> int:
        return len(self.free)

    @property
    def n_nodes(self) -> int:
        return len(self.iv)

    @property
    def n_eq(self) -> int:
        return 2 * self.n_nodes + len(self.lin_eq)

    @property
    def n_ineq(self) -> int:
        return (len(self.box_ub) + len(self.box_lb) + 2 * len(self.branch_limits)
                + len(self.lin_ineq) + len(self.callback_ineq))

    # -- variable lookup -----------------------------------------------------

    def var_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None

    def node_index(self, bus_id, phase=None) -> int:
        for i, (bid, ph) in enumerate(self.index.nodes):
            if bid == bus_id and (phase is None or ph == phase):
                return i
        raise KeyError(f"no node for bus {bus_id!r} phase {phase!r}")

    # -- free/full mapping ---------------------------------------------------

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = self.fixed_values.copy()
        x[self.free] = x_free
        return x

    def restrict(self, x_full: np.ndarray) -> np.ndarray:
        return np.asarray(x_full, dtype=float)[self.free]

    @property
    def x0(self) -> np.ndarray:
        return self.restrict(self.x0_full)

    @property
    def lb_free(self) -> np.ndarray:
        return self.lb[self.free]

    @property
    def ub_free(self) -> np.ndarray:
        return self.ub[self.free]

    # -- evaluation ----------------------------------------------------------

    def node_voltages(self, x_full: np.ndarray) -> np.ndarray:
        v = x_full[self.iv]
        th = x_full[self.ith]
        return v * np.exp(1j * th)

    def objective(self, x_free: np.ndarray) -> float:
        x = self.expand(np.asarray(x_free, dtype=float))
        return float(np.dot(self.q_cost, x * x) + np.dot(self.c_cost, x) + self.cost0)

    def eval_all(self, x_free: np.ndarray) -> EvalResult:
        x = self.expand(np.asarray(x_free, dtype=float))
        n = self.n_nodes
        v = x[self.iv]
        if np.any(v <= 0.0):
            raise DomainViolationError("voltage magnitude must stay positive")
        V = self.node_voltages(x)
        E = V / v
        I = self.y @ V
        S = V * np.conj(I)

        # objective
        f = float(np.dot(self.q_cost, x * x) + np.dot(self.c_cost, x) + self.cost0)
        grad_full = 2.0 * self.q_cost * x + self.c_cost

        dS_dva, dS_dvm = _ds_dv(self.y, V, I, E)

        # equality values: per-node P and Q balance, then linear rows
        g = np.empty(self.n_eq)
        inj = np.zeros(n, dtype=complex)
        for ge in self.gens:
            s_g = complex(x[ge.p_pos], x[ge.q_pos]) / ge.n_phase
            for ni in ge.node_idx:
                inj[ni] += s_g
        bal = inj - S - self.s_wye - np.conj(self.i_wye) * v
        g[:n] = bal.real
        g[n:2 * n] = bal.imag
        for r, row in enumerate(self.lin_eq):
            g[2 * n + r] = float(np.dot(row.coeffs, x[row.cols]) + row.const)

        jac_g = np.zeros((self.n_eq, self.n_full))
        jac_g[:n, self.ith] = -dS_dva.real
        jac_g[n:2 * n, self.ith] = -dS_dva.imag
        jac_g[:n, self.iv] = -dS_dvm.real
        jac_g[n:2 * n, self.iv] = -dS_dvm.imag
        jac_g[np.arange(n), self.iv] -= self.i_wye.real
        jac_g[np.arange(n) + n, self.iv] += self.i_wye.imag
        for ge in self.gens:
            for ni in ge.node_idx:
                jac_g[ni, ge.p_pos] += 1.0 / ge.n_phase
                jac_g[n + ni, ge.q_pos] += 1.0 / ge.n_phase
        for r, row in enumerate(self.lin_eq):
            jac_g[2 * n + r, row.cols] = row.coeffs

        # inequalities
        h = np.empty(self.n_ineq)
        jac_h = np.zeros((self.n_ineq, self.n_full))
        pos = 0
        for j in self.box_ub:
            h[pos] = x[j] - self.ub[j]
            jac_h[pos, j] = 1.0
            pos += 1
        for j in self.box_lb:
            h[pos] = self.lb[j] - x[j]
            jac_h[pos, j] = -1.0
            pos += 1
        flow_cache = []
        for bl in self.branch_limits:
            vals, grads, cache = _flow_rows(self, bl, V, v)
            flow_cache.append(cache)
            for side in (0, 1):
                h[pos] = vals[side]
                jac_h[pos] = grads[side]
                pos += 1
        for row in self.lin_ineq:
            h[pos] = float(np.dot(row.coeffs, x[row.cols]) + row.const)
            jac_h[pos, row.cols] = row.coeffs
            pos += 1
        for con in self.callback_ineq:
            h[pos] = float(con.value(x))
            jac_h[pos] = con.grad(x)
            pos += 1

        problem = self

        def hess(lam_eq, mu_ineq, sigma=1.0):
            H = np.zeros((problem.n_full, problem.n_full))
            if sigma != 0.0:
                H[np.arange(problem.n_full), np.arange(problem.n_full)] = \
                    sigma * 2.0 * problem.q_cost
            lam_c = lam_eq[:n] - 1j * lam_eq[n:2 * n]
            Haa, Hav, Hva, Hvv = _d2s(problem.y, V, I, lam_c)
            H[np.ix_(problem.ith, problem.ith)] -= Haa.real
            H[np.ix_(problem.ith, problem.iv)] -= Hav.real
            H[np.ix_(problem.iv, problem.ith)] -= Hva.real
            H[np.ix_(problem.iv, problem.iv)] -= Hvv.real
            base = len(problem.box_ub) + len(problem.box_lb)
            for k, bl in enumerate(problem.branch_limits):
                mu0 = mu_ineq[base + 2 * k]
                mu1 = mu_ineq[base + 2 * k + 1]
                _flow_hessian(problem, bl, flow_cache[k], mu0, mu1, H)
            cb_base = problem.n_ineq - len(problem.callback_ineq)
            for k, con in enumerate(problem.callback_ineq):
                if con.hess is not None:
                    H += con.hess(x, mu_ineq[cb_base + k])
            Hf = H[np.ix_(problem.free, problem.free)]
            return 0.5 * (Hf + Hf.T)

        return EvalResult(
            f=f,
            grad=grad_full[self.free],
            g=g,
            jac_g=jac_g[:, self.free],
            h=h,
            jac_h=jac_h[:, self.free],
            hess=hess,
        )


def _ds_dv(y, V, I, E):
    """Partial derivatives of nodal complex power wrt angles and magnitudes."""
    n = len(V)
    YdV = y * V[None, :]
    dS_dva = 1j * V[:, None] * np.conj(np.diag(I) - YdV)
    dS_dvm = V[:, None] * np.conj(y * E[None, :])
    dS_dvm[np.arange(n), np.arange(n)] += np.conj(I) * E
    return dS_dva, dS_dvm


def _d2s(y, V, I, lam):
    """Hessian blocks of lamᵀS(V) wrt (angle, magnitude) pairs."""
    n = len(V)
    C = (lam * V)[:, None] * np.conj(y * V[None, :])
    D = y.conj().T * V[None, :]
    Dlam = D @ lam
    E = np.conj(V)[:, None] * (D * lam[None, :])
    E[np.arange(n), np.arange(n)] -= np.conj(V) * Dlam
    F = C.copy()
    F[np.arange(n), np.arange(n)] -= (lam * V) * np.conj(I)
    g = 1.0 / np.abs(V)
    Haa = E + F
    Hva = 1j * g[:, None] * (E - F)
    Hav = Hva.T
    Hvv = g[:, None] * (C + C.T) * g[None, :]
    return Haa, Hav, Hva, Hvv


def _flow_rows(problem, bl, V, v):
    """Apparent-power-limit values and gradients for both branch sides."""
    idx = bl.node_idx
    Vt = V[idx]
    It = bl.y @ Vt
    St = Vt * np.conj(It)
    m = len(idx)
    Et = Vt / np.abs(Vt)
    dS_dva, dS_dvm = _ds_dv(bl.y, Vt, It, Et)
    vals = []
    grads = []
    row_grads = []
    sides = []
    for w in (bl.side0, bl.side1):
        s_side = complex(np.sum(St[w]))
        gs_a = w.astype(float) @ dS_dva
        gs_v = w.astype(float) @ dS_dvm
        vals.append(abs(s_side) ** 2 - bl.s_max_pu ** 2)
        grow = np.zeros(problem.n_full)
        grow[problem.ith[idx]] = 2.0 * (np.conj(s_side) * gs_a).real
        grow[problem.iv[idx]] = 2.0 * (np.conj(s_side) * gs_v).real
        grads.append(grow)
        row_grads.append((gs_a, gs_v))
        sides.append(s_side)
    cache = (Vt, It, sides, row_grads)
    return vals, grads, cache


def _flow_hessian(problem, bl, cache, mu0, mu1, H):
    """Accumulate μ-weighted Hessians of both squared-flow rows into H."""
    Vt, It, sides, row_grads = cache
    idx = bl.node_idx
    m = len(idx)
    pos_a = problem.ith[idx]
    pos_v = problem.iv[idx]
    pos = np.concatenate([pos_a, pos_v])
    for w, s_side, (gs_a, gs_v), mu in (
        (bl.side0, sides[0], row_grads[0], mu0),
        (bl.side1, sides[1], row_grads[1], mu1),
    ):
        if mu == 0.0:
            continue
        Haa, Hav, Hva, Hvv = _d2s(bl.y, Vt, It, w.astype(complex))
        Hc = np.block([[Haa, Hav], [Hva, Hvv]])
        gs = np.concatenate([gs_a, gs_v])
        Hsub = 2.0 * (np.conj(s_side) * Hc).real \
            + 2.0 * np.outer(np.conj(gs), gs).real
        H[np.ix_(pos, pos)] += mu * Hsub


def opf_build(net, extensions=(), hold_gen_voltage=False,
              v_min=None, v_max=None, theta_bound=None, start="nominal"):
    """Construct an :class:`OpfProblem` from a network.

    ``hold_gen_voltage`` pins each generator-bus voltage magnitude to the
    generator setpoint (matching a power-flow solve); otherwise generator-bus
    voltages float inside the bus limits.  ``v_min``/``v_max`` override the
    per-bus magnitude bounds with scalars.  ``start="state"`` seeds the
    iterate from the network's current voltages and generator injections
    instead of the nominal profile — useful when re-optimizing around an
    already-solved operating point.
    """
    if start not in ("nominal", "state"):
        raise ValueError(f"unknown start mode {start!r}")
    model = model_build(net)
    if len(model.di):
        raise UnsupportedLoadError(
            "delta-connected ZIP loads are not supported in the optimization model"
        )
    p = OpfProblem()
    p.index = model.index
    p.y = model.y.toarray()
    p.s_wye = model.s_wye.copy()
    p.i_wye = model.i_wye.copy()
    p.s_base_mva = model.s_base_mva
    n = len(model.index.nodes)
    names = []
    lb = []
    ub = []
    x0 = []

    # voltage magnitudes, then angles, one per node
    p.iv = np.arange(n)
    p.ith = np.arange(n, 2 * n)
    v_lo = np.zeros(n)
    v_hi = np.zeros(n)
    for b in net.buses:
        sl = model.index.bus_slices[b.id]
        v_lo[sl] = b.v_mag_min if v_min is None else v_min
        v_hi[sl] = b.v_mag_max if v_max is None else v_max
    v_nom = model.v_nom
    v_start = v_nom
    if start == "state":
        v_start = np.zeros(n, dtype=complex)
        for b in net.buses:
            v_start[model.index.bus_slices[b.id]] = b.v
    for i, (bid, ph) in enumerate(model.index.nodes):
        names.append(f"v:{bid}:{ph.name}")
        lb.append(v_lo[i])
        ub.append(v_hi[i])
        x0.append(abs(v_start[i]) if abs(v_start[i]) > 0 else 1.0)
    tb = np.inf if theta_bound is None else float(theta_bound)
    for i, (bid, ph) in enumerate(model.index.nodes):
        names.append(f"th:{bid}:{ph.name}")
        ang = float(np.angle(v_start[i])) if abs(v_start[i]) > 0 else 0.0
        if model.node_type[i] == SL:
            lb.append(ang)
            ub.append(ang)
        else:
            lb.append(ang - tb)
            ub.append(ang + tb)
        x0.append(ang)

    # generators
    total_load = float(np.sum(model.s_wye.real))
    in_service = [(g, t) for g, t in _gen_terminals(net) if g.in_service]
    n_gen = max(len(in_service), 1)
    for g, term in in_service:
        node_idx = _terminal_nodes(model.index, term)
        p_lo, p_hi = g.p_min / p.s_base_mva, g.p_max / p.s_base_mva
        q_lo, q_hi = g.q_min / p.s_base_mva, g.q_max / p.s_base_mva
        if p_lo > p_hi or q_lo > q_hi:
            raise InconsistentBoundsError(
                f"gen {g.id!r} has empty dispatch box"
            )
        if start == "state":
            p_start = float(g.s.real.sum()) / p.s_base_mva
            q_start = float(g.s.imag.sum()) / p.s_base_mva
        else:
            p_start, q_start = total_load / n_gen, 0.0
        p_pos = len(names)
        names.append(f"pg:{g.id}")
        lb.append(p_lo)
        ub.append(p_hi)
        x0.append(float(np.clip(p_start, p_lo, p_hi)))
        q_pos = len(names)
        names.append(f"qg:{g.id}")
        lb.append(q_lo)
        ub.append(q_hi)
        x0.append(float(np.clip(q_start, q_lo, q_hi)))
        p.gens.append(_GenEntry(
            key=g.id, node_idx=np.asarray(node_idx, dtype=int),
            n_phase=len(node_idx), cost=tuple(g.cost), p_pos=p_pos, q_pos=q_pos,
        ))
        if hold_gen_voltage:
            # only buses a power-flow solve would regulate (PV/slack);
            # a generator on a PQ bus is just a negative load there
            setpoint = g.v_setpoint
            for ni in node_idx:
                if model.node_type[ni] == PQ:
                    continue
                if setpoint is None or setpoint <= 0:
                    pin = abs(v_nom[ni]) if abs(v_nom[ni]) > 0 else 1.0
                else:
                    pin = float(setpoint)
                lb[ni] = ub[ni] = x0[ni] = pin
        # equal magnitudes and nominal angle spacing across a multi-phase
        # generator bus
        if len(node_idx) > 1:
            ref = node_idx[0]
            for ni in node_idx[1:]:
                p.lin_eq.append(_LinearRow(
                    name=f"vmag_eq:{g.id}:{ni}",
                    cols=np.array([p.iv[ni], p.iv[ref]]),
                    coeffs=np.array([1.0, -1.0]), const=0.0,
                ))
                spacing = float(np.angle(v_nom[ni]) - np.angle(v_nom[ref])) \
                    if abs(v_nom[ni]) > 0 and abs(v_nom[ref]) > 0 else 0.0
                p.lin_eq.append(_LinearRow(
                    name=f"ang_eq:{g.id}:{ni}",
                    cols=np.array([p.ith[ni], p.ith[ref]]),
                    coeffs=np.array([1.0, -1.0]), const=-spacing,
                ))

    # branch apparent-power limits
    for br in net.branches:
        if not br.in_service or not np.isfinite(br.s_max_mva):
            continue
        y_br = net.branch_y_pu(br)
        node_idx = []
        for term in br.terminals:
            node_idx.extend(_terminal_nodes(model.index, term))
        m0 = len(_terminal_nodes(model.index, br.terminals[0]))
        m = len(node_idx)
        side0 = np.zeros(m, dtype=bool)
        side0[:m0] = True
        p.branch_limits.append(_BranchLimit(
            key=br.id, node_idx=np.asarray(node_idx, dtype=int),
            y=np.asarray(y_br, dtype=complex),
            side0=side0, side1=~side0,
            s_max_pu=br.s_max_mva / p.s_base_mva,
        ))

    # extensions
    ext_positions: dict[str, int] = {}
    for ext in extensions:
        for var in ext.variables:
            key = f"x:{ext.name}:{var.name}"
            if key in ext_positions:
                raise OpfBuildError(f"duplicate extension variable {key}")
            if var.lb > var.ub:
                raise InconsistentBoundsError(f"extension variable {key} has lb > ub")
            ext_positions[key] = len(names)
            names.append(key)
            lb.append(var.lb)
            ub.append(var.ub)
            x0.append(float(np.clip(var.x0, var.lb, var.ub)))

    p.names = names
    p.lb = np.asarray(lb, dtype=float)
    p.ub = np.asarray(ub, dtype=float)
    x0 = np.asarray(x0, dtype=float)

    # objective: generator polynomial cost on MW plus extension terms
    nf = len(names)
    p.q_cost = np.zeros(nf)
    p.c_cost = np.zeros(nf)
    for ge in p.gens:
        c0, c1, c2 = ge.cost
        sb = p.s_base_mva
        p.q_cost[ge.p_pos] += c2 * sb * sb
        p.c_cost[ge.p_pos] += c1 * sb
        p.cost0 += c0
    for ext in extensions:
        for var in ext.variables:
            j = ext_positions[f"x:{ext.name}:{var.name}"]
            p.c_cost[j] += var.cost_lin
            p.q_cost[j] += var.cost_quad

    # extension constraints, with symbolic references resolved to positions
    def resolve(ref):
        kind = ref[0]
        if kind == "v":
            return int(p.iv[p.node_index(*ref[1:])])
        if kind == "theta":
            return int(p.ith[p.node_index(*ref[1:])])
        if kind == "pg":
            for ge in p.gens:
                if ge.key == ref[1]:
                    return ge.p_pos
            raise KeyError(f"no generator {ref[1]!r}")
        if kind == "qg":
            for ge in p.gens:
                if ge.key == ref[1]:
                    return ge.q_pos
            raise KeyError(f"no generator {ref[1]!r}")
        if kind == "ext":
            return ext_positions[f"x:{ref[1]}:{ref[2]}"]
        raise KeyError(f"bad variable reference {ref!r}")

    for ext in extensions:
        for con in ext.linear_constraints:
            cols = np.array([resolve(r) for r, _ in con.terms], dtype=int)
            coeffs = np.array([c for _, c in con.terms], dtype=float)
            row = _LinearRow(name=f"{ext.name}:{con.name}", cols=cols,
                             coeffs=coeffs, const=con.const)
            (p.lin_eq if con.equality else p.lin_ineq).append(row)
        p.callback_ineq.extend(ext.callback_constraints)

    # eliminate variables whose bounds pin them to a point
    if np.any(p.lb > p.ub):
        bad = [names[i] for i in np.flatnonzero(p.lb > p.ub)]
        raise InconsistentBoundsError(f"lb > ub for {bad}")
    fixed = p.lb == p.ub
    p.free = np.flatnonzero(~fixed)
    p.fixed_values = np.where(fixed, p.lb, 0.0)
    x0 = np.where(fixed, p.lb, x0)
    # nudge the start strictly inside finite boxes
    for j in np.flatnonzero(~fixed):
        lo, hi = p.lb[j], p.ub[j]
        margin = 0.0
        if np.isfinite(lo) and np.isfinite(hi):
            margin = min(1e-3, 0.05 * (hi - lo))
        elif np.isfinite(lo) or np.isfinite(hi):
            margin = 1e-3
        if np.isfinite(lo):
            x0[j] = max(x0[j], lo + margin)
        if np.isfinite(hi):
            x0[j] = min(x0[j], hi - margin)
    p.x0_full = x0

    p.box_ub = np.array(
        [j for j in p.free if np.isfinite(p.ub[j])], dtype=int)
    p.box_lb = np.array(
        [j for j in p.free if np.isfinite(p.lb[j])], dtype=int)

    p.eq_names = (
        [f"P_bal:{bid}:{ph.name}" for bid, ph in model.index.nodes]
        + [f"Q_bal:{bid}:{ph.name}" for bid, ph in model.index.nodes]
        + [row.name for row in p.lin_eq]
    )
    p.ineq_names = (
        [f"ub:{names[j]}" for j in p.box_ub]
        + [f"lb:{names[j]}" for j in p.box_lb]
        + [f"flow:{bl.key}:{side}" for bl in p.branch_limits for side in (0, 1)]
        + [row.name for row in p.lin_ineq]
        + [getattr(c, "name", f"callback:{k}")
           for k, c in enumerate(p.callback_ineq)]
    )
    return p


def _gen_terminals(net):
    for g in net.gens:
        if g.terminal.connected:
            yield g, g.terminal


def _terminal_nodes(index, term):
    return [index.index(term.bus_id, ph) for ph in term.phase_map]
