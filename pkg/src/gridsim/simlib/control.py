"""Periodic reactive-power optimization of network-coupled inverters."""

from __future__ import annotations

import math

from ..opf import IpmOptions, ipm_solve, opf_build, voltage_slack_extension
from ..simulation import SimComponent


class VoltVarController(SimComponent):
    """Runs an optimization each interval and assigns inverter Q setpoints.

    The optimization pins generator-bus voltages (matching what a plain
    power-flow solve would hold), leaves inverter reactive output free
    within each capability circle, and softens the voltage band with
    penalized slack variables so it never becomes infeasible.  The band
    used inside the optimization is tightened by ``margin_pu`` relative to
    the reported limits, giving the subsequent power-flow solution
    headroom.  ``last_slack_total`` exposes Σσ from the latest solve: zero
    means every monitored voltage fit the tightened band.
    """

    def __init__(self, id: str, network_id: str, inverter_ids=(),
                 interval_s: float = 600.0,
                 v_min_pu: float = 0.94, v_max_pu: float = 1.06,
                 margin_pu: float = 0.002, slack_weight: float = 1e4,
                 ipm_options: IpmOptions | None = None):
        super().__init__(id, dependencies={network_id, *inverter_ids})
        self.network_id = network_id
        self.inverter_ids = tuple(inverter_ids)
        self.interval_s = float(interval_s)
        self.v_min_pu = float(v_min_pu)
        self.v_max_pu = float(v_max_pu)
        self.margin_pu = float(margin_pu)
        self.slack_weight = float(slack_weight)
        self.ipm_options = ipm_options or IpmOptions(tol=1e-6, max_iter=150)
        self.last_solution = None
        self.last_slack_total = math.inf
        self.solve_count = 0
        self._net = None
        self._inverters = []

    def resolve(self, sim) -> None:
        self._net = sim.get(self.network_id)
        self._inverters = [sim.get(i) for i in self.inverter_ids]

    def initialize(self, sim) -> None:
        self.next_update_time = sim.start_time

    def update(self, t: float) -> None:
        net = self._net.network
        ext = voltage_slack_extension(
            net,
            v_min=self.v_min_pu + self.margin_pu,
            v_max=self.v_max_pu - self.margin_pu,
            weight=self.slack_weight,
        )
        # generator dispatch stays at the schedule the power flow would use;
        # the inverters' Q ranges are the only physical degrees of freedom
        saved = []
        controlled = {inv.gen_id: inv for inv in self._inverters}
        for g in net.gens:
            saved.append((g, g.p_min, g.p_max, g.q_min, g.q_max))
            inv = controlled.get(g.id)
            if inv is not None:
                p_mw = inv.p_ac_kw / 1000.0
                q_cap = inv.q_capability_kvar() / 1000.0
                g.p_min = g.p_max = p_mw
                g.q_min, g.q_max = -q_cap, q_cap
            elif g.terminal.connected:
                bus = net.buses[g.terminal.bus_id]
                if bus.bus_type == "SL":
                    # the slack absorbs whatever mismatch the power flow
                    # produces, unconstrained by its nameplate box
                    g.p_min, g.p_max = -math.inf, math.inf
                    g.q_min, g.q_max = -math.inf, math.inf
                    continue
                g.p_min = g.p_max = float(g.s.real.sum())
                # the power flow this optimization predicts does not enforce
                # generator Q limits, so the pinned-voltage bus must keep its
                # reactive injection free or the problem can turn infeasible
                g.q_min, g.q_max = -math.inf, math.inf
        try:
            problem = opf_build(net, extensions=[ext], hold_gen_voltage=True,
                                v_min=0.5, v_max=1.5, start="state")
            solution = ipm_solve(problem, self.ipm_options)
        finally:
            for g, p_lo, p_hi, q_lo, q_hi in saved:
                g.p_min, g.p_max, g.q_min, g.q_max = p_lo, p_hi, q_lo, q_hi
        self.last_solution = solution
        self.solve_count += 1
        slack_total = 0.0
        for var in ext.variables:
            slack_total += solution.extension_value(ext.name, var.name)
        self.last_slack_total = slack_total
        dispatch = solution.gen_dispatch()
        for inv in self._inverters:
            q_mvar = dispatch[inv.gen_id]["Q_MVAr"]
            inv.set_q_kvar(q_mvar * 1000.0)
        self.next_update_time = t + self.interval_s
