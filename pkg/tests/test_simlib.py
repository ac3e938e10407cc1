import math

import numpy as np
import pytest

from gridsim.core import TimeSeries
from gridsim.network import Branch, Bus, CommonBranch, Gen, Network, Zip
from gridsim.powerflow import PfOptions
from gridsim.simlib import (
    AutoTapChanger,
    Battery,
    Building,
    ChannelWriter,
    Heartbeat,
    Inverter,
    PowerFlowAbort,
    PvInverter,
    SimNetwork,
    SolarPv,
    TimeSeriesTapChanger,
    TimeSeriesZip,
    VoltVarController,
    Weather,
)
from gridsim.simlib.weather import (
    clear_sky_dni,
    cloud_attenuation,
    panel_incidence_cos,
    solar_position,
)
from gridsim.simulation import Simulation


NOON = 12 * 3600.0
MIDNIGHT = 0.0


def _grid():
    """Slack bus feeding a load bus over a tapped line."""
    net = Network(s_base_mva=100.0)
    net.add_bus(Bus("src", bus_type="SL"))
    net.add_bus(Bus("ld"))
    ys = 1.0 / (0.01 + 0.05j)
    net.add_branch(Branch("line", CommonBranch(ys, tap=1.0)), "src", "ld")
    net.add_gen(Gen("slack"), "src")
    z = Zip("load", n_phase=1)
    z.set_wye(0, s=0.4 + 0.1j)
    net.add_zip(z, "ld")
    return net


def test_heartbeat_ticks():
    sim = Simulation(0, 100)
    hb = sim.add(Heartbeat("hb", 25.0))
    sim.run()
    assert hb.tick_count == 5  # t = 0, 25, 50, 75, 100
    with pytest.raises(ValueError):
        Heartbeat("bad", 0.0)


def test_battery_charge_discharge_with_efficiency():
    bat = Battery("b", capacity_kwh=10.0, eta_charge=0.9, eta_discharge=0.8)
    got = bat.step(3600.0, 2.0)
    assert got == pytest.approx(2.0)
    assert bat.charge_kwh == pytest.approx(1.8)  # 2 kWh in, 90% stored
    got = bat.step(3600.0, -1.0)
    assert got == pytest.approx(-1.0)
    # delivering 1 kWh at 80% efficiency drains 1.25 kWh of charge
    assert bat.charge_kwh == pytest.approx(1.8 - 1.25)


def test_battery_saturation_and_events():
    bat = Battery("b", capacity_kwh=1.0, max_charge_kw=5.0)
    full_events = []
    bat.charge_full.register("t", lambda: full_events.append(1))
    got = bat.step(3600.0, 10.0)
    assert got == pytest.approx(1.0)  # clipped by headroom, not the 5 kW limit
    assert bat.charge_kwh == pytest.approx(1.0)
    assert full_events == [1]
    empty_events = []
    bat.charge_empty.register("t", lambda: empty_events.append(1))
    got = bat.step(3600.0, -10.0)
    assert got == pytest.approx(-1.0)
    assert bat.charge_kwh == pytest.approx(0.0)
    assert empty_events == [1]


def test_battery_power_limit():
    bat = Battery("b", capacity_kwh=100.0, max_charge_kw=3.0,
                  max_discharge_kw=2.0, charge_kwh=50.0)
    assert bat.step(60.0, 9.0) == pytest.approx(3.0)
    assert bat.step(60.0, -9.0) == pytest.approx(-2.0)


def test_battery_validation():
    with pytest.raises(ValueError):
        Battery("b", capacity_kwh=0.0)
    with pytest.raises(ValueError):
        Battery("b", capacity_kwh=1.0, eta_charge=1.5)
    with pytest.raises(ValueError):
        Battery("b", capacity_kwh=1.0, charge_kwh=2.0)
    with pytest.raises(ValueError):
        Battery("b", capacity_kwh=1.0).step(0.0, 1.0)


def test_battery_conservation_random_walk():
    rng = np.random.default_rng(17)
    bat = Battery("b", capacity_kwh=5.0, charge_kwh=2.0,
                  eta_charge=0.95, eta_discharge=0.9,
                  max_charge_kw=4.0, max_discharge_kw=4.0)
    energy = bat.charge_kwh
    for _ in range(2000):
        dt = float(rng.uniform(1.0, 900.0))
        p = bat.step(dt, float(rng.uniform(-6.0, 6.0)))
        dt_h = dt / 3600.0
        if p >= 0:
            energy += bat.eta_charge * p * dt_h
        else:
            energy -= (-p / bat.eta_discharge) * dt_h
        assert 0.0 - 1e-9 <= bat.charge_kwh <= bat.capacity_kwh + 1e-9
        assert bat.charge_kwh == pytest.approx(energy, abs=1e-9)


def test_solar_position_noon_overhead_at_equinox():
    # near an equinox at latitude 0 the noon sun is close to the zenith
    t_equinox = (31 + 28 + 21) * 86400.0 + NOON
    cos_z, _ = solar_position(t_equinox, 0.0, 0.0)
    assert cos_z > 0.99


def test_clear_sky_irradiance_shape():
    assert clear_sky_dni(0.0) == 0.0
    assert clear_sky_dni(-0.5) == 0.0
    overhead = clear_sky_dni(1.0)
    assert overhead == pytest.approx(1353.0 * 0.7)
    assert clear_sky_dni(0.5) < overhead


def test_cloud_attenuation_monotone():
    assert cloud_attenuation(0.0) == 1.0
    assert cloud_attenuation(1.0) == pytest.approx(0.25)
    values = [cloud_attenuation(c) for c in np.linspace(0, 1, 11)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_panel_incidence():
    # flat panel: incidence equals solar zenith projection
    assert panel_incidence_cos(0.8, 1.0, 0.0, 180.0) == pytest.approx(0.8)
    # vertical panel facing away from the sun sees nothing
    assert panel_incidence_cos(0.1, 0.0, 90.0, 180.0) == 0.0


def test_weather_day_night_cycle():
    w = Weather("wx", latitude_deg=35.0, cloud_cover=0.0)
    assert w.direct_normal(NOON) > 500.0
    assert w.direct_normal(MIDNIGHT) == 0.0
    cloudy = Weather("wx2", latitude_deg=35.0, cloud_cover=0.8)
    assert cloudy.direct_normal(NOON) < w.direct_normal(NOON)
    with pytest.raises(ValueError):
        Weather("bad", cloud_cover=1.5)


def test_weather_series_sources():
    temp = TimeSeries([0, 3600], [10.0, 20.0], interpolation="linear")
    cloud = TimeSeries([0, 3600], [0.0, 2.0], interpolation="linear")
    w = Weather("wx", temperature_series=temp, cloud_series=cloud)
    assert w.temperature(1800) == pytest.approx(15.0)
    assert w.cloud(3600) == 1.0  # clamped into [0, 1]


def test_solar_pv_output():
    sim = Simulation(0, 0)
    sim.add(Weather("wx", latitude_deg=35.0))
    pv = sim.add(SolarPv("pv", "wx", area_m2=10.0, efficiency=0.2))
    sim.initialize()
    p_noon = pv.dc_power_kw(NOON)
    # winter sun at 35 degrees latitude still yields most of the rated output
    assert 0.5 < p_noon < 10.0 * 0.2 * 1353.0 / 1000.0
    summer_noon = 171 * 86400.0 + NOON
    assert pv.dc_power_kw(summer_noon) > p_noon
    assert pv.dc_power_kw(MIDNIGHT) == 0.0
    # power scales linearly with area and efficiency
    pv2 = SolarPv("pv2", "wx", area_m2=20.0, efficiency=0.2)
    pv2.weather = pv.weather
    assert pv2.dc_power_kw(NOON) == pytest.approx(2 * p_noon)
    with pytest.raises(ValueError):
        SolarPv("bad", "wx", area_m2=10.0, efficiency=0.0)


def test_inverter_efficiency_and_ceiling():
    sim = Simulation(0, 0)
    sim.add(Weather("wx", latitude_deg=35.0))
    sim.add(SolarPv("pv", "wx", area_m2=100.0, efficiency=0.2))
    inv = sim.add(Inverter("inv", ("pv",), efficiency=0.95, s_max_kva=5.0))
    sim.initialize()
    assert inv.ac_power_kw(NOON) == pytest.approx(
        min(0.95 * sim.get("pv").dc_power_kw(NOON), 5.0)
    )
    assert inv.ac_power_kw(MIDNIGHT) == 0.0


def test_sim_network_with_time_series_zip():
    net = _grid()
    sim = Simulation(0, 1200)
    grid = sim.add(SimNetwork("grid", net, PfOptions(start="warm")))
    series = TimeSeries([0, 600, 1200], [[40.0, 10.0], [80.0, 20.0], [20.0, 5.0]])
    sim.add(TimeSeriesZip("ld_drive", "grid", "load", series))
    sim.run()
    # one solve per knot, driven by contingent updates
    assert grid.solve_count == 3
    # final state reflects the last knot (20 MW load)
    assert net.zips["load"].s_const[1, 0] == pytest.approx(0.20 + 0.05j)
    v_ld = abs(grid.node_voltage("ld"))
    assert 0.9 < v_ld < 1.0


def test_sim_network_solve_failure_aborts():
    net = _grid()
    net.zips["load"].set_wye(0, s=500.0)
    sim = Simulation(0, 10)
    sim.add(SimNetwork("grid", net, PfOptions(max_iter=10)))
    with pytest.raises(PowerFlowAbort):
        sim.run()


def test_time_series_zip_dimension_check():
    net = _grid()
    sim = Simulation(0, 10)
    sim.add(SimNetwork("grid", net))
    sim.add(TimeSeriesZip("bad", "grid", "load", TimeSeries([0], [1.0])))
    with pytest.raises(Exception, match="dimension"):
        sim.initialize()


def test_time_series_tap_changer():
    net = _grid()
    sim = Simulation(0, 1200)
    grid = sim.add(SimNetwork("grid", net))
    taps = TimeSeries([0, 600], [1.0, 0.95])
    sim.add(TimeSeriesTapChanger("tap", "grid", "line", taps))
    sim.run()
    assert net.branches["line"].model.tap == pytest.approx(0.95)
    # lowering the tap raises the regulated-side voltage
    assert abs(grid.node_voltage("ld")) > 0.95


def test_auto_tap_changer_regulates_low_voltage():
    net = _grid()
    net.zips["load"].set_wye(0, s=1.5 + 0.8j)  # deep sag
    sim = Simulation(0, 600)
    grid = sim.add(SimNetwork("grid", net))
    atc = sim.add(AutoTapChanger(
        "atc", "grid", "line", "ld",
        v_ref_pu=1.0, deadband_pu=0.02, tap_step=0.0125, delay_s=30.0,
    ))
    sim.run()
    assert atc.move_count >= 1
    assert net.branches["line"].model.tap < 1.0
    # each move happened only after the delay elapsed
    assert abs(grid.node_voltage("ld")) > 0.9


def test_auto_tap_changer_respects_deadband():
    net = _grid()
    net.zips["load"].set_wye(0, s=0.05 + 0.01j)  # nearly unloaded
    sim = Simulation(0, 600)
    sim.add(SimNetwork("grid", net))
    atc = sim.add(AutoTapChanger("atc", "grid", "line", "ld",
                                 deadband_pu=0.05))
    sim.run()
    assert atc.move_count == 0
    assert net.branches["line"].model.tap == 1.0


def test_building_exponential_step_matches_closed_form():
    sim = Simulation(0, 0)
    sim.add(Weather("wx", temperature_c=0.0))
    bld = Building("house", "wx", r_deg_per_kw=5.0, c_kwh_per_deg=2.0,
                   t_initial_c=20.0)
    bld.q_hvac_kw = 0.0
    dt = 1800.0
    rc_s = 5.0 * 2.0 * 3600.0
    expect = 0.0 + (20.0 - 0.0) * math.exp(-dt / rc_s)
    bld.step(dt, 0.0)
    assert bld.t_int == pytest.approx(expect, abs=1e-12)
    # with internal gains the trajectory converges to T_ext + R*Q
    bld.q_gain_kw = 1.0
    for _ in range(1000):
        bld.step(36000.0, 0.0)
    assert bld.t_int == pytest.approx(5.0, abs=1e-9)


def test_building_thermostat_hysteresis():
    sim = Simulation(0, 0)
    sim.add(Weather("wx", temperature_c=-10.0))
    bld = Building("house", "wx", r_deg_per_kw=5.0, c_kwh_per_deg=0.5,
                   t_initial_c=18.0, hvac_thermal_kw=8.0, cop=4.0,
                   t_set_c=20.0, t_deadband_c=1.0)
    bld._thermostat()
    assert bld.q_hvac_kw == 8.0  # below band: heating
    assert bld.p_hvac_kw == pytest.approx(2.0)
    bld.t_int = 20.5  # inside band: hysteresis keeps heating
    bld._thermostat()
    assert bld.q_hvac_kw == 8.0
    bld.t_int = 21.5  # above band: cooling
    bld._thermostat()
    assert bld.q_hvac_kw == -8.0


def test_building_drives_zip_load():
    net = _grid()
    sim = Simulation(0, 1200)
    sim.add(SimNetwork("grid", net))
    sim.add(Weather("wx", temperature_c=-20.0))
    sim.add(Building(
        "house", "wx", r_deg_per_kw=2.0, c_kwh_per_deg=1.0,
        t_initial_c=10.0, hvac_thermal_kw=400.0, cop=4.0,
        network_id="grid", zip_id="load", update_interval_s=600.0,
    ))
    sim.run()
    # heating load of 100 kW appears on the ZIP (0.001 pu on 100 MVA)
    assert net.zips["load"].s_const[1, 0].real == pytest.approx(1e-3)


def test_pv_inverter_writes_gen_and_clips_q():
    net = _grid()
    net.add_gen(Gen("pv_gen", n_phase=1), "ld")
    sim = Simulation(0, 0)
    sim.add(SimNetwork("grid", net))
    sim.add(Weather("wx", latitude_deg=35.0))
    sim.add(SolarPv("pv", "wx", area_m2=5000.0, efficiency=0.2))
    inv = sim.add(PvInverter(
        "inv", "grid", "pv_gen", ("pv",), s_max_kva=500.0,
        q_mode="opf-controlled",
    ))
    sim.initialize()
    summer_noon = 171 * 86400.0 + NOON  # high sun so the DC side saturates
    assert inv.dc_input_kw(summer_noon) > 500.0
    inv.update(summer_noon)
    assert inv.p_ac_kw == pytest.approx(500.0)  # clipped at the ceiling
    assert inv.q_capability_kvar() == pytest.approx(0.0)
    inv.set_q_kvar(300.0)
    assert inv.q_ac_kvar == pytest.approx(0.0)  # no headroom at full P
    inv.p_ac_kw = 300.0
    assert inv.q_capability_kvar() == pytest.approx(400.0)
    inv.set_q_kvar(1000.0)
    assert inv.q_ac_kvar == pytest.approx(400.0)
    assert net.gens["pv_gen"].s[0] == pytest.approx((300.0 + 400.0j) / 1000.0)
    with pytest.raises(ValueError):
        PvInverter("x", "grid", "g", q_mode="psychic")


def test_pre_rank_feeders_vs_consumers():
    net = _grid()
    net.add_gen(Gen("pv_gen", n_phase=1), "ld")
    sim = Simulation(0, 0)
    grid = sim.add(SimNetwork("grid", net))
    sim.add(Weather("wx"))
    sim.add(SolarPv("pv", "wx", area_m2=10.0, efficiency=0.2))
    inv = sim.add(PvInverter("inv", "grid", "pv_gen", ("pv",)))
    vvc = sim.add(VoltVarController("vvc", "grid", ("inv",)))
    sim.rank_components()
    # the inverter feeds the network; the controller consumes its solution
    assert "inv" in grid.dependencies
    assert "vvc" not in grid.dependencies
    assert vvc.rank > grid.rank > inv.rank


def test_volt_var_controller_small_network():
    net = _grid()
    # stiffen the feeder load so the far bus sags below the band
    net.zips["load"].set_wye(0, s=1.1 + 0.45j)
    net.add_gen(Gen("pv_gen", n_phase=1), "ld")
    sim = Simulation(0, 0)
    grid = sim.add(SimNetwork("grid", net))
    sim.add(Weather("wx", latitude_deg=35.0))
    sim.add(SolarPv("pv", "wx", area_m2=1000.0, efficiency=0.2))
    sim.add(PvInverter(
        "inv", "grid", "pv_gen", ("pv",), s_max_kva=60_000.0,
        q_mode="opf-controlled",
    ))
    vvc = sim.add(VoltVarController(
        "vvc", "grid", ("inv",), v_min_pu=0.97, v_max_pu=1.03,
        slack_weight=1e4,
    ))
    sim.initialize()
    # without control the load bus is outside the band
    grid.solve(0.0)
    v_before = abs(grid.node_voltage("ld"))
    assert v_before < 0.97
    sim.do_timestep()
    assert vvc.solve_count == 1
    assert vvc.last_solution.status == "optimal"
    v_after = abs(grid.node_voltage("ld"))
    assert v_after > v_before
    if vvc.last_slack_total < 1e-6:
        assert 0.97 - 1e-3 <= v_after <= 1.03 + 1e-3


def test_channel_writer(tmp_path):
    net = _grid()
    sim = Simulation(0, 600)
    sim.add(SimNetwork("grid", net))
    series = TimeSeries([0, 600], [[40.0, 10.0], [60.0, 15.0]])
    sim.add(TimeSeriesZip("drive", "grid", "load", series))
    with ChannelWriter(sim, tmp_path):
        sim.run()
    content = (tmp_path / "network.csv").read_text().strip().split("\n")
    assert content[0] == "time,node,Vmag_pu"
    assert len(content) == 1 + 2 * 2  # 2 timesteps x 2 nodes
    assert content[1].startswith("0,src:BAL,1")
