import cmath

import numpy as np
import pytest

from gridsim.network import (
    CommonBranch,
    GenericBranch,
    NetworkModelError,
    OverheadLine,
    SingularEliminatedBlockError,
    Transformer,
    UndergroundCable,
    clock_ratio,
    kron_reduce,
)


def test_generic_branch_shape_check():
    y = np.eye(4, dtype=complex)
    br = GenericBranch(y, 2, 2)
    np.testing.assert_array_equal(br.y_matrix(), y)
    assert br.n_phase0 == 2 and br.n_phase1 == 2
    with pytest.raises(NetworkModelError):
        GenericBranch(np.eye(3), 2, 2)


def test_common_branch_plain_line():
    z = 0.01 + 0.1j
    ysh = 0.04j
    br = CommonBranch(1.0 / z, y_shunt=ysh)
    y = br.y_matrix()
    ys = 1.0 / z
    np.testing.assert_allclose(y[0, 0], ys + ysh / 2)
    np.testing.assert_allclose(y[1, 1], ys + ysh / 2)
    np.testing.assert_allclose(y[0, 1], -ys)
    np.testing.assert_allclose(y[1, 0], -ys)


def test_common_branch_tap_and_shift():
    ys = 1.0 / (0.02 + 0.2j)
    tap, shift = 0.95, 3.0
    br = CommonBranch(ys, y_shunt=0.1j, tap=tap, phase_shift_deg=shift)
    t = tap * cmath.exp(1j * cmath.pi / 180.0 * shift)
    y = br.y_matrix()
    np.testing.assert_allclose(y[0, 0], (ys + 0.05j) / tap**2)
    np.testing.assert_allclose(y[0, 1], -ys / t.conjugate())
    np.testing.assert_allclose(y[1, 0], -ys / t)
    np.testing.assert_allclose(y[1, 1], ys + 0.05j)
    # a pure phase shifter is lossless: current injections for equal
    # rotated voltages vanish
    br2 = CommonBranch(ys, tap=1.0, phase_shift_deg=30.0)
    v = np.array([cmath.exp(1j * cmath.pi / 6.0), 1.0])
    np.testing.assert_allclose(br2.y_matrix() @ v, 0.0, atol=1e-12)


def test_common_branch_validation():
    with pytest.raises(NetworkModelError):
        CommonBranch(complex("inf"))
    with pytest.raises(NetworkModelError):
        CommonBranch(1.0, tap=0.0)
    with pytest.raises(NetworkModelError):
        CommonBranch(1.0, tap=-2.0)


def _line_z3():
    # symmetric but unbalanced 3-wire impedance matrix, ohm/km
    return np.array(
        [
            [0.35 + 1.0j, 0.05 + 0.4j, 0.04 + 0.3j],
            [0.05 + 0.4j, 0.36 + 1.1j, 0.05 + 0.35j],
            [0.04 + 0.3j, 0.05 + 0.35j, 0.34 + 0.95j],
        ]
    )


def test_overhead_line_two_port():
    z = _line_z3()
    line = OverheadLine(z, length_km=2.0)
    y = line.y_matrix()
    assert y.shape == (6, 6)
    yser = np.linalg.inv(z * 2.0)
    np.testing.assert_allclose(y[:3, :3], yser, atol=1e-12)
    np.testing.assert_allclose(y[:3, 3:], -yser, atol=1e-12)
    # equal terminal voltages -> no current
    v = np.tile([1.0, -0.5 - 0.9j, -0.5 + 0.9j], 2)
    np.testing.assert_allclose(y @ v, 0.0, atol=1e-12)


def test_overhead_line_neutral_elimination():
    z3 = _line_z3()
    zn = np.zeros((4, 4), dtype=complex)
    zn[:3, :3] = z3
    zn[3, 3] = 0.5 + 1.2j
    zn[:3, 3] = zn[3, :3] = 0.06 + 0.33j
    line = OverheadLine(zn, length_km=1.5, n_neutral=1)
    assert line.n_phase0 == 3
    y = line.y_matrix()
    z_red = kron_reduce(zn * 1.5, [0, 1, 2])
    np.testing.assert_allclose(y[:3, :3], np.linalg.inv(z_red), atol=1e-12)


def test_overhead_line_shunt_split():
    z = _line_z3()
    ysh = 1e-6j * np.eye(3)
    line = OverheadLine(z, length_km=4.0, y_shunt_per_km=ysh)
    y = line.y_matrix()
    yser = np.linalg.inv(z * 4.0)
    np.testing.assert_allclose(y[:3, :3] - yser, 4.0 * ysh / 2.0, atol=1e-15)


def test_overhead_line_validation():
    with pytest.raises(NetworkModelError):
        OverheadLine(np.ones((2, 3)), 1.0)
    z = _line_z3()
    z_asym = z.copy()
    z_asym[0, 1] = 99.0
    with pytest.raises(NetworkModelError):
        OverheadLine(z_asym, 1.0)
    with pytest.raises(NetworkModelError):
        OverheadLine(z, 1.0, n_neutral=3)
    with pytest.raises(SingularEliminatedBlockError):
        OverheadLine(z, 0.0).y_matrix()


def test_underground_cable_is_a_line():
    z = _line_z3()
    assert np.allclose(
        UndergroundCable(z, 1.0).y_matrix(), OverheadLine(z, 1.0).y_matrix()
    )


def test_clock_ratio():
    assert clock_ratio(0) == pytest.approx(1.0)
    assert clock_ratio(1) == pytest.approx(cmath.exp(-1j * cmath.pi / 6))
    assert clock_ratio(6) == pytest.approx(-1.0)
    assert clock_ratio(12) == pytest.approx(1.0)


def test_transformer_grounded_wye_pair():
    yl = 1.0 / 0.1j
    tr = Transformer("wye-grounded", "wye-grounded", y_leak=yl)
    y = tr.y_matrix()
    # decouples per phase into a plain series element
    expect = np.zeros((6, 6), dtype=complex)
    for w in range(3):
        expect[w, w] = yl
        expect[w + 3, w + 3] = yl
        expect[w, w + 3] = expect[w + 3, w] = -yl
    np.testing.assert_allclose(y, expect, atol=1e-12)


def test_transformer_turns_ratio():
    yl = 2.0 - 5.0j
    t0 = 2.0
    tr = Transformer("wye-grounded", "wye-grounded", ratio0=t0, y_leak=yl)
    y = tr.y_matrix()
    np.testing.assert_allclose(y[0, 0], yl / t0**2)
    np.testing.assert_allclose(y[0, 3], -yl / t0)
    np.testing.assert_allclose(y[3, 3], yl)
    # voltages matching the ratio carry no current
    v = np.concatenate([t0 * np.ones(3), np.ones(3)])
    np.testing.assert_allclose(y @ v, 0.0, atol=1e-12)


def test_transformer_ungrounded_wye_blocks_zero_sequence():
    tr = Transformer("wye", "wye-grounded", y_leak=1.0 / 0.05j)
    y = tr.y_matrix()
    # zero-sequence voltage on the ungrounded side drives no current
    v = np.concatenate([np.ones(3), np.zeros(3)])
    np.testing.assert_allclose(y @ v, 0.0, atol=1e-9)
    # positive-sequence excitation does
    a = cmath.exp(2j * cmath.pi / 3)
    v_pos = np.concatenate([[1.0, a**2, a], np.zeros(3)])
    assert np.linalg.norm(y @ v_pos) > 1.0


def test_transformer_delta_wye_clock_shift():
    # Dyn11-style bank realized with a clock ratio on the wye side
    tr = Transformer(
        "delta",
        "wye-grounded",
        ratio1=clock_ratio(11) / cmath.sqrt(3),
        y_leak=1.0 / 0.08j,
    )
    y = tr.y_matrix()
    assert y.shape == (6, 6)
    # no current flows when each wye winding voltage matches its delta
    # winding: delta winding w spans phases w and w+1, so for a balanced
    # positive-sequence set the winding voltage is (1 - a^2) V0_w
    a = cmath.exp(2j * cmath.pi / 3)
    v0 = np.array([1.0, a**2, a])
    v1 = tr.ratio1 * (1.0 - a**2) * v0
    np.testing.assert_allclose(y @ np.concatenate([v0, v1]), 0.0, atol=1e-9)
    # the chosen clock ratio keeps the wye side at nominal magnitude and
    # rotates it by 60 degrees
    np.testing.assert_allclose(np.abs(v1), 1.0, atol=1e-12)
    np.testing.assert_allclose(
        v1 / v0, cmath.exp(1j * cmath.pi / 3), atol=1e-12
    )


def test_transformer_magnetizing_branch():
    ym = 1e-3 - 5e-3j
    tr0 = Transformer("wye-grounded", "wye-grounded", y_leak=4.0)
    tr1 = Transformer("wye-grounded", "wye-grounded", y_leak=4.0, y_mag=ym)
    diff = tr1.y_matrix() - tr0.y_matrix()
    np.testing.assert_allclose(diff, np.diag([ym] * 3 + [0.0] * 3), atol=1e-15)


def test_transformer_validation():
    with pytest.raises(NetworkModelError):
        Transformer("star", "wye")
    with pytest.raises(NetworkModelError):
        Transformer("delta", "wye", n_phase=1)
    with pytest.raises(NetworkModelError):
        Transformer("wye", "wye", ratio0=0.0)
