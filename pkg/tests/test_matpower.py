import numpy as np
import pytest

from gridsim.network import Phase
from gridsim.parsers import (
    DanglingReferenceError,
    DuplicateBusError,
    MatpowerCase,
    MatpowerSyntaxError,
    case_to_network,
    load_case,
    matpower_parse,
)

from conftest import CASES, GOLDEN

MINI = """
function mpc = mini
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0    0   0  0  1  1.0  0  230  1  1.1  0.9;
    2  1  90  30   0  5  1  1.0  0  230  1  1.1  0.9;
];
mpc.gen = [
    1  0  0  300  -300  1.02  100  1  250  10;
];
mpc.branch = [
    1  2  0.01  0.1  0.02  130  0  0  0  0  1;
];
mpc.gencost = [
    2  0  0  3  0.02  5  0;
];
"""


def test_parse_minimal_case():
    case = matpower_parse(MINI, name="mini")
    assert case.base_mva == 100.0
    assert case.n_bus == 2
    assert case.bus.shape == (2, 13)
    assert case.gen.shape == (1, 10)
    assert case.branch.shape == (1, 11)
    assert case.gencost is not None
    assert case.name == "mini"


def test_comments_and_separators_ignored():
    text = MINI.replace(
        "2  1  90  30   0  5  1  1.0  0  230  1  1.1  0.9;",
        "2, 1, 90, 30,  0, 5, 1, 1.0, 0, 230, 1, 1.1, 0.9;  % end comment",
    )
    case = matpower_parse(text)
    assert case.bus[1, 2] == 90.0
    assert case.bus.shape == (2, 13)


def test_unknown_fields_warn_and_are_recorded():
    text = MINI + "\nmpc.bus_name = [ 1; 2 ];\n"
    with pytest.warns(UserWarning):
        case = matpower_parse(text)
    assert case.extra_fields == ["bus_name"]


def test_syntax_errors():
    with pytest.raises(MatpowerSyntaxError):
        matpower_parse("mpc.bus = [1 2 3];")  # missing baseMVA
    with pytest.raises(MatpowerSyntaxError):
        matpower_parse("mpc.baseMVA = 100;")  # missing tables
    with pytest.raises(MatpowerSyntaxError):
        matpower_parse(MINI.replace("0.01", "zz"))
    with pytest.raises(MatpowerSyntaxError):
        matpower_parse(MINI.replace("230  1  1.1  0.9;\n", "230;\n", 1))
    bad = MINI.replace(
        "mpc.branch = [", "mpc.branch = [\n 1 2 3", 1
    ).replace("1  2  0.01  0.1  0.02  130  0  0  0  0  1;", "", 1)
    with pytest.raises(MatpowerSyntaxError):
        matpower_parse(bad)


def test_duplicate_bus_rejected():
    text = MINI.replace(
        "2  1  90  30", "1  1  90  30"
    )
    with pytest.raises(DuplicateBusError):
        matpower_parse(text)


def test_dangling_references_rejected():
    with pytest.raises(DanglingReferenceError):
        matpower_parse(MINI.replace("1  0  0  300", "7  0  0  300"))
    with pytest.raises(DanglingReferenceError):
        matpower_parse(MINI.replace("1  2  0.01", "1  9  0.01"))


def test_island_slack_counting():
    # second island (buses 3-4) has no slack
    text = MINI.replace(
        "mpc.bus = [",
        "mpc.bus = [\n"
        "    3  1  10  0  0  0  1  1.0  0  230  1  1.1  0.9;\n"
        "    4  1  10  0  0  0  1  1.0  0  230  1  1.1  0.9;",
    ).replace(
        "mpc.branch = [",
        "mpc.branch = [\n    3  4  0.01  0.1  0  0  0  0  0  0  1;",
    )
    with pytest.raises(DanglingReferenceError):
        matpower_parse(text)


def test_case_to_network_structure():
    case = matpower_parse(MINI, name="mini")
    net = case_to_network(case)
    assert list(net.buses.keys()) == ["1", "2"]
    assert net.buses["1"].bus_type == "SL"
    assert net.buses["1"].phases == (Phase.BAL,)
    # slack voltage magnitude comes from the generator setpoint
    assert abs(net.buses["1"].v_nom[0]) == pytest.approx(1.02)
    assert net.buses["2"].v_mag_max == pytest.approx(1.1)
    gen = net.gens["gen_0_1"]
    assert gen.p_max == 250.0 and gen.p_min == 10.0
    assert gen.cost == (0.0, 5.0, 0.02)
    zl = net.zips["load_2"]
    assert zl.s_const[1, 0] == pytest.approx(0.9 + 0.3j)
    assert zl.y_const[1, 0] == pytest.approx(0.05j)
    br = net.branches["branch_0_1_2"]
    assert br.s_max_mva == 130.0
    assert br.model.y_series == pytest.approx(1.0 / (0.01 + 0.1j))
    assert br.model.y_shunt == pytest.approx(0.02j)


def test_out_of_service_rows_skipped():
    text = MINI.replace(
        "mpc.gen = [\n    1  0  0  300  -300  1.02  100  1  250  10;",
        "mpc.gen = [\n    1  0  0  300  -300  1.02  100  1  250  10;\n"
        "    2  0  0  300  -300  1.0  100  0  250  10;",
    )
    net = case_to_network(matpower_parse(text))
    assert "gen_1_2" not in net.gens.keys()


def test_zero_ratio_means_unity_tap():
    net = case_to_network(matpower_parse(MINI))
    assert net.branches["branch_0_1_2"].model.tap == 1.0


@pytest.mark.parametrize("case", ["case14", "case30", "case57"])
def test_canonical_json_golden(case):
    parsed = load_case(CASES / f"{case}.m")
    golden = (GOLDEN / f"{case}_canonical.json").read_text()
    assert parsed.to_canonical_json() == golden


@pytest.mark.parametrize("case", ["case14", "case57"])
def test_canonical_json_round_trip(case):
    import json

    parsed = load_case(CASES / f"{case}.m")
    doc = json.loads(parsed.to_canonical_json())
    rebuilt = MatpowerCase(
        base_mva=doc["base_mva"],
        bus=np.asarray(doc["bus"], dtype=float),
        gen=np.asarray(doc["gen"], dtype=float),
        branch=np.asarray(doc["branch"], dtype=float),
        gencost=None if doc["gencost"] is None
        else np.asarray(doc["gencost"], dtype=float),
    )
    assert rebuilt.to_canonical_json() == parsed.to_canonical_json()
