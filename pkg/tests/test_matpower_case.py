"""
Pruebas del lector de casos MATPOWER y de snapshots
"""

import json

import pytest

from src.data_sources.matpower_case import BusType, parse_matpower_case, read_case_file
from src.data_sources.snapshot import Snapshot, load_snapshot
from src.errors import CaseParseError, SnapshotError

SMALL_CASE = """
function mpc = small
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0;   % referencia
    2 1 50 10;
];
mpc.gen = [
    1 50 0 100 -100 1.0 100 1 80 0;
];
mpc.branch = [
    1 2 0.01 0.1 0 60 60 60 0 0 1 -360 360;
];
"""


def test_case9_counts(data_dir):
    case = read_case_file(str(data_dir / 'case9.m'))
    assert case.base_mva == 100
    assert len(case.buses) == 9
    assert len(case.generators) == 3
    assert len(case.branches) == 9
    assert case.bus(1).bus_type is BusType.REF
    assert case.bus(9).p_demand == 125
    assert case.generation_by_bus()[2] == (163, 300)


def test_small_case_fields():
    case = parse_matpower_case(SMALL_CASE)
    assert case.bus_ids() == [1, 2]
    branch = case.branches[0]
    assert (branch.from_bus, branch.to_bus, branch.rate_a) == (1, 2, 60)
    assert branch.impedance == complex(0.01, 0.1)


def test_accepts_bytes():
    assert len(parse_matpower_case(SMALL_CASE.encode('utf-8')).buses) == 2


def test_rows_split_across_lines_and_semicolons():
    text = "mpc.baseMVA = 10;\nmpc.bus = [1 3 0 0; 2 1 5 0\n3 1 0 0];\n"
    case = parse_matpower_case(text)
    assert case.bus_ids() == [1, 2, 3]


def test_bad_number_reports_line_and_column():
    text = "mpc.baseMVA = 100;\nmpc.bus = [\n  1 3 abc 0;\n];\n"
    with pytest.raises(CaseParseError) as info:
        parse_matpower_case(text)
    assert info.value.line == 3
    assert info.value.column == 7
    assert 'línea 3' in str(info.value)


def test_unclosed_matrix():
    with pytest.raises(CaseParseError, match='sin cerrar'):
        parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 0 0;\n")


def test_missing_base_and_bus():
    with pytest.raises(CaseParseError, match='baseMVA'):
        parse_matpower_case("mpc.bus = [1 3 0 0];")
    with pytest.raises(CaseParseError, match='mpc.bus'):
        parse_matpower_case("mpc.baseMVA = 100;")


def test_short_branch_row_names_line():
    text = "mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0; 2 1 0 0];\nmpc.branch = [\n 1 2 0.1;\n];\n"
    with pytest.raises(CaseParseError) as info:
        parse_matpower_case(text)
    assert info.value.line == 4


def test_dangling_branch_and_zero_reactance():
    with pytest.raises(CaseParseError, match='inexistente 7'):
        parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0];\nmpc.branch = [1 7 0 0.1 0 0];\n")
    with pytest.raises(CaseParseError, match='reactancia nula'):
        parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0; 2 1 0 0];\nmpc.branch = [1 2 0 0 0 0];\n")


def test_unknown_bus_type_and_isolated_bus():
    with pytest.raises(CaseParseError, match='Tipo de bus'):
        parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1 7 0 0];\n")
    case = parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0; 2 4 0 0];\n")
    assert case.bus(2).bus_type is BusType.PQ


def test_fractional_bus_id_rejected():
    with pytest.raises(CaseParseError, match='no entero'):
        parse_matpower_case("mpc.baseMVA = 100;\nmpc.bus = [1.5 3 0 0];\n")


def test_snapshot_round_trip_through_json():
    case = parse_matpower_case(SMALL_CASE)
    snap = Snapshot('t0', voltages={1: complex(1, 0), 2: complex(0.99, -0.05)}, gen_outputs={1: 50.0})
    loaded = load_snapshot(snap.to_json(), case)
    assert loaded == snap


def test_snapshot_unknown_bus_and_branch():
    case = parse_matpower_case(SMALL_CASE)
    with pytest.raises(SnapshotError, match='unknown bus 9'):
        load_snapshot(json.dumps({'voltages': [[9, 1.0, 0.0]]}), case)
    with pytest.raises(SnapshotError, match='unknown branch 2'):
        load_snapshot(json.dumps({'line_flows': [[2, 10.0]]}), case)


def test_snapshot_requires_voltages_or_flows():
    case = parse_matpower_case(SMALL_CASE)
    with pytest.raises(SnapshotError):
        load_snapshot(json.dumps({'gen_outputs': [[1, 50]]}), case)


def test_snapshot_generator_output_on_load_bus():
    case = parse_matpower_case(SMALL_CASE)
    with pytest.raises(SnapshotError, match='no tiene generador'):
        load_snapshot(json.dumps({'line_flows': [[1, 50]], 'gen_outputs': [[2, 5]]}), case)
