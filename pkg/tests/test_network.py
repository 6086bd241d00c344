"""
Pruebas del modelo de red, del formato JSON y de la construcción desde casos MATPOWER
"""

import json

import numpy as np
import pytest

from src.data_sources.matpower_case import parse_matpower_case, read_case_file
from src.data_sources.network_file import (network_from_dict, network_to_dict, parse_network,
                                           roundtrip_network)
from src.data_sources.snapshot import Snapshot
from src.errors import ConservationError, NetworkValidationError, SolverError
from src.network.builder import (build_network, bus_entity_ids, generate_idrs, generator_bus_ids,
                                 split_generator_buses)
from src.network.dc_flow import DirectedFlow, compute_line_flows, real_power_flow, solve_dc_flow
from src.network.model import EntityKind, Idr, natural_key

TWO_BUS_CASE = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0;
    2 1 50 10;
];
mpc.gen = [
    1 50 0 100 -100 1.0 100 1 80 0;
];
mpc.branch = [
    1 2 0.01 0.1 0 60 60 60 0 0 1 -360 360;
];
"""


# Red de ejemplo de nueve buses: G1-G3 son los buses 1-3, L1-L4 los buses 4-7 y N1-N2 los buses 8-9
SMALL_CASE = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0;
    2 2 0 0;
    3 2 0 0;
    4 1 30 0;
    5 1 40 0;
    6 1 50 0;
    7 1 60 0;
    8 1 0 0;
    9 1 0 0;
];
mpc.gen = [
    1 75 0 100 -100 1.0 100 1 150 0;
    2 50 0 100 -100 1.0 100 1 150 0;
    3 55 0 100 -100 1.0 100 1 150 0;
];
mpc.branch = [
    1 4 0.01 0.1 0 150;
    4 5 0.01 0.1 0 150;
    4 6 0.01 0.1 0 150;
    8 6 0.01 0.1 0 150;
    3 8 0.01 0.1 0 150;
    8 7 0.01 0.1 0 150;
    9 5 0.01 0.1 0 150;
    9 7 0.01 0.1 0 150;
    2 9 0.01 0.1 0 150;
];
"""
SMALL_FLOWS = {1: 75.0, 2: 20.0, 3: 25.0, 4: 25.0, 5: 55.0, 6: 30.0, 7: 20.0, 8: 30.0, 9: 50.0}
SMALL_NAMES = {'L4': 'L1', 'L5': 'L2', 'L6': 'L3', 'L7': 'L4', 'N8': 'N1', 'N9': 'N2'}

BUS_TYPES_CASE = """
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0 0;
    2 2 0 0;
    3 1 50 0;
    4 1 0 0;
    5 1 0 0;
];
mpc.gen = [
    1 30 0 100 -100 1.0 100 1 80 0;
    4 20 0 100 -100 1.0 100 1 40 0;
];
mpc.branch = [
    1 3 0.01 0.1 0 60;
    2 3 0.01 0.1 0 60;
    4 5 0.01 0.1 0 60;
    5 3 0.01 0.1 0 60;
];
"""


def _chain_dict(**overrides):
    data = {
        'entities': [
            {'id': 'G1', 'kind': 'generator', 'lower_bound': 0, 'upper_bound': 20, 'value': 10},
            {'id': 'L2', 'kind': 'load', 'lower_bound': 10, 'upper_bound': 10, 'value': 10},
            {'id': 'T1', 'kind': 'line', 'lower_bound': 0, 'upper_bound': 20, 'value': 10},
        ],
        'lines': [{'id': 'T1', 'from_entity': 'G1', 'to_entity': 'L2'}],
        'idrs': {'L2': [['T1', 'G1']]},
    }
    data.update(overrides)
    return data


class TestModel:

    def test_natural_order(self):
        assert sorted(['T10', 'T2', 'G1', 'T1'], key=natural_key) == ['G1', 'T1', 'T2', 'T10']

    def test_small_shape(self, small_network):
        assert len(small_network) == 18
        assert small_network.buses() == ['G1', 'G2', 'G3', 'L1', 'L2', 'L3', 'L4', 'N1', 'N2']
        assert len(small_network.lines()) == 9
        assert small_network.minterm_count() == 9
        assert small_network.out_lines('N1') == ['T4', 'T6']
        assert small_network.in_lines('L4') == ['T6', 'T8']

    def test_conservation_holds_on_samples(self, small_network, southwest_network):
        for network in (small_network, southwest_network):
            assert all(abs(r) < 1e-9 for r in network.conservation_residuals().values())

    def test_idr_satisfied(self):
        idr = Idr.of('L2', [['L1', 'T2'], ['N2', 'T7']])
        assert idr.satisfied({'T2'})
        assert not idr.satisfied({'T2', 'N2'})
        assert str(idr) == 'L2 <- L1·T2 + N2·T7'

    def test_fingerprint_is_stable(self, small_network):
        assert small_network.fingerprint() == roundtrip_network(small_network).fingerprint()

    def test_dependency_cycle_rejected(self):
        data = _chain_dict(idrs={'L2': [['T1', 'G1'], ['L2']]})
        with pytest.raises(NetworkValidationError, match='ciclos'):
            network_from_dict(data)

    def test_generator_idr_rejected(self):
        data = _chain_dict(idrs={'L2': [['T1', 'G1']], 'G1': [['L2']]})
        with pytest.raises(NetworkValidationError, match='generador'):
            network_from_dict(data)

    def test_conservation_error_names_bus(self):
        data = _chain_dict()
        data['entities'][0]['value'] = 12
        with pytest.raises(ConservationError) as info:
            network_from_dict(data)
        assert info.value.entity_id == 'G1'

    def test_load_must_pin_demand(self):
        data = _chain_dict()
        data['entities'][1]['upper_bound'] = 11
        with pytest.raises(NetworkValidationError, match='L2'):
            network_from_dict(data)

    def test_unknown_minterm_member(self):
        with pytest.raises(NetworkValidationError, match='T9'):
            network_from_dict(_chain_dict(idrs={'L2': [['T9', 'G1']]}))

    def test_line_value_above_bound(self):
        data = _chain_dict()
        data['entities'][2]['upper_bound'] = 5
        with pytest.raises(NetworkValidationError, match='por encima'):
            network_from_dict(data)


class TestNetworkFile:

    def test_reverse_direction_swaps_endpoints(self):
        data = _chain_dict(lines=[{'id': 'T1', 'from_entity': 'L2', 'to_entity': 'G1', 'direction': 'reverse'}])
        network = network_from_dict(data)
        assert network.line_endpoints['T1'] == ('G1', 'L2')

    def test_emitted_dict_is_canonical(self, small_network):
        data = network_to_dict(small_network)
        assert [e['id'] for e in data['entities']][:3] == ['G1', 'G2', 'G3']
        assert data['idrs']['L1'] == [['G1', 'T1']]
        assert all(line['direction'] == 'forward' for line in data['lines'])

    def test_malformed_documents(self):
        with pytest.raises(NetworkValidationError, match='JSON'):
            parse_network('{not json')
        with pytest.raises(NetworkValidationError, match='mal formado'):
            parse_network(json.dumps({'entities': [{'id': 'G1'}]}))
        with pytest.raises(NetworkValidationError, match='Dirección'):
            network_from_dict(_chain_dict(lines=[{'id': 'T1', 'from_entity': 'G1', 'to_entity': 'L2',
                                                  'direction': 'sideways'}]))

    def test_duplicate_entity(self):
        data = _chain_dict()
        data['entities'].append(dict(data['entities'][0]))
        with pytest.raises(NetworkValidationError, match='duplicada'):
            network_from_dict(data)


class TestDcFlow:

    def test_real_power_flow_sign(self):
        assert real_power_flow(complex(1.0, 0), complex(0.9, 0), complex(0.1, 0), 100) == pytest.approx(100.0)
        assert real_power_flow(complex(0.9, 0), complex(1.0, 0), complex(0.1, 0), 100) < 0

    def test_zero_impedance(self):
        with pytest.raises(NetworkValidationError):
            real_power_flow(1, 1, 0, 100)

    def test_case9_dc_balances(self, data_dir):
        case = read_case_file(str(data_dir / 'case9.m'))
        snap = solve_dc_flow(case)
        assert snap.gen_outputs[1] == pytest.approx(67.0)
        assert snap.gen_outputs[2] == 163
        assert len(snap.line_flows) == 9

    def test_disconnected_case(self):
        text = "mpc.baseMVA = 100;\nmpc.bus = [1 3 0 0; 2 1 10 0; 3 1 0 0; 4 1 0 0];\n" \
               "mpc.gen = [1 10 0 0 0 1 100 1 50 0];\nmpc.branch = [1 2 0 0.1 0 0; 3 4 0 0.1 0 0];\n"
        with pytest.raises(SolverError, match='desconectada'):
            solve_dc_flow(parse_matpower_case(text))

    def test_flows_orient_by_sign(self):
        case = parse_matpower_case(TWO_BUS_CASE)
        flows = compute_line_flows(case, Snapshot('t', line_flows={1: -50.0}))
        assert (flows[1].source, flows[1].sink, flows[1].mw) == (2, 1, 50.0)


class TestBuilder:

    def test_two_bus_snapshot(self):
        case = parse_matpower_case(TWO_BUS_CASE)
        network = build_network(case, Snapshot('t', line_flows={1: 50.0}, gen_outputs={1: 50.0}))
        assert network.entity_ids == ['G1', 'L2', 'T1']
        assert network.entities['T1'].upper_bound == 60
        assert network.idr_for('L2').minterms == (frozenset({'T1', 'G1'}),)

    def test_idrs_follow_flow_direction(self):
        case = parse_matpower_case(TWO_BUS_CASE)
        forward = generate_idrs(case, {1: DirectedFlow(1, 2, 50.0)})
        assert [(i.target, i.minterms) for i in forward] == [('L2', (frozenset({'T1', 'G1'}),))]
        backward = generate_idrs(case, {1: DirectedFlow(2, 1, 50.0)})
        assert backward == []

    def test_snapshot_that_does_not_balance(self):
        case = parse_matpower_case(TWO_BUS_CASE)
        with pytest.raises(ConservationError):
            build_network(case, Snapshot('t', line_flows={1: 40.0}, gen_outputs={1: 50.0}))

    def test_flow_above_rating(self):
        case = parse_matpower_case(TWO_BUS_CASE.replace('50 10;', '70 10;').replace('1 50 0', '1 70 0'))
        with pytest.raises(NetworkValidationError, match='T1'):
            build_network(case, Snapshot('t', line_flows={1: 70.0}, gen_outputs={1: 70.0}))

    def test_case9_dc_network(self, data_dir):
        case = read_case_file(str(data_dir / 'case9.m'))
        network = build_network(case, solve_dc_flow(case))
        assert len(network) == 18
        kinds = [network.kind(i) for i in network.buses()]
        assert kinds.count(EntityKind.GENERATOR) == 3
        assert kinds.count(EntityKind.LOAD) == 3
        assert kinds.count(EntityKind.NEUTRAL) == 3
        assert network.entities['G1'].value == pytest.approx(67.0)

    def test_case14_splits_generator_buses(self, data_dir):
        case = read_case_file(str(data_dir / 'case14.m'))
        split_case, _ = split_generator_buses(case, solve_dc_flow(case))
        assert len(split_case.buses) == 17
        assert len(split_case.branches) == 23

        network = build_network(case, solve_dc_flow(case))
        assert network.line_endpoints['T22'] == ('G3', 'L16')
        assert network.entities['L16'].value == pytest.approx(94.2)
        assert network.entities['T22'].upper_bound == pytest.approx(95.2)
        assert network.entities['G3'].value == 0
        assert network.idr_for('L16').minterms == (frozenset({'T22', 'G3'}),)

    def test_case14_unlimited_rating(self, data_dir):
        case = read_case_file(str(data_dir / 'case14.m'))
        network = build_network(case, solve_dc_flow(case))
        assert network.entities['T1'].upper_bound == pytest.approx(772.4)
        capped = build_network(case, solve_dc_flow(case), unlimited_rating=500)
        assert capped.entities['T1'].upper_bound == 500

    def test_small_network_idrs_from_case_data(self, small_network):
        case = parse_matpower_case(SMALL_CASE)
        flows = compute_line_flows(case, Snapshot('fig1', line_flows=SMALL_FLOWS))
        renamed = {SMALL_NAMES.get(idr.target, idr.target):
                   {frozenset(SMALL_NAMES.get(m, m) for m in minterm) for minterm in idr.minterms}
                   for idr in generate_idrs(case, flows)}
        assert renamed == {
            'L1': {frozenset({'T1', 'G1'})},
            'L2': {frozenset({'T2', 'L1'}), frozenset({'T7', 'N2'})},
            'L3': {frozenset({'T3', 'L1'}), frozenset({'T4', 'N1'})},
            'L4': {frozenset({'T6', 'N1'}), frozenset({'T8', 'N2'})},
            'N1': {frozenset({'T5', 'G3'})},
            'N2': {frozenset({'T9', 'G2'})},
        }
        assert renamed == {idr.target: set(idr.minterms) for idr in small_network.idrs}

    def test_small_network_from_case_data(self, small_network):
        case = parse_matpower_case(SMALL_CASE)
        network = build_network(case, Snapshot('fig1', line_flows=SMALL_FLOWS,
                                               gen_outputs={1: 75.0, 2: 50.0, 3: 55.0}))
        assert len(network) == len(small_network) == 18
        for name, entity in network.entities.items():
            expected = small_network.entities[SMALL_NAMES.get(name, name)]
            assert (entity.kind, entity.lower_bound, entity.upper_bound, entity.value) == \
                (expected.kind, expected.lower_bound, expected.upper_bound, expected.value)

    def test_bus_kind_follows_bus_type(self):
        case = parse_matpower_case(BUS_TYPES_CASE)
        assert generator_bus_ids(case) == {1, 2, 4}
        assert bus_entity_ids(case) == {1: 'G1', 2: 'G2', 3: 'L3', 4: 'G4', 5: 'N5'}

    def test_pv_bus_without_generator_has_no_capacity(self):
        case = parse_matpower_case(BUS_TYPES_CASE)
        network = build_network(case, Snapshot('t', line_flows={1: 30.0, 2: 0.0, 3: 20.0, 4: 20.0},
                                               gen_outputs={1: 30.0, 4: 20.0}))
        assert network.kind('G2') is EntityKind.GENERATOR
        assert network.entities['G2'].upper_bound == 0
        assert network.kind('G4') is EntityKind.GENERATOR
        assert network.idr_for('G4') is None
        assert network.idr_for('N5').minterms == (frozenset({'T3', 'G4'}),)


@pytest.mark.parametrize('seed', range(5))
def test_roundtrip_preserves_random_networks(network_factory, seed):
    rng = np.random.default_rng(seed)
    for _ in range(40):
        network = network_factory(rng)
        copy = roundtrip_network(network)
        assert copy.fingerprint() == network.fingerprint()
        assert copy.entities == network.entities
        assert copy.line_endpoints == network.line_endpoints
        assert {idr.target: set(idr.minterms) for idr in copy.idrs} == \
            {idr.target: set(idr.minterms) for idr in network.idrs}
