"""
Fixtures compartidas: redes de ejemplo y rutas a los casos incluidos
"""

import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

BACKEND = Path(__file__).resolve().parent.parent / 'backend'
sys.path.insert(0, str(BACKEND))

from src.data_sources.network_file import network_from_dict, read_network_file  # noqa: E402

DATA_DIR = BACKEND / 'data'


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def small_network():
    return read_network_file(str(DATA_DIR / 'small_network.json'))


@pytest.fixture
def southwest_network():
    return read_network_file(str(DATA_DIR / 'southwest_network.json'))


@pytest.fixture
def chain_network():
    """Un generador, una línea y una carga"""
    return network_from_dict({
        'entities': [
            {'id': 'G1', 'kind': 'generator', 'lower_bound': 0, 'upper_bound': 20, 'value': 10},
            {'id': 'L2', 'kind': 'load', 'lower_bound': 10, 'upper_bound': 10, 'value': 10},
            {'id': 'T1', 'kind': 'line', 'lower_bound': 0, 'upper_bound': 20, 'value': 10},
        ],
        'lines': [{'id': 'T1', 'from_entity': 'G1', 'to_entity': 'L2'}],
        'idrs': {'L2': [['T1', 'G1']]},
    })


@pytest.fixture
def overload_network():
    """
    Dos caminos hacia una carga: si cae T1 el adversario puede sobrecargar T2 (cota 60 < demanda 100)
    """
    return network_from_dict({
        'entities': [
            {'id': 'G1', 'kind': 'generator', 'lower_bound': 0, 'upper_bound': 200, 'value': 100},
            {'id': 'L2', 'kind': 'load', 'lower_bound': 100, 'upper_bound': 100, 'value': 100},
            {'id': 'T1', 'kind': 'line', 'lower_bound': 0, 'upper_bound': 100, 'value': 50},
            {'id': 'T2', 'kind': 'line', 'lower_bound': 0, 'upper_bound': 60, 'value': 50},
        ],
        'lines': [
            {'id': 'T1', 'from_entity': 'G1', 'to_entity': 'L2'},
            {'id': 'T2', 'from_entity': 'G1', 'to_entity': 'L2'},
        ],
        'idrs': {'L2': [['T1', 'G1'], ['T2', 'G1']]},
    })


def random_network(rng: np.random.Generator, max_entities: int = 40):
    """
    Red válida al azar: buses en orden topológico, líneas hacia buses posteriores que no son
    generadores y flujos enteros que cumplen el balance. Cada bus no generador con líneas
    entrantes puede recibir la IDR que forman sus líneas entrantes con sus buses origen.
    """
    n_buses = int(rng.integers(2, min(16, max_entities // 2) + 1))
    kinds = [str(rng.choice(['generator', 'load', 'neutral'])) for _ in range(n_buses - 1)] + ['load']
    kinds[0] = 'generator'
    ids = [f"{kind[0].upper()}{i + 1}" for i, kind in enumerate(kinds)]

    pairs = []
    budget = max_entities - n_buses
    for _ in range(int(rng.integers(1, budget + 1))):
        src = int(rng.integers(0, n_buses - 1))
        targets = [j for j in range(src + 1, n_buses) if kinds[j] != 'generator']
        pairs.append((src, int(rng.choice(targets))))
    for i, kind in enumerate(kinds[:-1]):
        if kind == 'neutral' and all(src != i for src, _ in pairs) and len(pairs) < budget:
            pairs.append((i, n_buses - 1))
        elif kind == 'neutral' and all(src != i for src, _ in pairs):
            kinds[i] = 'load'
            ids[i] = f"L{i + 1}"

    inflow = [0] * n_buses
    flows = [0] * len(pairs)
    outputs = [0] * n_buses
    demands = [0] * n_buses
    for bus in range(n_buses):
        supply = inflow[bus]
        outgoing = [j for j, (src, _) in enumerate(pairs) if src == bus]
        if kinds[bus] == 'generator' and outgoing:
            outputs[bus] = int(rng.integers(0, 100))
            supply += outputs[bus]
        if kinds[bus] == 'load' or not outgoing:
            demands[bus] = supply if not outgoing else int(rng.integers(0, supply + 1))
            supply -= demands[bus]
        for position, j in enumerate(outgoing):
            share = supply if position == len(outgoing) - 1 else int(rng.integers(0, supply + 1))
            flows[j] = share
            supply -= share
            inflow[pairs[j][1]] += share

    entities = []
    for bus, kind in enumerate(kinds):
        if kind == 'generator':
            entities.append({'id': ids[bus], 'kind': kind, 'lower_bound': 0,
                             'upper_bound': outputs[bus] + int(rng.integers(0, 50)), 'value': outputs[bus]})
        elif kind == 'load':
            entities.append({'id': ids[bus], 'kind': kind, 'lower_bound': demands[bus],
                             'upper_bound': demands[bus], 'value': demands[bus]})
        else:
            entities.append({'id': ids[bus], 'kind': kind, 'lower_bound': 0, 'upper_bound': 0, 'value': 0})
    lines = []
    for j, (src, dst) in enumerate(pairs):
        entities.append({'id': f"T{j + 1}", 'kind': 'line', 'lower_bound': 0,
                         'upper_bound': flows[j] + int(rng.integers(0, 50)), 'value': flows[j]})
        lines.append({'id': f"T{j + 1}", 'from_entity': ids[src], 'to_entity': ids[dst]})

    idrs = {}
    for bus, kind in enumerate(kinds):
        incoming = [(f"T{j + 1}", ids[src]) for j, (src, dst) in enumerate(pairs) if dst == bus]
        if kind != 'generator' and incoming and rng.random() < 0.8:
            idrs[ids[bus]] = [list(minterm) for minterm in incoming]
    return network_from_dict({'entities': entities, 'lines': lines, 'idrs': idrs})


@pytest.fixture
def network_factory():
    return random_network


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    path = tmp_path / 'cache'
    monkeypatch.setenv('MIIR_CACHE_DIR', str(path))
    return str(path)


def pytest_configure(config):
    os.environ.setdefault('LOG_LEVEL', 'WARNING')
    os.environ.setdefault('MIIR_CACHE_DIR', tempfile.mkdtemp(prefix='miir-cache-'))
