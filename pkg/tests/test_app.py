"""
Pruebas de la API REST con el cliente de pruebas de Flask
"""

import pytest

import app as app_module
from src.data_sources.network_file import network_to_dict
from src.utils.cache_manager import CacheManager


@pytest.fixture
def client(tmp_path, monkeypatch):
    monkeypatch.setattr(app_module, 'cache_manager', CacheManager(cache_dir=str(tmp_path / 'cache')))
    app_module.app.config['TESTING'] = True
    with app_module.app.test_client() as client:
        yield client


@pytest.fixture
def small_payload(small_network):
    return {'network': network_to_dict(small_network)}


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.get_json()['status'] == 'healthy'


def test_validate(client, small_payload):
    data = client.post('/api/networks/validate', json=small_payload).get_json()
    assert data['valid'] is True
    assert (data['entities'], data['lines'], data['idrs'], data['minterms']) == (18, 9, 6, 9)


def test_validate_rejects_broken_network(client, small_payload):
    small_payload['network']['entities'][0]['value'] = 80
    response = client.post('/api/networks/validate', json=small_payload)
    assert response.status_code == 400
    assert response.get_json()['valid'] is False


def test_missing_network_key(client):
    assert client.post('/api/cascade', json={'initial': ['G1']}).status_code == 400


def test_build_from_case_text(client, data_dir):
    case_text = (data_dir / 'case9.m').read_text()
    response = client.post('/api/networks/build', json={'case': case_text, 'dc': True})
    assert response.status_code == 200
    assert len(response.get_json()['network']['entities']) == 18
    assert client.post('/api/networks/build', json={'case': case_text}).status_code == 400
    assert client.post('/api/networks/build', json={}).status_code == 400


def test_cascade(client, southwest_network):
    data = client.post('/api/cascade', json={'network': network_to_dict(southwest_network),
                                             'initial': ['T11']}).get_json()
    assert data['dead_count'] == 13
    assert data['steps'] == 3
    assert data['timeline'][0] == {'step': 0, 'entity': 'T11'}


def test_cascade_is_cached(client, small_payload, small_network):
    client.post('/api/cascade', json={**small_payload, 'initial': ['G1']})
    key = CacheManager.make_key(small_network.fingerprint(), initial=['G1'])
    assert app_module.cache_manager.get(key, section='timelines')['dead_count'] == 5


def test_evaluate_idr_only(client, southwest_network):
    data = client.post('/api/evaluate', json={'network': network_to_dict(southwest_network),
                                              'initial': ['T11']}).get_json()
    assert data == {'dead_count': 13, 'initial': ['T11'], 'mode': 'idr'}


def test_evaluate_wccp_returns_timeline(client, overload_network):
    payload = {'network': network_to_dict(overload_network), 'initial': ['T1'], 'mode': 'wccp'}
    data = client.post('/api/evaluate', json=payload).get_json()
    assert data['dead_count'] == 3
    assert data['status'] == 'Optimal'
    assert data['timeline'][0] == {'step': 0, 'entity': 'T1'}
    key = CacheManager.make_key(overload_network.fingerprint(), initial=['T1'], mode='wccp', backend='builtin')
    assert app_module.cache_manager.get(key, section='evaluations')['dead_count'] == 3


@pytest.mark.parametrize('extra', [{}, {'initial': ['G1'], 'mode': 'worst'}, {'initial': ['Z9']},
                                   {'initial': ['G1'], 'mode': 'wccp', 'backend': 'gurobi'}])
def test_evaluate_bad_requests(client, small_payload, extra):
    assert client.post('/api/evaluate', json={**small_payload, **extra}).status_code == 400


def test_contingency_is_cached(client, small_payload, small_network):
    response = client.post('/api/contingency', json={**small_payload, 'k': 1})
    assert response.status_code == 200
    assert response.get_json()['chosen'] == ['G1']
    key = CacheManager.make_key(small_network.fingerprint(), k=1, method='heuristic', mode='idr', backend='builtin')
    assert app_module.cache_manager.get(key)['dead_count'] == 5


def test_contingency_exact(client, small_payload):
    data = client.post('/api/contingency', json={**small_payload, 'k': 2, 'method': 'exact'}).get_json()
    assert data['chosen'] == ['G1', 'G2']
    assert data['dead_count'] == 11


@pytest.mark.parametrize('extra', [{}, {'k': 1, 'method': 'random'}, {'k': 1, 'mode': 'worst'}, {'k': 40}])
def test_contingency_bad_requests(client, small_payload, extra):
    assert client.post('/api/contingency', json={**small_payload, **extra}).status_code == 400


def test_kill_sets(client, small_payload):
    rows = client.post('/api/kill-sets', json=small_payload).get_json()['kill_sets']
    assert rows[0]['entity'] == 'G1'
    assert rows[0]['kill_set_size'] == 5


def test_export_lp(client, chain_network):
    response = client.post('/api/export-lp', json={'network': network_to_dict(chain_network), 'k': 1})
    assert response.status_code == 200
    assert response.mimetype == 'text/plain'
    assert response.get_data(as_text=True).startswith('\\ KCoL')
    missing = client.post('/api/export-lp', json={'network': network_to_dict(chain_network)})
    assert missing.status_code == 400


def test_reduce(client):
    data = client.post('/api/reduce', json={'edges': [['v1', 'v2'], ['v2', 'v3']], 'p': 2}).get_json()
    assert data['k'] == 2
    assert data['densest'] == {'vertices': ['v1', 'v2'], 'covered_edges': 1, 'target': 3}


def test_not_found(client):
    assert client.get('/api/nothing').status_code == 404
