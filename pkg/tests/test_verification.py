"""
Pruebas del verificador de soluciones y de la extracción de la línea de tiempo
"""

import pytest

from src.errors import ConfigurationError, SolverError
from src.optimization.branch_and_bound import solve_mip
from src.optimization.mip_builder import build_fixed_initial_mip, cascade_assignment
from src.optimization.mip_model import LpSolution
from src.optimization.verification import extract_timeline, timeline_flows, verify_solution


@pytest.fixture
def chain_cascade(chain_network):
    model = build_fixed_initial_mip(chain_network, ['G1'])
    values = cascade_assignment(model, chain_network, ['G1'])
    return model, LpSolution(model.assignment_dict(values), model.objective_value(values))


def _perturbed(solution, **changes):
    assignment = dict(solution.assignment)
    assignment.update(changes)
    return LpSolution(assignment, solution.objective_value, solution.status)


def test_solver_output_verifies(chain_network):
    model = build_fixed_initial_mip(chain_network, ['G1'])
    solution = solve_mip(model, backend='highs')
    report = verify_solution(model, solution)
    assert report.passed
    assert report.summary().startswith('OK:')


def test_cascade_passes_strict_mode(chain_network, chain_cascade):
    model, solution = chain_cascade
    report = verify_solution(model, solution, chain_network, strict=True)
    assert report.passed
    assert 'estricta' in report.summary()


def test_chain_timeline(chain_cascade):
    model, solution = chain_cascade
    timeline = extract_timeline(model, solution)
    assert timeline.failed_at == {'G1': 0, 'T1': 1, 'L2': 1}
    assert len(timeline) == 3


def test_monotonicity_violation(chain_cascade):
    model, solution = chain_cascade
    broken = _perturbed(solution, x_G1_2=0.0)
    report = verify_solution(model, broken)
    assert not report.passed
    assert 'mono_G1_2' in [name for name, _ in report.violations]
    with pytest.raises(SolverError, match='monótona'):
        extract_timeline(model, broken)


def test_bound_and_integrality_violations(chain_cascade):
    model, solution = chain_cascade
    report = verify_solution(model, _perturbed(solution, y_G1_1=50.0, x_L2_1=0.5))
    names = [name for name, _ in report.violations]
    assert 'bound:y_G1_1' in names
    assert 'integrality:x_L2_1' in names
    assert 'violaciones' in report.summary()


def test_strict_needs_network(chain_cascade):
    model, solution = chain_cascade
    with pytest.raises(ConfigurationError):
        verify_solution(model, solution, strict=True)


def test_strict_flags_unforced_survivor(chain_network, chain_cascade):
    model, solution = chain_cascade
    survivor = _perturbed(solution, x_L2_1=0.0)
    assert verify_solution(model, survivor).passed
    report = verify_solution(model, survivor, chain_network, strict=True)
    assert 'strict:forced_L2_1' in [name for name, _ in report.violations]


def test_overload_flows(overload_network):
    model = build_fixed_initial_mip(overload_network, ['T1'])
    solution = solve_mip(model, backend='highs')
    assert solution.objective_value == pytest.approx(3)
    assert verify_solution(model, solution).passed
    step = extract_timeline(model, solution).failed_at['T2']
    assert step >= 2
    assert timeline_flows(model, solution, 'T2')[step - 1] == pytest.approx(61.0)
