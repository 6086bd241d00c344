"""
Pruebas de la línea de comandos con el CliRunner de click
"""

import json

import pytest
from click.testing import CliRunner

from cli import EXIT_INPUT_ERROR, EXIT_VERIFICATION_FAILED, cli
from src.data_sources.network_file import read_network_file, write_network_file


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def chain_file(tmp_path, chain_network):
    path = tmp_path / 'chain.json'
    write_network_file(chain_network, str(path))
    return str(path)


def _invoke(runner, *args):
    return runner.invoke(cli, ['--log-level', 'ERROR', *[str(a) for a in args]])


class TestCascade:

    def test_tab_separated_timeline(self, runner, data_dir):
        result = _invoke(runner, 'cascade', data_dir / 'southwest_network.json', '--initial', 'T11')
        assert result.exit_code == 0
        lines = result.output.splitlines()
        assert lines[0] == '0\tT11'
        assert len(lines) == 13
        assert lines[-1] == '3\tT7'

    def test_json_output(self, runner, data_dir):
        result = _invoke(runner, 'cascade', data_dir / 'small_network.json', '--initial', 'G1,G2', '--json')
        data = json.loads(result.output)
        assert data['dead_count'] == 11
        assert data['failed_at']['L2'] == 2

    def test_unknown_entity_exit_code(self, runner, data_dir):
        result = _invoke(runner, 'cascade', data_dir / 'small_network.json', '--initial', 'G9')
        assert result.exit_code == EXIT_INPUT_ERROR
        assert 'error:' in result.output


class TestContingency:

    def test_table_sweep_and_gnuplot(self, runner, data_dir, tmp_path):
        plot = tmp_path / 'curve.dat'
        result = _invoke(runner, 'contingency', data_dir / 'small_network.json', '--k', 1, '--k', 2,
                         '--table', '--gnuplot', plot)
        assert result.exit_code == 0
        rows = [line.split('\t') for line in result.output.splitlines()]
        assert [row[:3] for row in rows] == [['1', 'heuristic', '5'], ['2', 'heuristic', '11']]
        assert plot.read_text() == '# K dead_count\n1 5\n2 11\n'

    def test_exact_json(self, runner, data_dir):
        result = _invoke(runner, 'contingency', data_dir / 'southwest_network.json', '--k', 1,
                         '--method', 'exact')
        report = json.loads(result.output)
        assert report['chosen'] == ['PV']
        assert report['dead_count'] == 17

    def test_budget_exceeded(self, runner, data_dir):
        result = _invoke(runner, 'contingency', data_dir / 'small_network.json', '--k', 2,
                         '--method', 'exact', '--budget', 10)
        assert result.exit_code == EXIT_INPUT_ERROR

    def test_negative_k(self, runner, data_dir):
        result = _invoke(runner, 'contingency', data_dir / 'small_network.json', '--k', -1)
        assert result.exit_code == EXIT_INPUT_ERROR


class TestMip:

    def test_export_lp_to_stdout(self, runner, chain_file):
        result = _invoke(runner, 'export-lp', chain_file, '--k', 1)
        assert result.exit_code == 0
        assert result.output.startswith('\\ KCoL')
        assert result.output.rstrip().endswith('End')

    def test_export_lp_to_file(self, runner, chain_file, tmp_path):
        output = tmp_path / 'chain.lp'
        result = _invoke(runner, 'export-lp', chain_file, '--initial', 'G1', '-o', output)
        assert result.exit_code == 0
        assert str(output) in result.output
        text = output.read_text(encoding='utf-8')
        assert ' init_G1: + 1 x_G1_0 = 1' in text
        assert text.rstrip().endswith('End')

    def test_export_needs_exactly_one_of_k_or_initial(self, runner, chain_file):
        assert _invoke(runner, 'export-lp', chain_file).exit_code == EXIT_INPUT_ERROR
        assert _invoke(runner, 'export-lp', chain_file, '--k', 1, '--initial', 'G1').exit_code == EXIT_INPUT_ERROR

    def test_solve_prints_status(self, runner, chain_file):
        result = _invoke(runner, 'solve', chain_file, '--k', 1, '--timeline')
        assert result.exit_code == 0
        lines = result.output.splitlines()
        assert lines[:3] == ['status\tOptimal', 'objective\t3', 'gap\t0']
        assert '0\tG1' in lines

    def test_solve_then_verify(self, runner, chain_file, tmp_path):
        solution = tmp_path / 'chain.sol'
        assert _invoke(runner, 'solve', chain_file, '--initial', 'G1', '-o', solution).exit_code == 0
        result = _invoke(runner, 'verify-solution', chain_file, solution, '--initial', 'G1', '--strict')
        assert result.exit_code == 0
        assert result.output.startswith('OK:')

        tampered = tmp_path / 'tampered.sol'
        lines = ['x_G1_2 0' if line == 'x_G1_2 1' else line for line in solution.read_text().splitlines()]
        tampered.write_text('\n'.join(lines) + '\n')
        result = _invoke(runner, 'verify-solution', chain_file, tampered, '--initial', 'G1')
        assert result.exit_code == EXIT_VERIFICATION_FAILED
        assert 'mono_G1_2' in result.output

    def test_malformed_solution_file(self, runner, chain_file, tmp_path):
        solution = tmp_path / 'bad.sol'
        solution.write_text('x_G1_0 1\n')
        result = _invoke(runner, 'verify-solution', chain_file, solution, '--k', 1)
        assert result.exit_code == EXIT_INPUT_ERROR


class TestFiles:

    def test_build_case9_with_dc(self, runner, data_dir, tmp_path):
        output = tmp_path / 'case9.json'
        result = _invoke(runner, 'build', '--case', data_dir / 'case9.m', '--dc', '-o', output)
        assert result.exit_code == 0
        assert len(read_network_file(str(output))) == 18

    def test_build_needs_snapshot_or_dc(self, runner, data_dir, tmp_path):
        result = _invoke(runner, 'build', '--case', data_dir / 'case9.m', '-o', tmp_path / 'x.json')
        assert result.exit_code == EXIT_INPUT_ERROR

    def test_reduce(self, runner, data_dir, tmp_path):
        output = tmp_path / 'reduced.json'
        result = _invoke(runner, 'reduce', data_dir / 'path_hypergraph.txt', '--p', 2, '-o', output)
        assert result.exit_code == 0
        assert result.output.startswith('K = 2')
        assert len(read_network_file(str(output))) == 9

    def test_kill_sets_table(self, runner, data_dir, tmp_path):
        result = _invoke(runner, 'kill-sets', data_dir / 'small_network.json')
        lines = result.output.splitlines()
        assert lines[0] == 'entity\tkill_set_size\tfmhv'
        assert lines[1].startswith('G1\t5\t')
        exported = tmp_path / 'kills.json'
        assert _invoke(runner, 'kill-sets', data_dir / 'small_network.json', '-o', exported).exit_code == 0
        assert json.loads(exported.read_text())[0]['entity'] == 'G1'
