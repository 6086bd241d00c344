"""
Pruebas del cache en disco y del exportador de reportes
"""

import json
import os

import pandas as pd
import pytest

from src.algorithms.cascade import propagate_idr_cascade
from src.algorithms.contingency import heuristic_k_list
from src.utils.cache_manager import CacheManager
from src.utils.report_exporter import ReportExporter


class TestCacheManager:

    def test_defaults_from_environment(self, cache_dir):
        cache = CacheManager()
        assert cache.cache_dir == cache_dir
        assert os.path.isdir(os.path.join(cache_dir, 'reports'))

    def test_set_get_delete(self, tmp_path):
        cache = CacheManager(cache_dir=str(tmp_path))
        key = CacheManager.make_key('abc', k=2, method='exact')
        assert key == 'abc|k=2|method=exact'
        assert cache.get(key) is None
        assert cache.set(key, {'dead_count': 11})
        assert cache.get(key) == {'dead_count': 11}
        assert cache.get(key, section='timelines') is None
        assert cache.delete(key)
        assert not cache.delete(key)

    def test_expired_entries_are_dropped(self, tmp_path):
        cache = CacheManager(cache_dir=str(tmp_path))
        cache.set('k', [1, 2])
        path = cache._path('k', 'reports')
        with open(path) as handle:
            entry = json.load(handle)
        entry['expires_at'] = '2000-01-01T00:00:00'
        with open(path, 'w') as handle:
            json.dump(entry, handle)
        assert cache.get('k') is None
        assert not os.path.exists(path)

    def test_unreadable_entry(self, tmp_path):
        cache = CacheManager(cache_dir=str(tmp_path))
        with open(cache._path('roto', 'reports'), 'w') as handle:
            handle.write('{no es json')
        assert cache.get('roto') is None

    def test_clear_and_stats(self, tmp_path):
        cache = CacheManager(cache_dir=str(tmp_path))
        cache.set('a', 1)
        cache.set('b', 2, section='evaluations')
        stats = cache.stats()
        assert stats['total_files'] == 2
        assert stats['by_section']['evaluations']['files'] == 1
        assert cache.clear('reports') == 1
        assert cache.clear() == 1
        assert cache.stats()['total_files'] == 0


class TestReportExporter:

    @pytest.fixture
    def reports(self, small_network):
        return [heuristic_k_list(small_network, k) for k in (1, 2)]

    def test_reports_frame(self, reports):
        frame = ReportExporter().reports_frame(reports)
        assert list(frame['dead_count']) == [5, 11]
        assert list(frame['chosen']) == ['G1', 'G1,G2']
        assert frame['wccp_dead_count'].isna().all()

    def test_gnuplot_and_table(self, reports):
        exporter = ReportExporter()
        assert exporter.gnuplot_data(reports) == '# K dead_count\n1 5\n2 11\n'
        assert exporter.table_rows(reports).count('\n') == 2

    def test_timeline_frame_with_flows(self, southwest_network):
        result = propagate_idr_cascade(southwest_network, ['T11'])
        frame = ReportExporter().timeline_frame(result, flows={'T11': [3800.0, 0.0]})
        assert list(frame.columns) == ['step', 'entity', 'flow_at_failure']
        assert frame.iloc[0].to_dict() == {'step': 0, 'entity': 'T11', 'flow_at_failure': 3800.0}
        assert pd.isna(frame.iloc[1]['flow_at_failure'])

    def test_kill_set_frame_order(self, small_network):
        frame = ReportExporter().kill_set_frame(small_network)
        assert list(frame['entity'][:3]) == ['G1', 'G2', 'G3']
        assert frame['kill_set_size'].is_monotonic_decreasing

    @pytest.mark.parametrize('suffix', ['.csv', '.tsv', '.json'])
    def test_write_by_extension(self, tmp_path, reports, suffix):
        exporter = ReportExporter()
        path = str(tmp_path / f"reportes{suffix}")
        exporter.write(exporter.reports_frame(reports), path)
        if suffix == '.json':
            assert json.loads(open(path).read())[1]['dead_count'] == 11
        else:
            separator = '\t' if suffix == '.tsv' else ','
            assert pd.read_csv(path, sep=separator)['dead_count'].tolist() == [5, 11]
