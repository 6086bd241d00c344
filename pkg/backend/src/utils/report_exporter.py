"""
Exportación de reportes de contingencia y líneas de tiempo (CSV, JSON, TSV, datos para gnuplot)
"""

import logging
from typing import Iterable, List, Optional

import pandas as pd

from ..algorithms.cascade import CascadeResult, fmhv, kill_set
from ..algorithms.contingency import ContingencyReport
from ..network.model import PowerNetwork

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['k', 'method', 'mode', 'dead_count', 'idr_dead_count', 'wccp_dead_count', 'chosen',
                  'elapsed_seconds']


class ReportExporter:
    """Convierte resultados a DataFrames y los escribe en los formatos de salida de la CLI"""

    def reports_frame(self, reports: Iterable[ContingencyReport]) -> pd.DataFrame:
        rows = []
        for report in reports:
            row = report.to_dict()
            row['chosen'] = ','.join(row['chosen'])
            rows.append({column: row[column] for column in REPORT_COLUMNS})
        frame = pd.DataFrame(rows, columns=REPORT_COLUMNS)
        return frame.astype({'wccp_dead_count': 'Int64'})

    def timeline_frame(self, result: CascadeResult, flows: Optional[dict] = None) -> pd.DataFrame:
        """
        Una fila por entidad caída: paso y entidad, ordenadas por paso e id

        Args:
            result: Cascada simulada o recuperada del MIP
            flows: Opcional, entidad -> lista de y[t] para añadir el flujo en el paso de falla
        """
        rows = []
        for step, entity in result.timeline():
            row = {'step': step, 'entity': entity}
            if flows is not None:
                series = flows.get(entity)
                row['flow_at_failure'] = series[step] if series is not None else None
            rows.append(row)
        columns = ['step', 'entity'] + (['flow_at_failure'] if flows is not None else [])
        return pd.DataFrame(rows, columns=columns)

    def kill_set_frame(self, network: PowerNetwork) -> pd.DataFrame:
        """Tamaño de Kill Set y FMHV de cada entidad, de mayor a menor"""
        rows = [{'entity': e, 'kill_set_size': len(kill_set(network, e)), 'fmhv': fmhv(network, e)}
                for e in network.entity_ids]
        frame = pd.DataFrame(rows, columns=['entity', 'kill_set_size', 'fmhv'])
        if frame.empty:
            return frame
        frame['order'] = range(len(frame))
        frame = frame.sort_values(['kill_set_size', 'fmhv', 'order'], ascending=[False, False, True])
        return frame.drop(columns='order').reset_index(drop=True)

    def table_rows(self, reports: Iterable[ContingencyReport]) -> str:
        """Filas separadas por tabulador: K, método, caídas, tiempo"""
        return ''.join(f"{report.table_row()}\n" for report in reports)

    def gnuplot_data(self, reports: Iterable[ContingencyReport]) -> str:
        lines: List[str] = ['# K dead_count']
        lines += [f"{r.k} {r.dead_count}" for r in reports]
        return '\n'.join(lines) + '\n'

    def write(self, frame: pd.DataFrame, path: str) -> None:
        """Formato según la extensión: .csv, .json o .tsv"""
        if path.endswith('.json'):
            frame.to_json(path, orient='records', indent=2)
        elif path.endswith('.tsv'):
            frame.to_csv(path, sep='\t', index=False)
        else:
            frame.to_csv(path, index=False)
        logger.info(f"Exportadas {len(frame)} filas a {path}")
