"""
Snapshots de flujo resuelto: sustituto de los datos PMU en un instante dado
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

from ..errors import SnapshotError
from .matpower_case import RawCase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    """
    Estado instantáneo de la red

    voltages en p.u. por bus; line_flows en MW por índice de rama (1-based, orden de mpc.branch),
    con signo positivo en el sentido from -> to; gen_outputs en MW por bus.
    """
    time_label: str
    voltages: Optional[Dict[int, complex]] = None
    line_flows: Optional[Dict[int, float]] = None
    gen_outputs: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {'time_label': self.time_label,
                'gen_outputs': [[bus, mw] for bus, mw in sorted(self.gen_outputs.items())]}
        if self.voltages is not None:
            data['voltages'] = [[bus, v.real, v.imag] for bus, v in sorted(self.voltages.items())]
        if self.line_flows is not None:
            data['line_flows'] = [[index, mw] for index, mw in sorted(self.line_flows.items())]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def validate_snapshot(snap: Snapshot, case: RawCase) -> Snapshot:
    """
    Verificar que el snapshot solo referencie entidades del caso

    Raises:
        SnapshotError: bus o rama desconocidos, o sin voltajes ni flujos
    """
    if snap.voltages is None and snap.line_flows is None:
        raise SnapshotError("El snapshot no contiene voltages ni line_flows")
    bus_ids = set(case.bus_ids())
    for bus in list(snap.voltages or {}) + list(snap.gen_outputs):
        if bus not in bus_ids:
            raise SnapshotError(f"unknown bus {bus}")
    generator_buses = {gen.bus_id for gen in case.generators}
    for bus in snap.gen_outputs:
        if bus not in generator_buses:
            raise SnapshotError(f"El bus {bus} no tiene generador")
    for index in snap.line_flows or {}:
        if not 1 <= index <= len(case.branches):
            raise SnapshotError(f"unknown branch {index}")
    return snap


def _pairs(data: dict, key: str, width: int) -> Optional[list]:
    if key not in data or data[key] is None:
        return None
    rows = data[key]
    if not isinstance(rows, list) or any(not isinstance(r, list) or len(r) != width for r in rows):
        raise SnapshotError(f"'{key}' debe ser una lista de filas de {width} elementos")
    return rows


def load_snapshot(text: str, case: RawCase) -> Snapshot:
    """
    Leer un snapshot JSON y validarlo contra el caso

    Args:
        text: Contenido JSON con time_label, voltages, line_flows y gen_outputs
        case: Caso al que pertenece el snapshot

    Returns:
        Snapshot validado
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SnapshotError(f"JSON inválido: {e}")
    if not isinstance(data, dict):
        raise SnapshotError("El snapshot debe ser un objeto JSON")

    try:
        voltages = _pairs(data, 'voltages', 3)
        flows = _pairs(data, 'line_flows', 2)
        gens = _pairs(data, 'gen_outputs', 2) or []
        snap = Snapshot(
            time_label=str(data.get('time_label', '')),
            voltages=None if voltages is None else {int(b): complex(float(re), float(im)) for b, re, im in voltages},
            line_flows=None if flows is None else {int(i): float(mw) for i, mw in flows},
            gen_outputs={int(b): float(mw) for b, mw in gens},
        )
    except (TypeError, ValueError) as e:
        raise SnapshotError(f"Valor inválido en el snapshot: {e}")

    validate_snapshot(snap, case)
    logger.info(f"Snapshot '{snap.time_label}' cargado")
    return snap


def read_snapshot_file(path: str, case: RawCase) -> Snapshot:
    with open(path, 'r', encoding='utf-8') as f:
        return load_snapshot(f.read(), case)
