"""
Lector de archivos de caso MATPOWER (subconjunto: baseMVA, bus, gen, branch)
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

from ..errors import CaseParseError

logger = logging.getLogger(__name__)

_ASSIGNMENT = re.compile(r'^\s*mpc\.(\w+)\s*=\s*(.*)$')
_MATRIX_TOKEN = re.compile(r'[;\]]|[^\s,;\]]+')

# Columnas mínimas consumidas por matriz (1-based en la documentación de MATPOWER)
_MIN_COLUMNS = {'bus': 3, 'gen': 9, 'branch': 6}


class BusType(str, Enum):
    PQ = 'PQ'
    PV = 'PV'
    REF = 'REF'

    @classmethod
    def from_code(cls, code: float, line: Optional[int] = None) -> 'BusType':
        mapping = {1: cls.PQ, 2: cls.PV, 3: cls.REF, 4: cls.PQ}
        if code not in mapping:
            raise CaseParseError(f"Tipo de bus desconocido: {code:g}", line)
        if code == 4:
            logger.warning("Bus aislado (tipo 4) tratado como PQ")
        return mapping[int(code)]


@dataclass(frozen=True)
class CaseBus:
    bus_id: int
    bus_type: BusType
    p_demand: float
    extra: Tuple[float, ...] = ()


@dataclass(frozen=True)
class CaseGenerator:
    bus_id: int
    p_gen: float
    p_max: float
    extra: Tuple[float, ...] = ()


@dataclass(frozen=True)
class CaseBranch:
    from_bus: int
    to_bus: int
    resistance: float
    reactance: float
    rate_a: float
    extra: Tuple[float, ...] = ()

    @property
    def impedance(self) -> complex:
        return complex(self.resistance, self.reactance)


@dataclass(frozen=True)
class RawCase:
    """Datos crudos del caso; potencias en MW, impedancias en p.u."""
    base_mva: float
    buses: Tuple[CaseBus, ...]
    generators: Tuple[CaseGenerator, ...] = ()
    branches: Tuple[CaseBranch, ...] = ()

    def bus_ids(self) -> List[int]:
        return [bus.bus_id for bus in self.buses]

    def bus(self, bus_id: int) -> CaseBus:
        for bus in self.buses:
            if bus.bus_id == bus_id:
                return bus
        raise KeyError(bus_id)

    def generation_by_bus(self) -> Dict[int, Tuple[float, float]]:
        """(Pg, Pmax) acumulados por bus"""
        totals: Dict[int, Tuple[float, float]] = {}
        for gen in self.generators:
            pg, pmax = totals.get(gen.bus_id, (0.0, 0.0))
            totals[gen.bus_id] = (pg + gen.p_gen, pmax + gen.p_max)
        return totals

    def validate(self) -> None:
        """
        Verificar integridad referencial

        Raises:
            CaseParseError: base no positiva, bus duplicado, referencia colgante o reactancia nula
        """
        if not self.base_mva > 0:
            raise CaseParseError(f"baseMVA debe ser positivo: {self.base_mva}")
        seen = set()
        for bus in self.buses:
            if bus.bus_id in seen:
                raise CaseParseError(f"Bus duplicado: {bus.bus_id}")
            seen.add(bus.bus_id)
        for gen in self.generators:
            if gen.bus_id not in seen:
                raise CaseParseError(f"Generador en bus inexistente: {gen.bus_id}")
        for index, branch in enumerate(self.branches, start=1):
            for end in (branch.from_bus, branch.to_bus):
                if end not in seen:
                    raise CaseParseError(f"Rama {index} referencia el bus inexistente {end}")
            if branch.reactance == 0:
                raise CaseParseError(f"Rama {index} con reactancia nula")


@dataclass
class _Matrix:
    name: str
    rows: List[Tuple[int, List[float]]] = field(default_factory=list)
    current: List[float] = field(default_factory=list)
    current_line: int = 0

    def close_row(self):
        if self.current:
            self.rows.append((self.current_line, self.current))
        self.current = []


def _parse_number(token: str, line: int, column: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise CaseParseError(f"Valor numérico inválido '{token}'", line, column)


def _scan_matrix_text(matrix: _Matrix, text: str, line: int, offset: int) -> bool:
    """Consumir un fragmento de matriz; True si se encontró el cierre ']'"""
    for match in _MATRIX_TOKEN.finditer(text):
        token = match.group(0)
        if token == ';':
            matrix.close_row()
        elif token == ']':
            matrix.close_row()
            return True
        else:
            if not matrix.current:
                matrix.current_line = line
            matrix.current.append(_parse_number(token, line, offset + match.start() + 1))
    # En MATLAB un salto de línea dentro de corchetes también separa filas
    matrix.close_row()
    return False


def _as_id(value: float, line: int) -> int:
    if value != value or value in (float('inf'), float('-inf')) or value != int(value):
        raise CaseParseError(f"Identificador de bus no entero: {value}", line)
    return int(value)


def _split_rows(name: str, rows: List[Tuple[int, List[float]]]) -> List[Tuple[int, List[float]]]:
    needed = _MIN_COLUMNS.get(name, 0)
    for line, values in rows:
        if len(values) < needed:
            raise CaseParseError(
                f"Fila de mpc.{name} con {len(values)} campos (se requieren {needed})", line)
    return rows


def parse_matpower_case(text: Union[str, bytes]) -> RawCase:
    """
    Parsear el contenido de un archivo de caso MATPOWER

    Args:
        text: Contenido del archivo (.m)

    Returns:
        RawCase con las filas en el orden del archivo

    Raises:
        CaseParseError: error de sintaxis (con línea/columna) o de referencia
    """
    if isinstance(text, bytes):
        text = text.decode('utf-8', errors='replace')

    base_mva: Optional[float] = None
    matrices: Dict[str, List[Tuple[int, List[float]]]] = {}
    open_matrix: Optional[_Matrix] = None

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split('%', 1)[0]

        if open_matrix is not None:
            if _scan_matrix_text(open_matrix, line, line_number, 0):
                matrices[open_matrix.name] = open_matrix.rows
                open_matrix = None
            continue

        match = _ASSIGNMENT.match(line)
        if not match:
            continue
        name, value = match.group(1), match.group(2).strip()

        if value.startswith('['):
            offset = match.start(2) + 1
            open_matrix = _Matrix(name)
            if _scan_matrix_text(open_matrix, value[1:], line_number, offset):
                matrices[name] = open_matrix.rows
                open_matrix = None
        elif name == 'baseMVA':
            base_mva = _parse_number(value.rstrip(';').strip(), line_number, match.start(2) + 1)
        # Otras asignaciones (version, areas, ...) se ignoran

    if open_matrix is not None:
        raise CaseParseError(f"Matriz mpc.{open_matrix.name} sin cerrar al final del archivo")
    if base_mva is None:
        raise CaseParseError("Falta la asignación mpc.baseMVA")
    if 'bus' not in matrices:
        raise CaseParseError("Falta la matriz mpc.bus")

    buses = tuple(
        CaseBus(_as_id(v[0], line), BusType.from_code(v[1], line), v[2], tuple(v[3:]))
        for line, v in _split_rows('bus', matrices['bus'])
    )
    generators = tuple(
        CaseGenerator(_as_id(v[0], line), v[1], v[8], tuple(v[2:8]) + tuple(v[9:]))
        for line, v in _split_rows('gen', matrices.get('gen', []))
    )
    branches = tuple(
        CaseBranch(_as_id(v[0], line), _as_id(v[1], line), v[2], v[3], v[5], (v[4],) + tuple(v[6:]))
        for line, v in _split_rows('branch', matrices.get('branch', []))
    )

    case = RawCase(base_mva, buses, generators, branches)
    case.validate()
    logger.info(f"Caso leído: {len(buses)} buses, {len(generators)} generadores, {len(branches)} ramas")
    return case


def read_case_file(path: str) -> RawCase:
    with open(path, 'r', encoding='utf-8', errors='replace') as f:
        return parse_matpower_case(f.read())
