"""
Modelo lineal entero mixto con registro de nombres para emisión en formato LP
"""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

_LP_NAME_INVALID = re.compile(r"[^A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]")


class VarKind(str, Enum):
    BINARY = 'binary'
    CONTINUOUS = 'continuous'


class Relation(str, Enum):
    LE = '<='
    GE = '>='
    EQ = '='


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VarKind
    lower: float
    upper: float


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: Tuple[Tuple[int, float], ...]
    relation: Relation
    rhs: float

    def activity(self, values: np.ndarray) -> float:
        return float(sum(coef * values[index] for index, coef in self.terms))

    def violation(self, values: np.ndarray) -> float:
        """Residuo positivo si la restricción no se cumple"""
        lhs = self.activity(values)
        if self.relation is Relation.LE:
            return max(0.0, lhs - self.rhs)
        if self.relation is Relation.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


def lp_safe_name(raw: str) -> str:
    name = _LP_NAME_INVALID.sub('_', raw)
    if not name or name[0].isdigit() or name[0] in '.eE':
        name = f"_{name}"
    return name


@dataclass
class MipModel:
    """
    Variables, restricciones y objetivo (maximización) del problema

    Los índices x/y/c permiten recuperar la trayectoria de la cascada desde una asignación.
    """
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    objective: Dict[int, float] = field(default_factory=dict)
    horizon: int = 0
    entity_ids: List[str] = field(default_factory=list)
    x_index: Dict[Tuple[str, int], int] = field(default_factory=dict)
    y_index: Dict[Tuple[str, int], int] = field(default_factory=dict)
    c_index: Dict[Tuple[str, int, int], int] = field(default_factory=dict)
    name_map: Dict[str, int] = field(default_factory=dict)

    # -- construcción -------------------------------------------------------

    def add_variable(self, raw_name: str, kind: VarKind, lower: float, upper: float) -> int:
        name = lp_safe_name(raw_name)
        base, suffix = name, 1
        while name in self.name_map:
            suffix += 1
            name = f"{base}#{suffix}"
        index = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper)))
        self.name_map[name] = index
        return index

    def add_constraint(self, raw_name: str, terms: Iterable[Tuple[int, float]],
                       relation: Relation, rhs: float) -> None:
        merged: Dict[int, float] = {}
        for index, coef in terms:
            merged[index] = merged.get(index, 0.0) + coef
        cleaned = tuple((i, c) for i, c in merged.items() if c != 0)
        self.constraints.append(Constraint(lp_safe_name(raw_name), cleaned, relation, float(rhs)))

    # -- consultas ----------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def binaries(self) -> List[int]:
        return [i for i, v in enumerate(self.variables) if v.kind is VarKind.BINARY]

    def lower_bounds(self) -> np.ndarray:
        return np.array([v.lower for v in self.variables], dtype=float)

    def upper_bounds(self) -> np.ndarray:
        return np.array([v.upper for v in self.variables], dtype=float)

    def objective_vector(self) -> np.ndarray:
        vector = np.zeros(self.n_vars)
        for index, coef in self.objective.items():
            vector[index] = coef
        return vector

    def objective_value(self, values: np.ndarray) -> float:
        """Número de entidades caídas en el último paso"""
        return float(sum(coef * values[i] for i, coef in self.objective.items()))

    def initial_columns(self) -> List[int]:
        """Columnas x[i][0], las que deciden el conjunto inicial"""
        return [self.x_index[(entity, 0)] for entity in self.entity_ids if (entity, 0) in self.x_index]

    def constraint_matrix(self) -> sparse.csr_matrix:
        rows, cols, data = [], [], []
        for r, constraint in enumerate(self.constraints):
            for index, coef in constraint.terms:
                rows.append(r)
                cols.append(index)
                data.append(coef)
        return sparse.csr_matrix((data, (rows, cols)), shape=(len(self.constraints), self.n_vars))

    def rhs_vector(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints], dtype=float)

    def relations(self) -> List[Relation]:
        return [c.relation for c in self.constraints]

    def census(self) -> Dict[str, int]:
        """Conteo de variables y restricciones por familia (prefijo del nombre)"""
        counts = {
            'x': len(self.x_index),
            'y': len(self.y_index),
            'c': len(self.c_index),
            'binaries': len(self.binaries()),
            'constraints': len(self.constraints),
        }
        for constraint in self.constraints:
            family = constraint.name.split('_', 1)[0]
            counts[f"rows:{family}"] = counts.get(f"rows:{family}", 0) + 1
        return counts

    def assignment_vector(self, assignment: Dict[str, float]) -> np.ndarray:
        values = np.zeros(self.n_vars)
        for name, value in assignment.items():
            values[self.name_map[name]] = value
        return values

    def assignment_dict(self, values: Sequence[float]) -> Dict[str, float]:
        return {v.name: float(values[i]) for i, v in enumerate(self.variables)}


class SolutionStatus(str, Enum):
    OPTIMAL = 'Optimal'
    FEASIBLE = 'Feasible'
    INFEASIBLE = 'Infeasible'
    TIME_LIMIT = 'TimeLimit'

    @classmethod
    def parse(cls, text: str) -> 'SolutionStatus':
        lowered = text.strip().lower().replace('_', '')
        for status in cls:
            if status.value.lower() == lowered:
                return status
        raise ValueError(f"Estado de solución desconocido: {text}")


@dataclass
class LpSolution:
    """Asignación por nombre LP; objective_value es el número de entidades caídas en el último paso"""
    assignment: Dict[str, float]
    objective_value: float
    status: SolutionStatus = SolutionStatus.FEASIBLE
    bound: Optional[float] = None
    nodes: int = 0

    @property
    def has_assignment(self) -> bool:
        return self.status in (SolutionStatus.OPTIMAL, SolutionStatus.FEASIBLE, SolutionStatus.TIME_LIMIT) \
            and bool(self.assignment)

    @property
    def gap(self) -> Optional[float]:
        if self.bound is None:
            return None
        return max(0.0, self.bound - self.objective_value)
