"""
Branch-and-bound en profundidad sobre los binarios del MipModel, y backend HiGHS opcional

Cada nodo propaga cotas por actividad de fila, descarta las filas que ya no pueden violarse y
resuelve la relajación reducida con el simplex propio, arrancando desde la solución del padre.
"""

import logging
import math
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from ..errors import ConfigurationError
from .mip_model import LpSolution, MipModel, Relation, SolutionStatus
from .simplex import LpProblem, solve_lp_simplex

logger = logging.getLogger(__name__)

INTEGRALITY_TOLERANCE = 1e-6
FEASIBILITY_TOLERANCE = 1e-6
# cambios de cota continua por debajo de esto no justifican otra ronda
PROPAGATION_STEP = 1e-4
PROPAGATION_ROUNDS = 500
BACKENDS = ('builtin', 'highs')

BoundPair = Tuple[np.ndarray, np.ndarray]


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    bound: float
    depth: int = 0
    start: Optional[np.ndarray] = None


class _Relaxation:
    """Filas del modelo en forma <= para propagar cotas y armar el LP reducido de cada nodo"""

    def __init__(self, model: MipModel):
        self.model = model
        self.matrix = model.constraint_matrix().tocsr()
        self.relations = model.relations()
        self.rhs = model.rhs_vector()
        le = np.flatnonzero([r is not Relation.GE for r in self.relations]).astype(int)
        ge = np.flatnonzero([r is not Relation.LE for r in self.relations]).astype(int)
        self.rows = sparse.vstack([self.matrix[le], -self.matrix[ge]]).tocsr()
        self.origin = np.concatenate([le, ge])
        self.bounds = np.concatenate([self.rhs[le], -self.rhs[ge]])
        self.n_rows = self.rows.shape[0]
        self.row_of = np.repeat(np.arange(self.n_rows), np.diff(self.rows.indptr))
        self.cols = self.rows.indices
        self.data = self.rows.data
        self.positive = self.data > 0
        self.objective = model.objective_vector()
        self.integer = np.zeros(model.n_vars, dtype=bool)
        self.integer[model.binaries()] = True
        used = self.objective != 0
        self.integral_objective = bool(np.all(self.integer[used]) and
                                       np.allclose(self.objective, np.round(self.objective)))

    # -- cotas --------------------------------------------------------------

    def bound(self, lower: np.ndarray, upper: np.ndarray) -> float:
        return float(np.sum(np.where(self.objective > 0, self.objective * upper, self.objective * lower)))

    def prunable(self, bound: float, incumbent: float) -> bool:
        if not math.isfinite(incumbent) or not math.isfinite(bound):
            return False
        if self.integral_objective:
            return math.floor(bound + INTEGRALITY_TOLERANCE) <= incumbent + 1e-9
        return bound <= incumbent + 1e-9

    def propagate(self, lower: np.ndarray, upper: np.ndarray) -> Optional[BoundPair]:
        """Ajustar cotas con la actividad mínima de cada fila hasta el punto fijo; None si es infactible"""
        lower, upper = lower.copy(), upper.copy()
        tolerance = FEASIBILITY_TOLERANCE * (1 + np.abs(self.bounds))
        for _ in range(PROPAGATION_ROUNDS):
            if np.any(lower > upper + FEASIBILITY_TOLERANCE * (1 + np.abs(upper))):
                return None
            low = np.where(self.positive, self.data * lower[self.cols], self.data * upper[self.cols])
            slack = self.bounds - np.bincount(self.row_of, weights=low, minlength=self.n_rows)
            if np.any(slack < -tolerance):
                return None
            implied = (np.maximum(slack, 0.0)[self.row_of] + low) / self.data
            new_upper, new_lower = upper.copy(), lower.copy()
            np.minimum.at(new_upper, self.cols[self.positive], implied[self.positive])
            np.maximum.at(new_lower, self.cols[~self.positive], implied[~self.positive])
            new_upper[self.integer] = np.floor(new_upper[self.integer] + INTEGRALITY_TOLERANCE)
            new_lower[self.integer] = np.ceil(new_lower[self.integer] - INTEGRALITY_TOLERANCE)
            if np.any(new_lower > new_upper + FEASIBILITY_TOLERANCE * (1 + np.abs(new_upper))):
                return None
            new_upper = np.maximum(new_upper, new_lower)

            step = PROPAGATION_STEP * (1 + np.abs(upper))
            moved = (new_upper < upper - step) | (new_lower > lower + step)
            moved |= self.integer & ((new_upper != upper) | (new_lower != lower))
            lower, upper = new_lower, new_upper
            if not np.any(moved):
                break
        return lower, upper

    # -- LP del nodo --------------------------------------------------------

    def needed_rows(self, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """Filas cuya actividad máxima aún puede superar el lado derecho"""
        high = np.where(self.positive, self.data * upper[self.cols], self.data * lower[self.cols])
        max_activity = np.bincount(self.row_of, weights=high, minlength=self.n_rows)
        binding = max_activity > self.bounds + FEASIBILITY_TOLERANCE
        needed = np.zeros(len(self.relations), dtype=bool)
        np.logical_or.at(needed, self.origin, binding)
        return np.flatnonzero(needed)

    def solve(self, lower: np.ndarray, upper: np.ndarray, start: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
        free = np.flatnonzero(upper - lower > 1e-9)
        values = lower.copy()
        fixed_part = values.copy()
        fixed_part[free] = 0.0
        rows = self.needed_rows(lower, upper)
        reduced = self.matrix[rows]
        problem = LpProblem(
            objective=self.objective[free],
            matrix=reduced[:, free],
            relations=[self.relations[r] for r in rows],
            rhs=self.rhs[rows] - reduced @ fixed_part,
            lower=lower[free],
            upper=upper[free],
        )
        result = solve_lp_simplex(problem, start=None if start is None else start[free])
        if result.status is not SolutionStatus.OPTIMAL:
            return None
        values[free] = result.values
        return values

    def polish(self, values: np.ndarray) -> Optional[np.ndarray]:
        """Fijar los binarios redondeados y recalcular las continuas"""
        lower, upper = self.model.lower_bounds(), self.model.upper_bounds()
        rounded = np.round(values[self.integer])
        lower[self.integer] = upper[self.integer] = rounded
        tightened = self.propagate(lower, upper)
        if tightened is None:
            return None
        return self.solve(*tightened, start=values)

    def feasible(self, values: np.ndarray) -> bool:
        lower, upper = self.model.lower_bounds(), self.model.upper_bounds()
        if values.shape != lower.shape:
            return False
        if np.any(values < lower - FEASIBILITY_TOLERANCE) or np.any(values > upper + FEASIBILITY_TOLERANCE):
            return False
        if np.any(np.abs(values[self.integer] - np.round(values[self.integer])) > INTEGRALITY_TOLERANCE):
            return False
        return bool(np.all(self.rows @ values <= self.bounds + FEASIBILITY_TOLERANCE))


def _branch_variable(values: np.ndarray, priority: np.ndarray, binaries: np.ndarray) -> Optional[int]:
    """Binario más fraccional, primero entre los x[i][0]; empates por orden de variable"""
    for group in (priority, binaries):
        if group.size == 0:
            continue
        frac = np.abs(values[group] - np.round(values[group]))
        best = int(np.argmax(frac))
        if frac[best] > INTEGRALITY_TOLERANCE:
            return int(group[best])
    return None


def _solution(model: MipModel, values: Optional[np.ndarray], status: SolutionStatus,
              bound: Optional[float], nodes: int) -> LpSolution:
    if values is None:
        return LpSolution(assignment={}, objective_value=0.0, status=status, bound=bound, nodes=nodes)
    return LpSolution(assignment=model.assignment_dict(values), objective_value=model.objective_value(values),
                      status=status, bound=bound, nodes=nodes)


def solve_mip_bb(model: MipModel, time_limit: float = 60.0, start: Optional[np.ndarray] = None) -> LpSolution:
    """
    Resolver el MIP con búsqueda en profundidad y el simplex propio

    Ramifica sobre el binario más fraccional (primero las variables del conjunto inicial, empates
    por orden de variable) y explora primero la rama x = 1. Determinista para un mismo modelo.

    Args:
        model: Modelo de mip_builder
        time_limit: Segundos antes de devolver la mejor solución encontrada
        start: Asignación factible conocida (p. ej. la cascada por IDR), usada como incumbente inicial

    Returns:
        LpSolution con estado Optimal, TimeLimit (incumbente y cota) o Infeasible
    """
    started = time.monotonic()
    relaxation = _Relaxation(model)
    binaries = np.asarray(model.binaries(), dtype=int)
    priority = np.asarray(model.initial_columns(), dtype=int)
    incumbent: Optional[np.ndarray] = None
    incumbent_value = -math.inf
    if start is not None:
        start = np.asarray(start, dtype=float)
        if relaxation.feasible(start):
            incumbent, incumbent_value = start.copy(), model.objective_value(start)
            logger.info(f"Incumbente inicial con objetivo {incumbent_value:.0f}")
        else:
            logger.warning("La asignación inicial no es factible; se descarta")

    root_lower, root_upper = model.lower_bounds(), model.upper_bounds()
    stack = [_Node(root_lower, root_upper, relaxation.bound(root_lower, root_upper), 0, start)]
    nodes = max_depth = 0

    while stack:
        if time.monotonic() - started > time_limit:
            open_bound = max(node.bound for node in stack)
            bound = max(open_bound, incumbent_value)
            if relaxation.integral_objective and math.isfinite(bound):
                bound = float(math.floor(bound + INTEGRALITY_TOLERANCE))
            logger.warning(f"Límite de tiempo alcanzado tras {nodes} nodos (profundidad máxima {max_depth})")
            return _solution(model, incumbent, SolutionStatus.TIME_LIMIT,
                             bound if math.isfinite(bound) else None, nodes)

        node = stack.pop()
        if relaxation.prunable(node.bound, incumbent_value):
            continue
        nodes += 1
        max_depth = max(max_depth, node.depth)
        tightened = relaxation.propagate(node.lower, node.upper)
        if tightened is None:
            continue
        lower, upper = tightened
        if relaxation.prunable(relaxation.bound(lower, upper), incumbent_value):
            continue
        values = relaxation.solve(lower, upper, node.start)
        if values is None:
            continue
        bound = float(relaxation.objective @ values)
        if relaxation.prunable(bound, incumbent_value):
            continue

        branch = _branch_variable(values, priority, binaries)
        if branch is None:
            exact = relaxation.polish(values)
            if exact is None:
                logger.debug(f"Nodo {nodes}: solución entera que no sobrevive al redondeo")
                continue
            value = model.objective_value(exact)
            if value > incumbent_value + 1e-9:
                incumbent, incumbent_value = exact, value
                logger.debug(f"Nuevo incumbente {value:.0f} en el nodo {nodes} (profundidad {node.depth})")
            continue

        down_upper = upper.copy()
        down_upper[branch] = 0.0
        up_lower = lower.copy()
        up_lower[branch] = 1.0
        stack.append(_Node(lower, down_upper, bound, node.depth + 1, values))
        stack.append(_Node(up_lower, upper, bound, node.depth + 1, values))

    if incumbent is None:
        logger.info(f"Modelo infactible ({nodes} nodos)")
        return _solution(model, None, SolutionStatus.INFEASIBLE, None, nodes)
    logger.info(f"Óptimo {incumbent_value:.0f} tras {nodes} nodos (profundidad máxima {max_depth}) "
                f"en {time.monotonic() - started:.2f}s")
    return _solution(model, incumbent, SolutionStatus.OPTIMAL, incumbent_value, nodes)


def solve_mip_highs(model: MipModel, time_limit: float = 60.0) -> LpSolution:
    """Resolver el MIP con HiGHS a través de scipy.optimize.milp"""
    if not model.variables:
        return LpSolution(assignment={}, objective_value=0.0, status=SolutionStatus.OPTIMAL, bound=0.0)
    integrality = np.zeros(model.n_vars)
    integrality[model.binaries()] = 1
    constraints = []
    if model.constraints:
        rhs = model.rhs_vector()
        lb = np.array([-np.inf if r is Relation.LE else b for r, b in zip(model.relations(), rhs)])
        ub = np.array([np.inf if r is Relation.GE else b for r, b in zip(model.relations(), rhs)])
        constraints.append(LinearConstraint(model.constraint_matrix(), lb, ub))
    result = milp(
        c=-model.objective_vector(),
        integrality=integrality,
        bounds=Bounds(model.lower_bounds(), model.upper_bounds()),
        constraints=constraints,
        options={'time_limit': time_limit, 'mip_rel_gap': 1e-9, 'disp': False},
    )
    if result.status == 0:
        status = SolutionStatus.OPTIMAL
    elif result.status == 1 and result.x is not None:
        status = SolutionStatus.TIME_LIMIT
    elif result.status == 2:
        status = SolutionStatus.INFEASIBLE
    else:
        logger.warning(f"HiGHS terminó con estado {result.status}: {result.message}")
        status = SolutionStatus.TIME_LIMIT if result.x is not None else SolutionStatus.INFEASIBLE
    if result.x is None:
        return _solution(model, None, status, None, int(getattr(result, 'mip_node_count', 0) or 0))

    # HiGHS deja binarios a 1e-9 de un entero: se redondean y se recalculan las continuas
    values = _Relaxation(model).polish(result.x)
    if values is None:
        logger.warning("No se pudieron recalcular las variables continuas tras redondear")
        values = result.x.copy()
        values[model.binaries()] = np.round(values[model.binaries()])
    bound = None
    dual = getattr(result, 'mip_dual_bound', None)
    if dual is not None and np.isfinite(dual):
        bound = float(math.floor(-dual + INTEGRALITY_TOLERANCE))
    if status is SolutionStatus.OPTIMAL:
        bound = model.objective_value(values)
    return _solution(model, values, status, bound, int(getattr(result, 'mip_node_count', 0) or 0))


def solve_mip(model: MipModel, time_limit: float = 60.0, backend: str = 'builtin',
              start: Optional[np.ndarray] = None) -> LpSolution:
    """Resolver con el backend elegido; HiGHS ignora start"""
    if backend not in BACKENDS:
        raise ConfigurationError(f"Backend desconocido: {backend} (opciones: {', '.join(BACKENDS)})")
    if backend == 'highs':
        return solve_mip_highs(model, time_limit)
    return solve_mip_bb(model, time_limit, start)
