"""
Simplex primal denso con variables acotadas (fase 1 con artificiales, Dantzig con respaldo de Bland)
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from ..errors import SolverError
from .mip_model import MipModel, Relation, SolutionStatus

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-9
FEASIBILITY_TOLERANCE = 1e-7
# pivotes degenerados seguidos antes de pasar a la regla de Bland
DEGENERATE_LIMIT = 50


@dataclass
class LpProblem:
    """max c·x sujeto a filas (A x rel b) y lower <= x <= upper, con cotas finitas"""
    objective: np.ndarray
    matrix: np.ndarray
    relations: Sequence[Relation]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        matrix = self.matrix.toarray() if sparse.issparse(self.matrix) else self.matrix
        self.matrix = np.asarray(matrix, dtype=float).reshape(len(self.relations), len(self.objective))
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise SolverError("Todas las variables necesitan cotas finitas")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @classmethod
    def from_model(cls, model: MipModel, lower: Optional[np.ndarray] = None,
                   upper: Optional[np.ndarray] = None) -> 'LpProblem':
        """Relajación lineal del modelo, opcionalmente con cotas modificadas (nodos de B&B)"""
        return cls(
            objective=model.objective_vector(),
            matrix=model.constraint_matrix(),
            relations=model.relations(),
            rhs=model.rhs_vector(),
            lower=model.lower_bounds() if lower is None else lower,
            upper=model.upper_bounds() if upper is None else upper,
        )


@dataclass
class LpResult:
    status: SolutionStatus
    values: Optional[np.ndarray]
    objective: Optional[float]
    iterations: int = 0


class _Tableau:
    """Tableau completo B^-1 [A | holguras | artificiales] con valores de todas las variables"""

    def __init__(self, table, values, lower, upper, basis, costs):
        self.table = table
        self.values = values
        self.lower = lower
        self.upper = upper
        self.basis = basis
        self.iterations = 0
        self.reset_costs(costs)

    def reset_costs(self, costs: np.ndarray) -> None:
        self.costs = costs
        self.reduced = costs - costs[self.basis] @ self.table

    def objective(self) -> float:
        return float(self.costs @ self.values)

    def _entering(self, bland: bool) -> Optional[int]:
        d = self.reduced
        movable = self.upper > self.lower
        at_upper = self.values >= self.upper - PIVOT_TOLERANCE
        at_lower = self.values <= self.lower + PIVOT_TOLERANCE
        nonbasic = np.ones(len(d), dtype=bool)
        nonbasic[self.basis] = False
        up = nonbasic & movable & (d > PIVOT_TOLERANCE) & ~at_upper
        down = nonbasic & movable & (d < -PIVOT_TOLERANCE) & ~at_lower
        candidates = np.flatnonzero(up | down)
        if candidates.size == 0:
            return None
        if bland:
            return int(candidates[0])
        return int(candidates[np.argmax(np.abs(d[candidates]))])

    def run(self, max_iterations: int) -> None:
        degenerate = 0
        while True:
            if self.iterations >= max_iterations:
                raise SolverError(f"Simplex sin converger tras {self.iterations} iteraciones")
            entering = self._entering(bland=degenerate >= DEGENERATE_LIMIT)
            if entering is None:
                return
            self.iterations += 1
            direction = 1.0 if self.reduced[entering] > 0 else -1.0
            alpha = self.table[:, entering] * direction

            # una no básica puede arrancar en el interior de sus cotas (arranque en caliente)
            if direction > 0:
                theta = self.upper[entering] - self.values[entering]
            else:
                theta = self.values[entering] - self.lower[entering]
            leaving_row = -1
            basic_values = self.values[self.basis]
            with np.errstate(divide='ignore', invalid='ignore'):
                down = alpha > PIVOT_TOLERANCE
                up = alpha < -PIVOT_TOLERANCE
                ratios = np.full(len(alpha), np.inf)
                ratios[down] = (basic_values[down] - self.lower[self.basis][down]) / alpha[down]
                ratios[up] = (self.upper[self.basis][up] - basic_values[up]) / -alpha[up]
            ratios = np.maximum(ratios, 0.0)
            if ratios.size:
                best = ratios.min()
                if best < theta:
                    theta = best
                    ties = np.flatnonzero(ratios <= best + PIVOT_TOLERANCE)
                    leaving_row = int(ties[np.argmin(self.basis[ties])])
            if not np.isfinite(theta):
                raise SolverError("Problema no acotado: alguna variable carece de cota finita")
            degenerate = degenerate + 1 if theta <= PIVOT_TOLERANCE else 0

            self.values[self.basis] = basic_values - alpha * theta
            self.values[entering] += direction * theta
            if leaving_row < 0:
                continue

            leaving = self.basis[leaving_row]
            self.values[leaving] = self.lower[leaving] if alpha[leaving_row] > 0 else self.upper[leaving]
            self._pivot(leaving_row, entering)

    def _pivot(self, row: int, column: int) -> None:
        pivot = self.table[row, column]
        if abs(pivot) < PIVOT_TOLERANCE:
            raise SolverError(f"Pivote numéricamente nulo ({pivot:.3e})")
        self.table[row] /= pivot
        pivot_row = self.table[row]
        factors = self.table[:, column].copy()
        factors[row] = 0.0
        # solo se tocan filas y columnas con coeficiente no nulo
        rows = np.flatnonzero(factors)
        cols = np.flatnonzero(pivot_row)
        if rows.size:
            self.table[np.ix_(rows, cols)] -= np.outer(factors[rows], pivot_row[cols])
            self.table[rows, column] = 0.0
        self.reduced -= self.reduced[column] * pivot_row
        self.basis[row] = column


def solve_lp_simplex(problem: LpProblem, max_iterations: Optional[int] = None,
                     start: Optional[np.ndarray] = None) -> LpResult:
    """
    Resolver un LP de maximización con cotas finitas

    Args:
        problem: LP con filas <=, = o >=
        max_iterations: Límite de pivotes (por defecto 50 * (filas + columnas))
        start: Punto de partida de las variables (se recorta a las cotas); por defecto la cota inferior

    Returns:
        LpResult con estado Optimal o Infeasible

    Raises:
        SolverError: Falla numérica (pivote nulo, residuo final grande o sin convergencia)
    """
    lower, upper = problem.lower.copy(), problem.upper.copy()
    if np.any(lower > upper + FEASIBILITY_TOLERANCE):
        return LpResult(SolutionStatus.INFEASIBLE, None, None)

    # Las variables fijas se sustituyen en el lado derecho
    free = np.flatnonzero(upper > lower)
    fixed = np.flatnonzero(upper <= lower)
    base_values = lower.copy()
    rhs = problem.rhs - problem.matrix[:, fixed] @ base_values[fixed]
    matrix = problem.matrix[:, free]

    keep = np.flatnonzero(np.any(np.abs(matrix) > 0, axis=1))
    for r in np.setdiff1d(np.arange(len(rhs)), keep):
        relation = problem.relations[r]
        if (relation is Relation.LE and rhs[r] < -FEASIBILITY_TOLERANCE) or \
                (relation is Relation.GE and rhs[r] > FEASIBILITY_TOLERANCE) or \
                (relation is Relation.EQ and abs(rhs[r]) > FEASIBILITY_TOLERANCE):
            return LpResult(SolutionStatus.INFEASIBLE, None, None)
    relations: List[Relation] = [problem.relations[r] for r in keep]
    matrix, rhs = matrix[keep], rhs[keep]
    m, n = matrix.shape

    if n == 0 or m == 0:
        values = base_values.copy()
        objective_free = problem.objective[free]
        values[free] = np.where(objective_free > 0, upper[free], lower[free])
        return LpResult(SolutionStatus.OPTIMAL, values, float(problem.objective @ values))

    initial = lower[free] if start is None else np.clip(np.asarray(start, dtype=float)[free], lower[free], upper[free])
    residual = rhs - matrix @ initial

    # holguras solo en las filas de desigualdad; las igualdades arrancan con artificial
    slack_rows = np.flatnonzero([r is not Relation.EQ for r in relations])
    n_slack = len(slack_rows)
    slack_sign = np.array([1.0 if relations[r] is Relation.LE else -1.0 for r in slack_rows])
    slack_column = np.full(m, -1)
    slack_column[slack_rows] = n + np.arange(n_slack)
    slack_usable = np.zeros(m, dtype=bool)
    slack_usable[slack_rows] = residual[slack_rows] * slack_sign >= 0
    artificial_rows = np.flatnonzero(~slack_usable)
    n_art = len(artificial_rows)

    width = n + n_slack + n_art
    table = np.zeros((m, width))
    table[:, :n] = matrix
    table[slack_rows, n + np.arange(n_slack)] = slack_sign
    art_sign = np.where(residual[artificial_rows] >= 0, 1.0, -1.0)
    table[artificial_rows, n + n_slack + np.arange(n_art)] = art_sign

    basis = np.where(slack_usable, slack_column, 0)
    basis[artificial_rows] = n + n_slack + np.arange(n_art)
    scale = table[np.arange(m), basis]
    table /= scale[:, None]

    var_lower = np.concatenate([lower[free], np.zeros(n_slack + n_art)])
    var_upper = np.concatenate([upper[free], np.full(n_slack + n_art, np.inf)])
    values = np.concatenate([initial, np.zeros(n_slack + n_art)])
    values[basis] = residual / scale

    tableau = _Tableau(table, values, var_lower, var_upper, basis, np.zeros(width))
    limit = max_iterations or 50 * (m + width)

    if n_art:
        phase1 = np.zeros(width)
        phase1[n + n_slack:] = -1.0
        tableau.reset_costs(phase1)
        tableau.run(limit)
        infeasibility = -tableau.objective()
        if infeasibility > FEASIBILITY_TOLERANCE:
            logger.debug(f"LP infactible (fase 1 = {infeasibility:.3e})")
            return LpResult(SolutionStatus.INFEASIBLE, None, None, tableau.iterations)
        tableau.upper[n + n_slack:] = 0.0
        tableau.values[n + n_slack:] = 0.0

    phase2 = np.zeros(width)
    phase2[:n] = problem.objective[free]
    tableau.reset_costs(phase2)
    tableau.run(limit)

    solution = base_values.copy()
    solution[free] = np.clip(tableau.values[:n], lower[free], upper[free])
    check = problem.matrix @ solution
    for r, relation in enumerate(problem.relations):
        gap = check[r] - problem.rhs[r]
        if (relation is Relation.LE and gap > 1e-6) or (relation is Relation.GE and gap < -1e-6) or \
                (relation is Relation.EQ and abs(gap) > 1e-6):
            raise SolverError(f"Residuo numérico {gap:.3e} en la fila {r} tras {tableau.iterations} pivotes")
    return LpResult(SolutionStatus.OPTIMAL, solution, float(problem.objective @ solution), tableau.iterations)
