"""
Verificación independiente de soluciones del MIP y extracción de la línea de tiempo
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..algorithms.cascade import CascadeResult
from ..errors import ConfigurationError, SolverError
from ..network.model import EntityKind, PowerNetwork
from .mip_model import LpSolution, MipModel, Relation

logger = logging.getLogger(__name__)

TOLERANCE = 1e-6


@dataclass
class VerificationReport:
    violations: List[Tuple[str, float]] = field(default_factory=list)
    checked_constraints: int = 0
    strict: bool = False

    @property
    def passed(self) -> bool:
        return not self.violations

    def summary(self, limit: int = 20) -> str:
        if self.passed:
            mode = 'estricta' if self.strict else 'normal'
            return f"OK: {self.checked_constraints} restricciones verificadas (modo {mode})"
        lines = [f"{len(self.violations)} violaciones:"]
        lines += [f"  {name}: residuo {residual:.6g}" for name, residual in self.violations[:limit]]
        if len(self.violations) > limit:
            lines.append(f"  ... y {len(self.violations) - limit} más")
        return '\n'.join(lines)


def _row_residuals(model: MipModel, values: np.ndarray) -> np.ndarray:
    if not model.constraints:
        return np.zeros(0)
    activity = model.constraint_matrix() @ values
    rhs = model.rhs_vector()
    residual = np.zeros(len(rhs))
    for r, relation in enumerate(model.relations()):
        if relation is Relation.LE:
            residual[r] = max(0.0, activity[r] - rhs[r])
        elif relation is Relation.GE:
            residual[r] = max(0.0, rhs[r] - activity[r])
        else:
            residual[r] = abs(activity[r] - rhs[r])
    return residual


def _strict_checks(model: MipModel, network: PowerNetwork, values: np.ndarray) -> List[Tuple[str, float]]:
    """
    Reglas de falla de la cascada sobre la trayectoria

    Un bus cae si en t - 1 todos sus mintérminos tenían una entidad caída; un generador o línea
    operativo con flujo e_u + 1 en t - 1 cae en t (en t = 1 cuenta el flujo del snapshot); una
    línea cae con su bus origen. Toda caída nueva debe tener una de esas causas.
    """
    violations = []
    T = model.horizon

    def failed(entity: str, t: int) -> bool:
        return values[model.x_index[(entity, t)]] >= 0.5

    def overloaded_before(entity: str, t: int) -> bool:
        e = network.entities[entity]
        if e.kind not in (EntityKind.GENERATOR, EntityKind.LINE) or failed(entity, t - 1):
            return False
        previous = e.value if t == 1 else float(values[model.y_index[(entity, t - 1)]])
        return previous >= e.upper_bound + 1 - TOLERANCE

    for t in range(1, T + 1):
        for idr in network.sorted_idrs():
            dead_before = {e for e in idr.members() if failed(e, t - 1)}
            if not idr.satisfied(dead_before) and not failed(idr.target, t):
                violations.append((f"strict:forced_{idr.target}_{t}", 1.0))

        for entity in network.entity_ids:
            e = network.entities[entity]
            overloaded = overloaded_before(entity, t)
            if overloaded and not failed(entity, t):
                violations.append((f"strict:overload_{entity}_{t}", 1.0))
            if e.kind is EntityKind.LINE:
                source = network.line_endpoints[entity][0]
                if failed(source, t) and not failed(entity, t):
                    violations.append((f"strict:line_{entity}_{t}", 1.0))
                justified = failed(source, t) or overloaded
            elif e.kind is EntityKind.GENERATOR:
                justified = overloaded
            else:
                idr = network.idr_for(entity)
                justified = idr is not None and not idr.satisfied(
                    {m for m in idr.members() if failed(m, t - 1)})
            if failed(entity, t) and not failed(entity, t - 1) and not justified:
                violations.append((f"strict:unjustified_{entity}_{t}", 1.0))
    return violations


def verify_solution(model: MipModel, solution: LpSolution, network: Optional[PowerNetwork] = None,
                    strict: bool = False) -> VerificationReport:
    """
    Revisar cotas, integralidad y cada restricción del modelo con tolerancia 1e-6

    Args:
        model: Modelo construido por mip_builder
        solution: Asignación a verificar
        network: Red de origen, necesaria en modo estricto
        strict: Añadir las reglas de falla de la cascada (caídas forzadas y justificadas)

    Returns:
        VerificationReport con cada violación y su residuo
    """
    if strict and network is None:
        raise ConfigurationError("La verificación estricta necesita la red de origen")
    values = model.assignment_vector(solution.assignment)
    report = VerificationReport(checked_constraints=len(model.constraints), strict=strict)

    for index, variable in enumerate(model.variables):
        value = values[index]
        if value < variable.lower - TOLERANCE:
            report.violations.append((f"bound:{variable.name}", variable.lower - value))
        elif value > variable.upper + TOLERANCE:
            report.violations.append((f"bound:{variable.name}", value - variable.upper))
    for index in model.binaries():
        value = values[index]
        distance = min(abs(value), abs(value - 1.0))
        if distance > TOLERANCE:
            report.violations.append((f"integrality:{model.variables[index].name}", distance))

    residuals = _row_residuals(model, values)
    for r in np.flatnonzero(residuals > TOLERANCE):
        report.violations.append((model.constraints[r].name, float(residuals[r])))

    if strict:
        report.violations.extend(_strict_checks(model, network, values))

    if report.passed:
        logger.info(report.summary())
    else:
        logger.warning(f"Solución con {len(report.violations)} violaciones")
    return report


def extract_timeline(model: MipModel, solution: LpSolution) -> CascadeResult:
    """
    Paso de falla de cada entidad: el primer t con x[i][t] >= 0.5

    Raises:
        SolverError: x no monótona en el tiempo
    """
    values = model.assignment_vector(solution.assignment)
    failed_at = {}
    for entity in model.entity_ids:
        first = None
        for t in range(model.horizon + 1):
            up = values[model.x_index[(entity, t)]] >= 0.5
            if up and first is None:
                first = t
            elif not up and first is not None:
                raise SolverError(f"x no monótona para {entity}: falla en {first} y opera en {t}")
        if first is not None:
            failed_at[entity] = first
    steps = max(failed_at.values(), default=0)
    return CascadeResult(failed_at, frozenset(failed_at), steps)


def timeline_flows(model: MipModel, solution: LpSolution, entity: str) -> List[float]:
    """Valores y[entity][t] para t = 0..T"""
    values = model.assignment_vector(solution.assignment)
    return [float(values[model.y_index[(entity, t)]]) for t in range(model.horizon + 1)]
