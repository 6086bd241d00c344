"""
Lista de K contingencias: heurística voraz por Kill Set, búsqueda exhaustiva y evaluación de conjuntos
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from ..errors import BudgetExceededError, ConfigurationError, SolverError
from ..network.model import PowerNetwork, natural_key
from ..optimization.branch_and_bound import solve_mip
from ..optimization.mip_builder import MipOptions, build_fixed_initial_mip, cascade_assignment, cascade_horizon
from ..optimization.mip_model import LpSolution, MipModel, SolutionStatus
from ..optimization.verification import extract_timeline, verify_solution
from .cascade import (CascadeResult, check_entity_ids, closure, dependency_map,
                      fractional_minterm_hit_value, kill_set_sweep, out_line_map, propagate_idr_cascade)

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 6


class EvaluationMode(str, Enum):
    IDR_ONLY = 'idr'
    WCCP = 'wccp'


@dataclass(frozen=True)
class RoundLog:
    entity: str
    kill_set_size: int
    fmhv: float


@dataclass
class ContingencyReport:
    """Resultado de una corrida: entidades elegidas y número de caídas"""
    chosen: List[str]
    idr_dead_count: int
    wccp_dead_count: Optional[int] = None
    per_round_log: List[RoundLog] = field(default_factory=list)
    k: int = 0
    method: str = 'heuristic'
    mode: EvaluationMode = EvaluationMode.IDR_ONLY
    elapsed: float = 0.0

    @property
    def dead_count(self) -> int:
        """Caídas según el modo de la corrida"""
        if self.mode is EvaluationMode.WCCP and self.wccp_dead_count is not None:
            return self.wccp_dead_count
        return self.idr_dead_count

    def table_row(self) -> str:
        return f"{self.k}\t{self.method}\t{self.dead_count}\t{self.elapsed:.3f}"

    def to_dict(self) -> Dict:
        return {
            'k': self.k,
            'method': self.method,
            'mode': self.mode.value,
            'chosen': list(self.chosen),
            'idr_dead_count': self.idr_dead_count,
            'wccp_dead_count': self.wccp_dead_count,
            'dead_count': self.dead_count,
            'per_round_log': [
                {'entity': r.entity, 'kill_set_size': r.kill_set_size, 'fmhv': r.fmhv}
                for r in self.per_round_log
            ],
            'elapsed_seconds': round(self.elapsed, 6),
        }


@dataclass
class WccpEvaluation:
    dead_count: int
    timeline: CascadeResult
    model: MipModel
    solution: LpSolution


def _check_k(network: PowerNetwork, k: int) -> None:
    if not 0 <= k <= len(network):
        raise ConfigurationError(f"K fuera de rango: {k} (la red tiene {len(network)} entidades)")


def _prune(dependencies: Dict[str, List[FrozenSet[str]]], out_lines: Dict[str, List[str]],
           dead: Set[str]) -> None:
    """
    Quitar las entidades muertas de ambos lados de las IDR

    Un bus cuya IDR se queda sin mintérminos pasa a estar muerto junto con sus líneas de salida.
    """
    changed = True
    while changed:
        changed = False
        for target in list(dependencies):
            if target in dead:
                del dependencies[target]
                continue
            had_minterms = bool(dependencies[target])
            alive = [m for m in dependencies[target] if not (m & dead)]
            dependencies[target] = alive
            if had_minterms and not alive:
                dead.add(target)
                dead.update(out_lines.get(target, ()))
                del dependencies[target]
                changed = True
    for bus in list(out_lines):
        if bus in dead:
            del out_lines[bus]
        else:
            out_lines[bus] = [line for line in out_lines[bus] if line not in dead]


def heuristic_k_list(network: PowerNetwork, k: int, evaluate_wccp: bool = False, n_jobs: int = 1,
                     backend: str = 'builtin', time_limit: float = 60.0,
                     options: Optional[MipOptions] = None) -> ContingencyReport:
    """
    Heurística voraz: en cada ronda elegir la entidad viva con el Kill Set más grande

    Empates por mayor FMHV y luego por id natural más bajo. El Kill Set del ganador se elimina
    de la red de trabajo antes de la ronda siguiente.

    Args:
        network: Red MIIR
        k: Número de rondas
        evaluate_wccp: Evaluar además el conjunto elegido con el MIP de conjunto fijo
        n_jobs: Hilos para el cálculo de Kill Sets de cada ronda

    Returns:
        ContingencyReport con la bitácora de cada ronda
    """
    _check_k(network, k)
    started = time.perf_counter()
    dependencies = dependency_map(network)
    out_lines = out_line_map(network)
    dead: Set[str] = set()
    chosen: List[str] = []
    rounds: List[RoundLog] = []

    for round_number in range(1, k + 1):
        live = [e for e in network.entity_ids if e not in dead]
        if not live:
            logger.info(f"Sin entidades vivas tras {round_number - 1} rondas")
            break
        kill_sets = kill_set_sweep(dependencies, out_lines, live, n_jobs=n_jobs)
        scored = [(len(kill_sets[e]), fractional_minterm_hit_value(dependencies, kill_sets[e]), e) for e in live]
        size, value, winner = min(scored, key=lambda s: (-s[0], -s[1], natural_key(s[2])))
        chosen.append(winner)
        rounds.append(RoundLog(winner, size, value))
        logger.debug(f"Ronda {round_number}: {winner} (kill set {size}, FMHV {value:.3f})")
        dead |= kill_sets[winner]
        _prune(dependencies, out_lines, dead)

    report = ContingencyReport(
        chosen=chosen,
        idr_dead_count=len(propagate_idr_cascade(network, chosen)),
        per_round_log=rounds,
        k=k,
        method='heuristic',
        mode=EvaluationMode.WCCP if evaluate_wccp else EvaluationMode.IDR_ONLY,
    )
    if evaluate_wccp:
        report.wccp_dead_count = evaluate_initial_set(network, chosen, EvaluationMode.WCCP, backend=backend,
                                                      time_limit=time_limit, options=options)
    report.elapsed = time.perf_counter() - started
    logger.info(f"Heurística K={k}: {chosen} -> {report.dead_count} caídas")
    return report


def wccp_evaluation(network: PowerNetwork, initial: Iterable[str], backend: str = 'builtin',
                    time_limit: float = 60.0, options: Optional[MipOptions] = None,
                    solution: Optional[LpSolution] = None) -> WccpEvaluation:
    """
    Resolver (o aceptar ya resuelto) el MIP de conjunto inicial fijo y recuperar su línea de tiempo

    Cuando se resuelve aquí, el horizonte se acota a las entidades que pueden caer y el solver propio
    parte de la cascada por IDR como incumbente. Una solución externa se verifica contra el modelo
    con el horizonte de las opciones (por defecto |E| - 1), que es el que se exporta.

    Raises:
        SolverError: Modelo infactible, sin incumbente o solución externa que no verifica
    """
    initial = sorted(set(initial), key=natural_key)
    options = options or MipOptions()
    if solution is None:
        if options.horizon is None:
            options = replace(options, horizon=cascade_horizon(network, initial))
        model = build_fixed_initial_mip(network, initial, options)
        start = cascade_assignment(model, network, initial)
        solution = solve_mip(model, time_limit=time_limit, backend=backend, start=start)
    else:
        model = build_fixed_initial_mip(network, initial, options)
    if solution.status is SolutionStatus.INFEASIBLE or not solution.assignment:
        raise SolverError(f"El MIP de {initial} no tiene solución ({solution.status.value})")
    if solution.status is SolutionStatus.TIME_LIMIT:
        logger.warning(f"Evaluación de {initial} sin óptimo probado (cota {solution.bound})")
    report = verify_solution(model, solution)
    if not report.passed:
        raise SolverError(f"La solución de {initial} no verifica:\n{report.summary()}")
    return WccpEvaluation(int(round(solution.objective_value)), extract_timeline(model, solution), model, solution)


def evaluate_initial_set(network: PowerNetwork, initial: Iterable[str],
                         mode: EvaluationMode = EvaluationMode.IDR_ONLY, backend: str = 'builtin',
                         time_limit: float = 60.0, options: Optional[MipOptions] = None,
                         solution: Optional[LpSolution] = None) -> int:
    """
    Número de entidades caídas al final partiendo de initial

    Args:
        network: Red MIIR
        initial: Conjunto inicial de fallas
        mode: IDR_ONLY (cierre de la cascada) o WCCP (óptimo del MIP de conjunto fijo)
        solution: Solución externa del MIP de conjunto fijo; se verifica antes de usarla

    Returns:
        Entidades caídas en el último paso
    """
    initial = list(initial)
    check_entity_ids(network, initial)
    if not initial:
        return 0
    if mode is EvaluationMode.IDR_ONLY:
        return len(propagate_idr_cascade(network, initial))
    return wccp_evaluation(network, initial, backend, time_limit, options, solution).dead_count


def _enumeration_size(network: PowerNetwork, k: int, budget: int) -> int:
    total = math.comb(len(network), k)
    if total > budget:
        raise BudgetExceededError(f"C({len(network)}, {k}) = {total} conjuntos supera el presupuesto de {budget}")
    return total


def exhaustive_k_list(network: PowerNetwork, k: int, mode: EvaluationMode = EvaluationMode.IDR_ONLY,
                      budget: int = DEFAULT_BUDGET, n_jobs: int = 1, backend: str = 'builtin',
                      time_limit: float = 60.0, options: Optional[MipOptions] = None,
                      progress: bool = False) -> ContingencyReport:
    """
    Enumerar todos los conjuntos de K entidades y quedarse con el que más caídas produce

    Los empates se resuelven por el primer conjunto en orden lexicográfico de ids naturales.
    En modo WCCP los conjuntos cuyo MIP resulta infactible se descartan con un aviso.

    Raises:
        BudgetExceededError: C(|E|, K) mayor que budget
    """
    _check_k(network, k)
    total = _enumeration_size(network, k, budget)
    started = time.perf_counter()
    ids = network.entity_ids
    dependencies = dependency_map(network)
    out_lines = out_line_map(network)

    def score(candidate: Tuple[str, ...]) -> int:
        if mode is EvaluationMode.IDR_ONLY:
            return len(closure(dependencies, out_lines, candidate).final_failed)
        try:
            return evaluate_initial_set(network, candidate, mode, backend, time_limit, options)
        except SolverError as e:
            logger.warning(f"Conjunto {list(candidate)} descartado: {e}")
            return -1

    candidates = combinations(ids, k)
    iterator = tqdm(candidates, total=total, disable=not progress, desc=f"K={k}")
    if n_jobs == 1:
        scores = [(score(c), c) for c in iterator]
    else:
        pending = list(iterator)
        values = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(score)(c) for c in pending)
        scores = list(zip(values, pending))

    best_count, best = -1, ()
    for count, candidate in scores:
        if count > best_count:
            best_count, best = count, candidate
    if best_count < 0:
        raise SolverError(f"Ningún conjunto de tamaño {k} produjo un MIP factible")

    report = ContingencyReport(
        chosen=list(best),
        idr_dead_count=len(propagate_idr_cascade(network, best)),
        k=k,
        method='exact',
        mode=mode,
    )
    if mode is EvaluationMode.WCCP:
        report.wccp_dead_count = best_count
    report.elapsed = time.perf_counter() - started
    logger.info(f"Exhaustiva K={k} ({total} conjuntos): {report.chosen} -> {report.dead_count} caídas")
    return report


def sweep_k(network: PowerNetwork, ks: Sequence[int], method: str = 'heuristic',
            mode: EvaluationMode = EvaluationMode.IDR_ONLY, **kwargs) -> List[ContingencyReport]:
    """Correr la heurística o la búsqueda exhaustiva para varios K (curva caídas vs. K)"""
    reports = []
    for k in ks:
        if method == 'heuristic':
            reports.append(heuristic_k_list(network, k, evaluate_wccp=mode is EvaluationMode.WCCP, **kwargs))
        elif method == 'exact':
            reports.append(exhaustive_k_list(network, k, mode, **kwargs))
        else:
            raise ConfigurationError(f"Método desconocido: {method}")
    return reports
