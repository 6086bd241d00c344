"""
Propagación de fallas en cascada por IDR, Kill Set y FMHV
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple

from joblib import Parallel, delayed

from ..errors import NetworkValidationError
from ..network.model import PowerNetwork, natural_key

logger = logging.getLogger(__name__)

# target -> mintérminos vigentes
DependencyMap = Mapping[str, Sequence[FrozenSet[str]]]


@dataclass(frozen=True)
class CascadeResult:
    failed_at: Dict[str, int] = field(default_factory=dict)
    final_failed: FrozenSet[str] = frozenset()
    steps: int = 0

    def timeline(self) -> List[Tuple[int, str]]:
        """Filas (paso, entidad) ordenadas por paso y luego por id"""
        return sorted(((t, e) for e, t in self.failed_at.items()),
                      key=lambda row: (row[0], natural_key(row[1])))

    def failed_at_step(self, step: int) -> List[str]:
        return sorted((e for e, t in self.failed_at.items() if t == step), key=natural_key)

    def __len__(self) -> int:
        return len(self.final_failed)


def out_line_map(network: PowerNetwork) -> Dict[str, List[str]]:
    lines: Dict[str, List[str]] = {}
    for line, (source, _) in network.line_endpoints.items():
        lines.setdefault(source, []).append(line)
    return lines


def dependency_map(network: PowerNetwork) -> Dict[str, List[FrozenSet[str]]]:
    return {idr.target: list(idr.minterms) for idr in network.idrs}


def closure(dependencies: DependencyMap, out_lines: Mapping[str, Sequence[str]],
            initial: Iterable[str]) -> CascadeResult:
    """
    Iterar las dos reglas de falla hasta el punto fijo

    Un bus con IDR cae en t si todos sus mintérminos contienen una entidad caída en t - 1;
    una línea cae en el mismo paso que su bus origen.
    """
    failed_at: Dict[str, int] = {}

    def fail(entity: str, step: int):
        if entity in failed_at:
            return
        failed_at[entity] = step
        for line in out_lines.get(entity, ()):
            failed_at.setdefault(line, step)

    for entity in initial:
        fail(entity, 0)

    pending = {target: minterms for target, minterms in dependencies.items() if target not in failed_at}
    step = 0
    while True:
        step += 1
        dead = set(failed_at)
        newly = [target for target, minterms in pending.items()
                 if all(m & dead for m in minterms)]
        if not newly:
            break
        for target in newly:
            fail(target, step)
            del pending[target]
    steps = max(failed_at.values(), default=0)
    return CascadeResult(failed_at, frozenset(failed_at), steps)


def check_entity_ids(network: PowerNetwork, ids: Iterable[str]) -> None:
    for entity in ids:
        if entity not in network.entities:
            raise NetworkValidationError(f"Entidad desconocida: {entity}", entity)


def propagate_idr_cascade(network: PowerNetwork, initial: Iterable[str]) -> CascadeResult:
    """
    Simular la cascada por IDR a partir de un conjunto de fallas iniciales

    Args:
        network: Red MIIR
        initial: Entidades que fallan en t = 0

    Returns:
        CascadeResult con el paso de falla de cada entidad

    Raises:
        NetworkValidationError: id desconocido en initial
    """
    initial = list(initial)
    check_entity_ids(network, initial)
    result = closure(dependency_map(network), out_line_map(network), initial)
    logger.debug(f"Cascada desde {sorted(initial, key=natural_key)}: {len(result)} caídas en {result.steps} pasos")
    return result


def kill_set(network: PowerNetwork, entity: str) -> FrozenSet[str]:
    """Entidades caídas al final de la cascada cuando falla solo entity (incluida)"""
    return propagate_idr_cascade(network, [entity]).final_failed


def fractional_minterm_hit_value(dependencies: DependencyMap, killed: FrozenSet[str]) -> float:
    total = 0.0
    for target, minterms in dependencies.items():
        if target in killed:
            continue
        for minterm in minterms:
            total += len(minterm & killed) / len(minterm)
    return total


def fmhv(network: PowerNetwork, entity: str) -> float:
    """
    Fractional Minterm Hit Value: suma de c_i/|s_i| sobre mintérminos de buses que sobreviven
    """
    killed = kill_set(network, entity)
    return fractional_minterm_hit_value(dependency_map(network), killed)


def kill_set_sweep(dependencies: DependencyMap, out_lines: Mapping[str, Sequence[str]],
                   candidates: Sequence[str], n_jobs: int = 1) -> Dict[str, FrozenSet[str]]:
    """Kill sets de varios candidatos sobre un estado de dependencias"""

    def one(entity: str) -> FrozenSet[str]:
        return closure(dependencies, out_lines, [entity]).final_failed

    if n_jobs == 1:
        return {entity: one(entity) for entity in candidates}
    results = Parallel(n_jobs=n_jobs, prefer='threads')(delayed(one)(e) for e in candidates)
    return dict(zip(candidates, results))
