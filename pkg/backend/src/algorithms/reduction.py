"""
Reducción desde densest p-subhypergraph a instancias de KCoL y oráculo de fuerza bruta
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Tuple

from ..errors import BudgetExceededError, ConfigurationError, NetworkValidationError
from ..network.model import Entity, EntityKind, Idr, PowerNetwork, natural_key

logger = logging.getLogger(__name__)

GENERATOR_BOUNDS = ('per_edge', 'total')


@dataclass(frozen=True)
class Hypergraph:
    vertices: FrozenSet[str]
    edges: Tuple[FrozenSet[str], ...]

    def __post_init__(self):
        for index, edge in enumerate(self.edges, start=1):
            if not edge:
                raise NetworkValidationError(f"La hiperarista {index} está vacía")
            unknown = edge - self.vertices
            if unknown:
                raise NetworkValidationError(
                    f"La hiperarista {index} referencia el vértice desconocido {sorted(unknown, key=natural_key)[0]}")

    @classmethod
    def of(cls, edges, vertices=None) -> 'Hypergraph':
        edges = tuple(frozenset(str(v) for v in e) for e in edges)
        if vertices is None:
            vertices = set().union(*edges) if edges else set()
        return cls(frozenset(str(v) for v in vertices), edges)

    def sorted_vertices(self) -> List[str]:
        return sorted(self.vertices, key=natural_key)

    def incident(self, vertex: str) -> List[int]:
        return [i for i, edge in enumerate(self.edges) if vertex in edge]

    def covered_edges(self, chosen) -> int:
        chosen = set(chosen)
        return sum(1 for edge in self.edges if edge <= chosen)


@dataclass
class ReductionResult:
    """Instancia de KCoL con K = p; alcanzar S(M) = p + M caídas equivale a cubrir M hiperaristas"""
    network: PowerNetwork
    k: int
    generator_of: Dict[str, str] = field(default_factory=dict)
    load_of_edge: List[str] = field(default_factory=list)

    def target(self, covered: int) -> int:
        return self.k + covered


def parse_hypergraph(text: str) -> Hypergraph:
    """Una hiperarista por línea, vértices separados por espacios; `#` inicia un comentario"""
    edges = []
    for raw in text.splitlines():
        line = raw.split('#', 1)[0].strip()
        if line:
            edges.append(line.split())
    return Hypergraph.of(edges)


def read_hypergraph_file(path: str) -> Hypergraph:
    with open(path, 'r', encoding='utf-8') as handle:
        return parse_hypergraph(handle.read())


def build_kcol_from_hypergraph(h: Hypergraph, p: int, generator_bound: str = 'per_edge') -> ReductionResult:
    """
    Construir la instancia de KCoL asociada a un hipergrafo

    Un generador por vértice, una carga por hiperarista (demanda = tamaño) y una línea por par
    (vértice, hiperarista) con flujo 1. La IDR de cada carga es la disyunción de los mintérminos
    {línea, generador} de sus miembros.

    Args:
        h: Hipergrafo
        p: Tamaño del subconjunto de vértices (será K)
        generator_bound: 'per_edge' usa Σ(demanda + 1) sobre las aristas incidentes;
            'total' usa (Σ demanda) + 1

    Returns:
        ReductionResult con la red validada (conservación y aciclicidad incluidas)
    """
    if not 1 <= p <= len(h.vertices):
        raise ConfigurationError(f"p fuera de rango: {p} (el hipergrafo tiene {len(h.vertices)} vértices)")
    if generator_bound not in GENERATOR_BOUNDS:
        raise ConfigurationError(f"Cota de generador desconocida: {generator_bound}")

    entities: Dict[str, Entity] = {}
    endpoints: Dict[str, Tuple[str, str]] = {}
    generator_of = {v: f"G{i}" for i, v in enumerate(h.sorted_vertices(), start=1)}
    load_of_edge = [f"L{j}" for j in range(1, len(h.edges) + 1)]
    minterms: Dict[str, List[List[str]]] = {load: [] for load in load_of_edge}

    line_number = 0
    for j, edge in enumerate(h.edges):
        demand = float(len(edge))
        load = load_of_edge[j]
        entities[load] = Entity(load, EntityKind.LOAD, demand, demand, demand)
        for vertex in sorted(edge, key=natural_key):
            line_number += 1
            line = f"T{line_number}"
            entities[line] = Entity(line, EntityKind.LINE, 0.0, demand + 1, 1.0)
            endpoints[line] = (generator_of[vertex], load)
            minterms[load].append([line, generator_of[vertex]])

    for vertex, generator in generator_of.items():
        demands = [len(h.edges[j]) for j in h.incident(vertex)]
        if generator_bound == 'per_edge':
            bound = float(sum(d + 1 for d in demands))
        else:
            bound = float(sum(demands) + 1)
        entities[generator] = Entity(generator, EntityKind.GENERATOR, 0.0, bound, float(len(demands)))

    idrs = [Idr.of(load, terms) for load, terms in minterms.items()]
    network = PowerNetwork(entities=entities, idrs=idrs, line_endpoints=endpoints)
    network.validate()
    logger.info(f"Reducción: {len(h.vertices)} vértices, {len(h.edges)} aristas -> {len(network)} entidades, K={p}")
    return ReductionResult(network, p, generator_of, load_of_edge)


def brute_force_densest_subhypergraph(h: Hypergraph, p: int, budget: int = 10 ** 6) -> Tuple[List[str], int]:
    """
    Subconjunto de p vértices que cubre por completo más hiperaristas

    Empates por el primer subconjunto en orden lexicográfico.

    Raises:
        BudgetExceededError: C(|V|, p) mayor que budget
    """
    if not 1 <= p <= len(h.vertices):
        raise ConfigurationError(f"p fuera de rango: {p}")
    total = math.comb(len(h.vertices), p)
    if total > budget:
        raise BudgetExceededError(f"C({len(h.vertices)}, {p}) = {total} supera el presupuesto de {budget}")
    best, best_count = (), -1
    for candidate in combinations(h.sorted_vertices(), p):
        count = h.covered_edges(candidate)
        if count > best_count:
            best, best_count = candidate, count
    return list(best), best_count
