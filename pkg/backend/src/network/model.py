"""
Tipos del modelo MIIR: entidades, relaciones de interdependencia (IDR) y la red P(E, B, C_t, F)
"""

import hashlib
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

import networkx as nx

from ..errors import ConservationError, NetworkValidationError

CONSERVATION_TOLERANCE = 1e-6
OVERLOAD_TOLERANCE = 1e-9


def natural_key(entity_id: str) -> Tuple:
    """Clave de orden natural: T2 < T10"""
    return tuple(int(part) if part.isdigit() else part
                 for part in re.split(r"(\d+)", entity_id))


class EntityKind(str, Enum):
    GENERATOR = 'generator'
    LOAD = 'load'
    NEUTRAL = 'neutral'
    LINE = 'line'

    @property
    def is_bus(self) -> bool:
        return self is not EntityKind.LINE


@dataclass(frozen=True)
class Entity:
    """
    Entidad de la red con cotas [lower_bound, upper_bound] y valor instantáneo en MW
    """
    id: str
    kind: EntityKind
    lower_bound: float
    upper_bound: float
    value: float

    def validate(self) -> None:
        if self.lower_bound > self.upper_bound:
            raise NetworkValidationError(f"Cotas invertidas en {self.id}", self.id)
        if self.kind is EntityKind.LOAD:
            if not (self.lower_bound == self.upper_bound == self.value):
                raise NetworkValidationError(f"La carga {self.id} debe fijar cotas y valor a la demanda", self.id)
        elif self.kind is EntityKind.NEUTRAL:
            if self.lower_bound != 0 or self.upper_bound != 0 or self.value != 0:
                raise NetworkValidationError(f"El bus neutro {self.id} debe tener cotas y valor 0", self.id)
        else:
            if self.lower_bound != 0:
                raise NetworkValidationError(f"{self.id} debe tener cota inferior 0", self.id)
            if self.value < 0:
                raise NetworkValidationError(f"{self.id} tiene valor negativo", self.id)
            if self.value > self.upper_bound:
                raise NetworkValidationError(
                    f"{self.id} opera en {self.value} MW por encima de su cota {self.upper_bound} MW", self.id)


@dataclass(frozen=True)
class Idr:
    """Disyunción de mintérminos (conjunciones) que mantiene operativo al bus target"""
    target: str
    minterms: Tuple[FrozenSet[str], ...]

    @classmethod
    def of(cls, target: str, minterms: Iterable[Iterable[str]]) -> 'Idr':
        return cls(target, tuple(frozenset(m) for m in minterms))

    def members(self) -> Set[str]:
        result: Set[str] = set()
        for minterm in self.minterms:
            result |= minterm
        return result

    def satisfied(self, failed: Set[str]) -> bool:
        """True si algún mintérmino no contiene entidades caídas"""
        return any(not (minterm & failed) for minterm in self.minterms)

    def __str__(self) -> str:
        terms = ' + '.join('·'.join(sorted(m, key=natural_key)) for m in self.minterms)
        return f"{self.target} <- {terms}"


@dataclass
class PowerNetwork:
    entities: Dict[str, Entity] = field(default_factory=dict)
    idrs: List[Idr] = field(default_factory=list)
    line_endpoints: Dict[str, Tuple[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        self._idr_by_target = {idr.target: idr for idr in self.idrs}

    # -- consultas ----------------------------------------------------------

    @property
    def entity_ids(self) -> List[str]:
        return sorted(self.entities, key=natural_key)

    def __len__(self) -> int:
        return len(self.entities)

    def kind(self, entity_id: str) -> EntityKind:
        return self.entities[entity_id].kind

    def buses(self) -> List[str]:
        return [i for i in self.entity_ids if self.entities[i].kind.is_bus]

    def lines(self) -> List[str]:
        return [i for i in self.entity_ids if self.entities[i].kind is EntityKind.LINE]

    def idr_for(self, target: str) -> Optional[Idr]:
        return self._idr_by_target.get(target)

    def sorted_idrs(self) -> List[Idr]:
        return sorted(self.idrs, key=lambda idr: natural_key(idr.target))

    def out_lines(self, bus: str) -> List[str]:
        return sorted((line for line, (src, _) in self.line_endpoints.items() if src == bus), key=natural_key)

    def in_lines(self, bus: str) -> List[str]:
        return sorted((line for line, (_, dst) in self.line_endpoints.items() if dst == bus), key=natural_key)

    def minterm_count(self) -> int:
        return sum(len(idr.minterms) for idr in self.idrs)

    def dependency_graph(self) -> nx.DiGraph:
        """Grafo dirigido miembro de mintérmino -> bus objetivo de la IDR"""
        graph = nx.DiGraph()
        graph.add_nodes_from(self.entity_ids)
        for idr in self.idrs:
            for member in idr.members():
                graph.add_edge(member, idr.target)
        return graph

    def flow_capacity(self, failed: Iterable[str] = ()) -> Dict[str, float]:
        """
        Cota del flujo efectivo (y - x·e_u) que cada línea o generador puede llevar sin romper el balance

        Una carga absorbe a lo sumo su demanda y los neutros solo reenvían, así que una línea no lleva
        más de lo que aguas abajo se absorbe ni de lo que aguas arriba se suministra. Las entidades
        de failed ya cayeron: una línea o generador caído lleva a lo sumo 1 y una carga caída no absorbe.
        Con ciclos en el grafo de buses no hay cota.
        """
        failed = set(failed)
        graph = nx.DiGraph()
        graph.add_nodes_from(self.buses())
        graph.add_edges_from(self.line_endpoints.values())
        carriers = [i for i in self.entity_ids if self.entities[i].kind in (EntityKind.LINE, EntityKind.GENERATOR)]
        if not nx.is_directed_acyclic_graph(graph):
            return {entity: math.inf for entity in carriers}

        def own(entity: str) -> float:
            return 1.0 if entity in failed else self.entities[entity].upper_bound + 1

        in_lines: Dict[str, List[str]] = {}
        out_lines: Dict[str, List[str]] = {}
        for line, (src, dst) in self.line_endpoints.items():
            out_lines.setdefault(src, []).append(line)
            in_lines.setdefault(dst, []).append(line)
        order = list(nx.topological_sort(graph))

        upstream: Dict[str, float] = {}
        for bus in order:
            supply = sum(upstream[line] for line in in_lines.get(bus, ()))
            if self.entities[bus].kind is EntityKind.GENERATOR:
                supply += own(bus)
            for line in out_lines.get(bus, ()):
                upstream[line] = min(own(line), supply)

        downstream: Dict[str, float] = {}
        capacity: Dict[str, float] = {}
        for bus in reversed(order):
            entity = self.entities[bus]
            forwarded = sum(downstream[line] for line in out_lines.get(bus, ()))
            absorb = forwarded
            if entity.kind is EntityKind.LOAD and bus not in failed:
                absorb += entity.value
            for line in in_lines.get(bus, ()):
                downstream[line] = min(own(line), absorb)
                capacity[line] = min(downstream[line], upstream[line])
            if entity.kind is EntityKind.GENERATOR:
                capacity[bus] = min(own(bus), forwarded)
        return capacity

    def overload_capable(self, failed: Iterable[str] = ()) -> Set[str]:
        """Líneas y generadores operativos cuyo flujo puede llegar a e_u + 1"""
        failed = set(failed)
        capacity = self.flow_capacity(failed)
        return {entity for entity, cap in capacity.items()
                if entity not in failed and cap >= self.entities[entity].upper_bound + 1 - OVERLOAD_TOLERANCE}

    def fingerprint(self) -> str:
        """Hash estable del contenido, usado como clave de cache"""
        parts = [f"{e.id}|{e.kind.value}|{e.lower_bound!r}|{e.upper_bound!r}|{e.value!r}"
                 for e in (self.entities[i] for i in self.entity_ids)]
        parts += [f"{k}>{v}" for k, v in sorted(self.line_endpoints.items(), key=lambda kv: natural_key(kv[0]))]
        parts += [str(idr) for idr in self.sorted_idrs()]
        return hashlib.md5('\n'.join(parts).encode('utf-8')).hexdigest()

    # -- validación ---------------------------------------------------------

    def validate(self, check_conservation: bool = True) -> None:
        """
        Verificar los invariantes de la red

        Raises:
            NetworkValidationError: entidad, IDR o línea inconsistente
            ConservationError: balance violado en algún bus
        """
        for entity in self.entities.values():
            entity.validate()

        for line, (src, dst) in self.line_endpoints.items():
            if line not in self.entities or self.entities[line].kind is not EntityKind.LINE:
                raise NetworkValidationError(f"{line} no es una línea de la red", line)
            for bus in (src, dst):
                if bus not in self.entities or not self.entities[bus].kind.is_bus:
                    raise NetworkValidationError(f"La línea {line} referencia el bus desconocido {bus}", line)
        missing = set(self.lines()) - set(self.line_endpoints)
        if missing:
            first = sorted(missing)[0]
            raise NetworkValidationError(f"La línea {first} no tiene extremos", first)

        targets = set()
        for idr in self.idrs:
            if idr.target not in self.entities or not self.entities[idr.target].kind.is_bus:
                raise NetworkValidationError(f"La IDR de {idr.target} no apunta a un bus", idr.target)
            if self.entities[idr.target].kind is EntityKind.GENERATOR:
                raise NetworkValidationError(f"El generador {idr.target} no puede tener IDR", idr.target)
            if idr.target in targets:
                raise NetworkValidationError(f"{idr.target} tiene más de una IDR", idr.target)
            targets.add(idr.target)
            if not idr.minterms or any(not m for m in idr.minterms):
                raise NetworkValidationError(f"La IDR de {idr.target} tiene mintérminos vacíos", idr.target)
            unknown = idr.members() - set(self.entities)
            if unknown:
                raise NetworkValidationError(
                    f"La IDR de {idr.target} referencia {sorted(unknown)[0]}", idr.target)

        if not nx.is_directed_acyclic_graph(self.dependency_graph()):
            raise NetworkValidationError("El grafo de dependencias tiene ciclos")

        if check_conservation:
            for bus, residual in self.conservation_residuals().items():
                if abs(residual) > CONSERVATION_TOLERANCE:
                    raise ConservationError(
                        f"Balance violado en el bus {bus}: residuo {residual:.6g} MW", bus)

    def conservation_residuals(self) -> Dict[str, float]:
        """salida - (entrada + inyección) por bus; la carga inyecta -demanda"""
        residuals = {}
        for bus in self.buses():
            entity = self.entities[bus]
            injection = -entity.value if entity.kind is EntityKind.LOAD else entity.value
            outflow = sum(self.entities[line].value for line in self.out_lines(bus))
            inflow = sum(self.entities[line].value for line in self.in_lines(bus))
            residuals[bus] = outflow - (inflow + injection)
        return residuals
