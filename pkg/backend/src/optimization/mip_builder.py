"""
Construcción del MIP de la lista de K contingencias

Objetivo: maximizar Σ x[i][T]. Familias de restricciones (prefijo del nombre de fila):
  card / init  conjunto inicial: Σ x[i][0] = K, o x[i][0] fijado en el modelo de conjunto fijo
  mono         una entidad caída no se recupera: x[i][t] >= x[i][t-1]
  mint / idr   c[m][t] <= Σ x[a][t-1] sobre el mintérmino; N·x[i][t] <= Σ c[m][t] + N·x[i][0].
               hold: un bus de carga o neutro sin IDR solo cae en t = 0
  ovl          una falla lleva el flujo a su cota: e_u·x[p][t] <= y[p][t]
  trip         una caída nueva de generador o línea necesita flujo e_u + 1 en el paso previo
               mientras operaba (una línea también cae con su bus origen); en t = 1 el flujo previo
               es el del snapshot, que nunca supera e_u
  bal / sup    balance con términos y - x·e_u para 0 <= t <= T - 1: igualdad en generadores y neutros;
               en las cargas 0 <= entrada - salida <= demanda·(1 - x[l][t+1])
  follow       x[línea][t] >= x[bus origen][t] para t >= 1 (paper_literal invierte el signo)

Con el conjunto inicial vacío los flujos quedan fijos al snapshot y el óptimo es 0.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from ..algorithms.cascade import closure, dependency_map, out_line_map
from ..errors import ConfigurationError, NetworkValidationError
from ..network.model import EntityKind, PowerNetwork, natural_key
from .mip_model import MipModel, Relation, VarKind

logger = logging.getLogger(__name__)

CARRIERS = (EntityKind.GENERATOR, EntityKind.LINE)


@dataclass(frozen=True)
class MipOptions:
    paper_literal: bool = False
    horizon: Optional[int] = None

    def __post_init__(self):
        if self.horizon is not None and self.horizon < 0:
            raise ConfigurationError("El horizonte debe ser no negativo")


def settled_failures(network: PowerNetwork, initial: Iterable[str]) -> Set[str]:
    """Entidades caídas en todo t >= 1: las iniciales y las líneas que salen de buses iniciales"""
    initial = set(initial)
    return initial | {line for line, (src, _) in network.line_endpoints.items() if src in initial}


class _Builder:
    def __init__(self, network: PowerNetwork, options: MipOptions, initial: Optional[Set[str]]):
        self.network = network
        self.options = options
        self.ids = network.entity_ids
        self.horizon = options.horizon if options.horizon is not None else max(len(self.ids) - 1, 0)
        self.model = MipModel(horizon=self.horizon, entity_ids=list(self.ids))
        self.idrs = network.sorted_idrs()
        self.source = {line: src for line, (src, _) in network.line_endpoints.items()}
        self.capable = network.overload_capable(settled_failures(network, initial or ()))

    # -- variables ----------------------------------------------------------

    def declare(self, pin_flows: bool) -> None:
        m, T = self.model, self.horizon
        for entity in self.ids:
            for t in range(T + 1):
                m.x_index[(entity, t)] = m.add_variable(f"x_{entity}_{t}", VarKind.BINARY, 0.0, 1.0)
        for entity in self.ids:
            e = self.network.entities[entity]
            for t in range(T + 1):
                if e.kind not in CARRIERS or pin_flows:
                    lower = upper = e.value
                else:
                    lower, upper = 0.0, e.upper_bound + 1
                m.y_index[(entity, t)] = m.add_variable(f"y_{entity}_{t}", VarKind.CONTINUOUS, lower, upper)
        for idr in self.idrs:
            for k, _ in enumerate(idr.minterms):
                for t in range(T + 1):
                    m.c_index[(idr.target, k, t)] = m.add_variable(
                        f"c_{idr.target}_{k}_{t}", VarKind.BINARY, 0.0, 0.0 if t == 0 else 1.0)

    def x(self, entity: str, t: int) -> int:
        return self.model.x_index[(entity, t)]

    def y(self, entity: str, t: int) -> int:
        return self.model.y_index[(entity, t)]

    def c(self, target: str, k: int, t: int) -> int:
        return self.model.c_index[(target, k, t)]

    def objective(self) -> None:
        self.model.objective = {self.x(e, self.horizon): 1.0 for e in self.ids}

    # -- familias -----------------------------------------------------------

    def cardinality(self, k: int) -> None:
        self.model.add_constraint('card', ((self.x(e, 0), 1.0) for e in self.ids), Relation.EQ, k)

    def fixed_initial(self, initial: Set[str]) -> None:
        for e in self.ids:
            self.model.add_constraint(f"init_{e}", [(self.x(e, 0), 1.0)], Relation.EQ, 1.0 if e in initial else 0.0)

    def monotone(self) -> None:
        for e in self.ids:
            for t in range(1, self.horizon + 1):
                self.model.add_constraint(f"mono_{e}_{t}", [(self.x(e, t), 1.0), (self.x(e, t - 1), -1.0)],
                                          Relation.GE, 0.0)

    def dependencies(self) -> None:
        m, T, net = self.model, self.horizon, self.network
        for idr in self.idrs:
            n = len(idr.minterms)
            for k, minterm in enumerate(idr.minterms):
                members = sorted(minterm, key=natural_key)
                for t in range(1, T + 1):
                    terms = [(self.c(idr.target, k, t), 1.0)] + [(self.x(a, t - 1), -1.0) for a in members]
                    m.add_constraint(f"mint_{idr.target}_{k}_{t}", terms, Relation.LE, 0.0)
            for t in range(1, T + 1):
                terms = [(self.x(idr.target, t), float(n)), (self.x(idr.target, 0), -float(n))]
                terms += [(self.c(idr.target, k, t), -1.0) for k in range(n)]
                m.add_constraint(f"idr_{idr.target}_{t}", terms, Relation.LE, 0.0)

        for bus in net.buses():
            if net.idr_for(bus) is None and net.kind(bus) is not EntityKind.GENERATOR:
                for t in range(1, T + 1):
                    m.add_constraint(f"hold_{bus}_{t}", [(self.x(bus, t), 1.0), (self.x(bus, 0), -1.0)],
                                     Relation.LE, 0.0)

    def overloads(self) -> None:
        m, T, net = self.model, self.horizon, self.network
        for p in self.ids:
            e = net.entities[p]
            if e.kind not in CARRIERS:
                continue
            for t in range(T + 1):
                m.add_constraint(f"ovl_{p}_{t}", [(self.x(p, t), e.upper_bound), (self.y(p, t), -1.0)],
                                 Relation.LE, 0.0)
            # Sin capacidad para llegar a e_u + 1 el término de flujo no aporta: queda la forma ajustada
            cap = e.upper_bound + 1 if p in self.capable else 1.0
            for t in range(1, T + 1):
                terms = [(self.x(p, t), cap), (self.x(p, t - 1), -cap)]
                if e.kind is EntityKind.LINE:
                    terms.append((self.x(self.source[p], t), -cap))
                if p in self.capable and t >= 2:
                    terms.append((self.y(p, t - 1), -1.0))
                m.add_constraint(f"trip_{p}_{t}", terms, Relation.LE, 0.0)

    def balance(self) -> None:
        m, T, net = self.model, self.horizon, self.network

        def term(entity: str, t: int, sign: float) -> List[Tuple[int, float]]:
            return [(self.y(entity, t), sign), (self.x(entity, t), -sign * net.entities[entity].upper_bound)]

        for bus in net.buses():
            e = net.entities[bus]
            for t in range(T):
                inflow = [pair for line in net.in_lines(bus) for pair in term(line, t, 1.0)]
                outflow = [pair for line in net.out_lines(bus) for pair in term(line, t, -1.0)]
                if e.kind is EntityKind.LOAD:
                    served = inflow + outflow
                    m.add_constraint(f"bal_{bus}_{t}", served + [(self.x(bus, t + 1), e.value)],
                                     Relation.LE, e.value)
                    m.add_constraint(f"sup_{bus}_{t}", served, Relation.GE, 0.0)
                else:
                    injected = term(bus, t, 1.0) if e.kind is EntityKind.GENERATOR else []
                    m.add_constraint(f"bal_{bus}_{t}", inflow + outflow + injected, Relation.EQ, 0.0)

    def lines_follow_source(self) -> None:
        relation = Relation.LE if self.options.paper_literal else Relation.GE
        for line in self.network.lines():
            src = self.source[line]
            for t in range(1, self.horizon + 1):
                self.model.add_constraint(f"follow_{line}_{t}", [(self.x(line, t), 1.0), (self.x(src, t), -1.0)],
                                          relation, 0.0)


def _build(network: PowerNetwork, options: MipOptions, k: Optional[int], initial: Optional[Set[str]]) -> MipModel:
    builder = _Builder(network, options, initial)
    builder.declare(pin_flows=(k == 0) if initial is None else not initial)
    builder.objective()
    if initial is None:
        builder.cardinality(k)
    else:
        builder.fixed_initial(initial)
    builder.monotone()
    builder.dependencies()
    builder.overloads()
    builder.balance()
    builder.lines_follow_source()
    model = builder.model
    logger.info(f"MIP construido: {model.n_vars} variables, {len(model.constraints)} restricciones, "
                f"horizonte {model.horizon}, {len(builder.capable)} entidades con sobrecarga posible")
    return model


def build_mip(network: PowerNetwork, k: int, options: Optional[MipOptions] = None) -> MipModel:
    """
    Construir el MIP de KCoL para K fallas iniciales

    Args:
        network: Red MIIR
        k: Número de entidades que fallan en t = 0
        options: Variante literal de la regla de líneas y horizonte

    Returns:
        MipModel que maximiza las entidades caídas en el último paso
    """
    if not 0 <= k <= len(network):
        raise ConfigurationError(f"K fuera de rango: {k} (la red tiene {len(network)} entidades)")
    return _build(network, options or MipOptions(), k, None)


def _check_initial(network: PowerNetwork, initial: Iterable[str]) -> Set[str]:
    initial = set(initial)
    unknown = initial - set(network.entities)
    if unknown:
        first = sorted(unknown, key=natural_key)[0]
        raise NetworkValidationError(f"Entidad desconocida: {first}", first)
    return initial


def build_fixed_initial_mip(network: PowerNetwork, initial: Iterable[str],
                            options: Optional[MipOptions] = None) -> MipModel:
    """Igual que build_mip pero con el conjunto inicial fijado (x[i][0] = 1 solo en initial)"""
    return _build(network, options or MipOptions(), None, _check_initial(network, initial))


def cascade_horizon(network: PowerNetwork, initial: Iterable[str]) -> int:
    """
    Horizonte suficiente para evaluar un conjunto inicial

    Un paso sin caídas nuevas se puede quitar de la trayectoria copiando los flujos del paso
    siguiente, así que bastan tantos pasos como entidades puedan caer (más uno para las líneas
    de los buses iniciales). Las que pueden caer salen del cierre por IDR de las iniciales más
    las que admiten sobrecarga.
    """
    initial = _check_initial(network, initial)
    capable = network.overload_capable(settled_failures(network, initial))
    reachable = closure(dependency_map(network), out_line_map(network), initial | capable)
    candidates = len(reachable.final_failed - initial)
    return max(0, min(len(network) - 1, candidates + 1))


def cascade_assignment(model: MipModel, network: PowerNetwork, initial: Iterable[str]) -> np.ndarray:
    """
    Asignación factible del modelo que reproduce la cascada por IDR del conjunto inicial

    Cada bus cae en el primer paso en que sus mintérminos están todos tocados y cada línea con su
    bus origen, salvo las de buses iniciales, que caen en t = 1. Las entidades caídas quedan con
    flujo en su cota y las operativas sin flujo. Sirve de incumbente inicial para el solver propio.

    Raises:
        ConfigurationError: el horizonte del modelo no alcanza la cascada
    """
    initial = _check_initial(network, initial)
    dependencies = dependency_map(network)
    out_lines = out_line_map(network)
    failed_at: Dict[str, int] = {e: 0 for e in initial}
    step = 0
    while True:
        step += 1
        dead = set(failed_at)
        buses = {target for target, minterms in dependencies.items()
                 if target not in failed_at and all(m & dead for m in minterms)}
        lines = {line for bus in dead | buses for line in out_lines.get(bus, ()) if line not in failed_at}
        if not buses and not lines:
            break
        for entity in buses | lines:
            failed_at[entity] = step
    last = max(failed_at.values(), default=0)
    if last > model.horizon:
        raise ConfigurationError(f"El horizonte {model.horizon} no alcanza la cascada de {last} pasos")

    def failed(entity: str, t: int) -> bool:
        return entity in failed_at and failed_at[entity] <= t

    values = model.lower_bounds()
    upper = model.upper_bounds()
    for (entity, t), index in model.x_index.items():
        values[index] = float(failed(entity, t))
    for (entity, t), index in model.y_index.items():
        if values[index] < upper[index] and failed(entity, t):
            values[index] = network.entities[entity].upper_bound
    for (target, k, t), index in model.c_index.items():
        if t >= 1:
            minterm = network.idr_for(target).minterms[k]
            values[index] = float(any(failed(a, t - 1) for a in minterm))
    return values
