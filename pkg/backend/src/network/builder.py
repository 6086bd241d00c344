"""
Construcción de la abstracción P(E, B, C_t, F) a partir de un caso y un snapshot
"""

import logging
from dataclasses import replace
from typing import Dict, List, Optional, Set, Tuple

from ..data_sources.matpower_case import BusType, CaseBranch, CaseBus, RawCase
from ..data_sources.snapshot import Snapshot, validate_snapshot
from ..errors import NetworkValidationError
from .dc_flow import DirectedFlow, compute_line_flows
from .model import Entity, EntityKind, Idr, PowerNetwork

logger = logging.getLogger(__name__)

# Reactancia de la línea sintética generador -> carga creada al dividir un bus
SPLIT_LINE_REACTANCE = 1e-4
GENERATOR_BUS_TYPES = (BusType.REF, BusType.PV)


def generator_bus_ids(case: RawCase) -> Set[int]:
    """
    Buses generadores según su tipo (REF o PV)

    Un bus PQ con filas de generador también cuenta, para no romper el balance.
    """
    with_rows = {gen.bus_id for gen in case.generators}
    result = set()
    for bus in case.buses:
        if bus.bus_type in GENERATOR_BUS_TYPES:
            if bus.bus_id not in with_rows:
                logger.debug(f"Bus {bus.bus_id} de tipo {bus.bus_type.value} sin generador: capacidad 0")
            result.add(bus.bus_id)
        elif bus.bus_id in with_rows:
            logger.debug(f"Bus {bus.bus_id} de tipo PQ con generador: se trata como bus generador")
            result.add(bus.bus_id)
    return result


def split_generator_buses(case: RawCase, snap: Snapshot) -> Tuple[RawCase, Snapshot]:
    """
    Dividir cada bus generador con demanda d > 0 en bus generador (demanda 0),
    bus de carga nuevo (demanda d) y una línea que transporta d con cota d + 1

    Returns:
        (caso, snapshot) con las entidades nuevas añadidas al final
    """
    generator_buses = generator_bus_ids(case)
    next_id = max(case.bus_ids(), default=0) + 1
    buses: List[CaseBus] = []
    new_buses: List[CaseBus] = []
    new_branches: List[CaseBranch] = []
    voltages = dict(snap.voltages) if snap.voltages is not None else None
    line_flows = dict(snap.line_flows) if snap.line_flows is not None else {}

    for bus in case.buses:
        if bus.bus_id not in generator_buses or bus.p_demand <= 0:
            buses.append(bus)
            continue
        demand = bus.p_demand
        buses.append(replace(bus, p_demand=0.0))
        new_buses.append(CaseBus(next_id, BusType.PQ, demand))
        new_branches.append(CaseBranch(bus.bus_id, next_id, 0.0, SPLIT_LINE_REACTANCE, demand + 1))
        line_flows[len(case.branches) + len(new_branches)] = demand
        if voltages is not None and bus.bus_id in voltages:
            voltages[next_id] = voltages[bus.bus_id]
        logger.info(f"Bus generador {bus.bus_id} dividido: carga {next_id} con {demand} MW")
        next_id += 1

    if not new_buses:
        return case, snap
    split_case = RawCase(case.base_mva, tuple(buses) + tuple(new_buses),
                         case.generators, case.branches + tuple(new_branches))
    split_snap = Snapshot(snap.time_label, voltages, line_flows, dict(snap.gen_outputs))
    return split_case, split_snap


def bus_entity_ids(case: RawCase) -> Dict[int, str]:
    """G<id> para buses REF/PV, L<id> con demanda, N<id> neutros"""
    generator_buses = generator_bus_ids(case)
    names = {}
    for bus in case.buses:
        if bus.bus_id in generator_buses:
            names[bus.bus_id] = f"G{bus.bus_id}"
        elif bus.p_demand != 0:
            names[bus.bus_id] = f"L{bus.bus_id}"
        else:
            names[bus.bus_id] = f"N{bus.bus_id}"
    return names


def line_entity_id(index: int) -> str:
    return f"T{index}"


def generate_idrs(case: RawCase, flows: Dict[int, DirectedFlow]) -> List[Idr]:
    """
    Una IDR por bus de carga o neutro con líneas entrantes: disyunción de mintérminos {línea, bus origen}

    Los buses generadores no tienen IDR aunque reciban potencia; solo caen por sobrecarga.

    Args:
        case: Caso (ya dividido)
        flows: Flujos dirigidos por índice de rama

    Returns:
        Lista de IDRs ordenada por bus del caso
    """
    names = bus_entity_ids(case)
    generator_buses = generator_bus_ids(case)
    incoming: Dict[int, List[Tuple[str, str]]] = {}
    for index in sorted(flows):
        flow = flows[index]
        incoming.setdefault(flow.sink, []).append((line_entity_id(index), names[flow.source]))

    idrs = []
    for bus in case.buses:
        if bus.bus_id not in incoming:
            continue
        if bus.bus_id in generator_buses:
            logger.debug(f"Bus generador {bus.bus_id} con potencia entrante: sin IDR")
            continue
        idrs.append(Idr.of(names[bus.bus_id], incoming[bus.bus_id]))
    return idrs


def _line_upper_bound(branch: CaseBranch, default: float) -> float:
    # rateA = 0 significa "sin límite" en MATPOWER
    return branch.rate_a if branch.rate_a > 0 else default


def build_network(case: RawCase, snap: Snapshot, unlimited_rating: Optional[float] = None) -> PowerNetwork:
    """
    Construir la red MIIR (división de buses, flujos, cotas e IDRs)

    Args:
        case: Caso validado
        snap: Snapshot del instante a modelar
        unlimited_rating: Cota para ramas con rateA = 0; por defecto la capacidad total de generación

    Returns:
        PowerNetwork validada, incluida la conservación en t = 0

    Raises:
        ConservationError: el snapshot no balancea algún bus
        NetworkValidationError: línea cargada por encima de rateA u otro invariante
    """
    validate_snapshot(snap, case)
    case, snap = split_generator_buses(case, snap)
    flows = compute_line_flows(case, snap)
    names = bus_entity_ids(case)
    generator_buses = generator_bus_ids(case)
    generation = case.generation_by_bus()
    if unlimited_rating is None:
        unlimited_rating = sum(pmax for _, pmax in generation.values())

    entities: Dict[str, Entity] = {}
    for bus in case.buses:
        name = names[bus.bus_id]
        if bus.bus_id in generator_buses:
            pg, pmax = generation.get(bus.bus_id, (0.0, 0.0))
            value = snap.gen_outputs.get(bus.bus_id, pg)
            entities[name] = Entity(name, EntityKind.GENERATOR, 0.0, pmax, value)
        elif bus.p_demand != 0:
            entities[name] = Entity(name, EntityKind.LOAD, bus.p_demand, bus.p_demand, bus.p_demand)
        else:
            entities[name] = Entity(name, EntityKind.NEUTRAL, 0.0, 0.0, 0.0)

    line_endpoints = {}
    for index, branch in enumerate(case.branches, start=1):
        name = line_entity_id(index)
        flow = flows[index]
        entities[name] = Entity(name, EntityKind.LINE, 0.0, _line_upper_bound(branch, unlimited_rating), flow.mw)
        line_endpoints[name] = (names[flow.source], names[flow.sink])

    network = PowerNetwork(entities, generate_idrs(case, flows), line_endpoints)
    network.validate()
    logger.info(f"Red construida: {len(network)} entidades, {len(network.idrs)} IDRs, "
                f"{network.minterm_count()} mintérminos")
    return network
