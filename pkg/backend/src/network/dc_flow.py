"""
Cálculo de flujos de línea: fórmula de potencia real a partir de voltajes y flujo DC de conveniencia
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import networkx as nx
import numpy as np
from scipy import linalg

from ..data_sources.matpower_case import BusType, RawCase
from ..data_sources.snapshot import Snapshot
from ..errors import NetworkValidationError, SolverError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirectedFlow:
    """Magnitud de flujo (MW) con el sentido previo a la perturbación"""
    source: int
    sink: int
    mw: float

    @property
    def is_zero(self) -> bool:
        return self.mw == 0


def real_power_flow(v1: complex, v2: complex, impedance: complex, base_mva: float) -> float:
    """P12 = Re(V1 * ((V1 - V2) / Z12)*) en MW, con signo (positivo de 1 hacia 2)"""
    if impedance == 0:
        raise NetworkValidationError("Impedancia nula en la línea")
    current = (v1 - v2) / impedance
    return (v1 * current.conjugate()).real * base_mva


def _orient(from_bus: int, to_bus: int, signed_mw: float) -> DirectedFlow:
    if signed_mw >= 0:
        return DirectedFlow(from_bus, to_bus, abs(signed_mw))
    return DirectedFlow(to_bus, from_bus, abs(signed_mw))


def compute_line_flows(case: RawCase, snap: Snapshot) -> Dict[int, DirectedFlow]:
    """
    Flujos dirigidos por rama (índice 1-based)

    Los flujos precalculados del snapshot tienen prioridad; las ramas sin flujo
    precalculado se calculan con los voltajes.

    Raises:
        NetworkValidationError: impedancia nula o rama sin datos de flujo
    """
    flows: Dict[int, DirectedFlow] = {}
    given = snap.line_flows or {}
    voltages = snap.voltages or {}

    for index, branch in enumerate(case.branches, start=1):
        if index in given:
            signed = given[index]
        elif branch.from_bus in voltages and branch.to_bus in voltages:
            signed = real_power_flow(voltages[branch.from_bus], voltages[branch.to_bus],
                                     branch.impedance, case.base_mva)
        else:
            raise NetworkValidationError(f"La rama {index} no tiene flujo ni voltajes en el snapshot")
        flows[index] = _orient(branch.from_bus, branch.to_bus, signed)

    zero = [i for i, f in flows.items() if f.is_zero]
    if zero:
        logger.warning(f"Ramas con flujo nulo (orientadas según el caso): {zero}")
    return flows


def _reference_bus(case: RawCase) -> int:
    for bus in case.buses:
        if bus.bus_type is BusType.REF:
            return bus.bus_id
    raise SolverError("El caso no tiene bus de referencia (REF)")


def solve_dc_flow(case: RawCase, time_label: str = 'dc') -> Snapshot:
    """
    Resolver el flujo DC sin pérdidas (ángulos del sistema de susceptancias, REF en 0)

    El generador del bus de referencia absorbe el desbalance entre generación y demanda.

    Args:
        case: Caso validado con al menos un bus REF
        time_label: Etiqueta del snapshot generado

    Returns:
        Snapshot con line_flows y gen_outputs en MW

    Raises:
        SolverError: red desconectada (sistema singular) o sin bus REF
    """
    reference = _reference_bus(case)
    bus_ids = case.bus_ids()
    position = {bus_id: k for k, bus_id in enumerate(bus_ids)}

    graph = nx.MultiGraph()
    graph.add_nodes_from(bus_ids)
    graph.add_edges_from((b.from_bus, b.to_bus) for b in case.branches)
    if len(bus_ids) > 1 and not nx.is_connected(graph):
        raise SolverError("Sistema singular: la red está desconectada")

    n = len(bus_ids)
    susceptance = np.zeros((n, n))
    for branch in case.branches:
        i, j = position[branch.from_bus], position[branch.to_bus]
        b = 1.0 / branch.reactance
        susceptance[i, i] += b
        susceptance[j, j] += b
        susceptance[i, j] -= b
        susceptance[j, i] -= b

    generation = {bus: pg for bus, (pg, _) in case.generation_by_bus().items()}
    injection = np.array([generation.get(bus.bus_id, 0.0) - bus.p_demand for bus in case.buses])
    slack = position[reference]
    injection[slack] = -(injection.sum() - injection[slack])

    keep = [k for k in range(n) if k != slack]
    angles = np.zeros(n)
    if keep:
        try:
            reduced = susceptance[np.ix_(keep, keep)]
            angles[keep] = linalg.solve(reduced, injection[keep] / case.base_mva)
        except linalg.LinAlgError as e:
            raise SolverError(f"Sistema singular: {e}")

    line_flows = {}
    for index, branch in enumerate(case.branches, start=1):
        i, j = position[branch.from_bus], position[branch.to_bus]
        line_flows[index] = float((angles[i] - angles[j]) / branch.reactance * case.base_mva)

    gen_outputs = dict(generation)
    slack_bus = case.bus(reference)
    gen_outputs[reference] = float(injection[slack] + slack_bus.p_demand)
    if reference not in {g.bus_id for g in case.generators}:
        if abs(gen_outputs[reference]) > 1e-9:
            raise SolverError(f"El bus de referencia {reference} no tiene generador para cerrar el balance")
        del gen_outputs[reference]

    logger.info(f"Flujo DC resuelto: {len(line_flows)} ramas, slack {reference} = {gen_outputs.get(reference, 0.0):.3f} MW")
    return Snapshot(time_label=time_label, line_flows=line_flows, gen_outputs=gen_outputs)
