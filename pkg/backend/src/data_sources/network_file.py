"""
Formato de archivo de red MIIR (JSON): entidades, líneas orientadas e IDRs
"""

import json
import logging
from typing import Any, Dict

from ..errors import NetworkValidationError
from ..network.model import Entity, EntityKind, Idr, PowerNetwork, natural_key

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12


def round_sig(value: float) -> float:
    """Redondear a la precisión impresa del formato"""
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}")


def network_to_dict(network: PowerNetwork) -> Dict[str, Any]:
    entities = [
        {
            'id': e.id,
            'kind': e.kind.value,
            'lower_bound': round_sig(e.lower_bound),
            'upper_bound': round_sig(e.upper_bound),
            'value': round_sig(e.value),
        }
        for e in (network.entities[i] for i in network.entity_ids)
    ]
    lines = [
        {'id': line, 'from_entity': src, 'to_entity': dst, 'direction': 'forward'}
        for line, (src, dst) in sorted(network.line_endpoints.items(), key=lambda kv: natural_key(kv[0]))
    ]
    idrs = {
        idr.target: [sorted(minterm, key=natural_key) for minterm in idr.minterms]
        for idr in network.idrs
    }
    return {'entities': entities, 'lines': lines, 'idrs': idrs}


def emit_network(network: PowerNetwork) -> str:
    return json.dumps(network_to_dict(network), indent=2, ensure_ascii=False)


def network_from_dict(data: Dict[str, Any], validate: bool = True) -> PowerNetwork:
    """
    Construir una red desde su representación de diccionario

    Args:
        data: Diccionario con claves entities, lines e idrs
        validate: Verificar invariantes (incluida la conservación)

    Raises:
        NetworkValidationError: estructura o contenido inválido
    """
    try:
        entities = {}
        for row in data.get('entities', []):
            entity = Entity(
                id=str(row['id']),
                kind=EntityKind(row['kind']),
                lower_bound=float(row['lower_bound']),
                upper_bound=float(row['upper_bound']),
                value=float(row['value']),
            )
            if entity.id in entities:
                raise NetworkValidationError(f"Entidad duplicada: {entity.id}", entity.id)
            entities[entity.id] = entity

        line_endpoints = {}
        for row in data.get('lines', []):
            src, dst = str(row['from_entity']), str(row['to_entity'])
            direction = row.get('direction', 'forward')
            if direction not in ('forward', 'reverse'):
                raise NetworkValidationError(f"Dirección inválida en {row['id']}: {direction}", str(row['id']))
            line_endpoints[str(row['id'])] = (src, dst) if direction == 'forward' else (dst, src)

        idrs = [Idr.of(str(target), [[str(m) for m in minterm] for minterm in minterms])
                for target, minterms in data.get('idrs', {}).items()]
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise NetworkValidationError(f"Archivo de red mal formado: {e}")

    network = PowerNetwork(entities, idrs, line_endpoints)
    if validate:
        network.validate()
    return network


def parse_network(text: str, validate: bool = True) -> PowerNetwork:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkValidationError(f"JSON inválido: {e}")
    if not isinstance(data, dict):
        raise NetworkValidationError("El archivo de red debe ser un objeto JSON")
    return network_from_dict(data, validate=validate)


def roundtrip_network(network: PowerNetwork) -> PowerNetwork:
    """Serializar y volver a leer; útil para comprobar el formato"""
    return parse_network(emit_network(network))


def read_network_file(path: str, validate: bool = True) -> PowerNetwork:
    with open(path, 'r', encoding='utf-8') as f:
        network = parse_network(f.read(), validate=validate)
    logger.info(f"Red leída desde {path}: {len(network)} entidades, {len(network.idrs)} IDRs")
    return network


def write_network_file(network: PowerNetwork, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(emit_network(network))
        f.write('\n')
