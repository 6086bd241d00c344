"""
Emisión del modelo en formato LP y lectura de archivos de solución
"""

import logging
import re
from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import SolutionParseError
from .mip_model import LpSolution, MipModel, Relation, SolutionStatus, VarKind

logger = logging.getLogger(__name__)

TERMS_PER_LINE = 6

_OBJECTIVE_LINE = re.compile(r"^#?\s*obj(?:ective)?(?:\s+value)?\s*[:=]?\s*(\S+)\s*$", re.IGNORECASE)
_STATUS_LINE = re.compile(r"^#?\s*status\s*[:=]?\s*(\S+)\s*$", re.IGNORECASE)


def format_number(value: float) -> str:
    """12 cifras significativas, sin -0"""
    text = f"{value:.12g}"
    return '0' if text == '-0' else text


def _expression(model: MipModel, terms: Iterable[Tuple[int, float]]) -> List[str]:
    pieces = []
    for index, coef in sorted(terms):
        sign = '-' if coef < 0 else '+'
        pieces.append(f"{sign} {format_number(abs(coef))} {model.variables[index].name}")
    lines = []
    for start in range(0, len(pieces), TERMS_PER_LINE):
        lines.append(' '.join(pieces[start:start + TERMS_PER_LINE]))
    return lines


def emit_lp(model: MipModel) -> str:
    """
    Escribir el modelo en formato LP (Maximize / Subject To / Bounds / Binaries / End)

    El orden es el de declaración: entidades por id natural y pasos ascendentes.
    Dos modelos idénticos producen textos idénticos byte a byte.
    """
    out = ['\\ KCoL: maximizar entidades caídas en el último paso', 'Maximize']
    objective = _expression(model, ((i, c) for i, c in model.objective.items() if c != 0))
    if objective:
        out.append(f" obj: {objective[0]}")
        out.extend(f"   {line}" for line in objective[1:])
    else:
        out.append(' obj:')

    out.append('Subject To')
    skipped = 0
    for constraint in model.constraints:
        if not constraint.terms:
            skipped += 1
            continue
        body = _expression(model, constraint.terms)
        relation = constraint.relation.value
        if len(body) == 1:
            out.append(f" {constraint.name}: {body[0]} {relation} {format_number(constraint.rhs)}")
        else:
            out.append(f" {constraint.name}: {body[0]}")
            out.extend(f"   {line}" for line in body[1:-1])
            out.append(f"   {body[-1]} {relation} {format_number(constraint.rhs)}")
    if skipped:
        logger.debug(f"{skipped} restricciones sin términos omitidas en el archivo LP")

    out.append('Bounds')
    for variable in model.variables:
        if variable.lower == variable.upper:
            out.append(f" {variable.name} = {format_number(variable.lower)}")
        else:
            out.append(f" {format_number(variable.lower)} <= {variable.name} <= {format_number(variable.upper)}")

    out.append('Binaries')
    out.extend(f" {v.name}" for v in model.variables if v.kind is VarKind.BINARY)
    out.append('End')
    return '\n'.join(out) + '\n'


def write_lp_file(model: MipModel, path: str) -> None:
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(emit_lp(model))
    logger.info(f"Modelo LP escrito en {path}")


def format_solution(model: MipModel, solution: LpSolution) -> str:
    """Archivo de solución: línea de objetivo, estado y pares `nombre valor` en orden de declaración"""
    lines = [f"# Objective value = {format_number(solution.objective_value)}",
             f"# Status = {solution.status.value}"]
    for variable in model.variables:
        if variable.name in solution.assignment:
            lines.append(f"{variable.name} {format_number(solution.assignment[variable.name])}")
    return '\n'.join(lines) + '\n'


def parse_solution(text: str, model: MipModel) -> LpSolution:
    """
    Leer un archivo de solución

    Args:
        text: Línea de objetivo seguida de líneas `nombre valor`
        model: Modelo contra el que se validan los nombres

    Returns:
        LpSolution con todas las variables del modelo (las ausentes valen 0)

    Raises:
        SolutionParseError: Nombre desconocido, valor no numérico u objetivo ausente
    """
    objective: Optional[float] = None
    status = SolutionStatus.FEASIBLE
    assignment: Dict[str, float] = {v.name: 0.0 for v in model.variables}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        match = _OBJECTIVE_LINE.match(line)
        if match and objective is None:
            try:
                objective = float(match.group(1))
            except ValueError:
                raise SolutionParseError(f"Objetivo no numérico en la línea {number}: {match.group(1)}")
            continue
        match = _STATUS_LINE.match(line)
        if match:
            try:
                status = SolutionStatus.parse(match.group(1))
            except ValueError as e:
                raise SolutionParseError(f"{e} (línea {number})")
            continue
        if line.startswith('#'):
            continue

        tokens = line.split()
        if len(tokens) != 2:
            raise SolutionParseError(f"Se esperaba `nombre valor` en la línea {number}: {line}")
        name, value = tokens
        if name not in model.name_map:
            raise SolutionParseError(f"Variable desconocida en la línea {number}: {name}")
        try:
            assignment[name] = float(value)
        except ValueError:
            raise SolutionParseError(f"Valor no numérico para {name} en la línea {number}: {value}")

    if objective is None:
        raise SolutionParseError("El archivo de solución no contiene la línea de objetivo")
    return LpSolution(assignment=assignment, objective_value=objective, status=status)
