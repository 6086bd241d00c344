"""
Excepciones del sistema MIIR
"""

from typing import Optional


class MiirError(Exception):
    """Error base de la librería; la CLI lo traduce a código de salida 2"""


class CaseParseError(MiirError):
    """Error de sintaxis o de referencia en un archivo de caso MATPOWER"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ''
        if line is not None:
            location = f" (línea {line}" + (f", columna {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class SnapshotError(MiirError):
    """Snapshot inválido o que referencia entidades inexistentes"""


class NetworkValidationError(MiirError):
    """Red que viola algún invariante del modelo"""

    def __init__(self, message: str, entity_id: Optional[str] = None):
        self.entity_id = entity_id
        super().__init__(message)


class ConservationError(NetworkValidationError):
    """Balance de potencia violado en un bus al construir la red"""


class BudgetExceededError(MiirError):
    """La enumeración excede el presupuesto configurado"""


class SolverError(MiirError):
    """Fallo numérico del simplex o del branch-and-bound"""


class SolutionParseError(MiirError):
    """Archivo de solución mal formado o con variables desconocidas"""


class ConfigurationError(MiirError):
    """Combinación de opciones inválida"""
