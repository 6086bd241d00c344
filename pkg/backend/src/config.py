"""
Configuración leída desde variables de entorno (.env)
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()


@dataclass(frozen=True)
class Settings:
    enumeration_budget: int = 10 ** 6
    time_limit: float = 60.0
    threads: int = 1
    cache_dir: str = './cache'
    cache_expiry_hours: int = 24
    log_level: str = 'INFO'
    port: int = 5000
    debug: bool = False

    @classmethod
    def from_env(cls) -> 'Settings':
        """Construir la configuración a partir del entorno actual"""
        return cls(
            enumeration_budget=int(os.getenv('MIIR_ENUMERATION_BUDGET', 10 ** 6)),
            time_limit=float(os.getenv('MIIR_TIME_LIMIT', 60)),
            threads=int(os.getenv('MIIR_THREADS', 1)),
            cache_dir=os.getenv('MIIR_CACHE_DIR', './cache'),
            cache_expiry_hours=int(os.getenv('MIIR_CACHE_EXPIRY_HOURS', 24)),
            log_level=os.getenv('LOG_LEVEL', 'INFO').upper(),
            port=int(os.getenv('FLASK_PORT', 5000)),
            debug=os.getenv('FLASK_DEBUG', 'False').lower() == 'true',
        )
