"""
Cache en disco de resultados por red (reportes de contingencia, evaluaciones WCCP)
"""

import hashlib
import json
import logging
import os
from datetime import datetime, timedelta
from typing import Any, Dict, Optional

from ..config import Settings

logger = logging.getLogger(__name__)

SECTIONS = ('reports', 'evaluations', 'timelines')


class CacheManager:
    """Entradas JSON con expiración, indexadas por huella de la red y parámetros de la corrida"""

    def __init__(self, cache_dir: Optional[str] = None, expiry_hours: Optional[int] = None):
        settings = Settings.from_env()
        self.cache_dir = cache_dir or settings.cache_dir
        self.default_expiry_hours = expiry_hours or settings.cache_expiry_hours
        self.subdirs = {section: os.path.join(self.cache_dir, section) for section in SECTIONS}
        for subdir in self.subdirs.values():
            os.makedirs(subdir, exist_ok=True)

    @staticmethod
    def make_key(fingerprint: str, **params) -> str:
        """Clave estable: huella de la red más los parámetros ordenados"""
        parts = [fingerprint] + [f"{name}={params[name]}" for name in sorted(params)]
        return '|'.join(parts)

    def get(self, key: str, section: str = 'reports') -> Optional[Any]:
        """
        Obtener una entrada

        Returns:
            Datos guardados o None si no existe o expiró
        """
        path = self._path(key, section)
        if not os.path.exists(path):
            return None
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                entry = json.load(handle)
        except (OSError, ValueError) as e:
            logger.warning(f"Entrada de cache ilegible {key}: {e}")
            self._remove(path)
            return None
        if datetime.utcnow() > datetime.fromisoformat(entry['expires_at']):
            self._remove(path)
            return None
        logger.debug(f"Cache hit: {key}")
        return entry['data']

    def set(self, key: str, data: Any, section: str = 'reports', expiry_hours: Optional[int] = None) -> bool:
        expiry_hours = expiry_hours or self.default_expiry_hours
        now = datetime.utcnow()
        entry = {
            'key': key,
            'data': data,
            'created_at': now.isoformat(),
            'expires_at': (now + timedelta(hours=expiry_hours)).isoformat(),
        }
        try:
            with open(self._path(key, section), 'w', encoding='utf-8') as handle:
                json.dump(entry, handle)
        except (OSError, TypeError) as e:
            logger.error(f"Error guardando en cache {key}: {e}")
            return False
        logger.debug(f"Guardado en cache: {key}")
        return True

    def delete(self, key: str, section: str = 'reports') -> bool:
        path = self._path(key, section)
        if os.path.exists(path):
            self._remove(path)
            return True
        return False

    def clear(self, section: Optional[str] = None) -> int:
        """Borrar una sección o todo el cache; devuelve el número de archivos eliminados"""
        targets = [self.subdirs[section]] if section in self.subdirs else list(self.subdirs.values())
        removed = 0
        for directory in targets:
            for filename in os.listdir(directory):
                path = os.path.join(directory, filename)
                if os.path.isfile(path):
                    self._remove(path)
                    removed += 1
        logger.info(f"Cache limpiado: {removed} archivos eliminados")
        return removed

    def stats(self) -> Dict[str, Any]:
        by_section = {}
        for section, directory in self.subdirs.items():
            files = [os.path.join(directory, f) for f in os.listdir(directory)]
            files = [f for f in files if os.path.isfile(f)]
            by_section[section] = {
                'files': len(files),
                'size_kb': round(sum(os.path.getsize(f) for f in files) / 1024, 2),
            }
        return {
            'cache_dir': self.cache_dir,
            'total_files': sum(s['files'] for s in by_section.values()),
            'by_section': by_section,
        }

    def _path(self, key: str, section: str) -> str:
        key_hash = hashlib.md5(key.encode()).hexdigest()
        directory = self.subdirs.get(section, self.cache_dir)
        return os.path.join(directory, f"{key_hash}.json")

    @staticmethod
    def _remove(path: str) -> None:
        try:
            os.remove(path)
        except OSError:
            pass
