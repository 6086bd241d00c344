#!/usr/bin/env python3
"""
Script de configuración e instalación para MIIR
"""

import os
import subprocess
import sys
from pathlib import Path

ENV_TEMPLATE = """# Configuración de MIIR
MIIR_ENUMERATION_BUDGET=1000000
MIIR_TIME_LIMIT=60
MIIR_THREADS=1
MIIR_CACHE_DIR=./cache
MIIR_CACHE_EXPIRY_HOURS=24
LOG_LEVEL=INFO
FLASK_PORT=5000
FLASK_DEBUG=False
"""


def print_header():
    print("⚡" * 50)
    print("    MIIR - SETUP & INSTALLATION")
    print("⚡" * 50)
    print()


def check_python_version():
    """Verificar que Python sea 3.9 o superior"""
    if sys.version_info < (3, 9):
        print("❌ Error: Se requiere Python 3.9 o superior")
        print(f"   Versión actual: {sys.version}")
        sys.exit(1)
    print(f"✅ Python {sys.version.split()[0]} detectado")


def create_virtual_environment():
    """Crear entorno virtual si no existe"""
    if Path("venv").exists():
        print("✅ Entorno virtual ya existe")
        return

    print("📦 Creando entorno virtual...")
    try:
        subprocess.run([sys.executable, "-m", "venv", "venv"], check=True)
        print("✅ Entorno virtual creado exitosamente")
    except subprocess.CalledProcessError:
        print("❌ Error creando entorno virtual")
        sys.exit(1)


def get_venv_command(tool: str) -> str:
    """Ruta de pip o python dentro del entorno virtual según el sistema"""
    if os.name == 'nt':  # Windows
        return os.path.join("venv", "Scripts", f"{tool}.exe")
    return os.path.join("venv", "bin", tool)


def install_dependencies():
    """Instalar dependencias de Python"""
    print("📋 Instalando dependencias...")
    pip_cmd = get_venv_command("pip")

    requirements_file = None
    for option in ("requirements.txt", "backend/requirements.txt"):
        if os.path.exists(option):
            requirements_file = option
            break
    if not requirements_file:
        print("❌ No se encontró ningún archivo de requirements")
        sys.exit(1)

    print(f"📦 Usando: {requirements_file}")
    try:
        subprocess.run([pip_cmd, "install", "--upgrade", "pip"], check=True)
        subprocess.run([pip_cmd, "install", "-r", requirements_file], check=True)
        print("✅ Dependencias instaladas exitosamente")
    except subprocess.CalledProcessError as e:
        print(f"❌ Error instalando dependencias: {e}")
        print("\n💡 Con Python 3.12 use requirements-python312.txt")
        sys.exit(1)


def setup_environment_file():
    """Crear .env con los valores por defecto si no existe"""
    if os.path.exists(".env"):
        print("✅ Archivo .env ya existe")
        return
    with open(".env", "w", encoding="utf-8") as handle:
        handle.write(ENV_TEMPLATE)
    print("✅ Archivo .env creado con la configuración por defecto")


def create_directories():
    """Crear el directorio de cache"""
    for section in ("reports", "evaluations", "timelines"):
        Path("cache", section).mkdir(parents=True, exist_ok=True)
    print("✅ Directorios de cache creados")


def verify_installation() -> bool:
    """Verificar archivos y dependencias"""
    print("\n🔍 Verificando instalación...")
    required_files = [
        "backend/app.py",
        "backend/cli.py",
        "backend/data/small_network.json",
        "backend/data/southwest_network.json",
        "backend/data/case9.m",
    ]
    missing_files = [path for path in required_files if not os.path.exists(path)]
    if missing_files:
        print("❌ Archivos faltantes:")
        for path in missing_files:
            print(f"   - {path}")
        return False

    python_cmd = get_venv_command("python")
    for import_statement in ("import flask", "import numpy", "import scipy.optimize", "import networkx",
                             "import click"):
        try:
            subprocess.run([python_cmd, "-c", import_statement], check=True, capture_output=True)
        except subprocess.CalledProcessError:
            print(f"❌ Error importando: {import_statement}")
            return False

    print("✅ Verificación completada exitosamente")
    return True


def print_usage_instructions():
    """Mostrar instrucciones de uso"""
    print("\n" + "=" * 60)
    print("🎉 ¡INSTALACIÓN COMPLETADA!")
    print("=" * 60)
    print()
    activate = "venv\\Scripts\\activate" if os.name == 'nt' else "source venv/bin/activate"
    print("1. Activar entorno virtual:")
    print(f"   {activate}")
    print()
    print("2. Simular una cascada desde la línea de comandos:")
    print("   python backend/cli.py cascade backend/data/southwest_network.json --initial T11")
    print()
    print("3. Levantar la API REST:")
    print("   python run_server.py   (http://localhost:5000/api/health)")
    print()
    print("4. Ejecutar las pruebas:")
    print("   pytest -m 'not slow'")
    print()


def main():
    """Función principal de setup"""
    print_header()
    check_python_version()
    create_virtual_environment()
    install_dependencies()
    setup_environment_file()
    create_directories()
    if verify_installation():
        print_usage_instructions()
    else:
        print("❌ La instalación no se completó correctamente")
        sys.exit(1)


if __name__ == "__main__":
    main()
