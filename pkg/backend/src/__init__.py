# __init__.py files para los módulos Python

# Este archivo permite que Python trate las carpetas como paquetes
# Puede estar vacío o contener código de inicialización del paquete