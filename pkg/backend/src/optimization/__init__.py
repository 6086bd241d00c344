# Programación entera mixta: construcción del modelo, formato LP y solver propio
