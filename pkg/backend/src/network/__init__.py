# Modelo MIIR de la red eléctrica y su construcción
