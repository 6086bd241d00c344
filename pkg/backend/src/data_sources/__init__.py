# __init__.py para data_sources