# __init__.py para algorithms