# __init__.py para utils