"""Exception types shared across the package."""


class DataError(Exception):
    """Bad or unreadable input data (maps to CLI exit code 2)."""


class ConfigSyntaxError(DataError):
    def __init__(self, msg, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"config syntax error{where}: {msg}")
        self.line = line
        self.column = column


class SchemaError(DataError):
    def __init__(self, path, reason):
        super().__init__(f"schema violation at {path or '<root>'}: {reason}")
        self.path = path
        self.reason = reason
