"""Exception types shared across the library and mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad value, or inconsistent parameters."""


class DataError(ValueError):
    """Dataset I/O or parse failure."""


class GuardRefusal(RuntimeError):
    """An exact enumeration was requested on an instance above the size guard."""


class InvariantViolation(RuntimeError):
    """A runtime audit found a state that should be impossible."""
