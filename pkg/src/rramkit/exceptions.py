"""Exception hierarchy shared by every rramkit module."""


class RramError(Exception):
    """Base class for toolchain errors."""


class InvalidInputError(RramError, ValueError):
    """An argument violates a documented precondition."""


class VariationInfeasibleError(RramError):
    """Device variation sampling kept producing invalid parameter sets."""


class LevelRangeError(RramError, IndexError):
    pass


class DimensionError(RramError, ValueError):
    pass


class NetlistError(RramError):
    """Raised for malformed BLIF input; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CycleError(NetlistError):
    def __init__(self, loop):
        self.loop = list(loop)
        super().__init__("combinational cycle: " + " -> ".join(self.loop))


class UnsupportedWidthError(RramError):
    pass


class PlacementError(RramError):
    def __init__(self, required, available):
        self.required = required
        self.available = available
        super().__init__(
            f"schedule needs {required} cells but the crossbar has {available}"
        )


class StateCorruptionError(RramError):
    """A multi-level cell decoded to a level outside the automaton's map."""


class CalibrationError(RramError):
    pass


class KeystreamError(RramError):
    pass


class ConfigError(RramError, ValueError):
    def __init__(self, field, problem):
        self.field = field
        super().__init__(f"config field {field!r}: {problem}")
