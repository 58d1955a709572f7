"""Exception types raised across the package."""


class InvalidConfigError(ValueError):
    """A configuration value is out of range; `key` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class SingularGeometryError(ValueError):
    pass


class DegenerateProjectionError(ValueError):
    """The target channel lies (numerically) in the span of the UE channels."""


class InfeasibleAllocationError(RuntimeError):
    """No power allocation meets the SINR and power constraints."""


class InsufficientSamplesError(ValueError):
    pass
