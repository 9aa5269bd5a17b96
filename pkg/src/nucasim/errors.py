"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A config value or precondition violates the model's invariants."""


class SimulationFault(RuntimeError):
    """A workload did something illegal at run time (bad access, double
    free, fork without children)."""


class VerificationError(AssertionError):
    """Workload output does not match its reference result."""


class UsageError(ValueError):
    """Bad command-line usage (unknown case id, bad sweep axis, ...)."""
