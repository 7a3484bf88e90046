"""
Error types for the HHG simulator.

Every error carries the tag of the module that raised it so the CLI can
report module-tagged messages and exit with a nonzero status.
"""


class BlochHHGError(Exception):
    """Base error; ``module`` names the pipeline stage that failed."""

    module = "bloch_hhg"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"[{self.module}] {self.message}"


class UnitError(BlochHHGError):
    module = "units"


class ConfigError(BlochHHGError):
    module = "config"


class PotentialError(BlochHHGError):
    module = "potential"


class CalibrationError(PotentialError):
    pass


class BandSolverError(BlochHHGError):
    module = "bloch"


class PropagationError(BlochHHGError):
    module = "propagate"


class GaugeError(BlochHHGError):
    module = "gauge"


class ObservableError(BlochHHGError):
    module = "observables"
