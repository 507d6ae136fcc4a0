"""Exception taxonomy shared across the package.

Each class carries a machine-parsable `reason` token; the CLI prints the
token on stderr and maps the class to its exit code (config 1, data 2,
numeric divergence 3, anything else 4).
"""


class TrajfieldError(Exception):
    exit_code = 4

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(reason if not detail else f"{reason} ({detail})")


class ConfigError(TrajfieldError):
    """Bad or missing configuration (exit code 1)."""

    exit_code = 1


class StructureError(ConfigError):
    """Shape or layout mismatch between paired structures."""


class DataError(TrajfieldError):
    """Malformed dataset or record (exit code 2)."""

    exit_code = 2


class DivergenceError(TrajfieldError):
    """Non-finite loss, parameter, or command signal (exit code 3).

    Simulation aborts attach the partial trace so callers can inspect what
    happened up to the bad step.
    """

    exit_code = 3

    def __init__(self, reason: str, detail: str = "", trace=None):
        super().__init__(reason, detail)
        self.trace = trace
