"""Custom exceptions for the klystron simulator."""


class KlystronError(Exception):
    """Base class for simulator errors surfaced to the CLI."""


class ConfigError(KlystronError):
    """Raised when a scenario config violates the schema."""

    def __init__(self, message: str, key_path: str = "") -> None:
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class DomainError(KlystronError, ValueError):
    """Raised when an argument lies outside an operation's supported domain."""


class OvertakingError(KlystronError):
    """Raised when bunching reaches r_b >= 1 or arrival order inverts."""


class ValidityError(KlystronError):
    """Raised when a physics validity condition fails hard."""

    def __init__(self, condition: str, message: str) -> None:
        self.condition = condition
        super().__init__(f"{condition}: {message}")


class ConvergenceError(KlystronError):
    """Raised when an integrator or quadrature cannot meet its tolerance."""

    def __init__(
        self,
        message: str,
        *,
        partial: object = None,
        error_estimate: float | None = None,
        last_time: float | None = None,
    ) -> None:
        self.partial = partial
        self.error_estimate = error_estimate
        self.last_time = last_time
        super().__init__(message)


class DensityMatrixError(KlystronError):
    """Raised when a density matrix is invalid beyond the repair threshold."""
