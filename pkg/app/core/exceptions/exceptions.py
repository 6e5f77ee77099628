# core/exceptions.py
from enum import IntEnum
from typing import Optional, Any, Dict, List


class ExitCode(IntEnum):
    OK = 0
    VALIDATION = 1
    USAGE = 2
    RUNTIME = 3


class AppException(Exception):
    """Base exception class for the application"""

    def __init__(
        self,
        message: str,
        exit_code: int = ExitCode.RUNTIME,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code
        self.details = details or {}
        super().__init__(message)


class ValidationException(AppException):
    """Raised when configuration or kernel validation fails"""

    def __init__(
        self,
        message: str,
        errors: Optional[List[Dict[str, Any]]] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(
            message=message,
            exit_code=ExitCode.VALIDATION,
            error_code="validation_error",
            details={
                **(details or {}),
                "errors": errors or []
            }
        )


class ConfigInvalid(ValidationException):
    """Raised when a simulation configuration is inconsistent"""


class DegenerateRelativeVelocity(AppException):
    """Raised when a collision frame is requested for (numerically) equal velocities"""

    def __init__(self, relative_speed: float):
        super().__init__(
            message=f"Relative velocity too small to build a deflection frame (|u-v|={relative_speed!r})",
            exit_code=ExitCode.RUNTIME,
            error_code="degenerate_relative_velocity",
            details={"relative_speed": relative_speed}
        )


class NonIntegrable(AppException):
    """Raised when an angular moment diverges"""

    def __init__(self, moment: str, family: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=f"Angular moment {moment} diverges for family {family}",
            exit_code=ExitCode.VALIDATION,
            error_code="non_integrable",
            details={**(details or {}), "moment": moment, "family": family}
        )


class TimeOutOfRange(AppException):
    """Raised when an ensemble is evaluated outside its time domain"""

    def __init__(self, time: float, horizon: float, kind: str):
        super().__init__(
            message=f"Time {time} outside the domain of a {kind} ensemble (horizon {horizon})",
            exit_code=ExitCode.RUNTIME,
            error_code="time_out_of_range",
            details={"time": time, "horizon": horizon, "kind": kind}
        )


class EmptyRequest(AppException):
    """Raised when an operation is asked to produce nothing"""

    def __init__(self, operation: str):
        super().__init__(
            message=f"{operation} requested with an empty size",
            exit_code=ExitCode.USAGE,
            error_code="empty_request",
            details={"operation": operation}
        )


class FrozenLawMissing(AppException):
    """Raised when frozen mode is run without a frozen law"""

    def __init__(self):
        super().__init__(
            message="mode=frozen requires a frozen_paths ensemble",
            exit_code=ExitCode.VALIDATION,
            error_code="frozen_law_missing",
        )


class RateOverflow(AppException):
    """Raised when the expected number of candidate events exceeds the event budget"""

    def __init__(self, expected_events: float, budget: float):
        super().__init__(
            message=f"Expected {expected_events:.3g} candidate events exceeds the budget {budget:.3g}",
            exit_code=ExitCode.RUNTIME,
            error_code="rate_overflow",
            details={"expected_events": expected_events, "budget": budget}
        )


class ToleranceBelowNoiseFloor(AppException):
    """Raised when a Picard tolerance cannot be distinguished from Monte Carlo noise"""

    def __init__(self, tol: float, noise_floor: float, multiplier: float):
        super().__init__(
            message=(
                f"Tolerance {tol:.4g} is not above {multiplier:g} x noise floor {noise_floor:.4g}; "
                "increase the tolerance or the number of paths per iterate"
            ),
            exit_code=ExitCode.USAGE,
            error_code="tolerance_below_noise_floor",
            details={"tol": tol, "noise_floor": noise_floor, "multiplier": multiplier}
        )


class RepositoryException(AppException):
    """Raised when a repository operation fails"""

    def __init__(
        self,
        operation: str,
        entity_name: str,
        details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(
            message=f"Failed to {operation} {entity_name}",
            exit_code=ExitCode.RUNTIME,
            error_code="repository_error",
            details={
                **(details or {}),
                "operation": operation,
                "entity": entity_name
            }
        )
