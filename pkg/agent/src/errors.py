"""Exception hierarchy shared by the engine, the tools and the CLI.

Every failure a caller can act on carries a stable `code` (written to
`error.json`) and an `exit_status` (returned by the CLI).
"""

from typing import Any, Dict, Optional


class AdequacyError(RuntimeError):
    code: str = "internal"
    exit_status: int = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.details: Dict[str, Any] = dict(details or {})


class ConfigurationError(AdequacyError, ValueError):
    """Invalid scenario, grid, resource or file input."""

    code = "configuration"
    exit_status = 2


class InfeasibleError(AdequacyError):
    """The offered resources cannot meet the reliability standard."""

    code = "infeasible"
    exit_status = 3


class NonConvergenceError(AdequacyError):
    """The fixed-point auction kept cycling after damping."""

    code = "non_convergence"
    exit_status = 4


class FlatRiskError(AdequacyError):
    """Risk does not move over the search bracket, so EFC is undefined."""

    code = "flat_risk"
    exit_status = 5


class ZeroDerivativeError(AdequacyError):
    """LOLE(R \\ S_e) is zero; the marginal EFC ratio has no denominator."""

    code = "zero_derivative"
    exit_status = 6


class UnreachableTargetError(AdequacyError):
    """A calibration target lies outside the search bracket."""

    code = "unreachable_target"
    exit_status = 7


class StorageFamilyError(AdequacyError):
    """The LOLE pivot of the economic criterion was asked to handle storage."""

    code = "storage_family"
    exit_status = 8


def error_payload(exc: BaseException) -> Dict[str, Any]:
    """Render any exception as the machine-readable error document."""
    if isinstance(exc, AdequacyError):
        return {
            "status": "error",
            "code": exc.code,
            "message": str(exc),
            "details": exc.details,
            "exit_status": exc.exit_status,
        }
    return {
        "status": "error",
        "code": AdequacyError.code,
        "message": f"{type(exc).__name__}: {exc}",
        "details": {},
        "exit_status": AdequacyError.exit_status,
    }


def exit_status_for(exc: BaseException) -> int:
    if isinstance(exc, AdequacyError):
        return exc.exit_status
    return AdequacyError.exit_status


__all__ = [
    "AdequacyError",
    "ConfigurationError",
    "InfeasibleError",
    "NonConvergenceError",
    "FlatRiskError",
    "ZeroDerivativeError",
    "UnreachableTargetError",
    "StorageFamilyError",
    "error_payload",
    "exit_status_for",
]
