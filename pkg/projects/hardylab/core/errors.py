"""
Error hierarchy and standardized error reports for hardylab.

Every numerical module raises a subclass of HardylabError. The CLI turns any
of them into the report produced by create_error_report and maps the error
to a process exit code.
"""

import uuid
import logging
from datetime import datetime
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CONTRACT = 2


class HardylabError(Exception):
    """Base class for all domain errors"""

    code = "hardylab_error"
    exit_code = EXIT_CONTRACT

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        if not self.details:
            return self.message
        rendered = ", ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.message} ({rendered})"


# ============================================================================
# CONFIGURATION AND GRID ERRORS
# ============================================================================

class ConfigInvalid(HardylabError):
    """Experiment configuration failed validation"""
    code = "config_invalid"
    exit_code = EXIT_CONFIG


class GridConfigError(HardylabError):
    """Grid parameters violate the discretization invariants"""
    code = "grid_config"
    exit_code = EXIT_CONFIG


class EmptyCube(HardylabError):
    """A cube contains no cell midpoint; the grid must be refined"""
    code = "empty_cube"


class GridMismatch(HardylabError):
    """Two grid functions live on different grids"""
    code = "grid_mismatch"


class NonFiniteSamples(HardylabError):
    """A grid function carries NaN or infinite samples"""
    code = "non_finite_samples"


# ============================================================================
# EXPONENT AND WEIGHT ERRORS
# ============================================================================

class NotInP(HardylabError):
    """Exponent is not bounded below by 1 where required"""
    code = "not_in_p"


class InvalidWeight(HardylabError):
    """Weight sample is not symmetric positive definite"""
    code = "invalid_weight"


class SingularSample(HardylabError):
    """Weight sample cannot be inverted reliably"""
    code = "singular_sample"


class DegenerateNorm(HardylabError):
    """Norm to be fitted vanishes or is not finite in some direction"""
    code = "degenerate_norm"


class NotAbsorbing(HardylabError):
    """Convex-body function has a zero support value on a probe direction"""
    code = "not_absorbing"


class NoAlphaFound(HardylabError):
    """No convexification exponent on the ladder satisfies the budget"""
    code = "no_alpha_found"


# ============================================================================
# DECOMPOSITION AND OPERATOR ERRORS
# ============================================================================

class IllConditioned(HardylabError):
    """Gram matrix of a polynomial basis is too ill-conditioned"""
    code = "ill_conditioned"


class NotOpen(HardylabError):
    """Mask is not a union of whole grid cells"""
    code = "not_open"


class ResolutionExhausted(HardylabError):
    """A stopping cube below grid resolution would be required"""
    code = "resolution_exhausted"


class InsufficientFarField(HardylabError):
    """Too few far-field radii for a decay fit"""
    code = "insufficient_far_field"


class ContractViolation(HardylabError):
    """A checked numerical contract failed"""
    code = "contract_violation"


def create_error_report(
    error: Exception,
    command: Optional[str] = None,
    run_id: Optional[str] = None
) -> Dict[str, Any]:
    """Create a standardized error report"""
    if run_id is None:
        run_id = str(uuid.uuid4())

    if isinstance(error, HardylabError):
        code = error.code
        exit_code = error.exit_code
        message = error.message
        details = dict(error.details)
    else:
        code = "internal_error"
        exit_code = EXIT_CONTRACT
        message = str(error)
        details = {"type": type(error).__name__}

    report = {
        "success": False,
        "error": message,
        "code": code,
        "exit_code": exit_code,
        "timestamp": datetime.now().isoformat(),
        "run_id": run_id
    }

    if command:
        report["command"] = command
    if details:
        report["details"] = {k: _jsonable(v) for k, v in details.items()}

    return report


def _jsonable(value: Any) -> Any:
    """Coerce numpy scalars and tuples into JSON-friendly values"""
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
