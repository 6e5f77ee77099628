# app/domains/enskog/diagnostics/entities/diagnostics.py

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial import hermite_e

_ORIGIN = (0.0, 0.0, 0.0)


class TestFunctionKind(str, Enum):
    CF_REAL = "cf_real"
    CF_IMAG = "cf_imag"
    HERMITE_POLY = "hermite_poly"
    GAUSSIAN_BUMP = "gaussian_bump"


def _hermite_sup(order: int) -> float:
    grid = np.linspace(-20.0, 20.0, 40_001)
    coefficients = np.zeros(order + 1)
    coefficients[order] = 1.0
    return float(np.max(np.abs(hermite_e.hermeval(grid, coefficients) * np.exp(-0.25 * grid * grid))))


@dataclass(frozen=True)
class TestFunction:
    """
    Bounded test function psi(x, u) with bounded derivatives, sup norm 1.

    cf_real / cf_imag:  cos / sin of (frequency . u + position_frequency . x)
    hermite_poly:       prod_k He_{m_k}(u_k) exp(-u_k^2 / 4), normalized; m = multi_index
    gaussian_bump:      exp(-|u - c_u|^2 / 2 w_u^2 - |x - c_x|^2 / 2 w_x^2); w_x = inf
                        makes the bump depend on velocity only
    """
    __test__ = False  # not a pytest class

    kind: TestFunctionKind
    frequency: Tuple[float, float, float] = _ORIGIN
    position_frequency: Tuple[float, float, float] = _ORIGIN
    multi_index: Tuple[int, int, int] = (0, 0, 0)
    velocity_center: Tuple[float, float, float] = _ORIGIN
    velocity_width: float = 1.0
    position_center: Tuple[float, float, float] = _ORIGIN
    position_width: float = math.inf

    @property
    def label(self) -> str:
        if self.kind in (TestFunctionKind.CF_REAL, TestFunctionKind.CF_IMAG):
            return f"{self.kind.value}{list(self.frequency)}{list(self.position_frequency)}"
        if self.kind is TestFunctionKind.HERMITE_POLY:
            return f"hermite{list(self.multi_index)}"
        return f"bump{list(self.velocity_center)}w{self.velocity_width:g}"

    @cached_property
    def _hermite_norm(self) -> float:
        return math.prod(_hermite_sup(m) for m in self.multi_index)

    def _phase(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return u @ np.asarray(self.frequency) + x @ np.asarray(self.position_frequency)

    def _bump_position(self, x: np.ndarray) -> np.ndarray:
        if not math.isfinite(self.position_width):
            return np.ones(x.shape[0])
        d = x - np.asarray(self.position_center)
        return np.exp(-np.sum(d * d, axis=1) / (2.0 * self.position_width ** 2))

    def value(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """psi at each row of (x, u), both (M, 3)."""
        x = np.atleast_2d(x)
        u = np.atleast_2d(u)
        if self.kind is TestFunctionKind.CF_REAL:
            return np.cos(self._phase(x, u))
        if self.kind is TestFunctionKind.CF_IMAG:
            return np.sin(self._phase(x, u))
        if self.kind is TestFunctionKind.HERMITE_POLY:
            out = np.ones(u.shape[0])
            for k, m in enumerate(self.multi_index):
                coefficients = np.zeros(m + 1)
                coefficients[m] = 1.0
                out = out * hermite_e.hermeval(u[:, k], coefficients) * np.exp(-0.25 * u[:, k] ** 2)
            return out / self._hermite_norm
        d = u - np.asarray(self.velocity_center)
        return np.exp(-np.sum(d * d, axis=1) / (2.0 * self.velocity_width ** 2)) * self._bump_position(x)

    def grad_x(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Closed-form gradient in x, shape (M, 3)."""
        x = np.atleast_2d(x)
        u = np.atleast_2d(u)
        kappa = np.asarray(self.position_frequency)
        if self.kind is TestFunctionKind.CF_REAL:
            return -np.sin(self._phase(x, u))[:, None] * kappa
        if self.kind is TestFunctionKind.CF_IMAG:
            return np.cos(self._phase(x, u))[:, None] * kappa
        if self.kind is TestFunctionKind.HERMITE_POLY or not math.isfinite(self.position_width):
            return np.zeros_like(x)
        d = x - np.asarray(self.position_center)
        return -self.value(x, u)[:, None] * d / self.position_width ** 2


class TestMethod(str, Enum):
    Z = "z"
    KS = "ks"
    CHI2 = "chi2"
    EXACT = "exact"


@dataclass(frozen=True)
class DiagnosticsReport:
    """
    One statistical check. passed <=> |statistic| <= threshold. For z checks the
    threshold is z_multiplier x standard_error; for ks / chi2 it is the critical value.
    Compound checks report their worst component and list the others in details.
    """
    name: str
    statistic: float
    standard_error: float
    threshold: float
    passed: bool
    replicates: int = 1
    method: TestMethod = TestMethod.Z
    details: Dict[str, Any] = field(default_factory=dict)
    time: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "standard_error": self.standard_error,
            "threshold": self.threshold,
            "passed": self.passed,
            "replicates": self.replicates,
            "method": self.method.value,
            "time": self.time,
            "details": self.details,
        }
