# app/domains/enskog/kernels/entities/kernels.py

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np


class AngularFamily(str, Enum):
    UNIFORM = "uniform"
    MAXWELLIAN_POWER = "maxwellian_power"
    CUSTOM_TABLE = "custom_table"


class SpeedFamily(str, Enum):
    CONSTANT_ONE = "constant_one"
    CONSTANT = "constant"
    SMOOTH_SATURATING = "smooth_saturating"
    CUSTOM = "custom"


class MollifierShape(str, Enum):
    BUMP = "bump"
    COSINE_TAPER = "cosine_taper"


@dataclass(frozen=True)
class AngularMeasure:
    """
    Q(d theta) restricted to (theta_min, pi], paired with d phi on [0, 2 pi).

    uniform:           constant density, total mass `mass`.
    maxwellian_power:  density coefficient * theta^(-exponent), exponent 3/2 by default;
                       mass follows from theta_min and is infinite when theta_min == 0.
    custom_table:      piecewise-constant density `table_density` on the bins
                       delimited by `table_edges` (theta_min is the first edge).

    Moments m1, m2, mtheta are integrals of sin(theta/2), sin^2(theta/2), theta
    against Q (not normalized). They are filled in by kernel_service.build_angular_measure.
    """
    family: AngularFamily
    theta_min: float
    mass_theta: float
    m1: float = math.nan
    m2: float = math.nan
    mtheta: float = math.nan
    coefficient: float = 1.0
    exponent: float = 1.5
    table_edges: Optional[Tuple[float, ...]] = None
    table_density: Optional[Tuple[float, ...]] = None

    @property
    def total_rate(self) -> float:
        """Candidate collision rate Lambda = Q((theta_min, pi]) * 2 pi."""
        return self.mass_theta * 2.0 * math.pi

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.mass_theta)


@dataclass(frozen=True)
class SpeedFactor:
    """
    sigma(|u - v|), bounded by 1 and Lipschitz.

    constant_one:       sigma = 1
    constant:           sigma = params[0]
    smooth_saturating:  sigma(r) = s0 + (1 - s0) tanh(r / r0), params = (r0, s0)
    custom:             sigma = function(r) with a declared Lipschitz bound
    """
    family: SpeedFamily
    params: Tuple[float, ...] = ()
    lipschitz_bound: float = 0.0
    function: Optional[Callable[[float], float]] = field(default=None, compare=False)


@dataclass(frozen=True)
class Mollifier:
    """
    beta(|x - y|) with support [0, support_radius); max value 1 at r = 0.
    support_radius = inf gives beta == 1 (infinite interaction range).
    """
    support_radius: float = 0.5
    shape: MollifierShape = MollifierShape.BUMP

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.support_radius)


@dataclass(frozen=True)
class KernelSet:
    q: AngularMeasure
    sigma: SpeedFactor
    beta: Mollifier


@dataclass(frozen=True)
class Violation:
    hypothesis: str
    message: str
    severity: str = "error"  # "error" fails the report, "warning" does not


@dataclass
class ValidationReport:
    """Outcome of the hypothesis checks on one kernel set."""
    violations: List[Violation] = field(default_factory=list)
    measured: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(v.severity == "error" for v in self.violations)

    @property
    def errors(self) -> List[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    def add(self, hypothesis: str, message: str, severity: str = "error") -> None:
        self.violations.append(Violation(hypothesis, message, severity))

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [asdict(v) for v in self.violations],
            "measured": {k: (float(v) if isinstance(v, (float, np.floating)) else v) for k, v in self.measured.items()},
        }
