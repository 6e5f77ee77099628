# app/domains/enskog/kernels/services/kernel_service.py

import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from app.core.exceptions.exceptions import ConfigInvalid, NonIntegrable
from app.domains.enskog.collision.entities.collision import TWO_PI, CollisionAngles
from app.domains.enskog.kernels.entities.kernels import (
    AngularFamily,
    AngularMeasure,
    Mollifier,
    MollifierShape,
    SpeedFactor,
    SpeedFamily,
    ValidationReport,
)

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-10
LIPSCHITZ_GRID = np.linspace(0.0, 100.0, 10_000)
# Tail mass check: Q((TAIL_CHECK_ANGLE, pi]) must be finite for every family.
TAIL_CHECK_ANGLE = 1e-3

# --- Construction ---

def _power_mass(coefficient: float, exponent: float, lo: float) -> float:
    if lo == 0.0 and exponent >= 1.0:
        return math.inf
    if exponent == 1.0:
        return coefficient * math.log(math.pi / lo)
    q = 1.0 - exponent
    return coefficient * (math.pi ** q - lo ** q) / q


def _power_moments(coefficient: float, exponent: float, lo: float) -> Tuple[float, float, float]:
    p = exponent
    if lo == 0.0 and p >= 2.0:
        raise NonIntegrable("mtheta", AngularFamily.MAXWELLIAN_POWER.value, {"exponent": p, "theta_min": lo})
    if p == 2.0:
        mtheta = coefficient * math.log(math.pi / lo)
    else:
        mtheta = coefficient * (math.pi ** (2.0 - p) - lo ** (2.0 - p)) / (2.0 - p)

    if lo == 0.0:
        # integrable endpoint singularity: weight theta^(1-p) resp. theta^(2-p)
        sinc_half = lambda t: math.sin(0.5 * t) / t if t > 0.0 else 0.5
        sinc_half_sq = lambda t: (math.sin(0.5 * t) / t) ** 2 if t > 0.0 else 0.25
        m1, _ = integrate.quad(sinc_half, 0.0, math.pi, weight="alg", wvar=(1.0 - p, 0.0), epsabs=QUAD_EPSABS)
        if p >= 3.0:
            raise NonIntegrable("m2", AngularFamily.MAXWELLIAN_POWER.value, {"exponent": p, "theta_min": lo})
        m2, _ = integrate.quad(sinc_half_sq, 0.0, math.pi, weight="alg", wvar=(2.0 - p, 0.0), epsabs=QUAD_EPSABS)
    else:
        m1, _ = integrate.quad(lambda t: math.sin(0.5 * t) * t ** -p, lo, math.pi, epsabs=QUAD_EPSABS)
        m2, _ = integrate.quad(lambda t: math.sin(0.5 * t) ** 2 * t ** -p, lo, math.pi, epsabs=QUAD_EPSABS)
    return coefficient * m1, coefficient * m2, mtheta


def _table_moments(edges: np.ndarray, density: np.ndarray) -> Tuple[float, float, float, float]:
    a, b = edges[:-1], edges[1:]
    mass = float(np.sum(density * (b - a)))
    m1 = float(np.sum(density * 2.0 * (np.cos(0.5 * a) - np.cos(0.5 * b))))
    m2 = float(np.sum(density * 0.5 * ((b - a) - (np.sin(b) - np.sin(a)))))
    mtheta = float(np.sum(density * 0.5 * (b * b - a * a)))
    return mass, m1, m2, mtheta


def build_angular_measure(
    family: str,
    theta_min: float = 0.0,
    mass: float = 1.0,
    coefficient: float = 1.0,
    exponent: float = 1.5,
    table_edges: Optional[Sequence[float]] = None,
    table_density: Optional[Sequence[float]] = None,
) -> AngularMeasure:
    """Builds an AngularMeasure with its mass and angular moments filled in."""
    try:
        family = AngularFamily(family)
    except ValueError:
        raise ConfigInvalid(f"Unknown angular family '{family}'")
    if not (0.0 <= theta_min < math.pi):
        raise ConfigInvalid(f"theta_min must lie in [0, pi), got {theta_min}")

    if family is AngularFamily.UNIFORM:
        if mass < 0.0:
            raise ConfigInvalid(f"Angular mass must be non-negative, got {mass}")
        width = math.pi - theta_min
        d = mass / width
        return AngularMeasure(
            family=family,
            theta_min=theta_min,
            mass_theta=mass,
            m1=2.0 * d * (math.cos(0.5 * theta_min) - math.cos(0.5 * math.pi)),
            m2=0.5 * d * (width + math.sin(theta_min)),
            mtheta=0.5 * d * (math.pi ** 2 - theta_min ** 2),
        )

    if family is AngularFamily.MAXWELLIAN_POWER:
        if coefficient <= 0.0:
            raise ConfigInvalid(f"Density coefficient must be positive, got {coefficient}")
        m1, m2, mtheta = _power_moments(coefficient, exponent, theta_min)
        return AngularMeasure(
            family=family,
            theta_min=theta_min,
            mass_theta=_power_mass(coefficient, exponent, theta_min),
            m1=m1,
            m2=m2,
            mtheta=mtheta,
            coefficient=coefficient,
            exponent=exponent,
        )

    if table_edges is None or table_density is None:
        raise ConfigInvalid("custom_table requires table edges and densities")
    edges = np.asarray(table_edges, dtype=np.float64)
    density = np.asarray(table_density, dtype=np.float64)
    if edges.ndim != 1 or density.shape != (edges.size - 1,) or edges.size < 2:
        raise ConfigInvalid("custom_table needs k+1 edges for k densities")
    if np.any(np.diff(edges) <= 0.0) or edges[0] < 0.0 or edges[-1] > math.pi:
        raise ConfigInvalid("custom_table edges must increase within [0, pi]")
    if np.any(density < 0.0):
        raise ConfigInvalid("custom_table densities must be non-negative")
    mass, m1, m2, mtheta = _table_moments(edges, density)
    return AngularMeasure(
        family=family,
        theta_min=float(edges[0]),
        mass_theta=mass,
        m1=m1,
        m2=m2,
        mtheta=mtheta,
        table_edges=tuple(float(e) for e in edges),
        table_density=tuple(float(d) for d in density),
    )


def build_speed_factor(
    family: str,
    params: Sequence[float] = (),
    lipschitz_bound: Optional[float] = None,
    function: Optional[Callable[[float], float]] = None,
) -> SpeedFactor:
    try:
        family = SpeedFamily(family)
    except ValueError:
        raise ConfigInvalid(f"Unknown speed factor family '{family}'")
    params = tuple(float(p) for p in params)

    if family is SpeedFamily.CONSTANT_ONE:
        return SpeedFactor(family, (), 0.0 if lipschitz_bound is None else lipschitz_bound)
    if family is SpeedFamily.CONSTANT:
        if len(params) != 1:
            raise ConfigInvalid("constant speed factor takes exactly one parameter (its level)")
        return SpeedFactor(family, params, 0.0 if lipschitz_bound is None else lipschitz_bound)
    if family is SpeedFamily.SMOOTH_SATURATING:
        r0, s0 = params if params else (1.0, 0.5)
        if r0 <= 0.0:
            raise ConfigInvalid(f"smooth_saturating scale must be positive, got {r0}")
        bound = (1.0 - s0) / r0 if lipschitz_bound is None else lipschitz_bound
        return SpeedFactor(family, (r0, s0), bound)
    if function is None or lipschitz_bound is None:
        raise ConfigInvalid("custom speed factor needs a function and a declared Lipschitz bound")
    return SpeedFactor(family, params, lipschitz_bound, function)


def build_mollifier(support_radius: float = 0.5, shape: str = "bump") -> Mollifier:
    try:
        shape = MollifierShape(shape)
    except ValueError:
        raise ConfigInvalid(f"Unknown mollifier shape '{shape}'")
    if not support_radius > 0.0:
        raise ConfigInvalid(f"Mollifier support radius must be positive, got {support_radius}")
    return Mollifier(support_radius=float(support_radius), shape=shape)


# --- Sampling ---

def theta_quantile(q: AngularMeasure, w):
    """Inverse CDF of the normalized Q at w in (0, 1]; maps (0, 1] onto (theta_min, pi]."""
    w = np.asarray(w, dtype=np.float64)
    a = q.theta_min
    if q.family is AngularFamily.UNIFORM:
        theta = a + (math.pi - a) * w
    elif q.family is AngularFamily.MAXWELLIAN_POWER:
        p = q.exponent
        if p == 1.0:
            theta = a * (math.pi / a) ** w
        else:
            e = 1.0 - p
            lo, hi = a ** e, math.pi ** e
            theta = (lo + w * (hi - lo)) ** (1.0 / e)
    else:
        edges = np.asarray(q.table_edges)
        cum = np.concatenate([[0.0], np.cumsum(np.asarray(q.table_density) * np.diff(edges))])
        target = w * cum[-1]
        k = np.clip(np.searchsorted(cum, target, side="left") - 1, 0, edges.size - 2)
        width = cum[k + 1] - cum[k]
        frac = np.divide(target - cum[k], width, out=np.ones_like(target), where=width > 0)
        theta = edges[k] + frac * (edges[k + 1] - edges[k])
    return np.clip(theta, np.nextafter(a, math.inf), math.pi)


def theta_cdf(q: AngularMeasure, theta):
    """CDF of the normalized Q."""
    theta = np.clip(np.asarray(theta, dtype=np.float64), q.theta_min, math.pi)
    a = q.theta_min
    if q.family is AngularFamily.UNIFORM:
        return (theta - a) / (math.pi - a)
    if q.family is AngularFamily.MAXWELLIAN_POWER:
        p = q.exponent
        if p == 1.0:
            return np.log(theta / a) / math.log(math.pi / a)
        e = 1.0 - p
        return (theta ** e - a ** e) / (math.pi ** e - a ** e)
    edges = np.asarray(q.table_edges)
    cum = np.concatenate([[0.0], np.cumsum(np.asarray(q.table_density) * np.diff(edges))])
    return np.interp(theta, edges, cum) / cum[-1]


def sample_angles(q: AngularMeasure, rng: np.random.Generator) -> CollisionAngles:
    """One draw from Q/mass_theta (inverse CDF) times Uniform[0, 2 pi)."""
    w = 1.0 - rng.random()
    u = rng.random()
    phi = TWO_PI * u
    if phi >= TWO_PI:
        phi = 0.0
    return CollisionAngles(theta=float(theta_quantile(q, w)), phi=phi)


def sample_angle_arrays(q: AngularMeasure, rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray]:
    w = 1.0 - rng.random(size)
    phi = TWO_PI * rng.random(size)
    phi[phi >= TWO_PI] = 0.0
    return theta_quantile(q, w), phi


# --- Moments and constants ---

def angular_moments(q: AngularMeasure) -> Tuple[float, float, float]:
    """(m1, m2, mtheta); the constants of the growth estimates per unit of phi-measure."""
    if not all(math.isfinite(m) for m in (q.m1, q.m2, q.mtheta)):
        raise NonIntegrable("mtheta", q.family.value, {"theta_min": q.theta_min})
    return q.m1, q.m2, q.mtheta


def growth_constants(q: AngularMeasure) -> dict:
    """
    Integrals over Q(d theta) d phi:
      |alpha(z, v, xi)|   integrates to c_abs * |z - v|
      |alpha(z, v, xi)|^2 integrates to c_sq  * |z - v|^2
    """
    m1, m2, mtheta = angular_moments(q)
    return {"c_abs": TWO_PI * m1, "c_sq": TWO_PI * m2, "c_theta": TWO_PI * mtheta}


# --- Evaluation ---

def evaluate_sigma(s: SpeedFactor, r: float) -> float:
    if s.family is SpeedFamily.CONSTANT_ONE:
        return 1.0
    if s.family is SpeedFamily.CONSTANT:
        return s.params[0]
    if s.family is SpeedFamily.SMOOTH_SATURATING:
        r0, s0 = s.params
        return s0 + (1.0 - s0) * math.tanh(r / r0)
    return float(s.function(r))


def sigma_values(s: SpeedFactor, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if s.family is SpeedFamily.CONSTANT_ONE:
        return np.ones_like(r)
    if s.family is SpeedFamily.CONSTANT:
        return np.full_like(r, s.params[0])
    if s.family is SpeedFamily.SMOOTH_SATURATING:
        r0, s0 = s.params
        return s0 + (1.0 - s0) * np.tanh(r / r0)
    return np.vectorize(s.function, otypes=[np.float64])(r)


def evaluate_beta(b: Mollifier, r: float) -> float:
    if r >= b.support_radius:
        return 0.0
    rho = r / b.support_radius
    if b.shape is MollifierShape.BUMP:
        return math.exp(1.0 - 1.0 / (1.0 - rho * rho))
    return 0.5 * (1.0 + math.cos(math.pi * rho))


def beta_values(b: Mollifier, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    inside = r < b.support_radius
    rho = np.where(inside, r / b.support_radius, 0.0)
    if b.shape is MollifierShape.BUMP:
        values = np.exp(1.0 - 1.0 / (1.0 - rho * rho))
    else:
        values = 0.5 * (1.0 + np.cos(math.pi * rho))
    return np.where(inside, values, 0.0)


# --- Hypotheses ---

def validate_hypotheses(q: AngularMeasure, s: SpeedFactor, b: Mollifier) -> ValidationReport:
    """Checks A1 (angular integrability, cutoff), A2 (sigma bounded and Lipschitz) and beta."""
    report = ValidationReport()

    # A1
    report.measured.update(mass_theta=q.mass_theta, m1=q.m1, m2=q.m2, mtheta=q.mtheta)
    if not math.isfinite(q.mtheta):
        report.add("A1", f"theta-moment of Q is not finite (mtheta={q.mtheta})")
    if q.family is AngularFamily.MAXWELLIAN_POWER:
        tail = _power_mass(q.coefficient, q.exponent, max(q.theta_min, TAIL_CHECK_ANGLE))
        report.measured["tail_mass"] = tail
        if not math.isfinite(tail):
            report.add("A1", f"Q((({TAIL_CHECK_ANGLE}, pi]) is not finite")
    if not q.is_finite:
        report.add(
            "A1-cutoff",
            f"total mass of Q is infinite for theta_min={q.theta_min}; exact thinning needs a cutoff theta_min > 0",
        )
    elif q.mass_theta > 0.0:
        if q.m1 > q.mass_theta * (1.0 + 1e-9) or q.m2 > q.m1 * (1.0 + 1e-9):
            report.add("A1", f"moment ordering m2 <= m1 <= mass violated ({q.m2}, {q.m1}, {q.mass_theta})")

    # A2
    try:
        sig = sigma_values(s, LIPSCHITZ_GRID)
    except Exception as e:  # a custom sigma may fail anywhere on the grid
        report.add("A2", f"sigma could not be evaluated on the validation grid: {e}")
    else:
        slope = float(np.max(np.abs(np.diff(sig)) / np.diff(LIPSCHITZ_GRID)))
        report.measured.update(sigma_min=float(sig.min()), sigma_max=float(sig.max()), sigma_lipschitz=slope)
        if sig.min() < 0.0 or sig.max() > 1.0:
            report.add("A2", f"sigma leaves [0, 1] (range {sig.min():.6g} .. {sig.max():.6g})")
        if slope > s.lipschitz_bound * (1.0 + 1e-9) + 1e-12:
            report.add("A2", f"empirical Lipschitz constant {slope:.6g} exceeds declared bound {s.lipschitz_bound:.6g}")

    # beta
    radius = b.support_radius
    grid = np.linspace(0.0, 2.0 * radius if b.is_compact else 100.0, 10_001)
    beta = beta_values(b, grid)
    report.measured.update(beta_max=float(beta.max()), beta_at_zero=float(beta[0]))
    if beta.min() < 0.0 or beta.max() > 1.0 + 1e-15:
        report.add("beta", "beta leaves [0, 1]")
    if abs(beta[0] - 1.0) > 1e-15:
        report.add("beta", f"beta(0) must be 1, got {beta[0]}")
    if b.is_compact:
        if np.any(beta[grid >= radius] != 0.0):
            report.add("beta", "beta does not vanish outside its support radius")
    else:
        report.add("beta", "beta has unbounded support (infinite interaction range)", severity="warning")

    for violation in report.violations:
        log = logger.error if violation.severity == "error" else logger.warning
        log("%s: %s", violation.hypothesis, violation.message)
    return report
