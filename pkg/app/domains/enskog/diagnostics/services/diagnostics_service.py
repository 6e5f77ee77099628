# app/domains/enskog/diagnostics/services/diagnostics_service.py
"""
Statistical checks of the process identities.

Every check reduces to components (statistic, standard error, threshold). A report
passes when every component does; it carries the component closest to failing.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.config import settings
from app.core.exceptions.exceptions import ConfigInvalid, EmptyRequest, TimeOutOfRange
from app.core.utils.random_streams import RandomStream, StreamPurpose, substream
from app.domains.enskog.collision.services import collision_service
from app.domains.enskog.diagnostics.entities.diagnostics import (
    DiagnosticsReport,
    TestFunction,
    TestFunctionKind,
    TestMethod,
)
from app.domains.enskog.kernels.entities.kernels import AngularMeasure, KernelSet, SpeedFactor
from app.domains.enskog.kernels.services import kernel_service
from app.domains.enskog.measures.entities.measures import Ensemble, EnsembleKind
from app.domains.enskog.measures.services.measure_service import (
    frequency_grid,
    law_distance,
    marginal_arrays,
    second_moment,
    split_half,
)
from app.domains.enskog.simulator.entities.simulation import PartnerUpdate, SimConfig, SimulationResult
from app.domains.enskog.simulator.services.simulator_service import replicate_seeds, simulate

logger = logging.getLogger(__name__)

MIN_TANAKA_SAMPLES = 10_000


# --- Conventions ---

def z_multiplier(family_size: int = 1) -> float:
    """
    The configured z multiplier, Bonferroni-adjusted so that a family of checks has
    the same overall level as one check at that multiplier.
    """
    base = settings.Z_MULTIPLIER
    if not settings.FAMILY_WISE or family_size <= 1:
        return base
    level = 2.0 * stats.norm.sf(base) / family_size
    return float(stats.norm.isf(level / 2.0))


def ks_level(family_size: int = 1) -> float:
    if not settings.FAMILY_WISE or family_size <= 1:
        return settings.KS_ALPHA
    return settings.KS_ALPHA / family_size


@dataclass(frozen=True)
class _Component:
    label: str
    statistic: float
    standard_error: float
    threshold: float
    method: TestMethod = TestMethod.Z
    time: Optional[float] = None

    @property
    def passed(self) -> bool:
        return abs(self.statistic) <= self.threshold

    @property
    def ratio(self) -> float:
        if self.threshold > 0:
            return abs(self.statistic) / self.threshold
        return 0.0 if self.statistic == 0 else math.inf

    def as_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "statistic": self.statistic,
            "standard_error": self.standard_error,
            "threshold": self.threshold,
            "method": self.method.value,
            "time": self.time,
            "passed": self.passed,
        }


def _z_component(label: str, deviation: float, se: float, z: float, time: Optional[float] = None) -> _Component:
    return _Component(label, float(deviation), float(se), float(z * se), TestMethod.Z, time)


def _mean_and_se(values: np.ndarray):
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    return np.mean(values, axis=0), np.std(values, axis=0, ddof=1) / math.sqrt(n)


def _report(
    name: str,
    components: Sequence[_Component],
    replicates: int = 1,
    details: Optional[Dict[str, Any]] = None,
) -> DiagnosticsReport:
    worst = max(components, key=lambda c: c.ratio)
    passed = all(c.passed for c in components)
    report = DiagnosticsReport(
        name=name,
        statistic=worst.statistic,
        standard_error=worst.standard_error,
        threshold=worst.threshold,
        passed=passed,
        replicates=replicates,
        method=worst.method,
        details={
            **(details or {}),
            "worst": worst.label,
            "components": [c.as_dict() for c in components],
        },
        time=worst.time,
    )
    log = logger.info if passed else logger.warning
    log("%s: %s (worst %s: %.4g vs %.4g)", name, "pass" if passed else "FAIL", worst.label, worst.statistic, worst.threshold)
    return report


# --- Collision symmetry ---

def tanaka_symmetry_check(
    s: SpeedFactor,
    q: AngularMeasure,
    samples: int,
    stream: RandomStream,
    lambdas: Optional[np.ndarray] = None,
) -> DiagnosticsReport:
    """
    Paired estimates A = mean[exp(i lambda.z) sigma] and B = mean[exp(i lambda.z*) sigma]
    from the same draws (z, v) ~ MVN(0, I) x MVN(0, I), xi ~ normalized Q x Uniform.
    """
    if samples < MIN_TANAKA_SAMPLES:
        raise ConfigInvalid(
            "Too few samples for the collision symmetry check",
            errors=[{"field": "samples", "message": f"need >= {MIN_TANAKA_SAMPLES}, got {samples}"}],
        )
    lambdas = frequency_grid(settings.DICTIONARY_SIZE) if lambdas is None else np.atleast_2d(lambdas)
    rng = stream.generator
    z = rng.standard_normal((samples, 3))
    v = rng.standard_normal((samples, 3))
    theta, phi = kernel_service.sample_angle_arrays(q, rng, samples)
    z_star = collision_service.collide_batch(z, v, theta, phi).u_star
    weight = kernel_service.sigma_values(s, collision_service.relative_speed(z, v))

    phase = z @ lambdas.T
    phase_star = z_star @ lambdas.T
    diff_re = weight[:, None] * (np.cos(phase) - np.cos(phase_star))
    diff_im = weight[:, None] * (np.sin(phase) - np.sin(phase_star))

    zm = z_multiplier(2 * len(lambdas))
    components = []
    for part, diff in (("re", diff_re), ("im", diff_im)):
        mean, se = _mean_and_se(diff)
        for k, lam in enumerate(lambdas):
            components.append(_z_component(f"{part}{lam.tolist()}", mean[k], se[k], zm))

    a_re = np.mean(weight[:, None] * np.cos(phase), axis=0)
    return _report(
        "tanaka_symmetry",
        components,
        replicates=samples,
        details={
            "z_multiplier": zm,
            "max_abs_difference": float(max(abs(c.statistic) for c in components)),
            "a_real": a_re.tolist(),
        },
    )


# --- Maxwellian invariance ---

def _checkpoint_times(e: Ensemble, times: Optional[Sequence[float]]) -> List[float]:
    if times is not None:
        return list(times)
    if e.kind is EnsembleKind.FROZEN_PATHS:
        return [0.0, 0.5 * e.time_horizon, e.time_horizon]
    return [e.time_horizon]


def _maxwellian_components(z: np.ndarray, t: float, lambdas: np.ndarray, zm: float, ks_alpha: float) -> List[_Component]:
    m = z.shape[0]
    components = []

    mean, se = _mean_and_se(z)
    for k in range(3):
        components.append(_z_component(f"mean[{k}]", mean[k], se[k], zm, t))

    for k in range(3):
        for l in range(k, 3):
            c, c_se = _mean_and_se(z[:, k] * z[:, l])
            target = 1.0 if k == l else 0.0
            components.append(_z_component(f"cov[{k}{l}]", c - target, c_se, zm, t))

    m2, m2_se = second_moment(z)
    components.append(_z_component("E|Z|^2", m2 - 3.0, m2_se, zm, t))

    phase = z @ lambdas.T
    target = np.exp(-0.5 * np.sum(lambdas * lambdas, axis=1))
    re, re_se = _mean_and_se(np.cos(phase))
    im, im_se = _mean_and_se(np.sin(phase))
    for k, lam in enumerate(lambdas):
        components.append(_z_component(f"cf_re{lam.tolist()}", re[k] - target[k], re_se[k], zm, t))
        components.append(_z_component(f"cf_im{lam.tolist()}", im[k], im_se[k], zm, t))

    critical = float(stats.kstwo.isf(ks_alpha, m))
    for k in range(3):
        d = stats.kstest(z[:, k], "norm").statistic
        components.append(_Component(f"ks[{k}]", float(d), math.sqrt(1.0 / m), critical, TestMethod.KS, t))
    return components


def maxwellian_invariance_check(
    ensemble: Ensemble,
    times: Optional[Sequence[float]] = None,
    lambdas: Optional[np.ndarray] = None,
) -> DiagnosticsReport:
    """
    Velocity marginal against MVN(0, I) at each checkpoint: component means,
    covariance entries, E|Z|^2 = 3, characteristic function exp(-|lambda|^2/2)
    and per-component KS.
    """
    times = _checkpoint_times(ensemble, times)
    lambdas = frequency_grid(settings.DICTIONARY_SIZE) if lambdas is None else np.atleast_2d(lambdas)
    z_family = len(times) * (3 + 6 + 1 + 2 * len(lambdas))
    zm = z_multiplier(z_family)
    ks_alpha = ks_level(3 * len(times))

    components: List[_Component] = []
    for t in times:
        _, z = marginal_arrays(ensemble, t)
        components.extend(_maxwellian_components(z, t, lambdas, zm, ks_alpha))
    return _report(
        "maxwellian_invariance",
        components,
        replicates=len(ensemble),
        details={"times": times, "z_multiplier": zm, "ks_alpha": ks_alpha},
    )


# --- Weak form ---

def _fd_derivative(paths: Ensemble, psi: TestFunction, t: float, dt: float) -> np.ndarray:
    """Per-member central difference [psi(t + dt) - psi(t - dt)] / 2 dt."""
    ahead = psi.value(*marginal_arrays(paths, t + dt))
    behind = psi.value(*marginal_arrays(paths, t - dt))
    return (ahead - behind) / (2.0 * dt)


def _generator_samples(
    paths: Ensemble,
    psi: TestFunction,
    t: float,
    kernels: KernelSet,
    pair_samples: int,
    rng: np.random.Generator,
    partner_law: Optional[Ensemble],
) -> np.ndarray:
    """Lambda sigma beta [psi(x, u*) - psi(x, u)] over random (particle, partner, xi) triples."""
    x, u = marginal_arrays(paths, t)
    m = x.shape[0]
    i = rng.integers(0, m, size=pair_samples)
    if partner_law is None:
        j = rng.integers(0, m - 1, size=pair_samples)
        j = np.where(j >= i, j + 1, j)
        y, v = x[j], u[j]
    else:
        py, pv = marginal_arrays(partner_law, t)
        j = rng.integers(0, py.shape[0], size=pair_samples)
        y, v = py[j], pv[j]
    theta, phi = kernel_service.sample_angle_arrays(kernels.q, rng, pair_samples)

    xi_, ui = x[i], u[i]
    u_star = collision_service.collide_batch(ui, v, theta, phi).u_star
    rate = kernel_service.sigma_values(kernels.sigma, collision_service.relative_speed(ui, v))
    rate = rate * kernel_service.beta_values(kernels.beta, np.linalg.norm(xi_ - y, axis=1))
    return kernels.q.total_rate * rate * (psi.value(xi_, u_star) - psi.value(xi_, ui))


def weak_form_residual(
    paths: Ensemble,
    psi: TestFunction,
    t: float,
    dt: float,
    pair_samples: int,
    kernels: KernelSet,
    stream: RandomStream,
    partner_update: PartnerUpdate = PartnerUpdate.ONE_SIDED,
    partner_law: Optional[Ensemble] = None,
) -> DiagnosticsReport:
    """
    R = d/dt <mu_t, psi> - <mu_t, (u, grad_x psi)> - <mu_t, L psi>, the derivative by
    central difference at dt. Richardson against dt/2 gives the O(dt^2) allowance.
    partner_law is the frozen law for frozen-mode runs; None means the run itself
    (partners drawn among the other members).
    """
    if paths.kind is not EnsembleKind.FROZEN_PATHS:
        raise TimeOutOfRange(t, paths.time_horizon, paths.kind.value)
    if dt <= 0.0 or t - dt < 0.0 or t + dt > paths.time_horizon:
        raise TimeOutOfRange(t, paths.time_horizon, paths.kind.value)
    if pair_samples <= 0:
        raise EmptyRequest("weak_form_residual")

    x, u = marginal_arrays(paths, t)
    transport = np.sum(u * psi.grad_x(x, u), axis=1)
    derivative = _fd_derivative(paths, psi, t, dt)
    derivative_half = _fd_derivative(paths, psi, t, 0.5 * dt)

    multiplicity = 2.0 if partner_update is PartnerUpdate.SYMMETRIC else 1.0
    generator = multiplicity * _generator_samples(paths, psi, t, kernels, pair_samples, stream.generator, partner_law)

    h, h_se = _mean_and_se(derivative - transport)
    g, g_se = _mean_and_se(generator)
    residual = float(h - g)
    se = math.sqrt(float(h_se) ** 2 + float(g_se) ** 2)

    # D(dt) - D(dt/2) = C (3/4) dt^2
    c_fd = (float(np.mean(derivative)) - float(np.mean(derivative_half))) / (0.75 * dt * dt)
    zm = settings.Z_MULTIPLIER
    threshold = zm * se + abs(c_fd) * dt * dt
    component = _Component(f"R[{psi.label}]", residual, se, threshold, TestMethod.Z, t)
    return _report(
        f"weak_form_residual[{psi.label}]",
        [component],
        replicates=len(paths),
        details={
            "time_derivative": float(np.mean(derivative)),
            "time_derivative_half_step": float(np.mean(derivative_half)),
            "transport": float(np.mean(transport)),
            "generator": float(g),
            "c_fd": c_fd,
            "dt": dt,
            "pair_samples": pair_samples,
        },
    )


# --- Uniqueness ---

def marginal_uniqueness_check(run_a: Ensemble, run_b: Ensemble, times: Optional[Sequence[float]] = None) -> DiagnosticsReport:
    """
    law_distance between two runs against the same-law null from splitting run_a in
    half (scaled by 1/sqrt(2) to full size). Only an excess over the null counts.
    """
    times = _checkpoint_times(run_a, times)
    zm = z_multiplier(len(times))
    first, second = split_half(run_a)
    components = []
    null_values = []
    for t in times:
        d = law_distance(run_a, run_b, t)
        null = law_distance(first, second, t).value / math.sqrt(2.0)
        null_values.append(null)
        excess = max(0.0, d.value - null)
        components.append(_z_component(f"distance@{t:g}", excess, d.standard_error, zm, t))
    return _report(
        "marginal_uniqueness",
        components,
        replicates=len(run_a),
        details={"times": list(times), "null": null_values, "z_multiplier": zm},
    )


# --- Thinning ---

def poisson_bins(mean: float, bins: int) -> np.ndarray:
    """Inner cut points of (roughly) equiprobable Poisson(mean) bins."""
    cuts = stats.poisson.ppf(np.linspace(0.0, 1.0, bins + 1)[1:-1], mean)
    return np.unique(cuts.astype(np.int64))


def thinning_calibration_check(counts: Sequence[int], expected_mean: float) -> DiagnosticsReport:
    """Chi-square goodness of fit of accepted-event counts to Poisson(expected_mean)."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size < 10:
        raise EmptyRequest("thinning_calibration_check")
    cuts = poisson_bins(expected_mean, max(2, min(10, counts.size // 5)))
    # bin k holds counts in (cuts[k-1], cuts[k]]
    upper = np.concatenate([cuts, [np.iinfo(np.int64).max]])
    cdf = np.concatenate([stats.poisson.cdf(cuts, expected_mean), [1.0]])
    probabilities = np.diff(np.concatenate([[0.0], cdf]))
    observed = np.bincount(np.searchsorted(upper, counts, side="left"), minlength=upper.size)
    expected = probabilities * counts.size
    keep = expected > 0
    chi2 = float(np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = max(1, int(keep.sum()) - 1)
    critical = float(stats.chi2.isf(settings.KS_ALPHA, dof))
    component = _Component("chi2", chi2, math.sqrt(2.0 * dof), critical, TestMethod.CHI2)
    return _report(
        "thinning_calibration",
        [component],
        replicates=int(counts.size),
        details={
            "expected_mean": expected_mean,
            "observed_mean": float(counts.mean()),
            "dof": dof,
            "p_value": float(stats.chi2.sf(chi2, dof)),
            "observed": observed.tolist(),
            "expected": expected.tolist(),
        },
    )


def accepted_counts(results: Sequence[SimulationResult]) -> List[int]:
    return [r.accepted_count for r in results]


# --- Truncation coupling ---

def _events_agree(run_j: SimulationResult, run_k: SimulationResult, until: float) -> Tuple[bool, int]:
    """Exact agreement of the event lists up to `until`, with the number of events compared."""
    left = [e for e in run_j.events if e.time <= until]
    right = [e for e in run_k.events if e.time <= until]
    if len(left) != len(right):
        return False, min(len(left), len(right))
    for a, b in zip(left, right):
        if (a.time, a.particle_index, a.partner_index, a.accepted) != (b.time, b.particle_index, b.partner_index, b.accepted):
            return False, len(left)
        if not np.array_equal(a.delta_v, b.delta_v):
            return False, len(left)
    return True, len(left)


def truncation_coupling_check(cfg: SimConfig, level: int, replicates: int) -> DiagnosticsReport:
    """
    Runs truncation levels j and j + 1 on shared seeds; event lists must agree exactly
    up to min(tau_j, T) in every replicate. A run with nothing to compare fails.
    """
    disagreements = []
    compared = 0
    accepted = 0
    for seed in replicate_seeds(cfg.master_seed, replicates):
        run_j = simulate(dataclasses.replace(cfg, truncation_level=level, master_seed=seed))
        run_k = simulate(dataclasses.replace(cfg, truncation_level=level + 1, master_seed=seed))
        until = min(run_j.first_stopping_time, cfg.horizon)
        agree, count = _events_agree(run_j, run_k, until)
        compared += count
        accepted += sum(1 for e in run_j.events if e.accepted and e.time <= until)
        if not agree:
            disagreements.append(seed)
    components = [
        _Component("disagreements", float(len(disagreements)), 0.0, 0.0, TestMethod.EXACT),
        _Component("nothing_compared", 0.0 if accepted > 0 else 1.0, 0.0, 0.0, TestMethod.EXACT),
    ]
    return _report(
        "truncation_coupling",
        components,
        replicates=replicates,
        details={
            "level": level,
            "disagreeing_seeds": disagreements,
            "compared_events": compared,
            "compared_accepted": accepted,
        },
    )


# --- Characteristic-function estimator ---

def cf_consistency_check(
    sample_sizes: Sequence[int],
    stream: RandomStream,
    repeats: int = 16,
    lambdas: Optional[np.ndarray] = None,
) -> DiagnosticsReport:
    """
    Log-log slope of the mean CF error of M MVN(0, I) samples against M over two
    sample sizes; the estimator converges at rate 1/sqrt(M), so the slope is -1/2.
    """
    small, large = sorted(sample_sizes)[:1] + sorted(sample_sizes)[-1:]
    if small == large or repeats < 2:
        raise EmptyRequest("cf_consistency_check")
    lambdas = frequency_grid(settings.DICTIONARY_SIZE) if lambdas is None else np.atleast_2d(lambdas)
    target = np.exp(-0.5 * np.sum(lambdas * lambdas, axis=1))
    rng = stream.generator

    def log_errors(m: int) -> np.ndarray:
        out = np.empty(repeats)
        for r in range(repeats):
            phase = rng.standard_normal((m, 3)) @ lambdas.T
            error = np.abs(np.mean(np.cos(phase), axis=0) + 1j * np.mean(np.sin(phase), axis=0) - target)
            out[r] = math.log(float(np.mean(error)))
        return out

    e_small, e_large = log_errors(small), log_errors(large)
    span = math.log(large / small)
    slope = float(np.mean(e_large) - np.mean(e_small)) / span
    se = math.sqrt(np.var(e_small, ddof=1) / repeats + np.var(e_large, ddof=1) / repeats) / span
    component = _z_component("slope+1/2", slope + 0.5, se, settings.Z_MULTIPLIER)
    return _report(
        "cf_consistency",
        [component],
        replicates=repeats,
        details={"slope": slope, "sample_sizes": [small, large]},
    )


# --- Finite-N behaviour ---

def n_scaling_report(cfg: SimConfig, sizes: Sequence[int], time: Optional[float] = None) -> DiagnosticsReport:
    """
    Runs the mean-field system at several N and compares E|Z_t|^2 and the law at t
    with the largest N. Reported empirically; no rate is asserted.
    """
    sizes = sorted(set(int(n) for n in sizes))
    if len(sizes) < 2:
        raise EmptyRequest("n_scaling_report")
    t = cfg.horizon if time is None else time
    runs = {n: simulate(dataclasses.replace(cfg, particle_count=n)).paths for n in sizes}
    reference = runs[sizes[-1]]
    ref_m2, ref_se = second_moment(marginal_arrays(reference, t)[1])

    zm = z_multiplier(len(sizes) - 1)
    rows, components = [], []
    for n in sizes:
        m2, se = second_moment(marginal_arrays(runs[n], t)[1])
        distance = law_distance(runs[n], reference, t)
        rows.append({
            "n": n, "moment2": m2, "moment2_se": se,
            "distance": distance.value, "distance_se": distance.standard_error,
        })
        if n != sizes[-1]:
            components.append(_z_component(f"moment2[N={n}]", m2 - ref_m2, math.hypot(se, ref_se), zm, t))
    return _report("n_scaling", components, replicates=len(sizes), details={"rows": rows, "time": t})


# --- Test functions ---

def standard_test_functions() -> List[TestFunction]:
    """Five bounded test functions mixing velocity and position dependence."""
    return [
        TestFunction(TestFunctionKind.CF_REAL, frequency=(1.0, 0.0, 0.0), position_frequency=(0.5, 0.0, 0.0)),
        TestFunction(TestFunctionKind.CF_IMAG, frequency=(0.0, 1.0, 0.5), position_frequency=(0.0, 0.5, 0.0)),
        TestFunction(TestFunctionKind.HERMITE_POLY, multi_index=(2, 0, 0)),
        TestFunction(TestFunctionKind.HERMITE_POLY, multi_index=(1, 1, 0)),
        TestFunction(
            TestFunctionKind.GAUSSIAN_BUMP,
            velocity_center=(0.5, 0.0, 0.0),
            velocity_width=1.0,
            position_width=1.0,
        ),
    ]


def diagnostics_stream(master_seed: int, index: int = 0) -> RandomStream:
    return substream(master_seed, StreamPurpose.DIAGNOSTICS, index)
