# app/domains/enskog/picard/services/picard_service.py

import dataclasses
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions.exceptions import ConfigInvalid, EmptyRequest, ToleranceBelowNoiseFloor
from app.core.utils.random_streams import RandomStream, StreamPurpose, derive_seed
from app.domains.enskog.measures.entities.measures import (
    Ensemble,
    EnsembleKind,
    ParticlePath,
    ParticleState,
)
from app.domains.enskog.measures.services.measure_service import (
    law_distance,
    marginal_arrays,
    second_moment,
    split_half,
)
from app.domains.enskog.picard.entities.iteration import (
    IterationState,
    MomentEnvelope,
    MomentPoint,
    PicardDriverConfig,
    PicardTrajectory,
)
from app.domains.enskog.simulator.entities.simulation import SimConfig, SimulationMode
from app.domains.enskog.simulator.services.simulator_service import Sampler, simulate

logger = logging.getLogger(__name__)

NOISE_FLOOR_MULTIPLIER = 3.0


def _checkpoints(horizon: float, output_times: Sequence[float] = ()) -> Tuple[float, ...]:
    return tuple(output_times) or (0.0, 0.5 * horizon, horizon)


def moment_trace(law: Ensemble, times: Sequence[float]) -> List[MomentPoint]:
    trace = []
    for t in times:
        _, z = marginal_arrays(law, t)
        m2, se = second_moment(z)
        trace.append((float(t), m2, se))
    return trace


def initial_law(
    z0_sampler: Sampler,
    x0_sampler: Sampler,
    M: int,
    T: float,
    stream: RandomStream,
    output_times: Sequence[float] = (),
) -> IterationState:
    """M ballistic paths X_t = X_0 + Z_0 t without events; index 0."""
    if M < 2:
        raise EmptyRequest("initial_law")
    rng = stream.generator
    x0 = x0_sampler(rng, M)
    z0 = z0_sampler(rng, M)
    members = tuple(ParticlePath(initial=ParticleState(position=x, velocity=z)) for x, z in zip(x0, z0))
    law = Ensemble(EnsembleKind.FROZEN_PATHS, members, float(T), (stream.lineage_id,))
    return IterationState(index=0, law=law, moment2_trace=moment_trace(law, _checkpoints(T, output_times)))


def iterate_seed(cfg: SimConfig, index: int, crn: bool = False) -> int:
    """Common random numbers reuse one seed for every iterate."""
    if crn:
        return derive_seed(cfg.master_seed, StreamPurpose.PICARD_ITERATE)
    return derive_seed(cfg.master_seed, StreamPurpose.PICARD_ITERATE, index)


def iterate(
    prev: IterationState,
    cfg: SimConfig,
    crn: bool = False,
    workers: Optional[int] = None,
    dictionary_size: Optional[int] = None,
) -> IterationState:
    """Simulates fresh paths against the frozen previous law."""
    if cfg.mode is not SimulationMode.FROZEN:
        raise ConfigInvalid(
            "Picard iterates run in frozen mode",
            errors=[{"field": "mode", "message": f"expected frozen, got {cfg.mode.value}"}],
        )
    index = prev.index + 1
    run_cfg = dataclasses.replace(cfg, master_seed=iterate_seed(cfg, index, crn))
    result = simulate(run_cfg, frozen_law=prev.law, workers=workers)
    times = _checkpoints(cfg.horizon, cfg.output_times)
    distances = [law_distance(result.paths, prev.law, t, dictionary_size) for t in times]
    state = IterationState(
        index=index,
        law=result.paths,
        moment2_trace=moment_trace(result.paths, times),
        distance_to_previous=distances,
    )
    logger.info(
        "iterate %d: max distance %.4g, sup E|Z|^2 %.4g, %d accepted jumps",
        index, state.max_distance, state.sup_moment2, result.accepted_count,
    )
    return state


def estimate_noise_floor(state: IterationState, times: Sequence[float], dictionary_size: Optional[int] = None) -> float:
    """
    Typical law distance between two independent ensembles of the same size and law:
    the split-half distance of `state.law`, scaled from half size to full size.
    """
    first, second = split_half(state.law)
    return max(law_distance(first, second, t, dictionary_size).value for t in times) / math.sqrt(2.0)


def run_to_tolerance(
    driver: PicardDriverConfig,
    cfg: SimConfig,
    start: IterationState,
    workers: Optional[int] = None,
) -> PicardTrajectory:
    """
    Iterates until the largest distance to the previous law drops below driver.tol.
    Not converging within max_iters is reported (converged=False), not raised.
    """
    times = _checkpoints(cfg.horizon, cfg.output_times)
    noise_floor = driver.noise_floor
    if noise_floor is None:
        noise_floor = estimate_noise_floor(start, times, driver.dictionary_size)
        logger.info("estimated noise floor %.4g from the initial law", noise_floor)
    if driver.tol <= NOISE_FLOOR_MULTIPLIER * noise_floor:
        raise ToleranceBelowNoiseFloor(driver.tol, noise_floor, NOISE_FLOOR_MULTIPLIER)

    states = [start]
    converged = False
    for _ in range(driver.max_iters):
        state = iterate(states[-1], cfg, crn=driver.crn, workers=workers, dictionary_size=driver.dictionary_size)
        states.append(state)
        if state.max_distance < driver.tol:
            converged = True
            break

    if converged:
        logger.info("converged after %d iterations (tol %.4g)", states[-1].index, driver.tol)
    else:
        logger.warning(
            "no convergence after %d iterations: last distance %.4g, tol %.4g",
            driver.max_iters, states[-1].max_distance, driver.tol,
        )
    return PicardTrajectory(states=states, converged=converged, noise_floor=noise_floor, tol=driver.tol)


# --- Moment envelope ---

def fit_moment_envelope(states: Sequence[IterationState], slack: float = 1.2) -> MomentEnvelope:
    """
    Fits k1 exp(rate t) to the second-moment traces of the given iterates (usually
    the first two): rate by least squares on log E|Z_t|^2, clipped at 0, then k1
    as the smallest constant putting every fitted point under the curve.
    """
    points = np.array([(t, m) for s in states for t, m, _ in s.moment2_trace], dtype=np.float64)
    if points.size == 0:
        raise EmptyRequest("fit_moment_envelope")
    t, m = points[:, 0], np.maximum(points[:, 1], np.finfo(float).tiny)
    rate = 0.0
    if np.ptp(t) > 0:
        rate = max(0.0, float(np.polyfit(t, np.log(m), 1)[0]))
    k1 = float(np.max(m * np.exp(-rate * t)))
    return MomentEnvelope(k1=k1, rate=rate, slack=slack)


def check_moment_envelope(envelope: MomentEnvelope, states: Sequence[IterationState]) -> Tuple[bool, float]:
    """Returns (every point under the slackened envelope, worst ratio moment / bound)."""
    worst = 0.0
    for state in states:
        for t, m, _ in state.moment2_trace:
            worst = max(worst, m / envelope.bound(t))
    return worst <= 1.0, worst
