# app/domains/enskog/simulator/services/simulator_service.py
"""
Exact event-driven simulation by thinning.

Every particle carries a Poisson clock of rate Lambda = 2 pi Q((theta_min, pi]).
At a candidate time s the particle draws, in this order and from its own stream:
partner index, theta quantile, phi, r = 1 - U, and the gap to its next candidate.
The candidate is accepted iff r <= sigma(|Z - v|) beta(|X - y|). Positions move
ballistically between events, so no time step exists anywhere.
"""

import dataclasses
import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions.exceptions import ConfigInvalid, FrozenLawMissing, RateOverflow
from app.core.utils.random_streams import RandomStream, StreamPurpose, derive_seed, substream
from app.domains.enskog.collision.entities.collision import CollisionAngles, Vec3
from app.domains.enskog.collision.services import collision_service
from app.domains.enskog.kernels.services import kernel_service
from app.domains.enskog.measures.entities.measures import (
    Ensemble,
    EnsembleKind,
    ParticlePath,
    ParticleState,
)
from app.domains.enskog.measures.services.measure_service import marginal_arrays
from app.domains.enskog.simulator.entities.simulation import (
    InitialLaw,
    JumpEvent,
    PartnerUpdate,
    PositionLaw,
    SimConfig,
    SimulationMode,
    SimulationResult,
    StoppingReport,
    VelocityLaw,
)

logger = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, int], np.ndarray]

_ZERO = np.zeros(3)


# --- Initial law ---

def position_sampler(law: InitialLaw) -> Sampler:
    scale = law.position_scale
    if law.position is PositionLaw.UNIFORM_BOX:
        return lambda rng, count: (rng.random((count, 3)) - 0.5) * scale
    return lambda rng, count: rng.standard_normal((count, 3)) * scale


def velocity_sampler(law: InitialLaw) -> Sampler:
    offset = law.velocity_offset
    if law.velocity is VelocityLaw.MAXWELLIAN:
        def maxwellian(rng: np.random.Generator, count: int) -> np.ndarray:
            z = rng.standard_normal((count, 3))
            z[:, 0] += offset
            return z
        return maxwellian

    def two_point(rng: np.random.Generator, count: int) -> np.ndarray:
        z = np.zeros((count, 3))
        z[:, 0] = np.where(rng.random(count) < 0.5, offset, -offset)
        return z
    return two_point


def sample_initial_state(law: InitialLaw, count: int, stream: RandomStream) -> Tuple[np.ndarray, np.ndarray]:
    """Positions, then velocities, drawn in bulk from one stream."""
    rng = stream.generator
    x = position_sampler(law)(rng, count)
    z = velocity_sampler(law)(rng, count)
    return x, z


# --- Truncation and stopping ---

def alpha_truncated(z: Vec3, v: Vec3, xi: CollisionAngles, j: int) -> Vec3:
    """alpha(z, v, xi) / (1 + d(z, B_j)) with d(z, B_j) = max(0, |z| - j)."""
    if j < 1:
        raise ValueError(f"truncation level must be >= 1, got {j}")
    distance = max(0.0, float(np.linalg.norm(z)) - j)
    return collision_service.alpha(z, v, xi) / (1.0 + distance)


def detect_stopping(path: ParticlePath, j: int, particle_index: Optional[int] = None) -> StoppingReport:
    """First time the speed exceeds j; 0 when the initial speed already does."""
    if np.linalg.norm(path.initial.velocity) > j:
        return StoppingReport(tau_j=0.0, level=j, particle_index=particle_index)
    speeds = np.linalg.norm(path.event_velocities, axis=1)
    above = np.flatnonzero(speeds > j)
    tau = float(path.event_times[above[0]]) if above.size else None
    return StoppingReport(tau_j=tau, level=j, particle_index=particle_index)


# --- Validation ---

def validate_config(cfg: SimConfig, frozen_law: Optional[Ensemble] = None) -> None:
    errors: List[Dict[str, str]] = []

    def fail(field_name: str, message: str) -> None:
        errors.append({"field": field_name, "message": message})

    minimum = 2 if cfg.mode is SimulationMode.MEAN_FIELD else 1
    if cfg.particle_count < minimum:
        fail("n_particles", f"must be >= {minimum} in {cfg.mode.value} mode")
    if not (math.isfinite(cfg.horizon) and cfg.horizon > 0.0):
        fail("horizon", "must be a finite positive number")
    times = list(cfg.output_times)
    if times != sorted(times):
        fail("output_times", "must be sorted")
    if any(t < 0.0 or t > cfg.horizon for t in times):
        fail("output_times", f"must lie within [0, {cfg.horizon}]")
    if cfg.truncation_level is not None and cfg.truncation_level < 1:
        fail("truncation_j", "must be >= 1")
    if cfg.mode is SimulationMode.FROZEN and cfg.partner_update is PartnerUpdate.SYMMETRIC:
        fail("partner_update", "symmetric updates need a live partner; use mean_field mode")

    kernels = cfg.kernels
    report = kernel_service.validate_hypotheses(kernels.q, kernels.sigma, kernels.beta)
    for violation in report.errors:
        fail(violation.hypothesis, violation.message)

    if errors:
        raise ConfigInvalid("Simulation configuration is invalid", errors=errors, details={"report": report.as_dict()})

    if cfg.mode is SimulationMode.FROZEN:
        if frozen_law is None or frozen_law.kind is not EnsembleKind.FROZEN_PATHS:
            raise FrozenLawMissing()
        if frozen_law.time_horizon < cfg.horizon:
            raise ConfigInvalid(
                "Frozen law does not cover the simulation horizon",
                errors=[{"field": "frozen_law", "message": f"horizon {frozen_law.time_horizon} < {cfg.horizon}"}],
            )

    budget = cfg.event_budget if cfg.event_budget is not None else settings.EVENT_BUDGET
    if cfg.expected_candidates > budget:
        raise RateOverflow(cfg.expected_candidates, budget)


# --- One candidate ---

def _candidate(
    cfg: SimConfig,
    rng: np.random.Generator,
    s: float,
    z: Vec3,
    x: Vec3,
    partner: Tuple[Vec3, Vec3],
) -> Tuple[CollisionAngles, bool, Vec3, float]:
    """Draws angles, acceptance and next gap; returns (angles, accepted, alpha, gap)."""
    kernels = cfg.kernels
    y, v = partner
    xi = kernel_service.sample_angles(kernels.q, rng)
    r = 1.0 - rng.random()
    gap = rng.exponential(1.0 / cfg.candidate_rate)

    speed = float(np.linalg.norm(z - v))
    distance = float(np.linalg.norm(x - y))
    rate = kernel_service.evaluate_sigma(kernels.sigma, speed) * kernel_service.evaluate_beta(kernels.beta, distance)
    accepted = r <= rate
    if not accepted:
        return xi, False, _ZERO, gap
    if cfg.truncation_level is None:
        a = collision_service.alpha(z, v, xi)
    else:
        a = alpha_truncated(z, v, xi, cfg.truncation_level)
    return xi, True, a, gap


class _Trajectory:
    """Mutable per-particle record used while the event loop runs."""
    __slots__ = ("x", "z", "t", "times", "velocities")

    def __init__(self, x: Vec3, z: Vec3):
        self.x = x
        self.z = z
        self.t = 0.0
        self.times: List[float] = []
        self.velocities: List[Vec3] = []

    def position_at(self, s: float) -> Vec3:
        return self.x + self.z * (s - self.t)

    def jump(self, s: float, z_new: Vec3) -> None:
        self.x = self.position_at(s)
        self.z = z_new
        self.t = s
        self.times.append(s)
        self.velocities.append(z_new)


def _paths(x0: np.ndarray, z0: np.ndarray, trajectories: Sequence[_Trajectory], cfg: SimConfig) -> Ensemble:
    members = tuple(
        ParticlePath(
            initial=ParticleState(position=x0[i], velocity=z0[i]),
            event_times=np.array(tr.times, dtype=np.float64),
            event_velocities=np.array(tr.velocities, dtype=np.float64).reshape(-1, 3),
        )
        for i, tr in enumerate(trajectories)
    )
    return Ensemble(EnsembleKind.FROZEN_PATHS, members, cfg.horizon, (cfg.master_seed,))


# --- Mean-field mode ---

def _simulate_mean_field(cfg: SimConfig, x0: np.ndarray, z0: np.ndarray) -> Tuple[List[_Trajectory], List[JumpEvent]]:
    n = cfg.particle_count
    rate = cfg.candidate_rate
    symmetric = cfg.partner_update is PartnerUpdate.SYMMETRIC
    trajectories = [_Trajectory(x0[i].copy(), z0[i].copy()) for i in range(n)]
    events: List[JumpEvent] = []
    if rate == 0.0:
        return trajectories, events

    clocks = [substream(cfg.master_seed, StreamPurpose.PARTICLE_CLOCK, i).generator for i in range(n)]
    queue: List[Tuple[float, int]] = []
    for i, rng in enumerate(clocks):
        first = rng.exponential(1.0 / rate)
        if first <= cfg.horizon:
            queue.append((first, i))
    heapq.heapify(queue)

    while queue:
        s, i = heapq.heappop(queue)
        rng = clocks[i]
        k = int(rng.integers(0, n - 1))
        k = k + 1 if k >= i else k
        tagged, other = trajectories[i], trajectories[k]
        y, v = other.position_at(s), other.z
        xi, accepted, a, gap = _candidate(cfg, rng, s, tagged.z, tagged.position_at(s), (y, v))

        if accepted:
            tagged.jump(s, tagged.z - a)
            if symmetric:
                other.jump(s, v + a)
        events.append(
            JumpEvent(
                time=s,
                particle_index=i,
                partner_index=k,
                partner_snapshot=(y, v),
                angles=xi,
                accepted=accepted,
                delta_v=-a if accepted else _ZERO,
            )
        )
        if s + gap <= cfg.horizon:
            heapq.heappush(queue, (s + gap, i))
    return trajectories, events


# --- Frozen mode ---

def _simulate_frozen_particle(
    cfg: SimConfig, frozen_law: Ensemble, x0: Vec3, z0: Vec3, i: int
) -> Tuple[_Trajectory, List[JumpEvent]]:
    tagged = _Trajectory(x0.copy(), z0.copy())
    events: List[JumpEvent] = []
    rate = cfg.candidate_rate
    if rate == 0.0:
        return tagged, events

    rng = substream(cfg.master_seed, StreamPurpose.PARTICLE_CLOCK, i).generator
    members = frozen_law.members
    s = rng.exponential(1.0 / rate)
    while s <= cfg.horizon:
        k = int(rng.integers(0, len(members)))
        y, v = members[k].state_at(s)
        xi, accepted, a, gap = _candidate(cfg, rng, s, tagged.z, tagged.position_at(s), (y, v))
        if accepted:
            tagged.jump(s, tagged.z - a)
        events.append(JumpEvent(s, i, k, (y, v), xi, accepted, -a if accepted else _ZERO))
        s += gap
    return tagged, events


def _simulate_frozen(
    cfg: SimConfig, frozen_law: Ensemble, x0: np.ndarray, z0: np.ndarray, workers: int
) -> Tuple[List[_Trajectory], List[JumpEvent]]:
    n = cfg.particle_count

    def run_chunk(indices: range) -> List[Tuple[_Trajectory, List[JumpEvent]]]:
        return [_simulate_frozen_particle(cfg, frozen_law, x0[i], z0[i], i) for i in indices]

    chunk = max(1, math.ceil(n / max(1, workers)))
    chunks = [range(lo, min(n, lo + chunk)) for lo in range(0, n, chunk)]
    if workers <= 1 or len(chunks) == 1:
        results = [run_chunk(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_chunk, chunks))

    trajectories: List[_Trajectory] = []
    events: List[JumpEvent] = []
    for part in results:
        for tagged, particle_events in part:
            trajectories.append(tagged)
            events.extend(particle_events)
    events.sort(key=lambda e: (e.time, e.particle_index))
    return trajectories, events


# --- Entry points ---

def simulate(cfg: SimConfig, frozen_law: Optional[Ensemble] = None, workers: Optional[int] = None) -> SimulationResult:
    """
    Runs one simulation. Unpacks as (paths, events, stopping). The result depends on
    cfg (master_seed included) and frozen_law only, never on `workers`.
    """
    validate_config(cfg, frozen_law)
    x0, z0 = sample_initial_state(cfg.initial, cfg.particle_count, substream(cfg.master_seed, StreamPurpose.INITIAL_STATE))
    logger.info(
        "simulating %s: N=%d T=%g Lambda=%g seed=%d",
        cfg.mode.value, cfg.particle_count, cfg.horizon, cfg.candidate_rate, cfg.master_seed,
    )

    if cfg.mode is SimulationMode.MEAN_FIELD:
        trajectories, events = _simulate_mean_field(cfg, x0, z0)
    else:
        workers = workers or settings.THREADS
        trajectories, events = _simulate_frozen(cfg, frozen_law, x0, z0, workers)

    paths = _paths(x0, z0, trajectories, cfg)
    stopping: List[StoppingReport] = []
    if cfg.truncation_level is not None:
        stopping = [detect_stopping(p, cfg.truncation_level, i) for i, p in enumerate(paths.members)]

    result = SimulationResult(paths=paths, events=events, stopping=stopping)
    logger.info("done: %d candidates, %d accepted", result.candidate_count, result.accepted_count)
    return result


def replicate_seeds(master_seed: int, count: int) -> List[int]:
    return [derive_seed(master_seed, StreamPurpose.REPLICATE, k) for k in range(count)]


def _simulate_one(cfg: SimConfig, frozen_law: Optional[Ensemble]) -> SimulationResult:
    return simulate(cfg, frozen_law, workers=1)


def run_replicates(
    cfg: SimConfig,
    count: int,
    frozen_law: Optional[Ensemble] = None,
    workers: Optional[int] = None,
) -> List[SimulationResult]:
    """
    `count` independent runs with disjoint seed lineages derived from cfg.master_seed,
    returned in replicate order whatever the number of worker processes.
    """
    configs = [dataclasses.replace(cfg, master_seed=seed) for seed in replicate_seeds(cfg.master_seed, count)]
    workers = min(workers or settings.THREADS, count)
    run = partial(_simulate_one, frozen_law=frozen_law)
    if workers <= 1:
        return [run(c) for c in configs]
    logger.info("running %d replicates on %d processes", count, workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


# --- Snapshots and conserved quantities ---

def snapshot(paths: Ensemble, t: float) -> Ensemble:
    """States of every path at time t, as a states_at_time ensemble."""
    positions, velocities = marginal_arrays(paths, t)
    last = [
        float(p.event_times[p.event_times <= t][-1]) if np.any(p.event_times <= t) else 0.0
        for p in paths.members
    ]
    return Ensemble.from_states(positions, velocities, t, paths.seed_lineage, np.array(last))


def total_momentum(velocities: np.ndarray) -> Vec3:
    return np.sum(np.asarray(velocities, dtype=np.float64), axis=0)


def total_energy(velocities: np.ndarray) -> float:
    v = np.asarray(velocities, dtype=np.float64)
    return 0.5 * float(np.sum(v * v))
