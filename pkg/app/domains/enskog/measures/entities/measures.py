# app/domains/enskog/measures/entities/measures.py

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from app.domains.enskog.collision.entities.collision import Vec3, as_vec3


class EnsembleKind(str, Enum):
    STATES_AT_TIME = "states_at_time"
    FROZEN_PATHS = "frozen_paths"


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Position and velocity of one particle, anchored at its last event time."""
    position: Vec3
    velocity: Vec3
    last_event_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", as_vec3(self.position, "position"))
        object.__setattr__(self, "velocity", as_vec3(self.velocity, "velocity"))
        if not self.last_event_time >= 0.0:
            raise ValueError(f"last_event_time must be non-negative, got {self.last_event_time}")


@dataclass(frozen=True, eq=False)
class ParticlePath:
    """
    Piecewise-ballistic trajectory: initial state at t=0 plus velocity jumps.

    Between events X(s) = X(t_k) + Z(t_k) (s - t_k). The path is right-continuous:
    at an event time it already carries the post-jump velocity.
    """
    initial: ParticleState
    event_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    event_velocities: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))
    anchor_positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=np.float64).reshape(-1)
        velocities = np.asarray(self.event_velocities, dtype=np.float64).reshape(-1, 3)
        if velocities.shape[0] != times.size:
            raise ValueError("event_times and event_velocities disagree in length")
        if times.size and (times[0] <= 0.0 or np.any(np.diff(times) <= 0.0)):
            raise ValueError("event times must be positive and strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(velocities))):
            raise ValueError("path events must be finite")
        anchors = np.empty((times.size + 1, 3))
        anchors[0] = self.initial.position
        previous_t, previous_z = 0.0, self.initial.velocity
        for k in range(times.size):
            anchors[k + 1] = anchors[k] + previous_z * (times[k] - previous_t)
            previous_t, previous_z = times[k], velocities[k]
        object.__setattr__(self, "event_times", times)
        object.__setattr__(self, "event_velocities", velocities)
        object.__setattr__(self, "anchor_positions", anchors)

    @property
    def event_count(self) -> int:
        return int(self.event_times.size)

    def state_at(self, t: float) -> Tuple[Vec3, Vec3]:
        """Exact (position, velocity) at time t >= 0."""
        k = int(np.searchsorted(self.event_times, t, side="right"))
        if k == 0:
            t_k, z = 0.0, self.initial.velocity
        else:
            t_k, z = self.event_times[k - 1], self.event_velocities[k - 1]
        return self.anchor_positions[k] + z * (t - t_k), z

    def velocity_at(self, t: float) -> Vec3:
        k = int(np.searchsorted(self.event_times, t, side="right"))
        return self.initial.velocity if k == 0 else self.event_velocities[k - 1]


Member = Union[ParticleState, ParticlePath]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """
    Finite stand-in for a law: either particle states at one time, or frozen paths on
    [0, time_horizon]. For states_at_time, time_horizon is the snapshot time.
    """
    kind: EnsembleKind
    members: Tuple[Member, ...]
    time_horizon: float
    seed_lineage: Tuple[int, ...] = ()

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        expected = ParticlePath if self.kind is EnsembleKind.FROZEN_PATHS else ParticleState
        if not all(isinstance(m, expected) for m in members):
            raise ValueError(f"every member of a {self.kind.value} ensemble must be a {expected.__name__}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "seed_lineage", tuple(int(s) for s in self.seed_lineage))

    def __len__(self) -> int:
        return len(self.members)

    @classmethod
    def from_states(
        cls,
        positions: np.ndarray,
        velocities: np.ndarray,
        time: float,
        seed_lineage: Sequence[int] = (),
        last_event_times: Optional[np.ndarray] = None,
    ) -> "Ensemble":
        if last_event_times is None:
            last_event_times = np.zeros(len(positions))
        members = tuple(
            ParticleState(position=x, velocity=z, last_event_time=float(t))
            for x, z, t in zip(positions, velocities, last_event_times)
        )
        return cls(EnsembleKind.STATES_AT_TIME, members, float(time), tuple(seed_lineage))


@dataclass(frozen=True)
class LawDistance:
    """Maximum dictionary discrepancy between two laws, with its bootstrap standard error."""
    value: float
    test_family_size: int
    standard_error: float
    time: Optional[float] = None
