# app/domains/enskog/simulator/entities/simulation.py

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from app.domains.enskog.collision.entities.collision import CollisionAngles, Vec3
from app.domains.enskog.kernels.entities.kernels import KernelSet
from app.domains.enskog.measures.entities.measures import Ensemble


class SimulationMode(str, Enum):
    MEAN_FIELD = "mean_field"
    FROZEN = "frozen"


class PartnerUpdate(str, Enum):
    ONE_SIDED = "one_sided"
    SYMMETRIC = "symmetric"


class VelocityLaw(str, Enum):
    MAXWELLIAN = "maxwellian"
    TWO_POINT = "two_point"


class PositionLaw(str, Enum):
    UNIFORM_BOX = "uniform_box"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class InitialLaw:
    """
    Law of (X_0, Z_0); the two coordinates are independent.

    maxwellian:   Z_0 ~ MVN(0, I) shifted by velocity_offset along the first axis
    two_point:    Z_0 = +/- velocity_offset e1 with probability 1/2 each
    uniform_box:  X_0 uniform on [-position_scale/2, position_scale/2]^3
    gaussian:     X_0 ~ MVN(0, position_scale^2 I)
    """
    velocity: VelocityLaw = VelocityLaw.MAXWELLIAN
    position: PositionLaw = PositionLaw.UNIFORM_BOX
    position_scale: float = 1.0
    velocity_offset: float = 0.0


@dataclass(frozen=True)
class SimConfig:
    mode: SimulationMode
    particle_count: int
    horizon: float
    kernels: KernelSet
    partner_update: PartnerUpdate = PartnerUpdate.ONE_SIDED
    truncation_level: Optional[int] = None
    output_times: Tuple[float, ...] = ()
    master_seed: int = 0
    initial: InitialLaw = field(default_factory=InitialLaw)
    event_budget: Optional[float] = None

    @property
    def candidate_rate(self) -> float:
        """Per-particle candidate rate Lambda."""
        return self.kernels.q.total_rate

    @property
    def expected_candidates(self) -> float:
        return self.candidate_rate * self.horizon * self.particle_count


@dataclass(frozen=True, eq=False)
class JumpEvent:
    """
    One candidate collision. delta_v is the increment actually applied to the tagged
    particle (zero when rejected).
    """
    time: float
    particle_index: int
    partner_index: int
    partner_snapshot: Tuple[Vec3, Vec3]
    angles: CollisionAngles
    accepted: bool
    delta_v: Vec3

    @property
    def jump_size(self) -> float:
        return float(np.linalg.norm(self.delta_v))


@dataclass(frozen=True)
class StoppingReport:
    """tau_j: first time the speed exceeds j on [0, T], or None."""
    tau_j: Optional[float]
    level: int
    particle_index: Optional[int] = None


@dataclass(frozen=True, eq=False)
class SimulationResult:
    paths: Ensemble
    events: List[JumpEvent]
    stopping: List[StoppingReport]

    @property
    def candidate_count(self) -> int:
        return len(self.events)

    @property
    def accepted_count(self) -> int:
        return sum(1 for e in self.events if e.accepted)

    @property
    def first_stopping_time(self) -> float:
        """min over particles of tau_j, or +inf when no particle leaves the ball."""
        taus = [s.tau_j for s in self.stopping if s.tau_j is not None]
        return min(taus) if taus else math.inf

    def __iter__(self):
        return iter((self.paths, self.events, self.stopping))
