# app/domains/enskog/picard/entities/iteration.py

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from app.domains.enskog.measures.entities.measures import Ensemble, LawDistance

# (t, estimate of E|Z_t|^2, its standard error)
MomentPoint = Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class IterationState:
    """The n-th law of the approximating sequence."""
    index: int
    law: Ensemble
    moment2_trace: List[MomentPoint] = field(default_factory=list)
    distance_to_previous: Optional[List[LawDistance]] = None

    @property
    def max_distance(self) -> float:
        if not self.distance_to_previous:
            return math.nan
        return max(d.value for d in self.distance_to_previous)

    @property
    def sup_moment2(self) -> float:
        return max(m for _, m, _ in self.moment2_trace)


@dataclass(frozen=True)
class PicardDriverConfig:
    max_iters: int = 10
    tol: float = 0.05
    noise_floor: Optional[float] = None  # estimated from the initial law when None
    crn: bool = False
    write_laws: bool = False
    dictionary_size: Optional[int] = None


@dataclass(frozen=True, eq=False)
class PicardTrajectory:
    states: List[IterationState]
    converged: bool
    noise_floor: float
    tol: float

    @property
    def iterations(self) -> int:
        return self.states[-1].index if self.states else 0


@dataclass(frozen=True)
class MomentEnvelope:
    """slack k1 exp(rate t) bound on E|Z_t|^2 along the iterates."""
    k1: float
    rate: float
    slack: float = 1.2

    def bound(self, t: float) -> float:
        return self.slack * self.k1 * math.exp(self.rate * t)
