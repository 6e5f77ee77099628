# app/domains/enskog/collision/entities/collision.py

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt

# Velocities and positions: float64 arrays of shape (3,), or (n, 3) for batches.
Vec3 = npt.NDArray[np.float64]

# Below this relative speed no deflection frame is built.
DEGENERACY_THRESHOLD = 1e-300

TWO_PI = 2.0 * math.pi


def as_vec3(value, name: str = "vector") -> Vec3:
    """Converts to a float64 array with a trailing axis of length 3, rejecting NaN/Inf."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have a trailing dimension of 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components")
    return arr


@dataclass(frozen=True)
class CollisionAngles:
    """
    Colatitude and longitude of the deflection vector.
    theta in (0, pi], phi in [0, 2 pi).
    """
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 < self.theta <= math.pi):
            raise ValueError(f"theta must lie in (0, pi], got {self.theta!r}")
        if not (0.0 <= self.phi < TWO_PI):
            raise ValueError(f"phi must lie in [0, 2pi), got {self.phi!r}")

    def as_tuple(self) -> Tuple[float, float]:
        return self.theta, self.phi


@dataclass(frozen=True)
class CollisionOutcome:
    """Post-collision velocities together with the increment and the deflection vector."""
    u_star: Vec3
    v_star: Vec3
    alpha: Vec3
    n: Vec3  # NaN-filled when u == v (no deflection direction exists)

    def momentum_residual(self, u: Vec3, v: Vec3) -> float:
        return float(np.max(np.abs((self.u_star + self.v_star) - (u + v))))

    def energy_residual(self, u: Vec3, v: Vec3) -> float:
        """Relative change of the pair kinetic energy."""
        before = float(np.dot(u, u) + np.dot(v, v))
        after = float(np.dot(self.u_star, self.u_star) + np.dot(self.v_star, self.v_star))
        if before == 0.0:
            return abs(after)
        return abs(after - before) / before
