# app/domains/enskog/collision/services/collision_service.py
"""
Elastic collision geometry.

Every function accepts single vectors of shape (3,) or batches of shape (n, 3);
angles are scalars or arrays broadcastable against the leading batch axis.
All functions are pure.
"""

from typing import Optional, Tuple

import numpy as np

from app.core.exceptions.exceptions import DegenerateRelativeVelocity
from app.domains.enskog.collision.entities.collision import (
    DEGENERACY_THRESHOLD,
    CollisionAngles,
    CollisionOutcome,
    Vec3,
    as_vec3,
)

Frame = Tuple[Vec3, Vec3, Vec3]

_K_DEFAULT = np.array([0.0, 0.0, 1.0])
_K_FALLBACK = np.array([1.0, 0.0, 0.0])


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _frame_from_relative(w: np.ndarray) -> Frame:
    norm = np.sqrt(_dot(w, w))[..., None]
    e3 = w / norm
    use_fallback = np.abs(e3[..., 2:3]) > 0.9
    k = np.where(use_fallback, _K_FALLBACK, _K_DEFAULT)
    e1 = _cross(e3, k)
    e1 = e1 / np.sqrt(_dot(e1, e1))[..., None]
    e2 = _cross(e3, e1)
    return e1, e2, e3


def _check_nondegenerate(w: np.ndarray) -> None:
    speed = np.sqrt(_dot(w, w))
    if np.any(speed < DEGENERACY_THRESHOLD):
        raise DegenerateRelativeVelocity(float(np.min(speed)))


def deflection_frame(u: Vec3, v: Vec3) -> Frame:
    """
    Right-handed orthonormal frame (e1, e2, e3) with e3 along u - v.
    e1 = normalize(e3 x k) with k = z-axis, or the x-axis when |e3_z| > 0.9.
    """
    w = as_vec3(u, "u") - as_vec3(v, "v")
    _check_nondegenerate(w)
    return _frame_from_relative(w)


def _unit_deflection(frame: Frame, theta, phi) -> np.ndarray:
    e1, e2, e3 = frame
    theta = np.asarray(theta, dtype=np.float64)[..., None]
    phi = np.asarray(phi, dtype=np.float64)[..., None]
    half = 0.5 * theta
    return np.sin(half) * e3 + np.cos(half) * (np.cos(phi) * e1 + np.sin(phi) * e2)


def deflection_vector(u: Vec3, v: Vec3, xi: CollisionAngles, frame: Optional[Frame] = None) -> Vec3:
    """Unit vector n = sin(theta/2) e3 + cos(theta/2)(cos(phi) e1 + sin(phi) e2)."""
    if frame is None:
        frame = deflection_frame(u, v)
    return _unit_deflection(frame, xi.theta, xi.phi)


def deflection_vectors(u: Vec3, v: Vec3, theta, phi) -> Vec3:
    """Batch form of deflection_vector with angle arrays."""
    return _unit_deflection(deflection_frame(u, v), theta, phi)


def _alpha_and_n(u: np.ndarray, v: np.ndarray, theta, phi) -> Tuple[np.ndarray, np.ndarray]:
    w = u - v
    speed = np.sqrt(_dot(w, w))
    degenerate = speed < DEGENERACY_THRESHOLD
    if np.any(degenerate):
        # placeholder axis for degenerate rows; their alpha is zeroed below
        w_safe = np.where(degenerate[..., None], _K_DEFAULT, w)
    else:
        w_safe = w
    n = _unit_deflection(_frame_from_relative(w_safe), theta, phi)
    alpha = _dot(n, w)[..., None] * n
    if np.any(degenerate):
        alpha = np.where(degenerate[..., None], 0.0, alpha)
        n = np.where(degenerate[..., None], np.nan, n)
    return alpha, n


def alpha(u: Vec3, v: Vec3, xi: CollisionAngles) -> Vec3:
    """Collision kernel (n, u - v) n; the zero vector when u == v."""
    a, _ = _alpha_and_n(as_vec3(u, "u"), as_vec3(v, "v"), xi.theta, xi.phi)
    return a


def alpha_batch(u: Vec3, v: Vec3, theta, phi) -> Vec3:
    a, _ = _alpha_and_n(as_vec3(u, "u"), as_vec3(v, "v"), theta, phi)
    return a


def collide(u: Vec3, v: Vec3, xi: CollisionAngles) -> CollisionOutcome:
    """u* = u - alpha, v* = v + alpha."""
    return collide_batch(u, v, xi.theta, xi.phi)


def collide_batch(u: Vec3, v: Vec3, theta, phi) -> CollisionOutcome:
    u = as_vec3(u, "u")
    v = as_vec3(v, "v")
    a, n = _alpha_and_n(u, v, theta, phi)
    return CollisionOutcome(u_star=u - a, v_star=v + a, alpha=a, n=n)


def involution_defect(u: Vec3, v: Vec3, xi: CollisionAngles) -> float:
    """
    Collides (u, v), then re-collides the outcome along the same deflection vector n
    and returns the largest distance from the original pair.
    """
    u = as_vec3(u, "u")
    v = as_vec3(v, "v")
    n = deflection_vector(u, v, xi)
    outcome = collide(u, v, xi)
    back = _dot(n, outcome.u_star - outcome.v_star)[..., None] * n
    u_back = outcome.u_star - back
    v_back = outcome.v_star + back
    return float(max(np.max(np.linalg.norm(u_back - u, axis=-1)), np.max(np.linalg.norm(v_back - v, axis=-1))))


def relative_speed(u: Vec3, v: Vec3) -> np.ndarray:
    w = np.asarray(u) - np.asarray(v)
    return np.sqrt(_dot(w, w))
