# app/domains/enskog/measures/services/measure_service.py

import itertools
import logging
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions.exceptions import EmptyRequest, TimeOutOfRange
from app.core.utils.random_streams import RandomStream, StreamPurpose, substream
from app.domains.enskog.collision.entities.collision import Vec3
from app.domains.enskog.measures.entities.measures import (
    Ensemble,
    EnsembleKind,
    LawDistance,
)

logger = logging.getLogger(__name__)

FREQUENCY_LEVELS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


# --- Marginals ---

def _check_time(e: Ensemble, t: float) -> None:
    if e.kind is EnsembleKind.FROZEN_PATHS:
        if not (0.0 <= t <= e.time_horizon):
            raise TimeOutOfRange(t, e.time_horizon, e.kind.value)
    elif t != e.time_horizon:
        raise TimeOutOfRange(t, e.time_horizon, e.kind.value)


def marginal_at(e: Ensemble, t: float) -> List[Tuple[Vec3, Vec3]]:
    """(position, velocity) of every member at time t."""
    _check_time(e, t)
    if e.kind is EnsembleKind.FROZEN_PATHS:
        return [path.state_at(t) for path in e.members]
    return [(state.position, state.velocity) for state in e.members]


def marginal_arrays(e: Ensemble, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Positions and velocities at time t as two (M, 3) arrays."""
    pairs = marginal_at(e, t)
    positions = np.array([x for x, _ in pairs], dtype=np.float64)
    velocities = np.array([z for _, z in pairs], dtype=np.float64)
    return positions, velocities


# --- Test-function dictionary ---

def frequency_grid(size: Optional[int] = None) -> np.ndarray:
    """
    The fixed frequency grid {-2,-1,-0.5,0.5,1,2}^3, deterministically thinned to
    `size` vectors (evenly spaced in lexicographic order).
    """
    grid = np.array(list(itertools.product(FREQUENCY_LEVELS, repeat=3)), dtype=np.float64)
    if size is None or size >= len(grid):
        return grid
    if size < 1:
        raise EmptyRequest("frequency_grid")
    index = np.unique(np.round(np.linspace(0, len(grid) - 1, size)).astype(int))
    return grid[index]


def empirical_cf(values: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """Empirical characteristic function mean(exp(i lambda . z)) for each row of lambdas."""
    phase = np.asarray(values) @ np.atleast_2d(lambdas).T
    return np.mean(np.cos(phase), axis=0) + 1j * np.mean(np.sin(phase), axis=0)


def _moment_features(z: np.ndarray) -> np.ndarray:
    first = z / np.sqrt(1.0 + z * z)
    sq = 1.0 + np.sum(z * z, axis=1, keepdims=True)
    upper = [(k, l) for k in range(3) for l in range(k, 3)]
    second = np.stack([z[:, k] * z[:, l] for k, l in upper], axis=1) / sq
    return np.hstack([first, second])


def feature_matrix(positions: np.ndarray, velocities: np.ndarray, lambdas: np.ndarray) -> np.ndarray:
    """Every dictionary test function evaluated on every member; all entries lie in [-1, 1]."""
    zl = velocities @ lambdas.T
    xl = positions @ lambdas.T
    return np.hstack([np.cos(zl), np.sin(zl), np.cos(xl), np.sin(xl), _moment_features(velocities)])


# --- Distance ---

def _bootstrap_maxima(fa: np.ndarray, fb: np.ndarray, replicates: int, stream: RandomStream) -> np.ndarray:
    rng = stream.generator
    na, nb = len(fa), len(fb)
    maxima = np.empty(replicates)
    for k in range(replicates):
        wa = rng.multinomial(na, np.full(na, 1.0 / na)) / na
        wb = rng.multinomial(nb, np.full(nb, 1.0 / nb)) / nb
        maxima[k] = np.max(np.abs(wa @ fa - wb @ fb))
    return maxima


def _canonical(x: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Lexicographic member order, so statistics do not depend on how members are listed."""
    order = np.lexsort((z[:, 2], z[:, 1], z[:, 0], x[:, 2], x[:, 1], x[:, 0]))
    return x[order], z[order]


def _pair_order(fa: np.ndarray, fb: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Fixed order of the two feature blocks, so resampling draws do not depend on argument order."""
    if (len(fb), fb.tobytes()) < (len(fa), fa.tobytes()):
        return fb, fa
    return fa, fb


def _identical(a: Ensemble, b: Ensemble, xa, za, xb, zb) -> bool:
    if a is b:
        return True
    return xa.shape == xb.shape and np.array_equal(xa, xb) and np.array_equal(za, zb)


def law_distance(
    a: Ensemble,
    b: Ensemble,
    t: float,
    dictionary_size: Optional[int] = None,
    bootstrap_replicates: Optional[int] = None,
    bootstrap_seed: Optional[int] = None,
) -> LawDistance:
    """
    max over the fixed dictionary of |<a_t, phi> - <b_t, phi>|, with a bootstrap
    standard error of that maximum.
    """
    dictionary_size = dictionary_size or settings.DICTIONARY_SIZE
    lambdas = frequency_grid(dictionary_size)
    xa, za = marginal_arrays(a, t)
    xb, zb = marginal_arrays(b, t)
    family_size = 4 * len(lambdas) + 9
    if _identical(a, b, xa, za, xb, zb):
        return LawDistance(value=0.0, test_family_size=family_size, standard_error=0.0, time=t)

    fa = feature_matrix(*_canonical(xa, za), lambdas)
    fb = feature_matrix(*_canonical(xb, zb), lambdas)

    value = float(np.max(np.abs(fa.mean(axis=0) - fb.mean(axis=0))))
    stream = substream(
        settings.BOOTSTRAP_SEED if bootstrap_seed is None else bootstrap_seed,
        StreamPurpose.BOOTSTRAP,
    )
    maxima = _bootstrap_maxima(*_pair_order(fa, fb), bootstrap_replicates or settings.BOOTSTRAP_REPLICATES, stream)
    return LawDistance(
        value=value,
        test_family_size=family_size,
        standard_error=float(np.std(maxima, ddof=1)),
        time=t,
    )


# --- Resampling ---

def resample(e: Ensemble, count: int, stream: RandomStream) -> Ensemble:
    """Uniform draw of `count` members with replacement; the lineage records the stream."""
    if count <= 0:
        raise EmptyRequest("resample")
    index = stream.generator.integers(0, len(e), size=count)
    return Ensemble(
        kind=e.kind,
        members=tuple(e.members[i] for i in index),
        time_horizon=e.time_horizon,
        seed_lineage=e.seed_lineage + (stream.lineage_id,),
    )


def split_half(e: Ensemble) -> Tuple[Ensemble, Ensemble]:
    """Even- and odd-indexed members; two same-law halves for null distances."""
    if len(e) < 2:
        raise EmptyRequest("split_half")
    return (
        Ensemble(e.kind, e.members[0::2], e.time_horizon, e.seed_lineage),
        Ensemble(e.kind, e.members[1::2], e.time_horizon, e.seed_lineage),
    )


def second_moment(velocities: np.ndarray) -> Tuple[float, float]:
    """Sample mean of |Z|^2 and its standard error."""
    sq = np.sort(np.sum(velocities * velocities, axis=1))
    return float(sq.mean()), float(sq.std(ddof=1) / np.sqrt(len(sq)))
