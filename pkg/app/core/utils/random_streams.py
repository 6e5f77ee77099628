# core/utils/random_streams.py
"""Counter-based random substreams.

Every stream is a Philox generator keyed by (master_seed, purpose, index, ...).
Two streams with different keys never share draws, and a stream's draws do not
depend on how many other streams exist or on the order they are consumed in,
which is what makes runs reproducible across worker counts.
"""

from dataclasses import dataclass
from enum import IntEnum
from typing import Tuple

import numpy as np

__all__ = ["StreamPurpose", "RandomStream", "substream", "derive_seed"]


class StreamPurpose(IntEnum):
    INITIAL_STATE = 1
    PARTICLE_CLOCK = 2
    REPLICATE = 3
    PICARD_ITERATE = 4
    BOOTSTRAP = 5
    DIAGNOSTICS = 6
    RESAMPLE = 7


@dataclass(frozen=True)
class RandomStream:
    """A generator together with the key it was derived from."""
    master_seed: int
    key: Tuple[int, ...]
    generator: np.random.Generator

    @property
    def lineage_id(self) -> int:
        return derive_seed(self.master_seed, *self.key)


def _seed_sequence(master_seed: int, key: Tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


def substream(master_seed: int, *key: int) -> RandomStream:
    """Returns the Philox stream for (master_seed, *key)."""
    generator = np.random.Generator(np.random.Philox(_seed_sequence(master_seed, key)))
    return RandomStream(master_seed=int(master_seed), key=tuple(int(k) for k in key), generator=generator)


def derive_seed(master_seed: int, *key: int) -> int:
    """A 63-bit integer seed derived from (master_seed, *key); used for seed lineages."""
    state = _seed_sequence(master_seed, key).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))
