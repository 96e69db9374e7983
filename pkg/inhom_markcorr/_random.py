import zlib
from typing import Tuple, Union

import numpy as np

Key = Union[int, str]


def _as_int(key: Key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"seed keys must be non-negative, got {key}")
    return int(key)


def seed_key(*keys: Key) -> Tuple[int, ...]:
    """Integer spawn key for a derivation path like ("envelope", "perm", 17)."""
    return tuple(_as_int(k) for k in keys)


def derive_rng(seed: int, *keys: Key) -> np.random.Generator:
    """Counter-based generator for one stream of a run.

    The stream depends only on ``seed`` and ``keys``, never on how many
    other streams were drawn before it.
    """
    sequence = np.random.SeedSequence(entropy=_as_int(seed), spawn_key=seed_key(*keys))
    return np.random.Generator(np.random.Philox(sequence))
