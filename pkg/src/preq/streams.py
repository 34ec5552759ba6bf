"""Seeded random substreams.

Every ensemble is cut into fixed-size chunks; chunk ``k`` draws from its own
generator derived from ``(seed, purpose, k)``.  Results therefore depend only
on the seed and the sample count, never on how chunks are scheduled over
workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 8192
SEED_MAX = 2**64 - 1

# purposes keep draws for different tasks independent under one seed
SAMPLES = 0
PATHS = 1


def check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= int(seed) <= SEED_MAX:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def substream(seed: int, purpose: int, k: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(purpose, k))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(N: int, chunk: int = CHUNK) -> list[int]:
    full, rest = divmod(N, chunk)
    return [chunk] * full + ([rest] if rest else [])


def normal_pairs(rng: np.random.Generator, shape) -> np.ndarray:
    """Complex array whose real and imaginary parts are independent standard
    normals (``E|z|^2 = 2``); a zero-copy view of the drawn floats."""
    pairs = rng.standard_normal(tuple(shape) + (2,))
    return pairs.view(np.complex128)[..., 0]


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric standard complex normals, ``E|z|^2 = 1``."""
    return normal_pairs(rng, shape) / math.sqrt(2.0)


def map_chunks(fn, items, workers: int = 1) -> list:
    """``[fn(k, item) for k, item in enumerate(items)]``, optionally threaded.

    Output order is the input order regardless of ``workers``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(k, item) for k, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(items)), items))
