import numpy as np


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    Counter-based generator for the stream identified by ``keys`` under ``seed``.

    The same (seed, keys) always yields the same stream, independent of the
    order in which streams are created.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


def random_signs(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Uniform matrix of +-1 entries."""
    bits = rng.integers(0, 2, size=(rows, cols), dtype=np.int8)
    return bits.astype(float) * 2.0 - 1.0
