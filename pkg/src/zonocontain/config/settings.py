"""Repository-wide constants and environment-derived settings."""

import os
from dataclasses import dataclass

MEMBERSHIP_TOL = 1e-9
TIE_TOL = 1e-12
GAUGE_TOL = 1e-9
ZERO_PRODUCT_TOL = 1e-9
DELTA_LOWER_TOL = 1e-9
NONSINGULAR_REL_TOL = 1e-9
EIGEN_REL_FLOOR = 1e-12

LP_MAX_ITER = 100_000
LEWIS_TOL = 1e-8
LEWIS_MAX_ITER = 500
NORMALIZE_MAX_ITER = 64
NORMALIZE_FROB_TOL = 1e-8

# Lewis sample count m = ceil(C_L * d * log(d / eps) / eps^2).
LEWIS_SAMPLING_CONSTANT = 8.0
# BSS output size cap nnz <= ceil(C_B * d / eps^2).
BSS_SIZE_CONSTANT = 16.0
# Sample budget T = ceil(C_N * d * (1 - 1/s)^-d * max(1, log(1 / (1 - 1/s)))).
NASZODI_CONSTANT = 4.0

VERTEX_GENERATOR_LIMIT = 24
SUBSET_LIMIT = 1_000_000
WEIGHTED_COLUMN_CAP = 100_000
GAUGE_CERTIFY_MAX_GENERATORS = 512

WALK_BURN_IN_BASE = 1000
WALK_BURN_IN_PER_DIM = 50
WALK_CHORD_REL_TOL = 1e-9
WALK_BISECTION_ROUNDS = 60

GAP_DEFAULT_EPSILON = 1.0 / 3.0
GAP_MAX_TRIALS = 10_000
GAP_TRIALS_PER_SQUARED_GENERATOR = 16

POLAR_ROUNDNESS_SAFETY = 4.0
POLAR_ROUNDNESS_DIRECTIONS = 2048
# R / r above this is reported as ill-rounded.
ILL_ROUNDED_RATIO = 1e4
WALK_START_MARGIN = 1e-6

THREADS_ENV_VAR = "ZONOCONTAIN_THREADS"


@dataclass(frozen=True)
class Settings:
    """Settings that may vary between runs of the same code."""

    threads: int = 1

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ValueError("Thread count must be at least 1")


def get_settings() -> Settings:
    """Build settings from the environment."""
    raw = os.getenv(THREADS_ENV_VAR)
    if raw is None or not raw.strip():
        return Settings()
    try:
        threads = int(raw)
    except ValueError as e:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got '{raw}'") from e
    return Settings(threads=threads)
