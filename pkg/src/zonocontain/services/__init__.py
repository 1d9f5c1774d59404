"""Services package."""

from .containment import (
    SamplingMode,
    anticoncentration_fraction,
    hypercube_gap,
    infinity_to_p_norm_exact,
    naszodi_gap,
    norm_bracket,
    opt_containment_search,
    polar_reduction_check,
    recommended_T,
    split_generator_stress,
)
from .experiments import run_experiment
from .generators import gen_random_zonotope
from .geometry import (
    delta_of,
    enumerate_facet_normals,
    enumerate_vertices,
    exact_opt_containment,
    extreme_point,
    facet_profile,
    gauge,
    mean_width_estimate,
    normalize,
    support_function,
    volume,
)
from .oracles import MembershipOracle, membership, roundness, support
from .sampler import hit_and_run, uniformity_diagnostics
from .sparsify import (
    Sparsifier,
    lewis_weights,
    sparsify_bss,
    sparsify_delta_modular,
    sparsify_lewis,
    split_weighted_columns,
    verify_sandwich,
)

__all__ = [
    "SamplingMode",
    "anticoncentration_fraction",
    "hypercube_gap",
    "infinity_to_p_norm_exact",
    "naszodi_gap",
    "norm_bracket",
    "opt_containment_search",
    "polar_reduction_check",
    "recommended_T",
    "split_generator_stress",
    "run_experiment",
    "gen_random_zonotope",
    "delta_of",
    "enumerate_facet_normals",
    "enumerate_vertices",
    "exact_opt_containment",
    "extreme_point",
    "facet_profile",
    "gauge",
    "mean_width_estimate",
    "normalize",
    "support_function",
    "volume",
    "MembershipOracle",
    "membership",
    "roundness",
    "support",
    "hit_and_run",
    "uniformity_diagnostics",
    "Sparsifier",
    "lewis_weights",
    "sparsify_bss",
    "sparsify_delta_modular",
    "sparsify_lewis",
    "split_weighted_columns",
    "verify_sandwich",
]
