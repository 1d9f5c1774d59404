"""
Experiment grids over (d, seed, instance).

Every cell derives its randomness from derive_rng(seed, d, instance), so the CSV is
the same whatever the thread count or completion order.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config.settings import get_settings
from ..models.bodies import HPolyBody, LpBallBody
from ..models.exceptions import ContainmentError
from ..models.experiment import ExperimentConfig, ExperimentRecord, Scenario
from ..models.results import ContainmentVerdict, GapConfig, WalkConfig, Witness
from ..models.wire import WitnessLineDict
from ..models.zonotope import HPolytope, Zonotope
from . import geometry
from .containment import (
    body_outradius,
    hypercube_gap,
    naszodi_gap,
    polar_reduction_check,
    recommended_T,
    split_generator_stress,
    verify_witness,
)
from .generators import gen_random_zonotope
from .io import write_records_csv, write_witnesses_jsonl
from .oracles import support
from .seeding import derive_rng
from .sparsify import sparsify_delta_modular, verify_sandwich

logger = logging.getLogger(__name__)

POLAR_RADIUS_MULTIPLIERS = (0.9, 1.0, 1.5)
POLAR_DIRECTIONS = 256


@dataclass(frozen=True)
class Cell:
    d: int
    seed: int
    instance: int

    @property
    def stream_seed(self) -> int:
        """Root seed of everything random in this cell."""
        return int(derive_rng(self.seed, self.d, self.instance).integers(2**63))


@dataclass(frozen=True)
class CellOutcome:
    record: ExperimentRecord
    witness: Optional[WitnessLineDict] = None


def _blank_record(cfg: ExperimentConfig, cell: Cell) -> ExperimentRecord:
    return ExperimentRecord(
        scenario=cfg.scenario.value,
        d=cell.d,
        n=None,
        n_sparsified=None,
        seed=cell.seed,
        instance=cell.instance,
        verdict=None,
        gauge_bound=None,
        exact_alpha=None,
        membership_queries=None,
        wall_time_ms=None,
    )


def _verdict_outcome(
    cfg: ExperimentConfig,
    cell: Cell,
    verdict: ContainmentVerdict,
    n: int,
    alpha: float,
    certify: Optional[Tuple[Zonotope, HPolyBody]] = None,
) -> CellOutcome:
    """
    Turn a verdict into a CSV row and, for witnesses, a JSONL line.

    With ``certify = (Z, Q)`` every witness is re-checked against Q and the exact
    gauge of Z; a failed re-check is logged and kept in the line as verified=false.
    """
    record = replace(
        _blank_record(cfg, cell),
        n=n,
        n_sparsified=verdict.n_sparsified,
        verdict="witness" if verdict.is_witness else "contained",
        gauge_bound=verdict.gauge_bound,
        exact_alpha=alpha,
        membership_queries=verdict.queries,
    )
    witness: Optional[WitnessLineDict] = None
    if isinstance(verdict, Witness):
        verified: Optional[bool] = None
        exact_gauge: Optional[float] = None
        if certify is not None:
            verified, exact_gauge = verify_witness(*certify, verdict)
            if not verified:
                logger.warning(
                    "Witness of cell d=%d seed=%d instance=%d failed its re-check "
                    "(gauge %.6g, bound %.6g)",
                    cell.d,
                    cell.seed,
                    cell.instance,
                    exact_gauge,
                    verdict.gauge_bound,
                )
        witness = {
            "scenario": cfg.scenario.value,
            "d": cell.d,
            "seed": cell.seed,
            "instance": cell.instance,
            "point": verdict.point.tolist(),
            "gauge_bound": verdict.gauge_bound,
            "trial_index": verdict.trial_index,
            "verified": verified,
            "exact_gauge": exact_gauge,
        }
    return CellOutcome(record=record, witness=witness)


def _outer_polytope(cfg: ExperimentConfig, dim: int) -> HPolytope:
    if isinstance(cfg.body, HPolyBody) and cfg.body.dim == dim:
        return cfg.body.polytope()
    return HPolytope.box(dim)


def _scaled_to_alpha(
    inner_support: Callable[[np.ndarray], float], outer: HPolytope, target: float
) -> Tuple[HPolyBody, float]:
    """Rescale Q so that max{alpha : alpha K <= Q} equals ``target``."""
    alpha = geometry.exact_opt_containment(inner_support, outer, strict=True)
    scaled = outer.scaled(target / alpha)
    return HPolyBody.from_polytope(scaled), target


def _instance(cfg: ExperimentConfig, cell: Cell) -> Zonotope:
    return gen_random_zonotope(
        cell.d,
        cfg.generators_per_dim * cell.d,
        cfg.generator_family,
        cell.stream_seed,
        cfg.explicit_path,
    )


def _hypercube_gap_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    zonotope = _instance(cfg, cell)
    outer, alpha = _scaled_to_alpha(
        zonotope.support, _outer_polytope(cfg, cell.d), cfg.target_alpha
    )
    gap = GapConfig(
        trials=cfg.trials, seed=cell.stream_seed, sparsify_epsilon=cfg.epsilon
    )
    verdict = hypercube_gap(zonotope, outer, gap)
    return _verdict_outcome(
        cfg, cell, verdict, zonotope.count, alpha, certify=(zonotope, outer)
    )


def _delta_modular_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    zonotope = _instance(cfg, cell)
    W = zonotope.generators
    result = sparsify_delta_modular(W, cfg.epsilon)
    low, high = verify_sandwich(W, result, geometry.enumerate_facet_normals(zonotope))
    outer, alpha = _scaled_to_alpha(
        zonotope.support, _outer_polytope(cfg, cell.d), cfg.target_alpha
    )
    gap = GapConfig(
        trials=cfg.trials,
        seed=cell.stream_seed,
        sparsify_epsilon=min(cfg.epsilon, 1.0 / 3.0),
        delta_modular=True,
    )
    verdict = hypercube_gap(zonotope, outer, gap)
    outcome = _verdict_outcome(
        cfg, cell, verdict, zonotope.count, alpha, certify=(zonotope, outer)
    )
    record = replace(
        outcome.record,
        metric=high,
        detail=(
            f"sandwich_min={low!r};sandwich_max={high!r};"
            f"lower={result.lower_factor!r};upper={result.upper_factor!r};"
            f"size={result.size}"
        ),
    )
    return CellOutcome(record=record, witness=outcome.witness)


def _random_symmetric_polytope(
    dim: int, facets: int, rng: np.random.Generator
) -> HPolytope:
    normals = rng.standard_normal((facets, dim))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return HPolytope.symmetric(normals, np.ones(facets))


def _naszodi_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    rng = derive_rng(cell.stream_seed)
    facets = cfg.generators_per_dim * cell.d
    inner = HPolyBody.from_polytope(_random_symmetric_polytope(cell.d, facets, rng))
    outer, alpha = _scaled_to_alpha(
        lambda a: support(inner, a),
        _outer_polytope(cfg, cell.d),
        cfg.target_alpha * cfg.s,
    )
    trials = cfg.trials or recommended_T(cell.d, cfg.s)
    walk = WalkConfig.defaults(cell.d, seed=cell.stream_seed)
    verdict = naszodi_gap(inner, outer, cfg.s, trials, walk, dim=cell.d)
    # n counts facet pairs {|a_j . x| <= 1}, not the 2n stored half-spaces
    return _verdict_outcome(cfg, cell, verdict, facets, alpha)


def _volume_ratio_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    zonotope = _instance(cfg, cell)
    rng = derive_rng(cell.stream_seed)
    directions = geometry.random_unit_directions(rng, cfg.hull_points, cell.d)
    points = np.vstack([geometry.extreme_point(zonotope, u)[0] for u in directions])
    exact = geometry.volume(zonotope)
    sampled = geometry.hull_volume(points)
    ratio = (sampled / exact) ** (1.0 / cell.d)
    record = replace(
        _blank_record(cfg, cell),
        n=zonotope.count,
        metric=ratio,
        detail=(
            f"hull_volume={sampled!r};volume={exact!r};hull_points={cfg.hull_points}"
        ),
    )
    return CellOutcome(record=record)


def _stress_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    n = cfg.generators_per_dim * cell.d
    result = split_generator_stress(cell.d, n, cfg.s, cfg.samples, cell.stream_seed)
    record = replace(
        _blank_record(cfg, cell),
        n=n,
        metric=result.empirical,
        detail=f"hoeffding_bound={result.hoeffding_bound!r};stderr={result.stderr!r}",
    )
    return CellOutcome(record=record)


def _polar_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    body = cfg.body
    assert body is not None
    if isinstance(body, LpBallBody) and body.dim is None:
        body = body.model_copy(update={"dim": cell.d})
    outradius = body_outradius(body, cell.d)
    passed = 0
    parts: List[str] = []
    for multiplier in POLAR_RADIUS_MULTIPLIERS:
        report = polar_reduction_check(
            body, multiplier * outradius, POLAR_DIRECTIONS, cell.stream_seed, dim=cell.d
        )
        passed += int(report.equivalence_holds)
        parts.append(
            f"r={multiplier!r}:contained={str(report.containment_holds).lower()}"
            f":equivalent={str(report.equivalence_holds).lower()}"
        )
    record = replace(
        _blank_record(cfg, cell),
        verdict="pass" if passed == len(POLAR_RADIUS_MULTIPLIERS) else "fail",
        metric=outradius,
        detail=";".join(parts),
    )
    return CellOutcome(record=record)


_SCENARIOS: Dict[Scenario, Callable[[ExperimentConfig, Cell], CellOutcome]] = {
    Scenario.HYPERCUBE_GAP_SWEEP: _hypercube_gap_cell,
    Scenario.DELTA_MODULAR_SWEEP: _delta_modular_cell,
    Scenario.NASZODI_SWEEP: _naszodi_cell,
    Scenario.VOLUME_RATIO: _volume_ratio_cell,
    Scenario.STRESS_SPLIT: _stress_cell,
    Scenario.POLAR_CHECK: _polar_cell,
}


def run_cell(cfg: ExperimentConfig, cell: Cell) -> CellOutcome:
    """Run one grid cell; library errors are recorded in the row."""
    started = time.perf_counter()
    try:
        outcome = _SCENARIOS[cfg.scenario](cfg, cell)
    except ContainmentError as e:
        logger.warning(
            "Cell d=%d seed=%d instance=%d failed: %s",
            cell.d,
            cell.seed,
            cell.instance,
            e,
        )
        outcome = CellOutcome(
            record=replace(_blank_record(cfg, cell), error=f"{type(e).__name__}: {e}")
        )
    if cfg.record_timings:
        elapsed = (time.perf_counter() - started) * 1000.0
        outcome = replace(outcome, record=replace(outcome.record, wall_time_ms=elapsed))
    return outcome


def grid(cfg: ExperimentConfig) -> List[Cell]:
    return [
        Cell(d=d, seed=seed, instance=k)
        for d in cfg.dims
        for seed in cfg.seeds
        for k in range(cfg.instances)
    ]


def run_experiment(cfg: ExperimentConfig) -> List[ExperimentRecord]:
    """
    Execute the scenario over the (dims x seeds x instances) grid and write the CSV.

    Witness points go to ``<output stem>.witnesses.jsonl`` next to the CSV.

    Returns:
        List[ExperimentRecord]: records sorted by (d, seed, instance)
    """
    cells = grid(cfg)
    threads = get_settings().threads
    logger.info(
        "Running %s over %d cells on %d thread(s)",
        cfg.scenario.value,
        len(cells),
        threads,
    )
    if threads == 1:
        outcomes = [run_cell(cfg, cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            futures = [executor.submit(run_cell, cfg, cell) for cell in cells]
            outcomes = [future.result() for future in futures]

    outcomes.sort(key=lambda o: o.record.sort_key)
    records = [o.record for o in outcomes]
    write_records_csv(cfg.output_path, records)
    witnesses = [o.witness for o in outcomes if o.witness is not None]
    write_witnesses_jsonl(cfg.output_path, witnesses)
    return records
