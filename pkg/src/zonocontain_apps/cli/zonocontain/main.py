import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import pydantic

from zonocontain.config.log import configure_logging
from zonocontain.models import (
    ContainmentError,
    ExperimentConfig,
    GapConfig,
    InvalidBody,
    LimitExceeded,
    NoWitnessFound,
    NumericalError,
    SparsificationMethod,
    WalkConfig,
    Zonotope,
    body_dimension,
)
from zonocontain.services import (
    Sparsifier,
    delta_of,
    enumerate_facet_normals,
    hit_and_run,
    hypercube_gap,
    normalize,
    norm_bracket,
    opt_containment_search,
    run_experiment,
    uniformity_diagnostics,
    volume,
)
from zonocontain.services.io import (
    dump_json,
    read_body,
    read_zonotope,
    write_points,
    write_points_csv,
    write_zonotope,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_WITNESS = 3

METHOD_NAMES: Dict[str, SparsificationMethod] = {
    "lewis": SparsificationMethod.LEWIS,
    "bss": SparsificationMethod.BSS,
    "delta": SparsificationMethod.DELTA_MODULAR,
    "delta_modular": SparsificationMethod.DELTA_MODULAR,
}


def _add_generators(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--generators",
        "--input",
        "--zonotope",
        "--matrix",
        dest="generators",
        type=str,
        required=True,
        help="CSV file of the d x n generator matrix, one row per line",
    )


def _add_gap_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--trials", type=int, help="Sign vectors per test (default min(1e4, 16 n'^2))"
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="Seed of the sign-vector stream"
    )
    parser.add_argument(
        "--epsilon",
        type=float,
        default=1.0 / 3.0,
        help="Sparsification accuracy, at most 1/3",
    )
    parser.add_argument(
        "--delta-modular",
        action="store_true",
        help="Treat the generator matrix as Delta-modular and sparsify by facet bands",
    )
    parser.add_argument(
        "--verify-delta",
        action="store_true",
        help="Confirm Delta-modularity with a determinant scan first",
    )


def _gap_config(args: argparse.Namespace) -> GapConfig:
    return GapConfig(
        trials=args.trials,
        seed=args.seed,
        sparsify_epsilon=args.epsilon,
        scale_override=getattr(args, "scale", None),
        delta_modular=args.delta_modular,
        verify_delta=args.verify_delta,
    )


def parse_arguments(args: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments for the zonocontain tool."""
    parser = argparse.ArgumentParser(
        prog="zonocontain",
        description="Containment tests, sparsification and sampling of convex bodies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Bodies are JSON documents (inline or a file path) with a "type" field:
    {"type": "hpoly", "normals": [[1, 0], [-1, 0], [0, 1], [0, -1]], "offsets": [1, 1, 1, 1]}
    {"type": "lp_ball", "p": 2, "radius": 1, "dim": 3}
    {"type": "ellipsoid", "shape": [[4, 0], [0, 1]]}
    {"type": "scaled", "inner": {...}, "factor": 2}
    {"type": "polar_of_zonotope", "generators": [[1, 0], [0, 1]]}
    {"type": "polar", "inner": {...}}

Exit codes:
    0 - success, or Contained
    1 - usage or validation error
    2 - numerical failure or size limit exceeded
    3 - Witness found

Environment Variables:
    ZONOCONTAIN_THREADS - worker threads of the experiment runner (default 1)

Examples:
    zonocontain contain --generators W.csv --body '{"type": "lp_ball", "p": 2, "radius": 3}'
    zonocontain opt --generators W.csv --body box.json --rel-tol 0.02
    zonocontain sparsify --input W.csv --method delta --epsilon 0.4 --output out.json
    zonocontain sample --body box.json --count 1000 --seed 1 > points.csv
    zonocontain experiment --config sweep.json
        """,
    )
    parser.add_argument(
        "--log-level",
        type=str,
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Verbosity of the log written to stderr",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    contain = commands.add_parser(
        "contain", help="Hypercube-sampling gap test of Z in Q"
    )
    _add_generators(contain)
    contain.add_argument("--body", type=str, required=True, help="Outer body Q as JSON")
    contain.add_argument(
        "--scale", type=float, help="Test factor replacing 2 sqrt(n'/ln n')"
    )
    _add_gap_options(contain)

    opt = commands.add_parser("opt", help="Bracket the largest alpha with alpha Z in Q")
    _add_generators(opt)
    opt.add_argument("--body", type=str, required=True, help="Outer body Q as JSON")
    opt.add_argument(
        "--rel-tol",
        "--rtol",
        dest="rel_tol",
        type=float,
        default=0.05,
        help="Relative bracket tolerance",
    )
    opt.add_argument("--max-tests", type=int, default=200, help="Cap on gap tests")
    opt.add_argument(
        "--strict",
        action="store_true",
        help="Fail when no witness bounds the bracket above",
    )
    _add_gap_options(opt)

    norm = commands.add_parser(
        "norm", help="Bracket the inf -> p operator norm of a matrix"
    )
    _add_generators(norm)
    norm.add_argument(
        "--p",
        "--to",
        dest="p",
        type=float,
        required=True,
        help="Target norm exponent, p >= 1",
    )
    norm.add_argument(
        "--rel-tol", type=float, default=0.05, help="Relative bracket tolerance"
    )
    _add_gap_options(norm)

    sparsify = commands.add_parser("sparsify", help="Reweighted column subset of W")
    _add_generators(sparsify)
    sparsify.add_argument(
        "--method",
        type=str,
        choices=list(METHOD_NAMES),
        default=SparsificationMethod.LEWIS.value,
        help="Sparsification method; delta is short for delta_modular",
    )
    sparsify.add_argument(
        "--epsilon", type=float, required=True, help="Accuracy epsilon"
    )
    sparsify.add_argument(
        "--seed", type=int, default=0, help="Seed of the Lewis sampler"
    )
    sparsify.add_argument("--delta", type=float, help="Delta of a Delta-modular matrix")
    sparsify.add_argument(
        "--output", type=str, help="Write the sparsification result as JSON"
    )
    sparsify.add_argument(
        "--generators-output",
        type=str,
        help="Write the reweighted generators as CSV with a .meta.json sidecar",
    )

    sample = commands.add_parser("sample", help="Hit-and-run samples of a body")
    sample.add_argument("--body", type=str, required=True, help="Body as JSON")
    sample.add_argument("--dim", type=int, help="Dimension of dimension-free bodies")
    sample.add_argument("--count", type=int, required=True, help="Number of points")
    sample.add_argument("--seed", type=int, default=0, help="Seed of the chain")
    sample.add_argument(
        "--burn-in", type=int, help="Discarded steps (default 1000 + 50 d)"
    )
    sample.add_argument("--thin", type=int, help="Steps per kept point (default 2 d)")
    sample.add_argument(
        "--output",
        type=str,
        help="Write the points as CSV; without it the CSV goes to stdout",
    )
    sample.add_argument(
        "--diagnostics", action="store_true", help="Report uniformity statistics"
    )

    volume_cmd = commands.add_parser("volume", help="Exact volume of Z")
    _add_generators(volume_cmd)

    facets = commands.add_parser("facets", help="Facet normals of Z")
    _add_generators(facets)
    facets.add_argument(
        "--output",
        type=str,
        help="Write the normals as columns of a d x m CSV plus a .meta.json sidecar",
    )

    delta = commands.add_parser("delta", help="Scan the d x d subdeterminants of W")
    _add_generators(delta)

    normalize_cmd = commands.add_parser("normalize", help="Whiten and split Z")
    _add_generators(normalize_cmd)
    normalize_cmd.add_argument(
        "--output",
        type=str,
        help="Write the normalized generators as CSV with a .meta.json sidecar",
    )

    experiment = commands.add_parser("experiment", help="Run an experiment grid")
    experiment.add_argument(
        "--config", type=str, required=True, help="ExperimentConfig JSON file"
    )
    experiment.add_argument(
        "--output", type=str, help="Override output_path of the config"
    )

    return parser.parse_args(args)


def _emit(payload: Any) -> None:
    print(dump_json(payload))


def _run_contain(args: argparse.Namespace) -> int:
    zonotope = read_zonotope(args.generators)
    verdict = hypercube_gap(zonotope, read_body(args.body), _gap_config(args))
    _emit(verdict.to_dict())
    return EXIT_WITNESS if verdict.is_witness else EXIT_OK


def _run_opt(args: argparse.Namespace) -> int:
    zonotope = read_zonotope(args.generators)
    bracket = opt_containment_search(
        zonotope,
        read_body(args.body),
        _gap_config(args),
        rel_tol=args.rel_tol,
        max_tests=args.max_tests,
        strict=args.strict,
    )
    _emit(bracket.to_dict())
    return EXIT_OK


def _run_norm(args: argparse.Namespace) -> int:
    zonotope = read_zonotope(args.generators)
    bracket = norm_bracket(zonotope.generators, args.p, _gap_config(args), args.rel_tol)
    _emit(bracket.to_dict())
    return EXIT_OK


def _run_sparsify(args: argparse.Namespace) -> int:
    zonotope = read_zonotope(args.generators)
    sparsifier = Sparsifier.create(
        METHOD_NAMES[args.method], seed=args.seed, delta=args.delta
    )
    result = sparsifier.sparsify(zonotope.generators, args.epsilon)
    payload = result.to_dict()
    if args.output:
        Path(args.output).write_text(dump_json(payload) + "\n", encoding="utf-8")
    if args.generators_output:
        reweighted = Zonotope.from_matrix(result.generators(zonotope.generators))
        write_zonotope(args.generators_output, reweighted)
    _emit(payload)
    return EXIT_OK


def _run_sample(args: argparse.Namespace) -> int:
    body = read_body(args.body)
    dim = args.dim or body_dimension(body)
    if dim is None:
        raise InvalidBody("Pass --dim for a body without a fixed dimension")
    defaults = WalkConfig.defaults(dim, seed=args.seed)
    walk = WalkConfig(
        burn_in=args.burn_in if args.burn_in is not None else defaults.burn_in,
        thin=args.thin if args.thin is not None else defaults.thin,
        seed=args.seed,
    )
    points = hit_and_run(body, None, args.count, walk, dim=dim)
    payload: Dict[str, Any] = {
        "count": int(points.shape[0]),
        "dim": int(points.shape[1]),
    }
    if args.diagnostics:
        report = uniformity_diagnostics(points, body)
        payload["diagnostics"] = {
            "mean": report.mean.tolist(),
            "variance": report.variance.tolist(),
            "symmetry": report.symmetry,
            "membership_pass_rate": report.membership_pass_rate,
        }
    if not args.output:
        # stdout carries the CSV; the summary moves to stderr
        write_points(sys.stdout, points)
        if args.diagnostics:
            print(dump_json(payload), file=sys.stderr)
        return EXIT_OK
    write_points_csv(args.output, points)
    payload["output"] = args.output
    _emit(payload)
    return EXIT_OK


def _run_volume(args: argparse.Namespace) -> int:
    zonotope = read_zonotope(args.generators)
    _emit({"d": zonotope.dim, "n": zonotope.count, "volume": volume(zonotope)})
    return EXIT_OK


def _run_facets(args: argparse.Namespace) -> int:
    normals = enumerate_facet_normals(read_zonotope(args.generators))
    if args.output:
        write_zonotope(args.output, Zonotope.from_matrix(normals.T))
    _emit({"count": int(normals.shape[0]), "normals": normals.tolist()})
    return EXIT_OK


def _run_delta(args: argparse.Namespace) -> int:
    report = delta_of(read_zonotope(args.generators).generators)
    _emit(report.to_dict())
    return EXIT_OK


def _run_normalize(args: argparse.Namespace) -> int:
    result = normalize(read_zonotope(args.generators))
    if args.output:
        write_zonotope(args.output, result.normalized)
    _emit(result.to_dict())
    return EXIT_OK


def _run_experiment(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.output:
        raw["output_path"] = args.output
    config = ExperimentConfig.model_validate(raw)
    records = run_experiment(config)
    failed = sum(1 for r in records if r.error is not None)
    _emit({"records": len(records), "failed": failed, "output": config.output_path})
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "contain": _run_contain,
    "opt": _run_opt,
    "norm": _run_norm,
    "sparsify": _run_sparsify,
    "sample": _run_sample,
    "volume": _run_volume,
    "facets": _run_facets,
    "delta": _run_delta,
    "normalize": _run_normalize,
    "experiment": _run_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the zonocontain CLI.

    Returns:
        Exit code (0 success or Contained, 1 usage, 2 numerical, 3 Witness)
    """
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, LimitExceeded, NoWitnessFound) as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContainmentError as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (pydantic.ValidationError, OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


# Allow direct script execution and entry point invocation
if __name__ == "__main__":
    sys.exit(main())
