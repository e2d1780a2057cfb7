from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .characterization import CandidateG, characterize
from .config import DEFAULT_TOLERANCE, RunConfig, Settings, configure_logging, parse_vector, parse_vector_list
from .errors import DimensionError, EquimidError, ExpressionSyntaxError
from .fields import MinField, ScalarField, parse
from .geometry import EpigraphFocal, SearchBox, lipschitz_check, random_pairs
from .hyperboloid import golden_G, hyperboloid_field, hyperboloid_y, x_inverse_1d
from .parametric import EquidistantParameterization, ParamValidationInput, validate_parameterization
from .presentation import Table, map_ordered, render_report, report_json, write_table
from .solver import EquidistantFunction, convexity_check, min_compose, monotonicity_check, random_triples

logger = logging.getLogger("equimid.app")

CHECK_KINDS = (
    "lipschitz",
    "min-compose",
    "monotonicity",
    "convexity",
    "jacobian",
    "parameterization",
    "envelope",
    "characterization",
)
# flags whose value may legitimately start with "-" (ranges, expressions, vectors)
VALUE_FLAGS = frozenset({"--f", "--f2", "--G", "--x", "--y", "--range", "--t", "--probes", "--directions"})
DEFAULT_GOLDEN_RANGE = "-8:8:201"
DEFAULT_CHECK_TOLERANCE = 1e-7
DEFAULT_RANDOM_COUNT = 200
DEFAULT_SEED = 0


def normalize_argv(argv: Sequence[str]) -> List[str]:
    """Glue ``--range -4:4:101`` into ``--range=-4:4:101`` so argparse keeps the value."""
    normalized: List[str] = []
    index = 0
    while index < len(argv):
        token = argv[index]
        if token in VALUE_FLAGS and index + 1 < len(argv) and argv[index + 1].startswith(("-", "−")):
            normalized.append(f"{token}={argv[index + 1]}")
            index += 2
            continue
        normalized.append(token)
        index += 1
    return normalized


def _settings() -> Settings:
    return Settings.from_env()


def _generating_field(expressions: Sequence[str], dimension: int) -> ScalarField:
    if not expressions:
        raise ValueError("At least one --f expression is required")
    fields = [parse(source, dimension) for source in expressions]
    return fields[0] if len(fields) == 1 else MinField(fields)


def _axis_names(prefix: str, dimension: int) -> List[str]:
    return [f"{prefix}{i + 1}" for i in range(dimension)]


def _emit_table(table: Table, config: RunConfig) -> None:
    write_table(table, config.output_format, path=config.output_path, stream=sys.stdout)


def sample_command(args: argparse.Namespace) -> None:
    config = RunConfig.from_args(args, _settings())
    grid = config.grid()
    n = config.dimension

    if config.mode == "golden":
        values = map_ordered(golden_G, list(grid), config.threads)
        table = Table(_axis_names("x", n) + ["G"], [grid[:, i] for i in range(n)] + [np.array(values)])
    elif config.mode == "bisect":
        G = EquidistantFunction.by_bisection(_generating_field(config.expressions, n), tolerance=config.tolerance)
        values = map_ordered(G, list(grid), config.threads)
        table = Table(_axis_names("x", n) + ["G"], [grid[:, i] for i in range(n)] + [np.array(values)])
    else:
        if len(config.expressions) != 1:
            raise ValueError("Parametric mode takes exactly one --f expression")
        field = parse(config.expressions[0], n)
        parameterization = EquidistantParameterization(field)
        points = map_ordered(parameterization.param_point, list(grid), config.threads)
        xs = np.array([point[0] for point in points]).reshape(-1, n)
        ys = np.array([point[1] for point in points])
        heights = field.values(grid)
        table = Table(
            _axis_names("t", n) + ["f"] + _axis_names("x", n) + ["y"],
            [grid[:, i] for i in range(n)] + [heights] + [xs[:, i] for i in range(n)] + [ys],
        )
    logger.info("Sampled %d point(s) in %s mode", table.row_count, config.mode)
    _emit_table(table, config)


def _point_argument(raw: Optional[str], dimension: int, flag: str) -> np.ndarray:
    if not raw:
        raise ValueError(f"{flag} is required for this check")
    point = parse_vector(raw)
    if point.shape[0] != dimension:
        raise DimensionError(f"{flag} has {point.shape[0]} component(s), expected {dimension}")
    return point


def _check_lipschitz(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    field = _generating_field(config.expressions, config.dimension)
    box = SearchBox([spec.minimum for spec in config.ranges], [spec.maximum for spec in config.ranges])
    ceiling = 1.5 * float(np.max(field.values(config.grid())))
    pairs = random_pairs(box, (0.0, ceiling), args.count, seed=args.seed)
    return lipschitz_check(EpigraphFocal(field), pairs).to_mapping()


def _check_min_compose(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    fields = [parse(source, config.dimension) for source in config.expressions]
    if not fields:
        raise ValueError("At least one --f expression is required")
    members = [EquidistantFunction.by_bisection(f, tolerance=config.tolerance) for f in fields]
    combined = EquidistantFunction.by_bisection(MinField(fields), tolerance=config.tolerance)
    points = list(config.grid())
    differences = map_ordered(lambda x: abs(combined(x) - min_compose(members, x)), points, config.threads)
    worst = int(np.argmax(differences))
    return {
        "check": "min-compose",
        "passed": bool(differences[worst] <= args.check_tol),
        "samples_checked": len(points),
        "max_difference": float(differences[worst]),
        "worst_sample": points[worst].tolist(),
        "tolerance": args.check_tol,
    }


def _check_monotonicity(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    if not args.f2:
        raise ValueError("--f2 is required for the monotonicity check")
    first = _generating_field(config.expressions, config.dimension)
    second = parse(args.f2, config.dimension)
    return monotonicity_check(first, second, list(config.grid()), solver_tolerance=config.tolerance).to_mapping()


def _check_convexity(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    G = EquidistantFunction.by_bisection(
        _generating_field(config.expressions, config.dimension), tolerance=config.tolerance
    )
    spec = config.ranges[0]
    triples = random_triples(spec.minimum, spec.maximum, config.dimension, args.count, seed=args.seed)
    return convexity_check(G, triples).to_mapping()


def _parameterization(config: RunConfig) -> EquidistantParameterization:
    if len(config.expressions) != 1:
        raise ValueError("Exactly one --f expression is required for this check")
    return EquidistantParameterization(parse(config.expressions[0], config.dimension))


def _check_jacobian(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    parameterization = _parameterization(config)
    t = _point_argument(args.t, config.dimension, "--t")
    directions = parse_vector_list(args.directions) if args.directions else list(np.eye(config.dimension))
    return parameterization.jacobian_bound_check(t, directions).to_mapping()


def _check_parameterization(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    samples = list(config.grid())
    if args.x or args.y:
        if not (args.x and args.y):
            raise ValueError("--x and --y must be given together")
        data = ParamValidationInput.from_expressions(args.x, args.y, config.dimension, samples)
    else:
        data = ParamValidationInput.from_parameterization(_parameterization(config), samples)
    return validate_parameterization(data).to_mapping()


def _check_envelope(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    parameterization = _parameterization(config)
    t = _point_argument(args.t, config.dimension, "--t")
    if not args.probes:
        raise ValueError("--probes is required for the envelope check")
    if config.dimension == 1:
        probes = [np.array([value]) for value in parse_vector(args.probes)]
    else:
        probes = parse_vector_list(args.probes)
    return parameterization.envelope_check(t, probes).to_mapping()


def _check_characterization(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    if not args.G:
        raise ValueError("--G is required for the characterization check")
    candidate = CandidateG(parse(args.G, config.dimension), list(config.grid()))
    return characterize(candidate).to_mapping()


CHECKS: Dict[str, Callable[[argparse.Namespace, RunConfig], Dict[str, Any]]] = {
    "lipschitz": _check_lipschitz,
    "min-compose": _check_min_compose,
    "monotonicity": _check_monotonicity,
    "convexity": _check_convexity,
    "jacobian": _check_jacobian,
    "parameterization": _check_parameterization,
    "envelope": _check_envelope,
    "characterization": _check_characterization,
}


def check_command(args: argparse.Namespace) -> None:
    config = RunConfig.from_args(args, _settings())
    report = CHECKS[args.kind](args, config)
    if args.json:
        print(report_json(report))
    else:
        print(render_report(report))
    if config.output_path is not None:
        config.output_path.parent.mkdir(parents=True, exist_ok=True)
        config.output_path.write_text(report_json(report) + "\n", encoding="utf-8")
    if not report.get("passed"):
        logger.error("Check %s failed", args.kind)
        raise SystemExit(1)


def golden_command(args: argparse.Namespace) -> None:
    if not args.range:
        args.range = [DEFAULT_GOLDEN_RANGE]
    config = RunConfig.from_args(args, _settings())
    n = config.dimension
    grid = config.grid()
    rows = list(grid)

    golden = np.array(map_ordered(golden_G, rows, config.threads))
    radial = np.array([hyperboloid_y([x_inverse_1d(float(np.linalg.norm(s)))]) for s in rows])
    field = hyperboloid_field(n)
    parametric = EquidistantFunction.by_parameterization(EquidistantParameterization(field))
    header = _axis_names("x", n) + ["G"]
    columns: List[np.ndarray] = [grid[:, i] for i in range(n)] + [golden]
    if not args.no_bisect:
        bisection = EquidistantFunction.by_bisection(field, tolerance=config.tolerance)
        header.append("err_bisect")
        columns.append(np.abs(golden - np.array(map_ordered(bisection, rows, config.threads))))
    header += ["err_parametric", "radial_dev"]
    columns += [np.abs(golden - np.array(map_ordered(parametric, rows, config.threads))), np.abs(golden - radial)]
    table = Table(header, columns)
    for name in header[n + 1 :]:
        logger.info("max %s = %.3e", name, float(np.max(table.column(name))))
    _emit_table(table, config)


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=1, help="Dimension of the parameter space")
    parser.add_argument(
        "--range",
        action="append",
        default=None,
        help="Sampling axis MIN:MAX:COUNT; repeat once per axis or give one for all",
    )
    parser.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="Equidistance residual tolerance")
    parser.add_argument("--out", default=None, help="Output path (stdout when omitted)")
    parser.add_argument("--log-level", default=None, help="Override EQUIMID_LOG_LEVEL")
    parser.add_argument("--log-file", default=None, help="Also append log records to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="equimid", description="Equidistant sets of a hyperplane and the epigraph of a positive function"
    )
    parser.add_argument("-v", "--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command")

    sample_parser = subparsers.add_parser("sample", help="Sample G or the equidistant parameterization")
    _add_common_arguments(sample_parser)
    sample_parser.add_argument(
        "--f", action="append", default=None, help="Generating function; repeat for a min family"
    )
    sample_parser.add_argument("--mode", choices=("bisect", "parametric", "golden"), default="bisect")
    sample_parser.add_argument("--format", choices=("csv", "json"), default="csv")
    sample_parser.set_defaults(func=sample_command)

    check_parser = subparsers.add_parser("check", help="Run a property check and report pass/fail")
    check_parser.add_argument("kind", choices=CHECK_KINDS)
    _add_common_arguments(check_parser)
    check_parser.add_argument("--f", action="append", default=None, help="Generating function; repeat for a min family")
    check_parser.add_argument("--f2", default=None, help="Second field for the monotonicity check")
    check_parser.add_argument("--G", default=None, help="Candidate equidistant function")
    check_parser.add_argument("--x", action="append", default=None, help="Component of x(t); repeat per axis")
    check_parser.add_argument("--y", default=None, help="Height map y(t)")
    check_parser.add_argument("--t", default=None, help="Parameter point, comma separated")
    check_parser.add_argument("--probes", default=None, help="Probe parameters: '0,0.5,2' or '0,0;1,1'")
    check_parser.add_argument("--directions", default=None, help="Directions separated by ';'")
    check_parser.add_argument("--count", type=int, default=DEFAULT_RANDOM_COUNT, help="Random pairs or triples")
    check_parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    check_parser.add_argument(
        "--check-tol", type=float, default=DEFAULT_CHECK_TOLERANCE, help="Agreement tolerance for min-compose"
    )
    check_parser.add_argument("--json", action="store_true", help="Print the JSON report instead of text")
    check_parser.set_defaults(func=check_command)

    golden_parser = subparsers.add_parser("golden", help="Closed-form hyperboloid G with error columns")
    _add_common_arguments(golden_parser)
    golden_parser.add_argument("--format", choices=("csv", "json"), default="csv")
    golden_parser.add_argument("--no-bisect", action="store_true", help="Skip the bisection error column")
    golden_parser.set_defaults(func=golden_command)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> None:
    parser = build_parser()
    args = parser.parse_args(normalize_argv(list(sys.argv[1:] if argv is None else argv)))

    if not hasattr(args, "func"):
        parser.print_help()
        raise SystemExit(2)

    try:
        settings = _settings()
        configure_logging(args.log_level or settings.log_level, Path(args.log_file) if args.log_file else None)
        args.func(args)
    except (ExpressionSyntaxError, DimensionError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)
    except EquimidError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)
    except ValueError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)


if __name__ == "__main__":
    main()
