"""Command-line interface for the monocluster expansion checks."""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np
from dotenv import load_dotenv
from pydantic import ValidationError

from .reports import ReportWriter
from ..config.loader import ConfigLoader
from ..config.run_config import RunConfig, build_kernel, build_model
from ..config.validator import Validator
from ..core.bounds_suite import BoundConstants, BoundsSuite
from ..core.cluster_graph import ClusterGraph, enumerate_graphs, sigma_map
from ..core.errors import ConfigError, ContractViolation
from ..core.gaussian_engine import (
    DiscretizedModel,
    expansion_identity_check,
    normalized_schwinger_direct,
    schwinger,
)
from ..core.interpolation import (
    HVector,
    default_support,
    interpolation_matrix,
    positivity_check,
    recursion_check,
)
from ..core.kernel import TOL_PSD
from ..core.logging_config import configure_logging, get_logger
from ..core.polymer import make_source_polymer
from ..core.worker_pool import ExecutionMode, WorkerPool

__all__ = [
    'ReportWriter',
    'CommandResult',
    'parse_sources',
    'main',
]

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_CONFIG = 2

# --lemma value to check group
ESTIMATE_GROUPS = {
    "4": "parasite",
    "5": "row_sums",
    "6": "local_factorials",
    "7": "link_structure",
    "8": "volume",
    "9": "simplex",
    "prop": "convergence",
    "all": "all",
}


@dataclass
class CommandResult:
    """Records of one subcommand, its summary and the first failed contract."""
    records: List[Dict[str, Any]]
    columns: Optional[List[str]] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    violation: Optional[ContractViolation] = None


def parse_sources(text: str) -> List[List[float]]:
    """Parse '0.5,1.5' (d=1) or '0.5:0.5,1.5:0.5' (d=2) into source points.

    Raises:
        ConfigError: If a coordinate is not a number
    """
    points = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            points.append([float(v) for v in chunk.split(":")])
        except ValueError:
            raise ConfigError(f"Invalid source point '{chunk}' in --sources")
    return points


def _say(args: argparse.Namespace, message: str) -> None:
    # stdout may carry the report
    if not args.quiet:
        print(message, file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Run config file (auto-discovers run_config.json if not specified)")
    common.add_argument("--dim", type=int, help="Spatial dimension")
    common.add_argument("--side", type=int, help="Window side length in cells")
    common.add_argument("--copies", type=int, help="Copy ceiling N")
    common.add_argument("--order", type=int, help="Series order in lambda")
    common.add_argument("--p-max", dest="p_max", type=int, help="Largest cluster-graph length")
    common.add_argument("--sources", help="Source points, e.g. 0.5,1.5 (':' separates coordinates)")
    common.add_argument("--poly", help="Interaction polynomial, e.g. x4 or x4+0.5x2")
    common.add_argument("--lambda", dest="lam", type=float, help="Coupling lambda")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--output", "-o", help="Report path (default: stdout)")
    common.add_argument("--format", dest="output_format", choices=["csv", "json"], help="Report format")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Only warnings and errors")
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        description="Monocluster expansion verifier",
        prog="monocluster",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    kernel_parser = subparsers.add_parser("kernel", parents=[common], help="Tabulate the covariance kernel")
    kernel_parser.add_argument("--table", type=float, default=5.0, help="Largest separation (default: 5)")
    kernel_parser.add_argument("--step", type=float, default=0.5, help="Separation step (default: 0.5)")

    subparsers.add_parser("enumerate", parents=[common], help="List cluster-graphs in the window")

    matrix_parser = subparsers.add_parser("matrix", parents=[common], help="Dump an interpolation matrix")
    matrix_parser.add_argument("--graph-file", required=True, help="Graph JSON (or an enumerate record)")
    matrix_parser.add_argument("--h", required=True, help="h_1,...,h_(p+1), decreasing")
    matrix_parser.add_argument("--index", type=int, default=0, help="Record index in an NDJSON graph file")

    subparsers.add_parser("verify-identity", parents=[common],
                          help="Compare H_(Lambda,N) with the cluster-graph expansion")
    subparsers.add_parser("schwinger", parents=[common], help="Normalized Schwinger series from the expansion")

    bounds_parser = subparsers.add_parser("bounds", parents=[common], help="Check the uniform estimates")
    bounds_parser.add_argument("--lemma", default="all", choices=list(ESTIMATE_GROUPS),
                               help="Which estimate to check (default: all)")
    constants_source = bounds_parser.add_mutually_exclusive_group()
    constants_source.add_argument("--constants", help="Frozen bound constants (default: the bundled file)")
    constants_source.add_argument("--calibrate", metavar="PATH",
                                  help="Recalibrate the constants on this run's graphs and write them to PATH")
    return parser


def resolve_config(args: argparse.Namespace, loader: Optional[ConfigLoader] = None) -> RunConfig:
    """File values (explicit or discovered) with the command-line flags on top."""
    loader = loader or ConfigLoader()
    if args.config:
        config = loader.load_run_config(args.config)
    else:
        config = loader.load_default()
    overrides = {
        "dim": args.dim,
        "side": args.side,
        "copies": args.copies,
        "order": args.order,
        "p_max": args.p_max,
        "sources": parse_sources(args.sources) if args.sources is not None else None,
        "polynomial": args.poly,
        "lam": args.lam,
        "seed": args.seed,
        "output_path": args.output,
        "output_format": args.output_format,
    }
    return loader.apply_overrides(config, overrides)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit status."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    configure_logging("WARNING" if args.quiet else "DEBUG" if args.verbose else None)
    logger = get_logger("CLI")

    try:
        config = resolve_config(args)
        group = ESTIMATE_GROUPS.get(getattr(args, "lemma", None) or "", None)
        Validator().validate_run(config, args.command, group)
    except (ConfigError, ValidationError, jsonschema.ValidationError, FileNotFoundError) as e:
        logger.error("invalid configuration", error=str(e))
        print(f"\n❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    writer = ReportWriter(config.output_path, config.output_format)
    _say(args, f"🚀 monocluster {args.command}")

    try:
        with writer.timed(args.command):
            result = DISPATCH[args.command](config, args)
    except KeyboardInterrupt:
        print("\n\n⚠️  Run cancelled by user.", file=sys.stderr)
        return EXIT_CONTRACT
    except ContractViolation as e:
        result = CommandResult(records=[], violation=e)
    except ConfigError as e:
        logger.error("invalid configuration", error=str(e))
        print(f"\n❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.error("run failed", command=args.command, error=str(e))
        print(f"\n❌ Run failed: {e}", file=sys.stderr)
        return EXIT_CONTRACT

    writer.write(result.records, result.columns)
    status = "failed" if result.violation else "passed"
    writer.write_manifest(args.command, config.model_dump(mode="json"), status, result.summary)

    if result.violation is not None:
        print(json.dumps(result.violation.to_record(), sort_keys=True))
        _say(args, f"\n❌ Contract violated: {result.violation}")
        return EXIT_CONTRACT
    _say(args, f"\n✅ {args.command} completed ({writer.record_count} records)")
    return EXIT_OK


# -- subcommands -------------------------------------------------------------

def run_kernel(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    """Kernel values on the first-orthant grid, plus a Gram positivity check."""
    if args.table <= 0 or args.step <= 0:
        raise ConfigError("--table and --step must be positive")
    kernel = build_kernel(config)
    d = config.dim
    ticks = args.step * np.arange(int(np.floor(args.table / args.step + 1e-9)) + 1)
    mesh = np.meshgrid(*([ticks] * d), indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    grid = grid[np.linalg.norm(grid, axis=1) <= args.table + 1e-12]
    values = kernel.values(grid)

    columns = [f"sep_{i}" for i in range(d)] + ["value"]
    records = [
        dict(zip(columns, [float(v) for v in sep] + [float(value)]))
        for sep, value in zip(grid, values)
    ]

    model = build_model(config, kernel)
    nodes = np.concatenate([model.node_positions(c) for c in model.window.cells])
    min_eigenvalue = kernel.min_gram_eigenvalue(nodes)
    summary = {"c00": float(kernel.value(np.zeros(d))), "min_gram_eigenvalue": min_eigenvalue,
               "nodes": int(nodes.shape[0])}
    violation = None
    if min_eigenvalue < -TOL_PSD:
        violation = ContractViolation("gram_positivity", min_eigenvalue, -TOL_PSD,
                                      {"nodes": int(nodes.shape[0])})
    return CommandResult(records, columns, summary, violation)


def graph_record(index: int, g: ClusterGraph) -> Dict[str, Any]:
    """One enumerate record: links, kinds, stage sizes and the sigma map."""
    contributing = g.is_contributing()
    sigma = None
    if contributing and g.p > 0:
        sigma = {str(q): v for q, v in sigma_map(g).items()}
    return {
        "index": index,
        "p": g.p,
        "graph": g.to_dict(),
        "kinds": [k.value for k in g.kinds],
        "stage_sizes": g.stage_sizes(),
        "contributing": contributing,
        "sigma": sigma,
    }


def run_enumerate(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    window = config.window()
    sources = make_source_polymer(config.source_points())
    records = [
        graph_record(i, g)
        for i, g in enumerate(enumerate_graphs(window, sources, config.p_max))
    ]
    columns = ["index", "p", "graph", "kinds", "stage_sizes", "contributing", "sigma"]
    summary = {
        "graphs": len(records),
        "contributing": sum(1 for r in records if r["contributing"]),
    }
    return CommandResult(records, columns, summary)


def load_graph(path: str, index: int = 0) -> ClusterGraph:
    """Read a graph from a JSON document or from line ``index`` of an NDJSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        lines = [line for line in text.splitlines() if line.strip()]
        if not 0 <= index < len(lines):
            raise ConfigError(f"Graph file {path} has no record {index}")
        try:
            data = json.loads(lines[index])
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in graph file {path}: {e}")
    if "graph" in data:
        data = data["graph"]
    try:
        return ClusterGraph.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Invalid graph in {path}: {e}")


def run_matrix(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    """Closed-form M_{G,h} on the default support, checked against the recursion."""
    g = load_graph(args.graph_file, args.index)
    try:
        h = HVector(tuple(float(v) for v in args.h.split(",")))
    except ValueError as e:
        raise ConfigError(f"Invalid --h: {e}")
    if h.p != g.p:
        raise ConfigError(f"--h needs p + 1 = {g.p + 1} values, got {len(h.values)}")

    support = default_support(g)
    matrix = interpolation_matrix(g, h, support)
    records = [
        {"row": str(a), "col": str(b), "value": float(matrix.entries[i, j])}
        for i, a in enumerate(support)
        for j, b in enumerate(support)
    ]
    deviation = recursion_check(g, h, support)
    min_eigenvalue = positivity_check(matrix)
    tolerances = config.tolerances
    summary = {"support": len(support), "recursion_deviation": deviation,
               "min_eigenvalue": min_eigenvalue}
    witness = {"graph": g.to_dict(), "h": list(h.values)}
    violation = None
    if deviation > tolerances.recursion:
        violation = ContractViolation("interpolation_recursion", deviation, tolerances.recursion, witness)
    elif min_eigenvalue < -tolerances.positivity:
        violation = ContractViolation("interpolation_positivity", min_eigenvalue,
                                      -tolerances.positivity, witness)
    return CommandResult(records, ["row", "col", "value"], summary, violation)


def _pool() -> WorkerPool:
    return WorkerPool(ExecutionMode.PARALLEL, name="cli")


def run_verify_identity(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    model = build_model(config)
    report = expansion_identity_check(model, config.order, config.p_max,
                                      config.simplex_points, _pool())
    records = [
        {"order": k, "lhs": lhs, "rhs": rhs, "difference": lhs - rhs, "deviation": report.deviation}
        for k, (lhs, rhs) in enumerate(zip(report.lhs.to_list(), report.rhs.to_list()))
    ]
    summary = {"deviation": report.deviation, "graphs": report.graph_count,
               "contributing": report.contributing_count}
    violation = None
    if report.deviation > config.tolerances.identity:
        violation = ContractViolation(
            "expansion_identity", report.deviation, config.tolerances.identity,
            {"order": config.order, "p_max": config.p_max, "sources": config.sources},
        )
    return CommandResult(records, ["order", "lhs", "rhs", "difference", "deviation"], summary, violation)


def run_schwinger(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    """Expanded normalized Schwinger series, compared with S_(Lambda,u)/Z(Lambda)."""
    model = build_model(config)
    expanded = schwinger(model, config.order, config.p_max, config.simplex_points, _pool())
    direct = normalized_schwinger_direct(model, config.order)
    deviation = expanded.relative_deviation(direct)
    records = [
        {"order": k, "coefficient": a, "direct": b}
        for k, (a, b) in enumerate(zip(expanded.to_list(), direct.to_list()))
    ]
    summary: Dict[str, Any] = {"deviation": deviation}
    if config.lam is not None:
        summary["value"] = expanded.evaluate(config.lam)
    violation = None
    if deviation > config.tolerances.identity:
        violation = ContractViolation("schwinger_expansion", deviation, config.tolerances.identity,
                                      {"order": config.order, "sources": config.sources})
    return CommandResult(records, ["order", "coefficient", "direct"], summary, violation)


def load_bound_constants(model: DiscretizedModel, config: RunConfig, args: argparse.Namespace) -> BoundConstants:
    """Frozen constants from --constants (or the bundled file), or fresh ones with --calibrate."""
    loader = ConfigLoader()
    if args.calibrate:
        constants = BoundConstants.calibrate(model, config.p_max)
        loader.save_constants(constants, args.calibrate, config)
        _say(args, f"💾 Calibrated constants written to {args.calibrate}")
        return constants
    try:
        constants = loader.load_constants(args.constants)
        constants.check_compatible(model)
    except (FileNotFoundError, ValueError) as e:
        raise ConfigError(f"{e}; regenerate them with --calibrate PATH")
    return constants


def run_bounds(config: RunConfig, args: argparse.Namespace) -> CommandResult:
    model = build_model(config)
    constants = load_bound_constants(model, config, args)
    suite = BoundsSuite(model, config.p_max, constants, seed=config.seed, trials=config.trials,
                        pool=_pool())
    reports = suite.run(ESTIMATE_GROUPS[args.lemma], config.lam)
    records = [r.to_dict() for r in reports]
    failed = [r for r in reports if not r.passed]
    summary = {
        "constants": suite.constants_dict(),
        "constants_source": args.calibrate or args.constants or "bundled",
        "checks": len(reports),
        "failed": len(failed),
    }
    violation = None
    if failed:
        first = failed[0]
        violation = ContractViolation(first.check, first.worst_ratio, first.limit, first.witness)
    columns = ["check", "passed", "worst_ratio", "limit", "witness", "details"]
    return CommandResult(records, columns, summary, violation)


DISPATCH = {
    "kernel": run_kernel,
    "enumerate": run_enumerate,
    "matrix": run_matrix,
    "verify-identity": run_verify_identity,
    "schwinger": run_schwinger,
    "bounds": run_bounds,
}


if __name__ == "__main__":
    sys.exit(main())
