import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from codedmrpt.errors import CodedMRPTError, ConfigError, DataError, StageError
from codedmrpt.settings import apply_overrides, deep_merge, load_settings

logger = logging.getLogger("codedmrpt.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

_STRAGGLER_FLAGS = {"none": "none", "exp": "shifted_exponential", "weibull": "weibull"}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="config/default.yaml", help="Path to config YAML")
    common.add_argument("--preset", default=None, help="Preset name (config/presets/<name>.yaml), e.g. stl10, gist, desk")
    common.add_argument(
        "--strategy",
        action="append",
        default=None,
        choices=["single", "data_parallel", "mp_uncoded", "mp_matdot", "mp_systematic"],
        help="Strategy to run (repeatable). If omitted, the config's list is used.",
    )
    common.add_argument("--seed", type=int, default=None, help="Master seed")
    common.add_argument("--queries", type=int, default=None, help="Number of queries")
    common.add_argument("--runs", type=int, default=None, help="Number of runs (fresh straggler draws per run)")
    common.add_argument("--out-dir", default=None, help="Output directory")
    common.add_argument(
        "--straggler",
        choices=sorted(_STRAGGLER_FLAGS),
        default=None,
        help="Straggler model; also applies that model's preset parameters",
    )
    common.add_argument("--straggler-a", type=float, default=None, help="Seconds per loaded row (floor a*l)")
    common.add_argument("--straggler-mu", type=float, default=None, help="Straggler rate mu")
    common.add_argument("--straggler-alpha", type=float, default=None, help="Weibull shape alpha")
    common.add_argument("--m", type=int, default=None, help="Number of column blocks for MatDot codes")
    common.add_argument("--workers", type=int, default=None, help="Worker count P")
    common.add_argument(
        "--in-dataset",
        action="store_true",
        default=None,
        help="Draw queries from the dataset instead of held-out points",
    )

    parser = argparse.ArgumentParser(prog="codedmrpt", description="Coded MRPT experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="Run the straggler experiment (virtual time)")
    sub.add_parser("bench-compute", parents=[common], help="Measure wall-clock compute per query (no stragglers)")
    sub.add_parser("encode-shards", parents=[common], help="Encode and persist MatDot shards for the configured data")
    cond = sub.add_parser("conditioning", parents=[common], help="Report Vandermonde conditioning of the configured code")
    cond.add_argument("--systematic", action="store_true", help="Report for the systematic code")
    cond.add_argument("--threshold", type=float, default=1e8, help="Warning threshold for the condition number")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, object]:
    return {
        "experiment.seed": args.seed,
        "experiment.queries": args.queries,
        "experiment.runs": args.runs,
        "experiment.out_dir": str(Path(args.out_dir).resolve()) if args.out_dir else None,
        "experiment.in_dataset": args.in_dataset,
        "cluster.strategies": args.strategy,
        "cluster.straggler.a": args.straggler_a,
        "cluster.straggler.mu": args.straggler_mu,
        "cluster.straggler.alpha": args.straggler_alpha,
        "cluster.m": args.m,
        "cluster.workers": args.workers,
    }


def _straggler_overrides(settings: dict[str, Any], flag: str | None) -> dict[str, object]:
    if flag is None:
        return {}
    from codedmrpt.bench.spec import STRAGGLER_PRESETS

    kind = _STRAGGLER_FLAGS[flag]
    presets = deep_merge(STRAGGLER_PRESETS, settings.get("straggler_presets") or {})
    overrides: dict[str, object] = {"cluster.straggler.kind": kind}
    for key, value in (presets.get(kind) or {}).items():
        overrides[f"cluster.straggler.{key}"] = value
    return overrides


def exit_code_for(exc: BaseException) -> int:
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, ConfigError):
        return EXIT_CONFIG
    if isinstance(cause, (DataError, OSError)):
        return EXIT_DATA
    return EXIT_RUNTIME


def _dispatch(args: argparse.Namespace) -> None:
    from codedmrpt.bench.spec import spec_from_settings

    settings = load_settings(Path(args.config), preset=args.preset)
    # Named model first so single-parameter flags win over its preset values.
    settings = apply_overrides(settings, _straggler_overrides(settings, args.straggler))
    settings = apply_overrides(settings, _overrides(args))
    spec = spec_from_settings(settings)

    if args.command == "run":
        from codedmrpt.bench.runner import run

        result = run(spec, settings_meta=settings.get("_meta"))
        for s in result.summary.strategies:
            print(
                f"{s.name:>14}  latency {s.mean_latency}  std {s.std_latency}  "
                f"recall {s.mean_recall}  |S| {s.mean_candidate_size}"
            )
        print(f"outputs: {result.out_dir}")
        return

    if args.command == "bench-compute":
        from codedmrpt.bench.runner import run_compute_benchmark

        print(json.dumps(run_compute_benchmark(spec), indent=2))
        return

    if args.command == "encode-shards":
        from codedmrpt.bench.runner import encode_shards, prepare_data, stage
        from codedmrpt.bench.spec import validate_spec

        with stage("load-data"):
            data, _ = prepare_data(spec)
        with stage("validate"):
            validate_spec(spec, n=data.n, d=data.d)
        with stage("encode-shards"):
            paths = encode_shards(spec, data, Path(spec.out_dir))
        print(f"wrote {len(paths)} shard file(s) under {Path(spec.out_dir) / 'shards'}")
        return

    if args.command == "conditioning":
        from codedmrpt.bench.spec import code_config
        from codedmrpt.coding.conditioning import conditioning_report

        report = conditioning_report(code_config(spec, systematic=args.systematic), threshold=args.threshold)
        print(json.dumps(report.as_dict(), indent=2))
        return

    raise ConfigError(f"Unknown command: {args.command}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except CodedMRPTError as e:
        code = exit_code_for(e)
        where = f" [stage {e.stage}]" if isinstance(e, StageError) else ""
        print(f"codedmrpt: error{where}: {e}", file=sys.stderr)
        return code
    return EXIT_OK
