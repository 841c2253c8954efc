"""Command-line entry point: ingest -> similarity -> cluster -> select -> emit.

Exit codes: 0 success, 1 check failure, 2 input-format error, 3 numerical
degeneracy, 64 usage. The HINTSCOUT_THREADS environment variable caps worker
parallelism for the pairwise metric grid (0 or unset = auto).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from ._version import __version__
from . import checks
from .clustering import ClusterConfig, kmeans
from .container import load_dump, read_manifest
from .errors import DegenerateLayerError, FormatError, ValidationError
from .representation import SAMPLE_BUDGET, build_representations
from .selection import emit_hint_config, select_positions
from .similarity import MetricSpec, similarity_matrix

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_FORMAT = 2
EXIT_DEGENERATE = 3
EXIT_USAGE = 64

_METRIC_FLAGS = {"cka-linear": "cka_linear", "cka-rbf": "cka_rbf", "r2cca": "r2_cca"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hintscout", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hintscout {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("manifest", help="path to the dump manifest JSON")
        p.add_argument("--metric", choices=sorted(_METRIC_FLAGS), default="cka-linear")
        p.add_argument("--rbf-fraction", type=float, default=0.5,
                       help="RBF bandwidth as a fraction of the median pairwise distance")
        p.add_argument("--normalize", action="store_true",
                       help="z-score representation columns before clustering")
        p.add_argument("--out", default=".", help="output directory")

    sim = sub.add_parser("similarity", help="write the pairwise layer-similarity matrix")
    add_common(sim)

    sel = sub.add_parser("select", help="cluster layers and emit hint positions")
    add_common(sel)
    sel.add_argument("--k", type=int, default=3, help="number of hints / clusters")
    sel.add_argument("--rule", choices=("center", "last"), default="center")
    sel.add_argument("--max-iters", type=int, default=100)

    sub.add_parser("check-losses", help="run the loss-kernel self test")
    return parser


def _metric_spec(ns: argparse.Namespace) -> MetricSpec:
    if ns.rbf_fraction <= 0:
        raise _UsageError("--rbf-fraction must be positive")
    return MetricSpec(kind=_METRIC_FLAGS[ns.metric], rbf_bandwidth_fraction=ns.rbf_fraction)


def _resolve_threads() -> int:
    raw = os.environ.get("HINTSCOUT_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise _UsageError(f"HINTSCOUT_THREADS must be an integer, got {raw!r}")
    if value < 0:
        raise _UsageError("HINTSCOUT_THREADS must be non-negative")
    if value == 0:
        return os.cpu_count() or 1
    return value


def _load_representations(ns: argparse.Namespace):
    started = time.perf_counter()
    pairs = load_dump(ns.manifest)
    reps = build_representations(pairs, sample_budget=SAMPLE_BUDGET, normalized=ns.normalize)
    return reps, (time.perf_counter() - started) * 1000.0


def cmd_similarity(ns: argparse.Namespace) -> int:
    reps, step1_ms = _load_representations(ns)
    started = time.perf_counter()
    matrix = similarity_matrix(reps, _metric_spec(ns), threads=_resolve_threads())
    step2_ms = (time.perf_counter() - started) * 1000.0
    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "similarity.json"
    out_path.write_text(matrix.to_json())
    print(f"layers: {len(reps)}")
    print(f"step1 (load+represent): {step1_ms:.1f} ms")
    print(f"step2 (similarity): {step2_ms:.1f} ms")
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_select(ns: argparse.Namespace) -> int:
    manifest_bytes = Path(ns.manifest).read_bytes()
    manifest = read_manifest(ns.manifest)
    reps, step1_ms = _load_representations(ns)
    if ns.k > len(reps):
        raise _UsageError(f"--k {ns.k} exceeds the dump's {len(reps)} layers")
    if ns.max_iters < 1:
        raise _UsageError("--max-iters must be positive")
    spec = _metric_spec(ns)
    started = time.perf_counter()
    assignment = kmeans(reps, ClusterConfig(k=ns.k, metric=spec, max_iterations=ns.max_iters))
    step2_ms = (time.perf_counter() - started) * 1000.0
    if not assignment.converged:
        print(
            f"warning: k-means hit the iteration cap ({ns.max_iters}) without a fixed point",
            file=sys.stderr,
        )
    config = select_positions(assignment, ns.rule, teacher_name=manifest.model_name)

    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config_path = out_dir / "hint_config.json"
    emit_hint_config(config, config_path)

    # Wall-clock timings are deliberately left out of the record so reruns on
    # identical inputs produce byte-identical files; timings go to stdout.
    record = {
        "config": {
            "command": "select",
            "metric": ns.metric,
            "rbf_fraction": ns.rbf_fraction,
            "k": ns.k,
            "rule": ns.rule,
            "normalize": ns.normalize,
            "max_iters": ns.max_iters,
        },
        "manifest_sha256": hashlib.sha256(manifest_bytes).hexdigest(),
        "converged": assignment.converged,
        "iterations": assignment.iterations_run,
        "outputs": {"hint_config": config_path.name},
        "tool_version": __version__,
    }
    record_path = out_dir / "run_record.json"
    record_path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")

    print(f"positions: {', '.join(str(p) for p in config.hint_positions)}")
    print(f"cost: {assignment.cost:.6f}")
    print(f"step1 (load+represent): {step1_ms:.1f} ms")
    print(f"step2 (clustering): {step2_ms:.1f} ms")
    print(f"wrote {config_path}")
    print(f"wrote {record_path}")
    return EXIT_OK


def cmd_check_losses() -> int:
    results = checks.run_checks()
    failed = [name for name, ok in results if not ok]
    for name, ok in results:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print(f"first failing check: {failed[0]}", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "similarity":
            return cmd_similarity(ns)
        if ns.command == "select":
            return cmd_select(ns)
        return cmd_check_losses()
    except _UsageError as exc:
        print(f"hintscout: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateLayerError as exc:
        print(f"hintscout: degenerate layer: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (FormatError, ValidationError) as exc:
        print(f"hintscout: input error: {exc}", file=sys.stderr)
        return EXIT_FORMAT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
