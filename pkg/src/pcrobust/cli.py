"""Command-line entry points: corrupt, denoise, evaluate, report.

Exit codes: 0 on success, 1 when some frames failed mid-run, 2 for
argument or configuration errors (unknown kinds, missing inputs,
incomplete metric grids without --allow-partial).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .denoise import DEFAULT_K, DEFAULT_N_SIGMA
from .pipeline import (
    DatasetManifest,
    run_corrupt,
    run_denoise,
    run_evaluate,
    run_report,
)


def _items(raw):
    return tuple(v.strip() for v in raw.replace(",", " ").split() if v.strip())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pcrobust",
        description=(
            "Synthesize physically motivated point-cloud corruptions, "
            "denoise scans, and score detection robustness."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser(
        "corrupt",
        help="corrupt a dataset per an INI manifest ([paths] + [run])")
    c.add_argument("--manifest", required=True,
                   help="INI manifest describing paths and the run grid")
    c.add_argument("--seed", type=int, help="override the base seed")
    c.add_argument("--jobs", type=int, help="worker process count")
    c.add_argument("--kinds", help="comma-separated corruption kinds")
    c.add_argument("--severities", help="comma-separated severity levels 0-5")
    c.add_argument("--classes", help="restrict object kinds to these classes")
    c.add_argument("--subset", type=int,
                   help="only the first N frames (sorted order)")
    c.add_argument("--layers", type=int,
                   help="sensor layer count for layer deletion")

    d = sub.add_parser("denoise", help="KNN outlier removal over .bin scans")
    d.add_argument("--input", required=True, help="directory of .bin scans")
    d.add_argument("--output", required=True, help="directory for survivors")
    d.add_argument("--knn-k", type=int, default=DEFAULT_K,
                   help="neighborhood size (default %(default)s)")
    d.add_argument("--knn-sigma", type=float, default=DEFAULT_N_SIGMA,
                   help="deviation multiplier (default %(default)s)")
    d.add_argument("--local", action="store_true",
                   help="threshold against per-neighborhood statistics")

    e = sub.add_parser(
        "evaluate",
        help="score detection files against ground truth and write reports")
    e.add_argument("--gt", required=True,
                   help="ground-truth root (label_2/ + calib/, optionally "
                        "per-kind/severity label trees)")
    e.add_argument("--det", required=True,
                   help="detection root: clean/ plus <kind>/<severity>/ dirs")
    e.add_argument("--output", required=True, help="report output directory")
    e.add_argument("--classes", help="comma-separated class labels")
    e.add_argument("--kinds", help="comma-separated corruption kinds")
    e.add_argument("--severities", help="comma-separated severity levels")
    e.add_argument("--allow-partial", action="store_true",
                   help="aggregate over present cells when the grid is "
                        "incomplete, marking the report")
    e.add_argument("--score-floor", type=float, default=0.0,
                   help="ignore detections scored below this "
                        "(default %(default)s)")
    e.add_argument("--recall-points", type=int, default=40,
                   help="recall grid size for AP (default %(default)s)")
    e.add_argument("--labels-in-lidar", action="store_true",
                   help="label/detection files already use sensor "
                        "coordinates (skip the camera transform)")

    r = sub.add_parser("report", help="render robustness CSVs as text tables")
    r.add_argument("csv", nargs="+", help="robustness.csv files to render")
    return parser


def _cmd_corrupt(args):
    manifest = DatasetManifest.from_ini(args.manifest)
    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.kinds is not None:
        overrides["kinds"] = _items(args.kinds)
    if args.severities is not None:
        overrides["severities"] = tuple(int(s) for s in _items(args.severities))
    if args.classes is not None:
        overrides["classes"] = frozenset(_items(args.classes))
    if args.subset is not None:
        overrides["subset"] = args.subset
    if args.layers is not None:
        overrides["n_layers"] = args.layers
    if overrides:
        manifest = dataclasses.replace(manifest, **overrides)
    summary = run_corrupt(manifest)
    print(f"wrote {summary.n_written} outputs under {manifest.output_dir}")
    print(f"provenance: {summary.provenance_path}")
    if summary.failures:
        print(f"{len(summary.failures)} cell(s) failed:", file=sys.stderr)
        for frame, kind, severity, msg in summary.failures[:10]:
            print(f"  frame={frame} kind={kind} severity={severity}: {msg}",
                  file=sys.stderr)
        return 1
    return 0


def _cmd_denoise(args):
    counts = run_denoise(args.input, args.output, k=args.knn_k,
                         n_sigma=args.knn_sigma, local=args.local)
    removed = sum(counts.values())
    print(f"denoised {len(counts)} frame(s); removed {removed} point(s)")
    for frame, n in counts.items():
        print(f"  {frame}: removed {n}")
    return 0


def _cmd_evaluate(args):
    result = run_evaluate(
        args.gt, args.det, args.output,
        classes=_items(args.classes) if args.classes else None,
        kinds=_items(args.kinds) if args.kinds else None,
        severities=(tuple(int(s) for s in _items(args.severities))
                    if args.severities else None),
        allow_partial=args.allow_partial,
        score_floor=args.score_floor,
        recall_points=args.recall_points,
        labels_in_lidar=args.labels_in_lidar,
    )
    print(f"wrote {result.csv_path}")
    print(f"wrote {result.table_path}")
    if result.partial:
        print("note: aggregates cover a partial grid", file=sys.stderr)
    return 0


def _cmd_report(args):
    print(run_report(args.csv), end="")
    return 0


_COMMANDS = {
    "corrupt": _cmd_corrupt,
    "denoise": _cmd_denoise,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
