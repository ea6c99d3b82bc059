"""Batch orchestration: corrupt datasets, denoise them, score detections.

Everything here is file-tree plumbing around the kernel and metric
modules. Corrupted output lands in out/<kind>/<severity>/velodyne/ (plus
label_2/ for kinds that rewrite boxes) with a provenance log, so a run
is fully described by its manifest and base seed.
"""

from __future__ import annotations

import configparser
import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import kitti, metrics, reporting
from .catalog import ALL_KINDS, LABEL_MUTATING, apply_corruption, kind_module
from .core import RandomStream, SEVERITY_LEVELS, frame_seed
from .denoise import DEFAULT_K, DEFAULT_N_SIGMA, knn_outlier_removal
from .metrics import DIFFICULTIES
from .reporting import ReportRow

logger = logging.getLogger(__name__)

POINT_RECORD_BYTES = 16  # four float32 fields per point on disk


def _split_list(raw):
    return tuple(v.strip() for v in raw.replace(",", " ").split() if v.strip())


@dataclass(frozen=True)
class DatasetManifest:
    """Everything a corruption run needs: paths, grid, seeds, workers."""

    velodyne_dir: Path
    output_dir: Path
    label_dir: Path | None = None
    calib_dir: Path | None = None
    kinds: tuple = ALL_KINDS
    severities: tuple = (0, 1, 2, 3, 4, 5)
    classes: frozenset | None = None
    base_seed: int = 0
    frames: tuple | None = None
    subset: int | None = None
    jobs: int = 1
    n_layers: int = 64

    def __post_init__(self):
        for name in ("velodyne_dir", "output_dir", "label_dir", "calib_dir"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, Path(v))

    @classmethod
    def from_ini(cls, path):
        """Load a manifest from an INI file ([paths] and [run] sections)."""
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise ValueError(f"cannot read manifest {path!r}")
        if "paths" not in cp:
            raise ValueError(f"manifest {path!r} lacks a [paths] section")
        paths = cp["paths"]
        run = cp["run"] if "run" in cp else {}
        kw = dict(
            velodyne_dir=Path(paths["velodyne"]),
            output_dir=Path(paths["output"]),
        )
        if "labels" in paths:
            kw["label_dir"] = Path(paths["labels"])
        if "calib" in paths:
            kw["calib_dir"] = Path(paths["calib"])
        if "kinds" in run:
            kw["kinds"] = _split_list(run["kinds"])
        if "severities" in run:
            kw["severities"] = tuple(int(s) for s in _split_list(run["severities"]))
        if "classes" in run:
            kw["classes"] = frozenset(_split_list(run["classes"]))
        if "seed" in run:
            kw["base_seed"] = int(run["seed"])
        if "frames" in run:
            kw["frames"] = _split_list(run["frames"])
        if "subset" in run:
            kw["subset"] = int(run["subset"])
        if "jobs" in run:
            kw["jobs"] = int(run["jobs"])
        if "layers" in run:
            kw["n_layers"] = int(run["layers"])
        return cls(**kw)

    def validate(self):
        unknown = [k for k in self.kinds if k not in ALL_KINDS]
        if unknown:
            raise ValueError(
                f"unknown corruption kinds {unknown}; valid kinds: {list(ALL_KINDS)}")
        bad = [s for s in self.severities if s not in SEVERITY_LEVELS]
        if bad:
            raise ValueError(
                f"severities must be in {SEVERITY_LEVELS}, got {bad}")
        if not self.velodyne_dir.is_dir():
            raise ValueError(f"velodyne directory {self.velodyne_dir} not found")
        needs_labels = any(kind_module(k) == "object" for k in self.kinds)
        if needs_labels and (self.label_dir is None or self.calib_dir is None):
            raise ValueError(
                "object-level kinds need label and calib directories")

    def frame_ids(self):
        if self.frames is not None:
            ids = list(self.frames)
        else:
            ids = sorted(p.stem for p in self.velodyne_dir.glob("*.bin"))
        if self.subset is not None:
            ids = ids[: self.subset]
        return ids


@dataclass
class CorruptSummary:
    n_written: int
    provenance_path: Path | None
    failures: list = field(default_factory=list)


def _corrupt_one_frame(manifest: DatasetManifest, frame_id: str):
    """Produce every (kind, severity) output for one frame.

    Runs inside worker processes; returns (provenance rows, failures)
    instead of touching shared state.
    """
    rows, failures = [], []
    src_bin = manifest.velodyne_dir / f"{frame_id}.bin"
    src_label = (manifest.label_dir / f"{frame_id}.txt"
                 if manifest.label_dir is not None else None)

    cloud = None
    boxes = dontcare = calib = None

    def load_cloud():
        nonlocal cloud
        if cloud is None:
            cloud = kitti.read_point_cloud(src_bin)
        return cloud

    def load_labels():
        nonlocal boxes, dontcare, calib
        if boxes is None:
            calib = kitti.read_calibration(manifest.calib_dir / f"{frame_id}.txt")
            boxes, dontcare = kitti.read_labels(src_label, calib)
        return boxes, dontcare, calib

    for kind in manifest.kinds:
        mutates = kind in LABEL_MUTATING
        needs_boxes = kind_module(kind) == "object"
        for severity in manifest.severities:
            seed = frame_seed(manifest.base_seed, frame_id, kind, severity)
            cell = manifest.output_dir / kind / str(severity)
            try:
                velo_out = cell / "velodyne"
                velo_out.mkdir(parents=True, exist_ok=True)
                if severity == 0:
                    shutil.copyfile(src_bin, velo_out / f"{frame_id}.bin")
                    n_in = n_out = src_bin.stat().st_size // POINT_RECORD_BYTES
                    counters = {}
                    if mutates and src_label is not None:
                        label_out = cell / "label_2"
                        label_out.mkdir(parents=True, exist_ok=True)
                        shutil.copyfile(src_label, label_out / f"{frame_id}.txt")
                else:
                    pc = load_cloud()
                    if needs_boxes:
                        bxs, dc, cal = load_labels()
                    else:
                        bxs, dc, cal = [], (), None
                    counters = {}
                    out = apply_corruption(
                        pc, bxs, kind, severity, RandomStream(seed),
                        classes=manifest.classes, counters=counters,
                        n_layers=manifest.n_layers)
                    kitti.write_point_cloud(out.cloud, velo_out / f"{frame_id}.bin")
                    n_in, n_out = len(pc), len(out.cloud)
                    if mutates:
                        label_out = cell / "label_2"
                        label_out.mkdir(parents=True, exist_ok=True)
                        kitti.write_labels(out.boxes, cal,
                                           label_out / f"{frame_id}.txt",
                                           dontcare=dc)
                rows.append({
                    "frame": frame_id, "kind": kind, "severity": severity,
                    "seed": seed, "n_in": int(n_in), "n_out": int(n_out),
                    "fallbacks": counters,
                })
            except Exception as exc:  # keep going; summarize at the end
                failures.append((frame_id, kind, severity, f"{type(exc).__name__}: {exc}"))
    return rows, failures


def run_corrupt(manifest: DatasetManifest) -> CorruptSummary:
    """Corrupt a dataset per the manifest; returns a run summary.

    Outputs are deterministic in (manifest, base seed): every cell gets
    its own hashed stream, so worker scheduling cannot change bytes.
    """
    manifest.validate()
    frame_ids = manifest.frame_ids()
    manifest.output_dir.mkdir(parents=True, exist_ok=True)

    all_rows, failures = [], []
    if manifest.jobs > 1:
        with ProcessPoolExecutor(max_workers=manifest.jobs) as pool:
            for rows, fails in pool.map(
                    _corrupt_one_frame, [manifest] * len(frame_ids), frame_ids):
                all_rows.extend(rows)
                failures.extend(fails)
    else:
        for frame_id in frame_ids:
            rows, fails = _corrupt_one_frame(manifest, frame_id)
            all_rows.extend(rows)
            failures.extend(fails)

    all_rows.sort(key=lambda r: (r["kind"], r["severity"], r["frame"]))
    prov_path = manifest.output_dir / "provenance.jsonl"
    with open(prov_path, "w") as fh:
        for row in all_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    for frame_id, kind, severity, msg in failures:
        logger.error("failed: frame=%s kind=%s severity=%s: %s",
                     frame_id, kind, severity, msg)
    return CorruptSummary(n_written=len(all_rows), provenance_path=prov_path,
                          failures=failures)


def run_denoise(input_dir, output_dir, k=DEFAULT_K, n_sigma=DEFAULT_N_SIGMA,
                local=False):
    """Denoise every .bin under input_dir; returns {frame: removed count}."""
    input_dir = Path(input_dir)
    if not input_dir.is_dir():
        raise ValueError(f"input directory {input_dir} not found")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    counts = {}
    for path in sorted(input_dir.glob("*.bin")):
        cloud = kitti.read_point_cloud(path)
        result = knn_outlier_removal(cloud, k=k, n_sigma=n_sigma, local=local)
        kitti.write_point_cloud(result.cloud, output_dir / path.name)
        counts[path.stem] = len(result.removed_indices)
    return counts


@dataclass
class EvaluationResult:
    rows: list
    partial: bool
    csv_path: Path
    table_path: Path
    meta_path: Path


def _read_frame_boxes(label_path, calib, labels_in_lidar):
    boxes, _ = kitti.read_labels(label_path, calib, labels_in_lidar=labels_in_lidar)
    return boxes


def _load_cell(det_dir, gt_dir, flat_gt_dir, frame_ids, calibs, labels_in_lidar):
    """(detections, ground truths) per frame for one grid cell."""
    pairs = []
    for fid in frame_ids:
        gt_path = gt_dir / f"{fid}.txt" if gt_dir is not None else None
        if gt_path is None or not gt_path.exists():
            gt_path = flat_gt_dir / f"{fid}.txt"
        gts = _read_frame_boxes(gt_path, calibs[fid], labels_in_lidar)
        det_path = det_dir / f"{fid}.txt"
        if det_path.exists():
            dets = kitti.read_detections(det_path, calibs[fid],
                                         labels_in_lidar=labels_in_lidar)
        else:
            dets = []
        pairs.append((dets, gts))
    return pairs


def _filter_classes(pairs, classes):
    if classes is None:
        return pairs
    keep = set(classes)
    return [([d for d in dets if d.class_label in keep],
             [g for g in gts if g.class_label in keep])
            for dets, gts in pairs]


def _pooled_match(pairs, score_floor):
    """Sum per-frame match outcomes into dataset-level totals."""
    counts = {c: 0 for c in metrics.BUG_CATEGORIES}
    n_det = n_gt = misses = 0
    for dets, gts in pairs:
        m = metrics.classify_detections(dets, gts, score_floor=score_floor)
        for c in counts:
            counts[c] += m.counts[c]
        n_det += m.n_det
        n_gt += len(gts)
        misses += m.gt_misses
    br = None
    if n_det:
        br = metrics.BugRates(*(counts[c] / n_det for c in metrics.BUG_CATEGORIES))
    return br, n_det, n_gt, misses


def _class_accuracy(pairs, class_label, recall_points):
    aps = [metrics.average_precision(pairs, class_label, diff,
                                     recall_points=recall_points)
           for diff in DIFFICULTIES]
    return metrics.overall_accuracy(aps)


def run_evaluate(gt_root, det_root, output_dir, classes=None, kinds=None,
                 severities=None, allow_partial=False, score_floor=0.0,
                 recall_points=40, labels_in_lidar=False) -> EvaluationResult:
    """Score a detection tree against ground truth and write report files.

    Expects det_root/clean/<frame>.txt plus det_root/<kind>/<severity>/
    mirrors of the corruption layout. Ground truth may be flat (label_2/
    next to calib/) or carry per-cell label_2 directories for the
    label-mutating kinds; flat labels are the fallback per cell and per
    frame.
    """
    gt_root, det_root = Path(gt_root), Path(det_root)
    output_dir = Path(output_dir)
    detector = det_root.name

    clean_dir = det_root / "clean"
    if not clean_dir.is_dir():
        raise ValueError(
            f"missing clean baseline: {clean_dir} (accuracy deltas are "
            "relative to clean results)")

    flat_gt_dir = gt_root / "label_2" if (gt_root / "label_2").is_dir() else gt_root
    frame_ids = sorted(p.stem for p in flat_gt_dir.glob("*.txt"))
    if not frame_ids:
        raise ValueError(f"no ground-truth label files under {flat_gt_dir}")

    calib_dir = gt_root / "calib"
    calibs = {}
    for fid in frame_ids:
        cpath = calib_dir / f"{fid}.txt"
        calibs[fid] = kitti.read_calibration(cpath) if cpath.exists() else None

    if kinds is None:
        kinds = sorted(d.name for d in det_root.iterdir()
                       if d.is_dir() and d.name != "clean")
    unknown = [k for k in kinds if k not in ALL_KINDS]
    if unknown:
        raise ValueError(f"unknown corruption kinds in detection tree: {unknown}")
    if severities is None:
        found = set()
        for k in kinds:
            kd = det_root / k
            if kd.is_dir():
                found.update(int(d.name) for d in kd.iterdir()
                             if d.is_dir() and d.name.isdigit())
        severities = tuple(sorted(found))
    severities = tuple(int(s) for s in severities)

    clean_pairs = _filter_classes(
        _load_cell(clean_dir, None, flat_gt_dir, frame_ids, calibs,
                   labels_in_lidar),
        classes)
    if classes is None:
        class_list = sorted({g.class_label for _, gts in clean_pairs for g in gts})
    else:
        class_list = sorted(classes)

    clean_oa = {}
    class_rows = {c: [] for c in class_list}
    for cls in class_list:
        oa = _class_accuracy(clean_pairs, cls, recall_points)
        clean_oa[cls] = oa
        cls_pairs = _filter_classes(clean_pairs, (cls,))
        _, n_det, n_gt, misses = _pooled_match(cls_pairs, score_floor)
        class_rows[cls].append(ReportRow(
            detector, cls, "clean", 0, oa=oa,
            n_det=n_det, n_gt=n_gt, gt_misses=misses))

    clean_br, n_det, n_gt, misses = _pooled_match(clean_pairs, score_floor)
    all_rows_bug = [ReportRow(detector, "ALL", "clean", 0, br=clean_br,
                              n_det=n_det, n_gt=n_gt, gt_misses=misses)]

    ce_tables = {c: {} for c in class_list}
    cr_table = {}
    for kind in kinds:
        for sev in severities:
            det_dir = det_root / kind / str(sev)
            if not det_dir.is_dir():
                continue
            gt_dir = gt_root / kind / str(sev) / "label_2"
            gt_dir = gt_dir if gt_dir.is_dir() else None
            pairs = _filter_classes(
                _load_cell(det_dir, gt_dir, flat_gt_dir, frame_ids, calibs,
                           labels_in_lidar),
                classes)
            for cls in class_list:
                oa = _class_accuracy(pairs, cls, recall_points)
                ce = None
                if oa is not None and clean_oa[cls] is not None:
                    ce = metrics.corruption_error(clean_oa[cls], oa)
                    ce_tables[cls][(kind, sev)] = ce
                cls_pairs = _filter_classes(pairs, (cls,))
                _, cd, cg, cm = _pooled_match(cls_pairs, score_floor)
                class_rows[cls].append(ReportRow(
                    detector, cls, kind, sev, oa=oa, ce=ce,
                    n_det=cd, n_gt=cg, gt_misses=cm))
            br, cd, cg, cm = _pooled_match(pairs, score_floor)
            cr = None
            if br is not None and clean_br is not None:
                cr = metrics.corruption_risk(br, clean_br)
                cr_table[(kind, sev)] = cr
            all_rows_bug.append(ReportRow(
                detector, "ALL", kind, sev, br=br, cr=cr,
                n_det=cd, n_gt=cg, gt_misses=cm))

    agg_sevs = tuple(s for s in severities if s != 0)
    n_expected = len(kinds) * len(agg_sevs)
    agg_rows = []
    partial = False
    for cls in class_list:
        mce = metrics.mean_corruption_error(
            ce_tables[cls], kinds, severities=agg_sevs,
            allow_partial=allow_partial)
        partial = partial or len(ce_tables[cls]) < n_expected
        if mce is not None:
            agg_rows.append(ReportRow(detector, cls, "ALL", "mean", ce=mce))
    mcr = metrics.mean_corruption_risk(
        cr_table, kinds, severities=agg_sevs, allow_partial=allow_partial)
    partial = partial or len(cr_table) < n_expected
    if mcr is not None:
        agg_rows.append(ReportRow(detector, "ALL", "ALL", "mean", cr=mcr))

    rows = []
    for cls in class_list:
        rows.extend(class_rows[cls])
    rows.extend(all_rows_bug)
    rows.extend(agg_rows)

    output_dir.mkdir(parents=True, exist_ok=True)
    csv_path = output_dir / "robustness.csv"
    reporting.write_report_csv(rows, csv_path)
    table_path = output_dir / "robustness.txt"
    table_path.write_text(reporting.render_tables(rows, partial=partial))
    meta_path = output_dir / "evaluation_meta.json"
    meta = {
        "detector": detector,
        "classes": class_list,
        "kinds": list(kinds),
        "severities": list(severities),
        "score_floor": score_floor,
        "recall_points": recall_points,
        "allow_partial": allow_partial,
        "partial": partial,
        "n_frames": len(frame_ids),
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return EvaluationResult(rows=rows, partial=partial, csv_path=csv_path,
                            table_path=table_path, meta_path=meta_path)


def run_report(csv_paths) -> str:
    """Render existing report CSVs as text; no recomputation."""
    chunks = []
    for path in csv_paths:
        path = Path(path)
        rows = reporting.read_report_csv(path)
        partial = False
        meta_path = path.with_name("evaluation_meta.json")
        if meta_path.exists():
            try:
                partial = bool(json.loads(meta_path.read_text()).get("partial"))
            except (OSError, json.JSONDecodeError):
                partial = False
        chunks.append(reporting.render_tables(rows, partial=partial))
    return "\n".join(chunks)
