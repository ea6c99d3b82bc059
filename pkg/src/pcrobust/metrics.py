"""Detection-quality metrics over corrupted datasets.

Scores externally produced detection files against ground truth: oriented
3D IoU, difficulty-bucketed average precision, accuracy deltas between
clean and corrupted runs, and a four-way partition of detection bugs with
the corresponding rate shifts.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import Box3D

logger = logging.getLogger(__name__)

#: Difficulty buckets, easiest first. Each gt box belongs to every bucket
#: whose limits it satisfies, so the buckets nest.
DIFFICULTIES = ("easy", "moderate", "hard")

#: bucket -> (min image-plane bbox height px, max occlusion, max truncation)
DIFFICULTY_THRESHOLDS = {
    "easy": (40.0, 0, 0.15),
    "moderate": (25.0, 1, 0.30),
    "hard": (25.0, 2, 0.50),
}

#: Per-class IoU needed for a detection to count as a hit.
DEFAULT_IOU_THRESHOLDS = {"Car": 0.7, "Pedestrian": 0.5, "Cyclist": 0.5}

#: Applied to any class missing from the threshold table.
FALLBACK_IOU_THRESHOLD = 0.5

#: Detection bug categories, in reporting order.
BUG_CATEGORIES = ("TD", "FC", "FD", "MD")


def _clip_polygon(subject, clip):
    """Sutherland-Hodgman: clip a convex CCW polygon by a convex CCW one."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        pts = output
        output = []
        sx, sy = pts[-1]
        s_side = ex * (sy - ay) - ey * (sx - ax)
        for px, py in pts:
            p_side = ex * (py - ay) - ey * (px - ax)
            if (p_side >= 0.0) != (s_side >= 0.0):
                t = s_side / (s_side - p_side)
                output.append((sx + t * (px - sx), sy + t * (py - sy)))
            if p_side >= 0.0:
                output.append((px, py))
            sx, sy, s_side = px, py, p_side
    return output


def _polygon_area(pts):
    if len(pts) < 3:
        return 0.0
    area = 0.0
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return 0.5 * abs(area)


def iou3d(a: Box3D, b: Box3D) -> float:
    """Exact intersection-over-union of two oriented boxes.

    Footprint overlap comes from polygon clipping, vertical overlap from
    the z interval, so arbitrary yaw is handled without sampling.
    """
    inter_h = min(a.top_z, b.top_z) - max(a.bottom_z, b.bottom_z)
    if inter_h <= 0.0:
        return 0.0
    poly_a = [tuple(p) for p in a.bev_corners()]
    poly_b = [tuple(p) for p in b.bev_corners()]
    inter_area = _polygon_area(_clip_polygon(poly_a, poly_b))
    if inter_area <= 0.0:
        return 0.0
    inter = inter_area * inter_h
    union = a.volume + b.volume - inter
    return float(min(1.0, inter / union))


def assign_difficulty(gt: Box3D) -> set:
    """Difficulty buckets a ground-truth box is eligible for.

    Boxes without image-plane annotations (no 2D bbox, truncation, or
    occlusion) cannot be bucketed; they fall back to hard only.
    """
    h = gt.image_bbox_height
    if h is None or gt.truncation is None or gt.occlusion is None:
        logger.warning(
            "box %r lacks image-plane annotations; assigning hard only",
            gt.class_label,
        )
        return {"hard"}
    out = set()
    for name, (min_h, max_occ, max_trunc) in DIFFICULTY_THRESHOLDS.items():
        if h >= min_h and gt.occlusion <= max_occ and gt.truncation <= max_trunc:
            out.add(name)
    return out


def iou_threshold_for(class_label, iou_thresholds=None):
    """Hit threshold for a class, falling back for unknown classes."""
    table = DEFAULT_IOU_THRESHOLDS if iou_thresholds is None else iou_thresholds
    return table.get(class_label, FALLBACK_IOU_THRESHOLD)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one frame's detections against ground truth.

    Per-detection tuples are aligned with ``kept`` (detections surviving
    the score floor, in input order). ``matched_det`` maps each gt index
    to the original index of the detection that claimed it, or None.
    """

    categories: tuple
    matched_gt: tuple
    max_iou: tuple
    class_match: tuple
    matched_det: tuple
    kept: tuple

    @property
    def n_det(self):
        return len(self.categories)

    @property
    def counts(self):
        c = Counter(self.categories)
        return {cat: c.get(cat, 0) for cat in BUG_CATEGORIES}

    @property
    def gt_misses(self):
        return sum(1 for d in self.matched_det if d is None)


def classify_detections(detections, ground_truths, iou_thresholds=None,
                        score_floor=0.0) -> MatchResult:
    """Partition detections into TD / FC / FD / MD.

    Detections claim ground truths greedily in descending score order
    (ties keep input order). A detection with zero overlap against every
    gt is MD; one whose best-overlap gt has a different class is FC; one
    that meets its class threshold on an unclaimed gt is TD and claims
    it; everything else is FD.
    """
    kept = tuple(
        i for i, d in enumerate(detections)
        if (d.score if d.score is not None else 0.0) >= score_floor
    )
    n = len(kept)
    cats = [None] * n
    matched_gt = [None] * n
    max_iou = [0.0] * n
    class_match = [False] * n
    claimed = set()

    scores = np.array(
        [detections[i].score if detections[i].score is not None else 0.0
         for i in kept],
        dtype=np.float64,
    )
    order = np.argsort(-scores, kind="stable") if n else []
    for pos in order:
        det = detections[kept[pos]]
        if ground_truths:
            ious = np.array([iou3d(det, g) for g in ground_truths])
            j = int(np.argmax(ious))  # ties resolve to the lower gt index
            best = float(ious[j])
        else:
            j, best = None, 0.0
        max_iou[pos] = best
        if best == 0.0:
            cats[pos] = "MD"
            continue
        class_match[pos] = ground_truths[j].class_label == det.class_label
        if not class_match[pos]:
            cats[pos] = "FC"
            continue
        thr = iou_threshold_for(det.class_label, iou_thresholds)
        if best >= thr and j not in claimed:
            cats[pos] = "TD"
            claimed.add(j)
            matched_gt[pos] = j
        else:
            cats[pos] = "FD"

    matched_det = [None] * len(ground_truths)
    for pos, j in enumerate(matched_gt):
        if j is not None:
            matched_det[j] = kept[pos]

    return MatchResult(
        categories=tuple(cats),
        matched_gt=tuple(matched_gt),
        max_iou=tuple(max_iou),
        class_match=tuple(class_match),
        matched_det=tuple(matched_det),
        kept=kept,
    )


def average_precision(frames, class_label, difficulty, iou_threshold=None,
                      recall_points=40):
    """Interpolated AP for one class and difficulty over many frames.

    ``frames`` is a sequence of (detections, ground_truths) pairs. Within
    each frame detections greedily claim eligible gts in descending score
    order; detections that only cover same-class gts outside the bucket
    are ignored rather than penalized. The pooled precision-recall curve
    is sampled at ``recall_points`` evenly spaced recalls (the 1/N .. 1
    grid). Returns None when no gt is eligible anywhere.
    """
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"unknown difficulty {difficulty!r}")
    thr = (iou_threshold if iou_threshold is not None
           else iou_threshold_for(class_label))
    npos = 0
    rec_scores = []
    rec_is_tp = []
    for dets, gts in frames:
        gts_c = [g for g in gts if g.class_label == class_label]
        buckets = [assign_difficulty(g) for g in gts_c]
        eligible = [g for g, b in zip(gts_c, buckets) if difficulty in b]
        ignored = [g for g, b in zip(gts_c, buckets) if difficulty not in b]
        npos += len(eligible)
        dets_c = [d for d in dets if d.class_label == class_label]
        if not dets_c:
            continue
        frame_scores = np.array([d.score for d in dets_c], dtype=np.float64)
        claimed = set()
        for pos in np.argsort(-frame_scores, kind="stable"):
            det = dets_c[pos]
            best_j, best_iou = None, 0.0
            for j, g in enumerate(eligible):
                if j in claimed:
                    continue
                v = iou3d(det, g)
                if v > best_iou:
                    best_j, best_iou = j, v
            if best_j is not None and best_iou >= thr:
                claimed.add(best_j)
                rec_scores.append(det.score)
                rec_is_tp.append(True)
                continue
            if any(iou3d(det, g) >= thr for g in ignored):
                continue
            rec_scores.append(det.score)
            rec_is_tp.append(False)

    if npos == 0:
        return None
    if not rec_scores:
        return 0.0

    order = np.argsort(-np.asarray(rec_scores, dtype=np.float64), kind="stable")
    tp = np.asarray(rec_is_tp, dtype=np.float64)[order]
    cum_tp = np.cumsum(tp)
    precision = cum_tp / np.arange(1, len(tp) + 1)
    recall = cum_tp / npos
    # right-to-left running max: precision at recall r is the best
    # precision achievable at any recall >= r
    interp = np.maximum.accumulate(precision[::-1])[::-1]
    total = 0.0
    for step in range(1, recall_points + 1):
        r = step / recall_points
        idx = int(np.searchsorted(recall, r, side="left"))
        if idx < len(recall):
            total += interp[idx]
    return float(total / recall_points)


def overall_accuracy(aps):
    """Mean of the defined APs; None when every input is undefined."""
    vals = [a for a in aps if a is not None]
    if not vals:
        return None
    return float(sum(vals) / len(vals))


def corruption_error(clean_acc, corrupted_acc):
    """Accuracy lost to a corruption: positive means degradation."""
    return clean_acc - corrupted_acc


def _complete_cells(table, kinds, severities, allow_partial, what):
    cells = [(k, s) for k in kinds for s in severities]
    missing = [c for c in cells if c not in table]
    if missing and not allow_partial:
        raise ValueError(f"{what} requires every kind/severity cell; missing: {missing}")
    return [table[c] for c in cells if c in table]


def mean_corruption_error(table, kinds, severities=(1, 2, 3, 4, 5),
                          allow_partial=False):
    """Mean accuracy drop over a complete kind x severity grid.

    ``table`` maps (kind, severity) to a corruption-error value. Missing
    cells raise unless ``allow_partial``; an entirely empty partial table
    yields None.
    """
    vals = _complete_cells(table, kinds, severities, allow_partial,
                           "mean corruption error")
    if not vals:
        return None
    return float(np.mean(vals))


class BugRates(NamedTuple):
    """Fractions of detections falling in each bug category."""

    td: float
    fc: float
    fd: float
    md: float


def bug_rate(match: MatchResult):
    """Per-category detection fractions; None when nothing was detected."""
    n = match.n_det
    if n == 0:
        return None
    c = match.counts
    return BugRates(c["TD"] / n, c["FC"] / n, c["FD"] / n, c["MD"] / n)


def corruption_risk(br_corrupted: BugRates, br_clean: BugRates) -> BugRates:
    """Shift in bug rates caused by a corruption, per category."""
    return BugRates(*(c - cl for c, cl in zip(br_corrupted, br_clean)))


def mean_corruption_risk(table, kinds, severities=(1, 2, 3, 4, 5),
                         allow_partial=False):
    """Per-category mean of corruption-risk cells over a complete grid."""
    vals = _complete_cells(table, kinds, severities, allow_partial,
                           "mean corruption risk")
    if not vals:
        return None
    arr = np.asarray(vals, dtype=np.float64)
    return BugRates(*(float(v) for v in arr.mean(axis=0)))
