"""Shared oracle helpers for geometry tests.

Monte-Carlo IoU estimation is an implementation-independent check for
the analytic rotated-box IoU: sample uniformly in the union AABB and
count membership. All arithmetic stays in float32 (python-float box
parameters bind weakly, so nothing upcasts) to keep a million samples
per pair affordable.
"""

import numpy as np

from pcrobust.core import Box3D


def inside_box(box, pts):
    """Membership test for an (n, 3) float array of points."""
    dx = pts[:, 0] - float(box.cx)
    dy = pts[:, 1] - float(box.cy)
    c, s = float(np.cos(box.yaw)), float(np.sin(box.yaw))
    qx = c * dx + s * dy
    qy = -s * dx + c * dy
    return (
        (np.abs(qx) <= float(box.length) / 2.0)
        & (np.abs(qy) <= float(box.width) / 2.0)
        & (np.abs(pts[:, 2] - float(box.cz)) <= float(box.height) / 2.0)
    )


def mc_iou(a, b, n_samples=1_000_000, seed=0):
    """Monte-Carlo IoU of two boxes via union-AABB rejection sampling."""
    ca, cb = a.corners(), b.corners()
    lo = np.minimum(ca.min(axis=0), cb.min(axis=0)).astype(np.float32)
    hi = np.maximum(ca.max(axis=0), cb.max(axis=0)).astype(np.float32)
    rng = np.random.default_rng(seed)
    pts = rng.random((n_samples, 3), dtype=np.float32) * (hi - lo) + lo
    in_a = inside_box(a, pts)
    in_b = inside_box(b, pts)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def random_box_pair(rng):
    """A mostly-overlapping random rotated box pair for IoU stress tests."""
    c1 = rng.uniform(-2.0, 2.0, 3)
    c2 = c1 + rng.uniform(-1.5, 1.5, 3)
    d1 = rng.uniform(1.0, 4.0, 3)
    d2 = rng.uniform(1.0, 4.0, 3)
    y1, y2 = rng.uniform(-np.pi, np.pi, 2)
    a = Box3D(cx=c1[0], cy=c1[1], cz=c1[2],
              length=d1[0], width=d1[1], height=d1[2], yaw=y1)
    b = Box3D(cx=c2[0], cy=c2[1], cz=c2[2],
              length=d2[0], width=d2[1], height=d2[2], yaw=y2)
    return a, b
