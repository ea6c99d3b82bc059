"""Per-object corruption kernels.

Corruptions that act on the points inside annotated 3D boxes rather
than on the whole frame. Points are assigned to at most one box
(nearest center wins on overlap), objects are processed in label-file
order with independent draws, and points outside every targeted box
are bit-identical before and after.

Box mutation policy: only scale, rotation, and translation change the
annotations; every other kind emits the input boxes unchanged even
though the deformed points may fit them loosely. Mutated boxes carry
``alpha=None`` so the observation angle is recomputed on write.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Box3D, PointCloud, RandomStream, check_severity, normalize_angle
from .knn import KnnIndex

OBJECT_KINDS = (
    "uniform", "gaussian", "impulse", "upsample_obj",
    "cutout_obj", "local_dec_obj", "local_inc_obj",
    "shear", "ffd", "scale", "rotation", "translation",
)
LABEL_MUTATING = frozenset({"scale", "rotation", "translation"})

# severity-indexed parameters, index 0 = identity
OBJECT_UNIFORM_BOUNDS = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10)
OBJECT_GAUSSIAN_SIGMAS = (0.0, 0.02, 0.03, 0.04, 0.05, 0.06)
OBJECT_IMPULSE_DIVISORS = (0, 30, 25, 20, 15, 10)
OBJECT_IMPULSE_MAGNITUDE = 0.1
OBJECT_UPSAMPLE_DIVISORS = (0, 5, 4, 3, 2, 1)
OBJECT_UPSAMPLE_BOUND = 0.05
CUTOUT_OBJ_NEIGHBORHOOD = 20
LOCAL_OBJ_NEIGHBORHOOD = 30
LOCAL_DEC_OBJ_FRACTION = 0.75
LOCAL_INC_OBJ_JITTER = 0.01
SHEAR_BOUNDS = ((0.0, 0.0), (0.0, 0.10), (0.05, 0.15),
                (0.10, 0.20), (0.15, 0.25), (0.20, 0.30))
FFD_RATIOS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
FFD_LATTICE = 5
SCALE_MAGNITUDES = (0.0, 0.04, 0.08, 0.12, 0.16, 0.20)
ROTATION_BOUNDS_DEG = ((0.0, 0.0), (0.0, 2.0), (3.0, 4.0),
                       (5.0, 6.0), (7.0, 8.0), (9.0, 10.0))
# the severity-5 upper bound reads as 1.0, keeping magnitudes under the 1 m cap
TRANSLATION_BOUNDS_M = ((0.0, 0.0), (0.0, 0.2), (0.3, 0.4),
                        (0.5, 0.6), (0.7, 0.8), (0.9, 1.0))


@dataclass(frozen=True)
class ObjectSlice:
    """One annotated object and the cloud rows assigned to it."""

    box: Box3D
    member_indices: np.ndarray  # ascending row indices into the cloud


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: int
    seed: int


@dataclass(frozen=True)
class CorruptedFrame:
    cloud: PointCloud
    boxes: tuple
    provenance: CorruptionSpec | None = None
    fallbacks: dict = field(default_factory=dict)


def extract_objects(cloud: PointCloud, boxes, margin: float = 1e-6):
    """Assign each cloud point to at most one box.

    Membership is the oriented point-in-box test with an epsilon
    margin; a point inside several overlapping boxes goes to the box
    whose center is strictly nearest, earlier boxes winning ties.
    """
    xyz = cloud.xyz
    owner = np.full(len(cloud), -1, dtype=np.int64)
    best_d2 = np.full(len(cloud), np.inf)
    for bi, box in enumerate(boxes):
        rows = np.flatnonzero(box.contains(xyz, margin))
        if rows.size == 0:
            continue
        d2 = ((xyz[rows] - box.center) ** 2).sum(axis=1)
        better = d2 < best_d2[rows]
        owner[rows[better]] = bi
        best_d2[rows[better]] = d2[better]
    return [ObjectSlice(box, np.flatnonzero(owner == bi))
            for bi, box in enumerate(boxes)]


def bernstein_basis(u: np.ndarray, degree: int = 4) -> np.ndarray:
    """Bernstein polynomial basis values, shape (n, degree + 1)."""
    u = np.asarray(u, dtype=np.float64)
    cols = [math.comb(degree, i) * u**i * (1.0 - u) ** (degree - i)
            for i in range(degree + 1)]
    return np.stack(cols, axis=-1)


def ffd_displacement(coords: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Trivariate Bernstein interpolation of lattice displacements.

    coords: (n, 3) normalized lattice coordinates in [0, 1].
    delta: (5, 5, 5, 3) per-control-point displacement vectors.
    """
    bx = bernstein_basis(coords[:, 0])
    by = bernstein_basis(coords[:, 1])
    bz = bernstein_basis(coords[:, 2])
    return np.einsum("ni,nj,nk,ijkc->nc", bx, by, bz, delta)


def _bump(counters, key):
    counters[key] = counters.get(key, 0) + 1


# ---- per-kind handlers -------------------------------------------------
# Each takes the working data array, the object's member rows, its box,
# and shared draw/output state; returns the (possibly replaced) box.

def _uniform(data, rows, box, severity, g, counters, appended, doomed):
    bound = OBJECT_UNIFORM_BOUNDS[severity]
    data[rows, :3] += g.uniform(-bound, bound, size=(rows.size, 3))
    return box


def _gaussian(data, rows, box, severity, g, counters, appended, doomed):
    data[rows, :3] += g.normal(0.0, OBJECT_GAUSSIAN_SIGMAS[severity],
                               size=(rows.size, 3))
    return box


def _impulse(data, rows, box, severity, g, counters, appended, doomed):
    m = rows.size // OBJECT_IMPULSE_DIVISORS[severity]
    sel = g.choice(rows.size, size=m, replace=False)
    signs = np.where(g.random((m, 3)) < 0.5, 1.0, -1.0)
    data[rows[sel], :3] += signs * OBJECT_IMPULSE_MAGNITUDE
    return box


def _upsample(data, rows, box, severity, g, counters, appended, doomed):
    m = rows.size // OBJECT_UPSAMPLE_DIVISORS[severity]
    sel = g.choice(rows.size, size=m, replace=False)
    extra = data[rows[sel]].copy()
    extra[:, :3] += g.uniform(-OBJECT_UPSAMPLE_BOUND, OBJECT_UPSAMPLE_BOUND,
                              size=(m, 3))
    appended.append(extra)
    return box


def _density_neighborhoods(data, rows, severity, g, k_nominal):
    c = min(severity, rows.size)
    centers = g.choice(rows.size, size=c, replace=False)
    k = min(k_nominal, rows.size)
    xyz = data[rows, :3]
    _, nbrs = KnnIndex(xyz).query(xyz[centers], k)
    return nbrs, k


def _cutout(data, rows, box, severity, g, counters, appended, doomed):
    if rows.size == 0:
        return box
    nbrs, _ = _density_neighborhoods(data, rows, severity, g,
                                     CUTOUT_OBJ_NEIGHBORHOOD)
    doomed.append(rows[np.unique(nbrs)])
    return box


def _local_dec(data, rows, box, severity, g, counters, appended, doomed):
    if rows.size == 0:
        return box
    nbrs, k = _density_neighborhoods(data, rows, severity, g,
                                     LOCAL_OBJ_NEIGHBORHOOD)
    per = int(LOCAL_DEC_OBJ_FRACTION * k)
    picks = [nbrs[j, g.choice(k, size=per, replace=False)]
             for j in range(len(nbrs))]
    doomed.append(rows[np.unique(np.concatenate(picks))])
    return box


def _sample_on_plane(nb, k, g, counters):
    """k new points on a least-squares plane through one neighborhood."""
    xy = nb[:, :2]
    mid = xy.mean(axis=0)
    design = np.column_stack([np.ones(k), xy - mid])
    coef, _, rank, _ = np.linalg.lstsq(design, nb[:, 2], rcond=None)
    if rank < 3:
        # degenerate footprint: fall back to jittered duplicates
        _bump(counters, "local_inc_obj_jitter_fallback")
        out = nb.copy()
        out[:, :3] += g.uniform(-LOCAL_INC_OBJ_JITTER, LOCAL_INC_OBJ_JITTER,
                                size=(k, 3))
        return out
    new_xy = g.uniform(xy.min(axis=0), xy.max(axis=0), size=(k, 2))
    new_z = coef[0] + (new_xy - mid) @ coef[1:]
    new_xyz = np.column_stack([new_xy, new_z])
    d2 = ((new_xyz[:, None, :] - nb[None, :, :3]) ** 2).sum(axis=2)
    refl = nb[np.argmin(d2, axis=1), 3]
    return np.column_stack([new_xyz, refl])


def _local_inc(data, rows, box, severity, g, counters, appended, doomed):
    if rows.size == 0:
        return box
    nbrs, k = _density_neighborhoods(data, rows, severity, g,
                                     LOCAL_OBJ_NEIGHBORHOOD)
    for j in range(len(nbrs)):
        appended.append(_sample_on_plane(data[rows[nbrs[j]]], k, g, counters))
    return box


def _shear(data, rows, box, severity, g, counters, appended, doomed):
    lo, hi = SHEAR_BOUNDS[severity]
    mags = g.uniform(lo, hi, 4)
    signs = np.where(g.random(4) < 0.5, 1.0, -1.0)
    a, b, c, d = mags * signs
    if rows.size:
        q = data[rows, :3] - box.center
        # x' = x + a y + b z, y' = c x + y + d z, z untouched (bit-equal)
        dx = a * q[:, 1] + b * q[:, 2]
        dy = c * q[:, 0] + d * q[:, 2]
        data[rows, 0] += dx
        data[rows, 1] += dy
    return box


def _ffd(data, rows, box, severity, g, counters, appended, doomed):
    rho = FFD_RATIOS[severity]
    shape = (FFD_LATTICE, FFD_LATTICE, FFD_LATTICE, 3)
    delta_unit = g.uniform(-rho, rho, size=shape)
    if rows.size == 0:
        return box
    local = box.to_box_frame(data[rows, :3])
    lo = local.min(axis=0)
    ext = local.max(axis=0) - lo
    delta = delta_unit * ext  # zero-extent axes pass through undeformed
    safe = np.where(ext > 0, ext, 1.0)
    coords = np.where(ext > 0, (local - lo) / safe, 0.0)
    data[rows, :3] = box.from_box_frame(local + ffd_displacement(coords, delta))
    return box


def _scale(data, rows, box, severity, g, counters, appended, doomed):
    mag = SCALE_MAGNITUDES[severity]
    axis = int(g.integers(0, 3))
    factor = 1.0 + mag if g.random() < 0.5 else 1.0 - mag
    local = box.to_box_frame(data[rows, :3]) if rows.size else None
    if local is not None:
        local[:, axis] *= factor
    if axis == 2:
        # keep the bottom face where it was: lift box and points together
        lift = box.height * (factor - 1.0) / 2.0
        if local is not None:
            local[:, 2] += lift
        new_box = replace(box, cz=box.cz + lift, height=box.height * factor,
                          alpha=None)
    elif axis == 0:
        new_box = replace(box, length=box.length * factor, alpha=None)
    else:
        new_box = replace(box, width=box.width * factor, alpha=None)
    if local is not None:
        data[rows, :3] = box.from_box_frame(local)
    return new_box


def _rotation(data, rows, box, severity, g, counters, appended, doomed):
    lo, hi = ROTATION_BOUNDS_DEG[severity]
    deg = g.uniform(lo, hi)
    if g.random() >= 0.5:
        deg = -deg
    assert abs(deg) <= 10.0 + 1e-9
    ang = math.radians(deg)
    if rows.size:
        cs, sn = math.cos(ang), math.sin(ang)
        rot = np.array([[cs, -sn], [sn, cs]])
        xy = data[rows, :2] - [box.cx, box.cy]
        data[rows, :2] = xy @ rot.T + [box.cx, box.cy]
    return replace(box, yaw=normalize_angle(box.yaw + ang), alpha=None)


def _translation(data, rows, box, severity, g, counters, appended, doomed):
    lo, hi = TRANSLATION_BOUNDS_M[severity]
    mag = g.uniform(lo, hi)
    psi = g.uniform(0.0, 2.0 * math.pi)
    assert mag <= 1.0 + 1e-9
    ox, oy = mag * math.cos(psi), mag * math.sin(psi)
    if rows.size:
        data[rows, 0] += ox
        data[rows, 1] += oy
    return replace(box, cx=box.cx + ox, cy=box.cy + oy, alpha=None)


_KERNELS = {
    "uniform": _uniform,
    "gaussian": _gaussian,
    "impulse": _impulse,
    "upsample_obj": _upsample,
    "cutout_obj": _cutout,
    "local_dec_obj": _local_dec,
    "local_inc_obj": _local_inc,
    "shear": _shear,
    "ffd": _ffd,
    "scale": _scale,
    "rotation": _rotation,
    "translation": _translation,
}


def corrupt_objects(cloud: PointCloud, boxes, kind: str, severity: int,
                    stream: RandomStream, classes=None,
                    counters=None) -> CorruptedFrame:
    """Apply one object-level corruption kind to every targeted box.

    classes: optional set of class labels to corrupt; None targets all
    boxes. Non-targeted boxes and their points pass through untouched.
    """
    severity = check_severity(severity)
    if kind not in _KERNELS:
        raise ValueError(f"unknown object corruption kind: {kind!r}")
    spec = CorruptionSpec(kind, severity, stream.seed)
    if severity == 0:
        return CorruptedFrame(cloud.copy(), tuple(boxes), spec)
    g = stream.generator
    fallbacks = counters if counters is not None else {}
    slices = extract_objects(cloud, boxes)
    data = cloud.data.copy()
    appended: list[np.ndarray] = []
    doomed: list[np.ndarray] = []
    out_boxes = []
    handler = _KERNELS[kind]
    for box, slc in zip(boxes, slices):
        if classes is not None and box.class_label not in classes:
            out_boxes.append(box)
            continue
        out_boxes.append(handler(data, slc.member_indices, box, severity,
                                 g, fallbacks, appended, doomed))
    if doomed:
        keep = np.ones(len(data), dtype=bool)
        keep[np.concatenate(doomed)] = False
        data = data[keep]
    if appended:
        data = np.vstack([data] + appended)
    return CorruptedFrame(cloud.with_data(data), tuple(out_boxes), spec, fallbacks)
