"""Whole-frame point cloud corruption kernels.

Every kernel takes ``(cloud, severity, stream)`` plus an optional
``counters`` dict for fallback bookkeeping, and returns a new
:class:`~pcrobust.core.PointCloud`. Inputs are never mutated and
severity 0 is always the identity. Point order is preserved: deletion
kernels keep survivors in input order, append kernels put the original
points first.
"""

from __future__ import annotations

import logging

import numpy as np

from .core import PointCloud, RandomStream, cartesian_to_spherical, check_severity
from .knn import KnnIndex

logger = logging.getLogger(__name__)

# severity-indexed parameters, index 0 = identity
UNIFORM_RAD_BOUNDS = (0.0, 0.04, 0.08, 0.12, 0.16, 0.20)
GAUSSIAN_RAD_SIGMAS = (0.0, 0.04, 0.06, 0.08, 0.10, 0.12)
IMPULSE_RAD_DIVISORS = (0, 30, 25, 20, 15, 10)
IMPULSE_RAD_MAGNITUDE = 0.2
BACKGROUND_DIVISORS = (0, 45, 40, 35, 30, 20)
UPSAMPLE_DIVISORS = (0, 10, 8, 6, 4, 2)
UPSAMPLE_OFFSET_BOUND = 0.1
CUTOUT_DIVISORS = (0, 2000, 1500, 1000, 800, 600)
CUTOUT_NEIGHBORHOOD = 100
LOCAL_DEC_DIVISORS = (0, 300, 250, 200, 150, 100)
LOCAL_DEC_NEIGHBORHOOD = 100
LOCAL_DEC_FRACTION = 0.75
LOCAL_INC_DIVISORS = (0, 2000, 1500, 1000, 800, 600)
LOCAL_INC_NEIGHBORHOOD = 100
LOCAL_INC_JITTER = 0.01
BEAM_DEL_DIVISORS = (0, 100, 30, 10, 5, 3)
LAYER_DEL_COUNTS = (0, 3, 7, 11, 15, 19)


def _count(n: int, divisor: int) -> int:
    return 0 if divisor == 0 else n // divisor


def _bump(counters, key, amount=1):
    if counters is not None:
        counters[key] = counters.get(key, 0) + amount


def _move_radially(data: np.ndarray, rows: np.ndarray, dr: np.ndarray) -> None:
    """Shift selected points along their own ray by dr, in place.

    Scaling xyz by (r + dr) / r keeps both spherical angles bit-exact.
    Radii clamp at zero; a point already at the origin moves up the +z
    axis, matching the theta = 0 convention there.
    """
    xyz = data[rows, :3]
    r = np.linalg.norm(xyz, axis=1)
    r_new = np.maximum(r + dr, 0.0)
    at_origin = r == 0.0
    scale = np.ones_like(r)
    np.divide(r_new, r, out=scale, where=~at_origin)
    moved = xyz * scale[:, None]
    if at_origin.any():
        moved[at_origin] = 0.0
        moved[at_origin, 2] = r_new[at_origin]
    data[rows, :3] = moved


def radial_noise(cloud: PointCloud, kind: str, severity: int,
                 stream: RandomStream, counters=None) -> PointCloud:
    """Perturb ranges while preserving every point's bearing.

    kind: "uniform" (bounded noise on all points), "gaussian"
    (unbounded noise on all points), or "impulse" (a fixed +-0.2 m jump
    on a floor(N / divisor) subset; untouched rows stay bit-identical).
    """
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    g = stream.generator
    data = cloud.data.copy()
    if kind == "uniform":
        bound = UNIFORM_RAD_BOUNDS[severity]
        rows = np.arange(n)
        dr = g.uniform(-bound, bound, n)
    elif kind == "gaussian":
        rows = np.arange(n)
        dr = g.normal(0.0, GAUSSIAN_RAD_SIGMAS[severity], n)
    elif kind == "impulse":
        m = _count(n, IMPULSE_RAD_DIVISORS[severity])
        rows = g.choice(n, size=m, replace=False)
        signs = np.where(g.random(m) < 0.5, 1.0, -1.0)
        dr = signs * IMPULSE_RAD_MAGNITUDE
    else:
        raise ValueError(f"unknown radial noise kind: {kind!r}")
    _move_radially(data, rows, dr)
    return cloud.with_data(data)


def uniform_rad(cloud, severity, stream, counters=None):
    return radial_noise(cloud, "uniform", severity, stream, counters)


def gaussian_rad(cloud, severity, stream, counters=None):
    return radial_noise(cloud, "gaussian", severity, stream, counters)


def impulse_rad(cloud, severity, stream, counters=None):
    return radial_noise(cloud, "impulse", severity, stream, counters)


def background_noise(cloud: PointCloud, severity: int, stream: RandomStream,
                     counters=None) -> PointCloud:
    """Append floor(N / divisor) spurious points uniform in the cloud AABB."""
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    if n == 0:
        raise ValueError("background noise needs at least one point to define the volume")
    g = stream.generator
    m = _count(n, BACKGROUND_DIVISORS[severity])
    lo = cloud.xyz.min(axis=0)
    hi = cloud.xyz.max(axis=0)
    xyz = g.uniform(lo, hi, size=(m, 3))
    refl = g.random(m)
    return cloud.with_data(np.vstack([cloud.data, np.column_stack([xyz, refl])]))


def scene_upsample(cloud: PointCloud, severity: int, stream: RandomStream,
                   counters=None) -> PointCloud:
    """Duplicate a random subset with per-axis U(-0.1, 0.1) offsets appended."""
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    g = stream.generator
    m = _count(n, UPSAMPLE_DIVISORS[severity])
    sel = g.choice(n, size=m, replace=False)
    extra = cloud.data[sel].copy()
    extra[:, :3] += g.uniform(-UPSAMPLE_OFFSET_BOUND, UPSAMPLE_OFFSET_BOUND, size=(m, 3))
    return cloud.with_data(np.vstack([cloud.data, extra]))


def scene_cutout(cloud: PointCloud, severity: int, stream: RandomStream,
                 counters=None) -> PointCloud:
    """Delete the k=100 nearest neighborhoods of floor(N / divisor) random centers."""
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    g = stream.generator
    c = _count(n, CUTOUT_DIVISORS[severity])
    if c == 0:
        return cloud.copy()
    centers = g.choice(n, size=c, replace=False)
    k = min(CUTOUT_NEIGHBORHOOD, n)
    _, idx = KnnIndex(cloud.xyz).query(cloud.xyz[centers], k)
    keep = np.ones(n, dtype=bool)
    keep[np.unique(idx)] = False
    return cloud.with_data(cloud.data[keep])


def scene_local_density(cloud: PointCloud, direction: str, severity: int,
                        stream: RandomStream, counters=None) -> PointCloud:
    """Thin out ("dec") or densify ("inc") random k=100 neighborhoods.

    dec removes floor(0.75 k) points from each chosen neighborhood.
    inc fits a local height field z = f(x, y) to each neighborhood and
    appends k points sampled on it; the fit degrades quadratic -> plane
    -> jittered duplicates as the neighborhood geometry degenerates,
    bumping a counter per fallback.
    """
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    if direction == "dec":
        divisors, k_nominal = LOCAL_DEC_DIVISORS, LOCAL_DEC_NEIGHBORHOOD
    elif direction == "inc":
        divisors, k_nominal = LOCAL_INC_DIVISORS, LOCAL_INC_NEIGHBORHOOD
    else:
        raise ValueError(f"unknown density direction: {direction!r}")
    n = len(cloud)
    g = stream.generator
    c = _count(n, divisors[severity])
    if c == 0:
        return cloud.copy()
    centers = g.choice(n, size=c, replace=False)
    k = min(k_nominal, n)
    _, nbrs = KnnIndex(cloud.xyz).query(cloud.xyz[centers], k)

    if direction == "dec":
        per = int(LOCAL_DEC_FRACTION * k)
        # random 75% subset per neighborhood: rank iid keys row-wise
        keys = g.random((c, k))
        sel = np.argpartition(keys, per - 1, axis=1)[:, :per]
        doomed = np.take_along_axis(nbrs, sel, axis=1)
        keep = np.ones(n, dtype=bool)
        keep[doomed.ravel()] = False
        return cloud.with_data(cloud.data[keep])

    added = _densify_neighborhoods(cloud.data[nbrs], g, counters)
    return cloud.with_data(np.vstack([cloud.data, added.reshape(-1, 4)]))


def _quad_design(cxy: np.ndarray) -> np.ndarray:
    """[1, x, y, x^2, xy, y^2] basis over the trailing coordinate axis."""
    x, y = cxy[..., 0], cxy[..., 1]
    return np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=-1)


def _design_rank(gram: np.ndarray, k: int) -> np.ndarray:
    # eigenvalues of D^T D are the squared singular values of D, but
    # forming the Gram matrix floors them near eps * lambda_max; the
    # cutoff sits above that floor so exact degeneracies are caught,
    # at the cost of calling designs past cond ~ 1/sqrt(eps) deficient
    # (far beyond anything a metric-scale neighborhood produces)
    w = np.linalg.eigvalsh(gram)
    tol = w[:, -1:] * (k * np.finfo(np.float64).eps)
    return (w > tol).sum(axis=1)


def _densify_neighborhoods(nb: np.ndarray, g, counters) -> np.ndarray:
    """Sample k new points on a surface fitted to each (c, k, 4) neighborhood."""
    c, k, _ = nb.shape
    mean_xy = nb[:, :, :2].mean(axis=1, keepdims=True)
    design = _quad_design(nb[:, :, :2] - mean_xy)
    gram = design.transpose(0, 2, 1) @ design
    rhs = np.einsum("nki,nk->ni", design, nb[:, :, 2])

    quad_ok = _design_rank(gram, k) == 6
    plane_ok = ~quad_ok & (_design_rank(gram[:, :3, :3], k) == 3)
    jitter = ~quad_ok & ~plane_ok
    if plane_ok.any():
        _bump(counters, "local_inc_plane_fallback", int(plane_ok.sum()))
    if jitter.any():
        _bump(counters, "local_inc_jitter_fallback", int(jitter.sum()))

    lo = nb[:, :, :2].min(axis=1, keepdims=True)
    hi = nb[:, :, :2].max(axis=1, keepdims=True)
    new_xy = g.uniform(lo, hi, size=(c, k, 2))
    new_design = _quad_design(new_xy - mean_xy)

    out = np.empty((c, k, 4))
    out[:, :, :2] = new_xy
    if quad_ok.any():
        coef = np.linalg.solve(gram[quad_ok], rhs[quad_ok, :, None])[:, :, 0]
        out[quad_ok, :, 2] = np.einsum("nki,ni->nk", new_design[quad_ok], coef)
    if plane_ok.any():
        coef = np.linalg.solve(
            gram[plane_ok][:, :3, :3], rhs[plane_ok][:, :3, None]
        )[:, :, 0]
        out[plane_ok, :, 2] = np.einsum(
            "nki,ni->nk", new_design[plane_ok][:, :, :3], coef
        )
    fitted = ~jitter
    if fitted.any():
        # reflectance copied from the nearest original neighbor in 3D;
        # |new|^2 is constant per row, so argmin needs only the cross
        # and source-norm terms
        src = nb[fitted][:, :, :3]
        score = (src * src).sum(axis=2)[:, None, :] - 2.0 * (
            out[fitted][:, :, :3] @ src.transpose(0, 2, 1)
        )
        nearest = np.argmin(score, axis=2)
        out[fitted, :, 3] = np.take_along_axis(nb[fitted][:, :, 3], nearest, axis=1)
    if jitter.any():
        shaken = nb[jitter].copy()
        shaken[:, :, :3] += g.uniform(
            -LOCAL_INC_JITTER, LOCAL_INC_JITTER, size=shaken[:, :, :3].shape
        )
        out[jitter] = shaken
    return out


def local_dec(cloud, severity, stream, counters=None):
    return scene_local_density(cloud, "dec", severity, stream, counters)


def local_inc(cloud, severity, stream, counters=None):
    return scene_local_density(cloud, "inc", severity, stream, counters)


def beam_delete(cloud: PointCloud, severity: int, stream: RandomStream,
                counters=None) -> PointCloud:
    """Drop floor(N / divisor) points chosen uniformly without replacement."""
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    g = stream.generator
    m = _count(n, BEAM_DEL_DIVISORS[severity])
    if m == 0:
        return cloud.copy()
    doomed = g.choice(n, size=m, replace=False)
    keep = np.ones(n, dtype=bool)
    keep[doomed] = False
    return cloud.with_data(cloud.data[keep])


def layer_delete(cloud: PointCloud, severity: int, stream: RandomStream,
                 n_layers: int = 64, counters=None) -> PointCloud:
    """Remove whole elevation bands, emulating dead scan lines.

    Points are binned by polar angle into n_layers equal-width bins
    spanning the observed angle range (the max angle falls in the last
    bin), and a severity-dependent number of bins is deleted.
    """
    severity = check_severity(severity)
    if severity == 0:
        return cloud.copy()
    n = len(cloud)
    if n == 0:
        logger.warning("layer deletion on an empty cloud: returning it unchanged")
        return cloud.copy()
    g = stream.generator
    s = LAYER_DEL_COUNTS[severity]
    theta = cartesian_to_spherical(cloud.xyz)[:, 1]
    t_lo = theta.min()
    span = theta.max() - t_lo
    if span == 0.0:
        bins = np.zeros(n, dtype=np.int64)
    else:
        bins = np.clip(((theta - t_lo) / span * n_layers).astype(np.int64),
                       0, n_layers - 1)
    chosen = g.choice(n_layers, size=s, replace=False)
    keep = ~np.isin(bins, chosen)
    return cloud.with_data(cloud.data[keep])


SCENE_KERNELS = {
    "uniform_rad": uniform_rad,
    "gaussian_rad": gaussian_rad,
    "impulse_rad": impulse_rad,
    "background": background_noise,
    "upsample": scene_upsample,
    "cutout": scene_cutout,
    "local_dec": local_dec,
    "local_inc": local_inc,
    "beam_del": beam_delete,
    "layer_del": layer_delete,
}
