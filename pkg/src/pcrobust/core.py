"""Core geometry and randomness shared by every other module.

Holds the point/box types, Cartesian-spherical conversions, the severity
scale, and the seeded random stream that makes corrupted datasets
regenerable bit-for-bit.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

#: Valid severity levels. Level 0 is the identity for every corruption.
SEVERITY_LEVELS = (0, 1, 2, 3, 4, 5)

#: Fixed generator family. Philox is counter-based, so draw sequences are
#: identical across platforms and independent of how work is scheduled.
RNG_ALGORITHM = "philox4x64"


def check_severity(severity):
    """Validate a severity level and return it as a plain int."""
    if isinstance(severity, bool) or not isinstance(severity, (int, np.integer)):
        raise ValueError(f"severity must be an integer in {SEVERITY_LEVELS}, got {severity!r}")
    if severity not in SEVERITY_LEVELS:
        raise ValueError(f"severity must be in {SEVERITY_LEVELS}, got {severity!r}")
    return int(severity)


def normalize_angle(angle):
    """Wrap an angle in radians into (-pi, pi]. Accepts scalars or arrays."""
    a = np.asarray(angle, dtype=np.float64)
    wrapped = -((-a + np.pi) % (2.0 * np.pi) - np.pi)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


class Point(NamedTuple):
    """One LiDAR return: Cartesian position in meters plus reflectance."""

    x: float
    y: float
    z: float
    reflectance: float


class SphericalPoint(NamedTuple):
    """A point in sensor spherical coordinates.

    r is range in meters, theta the polar angle from +z in [0, pi], phi
    the azimuth in (-pi, pi].
    """

    r: float
    theta: float
    phi: float
    reflectance: float


def cartesian_to_spherical(xyz):
    """Convert (..., 3) Cartesian coordinates to (r, theta, phi).

    theta is measured from +z so elevation rings of a spinning sensor map
    to theta bins. The origin maps to (0, 0, 0) by convention.
    """
    xyz = np.asarray(xyz, dtype=np.float64)
    r = np.linalg.norm(xyz, axis=-1)
    safe_r = np.where(r > 0.0, r, 1.0)
    cos_theta = np.where(r > 0.0, xyz[..., 2] / safe_r, 1.0)
    theta = np.arccos(np.clip(cos_theta, -1.0, 1.0))
    phi = np.arctan2(xyz[..., 1], xyz[..., 0])
    phi = np.where(phi == -np.pi, np.pi, phi)
    return np.stack([r, theta, phi], axis=-1)


def spherical_to_cartesian(rtp):
    """Convert (..., 3) spherical coordinates (r, theta, phi) to Cartesian."""
    rtp = np.asarray(rtp, dtype=np.float64)
    r, theta, phi = rtp[..., 0], rtp[..., 1], rtp[..., 2]
    sin_t = np.sin(theta)
    return np.stack(
        [r * sin_t * np.cos(phi), r * sin_t * np.sin(phi), r * np.cos(theta)],
        axis=-1,
    )


def to_spherical(p: Point) -> SphericalPoint:
    """Spherical coordinates of a single point; reflectance passes through."""
    rtp = cartesian_to_spherical(np.array([p.x, p.y, p.z], dtype=np.float64))
    return SphericalPoint(float(rtp[0]), float(rtp[1]), float(rtp[2]), p.reflectance)


def to_cartesian(s: SphericalPoint) -> Point:
    """Inverse of to_spherical; reflectance passes through."""
    xyz = spherical_to_cartesian(np.array([s.r, s.theta, s.phi], dtype=np.float64))
    return Point(float(xyz[0]), float(xyz[1]), float(xyz[2]), s.reflectance)


@dataclass(frozen=True)
class PointCloud:
    """A frame of points as an (N, 4) float64 array: x, y, z, reflectance.

    Stored in float64 so geometric contracts (angle preservation under
    radial edits, exact row identity for untouched points) survive
    round trips through the float32 on-disk format. Treat instances as
    immutable: operations return new clouds and never edit in place.
    """

    data: np.ndarray
    frame_id: str = ""

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"point cloud data must have shape (N, 4), got {arr.shape}")
        object.__setattr__(self, "data", arr)

    def __len__(self):
        return self.data.shape[0]

    @property
    def xyz(self):
        return self.data[:, :3]

    @property
    def reflectance(self):
        return self.data[:, 3]

    def with_data(self, data) -> "PointCloud":
        """New cloud with replaced points, same frame id."""
        return PointCloud(data, self.frame_id)

    def copy(self) -> "PointCloud":
        return PointCloud(self.data.copy(), self.frame_id)


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D box in the sensor frame.

    (cx, cy, cz) is the geometric center; length runs along the heading
    given by yaw (about +z), width across it, height vertically. Optional
    annotation attributes ride along for difficulty assignment and label
    round trips.
    """

    cx: float
    cy: float
    cz: float
    length: float
    width: float
    height: float
    yaw: float
    class_label: str = ""
    score: float | None = None
    truncation: float | None = None
    occlusion: int | None = None
    image_bbox: tuple | None = None  # (left, top, right, bottom) pixels
    alpha: float | None = None

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.height > 0):
            raise ValueError(
                f"box dimensions must be positive, got "
                f"({self.length}, {self.width}, {self.height})"
            )
        object.__setattr__(self, "yaw", float(normalize_angle(self.yaw)))
        if self.image_bbox is not None:
            object.__setattr__(self, "image_bbox", tuple(float(v) for v in self.image_bbox))

    @property
    def center(self):
        return np.array([self.cx, self.cy, self.cz], dtype=np.float64)

    @property
    def volume(self):
        return self.length * self.width * self.height

    @property
    def bottom_z(self):
        return self.cz - self.height / 2.0

    @property
    def top_z(self):
        return self.cz + self.height / 2.0

    @property
    def image_bbox_height(self):
        if self.image_bbox is None:
            return None
        return self.image_bbox[3] - self.image_bbox[1]

    def _rot2d(self, angle):
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[c, -s], [s, c]], dtype=np.float64)

    def to_box_frame(self, xyz):
        """Map world points (N, 3) into the box frame (x along heading)."""
        p = np.asarray(xyz, dtype=np.float64) - self.center
        out = np.empty_like(p)
        out[:, :2] = p[:, :2] @ self._rot2d(-self.yaw).T
        out[:, 2] = p[:, 2]
        return out

    def from_box_frame(self, q):
        """Inverse of to_box_frame."""
        q = np.asarray(q, dtype=np.float64)
        out = np.empty_like(q)
        out[:, :2] = q[:, :2] @ self._rot2d(self.yaw).T
        out[:, 2] = q[:, 2]
        return out + self.center

    def contains(self, xyz, margin=1e-6):
        """Boolean mask of points inside the box (with a small margin)."""
        q = self.to_box_frame(xyz)
        return (
            (np.abs(q[:, 0]) <= self.length / 2.0 + margin)
            & (np.abs(q[:, 1]) <= self.width / 2.0 + margin)
            & (np.abs(q[:, 2]) <= self.height / 2.0 + margin)
        )

    def bev_corners(self):
        """Ground-plane footprint as a (4, 2) counterclockwise polygon."""
        hl, hw = self.length / 2.0, self.width / 2.0
        local = np.array(
            [[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]], dtype=np.float64
        )
        return local @ self._rot2d(self.yaw).T + np.array([self.cx, self.cy])

    def corners(self):
        """All 8 corners as (8, 3): bottom face first, then top face."""
        bev = self.bev_corners()
        out = np.empty((8, 3), dtype=np.float64)
        out[:4, :2] = bev
        out[4:, :2] = bev
        out[:4, 2] = self.bottom_z
        out[4:, 2] = self.top_z
        return out


class RandomStream:
    """Deterministic random source for one corruption invocation.

    Same (seed, call sequence) always reproduces the same draws; the
    underlying algorithm is pinned by RNG_ALGORITHM and never shared
    between invocations or threads.
    """

    __slots__ = ("seed", "algorithm", "_gen")

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        self.algorithm = RNG_ALGORITHM
        self._gen = np.random.Generator(np.random.Philox(seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def uniform(self, lo, hi, size=None):
        if np.any(np.asarray(lo) > np.asarray(hi)):
            raise ValueError(f"uniform bounds inverted: lo={lo}, hi={hi}")
        return self._gen.uniform(lo, hi, size)

    def gaussian(self, mean, stddev, size=None):
        if np.any(np.asarray(stddev) < 0):
            raise ValueError(f"stddev must be >= 0, got {stddev}")
        return self._gen.normal(mean, stddev, size)

    def choose_without_replacement(self, n, k):
        if k > n:
            raise ValueError(f"cannot choose {k} distinct indices from {n}")
        return self._gen.choice(n, size=k, replace=False)

    def coin_signs(self, size=None):
        """Fair +/- 1.0 draws."""
        return np.where(self._gen.random(size) < 0.5, 1.0, -1.0)


def frame_seed(base_seed: int, frame_id: str, kind: str, severity: int) -> int:
    """Derive the per-(frame, kind, severity) stream seed from a base seed.

    A stable 64-bit hash, so any frame of a run can be regenerated in
    isolation and worker scheduling cannot change outputs.
    """
    msg = f"{base_seed}:{frame_id}:{kind}:{severity}".encode()
    return int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "big")
