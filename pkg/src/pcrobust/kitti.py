"""Readers and writers for KITTI-format files.

Covers velodyne point-cloud binaries, calibration files, and
label/detection text files, including the camera-frame to sensor-frame
conversion for annotation boxes. Point-cloud round trips are byte-exact;
label round trips hold to 1e-6 in meters and radians.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Box3D, PointCloud, normalize_angle

logger = logging.getLogger(__name__)


class FormatError(ValueError):
    """A file does not follow the expected KITTI layout."""


_PARSE_STATS = {"reflectance_clamped": 0}


def parse_stats():
    """Counters accumulated by the readers (e.g. clamped reflectance)."""
    return dict(_PARSE_STATS)


def reset_parse_stats():
    for k in _PARSE_STATS:
        _PARSE_STATS[k] = 0


# ---------------------------------------------------------------------------
# point clouds: little-endian float32 (x, y, z, reflectance), 16 bytes/point


def read_point_cloud(path) -> PointCloud:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) % 16:
        valid = len(raw) - len(raw) % 16
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of 16 bytes; "
            f"valid data ends at byte offset {valid}"
        )
    arr = np.frombuffer(raw, dtype="<f4").reshape(-1, 4).astype(np.float64)
    if arr.size and not np.isfinite(arr[:, :3]).all():
        bad = int(np.count_nonzero(~np.isfinite(arr[:, :3]).all(axis=1)))
        raise FormatError(f"{path}: {bad} points have non-finite coordinates")
    if arr.size:
        refl = arr[:, 3]
        out_of_range = int(np.count_nonzero((refl < 0.0) | (refl > 1.0)))
        if out_of_range:
            _PARSE_STATS["reflectance_clamped"] += out_of_range
            logger.warning(
                "%s: clamped %d reflectance values into [0, 1]", path, out_of_range
            )
            arr[:, 3] = np.clip(refl, 0.0, 1.0)
    return PointCloud(arr, frame_id=path.stem)


def write_point_cloud(cloud: PointCloud, path) -> None:
    path = Path(path)
    arr = np.ascontiguousarray(cloud.data, dtype="<f4")
    path.write_bytes(arr.tobytes())


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationMatrices:
    """Sensor-to-camera chain: extrinsic, rectification, and projection."""

    velo_to_cam: np.ndarray  # 3x4
    rect: np.ndarray  # 3x3
    cam_to_image: np.ndarray  # 3x4 (P2)

    def __post_init__(self):
        tr = np.asarray(self.velo_to_cam, dtype=np.float64)
        r0 = np.asarray(self.rect, dtype=np.float64)
        p2 = np.asarray(self.cam_to_image, dtype=np.float64)
        if tr.shape != (3, 4) or r0.shape != (3, 3) or p2.shape != (3, 4):
            raise FormatError(
                f"calibration shapes must be (3,4)/(3,3)/(3,4), got "
                f"{tr.shape}/{r0.shape}/{p2.shape}"
            )
        rot = tr[:, :3]
        if np.max(np.abs(rot @ rot.T - np.eye(3))) > 1e-3:
            raise FormatError("extrinsic rotation block is not orthonormal")
        object.__setattr__(self, "velo_to_cam", tr)
        object.__setattr__(self, "rect", r0)
        object.__setattr__(self, "cam_to_image", p2)
        m = np.eye(4)
        m[:3, :3] = r0
        t = np.eye(4)
        t[:3, :] = tr
        fwd = m @ t
        object.__setattr__(self, "_velo_to_rect", fwd)
        object.__setattr__(self, "_rect_to_velo", np.linalg.inv(fwd))

    def velo_to_cam_points(self, xyz):
        """Sensor-frame points (N, 3) to rectified camera coordinates."""
        p = np.asarray(xyz, dtype=np.float64)
        return p @ self._velo_to_rect[:3, :3].T + self._velo_to_rect[:3, 3]

    def cam_to_velo(self, xyz):
        """Rectified camera coordinates (N, 3) to the sensor frame."""
        p = np.asarray(xyz, dtype=np.float64)
        return p @ self._rect_to_velo[:3, :3].T + self._rect_to_velo[:3, 3]


def parse_calibration(text: str) -> CalibrationMatrices:
    values = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, rest = line.partition(":")
        values[key.strip()] = np.array([float(v) for v in rest.split()])
    try:
        tr = values.get("Tr_velo_to_cam", values.get("Tr_velo_cam"))
        r0 = values.get("R0_rect", values.get("R_rect"))
        p2 = values["P2"]
        if tr is None or r0 is None:
            raise KeyError("Tr_velo_to_cam / R0_rect")
        return CalibrationMatrices(tr.reshape(3, 4), r0.reshape(3, 3), p2.reshape(3, 4))
    except (KeyError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"calibration text missing or malformed: {exc}") from exc


def read_calibration(path) -> CalibrationMatrices:
    path = Path(path)
    try:
        return parse_calibration(path.read_text())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# labels and detections

#: KITTI label text fields, in order:
#: type trunc occ alpha left top right bottom h w l x y z rotation_y [score]


@dataclass(frozen=True)
class LabelRecord:
    """One raw label line, camera-frame, exactly as stored on disk."""

    type: str
    truncation: float
    occlusion: int
    alpha: float
    bbox: tuple  # (left, top, right, bottom)
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    rotation_y: float
    score: float | None = None


def _parse_label_line(line, where, require_score):
    fields = line.split()
    if len(fields) not in (15, 16):
        raise FormatError(f"{where}: expected 15 or 16 fields, got {len(fields)}")
    if require_score and len(fields) != 16:
        raise FormatError(f"{where}: detection line must carry a score (16 fields)")
    try:
        return LabelRecord(
            type=fields[0],
            truncation=float(fields[1]),
            occlusion=int(float(fields[2])),
            alpha=float(fields[3]),
            bbox=tuple(float(v) for v in fields[4:8]),
            h=float(fields[8]),
            w=float(fields[9]),
            l=float(fields[10]),
            x=float(fields[11]),
            y=float(fields[12]),
            z=float(fields[13]),
            rotation_y=float(fields[14]),
            score=float(fields[15]) if len(fields) == 16 else None,
        )
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def _record_to_box(rec: LabelRecord, calib, labels_in_lidar) -> Box3D:
    if labels_in_lidar:
        center = np.array([rec.x, rec.y, rec.z])
        yaw = rec.rotation_y
    else:
        if calib is None:
            raise ValueError("camera-frame labels need calibration matrices")
        bottom = calib.cam_to_velo(np.array([[rec.x, rec.y, rec.z]]))[0]
        center = bottom + np.array([0.0, 0.0, rec.h / 2.0])
        yaw = normalize_angle(-rec.rotation_y - math.pi / 2.0)
    return Box3D(
        cx=float(center[0]),
        cy=float(center[1]),
        cz=float(center[2]),
        length=rec.l,
        width=rec.w,
        height=rec.h,
        yaw=yaw,
        class_label=rec.type,
        score=rec.score,
        truncation=rec.truncation,
        occlusion=rec.occlusion,
        image_bbox=rec.bbox,
        alpha=rec.alpha,
    )


def _box_to_record(box: Box3D, calib, labels_in_lidar) -> LabelRecord:
    if labels_in_lidar:
        loc = (box.cx, box.cy, box.cz)
        ry = box.yaw
        alpha = box.alpha if box.alpha is not None else -10.0
    else:
        if calib is None:
            raise ValueError("writing camera-frame labels needs calibration matrices")
        bottom = np.array([[box.cx, box.cy, box.cz - box.height / 2.0]])
        cam = calib.velo_to_cam_points(bottom)[0]
        loc = (float(cam[0]), float(cam[1]), float(cam[2]))
        ry = normalize_angle(-box.yaw - math.pi / 2.0)
        if box.alpha is not None:
            alpha = box.alpha
        else:
            alpha = normalize_angle(ry - math.atan2(loc[0], loc[2]))
    return LabelRecord(
        type=box.class_label or "Car",
        truncation=box.truncation if box.truncation is not None else 0.0,
        occlusion=box.occlusion if box.occlusion is not None else 0,
        alpha=float(alpha),
        bbox=box.image_bbox if box.image_bbox is not None else (0.0, 0.0, 0.0, 0.0),
        h=box.height,
        w=box.width,
        l=box.length,
        x=loc[0],
        y=loc[1],
        z=loc[2],
        rotation_y=float(ry),
        score=box.score,
    )


def _format_record(rec: LabelRecord) -> str:
    parts = [
        rec.type,
        f"{rec.truncation:.6f}",
        str(int(rec.occlusion)),
        f"{rec.alpha:.6f}",
        *(f"{v:.6f}" for v in rec.bbox),
        f"{rec.h:.6f}",
        f"{rec.w:.6f}",
        f"{rec.l:.6f}",
        f"{rec.x:.6f}",
        f"{rec.y:.6f}",
        f"{rec.z:.6f}",
        f"{rec.rotation_y:.6f}",
    ]
    if rec.score is not None:
        parts.append(f"{rec.score:.6f}")
    return " ".join(parts)


def read_labels_text(text, calib, labels_in_lidar=False, require_score=False, where="<text>"):
    """Parse label lines into sensor-frame boxes plus a DontCare list."""
    boxes, ignored = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        rec = _parse_label_line(line, f"{where} line {lineno}", require_score)
        if rec.type == "DontCare":
            ignored.append(rec)
            continue
        boxes.append(_record_to_box(rec, calib, labels_in_lidar))
    return boxes, ignored


def read_labels(path, calib, labels_in_lidar=False):
    """Read a ground-truth label file.

    Returns (boxes, dontcare_records); boxes are sensor-frame Box3D in
    file order.
    """
    path = Path(path)
    return read_labels_text(
        path.read_text(), calib, labels_in_lidar=labels_in_lidar, where=str(path)
    )


def read_detections(path, calib, labels_in_lidar=False):
    """Read a detection file; every line must carry a confidence score."""
    path = Path(path)
    boxes, _ = read_labels_text(
        path.read_text(),
        calib,
        labels_in_lidar=labels_in_lidar,
        require_score=True,
        where=str(path),
    )
    return boxes


def write_labels(boxes, calib, path, labels_in_lidar=False, dontcare=()):
    """Write boxes as a KITTI label file (inverse of read_labels).

    DontCare records read earlier can be passed through unchanged; they
    are appended after the real objects, matching the usual file layout.
    """
    path = Path(path)
    lines = [_format_record(_box_to_record(b, calib, labels_in_lidar)) for b in boxes]
    lines.extend(_format_record(rec) for rec in dontcare)
    path.write_text("".join(line + "\n" for line in lines))
