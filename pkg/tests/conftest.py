"""Shared fixtures: synthetic KITTI-format frames, calibration text, disk trees.

The generators build scenes with a ground plane and non-overlapping
annotated boxes whose member points lie strictly inside, so membership
and count contracts are unambiguous in tests.
"""

import dataclasses

import numpy as np
import pytest

from pcrobust.core import Box3D, PointCloud

TR_VELO_TO_CAM = np.array(
    [
        [0.0, -1.0, 0.0, 0.01],
        [0.0, 0.0, -1.0, -0.05],
        [1.0, 0.0, 0.0, -0.27],
    ]
)

P2 = np.array(
    [
        [721.5, 0.0, 609.6, 44.9],
        [0.0, 721.5, 172.9, 0.2],
        [0.0, 0.0, 1.0, 0.003],
    ]
)


def rect_matrix(angle=0.002):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _fmt_row(values):
    return " ".join(f"{v:.12e}" for v in values)


def calib_text(tr=None, r0=None, p2=None):
    tr = TR_VELO_TO_CAM if tr is None else tr
    r0 = rect_matrix() if r0 is None else r0
    p2 = P2 if p2 is None else p2
    lines = []
    for key in ("P0", "P1", "P2", "P3"):
        lines.append(f"{key}: {_fmt_row(np.asarray(p2).ravel())}")
    lines.append(f"R0_rect: {_fmt_row(np.asarray(r0).ravel())}")
    lines.append(f"Tr_velo_to_cam: {_fmt_row(np.asarray(tr).ravel())}")
    lines.append(f"Tr_imu_to_velo: {_fmt_row(np.eye(3, 4).ravel())}")
    return "\n".join(lines) + "\n"


GROUND_Z = -1.73

_CAR_DIMS = (3.9, 1.7, 1.55)  # length, width, height
_PED_DIMS = (0.9, 0.7, 1.78)

# grid slots spaced 7 m apart: boxes can never overlap
_SLOTS = [(x, y) for x in (10.0, 17.0, 24.0, 31.0, 38.0, 45.0) for y in (-12.0, -5.0, 2.0, 9.0)]


def synthetic_boxes(rng, n_cars=3, n_peds=2):
    slots = rng.permutation(len(_SLOTS))[: n_cars + n_peds]
    boxes = []
    for i, slot in enumerate(slots):
        sx, sy = _SLOTS[slot]
        if i < n_cars:
            label, (l, w, h) = "Car", _CAR_DIMS
        else:
            label, (l, w, h) = "Pedestrian", _PED_DIMS
        boxes.append(
            Box3D(
                cx=sx + rng.uniform(-1.0, 1.0),
                cy=sy + rng.uniform(-1.0, 1.0),
                cz=GROUND_Z + h / 2.0,
                length=l,
                width=w,
                height=h,
                yaw=rng.uniform(-np.pi, np.pi),
                class_label=label,
                truncation=0.0,
                occlusion=0,
                image_bbox=(300.0, 120.0, 420.0, 190.0),  # 70 px tall: easy
            )
        )
    return boxes


def synthetic_frame(seed, n_points=8000, n_cars=3, n_peds=2, frame_id="000000",
                    zero_reflectance_fraction=0.04, points_per_object=120):
    """A ground plane plus boxed objects; returns (PointCloud, [Box3D])."""
    rng = np.random.default_rng(seed)
    boxes = synthetic_boxes(rng, n_cars, n_peds)

    chunks = []
    for box in boxes:
        m = int(points_per_object)
        local = rng.uniform(
            [-box.length / 2 + 0.05, -box.width / 2 + 0.05, -box.height / 2 + 0.05],
            [box.length / 2 - 0.05, box.width / 2 - 0.05, box.height / 2 - 0.05],
            size=(m, 3),
        )
        world = box.from_box_frame(local)
        refl = rng.uniform(0.1, 0.9, size=(m, 1))
        chunks.append(np.hstack([world, refl]))

    n_ground = max(n_points - sum(len(c) for c in chunks), 0)
    gx = rng.uniform(2.0, 60.0, n_ground)
    gy = rng.uniform(-25.0, 25.0, n_ground)
    gz = rng.uniform(GROUND_Z - 0.03, GROUND_Z + 0.03, n_ground)
    gr = rng.uniform(0.05, 0.9, n_ground)
    ground = np.column_stack([gx, gy, gz, gr])
    # keep the ground clear of every box footprint so membership is exact
    keep = np.ones(n_ground, dtype=bool)
    for box in boxes:
        d2 = (ground[:, 0] - box.cx) ** 2 + (ground[:, 1] - box.cy) ** 2
        keep &= d2 > 4.0**2
    ground = ground[keep]
    if n_ground and zero_reflectance_fraction > 0:
        nz = int(len(ground) * zero_reflectance_fraction)
        ground[rng.permutation(len(ground))[:nz], 3] = 0.0

    data = np.vstack([ground] + chunks)
    data = data[rng.permutation(len(data))]
    # float32-representable values so disk round trips are byte-exact
    data = data.astype(np.float32).astype(np.float64)
    return PointCloud(data, frame_id=frame_id), boxes


def as_detections(boxes, score=1.0):
    return [dataclasses.replace(b, score=score) for b in boxes]


def write_kitti_tree(root, frames, calib=None):
    """Write velodyne/label_2/calib dirs for {frame_id: (cloud, boxes)}."""
    from pcrobust import kitti

    velo = root / "velodyne"
    labels = root / "label_2"
    calib_dir = root / "calib"
    for d in (velo, labels, calib_dir):
        d.mkdir(parents=True, exist_ok=True)
    text = calib_text() if calib is None else calib
    cal = kitti.parse_calibration(text)
    for frame_id, (cloud, boxes) in frames.items():
        kitti.write_point_cloud(cloud, velo / f"{frame_id}.bin")
        kitti.write_labels(boxes, cal, labels / f"{frame_id}.txt")
        (calib_dir / f"{frame_id}.txt").write_text(text)
    return {"velodyne": velo, "label_2": labels, "calib": calib_dir}


@pytest.fixture
def small_frame():
    return synthetic_frame(seed=7, n_points=4000, frame_id="000007")


@pytest.fixture
def kitti_root(tmp_path):
    frames = {
        f"{i:06d}": synthetic_frame(seed=100 + i, n_points=3000, frame_id=f"{i:06d}")
        for i in range(3)
    }
    dirs = write_kitti_tree(tmp_path, frames)
    return tmp_path, frames, dirs
