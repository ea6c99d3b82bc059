"""Shared synthetic-scene builder for the demo scripts.

Builds a LiDAR-like frame: a ground plane of scattered returns plus a
few annotated objects (cars and pedestrians) filled with points, so the
demos run without any dataset on disk.
"""

import numpy as np

from pcrobust import Box3D, PointCloud

GROUND_Z = -1.73


def make_frame(seed=0, n_ground=6000, points_per_object=150):
    rng = np.random.default_rng(seed)
    boxes = [
        Box3D(cx=8.0, cy=-2.0, cz=GROUND_Z + 0.78, length=3.9, width=1.7,
              height=1.56, yaw=0.3, class_label="Car",
              truncation=0.0, occlusion=0, image_bbox=(100, 100, 200, 180)),
        Box3D(cx=15.0, cy=4.0, cz=GROUND_Z + 0.78, length=3.9, width=1.7,
              height=1.56, yaw=-1.2, class_label="Car",
              truncation=0.0, occlusion=0, image_bbox=(300, 100, 400, 175)),
        Box3D(cx=11.0, cy=6.5, cz=GROUND_Z + 0.89, length=0.9, width=0.7,
              height=1.78, yaw=0.0, class_label="Pedestrian",
              truncation=0.0, occlusion=0, image_bbox=(500, 80, 530, 190)),
    ]
    chunks = []
    for box in boxes:
        half = np.array([box.length, box.width, box.height]) / 2.0 - 0.04
        local = rng.uniform(-half, half, size=(points_per_object, 3))
        c, s = np.cos(box.yaw), np.sin(box.yaw)
        world = np.column_stack([
            c * local[:, 0] - s * local[:, 1] + box.cx,
            s * local[:, 0] + c * local[:, 1] + box.cy,
            local[:, 2] + box.cz,
        ])
        refl = rng.uniform(0.2, 0.9, (points_per_object, 1))
        chunks.append(np.hstack([world, refl]))

    gx = rng.uniform(2.0, 40.0, n_ground)
    gy = rng.uniform(-15.0, 15.0, n_ground)
    gz = GROUND_Z + rng.normal(0.0, 0.02, n_ground)
    grefl = rng.uniform(0.05, 0.5, n_ground)
    ground = np.column_stack([gx, gy, gz, grefl])
    near_box = np.zeros(n_ground, dtype=bool)
    for box in boxes:
        near_box |= (np.abs(gx - box.cx) < 3.0) & (np.abs(gy - box.cy) < 3.0)
    chunks.append(ground[~near_box])

    return PointCloud(np.vstack(chunks)), boxes
