"""End-to-end evaluation walkthrough.

Builds a tiny dataset on disk, corrupts it, plays the role of a
detector whose output degrades with severity, and scores that detector:
per-class accuracy deltas plus the pooled detection-bug partition.
Everything runs inside a temporary directory.
"""

import dataclasses
import tempfile
from pathlib import Path

from pcrobust import Box3D, DatasetManifest, run_corrupt, run_evaluate
from pcrobust import kitti
from _common import GROUND_Z, make_frame

KINDS = ("gaussian_rad", "translation")
SEVERITIES = (1, 3, 5)
N_FRAMES = 4


def calib_text():
    proj = "721.5 0 609.6 44.9 0 721.5 172.9 0.2 0 0 1 0.003"
    lines = [f"P{i}: {proj}" for i in range(4)]
    lines.append("R0_rect: 1 0 0 0 1 0 0 0 1")
    lines.append("Tr_velo_to_cam: 0 -1 0 0.01 0 0 -1 -0.05 1 0 0 -0.27")
    return "\n".join(lines) + "\n"


def write_ground_truth(gt_root, calib):
    text = calib_text()
    for sub in ("velodyne", "label_2", "calib"):
        (gt_root / sub).mkdir(parents=True)
    frame_ids = []
    for i in range(N_FRAMES):
        fid = f"{i:06d}"
        cloud, boxes = make_frame(seed=i)
        kitti.write_point_cloud(cloud, gt_root / "velodyne" / f"{fid}.bin")
        kitti.write_labels(boxes, calib, gt_root / "label_2" / f"{fid}.txt")
        (gt_root / "calib" / f"{fid}.txt").write_text(text)
        frame_ids.append(fid)
    return frame_ids


def fabricate_detections(gt_root, det_root, calib, frame_ids):
    """Pretend-detector: perfect on clean, sloppier as severity rises.

    It copies the ground truth with a confidence score, but from
    severity 3 on it stops finding pedestrians, and at severity 5 it
    commits one bug of each kind: a car localized too loosely (below
    the IoU threshold), the pedestrian called a cyclist, and a
    hallucinated car overlapping nothing.
    """

    def cell_labels(kind, sev, fid):
        cell = gt_root / kind / str(sev) / "label_2" / f"{fid}.txt"
        if cell.exists():  # label-mutating kinds move the ground truth
            return cell
        return gt_root / "label_2" / f"{fid}.txt"

    def detect(label_path, severity):
        boxes, _ = kitti.read_labels(label_path, calib)
        dets = [dataclasses.replace(b, score=0.9) for b in boxes]
        if severity >= 3:
            dets = [d for d in dets if d.class_label != "Pedestrian"]
        if severity >= 5:
            dets[0] = dataclasses.replace(
                dets[0], cx=dets[0].cx + 1.5, score=0.8)
            ped = next(b for b in boxes if b.class_label == "Pedestrian")
            dets.append(dataclasses.replace(
                ped, class_label="Cyclist", score=0.5))
            dets.append(Box3D(
                cx=30.0, cy=-8.0, cz=GROUND_Z + 0.78, length=3.9, width=1.7,
                height=1.56, yaw=0.0, class_label="Car", score=0.25,
                truncation=0.0, occlusion=0,
                image_bbox=(600.0, 120.0, 680.0, 170.0)))
        return dets

    clean_dir = det_root / "clean"
    clean_dir.mkdir(parents=True)
    for fid in frame_ids:
        dets = detect(gt_root / "label_2" / f"{fid}.txt", severity=0)
        kitti.write_labels(dets, calib, clean_dir / f"{fid}.txt")

    for kind in KINDS:
        for sev in SEVERITIES:
            cell_dir = det_root / kind / str(sev)
            cell_dir.mkdir(parents=True)
            for fid in frame_ids:
                dets = detect(cell_labels(kind, sev, fid), sev)
                kitti.write_labels(dets, calib, cell_dir / f"{fid}.txt")


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        gt_root = root / "gt"
        calib = kitti.parse_calibration(calib_text())
        frame_ids = write_ground_truth(gt_root, calib)
        print(f"wrote {len(frame_ids)} ground-truth frames under {gt_root}")

        manifest = DatasetManifest(
            velodyne_dir=gt_root / "velodyne",
            label_dir=gt_root / "label_2",
            calib_dir=gt_root / "calib",
            output_dir=gt_root,
            kinds=KINDS,
            severities=SEVERITIES,
            base_seed=7,
        )
        summary = run_corrupt(manifest)
        print(f"corrupted {summary.n_written} cells "
              f"({len(KINDS)} kinds x {len(SEVERITIES)} severities x "
              f"{len(frame_ids)} frames)")

        det_root = root / "demo_det"
        fabricate_detections(gt_root, det_root, calib, frame_ids)
        print(f"fabricated detections under {det_root}\n")

        result = run_evaluate(gt_root, det_root, root / "eval")
        print(result.table_path.read_text())
        print("Reading the table: pedestrian accuracy collapses from "
              "severity 3 on, and at severity 5 the bug partition "
              "splits evenly across all four categories: the well-"
              "placed car is a true detection (TD), the mislabelled "
              "pedestrian a false cue (FC), the loosely localized car "
              "a false detection (FD), and the hallucination that "
              "overlaps nothing lands in MD.")


if __name__ == "__main__":
    main()
