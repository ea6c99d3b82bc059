"""Apply a handful of corruption kinds to one frame and compare clouds.

Every corruption takes (cloud, boxes, kind, severity, stream) and returns
a CorruptedFrame carrying the corrupted cloud, the (possibly updated)
boxes, and provenance. Severity 0 is always the identity.
"""

import numpy as np

from pcrobust import RandomStream, apply_corruption
from _common import make_frame


def main():
    cloud, boxes = make_frame(seed=7)
    print(f"input frame: {len(cloud)} points, {len(boxes)} boxes")

    for kind in ("gaussian_rad", "beam_del", "upsample", "fog", "translation"):
        out = apply_corruption(cloud, boxes, kind, 3, RandomStream(42))
        moved = "yes" if any(
            a is not b and a != b for a, b in zip(out.boxes, boxes)) else "no"
        print(f"\n{kind} @ severity 3")
        print(f"  points: {len(cloud)} -> {len(out.cloud)}")
        print(f"  boxes changed: {moved}")
        print(f"  provenance: kind={out.provenance.kind} "
              f"severity={out.provenance.severity} seed={out.provenance.seed}")

    ident = apply_corruption(cloud, boxes, "gaussian_rad", 0, RandomStream(42))
    print("\nseverity 0 is the identity:",
          np.array_equal(ident.cloud.data, cloud.data))


if __name__ == "__main__":
    main()
