"""Simulate fog, rain, and snow over one frame.

The scattering model attenuates reflectance with range, deletes returns
that fall below the detectability floor, and relocates a fraction of the
survivors to short range as backscatter; points whose recorded
reflectance is exactly zero are exempt from deletion.
"""

import numpy as np

from pcrobust import RandomStream, apply_corruption
from pcrobust.weather import params_for
from _common import make_frame


def main():
    cloud, boxes = make_frame(seed=3, n_ground=15000)
    r_in = np.linalg.norm(cloud.xyz, axis=1)
    print(f"frame: {len(cloud)} points, "
          f"mean range {r_in.mean():.1f} m, "
          f"mean reflectance {cloud.reflectance.mean():.3f}")

    for kind in ("fog", "rain", "snow"):
        print(f"\n{kind}:")
        print(f"{'severity':>8} {'alpha (1/m)':>12} {'kept':>7} "
              f"{'near (<5 m)':>12} {'mean refl':>10}")
        for severity in (1, 3, 5):
            params = params_for(kind, severity)
            out = apply_corruption(cloud, boxes, kind, severity,
                                   RandomStream(9))
            r_out = np.linalg.norm(out.cloud.xyz, axis=1)
            refl = (f"{out.cloud.reflectance.mean():.3f}"
                    if len(out.cloud) else "-")  # whiteout wipes the frame
            print(f"{severity:>8} {params.alpha_per_m:>12.4f} "
                  f"{len(out.cloud):>7} {(r_out < 5.0).sum():>12} "
                  f"{refl:>10}")

    print("\nheavier weather keeps fewer returns, attenuates the rest,")
    print("and piles backscatter points up close to the sensor.")


if __name__ == "__main__":
    main()
