"""Remove planted outliers with the k-NN statistical filter.

Each point's mean distance to its 50 nearest neighbors is compared
against the global mean plus three standard deviations; points beyond
the threshold are dropped. Isolated far-field points light up, while
dense structure survives untouched.
"""

import numpy as np

from pcrobust import PointCloud, knn_outlier_removal
from _common import make_frame


def main():
    cloud, _ = make_frame(seed=11)
    rng = np.random.default_rng(2)
    n_plants = 8
    direction = rng.normal(size=(n_plants, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    plants = np.column_stack([direction * rng.uniform(150, 250, (n_plants, 1)),
                              rng.uniform(0.2, 0.8, (n_plants, 1))])
    noisy = PointCloud(np.vstack([cloud.data, plants]))
    print(f"scene: {len(cloud)} real points + {n_plants} planted outliers")

    result = knn_outlier_removal(noisy, k=50, n_sigma=3.0)
    removed = set(result.removed_indices.tolist())
    planted = set(range(len(cloud), len(noisy)))
    print(f"removed {len(removed)} points")
    print(f"  planted outliers caught: {len(removed & planted)}/{n_plants}")
    print(f"  real points sacrificed:  {len(removed - planted)}")
    print(f"cloud: {len(noisy)} -> {len(result.cloud)} points")


if __name__ == "__main__":
    main()
