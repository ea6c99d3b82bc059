"""Exact k-nearest-neighbor queries with deterministic tie handling."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


class KnnIndex:
    """Immutable exact-KNN index over an (N, 3) point set.

    Neighbor lists are ordered by (distance, source index). The index
    rule makes results unique even when several points are exactly
    equidistant from a query, so everything built on top of the index is
    bit-stable across platforms and runs.
    """

    def __init__(self, points):
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        self._points = pts
        self._n = pts.shape[0]
        # leafsize/balance/compaction tuned for ~100k-point frames:
        # cheaper builds, near-identical query cost
        self._tree = (
            cKDTree(pts, leafsize=64, balanced_tree=False, compact_nodes=False)
            if self._n else None
        )

    def __len__(self):
        return self._n

    @property
    def points(self):
        return self._points

    def query(self, queries, k):
        """Exact k nearest neighbors of each query row.

        Returns (distances, indices), each of shape (Q, min(k, N)), every
        row sorted by (distance, source index). Fewer than k columns come
        back when the index holds fewer than k points.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        nq = q.shape[0]
        k_eff = min(int(k), self._n)
        if k_eff == 0 or nq == 0:
            return (
                np.empty((nq, k_eff), dtype=np.float64),
                np.empty((nq, k_eff), dtype=np.intp),
            )
        # probe one past k: a strict distance increase there proves the
        # k-set is unique; equality flags a boundary tie to resolve
        k_probe = min(k_eff + 1, self._n)
        _, idx = self._tree.query(q, k=k_probe, workers=1)
        idx = np.asarray(idx, dtype=np.intp)
        if idx.ndim == 1:
            idx = idx.reshape(nq, 1)
        # recompute distances with one fixed formula so ordering does not
        # depend on the tree's internal arithmetic
        diff = self._points[idx] - q[:, None, :]
        d = np.sqrt(np.einsum("qkd,qkd->qk", diff, diff))
        # rows usually arrive (distance, index)-sorted already; lexsort
        # only the rows where recomputation or an exact tie broke that
        dd = np.diff(d, axis=1)
        unsorted = (dd < 0) | ((dd == 0) & (np.diff(idx, axis=1) < 0))
        rows = np.flatnonzero(unsorted.any(axis=1))
        if rows.size:
            order = np.lexsort((idx[rows], d[rows]), axis=1)
            d[rows] = np.take_along_axis(d[rows], order, axis=1)
            idx[rows] = np.take_along_axis(idx[rows], order, axis=1)

        out_d = np.ascontiguousarray(d[:, :k_eff])
        out_i = np.ascontiguousarray(idx[:, :k_eff])
        if k_probe > k_eff:
            tie_rows = np.flatnonzero(d[:, k_eff] == d[:, k_eff - 1])
            for row in tie_rows:
                rd, ri = self._resolve_boundary_tie(q[row], d[row, k_eff - 1], k_eff)
                out_d[row], out_i[row] = rd, ri
        return out_d, out_i

    def _resolve_boundary_tie(self, query, boundary, k_eff):
        # gather every candidate at the boundary radius (inflated a few
        # ulps to absorb metric round-off), then cut at k by (d, index)
        radius = boundary
        for _ in range(4):
            radius = np.nextafter(radius, np.inf)
        while True:
            cand = np.asarray(
                self._tree.query_ball_point(query, r=radius), dtype=np.intp
            )
            if cand.size >= k_eff:
                break
            radius = max(radius * 2.0, 1e-300)
        cd = np.linalg.norm(self._points[cand] - query, axis=1)
        order = np.lexsort((cand, cd))[:k_eff]
        return cd[order], cand[order]

    def knn(self, point, k):
        """Neighbors of one point as [(source index, distance), ...]."""
        p = np.asarray(point, dtype=np.float64).ravel()[:3]
        d, i = self.query(p[None, :], k)
        return list(zip(i[0].tolist(), d[0].tolist()))
