import dataclasses

import numpy as np
import pytest

from pcrobust.core import Box3D, PointCloud, RandomStream, normalize_angle
from pcrobust import objects


def fill_box(box, n, rng, shrink=0.25):
    """Uniform points strictly inside a box (box frame, then world)."""
    half = np.array([box.length, box.width, box.height]) / 2.0 - shrink
    local = rng.uniform(-half, half, size=(n, 3))
    return box.from_box_frame(local)


def make_scene(boxes, members_per_box, seed=0, background=400):
    """Cloud = per-box member blocks, then far-away background points."""
    rng = np.random.default_rng(seed)
    blocks, rows, start = [], [], 0
    for box, n in zip(boxes, members_per_box):
        blocks.append(fill_box(box, n, rng))
        rows.append(np.arange(start, start + n))
        start += n
    bg = np.column_stack([
        rng.uniform(200, 300, background),
        rng.uniform(-50, 50, background),
        rng.uniform(-2, 2, background),
    ])
    blocks.append(bg)
    xyz = np.vstack(blocks)
    refl = rng.uniform(0.1, 0.9, len(xyz))
    cloud = PointCloud(np.column_stack([xyz, refl]))
    return cloud, rows


def car_box(cx=10.0, cy=5.0, yaw=0.3, cls="Car", alpha=0.5):
    return Box3D(cx=cx, cy=cy, cz=-0.95, length=4.0, width=2.0, height=1.6,
                 yaw=yaw, class_label=cls, alpha=alpha)


ALL_KINDS = list(objects.OBJECT_KINDS)


class TestExtractObjects:
    def test_axis_aligned_containment(self):
        box = Box3D(0, 0, 0, 1, 1, 1, 0.0)
        pc = PointCloud(np.array([[0, 0, 0, 0.5], [5, 5, 5, 0.5]], dtype=float))
        slices = objects.extract_objects(pc, [box])
        assert list(slices[0].member_indices) == [0]

    def test_yawed_extent_swap(self):
        box = Box3D(0, 0, 0, 4.0, 2.0, 2.0, np.pi / 2)
        pts = np.array([[0.99, 0, 0, 0.5], [1.5, 0, 0, 0.5], [0, 1.9, 0, 0.5]])
        slices = objects.extract_objects(PointCloud(pts), [box])
        # yaw pi/2 swaps footprint extents: |x| bound becomes w/2=1, |y| l/2=2
        assert list(slices[0].member_indices) == [0, 2]

    def test_no_boxes(self):
        pc = PointCloud(np.zeros((3, 4)))
        assert objects.extract_objects(pc, []) == []

    def test_overlap_nearest_center_wins(self):
        a = Box3D(0.0, 0, 0, 4, 4, 2, 0.0)
        b = Box3D(1.0, 0, 0, 4, 4, 2, 0.0)
        pts = np.array([
            [0.4, 0, 0, 0.1],   # nearer a
            [0.5, 0, 0, 0.2],   # equidistant: first box keeps it
            [0.8, 0, 0, 0.3],   # nearer b
        ])
        sa, sb = objects.extract_objects(PointCloud(pts), [a, b])
        assert list(sa.member_indices) == [0, 1]
        assert list(sb.member_indices) == [2]

    def test_empty_slice_allowed(self):
        box = car_box(cx=500.0)
        pc = PointCloud(np.zeros((4, 4)))
        slices = objects.extract_objects(pc, [box])
        assert len(slices[0].member_indices) == 0

    def test_margin(self):
        box = Box3D(0, 0, 0, 2, 2, 2, 0.0)
        pts = np.array([[1.0 + 1e-7, 0, 0, 0.5], [1.1, 0, 0, 0.5]])
        slices = objects.extract_objects(PointCloud(pts), [box])
        assert list(slices[0].member_indices) == [0]

    def test_members_within_half_extents(self):
        box = car_box()
        cloud, rows = make_scene([box], [150], seed=1)
        slc = objects.extract_objects(cloud, [box])[0]
        assert np.array_equal(slc.member_indices, rows[0])
        local = box.to_box_frame(cloud.xyz[slc.member_indices])
        half = np.array([box.length, box.width, box.height]) / 2 + 1e-6
        assert np.all(np.abs(local) <= half)
        assert np.all(np.diff(slc.member_indices) > 0)


class TestSeverityZero:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_identity_points_and_labels(self, kind):
        box = car_box()
        cloud, _ = make_scene([box], [80], seed=2)
        out = objects.corrupt_objects(cloud, [box], kind, 0, RandomStream(9))
        assert np.array_equal(out.cloud.data, cloud.data)
        assert out.boxes == (box,)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_input_never_mutated(self, kind):
        box = car_box()
        cloud, _ = make_scene([box], [80], seed=3)
        before = cloud.data.copy()
        objects.corrupt_objects(cloud, [box], kind, 4, RandomStream(10))
        assert np.array_equal(cloud.data, before)

    def test_unknown_kind(self):
        box = car_box()
        cloud, _ = make_scene([box], [10], seed=4)
        with pytest.raises(ValueError):
            objects.corrupt_objects(cloud, [box], "melt", 3, RandomStream(0))


class TestNonMemberIntegrity:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_background_bit_identical(self, kind):
        box = car_box()
        cloud, rows = make_scene([box], [120], seed=5, background=300)
        out = objects.corrupt_objects(cloud, [box], kind, 5, RandomStream(11))
        bg_in = cloud.data[120:]
        # background rows survive every kind and stay bit-identical
        out_rows = {tuple(r) for r in out.cloud.data}
        for r in bg_in:
            assert tuple(r) in out_rows


class TestNoise:
    def test_uniform_bounds(self):
        box = car_box()
        cloud, rows = make_scene([box], [200], seed=6)
        out = objects.corrupt_objects(cloud, [box], "uniform", 5, RandomStream(12))
        d = out.cloud.data[rows[0], :3] - cloud.data[rows[0], :3]
        assert np.max(np.abs(d)) <= 0.10 + 1e-12
        assert np.max(np.abs(d)) > 0.05
        assert np.array_equal(out.cloud.reflectance, cloud.reflectance)
        assert out.boxes == (box,)

    def test_gaussian_sigma_statistical(self):
        box = Box3D(0, 0, 10, 20, 20, 20, 0.7)
        cloud, rows = make_scene([box], [10_000], seed=7, background=100)
        out = objects.corrupt_objects(cloud, [box], "gaussian", 5, RandomStream(13))
        d = out.cloud.data[rows[0], :3] - cloud.data[rows[0], :3]
        assert abs(np.std(d) - 0.06) < 0.002

    def test_impulse_exact_counts(self):
        box = car_box()
        cloud, rows = make_scene([box], [200], seed=8)
        out = objects.corrupt_objects(cloud, [box], "impulse", 5, RandomStream(14))
        d = out.cloud.data[rows[0], :3] - cloud.data[rows[0], :3]
        touched = np.any(np.abs(d) > 1e-12, axis=1)
        assert int(touched.sum()) == 20  # floor(200 / 10)
        assert np.allclose(np.abs(d[touched]), 0.1, atol=1e-9)
        untouched_rows = rows[0][~touched]
        assert np.array_equal(out.cloud.data[untouched_rows], cloud.data[untouched_rows])

    def test_upsample_counts_full_duplication(self):
        box = car_box()
        cloud, rows = make_scene([box], [40], seed=9, background=9960)
        assert len(cloud) == 10_000
        out = objects.corrupt_objects(cloud, [box], "upsample_obj", 5, RandomStream(15))
        assert len(out.cloud) == 10_040  # divisor 1 duplicates every member
        assert np.array_equal(out.cloud.data[:10_000], cloud.data)
        added = out.cloud.data[10_000:]
        members = cloud.xyz[rows[0]]
        for p in added[:, :3]:
            assert np.max(np.abs(members - p), axis=1).min() <= 0.05 + 1e-12
        assert np.all(np.isin(added[:, 3], cloud.reflectance[rows[0]]))

    def test_upsample_severity_one(self):
        box = car_box()
        cloud, _ = make_scene([box], [40], seed=10)
        out = objects.corrupt_objects(cloud, [box], "upsample_obj", 1, RandomStream(16))
        assert len(out.cloud) == len(cloud) + 8  # floor(40 / 5)


class TestDensity:
    def _clump_scene(self, n_clumps, per_clump, seed=20):
        # long thin box; clumps spaced so each k-neighborhood is one clump
        box = Box3D(0, 0, 0, 120.0, 4.0, 4.0, 0.0, class_label="Car")
        rng = np.random.default_rng(seed)
        pts = []
        for i in range(n_clumps):
            c = np.array([-50.0 + 11.0 * i, 0.0, 0.0])
            pts.append(c + rng.normal(0, 0.25, size=(per_clump, 3)))
        xyz = np.vstack(pts)
        refl = rng.uniform(0.1, 0.9, len(xyz))
        return PointCloud(np.column_stack([xyz, refl])), box

    def test_cutout_whole_object_neighborhood(self):
        # object of exactly k=20 points: any center's neighborhood is the
        # whole object, so one center (severity 1) removes all 20
        box = car_box()
        cloud, rows = make_scene([box], [20], seed=21)
        out = objects.corrupt_objects(cloud, [box], "cutout_obj", 1, RandomStream(17))
        assert len(out.cloud) == len(cloud) - 20

    def test_cutout_clump_arithmetic(self):
        cloud, box = self._clump_scene(10, 20)
        out = objects.corrupt_objects(cloud, [box], "cutout_obj", 5, RandomStream(18))
        removed = len(cloud) - len(out.cloud)
        # each deleted neighborhood is exactly one 20-point clump
        assert removed % 20 == 0
        assert 20 <= removed <= 100

    def test_local_dec_exact(self):
        box = car_box()
        cloud, rows = make_scene([box], [30], seed=22)
        out = objects.corrupt_objects(cloud, [box], "local_dec_obj", 1, RandomStream(19))
        assert len(out.cloud) == len(cloud) - 22  # floor(0.75 * 30)

    def test_local_dec_union_bounds(self):
        box = car_box()
        cloud, rows = make_scene([box], [30], seed=23)
        out = objects.corrupt_objects(cloud, [box], "local_dec_obj", 5, RandomStream(20))
        removed = len(cloud) - len(out.cloud)
        assert 22 <= removed <= 30

    def test_local_inc_planar_exact(self):
        box = Box3D(0, 0, 0, 10, 10, 30, 0.0, class_label="Car")
        rng = np.random.default_rng(24)
        xy = rng.uniform(-4, 4, size=(200, 2))
        z = 2 * xy[:, 0] - xy[:, 1] + 1
        xyz = np.column_stack([xy, z])
        cloud = PointCloud(np.column_stack([xyz, rng.uniform(0.2, 0.8, 200)]))
        counters = {}
        out = objects.corrupt_objects(cloud, [box], "local_inc_obj", 5,
                                      RandomStream(21), counters=counters)
        added = out.cloud.data[200:]
        assert len(added) == 5 * 30  # five centers, k=30 appended each
        err = np.abs(added[:, 2] - (2 * added[:, 0] - added[:, 1] + 1))
        assert np.max(err) < 1e-6
        assert not counters
        assert np.all(np.isin(added[:, 3], cloud.reflectance))

    def test_local_inc_line_jitter_fallback(self):
        box = Box3D(0, 0, 0, 30, 4, 4, 0.0, class_label="Car")
        t = np.linspace(-10, 10, 100)
        xyz = np.column_stack([t, t * 0.1, np.zeros(100)])
        # xy collinear: plane fit is rank deficient
        xyz[:, 1] = xyz[:, 0] * 0.1
        cloud = PointCloud(np.column_stack([xyz, np.full(100, 0.4)]))
        counters = {}
        out = objects.corrupt_objects(cloud, [box], "local_inc_obj", 2,
                                      RandomStream(22), counters=counters)
        assert counters.get("local_inc_obj_jitter_fallback", 0) >= 1
        added = out.cloud.data[100:]
        for p in added[:10, :3]:
            assert np.max(np.abs(cloud.xyz - p), axis=1).min() <= 0.01 + 1e-12

    def test_density_boxes_unchanged(self):
        box = car_box()
        cloud, _ = make_scene([box], [60], seed=25)
        for kind in ("cutout_obj", "local_dec_obj", "local_inc_obj"):
            out = objects.corrupt_objects(cloud, [box], kind, 3, RandomStream(23))
            assert out.boxes == (box,)


class TestShear:
    def test_z_bit_equal(self):
        box = car_box()
        cloud, rows = make_scene([box], [150], seed=30)
        out = objects.corrupt_objects(cloud, [box], "shear", 5, RandomStream(24))
        assert np.array_equal(out.cloud.data[:, 2], cloud.data[:, 2])
        assert out.boxes == (box,)

    @pytest.mark.parametrize("sev,lo,hi", [(1, 0.0, 0.10), (3, 0.10, 0.20), (5, 0.20, 0.30)])
    def test_recovered_coefficients(self, sev, lo, hi):
        box = car_box()
        cloud, rows = make_scene([box], [200], seed=31)
        out = objects.corrupt_objects(cloud, [box], "shear", sev, RandomStream(25))
        q = cloud.xyz[rows[0]] - box.center
        dx = out.cloud.xyz[rows[0], 0] - cloud.xyz[rows[0], 0]
        dy = out.cloud.xyz[rows[0], 1] - cloud.xyz[rows[0], 1]
        # dx = a*qy + b*qz and dy = c*qx + d*qz exactly
        ab, res_x = np.linalg.lstsq(q[:, 1:3], dx, rcond=None)[:2]
        cd, res_y = np.linalg.lstsq(q[:, [0, 2]], dy, rcond=None)[:2]
        assert res_x[0] < 1e-18 and res_y[0] < 1e-18
        for coeff in np.concatenate([ab, cd]):
            assert lo - 1e-9 <= abs(coeff) <= hi + 1e-9


class TestFFD:
    def test_bernstein_basis(self):
        b0 = objects.bernstein_basis(np.array([0.0]))
        assert np.allclose(b0, [[1, 0, 0, 0, 0]])
        bh = objects.bernstein_basis(np.array([0.5]))
        assert np.allclose(bh, np.array([[1, 4, 6, 4, 1]]) / 16.0)
        rnd = objects.bernstein_basis(np.random.default_rng(0).random(50))
        assert np.allclose(rnd.sum(axis=1), 1.0)

    def test_single_control_point_closed_form(self):
        delta = np.zeros((5, 5, 5, 3))
        delta[0, 0, 0] = np.array([0.3, -0.2, 0.1])
        corner = objects.ffd_displacement(np.array([[0.0, 0.0, 0.0]]), delta)
        assert np.allclose(corner, [[0.3, -0.2, 0.1]], atol=1e-12)
        mid = objects.ffd_displacement(np.array([[0.5, 0.5, 0.5]]), delta)
        assert np.allclose(mid, np.array([[0.3, -0.2, 0.1]]) / 16.0**3, atol=1e-15)

    def test_zero_lattice_identity(self):
        coords = np.random.default_rng(1).random((100, 3))
        disp = objects.ffd_displacement(coords, np.zeros((5, 5, 5, 3)))
        assert np.max(np.abs(disp)) < 1e-9

    def test_displacement_bounded_by_ratio(self):
        box = car_box()
        cloud, rows = make_scene([box], [300], seed=32)
        out = objects.corrupt_objects(cloud, [box], "ffd", 5, RandomStream(26))
        members = cloud.xyz[rows[0]]
        local_in = box.to_box_frame(members)
        local_out = box.to_box_frame(out.cloud.xyz[rows[0]])
        ext = local_in.max(axis=0) - local_in.min(axis=0)
        moved = np.abs(local_out - local_in)
        assert np.all(moved <= 0.5 * ext + 1e-9)
        assert np.max(moved) > 0.0
        assert out.boxes == (box,)

    def test_planar_object_degenerate_axis(self):
        # all members share one z: that lattice axis passes through unchanged
        box = car_box(yaw=0.0)
        rng = np.random.default_rng(33)
        local = np.column_stack([rng.uniform(-1.5, 1.5, 80),
                                 rng.uniform(-0.7, 0.7, 80),
                                 np.zeros(80)])
        xyz = box.from_box_frame(local)
        cloud = PointCloud(np.column_stack([xyz, np.full(80, 0.5)]))
        out = objects.corrupt_objects(cloud, [box], "ffd", 5, RandomStream(27))
        assert np.allclose(out.cloud.xyz[:, 2], cloud.xyz[:, 2], atol=1e-9)


class TestScale:
    def _run(self, seed):
        box = car_box()
        cloud, rows = make_scene([box], [150], seed=40)
        out = objects.corrupt_objects(cloud, [box], "scale", 5, RandomStream(seed))
        return box, cloud, rows[0], out

    def test_exactly_one_dimension_scaled(self):
        box, cloud, rows, out = self._run(28)
        nb = out.boxes[0]
        ratios = np.array([nb.length / box.length, nb.width / box.width,
                           nb.height / box.height])
        changed = np.abs(ratios - 1) > 1e-12
        assert int(changed.sum()) == 1
        r = ratios[changed][0]
        assert min(abs(r - 0.8), abs(r - 1.2)) < 1e-12

    def test_z_scale_regrounds(self):
        # find a seed where the z axis is picked
        for seed in range(60):
            box, cloud, rows, out = self._run(seed)
            nb = out.boxes[0]
            if abs(nb.height - box.height) > 1e-12:
                assert abs(nb.bottom_z - box.bottom_z) < 1e-9
                f = nb.height / box.height
                assert abs(nb.cz - (box.cz + box.height * (f - 1) / 2)) < 1e-9
                assert nb.alpha is None
                # members re-ground with the box
                lo_in = box.to_box_frame(cloud.xyz[rows])
                lo_out = nb.to_box_frame(out.cloud.xyz[rows])
                assert np.all(np.abs(lo_out[:, 2]) <= nb.height / 2 + 1e-6)
                return
        pytest.fail("no z-axis draw in 60 seeds")

    def test_xy_scale_member_coords(self):
        for seed in range(60):
            box, cloud, rows, out = self._run(seed)
            nb = out.boxes[0]
            if abs(nb.height - box.height) < 1e-12:
                axis = 0 if abs(nb.length - box.length) > 1e-12 else 1
                f = (nb.length / box.length) if axis == 0 else (nb.width / box.width)
                li = box.to_box_frame(cloud.xyz[rows])
                lo = box.to_box_frame(out.cloud.xyz[rows])
                assert np.allclose(lo[:, axis], li[:, axis] * f, atol=1e-9)
                other = 1 - axis
                assert np.allclose(lo[:, other], li[:, other], atol=1e-12)
                assert np.allclose(lo[:, 2], li[:, 2], atol=1e-12)
                return
        pytest.fail("no xy-axis draw in 60 seeds")

    def test_members_inside_updated_box(self):
        box, cloud, rows, out = self._run(29)
        slc = objects.extract_objects(out.cloud, list(out.boxes))[0]
        assert set(rows).issubset(set(slc.member_indices))

    def test_pointless_object_still_scaled(self):
        box = car_box(cx=500.0)
        cloud = PointCloud(np.column_stack([np.random.default_rng(2).uniform(0, 10, (50, 3)),
                                            np.full(50, 0.5)]))
        out = objects.corrupt_objects(cloud, [box], "scale", 4, RandomStream(30))
        assert out.boxes[0] != box
        assert np.array_equal(out.cloud.data, cloud.data)


def pairwise_distances(p):
    return np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)


class TestRotation:
    def test_angle_bounds_and_rigidity(self):
        box = car_box()
        cloud, rows = make_scene([box], [120], seed=50)
        out = objects.corrupt_objects(cloud, [box], "rotation", 5, RandomStream(31))
        nb = out.boxes[0]
        dyaw = abs(normalize_angle(nb.yaw - box.yaw))
        assert np.radians(9.0) - 1e-12 <= dyaw <= np.radians(10.0) + 1e-12
        pin = cloud.xyz[rows[0]]
        pout = out.cloud.xyz[rows[0]]
        assert np.allclose(pairwise_distances(pin), pairwise_distances(pout), atol=1e-9)
        assert np.allclose(pin[:, 2], pout[:, 2], atol=1e-12)
        assert (nb.cx, nb.cy, nb.cz) == (box.cx, box.cy, box.cz)
        assert (nb.length, nb.width, nb.height) == (box.length, box.width, box.height)
        assert nb.alpha is None

    def test_members_follow_box(self):
        box = car_box()
        cloud, rows = make_scene([box], [120], seed=51)
        out = objects.corrupt_objects(cloud, [box], "rotation", 4, RandomStream(32))
        slc = objects.extract_objects(out.cloud, list(out.boxes))[0]
        assert set(rows[0]).issubset(set(slc.member_indices))

    def test_severity_one_small(self):
        box = car_box()
        cloud, _ = make_scene([box], [60], seed=52)
        out = objects.corrupt_objects(cloud, [box], "rotation", 1, RandomStream(33))
        dyaw = abs(normalize_angle(out.boxes[0].yaw - box.yaw))
        assert dyaw <= np.radians(2.0) + 1e-12


class TestTranslation:
    def test_common_offset(self):
        box = car_box()
        cloud, rows = make_scene([box], [100], seed=60)
        out = objects.corrupt_objects(cloud, [box], "translation", 5, RandomStream(34))
        nb = out.boxes[0]
        shift = np.array([nb.cx - box.cx, nb.cy - box.cy, nb.cz - box.cz])
        assert shift[2] == 0.0
        mag = np.linalg.norm(shift)
        assert 0.9 - 1e-12 <= mag <= 1.0 + 1e-12
        d = out.cloud.xyz[rows[0]] - cloud.xyz[rows[0]]
        assert np.allclose(d, shift, atol=1e-12)
        assert (nb.length, nb.width, nb.height, nb.yaw) == \
            (box.length, box.width, box.height, box.yaw)
        assert nb.alpha is None

    def test_severity_one_bounds(self):
        box = car_box()
        cloud, _ = make_scene([box], [50], seed=61)
        out = objects.corrupt_objects(cloud, [box], "translation", 1, RandomStream(35))
        nb = out.boxes[0]
        mag = np.hypot(nb.cx - box.cx, nb.cy - box.cy)
        assert mag <= 0.2 + 1e-12

    def test_members_follow_box(self):
        box = car_box()
        cloud, rows = make_scene([box], [100], seed=62)
        out = objects.corrupt_objects(cloud, [box], "translation", 3, RandomStream(36))
        slc = objects.extract_objects(out.cloud, list(out.boxes))[0]
        assert set(rows[0]).issubset(set(slc.member_indices))


class TestClassTargeting:
    def test_filter_skips_other_classes(self):
        car = car_box(cx=10.0, cls="Car")
        ped = Box3D(20.0, -5.0, -0.84, 0.9, 0.7, 1.78, 1.0,
                    class_label="Pedestrian", alpha=0.2)
        cloud, rows = make_scene([car, ped], [80, 40], seed=70)
        out = objects.corrupt_objects(cloud, [car, ped], "uniform", 5,
                                      RandomStream(37), classes={"Car"})
        assert np.array_equal(out.cloud.data[rows[1]], cloud.data[rows[1]])
        assert not np.array_equal(out.cloud.data[rows[0]], cloud.data[rows[0]])
        assert out.boxes == (car, ped)

    def test_filter_applies_to_pose(self):
        car = car_box(cls="Car")
        ped = Box3D(20.0, -5.0, -0.84, 0.9, 0.7, 1.78, 1.0, class_label="Pedestrian")
        cloud, _ = make_scene([car, ped], [40, 40], seed=71)
        out = objects.corrupt_objects(cloud, [car, ped], "translation", 4,
                                      RandomStream(38), classes={"Pedestrian"})
        assert out.boxes[0] == car
        assert out.boxes[1] != ped

    def test_default_targets_all(self):
        car = car_box(cls="Car")
        ped = Box3D(20.0, -5.0, -0.84, 0.9, 0.7, 1.78, 1.0, class_label="Pedestrian")
        cloud, _ = make_scene([car, ped], [40, 40], seed=72)
        out = objects.corrupt_objects(cloud, [car, ped], "rotation", 3, RandomStream(39))
        assert out.boxes[0] != car and out.boxes[1] != ped


class TestLabelMutationPolicy:
    def test_constant(self):
        assert objects.LABEL_MUTATING == frozenset({"scale", "rotation", "translation"})

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_only_pose_kinds_mutate(self, kind):
        box = car_box()
        cloud, _ = make_scene([box], [60], seed=80)
        out = objects.corrupt_objects(cloud, [box], kind, 5, RandomStream(40))
        if kind in objects.LABEL_MUTATING:
            assert out.boxes[0] != box
        else:
            assert out.boxes == (box,)


class TestProvenanceAndDeterminism:
    def test_provenance_fields(self):
        box = car_box()
        cloud, _ = make_scene([box], [30], seed=90)
        out = objects.corrupt_objects(cloud, [box], "shear", 2, RandomStream(41))
        assert out.provenance == objects.CorruptionSpec("shear", 2, 41)

    @pytest.mark.parametrize("kind", ["gaussian", "ffd", "translation", "cutout_obj"])
    def test_reproducible(self, kind):
        box = car_box()
        cloud, _ = make_scene([box], [90], seed=91)
        a = objects.corrupt_objects(cloud, [box], kind, 4, RandomStream(55))
        b = objects.corrupt_objects(cloud, [box], kind, 4, RandomStream(55))
        assert np.array_equal(a.cloud.data, b.cloud.data)
        assert a.boxes == b.boxes

    def test_two_objects_processed_in_order(self):
        b1 = car_box(cx=10.0)
        b2 = car_box(cx=30.0, cy=-8.0, yaw=1.1)
        cloud, rows = make_scene([b1, b2], [60, 60], seed=92)
        out = objects.corrupt_objects(cloud, [b1, b2], "translation", 5, RandomStream(56))
        s1 = np.array([out.boxes[0].cx - b1.cx, out.boxes[0].cy - b1.cy])
        s2 = np.array([out.boxes[1].cx - b2.cx, out.boxes[1].cy - b2.cy])
        # independent draws per object
        assert not np.allclose(s1, s2)
