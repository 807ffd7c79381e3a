"""Probe kernel tests against brute-force oracles and analytic values."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relwit.families import FAMILY_ORDER, WitnessFamily
from relwit.probes import (
    GRID_CELL,
    ProbeParams,
    ProbeVector,
    containment_fraction,
    horizontal_overlap,
    probe_attachment,
    probe_containment,
    probe_interaction,
    probe_orientation,
    probe_proximity,
    probe_support,
    probe_vector,
    probe_vertical,
    s3d_score,
    surface_distance,
)
from relwit.scenekit import SceneSpec, generate_scene
from relwit.scenekit.oracle import derive_ground_truth

from conftest import make_box_object

PARAMS = ProbeParams()


# --- independent oracles -----------------------------------------------------


def oracle_surface_distance(a, b):
    """Brute-force O(n^2) reimplementation of the robust statistic."""
    if len(a) <= len(b):
        src, dst = a, b
    else:
        src, dst = b, a
    d2 = ((src[:, None, :] - dst[None, :, :]) ** 2).sum(-1)
    nn = np.sqrt(d2.min(axis=1))
    return float(np.percentile(nn, 5.0))


def oracle_min_distance(a, b):
    d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)
    return float(np.sqrt(d2.min()))


def oracle_containment(points, box, open_face=None):
    """Dense per-point loop with the same open-face inflation rule."""
    inflate = 0.0
    if open_face is not None:
        inflate = 0.5 * box.half_extents[open_face[0]]
    inside = 0
    out_d = []
    for p in points:
        q = box.rotation.T @ (p - box.center)
        lo = -box.half_extents.copy()
        hi = box.half_extents.copy()
        if open_face is not None:
            axis, sign = open_face
            if sign > 0:
                hi[axis] += inflate
            else:
                lo[axis] -= inflate
        if np.all(q >= lo - 1e-9) and np.all(q <= hi + 1e-9):
            inside += 1
        else:
            excess = np.maximum(np.abs(q) - box.half_extents, 0.0)
            out_d.append(np.linalg.norm(excess))
    frac = inside / len(points)
    return frac, (float(np.mean(out_d)) if out_d else 0.0)


def oracle_overlap(points_a, points_b):
    """Same filled-footprint estimand, rebuilt with dense boundary sampling."""
    from relwit.scenekit.oracle import _hull_2d, _inside_hull

    def filled(points):
        hull = _hull_2d(points[:, :2])
        lo = np.floor(points[:, :2].min(axis=0) / GRID_CELL).astype(int)
        hi = np.ceil(points[:, :2].max(axis=0) / GRID_CELL).astype(int)
        cells = set()
        for ix in range(lo[0], hi[0] + 1):
            for iy in range(lo[1], hi[1] + 1):
                c = np.array([[(ix + 0.5) * GRID_CELL, (iy + 0.5) * GRID_CELL]])
                if _inside_hull(hull, c)[0]:
                    cells.add((ix, iy))
        return cells

    ca, cb = filled(points_a), filled(points_b)
    if not ca:
        return 0.0
    return len(ca & cb) / len(ca)


# --- surface distance --------------------------------------------------------


class TestSurfaceDistance:
    def test_face_contact_under_1cm(self):
        a = make_box_object(0, (0, 0, 0.5), (0.5, 0.5, 0.5))
        b = make_box_object(1, (1.0, 0, 0.5), (0.5, 0.5, 0.5))
        assert surface_distance(a.mask_points, b.mask_points) < 0.01 + 0.05

    def test_unit_boxes_one_meter_gap(self):
        a = make_box_object(0, (0, 0, 0.5), (0.5, 0.5, 0.5))
        b = make_box_object(1, (2.0, 0, 0.5), (0.5, 0.5, 0.5))
        d = surface_distance(a.mask_points, b.mask_points)
        oracle = oracle_min_distance(a.mask_points, b.mask_points)
        assert d == pytest.approx(1.0, abs=0.05)
        assert d >= oracle - 1e-12

    def test_identical_sets_zero(self):
        a = make_box_object(0, (0, 0, 0.5), (0.5, 0.5, 0.5))
        assert surface_distance(a.mask_points, a.mask_points) == 0.0

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(0)
        for k in range(25):
            a = make_box_object(2 * k, rng.uniform(0, 2, 3), rng.uniform(0.05, 0.4, 3), yaw=rng.uniform(0, 6))
            b = make_box_object(
                2 * k + 1, rng.uniform(0, 2, 3), rng.uniform(0.05, 0.4, 3), yaw=rng.uniform(0, 6)
            )
            got = surface_distance(a.mask_points, b.mask_points)
            want = oracle_surface_distance(a.mask_points, b.mask_points)
            assert got == pytest.approx(want, abs=0.01)

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            surface_distance(np.zeros((0, 3)), np.ones((4, 3)))


# --- containment -------------------------------------------------------------


class TestContainment:
    def test_fully_inside(self):
        container = make_box_object(0, (0, 0, 0.5), (0.5, 0.5, 0.5))
        inner = make_box_object(1, (0, 0, 0.5), (0.2, 0.2, 0.2))
        d_in, d_out = containment_fraction(inner.mask_points, container.obb)
        assert d_in == 1.0 and d_out == 0.0

    def test_fully_outside(self):
        container = make_box_object(0, (0, 0, 0.5), (0.3, 0.3, 0.3))
        outer = make_box_object(1, (3.0, 0, 0.5), (0.2, 0.2, 0.2))
        d_in, d_out = containment_fraction(outer.mask_points, container.obb)
        assert d_in == 0.0 and d_out > 0.0

    def test_straddling_half(self):
        # Constructed point set: exactly half the points inside; brute-force count.
        container = make_box_object(0, (0, 0, 0.5), (0.5, 0.5, 0.5))
        rng = np.random.default_rng(3)
        inside_pts = rng.uniform(-0.45, 0.45, (200, 3)) + np.array([0, 0, 0.5])
        outside_pts = inside_pts + np.array([1.3, 0.0, 0.0])
        pts = np.vstack([inside_pts, outside_pts])
        d_in, d_out = containment_fraction(pts, container.obb)
        frac_oracle, _ = oracle_containment(pts, container.obb)
        assert frac_oracle == 0.5
        assert d_in == pytest.approx(0.5, abs=0.05)
        assert d_out > 0

    def test_open_face_inflation_counts_mouth(self):
        container = make_box_object(0, (0, 0, 0.5), (0.3, 0.3, 0.3), open_face=(2, 1))
        # Points slightly above the open top would be outside a closed box.
        pts = np.tile(np.array([[0.0, 0.0, 0.5 + 0.3 + 0.1]]), (10, 1))
        d_in, _ = containment_fraction(pts, container.obb, open_face=(2, 1))
        assert d_in == 1.0
        d_in_closed, _ = containment_fraction(pts, container.obb, open_face=None)
        assert d_in_closed == 0.0

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(1)
        for k in range(20):
            box = make_box_object(k, rng.uniform(0, 1, 3), rng.uniform(0.1, 0.4, 3), yaw=rng.uniform(0, 6)).obb
            pts = rng.uniform(-0.6, 0.6, (300, 3)) + rng.uniform(0, 1, 3)
            got_in, got_out = containment_fraction(pts, box)
            want_in, want_out = oracle_containment(pts, box)
            assert got_in == pytest.approx(want_in, abs=0.05)
            assert got_out == pytest.approx(want_out, abs=0.01)


# --- horizontal overlap ------------------------------------------------------


class TestHorizontalOverlap:
    def test_cup_on_table_near_one(self):
        table = make_box_object(0, (0, 0, 0.35), (0.6, 0.45, 0.35), category="table")
        cup = make_box_object(1, (0.1, 0.05, 0.75), (0.04, 0.04, 0.05), category="cup")
        assert horizontal_overlap(cup.mask_points, table.mask_points) >= 0.95

    def test_disjoint_zero(self):
        a = make_box_object(0, (0, 0, 0.5), (0.2, 0.2, 0.2))
        b = make_box_object(1, (3, 0, 0.5), (0.2, 0.2, 0.2))
        assert horizontal_overlap(a.mask_points, b.mask_points) == 0.0

    def test_identical_one(self):
        a = make_box_object(0, (0, 0, 0.5), (0.3, 0.3, 0.3))
        assert horizontal_overlap(a.mask_points, a.mask_points) == 1.0

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(2)
        for k in range(10):
            a = make_box_object(2 * k, rng.uniform(0, 1.2, 3), rng.uniform(0.08, 0.35, 3), yaw=rng.uniform(0, 6))
            b = make_box_object(
                2 * k + 1, rng.uniform(0, 1.2, 3), rng.uniform(0.08, 0.35, 3), yaw=rng.uniform(0, 6)
            )
            got = horizontal_overlap(a.mask_points, b.mask_points)
            want = oracle_overlap(a.mask_points, b.mask_points)
            assert got == pytest.approx(want, abs=0.05)


# --- probe formulas ----------------------------------------------------------


class TestProbeFormulas:
    def test_support_zero_argument(self):
        params = ProbeParams(support=(1.0, 1.0, 1.0))
        assert probe_support(0.0, 0.0, 0.0, params) == pytest.approx(0.5, abs=1e-9)

    def test_proximity_analytic(self):
        assert probe_proximity(0.0, 0.25) == pytest.approx(1.0, abs=1e-12)
        assert probe_proximity(0.25, 0.25, normalize=False) == pytest.approx(math.exp(-1), abs=1e-9)

    def test_containment_analytic(self):
        params = ProbeParams(containment=(6.0, 4.0))
        want = 1.0 / (1.0 + math.exp(-6.0))
        assert probe_containment(1.0, 0.0, params) == pytest.approx(want, abs=1e-9)

    def test_proximity_room_normalization(self):
        # room_scale 5 makes the normalizer exactly 1, matching the raw formula.
        assert probe_proximity(0.2, 0.25, room_scale=5.0) == pytest.approx(
            probe_proximity(0.2, 0.25, normalize=False)
        )
        assert probe_proximity(0.2, 0.25, room_scale=10.0) > probe_proximity(0.2, 0.25, normalize=False)

    def test_orientation_extremes(self):
        assert probe_orientation(0.0, False, PARAMS) == pytest.approx(1.0)
        assert probe_orientation(math.pi, False, PARAMS) == 0.0
        assert probe_orientation(0.0, True, PARAMS) == pytest.approx(0.5)

    def test_monotonicity(self):
        qs = [probe_proximity(d, 0.25, normalize=False) for d in np.linspace(0, 2, 9)]
        assert all(a > b for a, b in zip(qs, qs[1:]))
        sup = [probe_support(o, 0.1, -0.01, PARAMS) for o in np.linspace(0, 1, 9)]
        assert all(a <= b for a, b in zip(sup, sup[1:]))
        sup_d = [probe_support(0.8, d, -0.01, PARAMS) for d in np.linspace(0, 1, 9)]
        assert all(a >= b for a, b in zip(sup_d, sup_d[1:]))
        con = [probe_containment(x, 0.05, PARAMS) for x in np.linspace(0, 1, 9)]
        assert all(a <= b for a, b in zip(con, con[1:]))

    @given(
        st.floats(0, 1),
        st.floats(0, 10),
        st.floats(-5, 5),
        st.floats(0, 1),
        st.floats(0, 10),
        st.floats(0, math.pi),
        st.floats(0, 1),
    )
    @settings(max_examples=300, deadline=None)
    def test_probes_stay_in_unit_interval(self, omega, d, dz, frac, gap, angle, near):
        values = [
            probe_support(omega, d, dz, PARAMS),
            probe_containment(frac, d, PARAMS),
            probe_proximity(d, 0.25, room_scale=6.0),
            probe_vertical(gap, d, PARAMS),
            probe_attachment(frac, 1 - frac, PARAMS),
            probe_orientation(angle, False, PARAMS),
            probe_interaction(near, PARAMS),
        ]
        assert all(0.0 <= v <= 1.0 for v in values)


class TestS3d:
    def _one_hot(self, family):
        dist = np.zeros(8)
        dist[family.index] = 1.0
        return dist

    def test_one_hot_proximity_identity(self):
        q = np.linspace(0.1, 0.8, 8)
        pv = ProbeVector(q=q)
        dist = self._one_hot(WitnessFamily.PROXIMITY)
        assert s3d_score(dist, pv) == pytest.approx(q[WitnessFamily.PROXIMITY.index])

    def test_uniform_two_families(self):
        q = np.zeros(8)
        q[0], q[1] = 0.2, 0.8
        dist = np.zeros(8)
        dist[0] = dist[1] = 0.5
        assert s3d_score(dist, ProbeVector(q=q)) == pytest.approx(0.5)

    def test_functional_always_zero(self):
        cup = make_box_object(1, (0.1, 0.05, 0.75), (0.04, 0.04, 0.05))
        table = make_box_object(0, (0, 0, 0.35), (0.6, 0.45, 0.35))
        pv = probe_vector(cup, table, PARAMS)
        assert pv.value(WitnessFamily.FUNCTIONAL_UNCERTAIN) == 0.0
        assert s3d_score(self._one_hot(WitnessFamily.FUNCTIONAL_UNCERTAIN), pv) == 0.0

    def test_invalid_distribution_rejected(self):
        with pytest.raises(ValueError):
            s3d_score(np.full(8, 0.2), ProbeVector(q=np.zeros(8)))


class TestProbeVectorOnPlacements:
    def test_contact_on_top_scores_high(self):
        table = make_box_object(0, (0, 0, 0.35), (0.6, 0.45, 0.35), category="table")
        cup = make_box_object(1, (0.1, 0.05, 0.75), (0.04, 0.04, 0.05), category="cup")
        pv = probe_vector(cup, table, PARAMS)
        assert pv.value(WitnessFamily.SUPPORT) >= 0.9

    def test_floating_subject_scores_low(self):
        table = make_box_object(0, (0, 0, 0.35), (0.6, 0.45, 0.35))
        cup = make_box_object(1, (0.1, 0.05, 1.25), (0.04, 0.04, 0.05))
        pv = probe_vector(cup, table, PARAMS)
        assert pv.value(WitnessFamily.SUPPORT) < 0.5

    def test_vertical_direction_dispatch(self):
        low = make_box_object(0, (0, 0, 0.2), (0.3, 0.3, 0.2))
        high = make_box_object(1, (0, 0, 1.0), (0.2, 0.2, 0.2))
        up = probe_vector(high, low, PARAMS, direction="up")
        down = probe_vector(high, low, PARAMS, direction="down")
        assert up.value(WitnessFamily.VERTICAL_ORDER) > 0.9
        assert down.value(WitnessFamily.VERTICAL_ORDER) < 0.1
        front = probe_vector(high, low, PARAMS, direction="front")
        assert front.value(WitnessFamily.VERTICAL_ORDER) == 0.5

    def test_generator_family_separation(self):
        # Family-matched S_3d separates ground-truth-true from false candidates.
        rng = np.random.default_rng(9)
        true_scores, false_scores = [], []
        canon = {"on": WitnessFamily.SUPPORT, "inside": WitnessFamily.CONTAINMENT,
                 "near": WitnessFamily.PROXIMITY, "above": WitnessFamily.VERTICAL_ORDER,
                 "mounted on": WitnessFamily.ATTACHMENT, "facing": WitnessFamily.ORIENTATION}
        for seed in range(8):
            scene = generate_scene(SceneSpec(n_frames=0), seed=100 + seed)
            truths = set()
            for s, p, o in derive_ground_truth(scene.objects, scene.proximity_radius):
                if p in canon:
                    truths.add((s, canon[p], o))
            by_id = {o.id: o for o in scene.objects}
            content = [o for o in scene.objects if o.category != "wall"]
            for s, fam, o in sorted(truths, key=str):
                pv = probe_vector(by_id[s], by_id[o], PARAMS, direction="up", room_scale=scene.room_scale)
                true_scores.append(pv.value(fam))
            for _ in range(len(truths)):
                a, b = rng.choice(len(content), 2, replace=False)
                fam = FAMILY_ORDER[int(rng.integers(0, 6))]
                if (content[a].id, fam, content[b].id) in truths:
                    continue
                pv = probe_vector(content[a], content[b], PARAMS, direction="up", room_scale=scene.room_scale)
                false_scores.append(pv.value(fam))
        margin = np.mean(true_scores) - np.mean(false_scores)
        assert margin >= 0.3
