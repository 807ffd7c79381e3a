"""Scene model, renderer, generator and I/O tests."""

import hashlib

import numpy as np
import pytest

from relwit.scenekit import (
    BACKGROUND_DEPTH,
    CameraPose,
    Frame,
    GenerationError,
    LabelStatus,
    ObjectInstance,
    OrientedBox,
    RelationLabel,
    Scene,
    SceneFormatError,
    SceneSpec,
    SceneValidationError,
    generate_scene,
    load_scene,
    project_mask,
    render_depth,
    save_scene,
    visibility,
)
from relwit.scenekit.oracle import containment_fraction_true

from conftest import identity_pose


def _axis_box(center, half):
    return OrientedBox(np.array(center, float), np.array(half, float), np.eye(3))


def _grid_face_points(center, half, n=16):
    """Regular grid on the camera-facing (-z) face of an axis-aligned box."""
    cx, cy, cz = center
    xs = np.linspace(-half[0] * 0.95, half[0] * 0.95, n)
    ys = np.linspace(-half[1] * 0.95, half[1] * 0.95, n)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel() + cx, gy.ravel() + cy, np.full(gx.size, cz - half[2])], axis=1)
    return pts


def _object_from_box(oid, center, half, mask_points=None, category="box"):
    obb = _axis_box(center, half)
    if mask_points is None:
        rng = np.random.default_rng(oid + 1)
        local = rng.uniform(-1, 1, size=(400, 3)) * (np.array(half) * 0.999)
        mask_points = local + np.array(center)
    return ObjectInstance(
        id=oid,
        category=category,
        obb=obb,
        mask_points=mask_points,
        feature=np.zeros(32),
        front_axis=np.array([1.0, 0.0, 0.0]),
    )


def _scene_with(objects, resolution=(96, 72)):
    return Scene(
        scene_id="t",
        frames=[Frame(0, identity_pose())],
        objects=objects,
        labels=[],
        room_scale=10.0,
        seed=0,
        resolution=resolution,
    )


class TestModelInvariants:
    def test_rotation_must_be_orthonormal(self):
        bad = np.eye(3)
        bad[0, 1] = 0.1
        with pytest.raises(SceneValidationError):
            CameraPose(rotation=bad, translation=np.zeros(3), fx=80, fy=80, cx=48, cy=36)

    def test_focal_lengths_positive(self):
        with pytest.raises(SceneValidationError):
            CameraPose(rotation=np.eye(3), translation=np.zeros(3), fx=-1, fy=80, cx=48, cy=36)

    def test_half_extents_positive(self):
        with pytest.raises(SceneValidationError):
            _axis_box((0, 0, 0), (1, 0, 1))

    def test_mask_points_must_lie_in_box(self):
        with pytest.raises(SceneValidationError):
            _object_from_box(0, (0, 0, 0), (1, 1, 1), mask_points=np.array([[2.0, 0.0, 0.0]]))

    def test_label_needs_distinct_objects(self):
        with pytest.raises(SceneValidationError):
            RelationLabel(1, 1, "on", LabelStatus.UNLABELED)

    def test_scene_rejects_dangling_label(self):
        obj = _object_from_box(0, (0, 0, 2), (0.5, 0.5, 0.5))
        with pytest.raises(SceneValidationError):
            Scene(
                scene_id="t",
                frames=[],
                objects=[obj],
                labels=[RelationLabel(0, 99, "on", LabelStatus.UNLABELED)],
                room_scale=1.0,
                seed=0,
                resolution=(8, 8),
            )


class TestRenderDepth:
    def test_unit_cube_center_pixel_depth(self):
        # Analytic: front face of a unit cube centered 2 m along the optical
        # axis sits at z = 1.5 m.
        scene = _scene_with([_object_from_box(0, (0, 0, 2.0), (0.5, 0.5, 0.5))])
        depth = render_depth(scene, 0)
        assert depth[36, 48] == pytest.approx(1.5, abs=1e-9)

    def test_empty_scene_is_background(self):
        scene = _scene_with([])
        depth = render_depth(scene, 0)
        assert np.all(depth == BACKGROUND_DEPTH)

    def test_nearer_object_wins(self):
        near = _object_from_box(0, (0, 0, 2.0), (0.4, 0.4, 0.4))
        far = _object_from_box(1, (0, 0, 4.0), (0.4, 0.4, 0.4))
        scene = _scene_with([far, near])
        depth = render_depth(scene, 0)
        assert depth[36, 48] == pytest.approx(1.6, abs=1e-9)
        assert scene.id_map(0)[36, 48] == 0

    def test_idmap_and_depth_share_resolution(self, small_scene):
        d = render_depth(small_scene, 0)
        m = small_scene.id_map(0)
        assert d.shape == m.shape == (small_scene.resolution[1], small_scene.resolution[0])


class TestProjectMaskAndVisibility:
    def test_behind_camera_empty(self):
        scene = _scene_with([_object_from_box(0, (0, 0, -3.0), (0.5, 0.5, 0.5))])
        assert not project_mask(scene, 0, 0).any()
        assert visibility(scene, 0, 0) == 0.0

    def test_centroid_matches_projected_center(self):
        center = (0.2, -0.1, 3.0)
        obj = _object_from_box(0, center, (0.5, 0.5, 0.5))
        scene = _scene_with([obj])
        mask = project_mask(scene, 0, 0)
        assert mask.any()
        rows, cols = np.nonzero(mask)
        # Oracle: project the box center analytically with the pinhole model.
        u = 80.0 * center[0] / center[2] + 48.0
        v = 80.0 * center[1] / center[2] + 36.0
        assert abs(cols.mean() - u) < 2.0
        assert abs(rows.mean() - v) < 2.0

    def test_fully_occluded_empty(self):
        hidden = _object_from_box(0, (0, 0, 4.0), (0.3, 0.3, 0.3))
        blocker = _object_from_box(1, (0, 0, 2.0), (1.2, 1.2, 0.2))
        scene = _scene_with([hidden, blocker])
        assert not project_mask(scene, 0, 0).any()
        assert visibility(scene, 0, 0) == 0.0

    def test_unoccluded_visibility_is_one(self):
        scene = _scene_with([_object_from_box(0, (0, 0, 3.0), (0.4, 0.4, 0.4))])
        assert visibility(scene, 0, 0) == 1.0

    def test_half_occluded_fraction(self):
        # Mask = regular grid on the front face; occluder blocks world y > 0.
        # Oracle: count grid pixels on each side of the boundary by brute force.
        half = (0.5, 0.5, 0.1)
        center = (0.0, 0.0, 3.0)
        pts = _grid_face_points(center, half)
        target = _object_from_box(0, center, half, mask_points=pts)
        occluder = _object_from_box(1, (0.0, 0.6, 1.5), (1.5, 0.599, 0.05))
        scene = _scene_with([target, occluder])

        pose = scene.frames[0].pose
        pix = {}
        for p in pts:
            u = int(np.floor(pose.fx * p[0] / p[2] + pose.cx))
            v = int(np.floor(pose.fy * p[1] / p[2] + pose.cy))
            key = (v, u)
            pix.setdefault(key, []).append(p[1])
        expected_visible = sum(1 for ys in pix.values() if min(ys) <= 0.001)
        expected = expected_visible / len(pix)
        assert abs(expected - 0.5) < 0.1  # construction sanity
        assert visibility(scene, 0, 0) == pytest.approx(expected, abs=0.05)

    def test_mask_agrees_with_depth_buffer(self, small_scene):
        # Renderer consistency: recompute the visibility rule independently.
        # A pixel is visible iff its point is not behind another object's
        # surface: depth within 1 cm or in front, or the buffer pixel is owned
        # by the object itself.
        frame = small_scene.frames[0]
        depth = render_depth(small_scene, 0)
        idmap = small_scene.id_map(0)
        w, h = small_scene.resolution
        for obj in small_scene.objects[:6]:
            mask = project_mask(small_scene, obj.id, 0)
            expected = np.zeros((h, w), dtype=bool)
            cam = frame.pose.world_to_camera(obj.mask_points)
            for x, y, z in cam:
                if z <= 1e-9:
                    continue
                u = int(np.floor(frame.pose.fx * x / z + frame.pose.cx))
                v = int(np.floor(frame.pose.fy * y / z + frame.pose.cy))
                if 0 <= u < w and 0 <= v < h:
                    if z <= depth[v, u] + 0.01 or idmap[v, u] == obj.id:
                        expected[v, u] = True
            assert (mask == expected).all()


class TestGenerator:
    def test_determinism_byte_identical(self, tmp_path):
        spec = SceneSpec(n_objects=(6, 8))
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_scene(generate_scene(spec, 11), a)
        save_scene(generate_scene(spec, 11), b)
        assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()

    def test_forced_stacked_cup_on_table(self):
        spec = SceneSpec(
            n_objects=(3, 3),
            config_mix={"stacked": 1.0},
            base_categories=("table",),
            item_categories=("cup",),
            drop_rate=0.0,
        )
        scene = generate_scene(spec, 3)
        cups = [o for o in scene.objects if o.category == "cup"]
        tables = [o for o in scene.objects if o.category == "table"]
        assert cups and tables
        hits = [
            lab
            for lab in scene.labels
            if lab.phrase == "on"
            and lab.subject_id in {c.id for c in cups}
            and lab.object_id in {t.id for t in tables}
        ]
        assert hits and all(lab.truth == 1 for lab in hits)

    def test_zero_drop_rate_keeps_all_annotated(self):
        scene = generate_scene(SceneSpec(drop_rate=0.0), 5)
        assert all(lab.status is LabelStatus.ANNOTATED_POSITIVE for lab in scene.labels)

    def test_bad_spec_rejected(self):
        with pytest.raises(GenerationError):
            SceneSpec(drop_rate=1.0).validate()
        with pytest.raises(GenerationError):
            SceneSpec(n_objects=(5, 3)).validate()
        with pytest.raises(GenerationError):
            SceneSpec(config_mix={"flying": 1.0}).validate()

    def test_overfull_room_rejected(self):
        spec = SceneSpec(n_objects=(60, 60), room=(2.0, 2.0, 2.5))
        with pytest.raises(GenerationError):
            generate_scene(spec, 0)

    def test_generator_geometric_soundness(self, scene_batch):
        # Brute-force confirmation of the generator's ground-truth placements.
        for scene in scene_batch:
            by_id = {o.id: o for o in scene.objects}
            for lab in scene.labels:
                subj, obj = by_id[lab.subject_id], by_id[lab.object_id]
                if lab.phrase == "on":
                    assert abs(subj.obb.bottom() - obj.obb.top()) <= 0.02 + 1e-9
                    # nonzero projected overlap, by brute force over mask points
                    corners = obj.obb.corners()[:, :2]
                    lo, hi = corners.min(axis=0), corners.max(axis=0)
                    xy = subj.mask_points[:, :2]
                    assert ((xy >= lo) & (xy <= hi)).all(axis=1).any()
                elif lab.phrase == "inside":
                    assert containment_fraction_true(subj, obj) >= 0.9
                elif lab.phrase == "near":
                    d = np.sqrt(
                        ((subj.mask_points[:, None, :] - obj.mask_points[None, :, :]) ** 2).sum(-1)
                    ).min()
                    assert d < scene.proximity_radius + 0.05

    def test_visible_frames_subset_of_frames(self, small_scene):
        frame_ids = {f.index for f in small_scene.frames}
        for obj in small_scene.objects:
            assert obj.visible_frames <= frame_ids


class TestSceneIO:
    def test_round_trip_structural_equality(self, tmp_path, small_scene):
        p = tmp_path / "scene.jsonl"
        save_scene(small_scene, p)
        loaded = load_scene(p)
        assert loaded.scene_id == small_scene.scene_id
        assert len(loaded.objects) == len(loaded.objects)
        assert len(loaded.labels) == len(small_scene.labels)
        for a, b in zip(small_scene.objects, loaded.objects):
            assert a.category == b.category
            np.testing.assert_array_equal(a.mask_points, b.mask_points)
            np.testing.assert_array_equal(a.obb.rotation, b.obb.rotation)
            assert a.visible_frames == b.visible_frames
        for a, b in zip(small_scene.labels, loaded.labels):
            assert (a.subject_id, a.phrase, a.object_id, a.status, a.truth) == (
                b.subject_id,
                b.phrase,
                b.object_id,
                b.status,
                b.truth,
            )
        # save -> load -> save is byte stable
        p2 = tmp_path / "scene2.jsonl"
        save_scene(loaded, p2)
        assert p.read_bytes() == p2.read_bytes()

    def test_dangling_label_reports_line(self, tmp_path, small_scene):
        p = tmp_path / "scene.jsonl"
        save_scene(small_scene, p)
        lines = p.read_text().splitlines()
        lines.append(
            '{"kind": "label", "subject_id": 0, "object_id": 9999, "phrase": "on", "status": "unlabeled"}'
        )
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(SceneFormatError, match=rf"line {len(lines)}"):
            load_scene(p)

    def test_malformed_json_reports_line(self, tmp_path, small_scene):
        p = tmp_path / "scene.jsonl"
        save_scene(small_scene, p)
        text = p.read_text() + "{not json\n"
        p.write_text(text)
        with pytest.raises(SceneFormatError, match="invalid JSON"):
            load_scene(p)

    def test_empty_object_scene_round_trip(self, tmp_path):
        scene = Scene(
            scene_id="empty",
            frames=[Frame(0, identity_pose())],
            objects=[],
            labels=[],
            room_scale=1.0,
            seed=0,
            resolution=(8, 6),
        )
        p = tmp_path / "empty.jsonl"
        save_scene(scene, p)
        loaded = load_scene(p)
        assert loaded.objects == [] and loaded.labels == []

    def test_learner_view_omits_truth(self, tmp_path, small_scene):
        p = tmp_path / "learner.jsonl"
        save_scene(small_scene, p, include_truth=False)
        assert '"truth"' not in p.read_text()
        loaded = load_scene(p)
        assert all(lab.truth is None for lab in loaded.labels)
