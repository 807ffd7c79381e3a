import numpy as np
import pytest

from relwit.phrasebank import build_pool, default_pool_sources
from relwit.scenekit import ObjectInstance, OrientedBox, SceneSpec, generate_scene
from relwit.scenekit.generate import _sample_solid_points, _yaw_rotation


def make_box_object(
    oid,
    center,
    half,
    yaw=0.0,
    category="box",
    n_surface=400,
    n_interior=200,
    front_axis=(1.0, 0.0, 0.0),
    symmetric=False,
    open_face=None,
    points_seed=None,
):
    """Box-shaped object with generator-style surface+interior mask samples."""
    obb = OrientedBox(np.array(center, float), np.array(half, float), _yaw_rotation(yaw))
    rng = np.random.default_rng(oid + 101 if points_seed is None else points_seed)
    pts = _sample_solid_points(rng, obb, n_surface, n_interior)
    fa = np.array(front_axis, float)
    fa = fa / np.linalg.norm(fa)
    return ObjectInstance(
        id=oid,
        category=category,
        obb=obb,
        mask_points=pts,
        feature=np.zeros(32),
        front_axis=fa,
        symmetric=symmetric,
        open_face=open_face,
    )


@pytest.fixture(scope="session")
def default_pool():
    return build_pool(default_pool_sources())


@pytest.fixture(scope="session")
def small_scene():
    """One mid-size scene reused by read-only tests."""
    return generate_scene(SceneSpec(), seed=7)


@pytest.fixture(scope="session")
def scene_batch():
    """A handful of varied scenes for property-style checks."""
    return [generate_scene(SceneSpec(), seed=s) for s in range(4)]


def identity_pose(fx=80.0, fy=80.0, cx=48.0, cy=36.0):
    from relwit.scenekit import CameraPose

    return CameraPose(rotation=np.eye(3), translation=np.zeros(3), fx=fx, fy=fy, cx=cx, cy=cy)
