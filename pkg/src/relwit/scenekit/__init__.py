"""Scene data model, synthetic scene generator, depth/mask rendering and file I/O."""

from relwit.scenekit.model import (
    BACKGROUND_DEPTH,
    CameraPose,
    Frame,
    LabelStatus,
    ObjectInstance,
    OrientedBox,
    RelationLabel,
    Scene,
    SceneValidationError,
)
from relwit.scenekit.generate import GenerationError, SceneSpec, generate_scene
from relwit.scenekit.render import (
    project_mask,
    project_points,
    render_depth,
    render_id_map,
    visibility,
)
from relwit.scenekit.io import SceneFormatError, load_scene, save_scene

__all__ = [
    "BACKGROUND_DEPTH",
    "CameraPose",
    "Frame",
    "GenerationError",
    "LabelStatus",
    "ObjectInstance",
    "OrientedBox",
    "RelationLabel",
    "Scene",
    "SceneFormatError",
    "SceneSpec",
    "SceneValidationError",
    "generate_scene",
    "load_scene",
    "project_mask",
    "project_points",
    "render_depth",
    "render_id_map",
    "save_scene",
    "visibility",
]
