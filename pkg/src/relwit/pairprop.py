"""Pair geometry features, pair embeddings and high-recall TopK phrase proposal."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from relwit.phrasebank import PhrasePool, RelationPhrase
from relwit.probes import surface_distance
from relwit.scenekit.model import ObjectInstance, Scene

FEATURE_DIM = 32
GEOMETRY_DIM = 8
UNION_STATS_DIM = 8
PAIR_INPUT_DIM = 2 * FEATURE_DIM + (FEATURE_DIM + UNION_STATS_DIM) + GEOMETRY_DIM + FEATURE_DIM
TEXT_DIM = 64
CONTEXT_RADIUS = 1.5  # meters around the union box
IOU_SAMPLES = 8192


@dataclass(frozen=True)
class GeometryFeatures:
    relative_translation: np.ndarray  # (3,) center_j - center_i
    scale_ratio: float  # volume_i / volume_j
    iou3d: float
    vertical_disp: float  # bottom_i - top_j along gravity
    surface_distance: float
    orientation_diff: float  # radians between front axes

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.relative_translation,
                [
                    self.scale_ratio,
                    self.iou3d,
                    self.vertical_disp,
                    self.surface_distance,
                    self.orientation_diff,
                ],
            ]
        )


@dataclass
class PairFeatures:
    pair_embedding: np.ndarray  # (PAIR_INPUT_DIM,) after the linear map
    union_feature: np.ndarray
    context: np.ndarray
    geometry: GeometryFeatures


def _pair_rng(i: int, j: int) -> np.random.Generator:
    digest = hashlib.blake2b(f"iou:{i}:{j}".encode(), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def iou3d_monte_carlo(a, b, n_samples: int = IOU_SAMPLES, rng: Optional[np.random.Generator] = None) -> float:
    """Sampled-point IoU of two oriented boxes (symmetric two-sided estimate)."""
    rng = rng or np.random.default_rng(0)
    va, vb = a.volume(), b.volume()
    pts_a = a.to_world(rng.uniform(-1, 1, (n_samples, 3)) * a.half_extents)
    pts_b = b.to_world(rng.uniform(-1, 1, (n_samples, 3)) * b.half_extents)
    f_ab = float(b.contains(pts_a).mean())
    f_ba = float(a.contains(pts_b).mean())
    inter = 0.5 * (va * f_ab + vb * f_ba)
    union = va + vb - inter
    if union <= 0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))


def pair_geometry(scene: Scene, i: int, j: int) -> GeometryFeatures:
    """3D geometry block for an ordered pair."""
    if i == j:
        raise ValueError("pair geometry needs two distinct objects")
    a, b = scene.object_by_id(i), scene.object_by_id(j)
    rel = b.obb.center - a.obb.center
    scale_ratio = a.obb.volume() / b.obb.volume()
    iou = iou3d_monte_carlo(a.obb, b.obb, rng=_pair_rng(i, j))
    vertical = a.obb.bottom() - b.obb.top()
    d_surf = surface_distance(a.mask_points, b.mask_points)
    cosang = float(np.clip(a.front_axis @ b.front_axis, -1.0, 1.0))
    return GeometryFeatures(
        relative_translation=rel,
        scale_ratio=scale_ratio,
        iou3d=iou,
        vertical_disp=vertical,
        surface_distance=d_surf,
        orientation_diff=float(np.arccos(cosang)),
    )


def _union_aabb(a: ObjectInstance, b: ObjectInstance) -> tuple[np.ndarray, np.ndarray]:
    corners = np.vstack([a.obb.corners(), b.obb.corners()])
    return corners.min(axis=0), corners.max(axis=0)


def _union_stats(a: ObjectInstance, b: ObjectInstance) -> np.ndarray:
    lo, hi = _union_aabb(a, b)
    ext = hi - lo
    vol = float(np.prod(ext))
    fill = (a.obb.volume() + b.obb.volume()) / max(vol, 1e-9)
    return np.array(
        [
            ext[0],
            ext[1],
            ext[2],
            float(np.linalg.norm(ext)),
            np.log(vol + 1e-12) / 10.0,
            min(fill, 4.0),
            (lo[2] + hi[2]) / 2.0,
            0.0,
        ]
    )


def union_feature(a: ObjectInstance, b: ObjectInstance) -> np.ndarray:
    """Element-wise max of the object features plus union-box statistics."""
    return np.concatenate([np.maximum(a.feature, b.feature), _union_stats(a, b)])


def pair_context(scene: Scene, i: int, j: int, radius: float = CONTEXT_RADIUS) -> np.ndarray:
    """Mean feature of other objects within ``radius`` of the pair's union box."""
    a, b = scene.object_by_id(i), scene.object_by_id(j)
    lo, hi = _union_aabb(a, b)
    feats = []
    for other in scene.objects:
        if other.id in (i, j):
            continue
        c = other.obb.center
        gap = np.linalg.norm(np.maximum(np.maximum(lo - c, c - hi), 0.0))
        if gap <= radius:
            feats.append(other.feature)
    if not feats:
        return np.zeros(FEATURE_DIM)
    return np.mean(feats, axis=0)


def pair_embedding(
    subject: ObjectInstance,
    target: ObjectInstance,
    geometry: GeometryFeatures,
    context: np.ndarray,
    phi: Optional[np.ndarray] = None,
) -> PairFeatures:
    """Ordered-pair embedding: concatenation followed by the fixed linear map.

    ``phi=None`` is the identity-initialized warm start.
    """
    union = union_feature(subject, target)
    parts = np.concatenate([subject.feature, target.feature, union, geometry.vector(), context])
    if parts.shape != (PAIR_INPUT_DIM,):
        raise ValueError(f"pair input must have dim {PAIR_INPUT_DIM}, got {parts.shape}")
    if not np.isfinite(parts).all():
        raise ValueError("pair features must be finite")
    if phi is None:
        embedded = parts
    else:
        if phi.shape[1] != PAIR_INPUT_DIM:
            raise ValueError("phi shape mismatch")
        embedded = phi @ parts
    return PairFeatures(
        pair_embedding=embedded, union_feature=union, context=context, geometry=geometry
    )


def pair_features(scene: Scene, i: int, j: int, phi: Optional[np.ndarray] = None) -> PairFeatures:
    """Convenience: geometry + context + embedding for an ordered scene pair."""
    geo = pair_geometry(scene, i, j)
    ctx = pair_context(scene, i, j)
    return pair_embedding(scene.object_by_id(i), scene.object_by_id(j), geo, ctx, phi=phi)


@dataclass
class ProposerModel:
    """Linear projections scoring pair embeddings against phrase embeddings."""

    pair_projection: np.ndarray  # (proj, PAIR_INPUT_DIM)
    text_projection: np.ndarray  # (proj, TEXT_DIM)
    k: int = 20  # high-recall retrieval depth

    def __post_init__(self):
        if self.pair_projection.shape[0] != self.text_projection.shape[0]:
            raise ValueError("projection output dimensions must match")
        if self.k < 1:
            raise ValueError("K must be at least 1")

    @classmethod
    def seeded(cls, seed: int, proj_dim: int = 32, k: int = 20) -> "ProposerModel":
        rng = np.random.default_rng(seed)
        wp = rng.standard_normal((proj_dim, PAIR_INPUT_DIM)) / np.sqrt(PAIR_INPUT_DIM)
        wt = rng.standard_normal((proj_dim, TEXT_DIM)) / np.sqrt(TEXT_DIM)
        return cls(pair_projection=wp, text_projection=wt, k=k)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return float(u @ v / (nu * nv))


@dataclass
class RelationCandidate:
    """An ordered pair plus one proposed phrase, with its supervision status."""

    scene_id: str
    subject_id: int
    object_id: int
    phrase: RelationPhrase
    similarity: float
    annotated: bool = False  # True when the triple is an observed positive


def annotated_cluster_triples(scene: Scene, pool: PhrasePool) -> set[tuple[int, int, int]]:
    """(subject, object, phrase-cluster) triples with observed positive labels."""
    from relwit.scenekit.model import LabelStatus

    out = set()
    for lab in scene.labels:
        if lab.status is not LabelStatus.ANNOTATED_POSITIVE:
            continue
        phrase = pool.get(lab.phrase)
        if phrase is not None:
            out.add((lab.subject_id, lab.object_id, phrase.cluster_id))
    return out


def candidate_pairs(scene: Scene) -> list[tuple[int, int]]:
    """Ordered pairs worth proposing: content-content plus content-onto-wall."""
    content = [o for o in scene.objects if o.category != "wall"]
    walls = [o for o in scene.objects if o.category == "wall"]
    pairs = [(a.id, b.id) for a in content for b in content if a.id != b.id]
    pairs.extend((a.id, w.id) for a in content for w in walls)
    return pairs


def enumerate_candidates(
    scene: Scene,
    pool: PhrasePool,
    model: ProposerModel,
    features: Optional[dict[tuple[int, int], PairFeatures]] = None,
) -> list[RelationCandidate]:
    """High-recall TopK proposal over every candidate pair in a scene."""
    annotated = annotated_cluster_triples(scene, pool)
    out = []
    for i, j in candidate_pairs(scene):
        if features is not None and (i, j) in features:
            pf = features[(i, j)]
        else:
            pf = pair_features(scene, i, j)
            if features is not None:
                features[(i, j)] = pf
        for phrase, sim in propose_candidates(pf, pool, model):
            out.append(
                RelationCandidate(
                    scene_id=scene.scene_id,
                    subject_id=i,
                    object_id=j,
                    phrase=phrase,
                    similarity=sim,
                    annotated=(i, j, phrase.cluster_id) in annotated,
                )
            )
    return out


def propose_candidates(
    pair: PairFeatures, pool: PhrasePool, model: ProposerModel
) -> list[tuple[RelationPhrase, float]]:
    """TopK cluster representatives by projected cosine similarity.

    Deterministic order: descending similarity, ties broken by ascending
    cluster id then lexicographic phrase. Output is duplicate-free.
    """
    if len(pool) == 0:
        raise ValueError("phrase pool is empty")
    u = model.pair_projection @ pair.pair_embedding
    scored = []
    for phrase in pool.representatives():
        v = model.text_projection @ phrase.embedding
        scored.append((phrase, _cosine(u, v)))
    scored.sort(key=lambda item: (-item[1], item[0].cluster_id, item[0].normalized))
    return scored[: model.k]
