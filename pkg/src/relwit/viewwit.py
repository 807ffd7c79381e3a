"""Per-view witness scoring and witness-record assembly.

Combines view selection, pluggable RGB scoring, family-dispatched depth
tests, 3D probes, multi-view persistence, role consistency and the
geometry-blind object-prior null score into one record per candidate.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from relwit.families import FAMILY_ORDER, N_FAMILIES, WitnessFamily
from relwit.pairprop import RelationCandidate
from relwit.phrasebank import PhrasePool, RelationPhrase
from relwit.probes import ProbeParams, ProbeVector, probe_vector, s3d_score
from relwit.scenekit.model import Scene
from relwit.scenekit.render import project_points, visibility

DEPTH_CONTACT_GAP = 0.03  # meters; support/containment depth compatibility
NEUTRAL_DEPTH = 0.5  # families without a depth probe


@dataclass(frozen=True)
class ViewwitConfig:
    tau_v: float = 0.2  # per-object visibility threshold for view selection
    max_views: int = 6
    pool_eps: float = 0.01
    top_m: int = 4  # views entering the reliability-weighted top-average
    min_angle_deg: float = 15.0  # angular novelty suppression radius
    mask_px_norm: float = 200.0  # pixel count considered "full" mask quality
    probe: ProbeParams = field(default_factory=ProbeParams)


@dataclass
class ViewScore:
    frame_index: int
    s_rgb: float = 0.0
    s_dep: float = 0.0
    reliability: float = 0.0

    @property
    def strength(self) -> float:
        """x_t term of the multi-view statistic."""
        return self.reliability * (self.s_rgb + self.s_dep)


@dataclass
class WitnessTrace:
    supporting_frames: list[tuple[int, float]] = field(default_factory=list)
    region_2d: dict[int, tuple[int, int, int, int]] = field(default_factory=dict)
    region_3d: Optional[tuple[tuple[float, float, float], tuple[float, float, float]]] = None


@dataclass
class QualitySummary:
    n_views: int = 0
    min_visibility: float = 0.0
    mask_point_count: int = 0
    render_coverage: float = 0.0


@dataclass
class WitnessRecord:
    scene_id: str
    subject_id: int
    object_id: int
    phrase: str  # normalized
    cluster_id: int
    s_rgb: float
    s_dep: float
    s_3d: float
    s_mv: float
    s_role: float
    s_null: float
    family_dist: np.ndarray
    trace: WitnessTrace
    quality: QualitySummary
    views: list[ViewScore] = field(default_factory=list)
    annotated: bool = False

    @property
    def family(self) -> WitnessFamily:
        return FAMILY_ORDER[int(np.argmax(self.family_dist))]

    def scores(self) -> dict[str, float]:
        return {
            "s_rgb": self.s_rgb,
            "s_dep": self.s_dep,
            "s_3d": self.s_3d,
            "s_mv": self.s_mv,
            "s_role": self.s_role,
            "s_null": self.s_null,
        }


# --- scorer ports ------------------------------------------------------------


class RgbScorerPort(Protocol):
    """(frame, subject mask, object mask, phrase) -> [0, 1] appearance score."""

    def score(
        self, scene: Scene, frame_index: int, subject_id: int, object_id: int, phrase: str
    ) -> float: ...


class NullScorer:
    """Constant neutral scorer; stands in when no appearance model is wired."""

    def __init__(self, value: float = 0.5):
        self.value = float(min(max(value, 0.0), 1.0))

    def score(self, scene, frame_index, subject_id, object_id, phrase) -> float:
        return self.value


class OracleNoisyScorer:
    """Simulated appearance verifier: reads hidden truth, adds noise and bias.

    Evaluation-harness stand-in for a learned RGB-language scorer. Output is
    deterministic per (scene, frame, pair, phrase, seed).
    """

    def __init__(
        self,
        hi: float = 0.8,
        lo: float = 0.2,
        noise: float = 0.12,
        bias: float = 0.0,
        seed: int = 0,
    ):
        self.hi, self.lo, self.noise, self.bias, self.seed = hi, lo, noise, bias, seed

    def score(self, scene, frame_index, subject_id, object_id, phrase) -> float:
        from relwit.scenekit.oracle import relation_truth

        truth = relation_truth(scene, subject_id, object_id, phrase)
        base = 0.5 if truth is None else (self.hi if truth else self.lo)
        key = f"{scene.scene_id}:{frame_index}:{subject_id}:{object_id}:{phrase}:{self.seed}"
        digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        value = base + self.bias + rng.normal(0.0, self.noise)
        return float(min(max(value, 0.0), 1.0))


class ExternalProcessScorer:
    """Line-protocol scorer over a child process' stdio.

    One JSON request per line; the child answers one JSON object per line
    with a ``score`` field. Calls are serialized, so a single child serves
    concurrent record builders.
    """

    def __init__(self, command: Sequence[str]):
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        self._lock = threading.Lock()

    def score(self, scene, frame_index, subject_id, object_id, phrase) -> float:
        request = {
            "scene_id": scene.scene_id,
            "frame_index": frame_index,
            "subject_id": subject_id,
            "object_id": object_id,
            "phrase": phrase,
        }
        with self._lock:
            assert self._proc.stdin and self._proc.stdout
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        if not line:
            raise RuntimeError("external scorer closed its stream")
        value = float(json.loads(line)["score"])
        return min(max(value, 0.0), 1.0)

    def close(self) -> None:
        if self._proc.stdin:
            self._proc.stdin.close()
        self._proc.terminate()
        self._proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class NullModel:
    """Laplace-smoothed relation frequency per category pair; geometry-blind."""

    def __init__(self):
        self.pair_counts: dict[tuple[str, str], int] = {}
        self.triple_counts: dict[tuple[str, str, int], int] = {}
        self.cluster_totals: dict[int, int] = {}
        self.total = 0
        self.n_clusters = 1

    @classmethod
    def fit(cls, scenes: Sequence[Scene], pool: PhrasePool) -> "NullModel":
        from relwit.scenekit.model import LabelStatus

        model = cls()
        model.n_clusters = max(len({p.cluster_id for p in pool}), 1)
        for scene in scenes:
            by_id = {o.id: o for o in scene.objects}
            for lab in scene.labels:
                if lab.status is not LabelStatus.ANNOTATED_POSITIVE:
                    continue
                phrase = pool.get(lab.phrase)
                if phrase is None:
                    continue
                key = (by_id[lab.subject_id].category, by_id[lab.object_id].category)
                model.pair_counts[key] = model.pair_counts.get(key, 0) + 1
                tkey = (key[0], key[1], phrase.cluster_id)
                model.triple_counts[tkey] = model.triple_counts.get(tkey, 0) + 1
                model.cluster_totals[phrase.cluster_id] = (
                    model.cluster_totals.get(phrase.cluster_id, 0) + 1
                )
                model.total += 1
        return model

    def cluster_prior(self, cluster_id: int) -> float:
        return (self.cluster_totals.get(cluster_id, 0) + 1) / (self.total + self.n_clusters)

    def score(self, subject_category: str, object_category: str, cluster_id: int) -> float:
        n = self.pair_counts.get((subject_category, object_category), 0)
        count = self.triple_counts.get((subject_category, object_category, cluster_id), 0)
        prior = self.cluster_prior(cluster_id)
        return float(min(max((count + prior) / (n + 2), 0.0), 1.0))


@dataclass
class WitnessScorers:
    """Bundle of the pluggable pieces a record build needs."""

    rgb: RgbScorerPort = field(default_factory=NullScorer)
    null: Optional[NullModel] = None
    relation_logit: Optional[Callable[[Scene, int, int, RelationPhrase], float]] = None


@dataclass
class Perturbation:
    """Witness-stability perturbation applied during uncertainty estimation."""

    keep_views: Optional[set[int]] = None
    subject_points: Optional[np.ndarray] = None
    object_points: Optional[np.ndarray] = None
    phrase_override: Optional[RelationPhrase] = None


# --- view machinery ----------------------------------------------------------


def _camera_forward(pose) -> np.ndarray:
    return pose.rotation[2]  # third row of world->camera maps to camera z


def select_views(
    scene: Scene, i: int, j: int, tau_v: float, max_views: int = 6, min_angle_deg: float = 15.0
) -> list[tuple[int, float]]:
    """Frames where both objects clear the visibility threshold, greedily
    ranked by reliability with angular-diversity suppression.

    Returns (frame_index, reliability) in selection order.
    """
    if not (0.0 < tau_v < 1.0):
        raise ValueError("tau_v must lie in (0, 1)")
    candidates = []
    for frame in scene.frames:
        vis_i = visibility(scene, i, frame.index)
        if vis_i <= tau_v:
            continue
        vis_j = visibility(scene, j, frame.index)
        if vis_j <= tau_v:
            continue
        pix_i, _ = _mask_pixels(scene, frame.index, i)
        pix_j, _ = _mask_pixels(scene, frame.index, j)
        mask_px = min(len(pix_i), len(pix_j))
        base = vis_i * vis_j * min(1.0, mask_px / 200.0)
        candidates.append((frame.index, base, _camera_forward(frame.pose)))
    chosen: list[tuple[int, float]] = []
    chosen_dirs: list[np.ndarray] = []
    min_cos = math.cos(math.radians(min_angle_deg))
    while candidates and len(chosen) < max_views:
        best_idx, best_rho = -1, -1.0
        for k, (t, base, fwd) in enumerate(candidates):
            novelty = 1.0
            for d in chosen_dirs:
                if float(fwd @ d) > min_cos:
                    novelty = 0.5
                    break
            rho = base * novelty
            if rho > best_rho + 1e-12:
                best_idx, best_rho = k, rho
        t, _, fwd = candidates.pop(best_idx)
        chosen.append((t, best_rho))
        chosen_dirs.append(fwd)
    return chosen


def _mask_pixels(scene: Scene, frame_index: int, object_id: int, points: Optional[np.ndarray] = None):
    """(visible pixel array (N,2), their buffer depths). Cached on the scene."""
    cache = scene.__dict__.setdefault("_pixel_cache", {})
    cache_key = None
    if points is None:
        cache_key = (frame_index, object_id)
        if cache_key in cache:
            return cache[cache_key]
        points = scene.object_by_id(object_id).mask_points
    frame = scene.frame_by_index(frame_index)
    width, height = scene.resolution
    pixels, z, _ = project_points(frame.pose, points, width, height)
    depth = scene.depth(frame_index)
    idmap = scene.id_map(frame_index)
    if len(pixels) == 0:
        result = (np.zeros((0, 2), dtype=np.int64), np.zeros(0))
    else:
        buffered = depth[pixels[:, 0], pixels[:, 1]]
        owner = idmap[pixels[:, 0], pixels[:, 1]]
        keep = (z <= buffered + 0.01) | (owner == object_id)
        vis_pixels = np.unique(pixels[keep], axis=0)
        if len(vis_pixels):
            result = (vis_pixels, depth[vis_pixels[:, 0], vis_pixels[:, 1]])
        else:
            result = (np.zeros((0, 2), dtype=np.int64), np.zeros(0))
    if cache_key is not None:
        cache[cache_key] = result
    return result


def pool_rgb(view_scores: Sequence[ViewScore], eps: float, top_m: int = 4) -> float:
    """Reliability-weighted top-average over the top-m views by reliability."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not view_scores:
        return 0.0
    ranked = sorted(view_scores, key=lambda v: -v.reliability)[: min(top_m, len(view_scores))]
    num = sum(v.reliability * v.s_rgb for v in ranked)
    den = sum(v.reliability for v in ranked) + eps
    return float(num / den)


def _pixel_world_heights(scene: Scene, frame_index: int, pixels: np.ndarray, depths: np.ndarray) -> np.ndarray:
    pose = scene.frame_by_index(frame_index).pose
    u = (pixels[:, 1] + 0.5 - pose.cx) / pose.fx
    v = (pixels[:, 0] + 0.5 - pose.cy) / pose.fy
    cam = np.stack([u * depths, v * depths, depths], axis=1)
    world = pose.camera_to_world(cam)
    return world[:, 2]


def _depth_support_test(pix_i, dep_i, pix_j, dep_j) -> float:
    """Fraction of subject pixels adjacent to object pixels whose depth gap is
    small enough for surface contact."""
    if len(pix_i) == 0 or len(pix_j) == 0:
        return 0.0
    jmap = {(int(r), int(c)): d for (r, c), d in zip(pix_j, dep_j)}
    touched = 0
    consistent = 0
    for (r, c), d in zip(pix_i, dep_i):
        best = None
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                other = jmap.get((int(r) + dr, int(c) + dc))
                if other is not None and np.isfinite(other):
                    gap = abs(float(d) - float(other))
                    best = gap if best is None else min(best, gap)
        if best is not None:
            touched += 1
            if best < DEPTH_CONTACT_GAP:
                consistent += 1
    if touched == 0:
        return 0.0
    return consistent / touched


def _depth_vertical_test(scene, frame_index, pix_i, dep_i, pix_j, dep_j, direction: str) -> float:
    if len(pix_i) == 0 or len(pix_j) == 0:
        return 0.0
    if direction in ("front", "back"):
        gap = float(np.mean(dep_j)) - float(np.mean(dep_i))  # positive: subject nearer
        signed = gap if direction == "front" else -gap
    else:
        z_i = _pixel_world_heights(scene, frame_index, pix_i, dep_i)
        z_j = _pixel_world_heights(scene, frame_index, pix_j, dep_j)
        signed = float(np.mean(z_i)) - float(np.mean(z_j))
        if direction == "down":
            signed = -signed
    return float(1.0 / (1.0 + math.exp(-signed / 0.02)))


def _depth_containment_test(pix_i, dep_i, pix_j, dep_j) -> float:
    """Object pixels surround the subject at smaller-or-equal depth."""
    if len(pix_i) == 0 or len(pix_j) == 0:
        return 0.0
    jset = {(int(r), int(c)): d for (r, c), d in zip(pix_j, dep_j)}
    surrounded = 0
    compatible = 0
    for (r, c), d in zip(pix_i, dep_i):
        neighbor = None
        for dr in range(-3, 4):
            for dc in range(-3, 4):
                other = jset.get((int(r) + dr, int(c) + dc))
                if other is not None:
                    neighbor = other if neighbor is None else min(neighbor, other)
        if neighbor is not None:
            surrounded += 1
            if neighbor <= d + DEPTH_CONTACT_GAP:
                compatible += 1
    if len(pix_i) == 0:
        return 0.0
    surround_frac = surrounded / len(pix_i)
    compat_frac = (compatible / surrounded) if surrounded else 0.0
    return surround_frac * compat_frac


def depth_view_score(
    scene: Scene,
    frame_index: int,
    subject_id: int,
    object_id: int,
    family_dist: np.ndarray,
    direction: str = "",
    subject_points: Optional[np.ndarray] = None,
    object_points: Optional[np.ndarray] = None,
) -> float:
    """Family-dispatched depth test for one view, mixed by the parse."""
    pix_i, dep_i = _mask_pixels(scene, frame_index, subject_id, subject_points)
    pix_j, dep_j = _mask_pixels(scene, frame_index, object_id, object_points)
    # Rim pixels can sit over background (infinite depth); depth analysis uses
    # only pixels with a rendered surface.
    fin_i, fin_j = np.isfinite(dep_i), np.isfinite(dep_j)
    pix_i, dep_i = pix_i[fin_i], dep_i[fin_i]
    pix_j, dep_j = pix_j[fin_j], dep_j[fin_j]
    per_family = np.full(N_FAMILIES, NEUTRAL_DEPTH)
    sup = WitnessFamily.SUPPORT.index
    ver = WitnessFamily.VERTICAL_ORDER.index
    con = WitnessFamily.CONTAINMENT.index
    if family_dist[sup] > 1e-9:
        per_family[sup] = _depth_support_test(pix_i, dep_i, pix_j, dep_j)
    if family_dist[ver] > 1e-9:
        per_family[ver] = _depth_vertical_test(
            scene, frame_index, pix_i, dep_i, pix_j, dep_j, direction or "up"
        )
    if family_dist[con] > 1e-9:
        per_family[con] = _depth_containment_test(pix_i, dep_i, pix_j, dep_j)
    return float(np.asarray(family_dist) @ per_family)


def depth_score(view_scores: Sequence[ViewScore], eps: float) -> float:
    """Reliability-weighted average of the per-view depth tests."""
    if not view_scores:
        return 0.0
    num = sum(v.reliability * v.s_dep for v in view_scores)
    den = sum(v.reliability for v in view_scores) + eps
    return float(num / den)


def multiview_score(view_scores: Sequence[ViewScore]) -> float:
    """(1 - Var(x)) * mean(x)/2 with x = rho*(s_rgb + s_dep), clamped to [0, 1]."""
    if not view_scores:
        return 0.0
    x = np.array([v.strength for v in view_scores])
    value = (1.0 - float(np.var(x))) * (float(np.mean(x)) / 2.0)
    return float(min(max(value, 0.0), 1.0))


def role_score(s_ij: float, s_ji: float, d_r: float) -> float:
    """sigma(s_ij - s_ji) ** d_r; role-insensitive phrases (d_r = 0) score 1."""
    if not (0.0 <= d_r <= 1.0):
        raise ValueError("role sensitivity must lie in [0, 1]")
    return float(1.0 / (1.0 + math.exp(-(s_ij - s_ji)))) ** d_r


def null_score(
    model: Optional[NullModel], subject_category: str, object_category: str, cluster_id: int
) -> float:
    if model is None:
        return 0.0
    return model.score(subject_category, object_category, cluster_id)


# --- record assembly ---------------------------------------------------------


def _region_3d_for(
    probe: ProbeVector, family: WitnessFamily, subject_points: np.ndarray
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    raw = probe.raw
    pts: Optional[np.ndarray] = None
    if family in (WitnessFamily.SUPPORT, WitnessFamily.ATTACHMENT, WitnessFamily.INTERACTION):
        idx = raw.get("contact_point_idx")
        if idx is not None and len(idx):
            pts = subject_points[idx]
    elif family is WitnessFamily.CONTAINMENT:
        idx = raw.get("inside_point_idx")
        if idx is not None and len(idx):
            pts = subject_points[idx]
    if pts is None:
        a, b = raw["closest_pair"]
        pts = np.stack([a, b])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return (tuple(float(x) for x in lo), tuple(float(x) for x in hi))


def build_witness_record(
    scene: Scene,
    candidate: RelationCandidate,
    scorers: WitnessScorers,
    config: ViewwitConfig,
    perturbation: Optional[Perturbation] = None,
) -> WitnessRecord:
    """Assemble the full six-score witness record for one candidate."""
    phrase = candidate.phrase
    if perturbation is not None and perturbation.phrase_override is not None:
        phrase = perturbation.phrase_override
    i, j = candidate.subject_id, candidate.object_id
    subject = scene.object_by_id(i)
    target = scene.object_by_id(j)
    sub_pts = subject.mask_points
    obj_pts = target.mask_points
    if perturbation is not None:
        if perturbation.subject_points is not None:
            sub_pts = perturbation.subject_points
        if perturbation.object_points is not None:
            obj_pts = perturbation.object_points

    qualifying = select_views(scene, i, j, config.tau_v, max_views=len(scene.frames) or 1,
                              min_angle_deg=config.min_angle_deg)
    selected = qualifying[: config.max_views]
    if perturbation is not None and perturbation.keep_views is not None:
        selected = [(t, rho) for (t, rho) in selected if t in perturbation.keep_views]

    views: list[ViewScore] = []
    for t, rho in selected:
        s_rgb = float(min(max(scorers.rgb.score(scene, t, i, j, phrase.normalized), 0.0), 1.0))
        s_dep = depth_view_score(
            scene,
            t,
            i,
            j,
            phrase.family_dist,
            phrase.direction,
            subject_points=sub_pts if perturbation is not None else None,
            object_points=obj_pts if perturbation is not None else None,
        )
        views.append(ViewScore(frame_index=t, s_rgb=s_rgb, s_dep=s_dep, reliability=rho))

    probe = probe_vector(
        subject,
        target,
        config.probe,
        direction=phrase.direction,
        room_scale=scene.room_scale,
        subject_points=sub_pts,
        target_points=obj_pts,
    )
    s_3d = s3d_score(phrase.family_dist, probe)
    s_rgb = pool_rgb(views, config.pool_eps, config.top_m)
    s_dep = depth_score(views, config.pool_eps)
    s_mv = multiview_score(views)

    if scorers.relation_logit is not None:
        s_ij = scorers.relation_logit(scene, i, j, phrase)
        s_ji = scorers.relation_logit(scene, j, i, phrase)
    else:
        s_ij = s_ji = 0.0
    s_role = role_score(s_ij, s_ji, phrase.role_sensitivity)
    s_null = null_score(scorers.null, subject.category, target.category, phrase.cluster_id)

    trace = WitnessTrace()
    if views:
        xs = [v.strength for v in views]
        cutoff = 0.5 * max(xs)
        for v in views:
            if v.strength >= cutoff:
                trace.supporting_frames.append((v.frame_index, float(v.strength)))
                pix_i, _ = _mask_pixels(scene, v.frame_index, i)
                pix_j, _ = _mask_pixels(scene, v.frame_index, j)
                both = np.vstack([p for p in (pix_i, pix_j) if len(p)]) if (len(pix_i) or len(pix_j)) else None
                if both is not None:
                    trace.region_2d[v.frame_index] = (
                        int(both[:, 0].min()),
                        int(both[:, 1].min()),
                        int(both[:, 0].max()),
                        int(both[:, 1].max()),
                    )
    trace.region_3d = _region_3d_for(probe, phrase.family, sub_pts)

    vis_floor = 0.0
    if selected:
        vis_floor = min(
            min(visibility(scene, i, t), visibility(scene, j, t)) for t, _ in selected
        )
    quality = QualitySummary(
        n_views=len(views),
        min_visibility=float(vis_floor),
        mask_point_count=int(min(len(sub_pts), len(obj_pts))),
        render_coverage=(len(qualifying) / len(scene.frames)) if scene.frames else 0.0,
    )
    return WitnessRecord(
        scene_id=scene.scene_id,
        subject_id=i,
        object_id=j,
        phrase=phrase.normalized,
        cluster_id=phrase.cluster_id,
        s_rgb=s_rgb,
        s_dep=s_dep,
        s_3d=float(s_3d),
        s_mv=s_mv,
        s_role=s_role,
        s_null=s_null,
        family_dist=np.asarray(phrase.family_dist, dtype=np.float64),
        trace=trace,
        quality=quality,
        views=views,
        annotated=candidate.annotated,
    )


# --- record serialization ----------------------------------------------------


def record_to_dict(rec: WitnessRecord) -> dict:
    return {
        "scene_id": rec.scene_id,
        "subject_id": rec.subject_id,
        "object_id": rec.object_id,
        "phrase": rec.phrase,
        "cluster_id": rec.cluster_id,
        "s_rgb": rec.s_rgb,
        "s_dep": rec.s_dep,
        "s_3d": rec.s_3d,
        "s_mv": rec.s_mv,
        "s_role": rec.s_role,
        "s_null": rec.s_null,
        "family_dist": [float(x) for x in rec.family_dist],
        "annotated": rec.annotated,
        "views": [
            {"frame_index": v.frame_index, "s_rgb": v.s_rgb, "s_dep": v.s_dep, "rho": v.reliability}
            for v in rec.views
        ],
        "trace": {
            "supporting_frames": [[t, s] for t, s in rec.trace.supporting_frames],
            "region_2d": {str(t): list(box) for t, box in rec.trace.region_2d.items()},
            "region_3d": (
                [list(rec.trace.region_3d[0]), list(rec.trace.region_3d[1])]
                if rec.trace.region_3d
                else None
            ),
        },
        "quality": {
            "n_views": rec.quality.n_views,
            "min_visibility": rec.quality.min_visibility,
            "mask_point_count": rec.quality.mask_point_count,
            "render_coverage": rec.quality.render_coverage,
        },
    }


def record_from_dict(data: dict) -> WitnessRecord:
    trace = WitnessTrace(
        supporting_frames=[(int(t), float(s)) for t, s in data["trace"]["supporting_frames"]],
        region_2d={int(t): tuple(box) for t, box in data["trace"]["region_2d"].items()},
        region_3d=(
            (tuple(data["trace"]["region_3d"][0]), tuple(data["trace"]["region_3d"][1]))
            if data["trace"]["region_3d"]
            else None
        ),
    )
    quality = QualitySummary(**data["quality"])
    views = [
        ViewScore(v["frame_index"], v["s_rgb"], v["s_dep"], v["rho"]) for v in data["views"]
    ]
    return WitnessRecord(
        scene_id=data["scene_id"],
        subject_id=int(data["subject_id"]),
        object_id=int(data["object_id"]),
        phrase=data["phrase"],
        cluster_id=int(data["cluster_id"]),
        s_rgb=float(data["s_rgb"]),
        s_dep=float(data["s_dep"]),
        s_3d=float(data["s_3d"]),
        s_mv=float(data["s_mv"]),
        s_role=float(data["s_role"]),
        s_null=float(data["s_null"]),
        family_dist=np.asarray(data["family_dist"]),
        trace=trace,
        quality=quality,
        views=views,
        annotated=bool(data.get("annotated", False)),
    )
