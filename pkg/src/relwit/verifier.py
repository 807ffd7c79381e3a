"""Witness verification: calibrated quality, perturbation uncertainty,
three-way triage, momentum teacher and the family-balanced witness memory."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from relwit.families import FAMILY_ORDER, N_FAMILIES, WitnessFamily
from relwit.pairprop import RelationCandidate
from relwit.phrasebank import PhrasePool
from relwit.scenekit.model import Scene
from relwit.viewwit import (
    Perturbation,
    ViewwitConfig,
    WitnessRecord,
    WitnessScorers,
    build_witness_record,
    record_from_dict,
    record_to_dict,
)

# Weight order matches the record's score tuple.
SCORE_KEYS = ("s_rgb", "s_dep", "s_3d", "s_mv", "s_role", "s_null")

# Family rows: (w_rgb, w_dep, w_3d, w_mv, w_role, w_null). The null weight is
# applied with a minus sign. Magnitudes calibrated on generator validation
# scenes; each family leans on the cues that can actually witness it.
DEFAULT_WEIGHT_TABLE: dict[WitnessFamily, tuple[float, ...]] = {
    WitnessFamily.SUPPORT: (1.0, 2.0, 3.0, 1.2, 0.3, 4.0),
    WitnessFamily.CONTAINMENT: (0.8, 1.0, 3.5, 0.8, 0.3, 4.0),
    WitnessFamily.PROXIMITY: (1.5, 0.5, 2.2, 1.5, 0.0, 2.5),
    WitnessFamily.VERTICAL_ORDER: (0.8, 1.2, 3.5, 1.2, 0.3, 4.0),
    WitnessFamily.ATTACHMENT: (1.2, 1.0, 3.0, 1.2, 0.3, 4.0),
    WitnessFamily.ORIENTATION: (2.2, 0.3, 1.2, 1.2, 0.3, 4.0),
    WitnessFamily.INTERACTION: (2.5, 0.4, 0.5, 0.8, 0.1, 3.0),
    WitnessFamily.FUNCTIONAL_UNCERTAIN: (0.3, 0.2, 0.5, 0.3, 0.2, 3.0),
}

DEFAULT_TAU_P = {fam: 0.65 for fam in FAMILY_ORDER}
# Appearance-led families need a stricter quality gate: their probes fire on
# any contact or rough alignment, so the RGB margin carries the decision.
DEFAULT_TAU_P[WitnessFamily.INTERACTION] = 0.86
DEFAULT_TAU_P[WitnessFamily.ORIENTATION] = 0.9
DEFAULT_TAU_3D = {
    WitnessFamily.SUPPORT: 0.5,
    WitnessFamily.CONTAINMENT: 0.5,
    WitnessFamily.PROXIMITY: 0.22,
    WitnessFamily.VERTICAL_ORDER: 0.5,
    WitnessFamily.ATTACHMENT: 0.5,
    WitnessFamily.ORIENTATION: 0.45,
    WitnessFamily.INTERACTION: 0.35,
    WitnessFamily.FUNCTIONAL_UNCERTAIN: 0.99,
}
DEFAULT_TAU_MV = {
    WitnessFamily.SUPPORT: 0.08,
    WitnessFamily.CONTAINMENT: 0.01,
    WitnessFamily.PROXIMITY: 0.08,
    WitnessFamily.VERTICAL_ORDER: 0.06,
    WitnessFamily.ATTACHMENT: 0.05,
    WitnessFamily.ORIENTATION: 0.08,
    WitnessFamily.INTERACTION: 0.05,
    WitnessFamily.FUNCTIONAL_UNCERTAIN: 0.99,
}


class Decision(Enum):
    MISS_POSITIVE = "miss_positive"
    RELIABLE_NEGATIVE = "reliable_negative"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class VerifierConfig:
    weight_table: dict[WitnessFamily, tuple[float, ...]] = field(
        default_factory=lambda: dict(DEFAULT_WEIGHT_TABLE)
    )
    tau_p: dict[WitnessFamily, float] = field(default_factory=lambda: dict(DEFAULT_TAU_P))
    tau_3d: dict[WitnessFamily, float] = field(default_factory=lambda: dict(DEFAULT_TAU_3D))
    tau_mv: dict[WitnessFamily, float] = field(default_factory=lambda: dict(DEFAULT_TAU_MV))
    tau_u: float = 0.05  # global uncertainty ceiling
    tau_n: dict[WitnessFamily, float] = field(
        default_factory=lambda: {fam: 0.2 for fam in FAMILY_ORDER}
    )
    probe_ceiling: float = 0.2  # reliable negatives must also fail the 3D probe
    n_perturbations: int = 4  # M
    momentum: float = 0.996  # teacher EMA coefficient
    bucket_cap: int = 32
    relax_delta: float = 0.05  # stage-3 threshold relaxation on tau_p

    def validate(self) -> None:
        if self.n_perturbations < 2:
            raise ValueError("M must be at least 2")
        if not (0.0 <= self.momentum <= 1.0):
            raise ValueError("momentum must lie in [0, 1]")
        for table in (self.tau_p, self.tau_3d, self.tau_mv, self.tau_n):
            for v in table.values():
                if not (0.0 < v < 1.0):
                    raise ValueError("thresholds must lie in (0, 1)")
        for row in self.weight_table.values():
            if len(row) != 6 or not all(np.isfinite(row)):
                raise ValueError("weight rows must be finite 6-vectors")

    def relaxed(self) -> "VerifierConfig":
        """Stage-3 variant with tau_p lowered by the configured delta."""
        tau_p = {
            fam: max(v - self.relax_delta, 1e-6) for fam, v in self.tau_p.items()
        }
        return replace(self, tau_p=tau_p)


def mixed_weights(family_dist: np.ndarray, config: VerifierConfig) -> np.ndarray:
    """Convex family mixture of the weight table rows: w = sum_k pi(k) row_k."""
    rows = np.stack([np.asarray(config.weight_table[fam]) for fam in FAMILY_ORDER])
    return np.asarray(family_dist) @ rows


def witness_quality(record: WitnessRecord, config: VerifierConfig) -> float:
    """sigma(w . scores) with the null term entering negatively."""
    w = mixed_weights(record.family_dist, config)
    arg = (
        w[0] * record.s_rgb
        + w[1] * record.s_dep
        + w[2] * record.s_3d
        + w[3] * record.s_mv
        + w[4] * record.s_role
        - w[5] * record.s_null
    )
    return float(1.0 / (1.0 + math.exp(-arg)))


@dataclass
class TriageDecision:
    decision: Decision
    quality: float
    uncertainty: float
    rationale: str


def triage(record: WitnessRecord, q: float, u: float, config: VerifierConfig) -> TriageDecision:
    """Conservative three-way assignment for one unannotated candidate.

    Miss-positive requires the full four-condition conjunction at the argmax
    family's thresholds; functional/uncertain candidates can never be
    promoted. Reliable negatives must be confidently rejected, not unknown.
    """
    fam = record.family
    tau_p = config.tau_p[fam]
    tau_3d = config.tau_3d[fam]
    tau_mv = config.tau_mv[fam]
    conditions = {
        f"Q>{tau_p:.2f}": q > tau_p,
        f"U<{config.tau_u:.2f}": u < config.tau_u,
        f"S3d>{tau_3d:.2f}": record.s_3d > tau_3d,
        f"Smv>{tau_mv:.2f}": record.s_mv > tau_mv,
    }
    if fam is not WitnessFamily.FUNCTIONAL_UNCERTAIN and all(conditions.values()):
        return TriageDecision(Decision.MISS_POSITIVE, q, u, "all positive conditions hold")
    if q < config.tau_n[fam] and record.s_3d < config.probe_ceiling and u < config.tau_u:
        return TriageDecision(
            Decision.RELIABLE_NEGATIVE, q, u, "quality and family probe consistently low"
        )
    failed = [name for name, ok in conditions.items() if not ok]
    if fam is WitnessFamily.FUNCTIONAL_UNCERTAIN:
        failed.insert(0, "functional family is never promoted")
    return TriageDecision(Decision.UNCERTAIN, q, u, "failed: " + ", ".join(failed))


def _perturbation_rng(scene_id: str, candidate: RelationCandidate, seed: int, m: int):
    key = f"{scene_id}:{candidate.subject_id}:{candidate.object_id}:{candidate.phrase.normalized}:{seed}:{m}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def estimate_uncertainty(
    scene: Scene,
    candidate: RelationCandidate,
    scorers: WitnessScorers,
    view_config: ViewwitConfig,
    config: VerifierConfig,
    seed: int,
    pool: Optional[PhrasePool] = None,
    base_record: Optional[WitnessRecord] = None,
    jitter_sigma: float = 0.01,
    dropout: float = 0.1,
    view_drop: float = 0.3,
) -> tuple[float, list[float]]:
    """Population variance of witness quality under M stability perturbations:
    view subsets, mask jitter + dropout, and paraphrase resampling."""
    if base_record is None:
        base_record = build_witness_record(scene, candidate, scorers, view_config)
    base_views = [v.frame_index for v in base_record.views]
    subject = scene.object_by_id(candidate.subject_id)
    target = scene.object_by_id(candidate.object_id)
    cluster_members = (
        pool.cluster_members(candidate.phrase.cluster_id) if pool is not None else []
    )
    qs = []
    for m in range(config.n_perturbations):
        rng = _perturbation_rng(scene.scene_id, candidate, seed, m)
        keep = None
        if base_views:
            mask = rng.random(len(base_views)) >= view_drop
            if not mask.any():
                mask[int(rng.integers(0, len(base_views)))] = True
            keep = {t for t, k in zip(base_views, mask) if k}

        def jittered(points):
            kept = rng.random(len(points)) >= dropout
            if not kept.any():
                kept[0] = True
            pts = points[kept]
            return pts + rng.normal(0.0, jitter_sigma, size=pts.shape)

        phrase_override = None
        if cluster_members:
            pick = cluster_members[int(rng.integers(0, len(cluster_members)))]
            if pick.normalized != candidate.phrase.normalized:
                phrase_override = pick
        perturbation = Perturbation(
            keep_views=keep,
            subject_points=jittered(subject.mask_points),
            object_points=jittered(target.mask_points),
            phrase_override=phrase_override,
        )
        rec = build_witness_record(scene, candidate, scorers, view_config, perturbation)
        qs.append(witness_quality(rec, config))
    return float(np.var(qs)), qs


# --- momentum teacher ---------------------------------------------------------


@dataclass
class TeacherState:
    params: np.ndarray
    epoch: int = 0


def update_teacher(teacher: TeacherState, student_params: np.ndarray, alpha: float) -> TeacherState:
    """Exact EMA: theta_bar <- alpha * theta_bar + (1 - alpha) * theta."""
    student = np.asarray(student_params)
    if teacher.params.shape != student.shape:
        raise ValueError("teacher/student parameter shapes differ")
    return TeacherState(
        params=alpha * teacher.params + (1.0 - alpha) * student, epoch=teacher.epoch + 1
    )


# --- witness memory -----------------------------------------------------------


@dataclass
class MemoryEntry:
    record: WitnessRecord
    quality: float
    uncertainty: float
    decision: Decision
    subject_category: str
    object_category: str
    seen_phrase: bool
    order: int = 0  # insertion counter, for FIFO eviction of uncertain entries


def bucket_key(entry: MemoryEntry) -> tuple:
    return (
        entry.record.family.value,
        entry.subject_category,
        entry.object_category,
        entry.seen_phrase,
        entry.record.cluster_id,
    )


class WitnessMemory:
    """Capped, family-balanced store of triaged candidates with full traces."""

    def __init__(self, cap: int):
        if cap < 1:
            raise ValueError("bucket cap must be positive")
        self.cap = cap
        self.buckets: dict[Decision, dict[tuple, list[MemoryEntry]]] = {
            d: {} for d in Decision
        }
        self.inserted = 0

    def insert(self, entry: MemoryEntry) -> None:
        entry.order = self.inserted
        self.inserted += 1
        bucket = self.buckets[entry.decision].setdefault(bucket_key(entry), [])
        bucket.append(entry)
        if len(bucket) > self.cap:
            idx = range(len(bucket))
            if entry.decision is Decision.MISS_POSITIVE:
                evict = min(idx, key=lambda k: (bucket[k].quality, -bucket[k].order))
            elif entry.decision is Decision.RELIABLE_NEGATIVE:
                evict = max(idx, key=lambda k: (bucket[k].quality, bucket[k].order))
            else:
                evict = min(idx, key=lambda k: bucket[k].order)
            del bucket[evict]

    def size(self, decision: Optional[Decision] = None) -> int:
        if decision is None:
            return sum(self.size(d) for d in Decision)
        return sum(len(b) for b in self.buckets[decision].values())

    def clear(self, decision: Optional[Decision] = None) -> None:
        if decision is None:
            for d in Decision:
                self.buckets[d] = {}
        else:
            self.buckets[decision] = {}

    def entries(self, decision: Decision) -> list[MemoryEntry]:
        out = []
        for key in sorted(self.buckets[decision], key=str):
            out.extend(self.buckets[decision][key])
        return out

    def sample(self, batch_spec: dict[Decision, int], seed: int) -> list[MemoryEntry]:
        """Deficit-weighted bucket sampling: P(bucket) ∝ 1 + (cap - size),
        uniform within the bucket. Deterministic per seed."""
        rng = np.random.default_rng(seed)
        out = []
        for decision in sorted(batch_spec, key=lambda d: d.value):
            n = batch_spec[decision]
            keys = sorted(self.buckets[decision], key=str)
            if not keys or n <= 0:
                continue
            weights = np.array(
                [1.0 + (self.cap - len(self.buckets[decision][k])) for k in keys]
            )
            probs = weights / weights.sum()
            for _ in range(n):
                k = keys[int(rng.choice(len(keys), p=probs))]
                bucket = self.buckets[decision][k]
                out.append(bucket[int(rng.integers(0, len(bucket)))])
        return out

    # -- persistence ------------------------------------------------------

    def save(self, path, config_hash: str = "") -> None:
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "kind": "header",
                "schema_version": 1,
                "config_hash": config_hash,
                "cap": self.cap,
            }
            fh.write(json.dumps(header) + "\n")
            for decision in Decision:
                for entry in self.entries(decision):
                    rec = {
                        "kind": "entry",
                        "decision": entry.decision.value,
                        "quality": entry.quality,
                        "uncertainty": entry.uncertainty,
                        "subject_category": entry.subject_category,
                        "object_category": entry.object_category,
                        "seen_phrase": entry.seen_phrase,
                        "order": entry.order,
                        "record": record_to_dict(entry.record),
                    }
                    fh.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path) -> "WitnessMemory":
        memory: Optional[WitnessMemory] = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                if rec["kind"] == "header":
                    memory = cls(cap=int(rec["cap"]))
                elif rec["kind"] == "entry":
                    assert memory is not None, "memory file missing header"
                    entry = MemoryEntry(
                        record=record_from_dict(rec["record"]),
                        quality=float(rec["quality"]),
                        uncertainty=float(rec["uncertainty"]),
                        decision=Decision(rec["decision"]),
                        subject_category=rec["subject_category"],
                        object_category=rec["object_category"],
                        seen_phrase=bool(rec["seen_phrase"]),
                        order=int(rec["order"]),
                    )
                    memory.insert(entry)
        if memory is None:
            raise ValueError("memory file missing header")
        return memory


def seen_clusters(scenes: Sequence[Scene], pool: PhrasePool) -> set[int]:
    """Clusters that appear among annotated positives (the 'seen' vocabulary)."""
    from relwit.scenekit.model import LabelStatus

    seen = set()
    for scene in scenes:
        for lab in scene.labels:
            if lab.status is LabelStatus.ANNOTATED_POSITIVE:
                phrase = pool.get(lab.phrase)
                if phrase is not None:
                    seen.add(phrase.cluster_id)
    return seen
