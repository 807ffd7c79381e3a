"""Geometric measurement kernels and the eight per-family witness probes.

All probes map raw geometry to [0, 1]. Containment uses the container box
inflated open on its access face; the support probe's vertical term uses the
convention dz = -|bottom(subject) - top(target)|, so perfect resting contact
maximizes the score and both floating and inverted placements are penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from relwit.families import FAMILY_ORDER, N_FAMILIES, WitnessFamily
from relwit.scenekit.model import ObjectInstance, OrientedBox

GRID_CELL = 0.02  # gravity-plane rasterization cell (meters)
OPEN_FACE_INFLATION = 0.5  # fraction of the open axis half extent


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True)
class ProbeParams:
    """Probe coefficients; defaults calibrated once on generator scenes, frozen."""

    support: tuple[float, float, float] = (4.0, 8.0, 4.0)  # a1 overlap, a2 dist, a3 dz
    containment: tuple[float, float] = (6.0, 4.0)  # b1 inside-fraction, b2 out-dist
    proximity_tau: float = 0.25  # meters
    proximity_room_normalize: bool = True
    vertical: tuple[float, float] = (0.02, 0.3)  # height margin (m), min footprint overlap
    vertical_gains: tuple[float, float] = (30.0, 25.0)
    attachment: tuple[float, float] = (0.03, 0.1)  # contact band (m), min contact fraction
    attachment_gains: tuple[float, float] = (12.0, 2.0)
    orientation_half_angle: float = math.pi / 6
    interaction_radius: float = 0.05  # meters
    interaction_gains: tuple[float, float] = (20.0, 2.0)

    def validate(self) -> None:
        values = [
            *self.support,
            *self.containment,
            self.proximity_tau,
            *self.vertical,
            *self.vertical_gains,
            *self.attachment,
            *self.attachment_gains,
            self.orientation_half_angle,
            self.interaction_radius,
            *self.interaction_gains,
        ]
        if any(v <= 0 for v in values):
            raise ValueError("all probe parameters must be positive")


@dataclass
class ProbeVector:
    """Per-family probe values plus the raw measurements behind them."""

    q: np.ndarray  # (8,) in family order
    raw: dict = field(default_factory=dict)

    def value(self, family: WitnessFamily) -> float:
        return float(self.q[family.index])


def surface_distance(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Robust surface distance: 5th percentile of nearest-neighbor distances
    from the smaller point set into the larger one."""
    if len(points_a) == 0 or len(points_b) == 0:
        raise ValueError("surface_distance needs nonempty point sets")
    if len(points_a) <= len(points_b):
        src, dst = points_a, points_b
    else:
        src, dst = points_b, points_a
    d, _ = cKDTree(dst).query(src, k=1)
    return float(np.percentile(d, 5.0))


def containment_fraction(
    points: np.ndarray,
    box: OrientedBox,
    open_face: Optional[tuple[int, int]] = None,
    tol: float = -1e-6,
) -> tuple[float, float]:
    """(inside fraction, mean exterior surface distance of the outside points).

    Open containers count their access-face mouth as interior: the box is
    inflated outward on that face by half of its half extent. The default
    tolerance is slightly negative so points merely flush with a face (a
    picture against a wall) do not count as contained.
    """
    if len(points) == 0:
        raise ValueError("containment_fraction needs a nonempty subject mask")
    inflation = 0.0
    if open_face is not None:
        inflation = OPEN_FACE_INFLATION * float(box.half_extents[open_face[0]])
    inside = box.contains(points, tol=tol, open_face=open_face, open_inflation=inflation)
    delta_in = float(inside.mean())
    if inside.all():
        return delta_in, 0.0
    d_out = float(box.surface_distance_outside(points[~inside]).mean())
    return delta_in, d_out


def _footprint_cells(points: np.ndarray) -> set[tuple[int, int]]:
    """Filled 2-cm rasterization of the point set's convex footprint."""
    from relwit.scenekit.oracle import _hull_2d, _inside_hull

    xy = points[:, :2]
    hull = _hull_2d(xy)
    if len(hull) < 3:
        return set(map(tuple, np.floor(xy / GRID_CELL).astype(np.int64)))
    lo = np.floor(xy.min(axis=0) / GRID_CELL).astype(np.int64)
    hi = np.ceil(xy.max(axis=0) / GRID_CELL).astype(np.int64)
    gx, gy = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1))
    centers = (np.stack([gx.ravel(), gy.ravel()], axis=1) + 0.5) * GRID_CELL
    keep = _inside_hull(hull, centers)
    cells = np.stack([gx.ravel()[keep], gy.ravel()[keep]], axis=1)
    return set(map(tuple, cells))


def horizontal_overlap(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Footprint overlap area / subject footprint area, on the 2-cm grid."""
    cells_a = _footprint_cells(points_a)
    if not cells_a:
        return 0.0
    cells_b = _footprint_cells(points_b)
    return len(cells_a & cells_b) / len(cells_a)


def probe_support(omega: float, d_surf: float, dz: float, params: ProbeParams) -> float:
    a1, a2, a3 = params.support
    return _sigmoid(a1 * omega - a2 * d_surf + a3 * dz)


def probe_containment(delta_in: float, d_out: float, params: ProbeParams) -> float:
    b1, b2 = params.containment
    return _sigmoid(b1 * delta_in - b2 * d_out)


def probe_proximity(
    d_surf: float,
    tau_d: float,
    room_scale: Optional[float] = None,
    normalize: bool = True,
) -> float:
    """exp(-d/tau); d is first divided by room_scale/5 when normalization is on."""
    if tau_d <= 0:
        raise ValueError("proximity tau must be positive")
    d = d_surf
    if normalize and room_scale is not None:
        d = d_surf / (room_scale / 5.0)
    return math.exp(-d / tau_d)


def probe_vertical(height_gap: float, overlap: float, params: ProbeParams) -> float:
    """Consistent height ordering gated by horizontal (footprint) compatibility.

    The gap gain is capped so a large height difference cannot outvote a
    missing footprint overlap (laterally disjoint objects are not "above").
    """
    margin, compat = params.vertical
    c1, c2 = params.vertical_gains
    gain = min(height_gap - margin, 0.1)
    return _sigmoid(c1 * gain - c2 * max(0.0, compat - overlap))


def probe_attachment(
    contact_fraction: float,
    normal_mismatch: float,
    params: ProbeParams,
    resting_penalty: float = 0.0,
) -> float:
    """Stable boundary contact on a plausible shared surface.

    ``resting_penalty`` discounts plain top-surface resting configurations,
    which are support, not attachment.
    """
    c3, c4 = params.attachment_gains
    min_fraction = params.attachment[1]
    return _sigmoid(
        c3 * (contact_fraction - min_fraction) - c4 * normal_mismatch - resting_penalty
    )


def probe_orientation(
    facing_angle: float, symmetric_subject: bool, params: ProbeParams
) -> float:
    """Cosine falloff reaching 0 at the max facing half-angle; halved for
    symmetric subjects whose front axis is arbitrary."""
    ratio = min(abs(facing_angle) / params.orientation_half_angle, 1.0)
    q = 0.0 if ratio >= 1.0 else math.cos(ratio * math.pi / 2)
    return 0.5 * q if symmetric_subject else q


def probe_interaction(near_fraction: float, params: ProbeParams) -> float:
    c5, c6 = params.interaction_gains
    return _sigmoid(c5 * near_fraction - c6)


def s3d_score(family_dist: np.ndarray, probe: ProbeVector) -> float:
    """Family-mixture 3D witness score: sum_k pi(k) q(k)."""
    dist = np.asarray(family_dist, dtype=np.float64)
    if dist.shape != (N_FAMILIES,) or dist.min() < -1e-12 or abs(dist.sum() - 1.0) > 1e-9:
        raise ValueError("family_dist must be a valid 8-way distribution")
    return float(dist @ probe.q)


def probe_vector(
    subject: ObjectInstance,
    target: ObjectInstance,
    params: ProbeParams,
    direction: str = "",
    room_scale: Optional[float] = None,
    subject_points: Optional[np.ndarray] = None,
    target_points: Optional[np.ndarray] = None,
) -> ProbeVector:
    """All eight family probes for an ordered object pair.

    ``direction`` is the phrase polarity for vertical-order candidates
    ("up"/"down"); front/behind claims have no static 3D probe and score a
    neutral 0.5 there. The point overrides exist for perturbation-based
    uncertainty estimation (jittered masks are allowed to leave the boxes).
    """
    mi = subject.mask_points if subject_points is None else np.asarray(subject_points)
    mj = target.mask_points if target_points is None else np.asarray(target_points)
    d_surf = surface_distance(mi, mj)
    delta_in, d_out = containment_fraction(mi, target.obb, target.open_face)
    omega = horizontal_overlap(mi, mj)

    bottom_i, top_i = subject.obb.bottom(), subject.obb.top()
    bottom_j, top_j = target.obb.bottom(), target.obb.top()
    vertical_disp = bottom_i - top_j
    dz_support = -abs(vertical_disp)

    center_offset = float(np.linalg.norm(subject.obb.center[:2] - target.obb.center[:2]))
    if direction == "down":
        height_gap = bottom_j - top_i
    else:
        height_gap = vertical_disp

    # Closest mask-point pair: trace anchor and attachment contact direction.
    tree_j = cKDTree(mj)
    dists, idx = tree_j.query(mi, k=1)
    k_min = int(np.argmin(dists))
    closest_pair = (mi[k_min].copy(), mj[int(idx[k_min])].copy())

    band = params.attachment[0]
    to_box = target.obb.surface_distance_outside(mi)
    contact_sel = to_box <= band
    contact_frac = float(contact_sel.mean())
    if contact_frac > 0:
        v = closest_pair[1] - closest_pair[0]
        norm = np.linalg.norm(v)
        if norm < 1e-9:
            normal_mismatch = 0.0
        else:
            v = v / norm
            normal_mismatch = 1.0 - float(np.max(np.abs(v @ target.obb.rotation)))
    else:
        normal_mismatch = 1.0

    near_sel = dists <= params.interaction_radius
    near_frac = float(near_sel.mean())

    to_target = target.obb.center - subject.obb.center
    norm = np.linalg.norm(to_target)
    if norm < 1e-9:
        facing_angle = 0.0
    else:
        cosang = float(subject.front_axis @ (to_target / norm))
        facing_angle = math.acos(max(-1.0, min(1.0, cosang)))

    q = np.zeros(N_FAMILIES)
    q[WitnessFamily.SUPPORT.index] = probe_support(omega, d_surf, dz_support, params)
    q[WitnessFamily.CONTAINMENT.index] = probe_containment(delta_in, d_out, params)
    q[WitnessFamily.PROXIMITY.index] = probe_proximity(
        d_surf, params.proximity_tau, room_scale, params.proximity_room_normalize
    )
    if direction in ("front", "back"):
        q[WitnessFamily.VERTICAL_ORDER.index] = 0.5  # viewpoint-relative; depth view decides
    else:
        vert_overlap = max(omega, horizontal_overlap(mj, mi))
        q[WitnessFamily.VERTICAL_ORDER.index] = probe_vertical(height_gap, vert_overlap, params)
    resting = 8.0 if (abs(vertical_disp) < 0.025 and omega > 0.5) else 0.0
    q[WitnessFamily.ATTACHMENT.index] = probe_attachment(
        contact_frac, normal_mismatch, params, resting_penalty=resting
    )
    q[WitnessFamily.ORIENTATION.index] = probe_orientation(facing_angle, subject.symmetric, params)
    q[WitnessFamily.INTERACTION.index] = probe_interaction(near_frac, params)
    q[WitnessFamily.FUNCTIONAL_UNCERTAIN.index] = 0.0  # no geometric witness exists

    raw = {
        "d_surf": d_surf,
        "delta_z": vertical_disp,
        "omega": omega,
        "delta_in": delta_in,
        "d_out": d_out,
        "facing_angle": facing_angle,
        "contact_fraction": contact_frac,
        "near_fraction": near_frac,
        "center_offset": center_offset,
        "normal_mismatch": normal_mismatch,
        "closest_pair": closest_pair,
        "contact_point_idx": np.nonzero(contact_sel)[0],
        "inside_point_idx": np.nonzero(
            target.obb.contains(
                mi,
                tol=1e-9,
                open_face=target.open_face,
                open_inflation=(
                    OPEN_FACE_INFLATION * float(target.obb.half_extents[target.open_face[0]])
                    if target.open_face is not None
                    else 0.0
                ),
            )
        )[0],
    }
    return ProbeVector(q=q, raw=raw)


def family_order() -> tuple[WitnessFamily, ...]:
    return FAMILY_ORDER
