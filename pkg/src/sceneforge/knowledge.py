"""Annotated placement priors and sampling.

Human annotators record, per object category, a handful of plausible
resting poses and surface locations with probabilities, plus pairwise
co-occurrence entries (how likely two categories appear together and at
what suggested distance). This module loads that file, interpolates the
sparse annotations into densities, and samples new poses/locations.

Interpolation is max-of-Gaussian-kernels rather than a kernel sum: the
annotated peaks then keep their exact annotated probability and the density
never exceeds the largest annotated value.

Prior file schema (JSON):

    {
      "categories": {
        "<name>": {
          "keyposes": [{"quat": [w, x, y, z], "prob": 0..1}, ...],
          "anchors":  [{"xyz": [x, y, z], "surface": "<name>", "prob": 0..1}, ...],
          "yaw_free": false
        }, ...
      },
      "pairs": [{"a": "<cat>", "b": "<cat>", "occ_prob": 0..1, "sugg_dist_m": >= 0}, ...],
      "config": {"sigma": 0.1, "gamma": 0.5, "k_threshold": "calibrate", "seed": 0},
      "pose_bandwidth": 0.3,
      "location_bandwidth_m": null
    }

All structures are immutable after load; density queries and sampling with
a caller-owned RNG are safe concurrently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import UnknownCategoryError, ValidationError
from .mathutils import (
    point_in_polygon_2d,
    polygon_frame,
    polygon_to_2d,
    closest_point_in_polygon_2d,
    quat_geodesic_angle,
    quat_geodesic_angle_yaw_free,
    quat_normalize,
    quat_perturb,
    quat_multiply,
    yaw_quat,
)

DEFAULT_POSE_BANDWIDTH = 0.3          # radians
DEFAULT_LOCATION_BW_FACTOR = 0.05     # x scene_scale
DEFAULT_SIGMA = 0.1                   # meters, relation Gaussian
DEFAULT_GAMMA = 0.5                   # co-occurrence threshold
ANCHOR_ON_SURFACE_FACTOR = 1e-3       # x scene_scale
# A settled object's origin can sit above its board (origin at mesh center),
# so surface resolution for density queries is deliberately looser than the
# anchor validation tolerance.
QUERY_SURFACE_FACTOR = 0.1            # x scene_scale


@dataclass(frozen=True)
class Keypose:
    quat: np.ndarray   # unit, (w, x, y, z)
    prob: float


@dataclass(frozen=True)
class Anchor:
    xyz: np.ndarray
    surface: str
    prob: float


@dataclass(frozen=True)
class PosePrior:
    """Per-category keyposes; density is the max of geodesic Gaussian kernels."""

    keyposes: dict[str, tuple[Keypose, ...]]
    bandwidth: float
    yaw_free: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.bandwidth < 0:
            raise ValidationError("pose bandwidth must be >= 0")
        for cat, kps in self.keyposes.items():
            if not kps:
                raise ValidationError(f"category {cat!r}: no keyposes")
            for kp in kps:
                if not 0.0 <= kp.prob <= 1.0:
                    raise ValidationError(
                        f"category {cat!r}: keypose prob {kp.prob} outside [0,1]")


@dataclass(frozen=True)
class LocationPrior:
    """Per-category surface anchors; density restricted to the query's surface."""

    anchors: dict[str, tuple[Anchor, ...]]
    bandwidth: float | None   # meters; None = 0.05 x scene_scale at bind time

    def __post_init__(self):
        if self.bandwidth is not None and self.bandwidth < 0:
            raise ValidationError("location bandwidth must be >= 0")
        for cat, ancs in self.anchors.items():
            for a in ancs:
                if not 0.0 <= a.prob <= 1.0:
                    raise ValidationError(
                        f"category {cat!r}: anchor prob {a.prob} outside [0,1]")


@dataclass(frozen=True)
class RelationshipPrior:
    """Symmetric pairwise co-occurrence probabilities and suggested distances.

    Absent pairs behave as occ_prob = 0 (never passes the threshold test).
    """

    pairs: dict[tuple[str, str], tuple[float, float]]  # (occ_prob, sugg_dist)

    def __post_init__(self):
        for (a, b), (occ, dist) in self.pairs.items():
            if not 0.0 <= occ <= 1.0:
                raise ValidationError(f"pair ({a},{b}): occ_prob {occ} outside [0,1]")
            if dist < 0:
                raise ValidationError(f"pair ({a},{b}): negative distance {dist}")
            if a > b:
                raise ValidationError("pair keys must be sorted tuples")

    def lookup(self, cat_a, cat_b):
        key = (cat_a, cat_b) if cat_a <= cat_b else (cat_b, cat_a)
        return self.pairs.get(key, (0.0, 0.0))


@dataclass(frozen=True)
class ReasoningConfig:
    sigma: float = DEFAULT_SIGMA
    gamma: float = DEFAULT_GAMMA
    k_threshold: float | str = "calibrate"
    seed: int = 0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError("sigma must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValidationError("gamma must be in [0,1]")
        if isinstance(self.k_threshold, str) and self.k_threshold != "calibrate":
            raise ValidationError(
                f"k_threshold must be a number or 'calibrate', "
                f"got {self.k_threshold!r}")


@dataclass(frozen=True)
class KnowledgeBase:
    """The three priors plus reasoning parameters, optionally scene-bound.

    Binding to a scene validates anchors against their named surfaces and
    enables surface resolution for location density queries.
    """

    pose_prior: PosePrior
    location_prior: LocationPrior
    relationship_prior: RelationshipPrior
    config: ReasoningConfig
    scene: object = None
    annotation_counts: dict[str, int] = None
    pair_count: int = 0

    # -- introspection ------------------------------------------------------

    def categories(self):
        return sorted(self.pose_prior.keyposes)

    def _check_category(self, category):
        if category not in self.pose_prior.keyposes:
            raise UnknownCategoryError(f"unknown category {category!r}")

    def location_bandwidth(self):
        bw = self.location_prior.bandwidth
        if bw is not None:
            return bw
        if self.scene is None:
            raise ValidationError(
                "location bandwidth is scene-relative; bind a scene or set "
                "location_bandwidth_m in the prior file")
        return DEFAULT_LOCATION_BW_FACTOR * self.scene.scene_scale

    # -- scene binding ------------------------------------------------------

    def bind_scene(self, scene):
        """Return a copy bound to `scene`, validating anchor placement."""
        names = {s.name for s in scene.support_surfaces}
        tol = ANCHOR_ON_SURFACE_FACTOR * scene.scene_scale
        for cat, ancs in self.location_prior.anchors.items():
            for a in ancs:
                if a.surface not in names:
                    raise ValidationError(
                        f"category {cat!r}: anchor names unknown surface "
                        f"{a.surface!r}")
                surf = scene.surface(a.surface)
                d = abs(float(surf.normal @ a.xyz) - surf.plane_offset())
                if d > tol:
                    raise ValidationError(
                        f"category {cat!r}: anchor off surface "
                        f"{a.surface!r} by {d:.2e} m (tol {tol:.2e})")
        return replace(self, scene=scene)

    # -- densities ----------------------------------------------------------

    def pose_density(self, category, pose):
        """Interpolated pose probability D_p at a unit quaternion."""
        self._check_category(category)
        q = np.asarray(pose, dtype=np.float64)
        bw = self.pose_prior.bandwidth
        yaw_free = category in self.pose_prior.yaw_free
        best = 0.0
        for kp in self.pose_prior.keyposes[category]:
            if yaw_free:
                theta = quat_geodesic_angle_yaw_free(q, kp.quat)
            else:
                theta = quat_geodesic_angle(q, kp.quat)
            if bw <= 0.0:
                val = kp.prob if theta < 1e-12 else 0.0
            else:
                val = kp.prob * math.exp(-(theta * theta) / (2.0 * bw * bw))
            best = max(best, val)
        return best

    def resolve_surface(self, point):
        """Name of the support surface a point rests on, or None.

        The point's projection must fall inside the surface polygon and the
        plane distance must be the smallest among candidates (within
        0.1 x scene_scale, so origins of settled objects still resolve).
        """
        if self.scene is None:
            return None
        p = np.asarray(point, dtype=np.float64)
        tol = QUERY_SURFACE_FACTOR * self.scene.scene_scale
        best_name, best_d = None, tol
        for surf in self.scene.support_surfaces:
            d = abs(float(surf.normal @ p) - surf.plane_offset())
            if d > best_d:
                continue
            frame = polygon_frame(surf.polygon)
            poly2 = polygon_to_2d(surf.polygon, frame)
            origin, u, v, _ = frame
            q = p - origin
            if point_in_polygon_2d(np.array([q @ u, q @ v]), poly2):
                best_name, best_d = surf.name, d
        return best_name

    def location_density(self, category, point, surface=None):
        """Interpolated location probability D_l at a 3D point.

        Only anchors on the point's surface contribute; a point resolving to
        no surface (or to one without anchors for this category) scores 0.
        """
        self._check_category(category)
        if surface is None:
            surface = self.resolve_surface(point)
        if surface is None:
            return 0.0
        p = np.asarray(point, dtype=np.float64)
        bw = self.location_bandwidth()
        best = 0.0
        for a in self.location_prior.anchors.get(category, ()):
            if a.surface != surface:
                continue
            d2 = float(np.sum((p - a.xyz) ** 2))
            if bw <= 0.0:
                val = a.prob if d2 < 1e-24 else 0.0
            else:
                val = a.prob * math.exp(-d2 / (2.0 * bw * bw))
            best = max(best, val)
        return best

    def relation_params(self, cat_a, cat_b):
        """(occ_prob, sugg_dist) for an unordered category pair."""
        self._check_category(cat_a)
        self._check_category(cat_b)
        return self.relationship_prior.lookup(cat_a, cat_b)

    # -- sampling -----------------------------------------------------------

    def sample_pose(self, category, rng):
        """Draw a pose: keypose chosen by annotated weight, then perturbed.

        The perturbation is a tangent-space Gaussian with the prior
        bandwidth; zero bandwidth returns the keypose exactly. Categories
        marked yaw_free additionally get a uniform yaw about +z.
        """
        self._check_category(category)
        kps = self.pose_prior.keyposes[category]
        probs = np.array([kp.prob for kp in kps], dtype=np.float64)
        total = probs.sum()
        if total <= 0:
            idx = int(rng.integers(len(kps)))
        else:
            idx = int(rng.choice(len(kps), p=probs / total))
        q = quat_perturb(kps[idx].quat, self.pose_prior.bandwidth, rng)
        if category in self.pose_prior.yaw_free:
            q = quat_multiply(yaw_quat(rng.uniform(0.0, 2.0 * np.pi)), q)
        return quat_normalize(q)

    def sample_location(self, category, scene, rng):
        """Draw (point, surface name): weighted anchor + in-plane jitter.

        The jitter is an isotropic Gaussian in the surface plane with the
        location bandwidth, clamped back into the surface polygon.
        """
        self._check_category(category)
        ancs = self.location_prior.anchors.get(category, ())
        if not ancs:
            raise ValidationError(f"category {category!r}: no location anchors")
        probs = np.array([a.prob for a in ancs], dtype=np.float64)
        total = probs.sum()
        if total <= 0:
            idx = int(rng.integers(len(ancs)))
        else:
            idx = int(rng.choice(len(ancs), p=probs / total))
        anchor = ancs[idx]
        surf = scene.surface(anchor.surface)
        bw = (self.location_prior.bandwidth
              if self.location_prior.bandwidth is not None
              else DEFAULT_LOCATION_BW_FACTOR * scene.scene_scale)
        frame = polygon_frame(surf.polygon)
        origin, u, v, _ = frame
        poly2 = polygon_to_2d(surf.polygon, frame)
        q = anchor.xyz - origin
        p2 = np.array([q @ u, q @ v])
        if bw > 0.0:
            p2 = p2 + rng.normal(0.0, bw, size=2)
        p2 = closest_point_in_polygon_2d(p2, poly2)
        point = origin + p2[0] * u + p2[1] * v
        # keep the exact annotated height: re-project onto the anchor plane
        point = point + (float(surf.normal @ (anchor.xyz - point))) * surf.normal
        return point, anchor.surface


# --- load / save -------------------------------------------------------------

def load_knowledge(path, scene=None):
    """Load a prior file; optionally bind (and validate against) a scene."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read prior file {path}: {e}") from e
    return knowledge_from_dict(data, scene=scene)


def knowledge_from_dict(data, scene=None):
    if "categories" not in data or not data["categories"]:
        raise ValidationError("prior file has no categories")
    keyposes = {}
    anchors = {}
    yaw_free = set()
    counts = {}
    for cat, entry in data["categories"].items():
        kps = []
        for kp in entry.get("keyposes", []):
            q = np.asarray(kp["quat"], dtype=np.float64)
            if q.shape != (4,) or np.linalg.norm(q) < 1e-9:
                raise ValidationError(f"category {cat!r}: bad quaternion {kp['quat']}")
            kps.append(Keypose(quat=quat_normalize(q), prob=float(kp["prob"])))
        if not kps:
            raise ValidationError(f"category {cat!r}: no keyposes")
        keyposes[cat] = tuple(kps)
        ancs = []
        for a in entry.get("anchors", []):
            xyz = np.asarray(a["xyz"], dtype=np.float64)
            if xyz.shape != (3,) or not np.all(np.isfinite(xyz)):
                raise ValidationError(f"category {cat!r}: bad anchor point {a['xyz']}")
            ancs.append(Anchor(xyz=xyz, surface=str(a["surface"]),
                               prob=float(a["prob"])))
        anchors[cat] = tuple(ancs)
        if entry.get("yaw_free", False):
            yaw_free.add(cat)
        counts[cat] = len(kps) + len(ancs)

    pairs = {}
    for p in data.get("pairs", []):
        a, b = str(p["a"]), str(p["b"])
        for c in (a, b):
            if c not in keyposes:
                raise UnknownCategoryError(f"pair references unknown category {c!r}")
        key = (a, b) if a <= b else (b, a)
        if key in pairs:
            raise ValidationError(f"duplicate pair ({a},{b})")
        pairs[key] = (float(p["occ_prob"]), float(p["sugg_dist_m"]))

    cfg = data.get("config", {})
    k_thr = cfg.get("k_threshold", "calibrate")
    if not isinstance(k_thr, str):
        k_thr = float(k_thr)
    config = ReasoningConfig(
        sigma=float(cfg.get("sigma", DEFAULT_SIGMA)),
        gamma=float(cfg.get("gamma", DEFAULT_GAMMA)),
        k_threshold=k_thr,
        seed=int(cfg.get("seed", 0)),
    )

    loc_bw = data.get("location_bandwidth_m")
    kb = KnowledgeBase(
        pose_prior=PosePrior(
            keyposes=keyposes,
            bandwidth=float(data.get("pose_bandwidth", DEFAULT_POSE_BANDWIDTH)),
            yaw_free=frozenset(yaw_free),
        ),
        location_prior=LocationPrior(
            anchors=anchors,
            bandwidth=None if loc_bw is None else float(loc_bw),
        ),
        relationship_prior=RelationshipPrior(pairs=pairs),
        config=config,
        annotation_counts=counts,
        pair_count=len(pairs),
    )
    if scene is not None:
        kb = kb.bind_scene(scene)
    return kb


def knowledge_to_dict(kb):
    cats = {}
    for cat in kb.pose_prior.keyposes:
        entry = {
            "keyposes": [{"quat": kp.quat.tolist(), "prob": kp.prob}
                         for kp in kb.pose_prior.keyposes[cat]],
            "anchors": [{"xyz": a.xyz.tolist(), "surface": a.surface,
                         "prob": a.prob}
                        for a in kb.location_prior.anchors.get(cat, ())],
        }
        if cat in kb.pose_prior.yaw_free:
            entry["yaw_free"] = True
        cats[cat] = entry
    return {
        "categories": cats,
        "pairs": [{"a": a, "b": b, "occ_prob": occ, "sugg_dist_m": dist}
                  for (a, b), (occ, dist) in sorted(kb.relationship_prior.pairs.items())],
        "config": {
            "sigma": kb.config.sigma,
            "gamma": kb.config.gamma,
            "k_threshold": kb.config.k_threshold,
            "seed": kb.config.seed,
        },
        "pose_bandwidth": kb.pose_prior.bandwidth,
        "location_bandwidth_m": kb.location_prior.bandwidth,
    }


def save_knowledge(path, kb):
    Path(path).write_text(json.dumps(knowledge_to_dict(kb), indent=2) + "\n")
