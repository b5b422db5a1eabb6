"""Layout generation loop, annotation cost model, and sensitivity harness.

The loop draws candidate layouts from the annotated priors, gates them
with physics first (cheap rejection of the impossible), scores the
survivors with the commonsense likelihood, and streams the accepted
triples (settled layout, likelihood report, contact report).

Candidate i derives its RNG from SeedSequence((seed, tag, i)), so the
stream is byte-reproducible and candidates are independent: acceptance
history never shifts later draws, which also keeps the door open for
parallel candidate evaluation without changing output.

The sensitivity harness perturbs the annotated probabilities the way a
panel of annotators disagrees (multiplicative noise on magnitudes,
agreement on what is possible at all), regenerates layout batches per
perturbed knowledge base, and compares batch feature distributions by
Jensen-Shannon divergence against a same-base different-seed noise floor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BudgetExhaustedError, UnknownCategoryError, ValidationError
from .knowledge import Anchor, Keypose, LocationPrior, PosePrior, RelationshipPrior
from .mathutils import quat_geodesic_angle, quat_geodesic_angle_yaw_free, quat_rotate
from .physics import PhysicsConfig, physics_accept
from .reasoning import (
    Layout,
    Placement,
    calibrate_threshold,
    commonsense_accept,
    layout_likelihood,
    with_acceptance,
)

# SeedSequence stream tags; part of the determinism contract
CANDIDATE_TAG = 0
CALIBRATION_TAG = 1
CAMERA_TAG = 2
FLOOR_TAG = 3
ANNOTATOR_TAG = 4

COST_PER_MODEL_S = 10.0
COST_PER_PAIR_S = 10.0
DISTANCE_BINS = 12


@dataclass(frozen=True)
class GenConfig:
    """Knobs of one generation run."""

    categories: tuple[str, ...]
    count_range: tuple[int, int] = (3, 7)
    budget: int = 10000
    seed: int = 0
    calibration_percentile: float = 20.0
    calibration_size: int = 200
    lift_eps: float = 1e-3
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)

    def __post_init__(self):
        lo, hi = self.count_range
        if lo < 1 or hi < lo:
            raise ValidationError(f"bad object count range {self.count_range}")
        if self.budget < 1:
            raise ValidationError("attempt budget must be >= 1")
        if not self.categories:
            raise ValidationError("no categories configured")
        if not 0.0 <= self.calibration_percentile <= 100.0:
            raise ValidationError("calibration percentile outside [0,100]")


@dataclass
class GenStats:
    """Bookkeeping; tried == physics_rejected + commonsense_rejected + accepted."""

    tried: int = 0
    physics_rejected: int = 0
    commonsense_rejected: int = 0
    accepted: int = 0
    annotation_cost_s: float = 0.0
    threshold: float | None = None

    def to_dict(self):
        return {
            "tried": self.tried,
            "physics_rejected": self.physics_rejected,
            "commonsense_rejected": self.commonsense_rejected,
            "accepted": self.accepted,
            "annotation_cost_s": self.annotation_cost_s,
            "threshold": self.threshold,
        }


def candidate_rng(seed, index, tag=CANDIDATE_TAG):
    return np.random.default_rng(np.random.SeedSequence((seed, tag, index)))


def sample_candidate(kb, scene, config, rng, library):
    """Draw one candidate layout (objects floating just above surfaces).

    Object count is uniform over the configured range; categories are drawn
    uniformly with replacement; the concrete model within a category is
    uniform. Each object gets a prior-sampled pose and surface location and
    is lifted so its hull bottom clears the surface plane by lift_eps,
    leaving first contact to the settling step.
    """
    for cat in config.categories:
        if cat not in library.by_category:
            raise UnknownCategoryError(f"no models for category {cat!r}")
    lo, hi = config.count_range
    count = int(rng.integers(lo, hi + 1))
    placements = []
    for n in range(count):
        cat = config.categories[int(rng.integers(len(config.categories)))]
        models = library.by_category[cat]
        model = models[int(rng.integers(len(models)))]
        pose = kb.sample_pose(cat, rng)
        point, surface_name = kb.sample_location(cat, scene, rng)
        surf = scene.surface(surface_name)
        rotated = quat_rotate(pose, model.convex_hull)
        # lift along +z until the hull bottom clears the surface plane
        clearance = float(np.min(rotated @ surf.normal)) \
            + float(surf.normal @ point) - surf.plane_offset()
        t = (config.lift_eps - clearance) / surf.normal[2]
        location = point + np.array([0.0, 0.0, max(t, 0.0)])
        instance = replace(model, id=f"{model.id}#{n}")
        placements.append(Placement(object=instance, pose=pose,
                                    location=location))
    return Layout(scene=scene, placements=tuple(placements))


def _resolve_threshold(kb, scene, config, library, stats):
    k_thr = kb.config.k_threshold
    if not isinstance(k_thr, str):
        stats.threshold = float(k_thr)
        return float(k_thr)
    pilot = []
    index = 0
    attempts = 0
    limit = config.budget * 10
    while len(pilot) < config.calibration_size and attempts < limit:
        rng = candidate_rng(config.seed, index, CALIBRATION_TAG)
        index += 1
        attempts += 1
        candidate = sample_candidate(kb, scene, config, rng, library)
        ok, settled, _ = physics_accept(candidate, config.physics)
        if not ok:
            continue
        pilot.append(layout_likelihood(settled, kb))
    if not pilot:
        raise ValidationError(
            "calibration produced no physics-accepted layouts; "
            "check priors and surfaces")
    thr = calibrate_threshold(pilot, config.calibration_percentile)
    stats.threshold = thr
    return thr


def generate(kb, scene, config, library, count, stats=None):
    """Yield up to `count` accepted (layout, likelihood, contact) triples.

    The caller may pass a GenStats to observe progress; it is updated in
    place. Exhausting the attempt budget raises BudgetExhaustedError after
    the partial stream (stats attached to the error).
    """
    missing = [c for c in config.categories if c not in kb.pose_prior.keyposes]
    if missing:
        raise UnknownCategoryError(f"kb lacks categories {missing}")
    if stats is None:
        stats = GenStats()
    stats.annotation_cost_s = annotation_cost(kb, n_models=len(library))
    threshold = _resolve_threshold(kb, scene, config, library, stats)
    emitted = 0
    for index in range(config.budget):
        if emitted >= count:
            return
        rng = candidate_rng(config.seed, index, CANDIDATE_TAG)
        candidate = sample_candidate(kb, scene, config, rng, library)
        stats.tried += 1
        ok, settled, contact = physics_accept(candidate, config.physics)
        if not ok:
            stats.physics_rejected += 1
            continue
        report = layout_likelihood(settled, kb)
        if not commonsense_accept(report, threshold):
            stats.commonsense_rejected += 1
            continue
        stats.accepted += 1
        emitted += 1
        yield settled, with_acceptance(report, threshold), contact
    if emitted < count:
        raise BudgetExhaustedError(
            f"budget {config.budget} exhausted with {emitted}/{count} layouts",
            stats=stats)


def annotation_cost(kb, n_models=None):
    """Modeled labeling seconds: 10 s per object model + 10 s per pair.

    The knowledge base records categories, not model files, so the model
    count defaults to the category count; pass the real library size when
    it differs.
    """
    if n_models is None:
        n_models = len(kb.pose_prior.keyposes)
    return COST_PER_MODEL_S * n_models + COST_PER_PAIR_S * kb.pair_count


def simulate_annotators(kb, n, noise, rng):
    """n perturbed knowledge bases imitating annotator disagreement.

    Every annotated probability and suggested distance is multiplied by an
    independent uniform factor from [1-noise, 1+noise]; probabilities are
    clamped back into [0,1]. Support is preserved exactly: nothing becomes
    possible or impossible, only magnitudes move.
    """
    if n < 1:
        raise ValidationError("need n >= 1 annotators")
    if not 0.0 <= noise < 1.0:
        raise ValidationError("noise must be in [0, 1)")
    out = []
    for _ in range(n):
        def jiggle(value, clamp=True):
            v = value * rng.uniform(1.0 - noise, 1.0 + noise)
            return float(min(max(v, 0.0), 1.0)) if clamp else float(max(v, 0.0))

        keyposes = {
            cat: tuple(Keypose(quat=kp.quat, prob=jiggle(kp.prob))
                       for kp in kps)
            for cat, kps in sorted(kb.pose_prior.keyposes.items())
        }
        anchors = {
            cat: tuple(Anchor(xyz=a.xyz, surface=a.surface, prob=jiggle(a.prob))
                       for a in ancs)
            for cat, ancs in sorted(kb.location_prior.anchors.items())
        }
        pairs = {
            key: (jiggle(occ), jiggle(dist, clamp=False))
            for key, (occ, dist) in sorted(kb.relationship_prior.pairs.items())
        }
        out.append(replace(
            kb,
            pose_prior=replace(kb.pose_prior, keyposes=keyposes),
            location_prior=LocationPrior(anchors=anchors,
                                         bandwidth=kb.location_prior.bandwidth),
            relationship_prior=RelationshipPrior(pairs=pairs),
        ))
    return out


# --- layout batch features and divergence -----------------------------------

def batch_features(layouts, kb, scene):
    """Three normalized feature histograms of a layout batch.

    Blocks: unordered category co-occurrence counts, per-category nearest
    keypose selection counts, and a pairwise-distance histogram with fixed
    bins over [0, scene_scale]. Each block normalizes to a distribution.
    """
    cats = sorted(kb.pose_prior.keyposes)
    cat_index = {c: i for i, c in enumerate(cats)}
    n = len(cats)
    cooc = np.zeros(n * (n + 1) // 2)
    kp_counts = {c: np.zeros(len(kb.pose_prior.keyposes[c])) for c in cats}
    dist_hist = np.zeros(DISTANCE_BINS)
    edges = np.linspace(0.0, scene.scene_scale, DISTANCE_BINS + 1)

    def pair_slot(i, j):
        if i > j:
            i, j = j, i
        return i * n - i * (i - 1) // 2 + (j - i)

    for layout in layouts:
        ps = layout.placements
        for p in ps:
            kp_counts[p.category][_nearest_keypose(kb, p.category, p.pose)] += 1
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                a, b = ps[i], ps[j]
                cooc[pair_slot(cat_index[a.category], cat_index[b.category])] += 1
                d = float(np.linalg.norm(
                    np.asarray(a.location) - np.asarray(b.location)))
                k = min(int(np.searchsorted(edges, d, side="right")) - 1,
                        DISTANCE_BINS - 1)
                dist_hist[max(k, 0)] += 1

    kp_vec = np.concatenate([kp_counts[c] for c in cats]) \
        if cats else np.zeros(1)
    return {
        "cooccurrence": _normalize(cooc),
        "keypose": _normalize(kp_vec),
        "distance": _normalize(dist_hist),
    }


def _nearest_keypose(kb, category, pose):
    kps = kb.pose_prior.keyposes[category]
    yaw_free = category in kb.pose_prior.yaw_free
    best, best_theta = 0, np.inf
    for k, kp in enumerate(kps):
        theta = (quat_geodesic_angle_yaw_free(pose, kp.quat) if yaw_free
                 else quat_geodesic_angle(pose, kp.quat))
        if theta < best_theta:
            best, best_theta = k, theta
    return best


def _normalize(v):
    s = v.sum()
    return v / s if s > 0 else np.full_like(v, 1.0 / max(len(v), 1))


def jensen_shannon(p, q):
    """JSD in bits between two distributions of equal length (0 log 0 = 0)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValidationError("distribution length mismatch")
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def batch_divergence(f1, f2):
    """Mean JSD over the three feature blocks."""
    keys = ("cooccurrence", "keypose", "distance")
    return sum(jensen_shannon(f1[k], f2[k]) for k in keys) / len(keys)


@dataclass(frozen=True)
class SensitivityReport:
    matrix: np.ndarray          # (n, n) pairwise divergences, zero diagonal
    median_divergence: float    # median of off-diagonal entries
    noise_floor: float          # same-base different-seed divergence level
    layouts_per_base: int

    def to_dict(self):
        return {
            "matrix": np.asarray(self.matrix).tolist(),
            "median_divergence": self.median_divergence,
            "noise_floor": self.noise_floor,
            "layouts_per_base": self.layouts_per_base,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _collect_batch(kb, scene, config, library, count):
    layouts = []
    for layout, _, _ in generate(kb, scene, config, library, count):
        layouts.append(layout)
    return layouts


def divergence_floor(kb, scene, config, library, layouts_per_batch,
                     n_batches=4, percentile=95.0):
    """Sampling-noise divergence: same base, different seeds.

    Returns the given percentile of pairwise divergences between batches
    generated from identical knowledge with distinct seeds.
    """
    if n_batches < 2:
        raise ValidationError("need >= 2 floor batches")
    feats = []
    for b in range(n_batches):
        floor_seed = int(np.random.SeedSequence(
            (config.seed, FLOOR_TAG, b)).generate_state(1)[0])
        cfg = replace(config, seed=floor_seed)
        feats.append(batch_features(
            _collect_batch(kb, scene, cfg, library, layouts_per_batch),
            kb, scene))
    divs = [batch_divergence(feats[i], feats[j])
            for i in range(len(feats)) for j in range(i + 1, len(feats))]
    return float(np.percentile(divs, percentile))


def sensitivity_report(bases, scene, config, library, layouts_per_base,
                       floor_batches=4):
    """Pairwise layout-distribution divergence across knowledge bases.

    Every base generates an equal-size batch from the same seed, so two
    identical bases produce identical batches and divergence exactly 0;
    differences in the matrix are attributable to the priors alone. The
    noise floor is measured on the first base by varying the seed instead.
    """
    if len(bases) < 2:
        raise ValidationError("need >= 2 knowledge bases")
    feats = []
    for kb in bases:
        feats.append(batch_features(
            _collect_batch(kb, scene, config, library, layouts_per_base),
            kb, scene))
    n = len(bases)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = batch_divergence(feats[i], feats[j])
            matrix[i, j] = matrix[j, i] = d
    off = matrix[np.triu_indices(n, k=1)]
    floor = divergence_floor(bases[0], scene, config, library,
                             layouts_per_base, n_batches=floor_batches)
    return SensitivityReport(
        matrix=matrix,
        median_divergence=float(np.median(off)),
        noise_floor=floor,
        layouts_per_base=layouts_per_base,
    )


# --- serialization -----------------------------------------------------------

def layout_to_dict(layout):
    return {
        "placements": [
            {
                "object": p.object.id,
                "category": p.object.category,
                "pose": np.asarray(p.pose).tolist(),
                "location": np.asarray(p.location).tolist(),
            }
            for p in layout.placements
        ]
    }


def layout_from_dict(data, scene, library):
    placements = []
    for entry in data["placements"]:
        base_id = entry["object"].rsplit("#", 1)[0]
        model = library.get(base_id)
        model = replace(model, id=entry["object"])
        placements.append(Placement(
            object=model,
            pose=np.asarray(entry["pose"], dtype=np.float64),
            location=np.asarray(entry["location"], dtype=np.float64),
        ))
    return Layout(scene=scene, placements=tuple(placements))
