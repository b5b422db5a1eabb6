"""Commonsense plausibility scoring of candidate layouts.

Every unordered pair of placed objects contributes three factors:

  K_p  product of the two pose densities,
  K_l  product of the two location densities,
  K_r  co-occurrence term: a Gaussian in (pair distance - suggested
       distance) when the categories' occurrence probability exceeds
       gamma, else exactly 1.

The layout score is the sum of the log factors over all pairs. Zero
factors are clamped at 1e-12 before the log so the sum stays finite; one
clamped factor drags the score far below any sane threshold, which is the
intended rejection behavior. Thresholding operates on the per-pair
normalized score so the cut does not depend on object count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError

FACTOR_CLAMP = 1e-12
LOG_CLAMP = math.log(FACTOR_CLAMP)


@dataclass(frozen=True)
class Placement:
    """One object instance in a layout: what, oriented how, where."""

    object: object          # ObjectModel
    pose: np.ndarray        # unit quaternion (w, x, y, z), world rotation
    location: np.ndarray    # meters, world

    def __post_init__(self):
        q = np.asarray(self.pose, dtype=np.float64)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValidationError(f"pose quaternion norm {np.linalg.norm(q)} != 1")
        if not np.all(np.isfinite(self.location)):
            raise ValidationError("non-finite placement location")

    @property
    def category(self):
        return self.object.category


@dataclass(frozen=True)
class Layout:
    scene: object                      # SceneBackground
    placements: tuple[Placement, ...]

    def __post_init__(self):
        ids = [p.object.id for p in self.placements]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate object id in layout")

    def __len__(self):
        return len(self.placements)


@dataclass(frozen=True)
class PairScore:
    i: int
    j: int
    k_p: float
    k_l: float
    k_r: float


@dataclass(frozen=True)
class LikelihoodReport:
    pairs: tuple[PairScore, ...]
    log_k: float
    accepted: bool | None = None

    def normalized(self):
        return self.log_k / max(1, len(self.pairs))

    def to_dict(self):
        return {
            "pairs": [{"i": p.i, "j": p.j, "k_p": p.k_p, "k_l": p.k_l,
                       "k_r": p.k_r} for p in self.pairs],
            "log_k": self.log_k,
            "normalized_log_k": self.normalized(),
            "accepted": self.accepted,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def pair_pose_likelihood(a, b, kb):
    """K_p: product of the two placements' interpolated pose densities."""
    return (kb.pose_density(a.category, a.pose)
            * kb.pose_density(b.category, b.pose))


def pair_location_likelihood(a, b, kb):
    """K_l: product of the two placements' interpolated location densities."""
    return (kb.location_density(a.category, a.location)
            * kb.location_density(b.category, b.location))


def pair_relation_likelihood(a, b, kb, config=None):
    """K_r: distance-consistency factor, active only for co-occurring pairs.

    occ_prob <= gamma means the pair carries no distance expectation and
    scores exactly 1.
    """
    cfg = config if config is not None else kb.config
    occ, sugg = kb.relation_params(a.category, b.category)
    if occ <= cfg.gamma:
        return 1.0
    d = float(np.linalg.norm(np.asarray(a.location) - np.asarray(b.location)))
    x = d - sugg
    return math.exp(-(x * x) / (2.0 * cfg.sigma * cfg.sigma))


def layout_likelihood(layout, kb, config=None):
    """Score every unordered placement pair and sum the log factors."""
    cfg = config if config is not None else kb.config
    placements = layout.placements
    pairs = []
    log_k = 0.0
    for i in range(len(placements)):
        for j in range(i + 1, len(placements)):
            a, b = placements[i], placements[j]
            k_p = pair_pose_likelihood(a, b, kb)
            k_l = pair_location_likelihood(a, b, kb)
            k_r = pair_relation_likelihood(a, b, kb, cfg)
            pairs.append(PairScore(i, j, k_p, k_l, k_r))
            log_k += (math.log(max(k_p, FACTOR_CLAMP))
                      + math.log(max(k_l, FACTOR_CLAMP))
                      + math.log(max(k_r, FACTOR_CLAMP)))
    return LikelihoodReport(pairs=tuple(pairs), log_k=log_k)


def commonsense_accept(report, threshold):
    """Accept iff the per-pair normalized log score clears the threshold."""
    if not math.isfinite(report.log_k):
        raise ValidationError("non-finite likelihood report")
    return report.normalized() >= threshold


def with_acceptance(report, threshold):
    return replace(report, accepted=commonsense_accept(report, threshold))


def calibrate_threshold(pilot, percentile):
    """Nearest-rank percentile of normalized log scores over a pilot batch.

    rank = max(1, ceil(percentile/100 * N)) on the ascending sort, so
    percentile 0 gives the minimum and 100 the maximum.
    """
    if not pilot:
        raise ValidationError("empty pilot batch")
    if not 0.0 <= percentile <= 100.0:
        raise ValidationError(f"percentile {percentile} outside [0,100]")
    values = sorted(r.normalized() for r in pilot)
    rank = max(1, math.ceil(percentile / 100.0 * len(values)))
    return values[rank - 1]
