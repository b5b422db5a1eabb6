"""Numeric loss kernels for the image-translation objective.

Pure numpy evaluation of the adversarial, pairwise-MSE, reconstruction,
and geometry-consistency terms plus their analytic gradients and a
central-difference verification harness. No autograd framework and no
training loop live here: these kernels define the arithmetic that any
training implementation must match.

All losses are means rather than sums so values are comparable across
resolutions. The PMSE term is the variance of the pixelwise difference,
which makes it invariant to global brightness shifts between the rough
render and the generated image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class LossWeights:
    """Objective mixing weights: gan, pmse, reconstruction, geometry."""

    lambda1: float = 2.0
    lambda2: float = 5.0
    lambda3: float = 10.0
    lambda4: float = 3.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3", "lambda4"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v}")


def _as_tensor(x, name):
    a = np.asarray(x, dtype=np.float64)
    if a.size == 0:
        raise ValidationError(f"{name}: empty tensor")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name}: non-finite values")
    return a


def lsgan_losses(real_scores, fake_scores):
    """Least-squares GAN losses: (discriminator, generator).

    d_loss = mean((real - 1)^2) + mean(fake^2); the discriminator pushes
    real score maps to 1 and fakes to 0. g_loss = mean((fake - 1)^2): the
    generator's least-squares target moves fakes to the real label.
    """
    real = _as_tensor(real_scores, "real_scores")
    fake = _as_tensor(fake_scores, "fake_scores")
    d_loss = float(np.mean((real - 1.0) ** 2) + np.mean(fake ** 2))
    g_loss = float(np.mean((fake - 1.0) ** 2))
    return d_loss, g_loss


def lsgan_grads(real_scores, fake_scores):
    """Gradients of (d_loss wrt real, d_loss wrt fake, g_loss wrt fake)."""
    real = _as_tensor(real_scores, "real_scores")
    fake = _as_tensor(fake_scores, "fake_scores")
    return (2.0 * (real - 1.0) / real.size,
            2.0 * fake / fake.size,
            2.0 * (fake - 1.0) / fake.size)


def pmse_loss(rough, generated):
    """Variance of the pixelwise difference between the two images.

    With d = rough - generated and N pixels:
    (1/N) sum(d^2) - (1/N^2) (sum d)^2. Zero iff the images differ by a
    constant, which is exactly the intended tolerance for global tone.
    """
    r = _as_tensor(rough, "rough")
    g = _as_tensor(generated, "generated")
    if r.shape != g.shape:
        raise ValidationError(f"shape mismatch {r.shape} vs {g.shape}")
    d = r - g
    n = d.size
    s1 = float(np.sum(d * d))
    s2 = float(np.sum(d))
    return s1 / n - (s2 * s2) / (n * n)


def pmse_grad(rough, generated):
    """Gradient of pmse_loss with respect to the generated image."""
    r = _as_tensor(rough, "rough")
    g = _as_tensor(generated, "generated")
    if r.shape != g.shape:
        raise ValidationError(f"shape mismatch {r.shape} vs {g.shape}")
    d = r - g
    return -(2.0 / d.size) * (d - d.mean())


def reconstruction_loss(reconstructed, target):
    """Mean absolute difference pooled over a tuple of maps (l1).

    The tuple is the set of reconstructed geometric maps (by default
    segmentation, normal, depth; the rough image may be appended as a
    fourth member). The mean runs over every element of every member.
    """
    rec, tgt = _check_tuples(reconstructed, target)
    total = sum(float(np.sum(np.abs(a - b))) for a, b in zip(rec, tgt))
    n = sum(a.size for a in rec)
    return total / n


def reconstruction_grads(reconstructed, target):
    """Per-member gradients of reconstruction_loss wrt reconstructed."""
    rec, tgt = _check_tuples(reconstructed, target)
    n = sum(a.size for a in rec)
    return [np.sign(a - b) / n for a, b in zip(rec, tgt)]


def geo_guided_loss(predicted, gt):
    """Mean squared difference pooled over the (seg, normal, depth) triple."""
    pred, ref = _check_tuples(predicted, gt)
    total = sum(float(np.sum((a - b) ** 2)) for a, b in zip(pred, ref))
    n = sum(a.size for a in pred)
    return total / n


def geo_guided_grads(predicted, gt):
    """Per-member gradients of geo_guided_loss wrt predicted."""
    pred, ref = _check_tuples(predicted, gt)
    n = sum(a.size for a in pred)
    return [2.0 * (a - b) / n for a, b in zip(pred, ref)]


def _check_tuples(xs, ys):
    xs = [_as_tensor(x, f"member {i}") for i, x in enumerate(xs)]
    ys = [_as_tensor(y, f"member {i}") for i, y in enumerate(ys)]
    if len(xs) != len(ys):
        raise ValidationError(f"tuple arity mismatch {len(xs)} vs {len(ys)}")
    if not xs:
        raise ValidationError("empty tuple")
    for i, (a, b) in enumerate(zip(xs, ys)):
        if a.shape != b.shape:
            raise ValidationError(
                f"member {i}: shape mismatch {a.shape} vs {b.shape}")
    return xs, ys


def total_objective(gan, pmse, rec, geo, weights=None):
    """Weighted sum of the four components."""
    w = weights or LossWeights()
    for name, v in (("gan", gan), ("pmse", pmse), ("rec", rec), ("geo", geo)):
        if not np.isfinite(v):
            raise ValidationError(f"non-finite {name} component: {v}")
    return (w.lambda1 * gan + w.lambda2 * pmse
            + w.lambda3 * rec + w.lambda4 * geo)


def finite_diff_check(loss_fn, grad, x, eps=1e-5):
    """Max scale-normalized error between `grad` and central differences.

    loss_fn maps an array to a scalar; grad is its claimed gradient at x.
    Error is max |grad - numeric| / max(max |numeric|, 1e-12), which stays
    meaningful when individual entries pass through zero.
    """
    if eps <= 0:
        raise ValidationError("eps must be > 0")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != x.shape:
        raise ValidationError(f"gradient shape {g.shape} != input {x.shape}")
    num = np.empty_like(x)
    flat = x.ravel().copy()
    nflat = num.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        hi = loss_fn(flat.reshape(x.shape))
        flat[i] = orig - eps
        lo = loss_fn(flat.reshape(x.shape))
        flat[i] = orig
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValidationError("non-finite loss at perturbed point")
        nflat[i] = (hi - lo) / (2.0 * eps)
    scale = max(float(np.max(np.abs(num))), 1e-12)
    return float(np.max(np.abs(g - num)) / scale)
