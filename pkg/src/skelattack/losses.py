"""Loss terms used by the attack optimization, with analytic gradients.

Motion-space losses (gradients with respect to the perturbed coordinates):

* ``bone_loss``      mean over frames of the squared bone-length deviation
* ``dynamics_loss``  derivative matching: weighted per-order mean squared
                     difference of forward-difference tensors
* ``perceptual_loss``  alpha * dynamics + (1 - alpha) * bone

Distribution-space losses (gradients with respect to the perturbed motion's
predictive distribution):

* ``ab_loss``   negated cross entropy against the clean prediction
* ``abn_loss``  negated entropy of the perturbed prediction
* ``sa_loss``   cross entropy against a one-hot target

Per-order/per-frame squared norms are averaged over their own entry counts so
the mixing weights keep their meaning across motion lengths.  Logs are
clamped at ``LOG_CLAMP``; in the clamped region the returned gradients keep a
bounded finite value (clamped denominator) instead of going to zero, so the
attack retains a usable descent direction when a softmax saturates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .motion import Motion, difference_adjoint
from .skeleton import SkeletonTopology, bone_lengths_frames

LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class PerceptualConfig:
    """Weights of the imperceptibility terms.

    ``betas`` maps derivative order -> weight; weights are nonnegative and
    sum to 1.  Orders above ``max_order`` are rejected.
    """

    alpha: float = 0.3
    betas: Mapping[int, float] = field(default_factory=lambda: {0: 0.6, 2: 0.4})
    max_order: int = 4

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        betas = {int(k): float(v) for k, v in dict(self.betas).items()}
        object.__setattr__(self, "betas", betas)
        for order, weight in betas.items():
            if order < 0 or order > self.max_order:
                raise ValidationError(
                    f"derivative order {order} outside [0, {self.max_order}]"
                )
            if weight < 0:
                raise ValidationError(f"beta for order {order} is negative")
        if abs(sum(betas.values()) - 1.0) > 1e-9:
            raise ValidationError("derivative weights must sum to 1")


@dataclass(frozen=True)
class LossWeights:
    """Mixing weight between classification and perceptual loss."""

    w: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValidationError(f"w must be in [0, 1], got {self.w}")


def _check_pair(clean: Motion, adv: Motion):
    if clean.frame_count != adv.frame_count:
        raise ValidationError(
            f"frame counts differ: {clean.frame_count} vs {adv.frame_count}"
        )
    if clean.topology.parents != adv.topology.parents:
        raise ValidationError("motions live on different topologies")


# ---------------------------------------------------------------------------
# motion-space losses


def bone_loss_positions(clean_pos, adv_pos, topo: SkeletonTopology):
    """Array-level :func:`bone_loss`; positions are (M, J, 3)."""
    bones = topo.bones_array
    parents, children = bones[:, 0], bones[:, 1]
    d_adv = adv_pos[:, children] - adv_pos[:, parents]  # (M, B, 3)
    len_adv = np.linalg.norm(d_adv, axis=2)
    len_clean = bone_lengths_frames(clean_pos, topo)
    diff = len_adv - len_clean
    m = clean_pos.shape[0]
    value = float(np.sum(diff * diff)) / m

    # d|b|/db is undefined at zero length; use the zero subgradient there.
    safe = np.where(len_adv > 0.0, len_adv, 1.0)
    coef = np.where(len_adv > 0.0, (2.0 / m) * diff / safe, 0.0)
    contrib = coef[:, :, None] * d_adv  # (M, B, 3)
    grad_joints = np.zeros((adv_pos.shape[1], m, 3))
    moved = contrib.transpose(1, 0, 2)
    np.add.at(grad_joints, children, moved)
    np.add.at(grad_joints, parents, -moved)
    return value, grad_joints.transpose(1, 0, 2)


def bone_loss(clean: Motion, adv: Motion):
    """Mean squared bone-length deviation per frame, plus its gradient.

    Returns ``(value, grad)`` with ``grad`` shaped like ``adv.positions``.
    """
    _check_pair(clean, adv)
    return bone_loss_positions(clean.positions, adv.positions, clean.topology)


def dynamics_loss_positions(clean_pos, adv_pos, cfg: PerceptualConfig):
    """Array-level :func:`dynamics_loss`."""
    m = clean_pos.shape[0]
    value = 0.0
    grad = np.zeros_like(adv_pos)
    for order in sorted(cfg.betas):
        beta = cfg.betas[order]
        if beta == 0.0:
            continue
        if order >= m:
            raise ValidationError(
                f"order-{order} derivative needs more than {order} frames, "
                f"motion has {m}"
            )
        d = np.diff(adv_pos, n=order, axis=0) - np.diff(clean_pos, n=order, axis=0)
        count = d.size
        value += beta * float(np.sum(d * d)) / count
        grad += difference_adjoint((2.0 * beta / count) * d, order)
    return value, grad


def dynamics_loss(clean: Motion, adv: Motion, cfg: PerceptualConfig | None = None):
    """Derivative-matching loss: weighted mean squared difference of the
    order-n forward differences, plus its gradient."""
    _check_pair(clean, adv)
    cfg = cfg or PerceptualConfig()
    return dynamics_loss_positions(clean.positions, adv.positions, cfg)


def perceptual_loss_positions(clean_pos, adv_pos, topo, cfg: PerceptualConfig):
    """Array-level :func:`perceptual_loss`."""
    dyn_v, dyn_g = dynamics_loss_positions(clean_pos, adv_pos, cfg)
    bl_v, bl_g = bone_loss_positions(clean_pos, adv_pos, topo)
    value = cfg.alpha * dyn_v + (1.0 - cfg.alpha) * bl_v
    grad = cfg.alpha * dyn_g + (1.0 - cfg.alpha) * bl_g
    return value, grad


def perceptual_loss(clean: Motion, adv: Motion, cfg: PerceptualConfig | None = None):
    """Imperceptibility loss: alpha-blend of dynamics and bone-length terms."""
    _check_pair(clean, adv)
    cfg = cfg or PerceptualConfig()
    return perceptual_loss_positions(
        clean.positions, adv.positions, clean.topology, cfg
    )


# ---------------------------------------------------------------------------
# distribution-space losses


def _as_distribution(dist, name):
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1:
        raise ValidationError(f"{name} must be a 1-D distribution")
    return dist


def _clamped_log(dist):
    return np.log(np.maximum(dist, LOG_CLAMP))


def ab_loss(clean_dist, adv_dist):
    """Anything-but objective: negated cross entropy between the clean and
    perturbed predictions.  Minimizing it pushes the perturbed prediction away
    from the clean one.  Always <= 0; equal to ``-log K`` when the perturbed
    prediction is uniform."""
    p = _as_distribution(clean_dist, "clean_dist")
    r = _as_distribution(adv_dist, "adv_dist")
    if p.shape != r.shape:
        raise ValidationError(f"distribution sizes differ: {p.shape} vs {r.shape}")
    value = float(p @ _clamped_log(r))
    grad = p / np.maximum(r, LOG_CLAMP)
    return value, grad


def abn_loss(adv_dist):
    """Anything-but-N objective: negated entropy of the perturbed prediction.
    Minimizing it flattens the distribution; the minimum is ``-log K`` at
    uniform."""
    r = _as_distribution(adv_dist, "adv_dist")
    logs = _clamped_log(r)
    value = float(r @ logs)
    grad = logs + r / np.maximum(r, LOG_CLAMP)
    return value, grad


def one_hot(label: int, class_count: int) -> np.ndarray:
    """One-hot distribution for ``label``."""
    if not 0 <= label < class_count:
        raise ValidationError(f"label {label} outside [0, {class_count})")
    out = np.zeros(class_count)
    out[label] = 1.0
    return out


def sa_loss(target_onehot, adv_dist):
    """Specified-attack objective: cross entropy against a one-hot target
    (``-log`` of the probability the classifier assigns to the target)."""
    t = _as_distribution(target_onehot, "target_onehot")
    r = _as_distribution(adv_dist, "adv_dist")
    if t.shape != r.shape:
        raise ValidationError(f"distribution sizes differ: {t.shape} vs {r.shape}")
    ones = t == 1.0
    if not (np.count_nonzero(ones) == 1 and np.all(ones | (t == 0.0))):
        raise ValidationError("specified-attack target must be one-hot")
    value = -float(t @ _clamped_log(r))
    grad = -t / np.maximum(r, LOG_CLAMP)
    return value, grad


# ---------------------------------------------------------------------------
# combination


def total_loss(l_c: float, l_p: float, weights: LossWeights | None = None) -> float:
    """Attack objective ``w * L_c + (1 - w) * L_p``."""
    weights = weights or LossWeights()
    return weights.w * l_c + (1.0 - weights.w) * l_p


def total_gradient(grad_c, grad_p, weights: LossWeights | None = None):
    """The matching convex combination of the two gradients."""
    weights = weights or LossWeights()
    return weights.w * grad_c + (1.0 - weights.w) * grad_p
