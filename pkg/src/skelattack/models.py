"""Desk-scale differentiable action classifiers with analytic input gradients.

Two architectures share a differentiable preprocessing step that linearly
resamples a motion to a fixed number of frames:

* ``linear``: resample, flatten, affine map, softmax.
* ``mlp``: resample, per-frame affine + tanh, temporal mean-pool, affine,
  softmax.

``input_gradient`` back-propagates an upstream gradient **with respect to the
predictive distribution** (post-softmax probabilities) through the whole
pipeline, including the temporal resampling, and returns a gradient with
respect to the raw joint coordinates.  Internally the softmax Jacobian turns
the probability-space upstream into a logit-space gradient; both
architectures use the same convention.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    NumericError,
    ParseError,
    TrainingError,
    ValidationError,
)
from .motion import SCHEMA_VERSION, Motion
from .optim import Adam

ARCHITECTURES = ("linear", "mlp")

#: Type alias: a predictive distribution over class labels, shape (K,),
#: nonnegative, summing to 1.
PredictiveDistribution = np.ndarray


@dataclass(frozen=True)
class ClassifierSpec:
    """Architecture hyperparameters (everything needed to shape parameters)."""

    architecture: str
    class_count: int
    hidden_width: int = 64
    downsample_frames: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(
                f"unknown architecture {self.architecture!r}, "
                f"expected one of {ARCHITECTURES}"
            )
        if self.class_count < 2:
            raise ValidationError("class_count must be >= 2")
        if self.downsample_frames < 2:
            raise ValidationError("downsample_frames must be >= 2")
        if self.hidden_width < 1:
            raise ValidationError("hidden_width must be >= 1")


@dataclass
class ClassifierParams:
    """Trained (or freshly initialized) parameters for one classifier."""

    spec: ClassifierSpec
    values: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = _param_shapes(self.spec)
        if set(self.values) != set(expected):
            raise ValidationError(
                f"parameter keys {sorted(self.values)} do not match "
                f"{sorted(expected)}"
            )
        for key, shape in expected.items():
            arr = np.asarray(self.values[key], dtype=np.float64)
            if arr.shape != shape:
                raise ValidationError(
                    f"parameter {key!r} has shape {arr.shape}, expected {shape}"
                )
            if not np.isfinite(arr).all():
                raise ValidationError(f"parameter {key!r} contains non-finite values")
            self.values[key] = arr

    def flat_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.values[k].ravel() for k in _param_order(self.spec)]
        )

    @property
    def param_count(self) -> int:
        return int(sum(v.size for v in self.values.values()))


@dataclass(frozen=True)
class OptConfig:
    """Adam settings for classifier training (full-batch, deterministic)."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 200

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")


JOINT_FEATURES = 75  # 25 joints x 3 coordinates per frame


def _param_order(spec: ClassifierSpec) -> tuple[str, ...]:
    return ("w", "b") if spec.architecture == "linear" else ("w1", "b1", "w2", "b2")


def _param_shapes(spec: ClassifierSpec) -> dict[str, tuple[int, ...]]:
    k = spec.class_count
    t = spec.downsample_frames
    if spec.architecture == "linear":
        return {"w": (k, t * JOINT_FEATURES), "b": (k,)}
    h = spec.hidden_width
    return {"w1": (h, JOINT_FEATURES), "b1": (h,), "w2": (k, h), "b2": (k,)}


def init_params(spec: ClassifierSpec) -> ClassifierParams:
    """Random initialization, deterministic in ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    values = {}
    for key, shape in _param_shapes(spec).items():
        if key.startswith("b"):
            values[key] = np.zeros(shape)
        else:
            fan_in = shape[-1]
            values[key] = rng.standard_normal(shape) / np.sqrt(fan_in)
    return ClassifierParams(spec=spec, values=values)


def model_id(params: ClassifierParams) -> str:
    """Stable identifier: architecture, class count, seed, parameter digest."""
    digest = hashlib.sha256(params.flat_vector().tobytes()).hexdigest()[:8]
    s = params.spec
    return f"{s.architecture}-k{s.class_count}-seed{s.seed}-{digest}"


# ---------------------------------------------------------------------------
# temporal resampling


def _resample_weights(m: int, t: int):
    """Linear-interpolation gather indices/weights from m source frames to t."""
    s = np.arange(t) * (m - 1) / (t - 1)
    lo = np.minimum(np.floor(s).astype(np.intp), m - 2)
    return lo, lo + 1, s - lo


def resample_positions(positions: np.ndarray, t: int) -> np.ndarray:
    """Linearly resample (M, J, 3) coordinates to exactly ``t`` frames."""
    m = positions.shape[0]
    lo, hi, w = _resample_weights(m, t)
    w = w[:, None, None]
    return positions[lo] * (1.0 - w) + positions[hi] * w


def resample_adjoint(grad: np.ndarray, m: int) -> np.ndarray:
    """Adjoint of :func:`resample_positions`: scatter a (T, J, 3) gradient back."""
    t = grad.shape[0]
    lo, hi, w = _resample_weights(m, t)
    w = w[:, None, None]
    out = np.zeros((m,) + grad.shape[1:])
    np.add.at(out, lo, grad * (1.0 - w))
    np.add.at(out, hi, grad * w)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# forward / input gradient


def _forward_cache(params: ClassifierParams, positions: np.ndarray):
    """Probabilities plus every intermediate needed for the input gradient."""
    spec = params.spec
    v = params.values
    m = positions.shape[0]
    x = resample_positions(positions, spec.downsample_frames)
    flat = x.reshape(spec.downsample_frames, -1)  # (T, 75)
    if flat.shape[1] != JOINT_FEATURES:
        raise ValidationError(
            f"motion provides {flat.shape[1]} features per frame, classifier "
            f"expects {JOINT_FEATURES}"
        )
    cache = {"m": m}
    if spec.architecture == "linear":
        z = v["w"] @ flat.ravel() + v["b"]
    else:
        hidden = np.tanh(flat @ v["w1"].T + v["b1"])  # (T, H)
        pooled = hidden.mean(axis=0)
        z = v["w2"] @ pooled + v["b2"]
        cache["hidden"] = hidden
    if not np.isfinite(z).all():
        raise NumericError("classifier logits are non-finite")
    probs = _softmax(z)
    cache["probs"] = probs
    return probs, cache


def _input_gradient_from_cache(params, cache, upstream: np.ndarray) -> np.ndarray:
    spec = params.spec
    v = params.values
    probs = cache["probs"]
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != probs.shape:
        raise ValidationError(
            f"upstream gradient has shape {upstream.shape}, expected {probs.shape}"
        )
    dz = probs * (upstream - probs @ upstream)  # softmax Jacobian product
    t = spec.downsample_frames
    if spec.architecture == "linear":
        dflat = (v["w"].T @ dz).reshape(t, JOINT_FEATURES)
    else:
        hidden = cache["hidden"]
        dpooled = v["w2"].T @ dz
        dpre = (dpooled / t) * (1.0 - hidden * hidden)  # (T, H)
        dflat = dpre @ v["w1"]
    dx = dflat.reshape(t, -1, 3)
    return resample_adjoint(dx, cache["m"])


def forward(params: ClassifierParams, m: Motion) -> PredictiveDistribution:
    """Predictive distribution over the class labels for one motion."""
    probs, _ = _forward_cache(params, m.positions)
    return probs


def input_gradient(params: ClassifierParams, m: Motion, upstream: np.ndarray) -> np.ndarray:
    """Gradient of ``upstream . forward(m)`` with respect to the coordinates.

    ``upstream`` is the gradient of some scalar loss with respect to the
    predictive distribution.  The result has the motion's (M, J, 3) shape.
    """
    probs, cache = _forward_cache(params, m.positions)
    return _input_gradient_from_cache(params, cache, upstream)


def predicted_label(dist: PredictiveDistribution) -> int:
    """Argmax label; ties resolve to the smallest class index."""
    return int(np.argmax(dist))


def top_n(dist: PredictiveDistribution, n: int) -> list[int]:
    """The ``n`` most probable labels, descending; ties break by class index."""
    dist = np.asarray(dist)
    if not 1 <= n <= dist.shape[0]:
        raise ValidationError(f"n must be in [1, {dist.shape[0]}], got {n}")
    order = np.argsort(-dist, kind="stable")
    return [int(i) for i in order[:n]]


# ---------------------------------------------------------------------------
# training


def _stack_features(spec: ClassifierSpec, motions: Sequence[Motion]) -> np.ndarray:
    t = spec.downsample_frames
    return np.stack(
        [resample_positions(m.positions, t).reshape(t, -1) for m in motions]
    )


def _batch_logits(params: ClassifierParams, x: np.ndarray):
    """Logits for a feature batch (N, T, 75); returns (logits, pooled-or-None, hidden-or-None)."""
    v = params.values
    if params.spec.architecture == "linear":
        flat = x.reshape(x.shape[0], -1)
        return flat @ v["w"].T + v["b"], None, None
    hidden = np.tanh(x @ v["w1"].T + v["b1"])  # (N, T, H)
    pooled = hidden.mean(axis=1)
    return pooled @ v["w2"].T + v["b2"], pooled, hidden


def _batch_loss_and_grads(params, x, labels):
    """Mean cross-entropy over the batch plus parameter gradients."""
    n = x.shape[0]
    z, pooled, hidden = _batch_logits(params, x)
    zs = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(zs).sum(axis=1))
    loss = float(np.mean(lse - zs[np.arange(n), labels]))
    probs = _softmax(z)
    dz = probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    v = params.values
    if params.spec.architecture == "linear":
        flat = x.reshape(n, -1)
        grads = {"w": dz.T @ flat, "b": dz.sum(axis=0)}
    else:
        t = x.shape[1]
        dpooled = dz @ v["w2"]  # (N, H)
        dpre = (dpooled[:, None, :] / t) * (1.0 - hidden * hidden)  # (N, T, H)
        grads = {
            "w1": np.einsum("nth,ntf->hf", dpre, x),
            "b1": dpre.sum(axis=(0, 1)),
            "w2": dz.T @ pooled,
            "b2": dz.sum(axis=0),
        }
    return loss, grads


def _labels_of(motions: Sequence[Motion], k: int, role: str) -> np.ndarray:
    labels = []
    for i, m in enumerate(motions):
        if m.label is None:
            raise ValidationError(f"{role} motion {i} has no label")
        if not 0 <= m.label < k:
            raise ValidationError(
                f"{role} motion {i} has label {m.label}, expected < {k}"
            )
        labels.append(m.label)
    return np.asarray(labels, dtype=np.intp)


def accuracy(params: ClassifierParams, motions: Sequence[Motion]) -> float:
    """Fraction of motions whose argmax prediction matches their label."""
    if not motions:
        raise ValidationError("cannot evaluate accuracy on an empty set")
    labels = _labels_of(motions, params.spec.class_count, "evaluation")
    x = _stack_features(params.spec, motions)
    z, _, _ = _batch_logits(params, x)
    return float(np.mean(np.argmax(z, axis=1) == labels))


def train(
    spec: ClassifierSpec,
    train_set: Sequence[Motion],
    val_set: Sequence[Motion],
    opt: OptConfig | None = None,
) -> ClassifierParams:
    """Fit a classifier by full-batch Adam on mean cross-entropy.

    Deterministic given ``spec.seed``: initialization, batch composition and
    update order never depend on external state.
    """
    opt = opt or OptConfig()
    if not train_set:
        raise ValidationError("training set is empty")
    if not val_set:
        raise ValidationError("validation set is empty")
    k = spec.class_count
    y_train = _labels_of(train_set, k, "train")
    _labels_of(val_set, k, "validation")

    params = init_params(spec)
    x = _stack_features(spec, train_set)
    adam = Adam(opt.learning_rate, opt.beta1, opt.beta2, opt.eps)
    loss = float("nan")
    for epoch in range(opt.epochs):
        loss, grads = _batch_loss_and_grads(params, x, y_train)
        if not np.isfinite(loss):
            raise TrainingError(f"training loss became non-finite at epoch {epoch}")
        adam.step(params.values, grads)
    params.metadata = {
        "epochs": opt.epochs,
        "final_train_loss": loss,
        "train_accuracy": accuracy(params, train_set),
        "val_accuracy": accuracy(params, val_set),
    }
    params.metadata["model_id"] = model_id(params)
    return params


# ---------------------------------------------------------------------------
# checkpoint I/O


def save_params(params: ClassifierParams, path) -> None:
    """Write a checkpoint: spec, flat parameter vector (decimal text), metadata."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "spec": {
            "architecture": params.spec.architecture,
            "class_count": params.spec.class_count,
            "hidden_width": params.spec.hidden_width,
            "downsample_frames": params.spec.downsample_frames,
            "seed": params.spec.seed,
        },
        "params": params.flat_vector().tolist(),
        "metadata": params.metadata,
    }
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def params_from_flat(spec: ClassifierSpec, flat: np.ndarray) -> ClassifierParams:
    """Rebuild structured parameters from a flat vector (checkpoint layout)."""
    flat = np.asarray(flat, dtype=np.float64)
    shapes = _param_shapes(spec)
    expected = sum(int(np.prod(s)) for s in shapes.values())
    if flat.shape != (expected,):
        raise ValidationError(
            f"flat parameter vector has {flat.size} entries, expected {expected}"
        )
    values = {}
    offset = 0
    for key in _param_order(spec):
        shape = shapes[key]
        size = int(np.prod(shape))
        values[key] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    return ClassifierParams(spec=spec, values=values)


def load_params(path) -> ClassifierParams:
    """Read a checkpoint written by :func:`save_params`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed checkpoint {path}: {exc.msg}",
            context=f"line {exc.lineno}, column {exc.colno}",
        ) from exc
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"checkpoint {path} has schema_version {doc.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    try:
        spec = ClassifierSpec(**doc["spec"])
        params = params_from_flat(spec, np.asarray(doc["params"], dtype=np.float64))
    except (KeyError, TypeError, ValidationError) as exc:
        raise ParseError(f"invalid checkpoint {path}: {exc}") from exc
    params.metadata = doc.get("metadata", {})
    return params
