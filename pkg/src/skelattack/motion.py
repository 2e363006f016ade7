"""Motion container, temporal derivatives, and motion file I/O.

A motion is a time sequence of skeleton frames.  Temporal derivatives are
plain forward differences (no padding, no division by the frame time), so an
order-``n`` derivative of an ``M``-frame motion has ``M - n`` time steps.

Motion files are single JSON documents::

    {"schema_version": 1, "frame_rate": 30.0, "label": 3,
     "parents": [-1, 0, ...], "frames": [[[x, y, z], ...], ...]}

Coordinates are serialized as decimal text (shortest representation that
round-trips the IEEE-754 double exactly), never as binary floats, so
save/load round-trips are bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .skeleton import DEFAULT_TOPOLOGY, ROOT_PARENT, SkeletonTopology

SCHEMA_VERSION = 1


@dataclass
class Motion:
    """A sequence of skeleton frames with shared topology.

    positions   (M, J, 3) float64 joint coordinates, M >= 2, all finite
    frame_rate  capture rate in Hz (metadata only)
    label       optional class index
    topology    the kinematic tree the frames live on
    """

    positions: np.ndarray
    frame_rate: float = 30.0
    label: int | None = None
    topology: SkeletonTopology = field(default_factory=lambda: DEFAULT_TOPOLOGY)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        j = self.topology.joint_count
        if self.positions.ndim != 3 or self.positions.shape[1:] != (j, 3):
            raise ValidationError(
                f"positions have shape {self.positions.shape}, expected (M, {j}, 3)"
            )
        if self.positions.shape[0] < 2:
            raise ValidationError("a motion needs at least 2 frames")
        if not np.isfinite(self.positions).all():
            raise ValidationError("positions contain non-finite values")
        if self.frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def joint_count(self) -> int:
        return self.positions.shape[1]

    def with_positions(self, positions: np.ndarray) -> "Motion":
        """Copy of this motion with replaced coordinates (same metadata)."""
        return replace(self, positions=positions)


def derivative(m: Motion, n: int) -> np.ndarray:
    """Order-``n`` forward difference of the joint coordinates.

    Order 0 returns the coordinates verbatim; each higher order differences
    the previous one, shrinking the time axis by one step.  Result shape is
    (M - n, J, 3).
    """
    if n < 0:
        raise ValidationError(f"derivative order must be >= 0, got {n}")
    if n >= m.frame_count:
        raise ValidationError(
            f"order-{n} derivative needs more than {n} frames, motion has "
            f"{m.frame_count}"
        )
    return np.diff(m.positions, n=n, axis=0)


def difference_adjoint(grad: np.ndarray, steps: int = 1) -> np.ndarray:
    """Adjoint (transpose) of ``steps`` applications of forward differencing.

    Maps a gradient with respect to an order-``n`` difference tensor back to a
    gradient with respect to the undifferenced tensor, growing the time axis
    by one per step.
    """
    out = np.asarray(grad, dtype=np.float64)
    for _ in range(steps):
        up = np.zeros((out.shape[0] + 1,) + out.shape[1:])
        up[1:] += out
        up[:-1] -= out
        out = up
    return out


def root_centered(m: Motion) -> Motion:
    """Optional preprocessing: subtract the root joint from every frame."""
    root = m.topology.root_index
    return m.with_positions(m.positions - m.positions[:, root : root + 1, :])


def save_motion(m: Motion, path) -> None:
    """Write a motion as a self-describing JSON document (one frame per line)."""
    path = Path(path)
    lines = [
        "{",
        f'"schema_version": {SCHEMA_VERSION},',
        f'"frame_rate": {json.dumps(m.frame_rate)},',
        f'"label": {json.dumps(m.label)},',
        f'"parents": {json.dumps(list(m.topology.parents))},',
        '"frames": [',
    ]
    frames = m.positions.tolist()
    for i, frame in enumerate(frames):
        comma = "," if i < len(frames) - 1 else ""
        lines.append(json.dumps(frame) + comma)
    lines += ["]", "}", ""]
    path.write_text("\n".join(lines), encoding="utf-8")


def _topology_from_parents(parents, path) -> SkeletonTopology:
    if tuple(parents) == DEFAULT_TOPOLOGY.parents:
        return DEFAULT_TOPOLOGY
    names = tuple(
        "root" if p == ROOT_PARENT else f"joint_{j}" for j, p in enumerate(parents)
    )
    try:
        return SkeletonTopology(parents=tuple(int(p) for p in parents), joint_names=names)
    except ValidationError as exc:
        raise ParseError(f"invalid parent table in {path}: {exc}") from exc


def load_motion(path) -> Motion:
    """Read a motion JSON document, validating schema and contents."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed motion file {path}: {exc.msg}",
            context=f"line {exc.lineno}, column {exc.colno}",
        ) from exc
    if not isinstance(doc, dict):
        raise ParseError(f"motion file {path} is not a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(
            f"motion file {path} has schema_version {version!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    for key in ("frame_rate", "parents", "frames"):
        if key not in doc:
            raise ParseError(f"motion file {path} is missing field {key!r}")
    topo = _topology_from_parents(doc["parents"], path)
    frames = doc["frames"]
    if not isinstance(frames, list) or len(frames) < 2:
        raise ParseError(
            f"motion file {path} must contain at least 2 frames, "
            f"found {len(frames) if isinstance(frames, list) else 'none'}"
        )
    j = topo.joint_count
    for t, frame in enumerate(frames):
        if not isinstance(frame, list) or len(frame) != j:
            raise ParseError(
                f"motion file {path}: expected {j} joints",
                context=f"frame {t} has {len(frame) if isinstance(frame, list) else 'no'} joints",
            )
    try:
        positions = np.asarray(frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"motion file {path}: non-numeric coordinate: {exc}") from exc
    if positions.shape != (len(frames), j, 3):
        raise ParseError(
            f"motion file {path}: frames are not {j}x3 coordinate lists "
            f"(parsed shape {positions.shape})"
        )
    if not np.isfinite(positions).all():
        t, joint = np.argwhere(~np.isfinite(positions).all(axis=2))[0]
        raise ParseError(
            f"motion file {path}: non-finite coordinate",
            context=f"frame {t}, joint {joint}",
        )
    label = doc.get("label")
    if label is not None and not isinstance(label, int):
        raise ParseError(f"motion file {path}: label must be an integer or null")
    frame_rate = doc["frame_rate"]
    if not isinstance(frame_rate, (int, float)) or frame_rate <= 0:
        raise ParseError(f"motion file {path}: frame_rate must be a positive number")
    return Motion(
        positions=positions,
        frame_rate=float(frame_rate),
        label=label,
        topology=topo,
    )
