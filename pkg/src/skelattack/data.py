"""Synthetic labeled motion datasets and stratified splits.

Each class is a parametric action: a class-specific set of per-joint
sinusoidal angle tracks (base posture, amplitude, frequency, phase drawn once
per class) plus a root-translation drift, pushed through forward kinematics.
Samples of a class differ by a random global phase offset and a constant
per-sample Gaussian offset on the joint angles (``noise_std`` radians), so
bone lengths are exact by construction and the dynamics stay smooth.

All randomness flows from the dataset seed through per-class / per-sample
``default_rng`` streams, so generation is bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, StratificationError, ValidationError
from .motion import SCHEMA_VERSION, Motion, load_motion, save_motion
from .skeleton import (
    DEFAULT_BONE_LENGTHS,
    DEFAULT_TOPOLOGY,
    JointAngleTrack,
    forward_kinematics,
)

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_FRACTIONS = (0.5, 0.25, 0.25)
UNSPLIT = "unsplit"


@dataclass(frozen=True)
class DatasetSpec:
    """Shape and randomness of a generated dataset."""

    class_count: int = 8
    samples_per_class: int = 50
    frames: int = 64
    frame_rate: float = 30.0
    noise_std: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.class_count < 2:
            raise ValidationError("class_count must be >= 2")
        if self.samples_per_class < 1:
            raise ValidationError("samples_per_class must be >= 1")
        if self.frames < 8:
            raise ValidationError("frames must be >= 8")
        if self.frame_rate <= 0:
            raise ValidationError("frame_rate must be positive")
        if self.noise_std < 0:
            raise ValidationError("noise_std must be >= 0")


@dataclass
class Dataset:
    """Labeled motions plus (optional) split tags, aligned by index."""

    motions: list[Motion]
    splits: list[str]
    spec: DatasetSpec

    def __post_init__(self):
        if len(self.motions) != len(self.splits):
            raise ValidationError("motions and split tags differ in length")

    def subset(self, split: str) -> list[Motion]:
        return [m for m, s in zip(self.motions, self.splits) if s == split]

    @property
    def labels(self) -> list[int]:
        return [m.label for m in self.motions]


@dataclass(frozen=True)
class _ActionParams:
    base: np.ndarray  # (J, 3) posture offset [rad]
    amplitude: np.ndarray  # (J, 3) sinusoid amplitude [rad]
    cycles: np.ndarray  # (J, 3) oscillation count over the clip
    phase: np.ndarray  # (J, 3) phase [rad]
    root_velocity: np.ndarray  # (3,) drift [m/s]
    root_bob: float  # vertical bob amplitude [m]
    root_bob_cycles: float


def _class_params(spec: DatasetSpec, label: int) -> _ActionParams:
    # All classes share one motion template; a class is a moderate deviation
    # from it.  That keeps decision boundaries near the data (classifiers stay
    # accurate but not saturated), which is the regime the attack studies.
    shared = np.random.default_rng([spec.seed, 0])
    j = DEFAULT_TOPOLOGY.joint_count
    base = shared.uniform(-0.2, 0.2, (j, 3))
    active = shared.random((j, 3)) < 0.4
    amplitude = shared.uniform(0.15, 0.5, (j, 3)) * active
    cycles = shared.uniform(0.5, 2.5, (j, 3))
    phase = shared.uniform(0.0, 2.0 * np.pi, (j, 3))
    root_velocity = shared.uniform(-0.25, 0.25, 3)
    root_bob = shared.uniform(0.0, 0.04)
    root_bob_cycles = shared.uniform(0.5, 2.0)

    rng = np.random.default_rng([spec.seed, 1, label])
    base = base + rng.normal(0.0, 0.06, (j, 3))
    amplitude = np.clip(amplitude + rng.normal(0.0, 0.05, (j, 3)), 0.0, None)
    cycles = np.clip(cycles + rng.normal(0.0, 0.2, (j, 3)), 0.1, None)
    phase = phase + rng.normal(0.0, 0.4, (j, 3))
    root_velocity = root_velocity + rng.normal(0.0, 0.05, 3)
    return _ActionParams(
        base, amplitude, cycles, phase, root_velocity, root_bob, root_bob_cycles
    )


def _sample_motion(spec: DatasetSpec, label: int, sample: int) -> Motion:
    p = _class_params(spec, label)
    rng = np.random.default_rng([spec.seed, 2, label, sample])
    phase_offset = rng.uniform(0.0, 2.0 * np.pi)
    angle_offset = rng.standard_normal(p.base.shape) * spec.noise_std

    m = spec.frames
    t = np.arange(m)[:, None, None]  # broadcast over (J, 3)
    angles = (
        p.base
        + angle_offset
        + p.amplitude
        * np.sin(2.0 * np.pi * p.cycles * t / m + p.phase + phase_offset)
    )
    seconds = np.arange(m) / spec.frame_rate
    root = seconds[:, None] * p.root_velocity
    root[:, 1] += p.root_bob * np.sin(
        2.0 * np.pi * p.root_bob_cycles * np.arange(m) / m + phase_offset
    )
    track = JointAngleTrack(
        angles=angles,
        bone_lengths=DEFAULT_BONE_LENGTHS,
        root_translation=root,
        frame_rate=spec.frame_rate,
    )
    motion = forward_kinematics(track, DEFAULT_TOPOLOGY)
    motion.label = label
    return motion


def generate_dataset(spec: DatasetSpec | None = None) -> Dataset:
    """Generate ``class_count * samples_per_class`` labeled motions."""
    spec = spec or DatasetSpec()
    motions = [
        _sample_motion(spec, label, sample)
        for label in range(spec.class_count)
        for sample in range(spec.samples_per_class)
    ]
    return Dataset(motions=motions, splits=[UNSPLIT] * len(motions), spec=spec)


def split_dataset(ds: Dataset, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> Dataset:
    """Stratified train/val/test assignment.

    Within every class, per-part counts use largest-remainder rounding
    (remainder ties resolve in train/val/test order) and the assignment order
    is a seed-determined shuffle.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != len(SPLIT_NAMES):
        raise ValidationError(f"expected {len(SPLIT_NAMES)} fractions")
    if any(f < 0 for f in fractions):
        raise ValidationError("fractions must be nonnegative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError("fractions must sum to 1")
    parts_used = sum(1 for f in fractions if f > 0)

    by_class: dict[int, list[int]] = {}
    for idx, m in enumerate(ds.motions):
        if m.label is None:
            raise ValidationError(f"motion {idx} has no label, cannot stratify")
        by_class.setdefault(m.label, []).append(idx)

    splits = list(ds.splits)
    for label in sorted(by_class):
        indices = np.array(by_class[label])
        n = len(indices)
        if n < parts_used:
            raise StratificationError(
                f"class {label} has {n} samples for {parts_used} split parts"
            )
        exact = [n * f for f in fractions]
        counts = [int(np.floor(e)) for e in exact]
        remainders = [e - c for e, c in zip(exact, counts)]
        for _ in range(n - sum(counts)):
            best = max(range(len(fractions)), key=lambda i: (remainders[i], -i))
            counts[best] += 1
            remainders[best] = -1.0
        order = np.random.default_rng([seed, label]).permutation(n)
        cursor = 0
        for part, count in zip(SPLIT_NAMES, counts):
            for pos in order[cursor : cursor + count]:
                splits[indices[pos]] = part
            cursor += count
    return Dataset(motions=ds.motions, splits=splits, spec=ds.spec)


# ---------------------------------------------------------------------------
# dataset directory I/O


def spec_to_dict(spec: DatasetSpec) -> dict:
    return {
        "class_count": spec.class_count,
        "samples_per_class": spec.samples_per_class,
        "frames": spec.frames,
        "frame_rate": spec.frame_rate,
        "noise_std": spec.noise_std,
        "seed": spec.seed,
    }


def spec_from_dict(doc: dict) -> DatasetSpec:
    try:
        return DatasetSpec(**doc)
    except TypeError as exc:
        raise ValidationError(f"bad dataset spec: {exc}") from exc


def motion_id(label: int, sample: int) -> str:
    return f"c{label:02d}_s{sample:03d}"


def save_dataset(ds: Dataset, out_dir, split_seed: int | None = None, fractions=None) -> dict:
    """Write motion files plus a manifest with checksums and split tags."""
    out = Path(out_dir)
    motion_dir = out / "motions"
    motion_dir.mkdir(parents=True, exist_ok=True)
    items = []
    per_class_counter: dict[int, int] = {}
    for m, split in zip(ds.motions, ds.splits):
        sample = per_class_counter.get(m.label, 0)
        per_class_counter[m.label] = sample + 1
        ident = motion_id(m.label, sample)
        rel = f"motions/{ident}.json"
        save_motion(m, out / rel)
        digest = hashlib.sha256((out / rel).read_bytes()).hexdigest()
        items.append(
            {"id": ident, "file": rel, "label": m.label, "split": split, "sha256": digest}
        )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "kind": "dataset_manifest",
        "dataset_spec": spec_to_dict(ds.spec),
        "split_seed": split_seed,
        "fractions": list(fractions) if fractions is not None else None,
        "items": items,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return manifest


def load_dataset(data_dir, verify_checksums: bool = False) -> Dataset:
    """Read a dataset directory written by :func:`save_dataset`."""
    data_dir = Path(data_dir)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise ParseError(f"{data_dir} does not contain manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"manifest {manifest_path} has schema_version "
            f"{manifest.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    spec = spec_from_dict(manifest["dataset_spec"])
    motions = []
    splits = []
    for entry in manifest["items"]:
        path = data_dir / entry["file"]
        if verify_checksums:
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            if digest != entry["sha256"]:
                raise ParseError(f"checksum mismatch for {path}")
        m = load_motion(path)
        if m.label != entry["label"]:
            raise ParseError(
                f"{path}: label {m.label} disagrees with manifest {entry['label']}"
            )
        motions.append(m)
        splits.append(entry["split"])
    return Dataset(motions=motions, splits=splits, spec=spec)
