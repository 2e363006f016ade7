"""Fixed 25-joint skeletal topology, bone-length extraction, forward kinematics.

The toolkit works on a single documented skeleton: a 4-joint spine topped by a
head, plus two arms and two legs of 5 joints each (25 joints, 24 bones).  The
tree is encoded as a parent table with ``-1`` marking the root; every non-root
joint has a parent with a smaller index, so index order is a valid traversal
order.

Euler convention for forward kinematics: per-joint local rotation is
``R = Rz(z) @ Rx(x) @ Ry(y)`` (ZXY), angles in radians.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ValidationError

ROOT_PARENT = -1

#: Type alias: one skeleton frame, an array of shape (joint_count, 3).
Frame = np.ndarray


@dataclass(frozen=True)
class SkeletonTopology:
    """A rooted kinematic tree over named joints.

    ``parents[j]`` is the index of joint ``j``'s parent, ``-1`` for the root.
    Bones are the (parent, child) pairs for every non-root joint, listed in
    child-index order.
    """

    parents: tuple[int, ...]
    joint_names: tuple[str, ...]

    def __post_init__(self):
        n = len(self.parents)
        if len(self.joint_names) != n:
            raise ValidationError(
                f"{len(self.joint_names)} joint names for {n} parent entries"
            )
        roots = [j for j, p in enumerate(self.parents) if p == ROOT_PARENT]
        if len(roots) != 1:
            raise ValidationError(f"expected exactly one root, found {len(roots)}")
        for j, p in enumerate(self.parents):
            if p == ROOT_PARENT:
                continue
            if not 0 <= p < j:
                raise ValidationError(
                    f"joint {j} has parent {p}; parents must precede children"
                )

    @property
    def joint_count(self) -> int:
        return len(self.parents)

    @property
    def bone_count(self) -> int:
        return self.joint_count - 1

    @property
    def root_index(self) -> int:
        return self.parents.index(ROOT_PARENT)

    @cached_property
    def bone_list(self) -> tuple[tuple[int, int], ...]:
        """(parent, child) index pairs, one per non-root joint."""
        return tuple(
            (p, j) for j, p in enumerate(self.parents) if p != ROOT_PARENT
        )

    @cached_property
    def bones_array(self) -> np.ndarray:
        """bone_list as an int array of shape (bone_count, 2) for indexing."""
        return np.asarray(self.bone_list, dtype=np.intp)


_JOINT_TABLE = [
    # name, parent, rest direction (unit-normalized below), bone length [m]
    ("pelvis", ROOT_PARENT, (0.0, 0.0, 0.0), 0.0),
    ("spine_lower", 0, (0.0, 1.0, 0.0), 0.12),
    ("spine_mid", 1, (0.0, 1.0, 0.0), 0.14),
    ("spine_upper", 2, (0.0, 1.0, 0.0), 0.16),
    ("head", 3, (0.0, 1.0, 0.0), 0.22),
    ("l_clavicle", 3, (0.94, 0.34, 0.0), 0.16),
    ("l_shoulder", 5, (1.0, 0.0, 0.0), 0.10),
    ("l_elbow", 6, (1.0, 0.0, 0.0), 0.28),
    ("l_wrist", 7, (1.0, 0.0, 0.0), 0.26),
    ("l_hand", 8, (1.0, 0.0, 0.0), 0.09),
    ("r_clavicle", 3, (-0.94, 0.34, 0.0), 0.16),
    ("r_shoulder", 10, (-1.0, 0.0, 0.0), 0.10),
    ("r_elbow", 11, (-1.0, 0.0, 0.0), 0.28),
    ("r_wrist", 12, (-1.0, 0.0, 0.0), 0.26),
    ("r_hand", 13, (-1.0, 0.0, 0.0), 0.09),
    ("l_hip", 0, (0.95, -0.31, 0.0), 0.11),
    ("l_knee", 15, (0.0, -1.0, 0.0), 0.42),
    ("l_ankle", 16, (0.0, -1.0, 0.0), 0.40),
    ("l_foot", 17, (0.0, -0.45, 0.89), 0.13),
    ("l_toe", 18, (0.0, 0.0, 1.0), 0.08),
    ("r_hip", 0, (-0.95, -0.31, 0.0), 0.11),
    ("r_knee", 20, (0.0, -1.0, 0.0), 0.42),
    ("r_ankle", 21, (0.0, -1.0, 0.0), 0.40),
    ("r_foot", 22, (0.0, -0.45, 0.89), 0.13),
    ("r_toe", 23, (0.0, 0.0, 1.0), 0.08),
]

JOINT_COUNT = len(_JOINT_TABLE)
BONE_COUNT = JOINT_COUNT - 1

DEFAULT_TOPOLOGY = SkeletonTopology(
    parents=tuple(row[1] for row in _JOINT_TABLE),
    joint_names=tuple(row[0] for row in _JOINT_TABLE),
)


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


#: Rest-pose unit directions of the default skeleton's bones (bone-list order).
DEFAULT_REST_DIRECTIONS = np.stack(
    [_unit(row[2]) for row in _JOINT_TABLE if row[1] != ROOT_PARENT]
)

#: Bone lengths [m] of the default skeleton (bone-list order).
DEFAULT_BONE_LENGTHS = np.asarray(
    [row[3] for row in _JOINT_TABLE if row[1] != ROOT_PARENT], dtype=np.float64
)


def default_topology() -> SkeletonTopology:
    """The documented 25-joint topology used throughout the toolkit."""
    return DEFAULT_TOPOLOGY


def bone_length_vector(frame: Frame, topo: SkeletonTopology = DEFAULT_TOPOLOGY) -> np.ndarray:
    """Euclidean length of every bone in one frame.

    Returns an array of shape (bone_count,): entry ``k`` is the distance
    between the two joints of ``topo.bone_list[k]``.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (topo.joint_count, 3):
        raise ValidationError(
            f"frame has shape {frame.shape}, expected ({topo.joint_count}, 3)"
        )
    bones = topo.bones_array
    return np.linalg.norm(frame[bones[:, 1]] - frame[bones[:, 0]], axis=1)


def bone_lengths_frames(positions: np.ndarray, topo: SkeletonTopology = DEFAULT_TOPOLOGY) -> np.ndarray:
    """Per-frame bone lengths for a whole position tensor (M, J, 3) -> (M, J-1)."""
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim != 3 or positions.shape[1:] != (topo.joint_count, 3):
        raise ValidationError(
            f"positions have shape {positions.shape}, expected "
            f"(M, {topo.joint_count}, 3)"
        )
    bones = topo.bones_array
    return np.linalg.norm(
        positions[:, bones[:, 1]] - positions[:, bones[:, 0]], axis=2
    )


@dataclass
class JointAngleTrack:
    """Rotation tracks + fixed bone lengths that drive forward kinematics.

    angles            (M, J, 3) ZXY Euler angles in radians
    bone_lengths      (J-1,) strictly positive lengths in bone-list order
    root_translation  (M, 3) world position of the root per frame
    rest_directions   (J-1, 3) unit bone directions in the parent frame;
                      defaults to the documented rest pose
    """

    angles: np.ndarray
    bone_lengths: np.ndarray
    root_translation: np.ndarray
    rest_directions: np.ndarray | None = None
    frame_rate: float = 30.0

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=np.float64)
        self.bone_lengths = np.asarray(self.bone_lengths, dtype=np.float64)
        self.root_translation = np.asarray(self.root_translation, dtype=np.float64)
        if self.rest_directions is None:
            self.rest_directions = DEFAULT_REST_DIRECTIONS.copy()
        else:
            self.rest_directions = np.asarray(self.rest_directions, dtype=np.float64)
        if self.angles.ndim != 3 or self.angles.shape[2] != 3:
            raise ValidationError(f"angles have shape {self.angles.shape}, expected (M, J, 3)")
        m, j = self.angles.shape[:2]
        if self.root_translation.shape != (m, 3):
            raise ValidationError(
                "root_translation length does not match the angle track "
                f"({self.root_translation.shape} vs {m} frames)"
            )
        if self.bone_lengths.shape != (j - 1,):
            raise ValidationError(
                f"expected {j - 1} bone lengths, got {self.bone_lengths.shape}"
            )
        if self.rest_directions.shape != (j - 1, 3):
            raise ValidationError(
                f"expected rest directions of shape ({j - 1}, 3), "
                f"got {self.rest_directions.shape}"
            )
        if not np.all(self.bone_lengths > 0):
            raise ValidationError("bone lengths must be strictly positive")

    @property
    def frame_count(self) -> int:
        return self.angles.shape[0]


def _euler_zxy_matrices(angles: np.ndarray) -> np.ndarray:
    """Rotation matrices R = Rz @ Rx @ Ry for an (..., 3) angle array."""
    z, x, y = angles[..., 0], angles[..., 1], angles[..., 2]
    cz, sz = np.cos(z), np.sin(z)
    cx, sx = np.cos(x), np.sin(x)
    cy, sy = np.cos(y), np.sin(y)
    r = np.empty(angles.shape[:-1] + (3, 3))
    # Product of the three elementary rotations, expanded once.
    r[..., 0, 0] = cz * cy - sz * sx * sy
    r[..., 0, 1] = -sz * cx
    r[..., 0, 2] = cz * sy + sz * sx * cy
    r[..., 1, 0] = sz * cy + cz * sx * sy
    r[..., 1, 1] = cz * cx
    r[..., 1, 2] = sz * sy - cz * sx * cy
    r[..., 2, 0] = -cx * sy
    r[..., 2, 1] = sx
    r[..., 2, 2] = cx * cy
    return r


def forward_kinematics(track: JointAngleTrack, topo: SkeletonTopology = DEFAULT_TOPOLOGY):
    """Synthesize a motion from joint-angle tracks.

    Child positions are placed by rotating the fixed parent-frame bone offset
    with the parent's accumulated rotation, so every output frame reproduces
    the track's bone lengths exactly (up to floating-point round-off).

    Returns a :class:`~skelattack.motion.Motion`.
    """
    from .motion import Motion

    if track.angles.shape[1] != topo.joint_count:
        raise ValidationError(
            f"angle track covers {track.angles.shape[1]} joints, topology has "
            f"{topo.joint_count}"
        )
    m = track.frame_count
    j = topo.joint_count
    offsets = track.rest_directions * track.bone_lengths[:, None]

    local = _euler_zxy_matrices(track.angles)  # (M, J, 3, 3)
    global_rot = np.empty_like(local)
    positions = np.empty((m, j, 3))

    child_bone = {child: k for k, (_, child) in enumerate(topo.bone_list)}
    root = topo.root_index
    global_rot[:, root] = local[:, root]
    positions[:, root] = track.root_translation
    for joint in range(j):
        if joint == root:
            continue
        parent = topo.parents[joint]
        global_rot[:, joint] = global_rot[:, parent] @ local[:, joint]
        offset = offsets[child_bone[joint]]
        positions[:, joint] = positions[:, parent] + global_rot[:, parent] @ offset

    return Motion(
        positions=positions,
        frame_rate=track.frame_rate,
        label=None,
        topology=topo,
    )
