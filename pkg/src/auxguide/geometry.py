"""Rotations, pinhole projection to NDC and off-screen joint detection.

Camera frame convention: x right, y down, z forward (depth). World frame is
Z-up. ``CameraPose.rotation`` maps world vectors into the camera frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, LengthMismatch

NUM_JOINTS = 22
PELVIS = 0

JOINT_NAMES = (
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
)

# standard 22-joint kinematic tree rooted at the pelvis
PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19)

# ankles, pelvis, spine, head, shoulders, wrists
FRAMING_JOINTS = (7, 8, 0, 6, 15, 16, 17, 20, 21)

_DEGENERATE = 1e-9
MIN_DEPTH = 1e-6


@dataclass(frozen=True)
class CameraPose:
    rotation: np.ndarray  # (3, 3) world -> camera
    position: np.ndarray  # (3,) metres
    fov_h: float
    fov_v: float

    def __post_init__(self):
        if not (0.0 < self.fov_h < np.pi and 0.0 < self.fov_v < np.pi):
            raise ValueError("fields of view must lie in (0, pi)")


def _children() -> tuple[tuple[int, ...], ...]:
    kids: list[list[int]] = [[] for _ in range(NUM_JOINTS)]
    for j, p in enumerate(PARENTS):
        if p >= 0:
            kids[p].append(j)
    return tuple(tuple(k) for k in kids)


CHILDREN = _children()


def descendants(joint: int) -> set[int]:
    """``joint`` together with every joint below it in the tree."""
    out = {joint}
    stack = [joint]
    while stack:
        for c in CHILDREN[stack.pop()]:
            out.add(c)
            stack.append(c)
    return out


def rot6d_to_matrix(r6d) -> np.ndarray:
    """Gram-Schmidt a 6D rotation ``(..., 6)`` into matrices ``(..., 3, 3)``.

    The 6 numbers are the first two columns ``a1, a2``.
    """
    r6d = np.asarray(r6d, dtype=np.float64)
    a1, a2 = r6d[..., :3], r6d[..., 3:6]
    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < _DEGENERATE):
        raise DegenerateInput("first 6D column has near-zero norm")
    c1 = a1 / n1
    b2 = a2 - np.sum(c1 * a2, axis=-1, keepdims=True) * c1
    n2 = np.linalg.norm(b2, axis=-1, keepdims=True)
    if np.any(n2 < _DEGENERATE):
        raise DegenerateInput("6D columns are (nearly) parallel")
    c2 = b2 / n2
    c3 = np.cross(c1, c2)
    return np.stack([c1, c2, c3], axis=-1)


def matrix_to_rot6d(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def rot_z(angle) -> np.ndarray:
    """Rotation(s) about the world up axis."""
    angle = np.asarray(angle, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    z, o = np.zeros_like(angle), np.ones_like(angle)
    return np.stack(
        [np.stack([c, -s, z], -1), np.stack([s, c, z], -1), np.stack([z, z, o], -1)], -2
    )


def look_at(position, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """World->camera rotation(s) whose optical axis points from position to target."""
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    fwd = target - position
    fwd = fwd / np.linalg.norm(fwd, axis=-1, keepdims=True)
    right = np.cross(fwd, np.broadcast_to(np.asarray(up, dtype=np.float64), fwd.shape))
    norm = np.linalg.norm(right, axis=-1, keepdims=True)
    # looking along the up axis: fall back to world x as "up"
    alt = np.cross(fwd, np.broadcast_to([1.0, 0.0, 0.0], fwd.shape))
    right = np.where(norm > 1e-9, right, alt)
    right = right / np.linalg.norm(right, axis=-1, keepdims=True)
    down = np.cross(fwd, right)
    return np.stack([right, down, fwd], axis=-2)


def project_points(rotation, position, fov, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised pinhole projection.

    rotation (..., 3, 3), position (..., 3), fov (..., 2) broadcast against
    points (..., P, 3). Returns ndc (..., P, 2) and in_front (..., P).
    """
    rotation = np.asarray(rotation, dtype=np.float64)
    position = np.asarray(position, dtype=np.float64)
    fov = np.asarray(fov, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    rel = points - position[..., None, :]
    p = np.einsum("...ij,...pj->...pi", rotation, rel)
    depth = p[..., 2]
    in_front = depth > MIN_DEPTH
    # keep the sign of depth so behind-camera points mirror rather than blow up
    safe = np.where(np.abs(depth) > MIN_DEPTH, depth, np.where(depth < 0, -MIN_DEPTH, MIN_DEPTH))
    tan_half = np.tan(0.5 * fov)
    ndc = np.stack(
        [p[..., 0] / (safe * tan_half[..., None, 0]), p[..., 1] / (safe * tan_half[..., None, 1])],
        axis=-1,
    )
    return ndc, in_front


def project_to_ndc(pose: CameraPose, point) -> tuple[np.ndarray, bool]:
    fov = np.array([pose.fov_h, pose.fov_v])
    ndc, front = project_points(pose.rotation, pose.position, fov, np.asarray(point)[None, :])
    return ndc[0], bool(front[0])


def visible(ndc, in_front) -> np.ndarray:
    ndc = np.asarray(ndc)
    return np.asarray(in_front) & (np.abs(ndc[..., 0]) <= 1.0) & (np.abs(ndc[..., 1]) <= 1.0)


def visibility_mask(pose: CameraPose, joints) -> np.ndarray:
    """Per framing joint: in front of the camera and inside the screen."""
    joints = np.asarray(joints, dtype=np.float64)
    if joints.shape != (NUM_JOINTS, 3):
        raise ValueError(f"expected ({NUM_JOINTS}, 3) joints, got {joints.shape}")
    fov = np.array([pose.fov_h, pose.fov_v])
    ndc, front = project_points(pose.rotation, pose.position, fov, joints[list(FRAMING_JOINTS)])
    return visible(ndc, front)


def detect_offscreen_chains(
    rotations, positions, fovs, joints, threshold: float = 0.5
) -> np.ndarray:
    """Joints to refine: off-screen in at least ``threshold`` of the frames,
    closed under kinematic descendants.

    Arrays are per frame: rotations (F, 3, 3), positions (F, 3), fovs (F, 2),
    joints (F, 22, 3). Returns a boolean (F, 22) mask, identical across frames.
    """
    rotations = np.asarray(rotations, dtype=np.float64)
    joints = np.asarray(joints, dtype=np.float64)
    n = len(rotations)
    if not (len(positions) == len(fovs) == len(joints) == n):
        raise LengthMismatch("camera and joint sequences differ in length")
    ndc, front = project_points(rotations, positions, fovs, joints)
    off_frac = 1.0 - visible(ndc, front).mean(axis=0)
    mask = np.zeros(NUM_JOINTS, dtype=bool)
    for j in np.flatnonzero(off_frac >= threshold):
        mask[list(descendants(int(j)))] = True
    return np.broadcast_to(mask, (n, NUM_JOINTS)).copy()
