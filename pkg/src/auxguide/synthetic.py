"""Procedural paired human/camera trajectories with discrete condition labels.

Bodies are posed with forward kinematics on a fixed 22-joint skeleton
(Z up, facing +X at heading 0). Cameras are aimed with a look-at rotation.

Smoothness bounds for noise-free clips (max joint speed between consecutive
frames, m/s) are listed in ``MAX_JOINT_SPEED``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .features import CameraTrack, HumanTrack, TrajectoryPair
from .geometry import NUM_JOINTS, PARENTS, look_at, matrix_to_rot6d, rot_z
from .rng import derive_seed, make_rng


class Motion(str, enum.Enum):
    WALK_LINE = "walk-line"
    WALK_CIRCLE = "walk-circle"
    STAND_WAVE = "stand-wave"
    JUMP = "jump-in-place"


class CameraMove(str, enum.Enum):
    STATIC = "static"
    FOLLOW = "follow"
    ORBIT = "orbit"
    PULL_OUT = "pull-out"


@dataclass(frozen=True, order=True)
class ConditionLabel:
    motion: Motion
    camera: CameraMove

    def __post_init__(self):
        object.__setattr__(self, "motion", Motion(self.motion))
        object.__setattr__(self, "camera", CameraMove(self.camera))

    @property
    def index(self) -> int:
        return list(Motion).index(self.motion) * len(CameraMove) + list(CameraMove).index(self.camera)

    def to_dict(self) -> dict:
        return {"motion": self.motion.value, "camera": self.camera.value}

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionLabel":
        return cls(d["motion"], d["camera"])

    @classmethod
    def from_index(cls, i: int) -> "ConditionLabel":
        if not 0 <= i < len(Motion) * len(CameraMove):
            raise ValueError(f"label index {i} out of range")
        return cls(list(Motion)[i // len(CameraMove)], list(CameraMove)[i % len(CameraMove)])


ALL_LABELS = tuple(ConditionLabel(m, c) for m in Motion for c in CameraMove)
NUM_LABELS = len(ALL_LABELS)


@dataclass(frozen=True)
class GenConfig:
    frames: int = 64
    fps: float = 30.0
    seed: int = 0
    noise_scale: float = 0.01

    def __post_init__(self):
        if self.frames < 2:
            raise ValueError("frames must be >= 2")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


# per-class joint speed bounds (m/s) at noise_scale=0 for the default 64 frames at 30 fps
MAX_JOINT_SPEED = {
    Motion.WALK_LINE: 4.0,
    Motion.WALK_CIRCLE: 6.0,
    Motion.STAND_WAVE: 3.0,
    Motion.JUMP: 4.0,
}

PELVIS_HEIGHT = 0.95

# rest offsets from each joint's parent, metres
REST_OFFSETS = np.array([
    [0.0, 0.0, 0.0],
    [0.0, 0.09, -0.08], [0.0, -0.09, -0.08], [0.0, 0.0, 0.11],
    [0.0, 0.0, -0.40], [0.0, 0.0, -0.40], [0.0, 0.0, 0.13],
    [0.0, 0.0, -0.41], [0.0, 0.0, -0.41], [0.0, 0.0, 0.06],
    [0.12, 0.0, -0.05], [0.12, 0.0, -0.05], [0.0, 0.0, 0.21],
    [0.0, 0.07, 0.14], [0.0, -0.07, 0.14], [0.02, 0.0, 0.09],
    [0.0, 0.11, 0.03], [0.0, -0.11, 0.03],
    [0.0, 0.26, 0.0], [0.0, -0.26, 0.0],
    [0.0, 0.25, 0.0], [0.0, -0.25, 0.0],
])

L_HIP, R_HIP, L_KNEE, R_KNEE = 1, 2, 4, 5
L_SHOULDER, R_SHOULDER, L_ELBOW, R_ELBOW = 16, 17, 18, 19
ARMS_DOWN = 1.25  # shoulder roll bringing T-pose arms to the sides


def _rx(a):
    a = np.asarray(a, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.stack([np.stack([o, z, z], -1), np.stack([z, c, -s], -1), np.stack([z, s, c], -1)], -2)


def _ry(a):
    a = np.asarray(a, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    z, o = np.zeros_like(a), np.ones_like(a)
    return np.stack([np.stack([c, z, s], -1), np.stack([z, o, z], -1), np.stack([-s, z, c], -1)], -2)


def forward_kinematics(root_pos, local_rot):
    """World joints (F, 22, 3) from root positions (F, 3) and local rotations (F, 22, 3, 3)."""
    n = len(root_pos)
    glob = np.empty((n, NUM_JOINTS, 3, 3))
    pos = np.empty((n, NUM_JOINTS, 3))
    glob[:, 0] = local_rot[:, 0]
    pos[:, 0] = root_pos
    for j in range(1, NUM_JOINTS):
        p = PARENTS[j]
        glob[:, j] = glob[:, p] @ local_rot[:, j]
        pos[:, j] = pos[:, p] + glob[:, p] @ REST_OFFSETS[j]
    return pos


def _rest_pose(n: int) -> np.ndarray:
    rot = np.broadcast_to(np.eye(3), (n, NUM_JOINTS, 3, 3)).copy()
    rot[:, L_SHOULDER] = _rx(-ARMS_DOWN)
    rot[:, R_SHOULDER] = _rx(ARMS_DOWN)
    return rot


def _human(motion: Motion, n: int, fps: float, rng: np.random.Generator):
    t = np.arange(n) / fps
    duration = n / fps
    start = rng.uniform(-1.0, 1.0, size=2)
    rot = _rest_pose(n)
    if motion is Motion.WALK_LINE:
        heading = np.full(n, rng.uniform(-np.pi, np.pi))
        speed = rng.uniform(0.9, 1.4)
        freq = rng.uniform(0.8, 1.0)
        phase = 2 * np.pi * freq * t
        xy = start + speed * t[:, None] * np.column_stack([np.cos(heading), np.sin(heading)])
        z = PELVIS_HEIGHT + 0.02 * np.sin(2 * phase)
        _gait(rot, phase)
    elif motion is Motion.WALK_CIRCLE:
        radius = rng.uniform(0.5, 0.8)
        direction = rng.choice([-1.0, 1.0])
        theta0 = rng.uniform(-np.pi, np.pi)
        theta = theta0 + direction * 2 * np.pi * t / duration
        centre = start
        xy = centre + radius * np.column_stack([np.cos(theta), np.sin(theta)])
        heading = theta + direction * np.pi / 2
        freq = rng.uniform(0.8, 1.0)
        phase = 2 * np.pi * freq * t
        z = PELVIS_HEIGHT + 0.02 * np.sin(2 * phase)
        _gait(rot, phase)
    elif motion is Motion.STAND_WAVE:
        heading = np.full(n, rng.uniform(-np.pi, np.pi))
        xy = np.broadcast_to(start, (n, 2)).copy()
        z = np.full(n, PELVIS_HEIGHT)
        freq = rng.uniform(1.0, 1.6)
        rot[:, R_SHOULDER] = _rx(-0.4)
        rot[:, R_ELBOW] = _rx(-1.2 + 0.5 * np.sin(2 * np.pi * freq * t))
    else:
        heading = np.full(n, rng.uniform(-np.pi, np.pi))
        xy = np.broadcast_to(start, (n, 2)).copy()
        freq = rng.uniform(1.0, 1.5)
        lift = np.sin(np.pi * freq * t) ** 2
        z = PELVIS_HEIGHT + 0.25 * lift
        bend = 0.5 * (1.0 - lift)
        rot[:, L_HIP] = _ry(-bend)
        rot[:, R_HIP] = _ry(-bend)
        rot[:, L_KNEE] = _ry(2 * bend)
        rot[:, R_KNEE] = _ry(2 * bend)
        rot[:, L_SHOULDER] = _rx(-ARMS_DOWN + 0.6 * lift)
        rot[:, R_SHOULDER] = _rx(ARMS_DOWN - 0.6 * lift)
    rot[:, 0] = rot_z(heading)
    root = np.column_stack([xy, z])
    joints = forward_kinematics(root, rot)
    return joints, heading, matrix_to_rot6d(rot)


def _gait(rot: np.ndarray, phase: np.ndarray) -> None:
    swing = 0.45 * np.sin(phase)
    rot[:, L_HIP] = _ry(swing)
    rot[:, R_HIP] = _ry(-swing)
    rot[:, L_KNEE] = _ry(0.3 * (1 + np.sin(phase + np.pi / 2)))
    rot[:, R_KNEE] = _ry(0.3 * (1 + np.sin(phase - np.pi / 2)))
    rot[:, L_SHOULDER] = _rx(-ARMS_DOWN) @ _ry(-0.3 * np.sin(phase))
    rot[:, R_SHOULDER] = _rx(ARMS_DOWN) @ _ry(0.3 * np.sin(phase))


def _unit(angle):
    return np.column_stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)])


def _camera(move: CameraMove, pelvis: np.ndarray, facing: float, fps: float, rng: np.random.Generator):
    n = len(pelvis)
    t = np.arange(n) / fps
    duration = n / fps
    height = rng.uniform(1.2, 1.8)
    dist = rng.uniform(2.5, 4.5)
    azimuth = facing + rng.uniform(-np.pi / 3, np.pi / 3)
    aim = np.array([0.0, 0.0, 0.3])
    ground = pelvis * np.array([1.0, 1.0, 0.0])
    up = np.array([0.0, 0.0, height])
    if move is CameraMove.STATIC:
        position = np.broadcast_to(ground[0] + dist * _unit(np.array([azimuth]))[0] + up, (n, 3)).copy()
        target = np.broadcast_to(pelvis[0] + aim, (n, 3))
    elif move is CameraMove.FOLLOW:
        position = ground + dist * _unit(np.full(n, azimuth)) + up
        target = pelvis + aim
    elif move is CameraMove.ORBIT:
        sweep = rng.choice([-1.0, 1.0]) * rng.uniform(np.pi / 3, np.pi / 2)
        position = ground + dist * _unit(azimuth + sweep * t / duration) + up
        target = pelvis + aim
    else:
        d0 = rng.uniform(1.5, 2.0)
        d1 = d0 + rng.uniform(2.0, 3.0)
        position = ground + (d0 + (d1 - d0) * t / duration)[:, None] * _unit(np.full(n, azimuth)) + up
        target = pelvis + aim
    fov_h = rng.uniform(0.8, 1.2)
    fov_v = 2.0 * np.arctan(np.tan(fov_h / 2) * 9.0 / 16.0)
    fov = np.broadcast_to([fov_h, fov_v], (n, 2)).copy()
    return position, target, fov


def generate_pair(label: ConditionLabel, cfg: GenConfig) -> TrajectoryPair:
    """One clip realising ``label``; deterministic in ``cfg.seed``."""
    rng = make_rng(cfg.seed, 0)
    noise_rng = make_rng(cfg.seed, 1)
    joints, heading, pose6d = _human(label.motion, cfg.frames, cfg.fps, rng)
    position, target, fov = _camera(label.camera, joints[:, 0], float(heading[0]), cfg.fps, rng)
    rotation = look_at(position, target)
    if cfg.noise_scale > 0:
        joints = joints + cfg.noise_scale * noise_rng.standard_normal(joints.shape)
        position = position + cfg.noise_scale * noise_rng.standard_normal(position.shape)
    return TrajectoryPair(
        human=HumanTrack(joints=joints, heading=heading, pose6d=pose6d),
        camera=CameraTrack(rotation=rotation, position=position, fov=fov),
        fps=float(cfg.fps),
    )


def allocate_counts(n: int, weights) -> np.ndarray:
    """Largest-remainder split of ``n`` items by ``weights`` (ties to the earlier entry)."""
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be non-negative with a positive sum")
    quota = n * w / w.sum()
    counts = np.floor(quota).astype(int)
    rest = n - counts.sum()
    order = np.argsort(-(quota - counts), kind="stable")
    counts[order[:rest]] += 1
    return counts


def label_schedule(n: int, label_mix: dict[ConditionLabel, float], seed: int) -> list[ConditionLabel]:
    labels = list(label_mix)
    counts = allocate_counts(n, [label_mix[lab] for lab in labels])
    seq = [lab for lab, c in zip(labels, counts) for _ in range(c)]
    perm = make_rng(seed, 2).permutation(len(seq))
    return [seq[i] for i in perm]


def uniform_mix(labels=ALL_LABELS) -> dict[ConditionLabel, float]:
    return {lab: 1.0 for lab in labels}


def generate_dataset(
    n: int,
    cfg: GenConfig,
    label_mix: dict[ConditionLabel, float] | None = None,
    path: str | Path | None = None,
    with_world: bool = False,
):
    """Generate ``n`` records; write them as JSON lines when ``path`` is given."""
    from .dataset import Record, write_records

    if n < 1:
        raise ValueError("n must be >= 1")
    labels = label_schedule(n, label_mix or uniform_mix(), cfg.seed)
    records = []
    for i, lab in enumerate(labels):
        sub = replace(cfg, seed=derive_seed(cfg.seed, 3, i))
        traj = generate_pair(lab, sub)
        records.append(Record.from_trajectory(f"{cfg.seed}-{i:06d}", lab, traj, keep_world=with_world))
    if path is not None:
        write_records(path, records)
    return records
