"""Raw feature representations and their inverse.

Per-frame layouts (column ranges are half-open):

human  (199): r_z [0] | r_x' [1] | r_y' [2] | heading' [3] | pose 6D [4:136] | joints [136:199]
camera (14):  rotation 6D [0:6] | position' [6:9] | camera - pelvis [9:12] | fov_h, fov_v [12:14]
framing (18): (ndc_x, ndc_y) for each of the 9 framing joints

Velocities (primed) are forward differences times fps, with the last frame
repeating the previous difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, TooShort
from .geometry import (
    FRAMING_JOINTS,
    NUM_JOINTS,
    PELVIS,
    matrix_to_rot6d,
    project_points,
    rot6d_to_matrix,
    rot_z,
)

HUMAN_DIM = 199
CAMERA_DIM = 14
FRAMING_DIM = 18

HUMAN_SLICES = {
    "root_z": slice(0, 1),
    "root_vel_xy": slice(1, 3),
    "heading_vel": slice(3, 4),
    "pose6d": slice(4, 136),
    "joints": slice(136, 199),
}
CAMERA_SLICES = {
    "rotation6d": slice(0, 6),
    "velocity": slice(6, 9),
    "offset": slice(9, 12),
    "fov": slice(12, 14),
}

# framing coordinates saturate here so that near-plane joints stay finite
FRAMING_CLIP = 5.0
FOV_MIN, FOV_MAX = 0.05, np.pi - 0.05


@dataclass(frozen=True)
class HumanTrack:
    joints: np.ndarray  # (F, 22, 3) world, metres
    heading: np.ndarray  # (F,) radians about world Z
    pose6d: np.ndarray  # (F, 22, 6)


@dataclass(frozen=True)
class CameraTrack:
    rotation: np.ndarray  # (F, 3, 3) world -> camera
    position: np.ndarray  # (F, 3)
    fov: np.ndarray  # (F, 2) horizontal, vertical


@dataclass(frozen=True)
class TrajectoryPair:
    human: HumanTrack
    camera: CameraTrack
    fps: float

    def __post_init__(self):
        n = len(self.human.joints)
        if not (len(self.human.heading) == len(self.human.pose6d) == n):
            raise LengthMismatch("human track fields differ in length")
        if not (len(self.camera.rotation) == len(self.camera.position) == len(self.camera.fov) == n):
            raise LengthMismatch("camera track length differs from human track")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def n_frames(self) -> int:
        return len(self.human.joints)

    @property
    def pelvis(self) -> np.ndarray:
        return self.human.joints[:, PELVIS]


@dataclass(frozen=True)
class RootInit:
    """Initial state for integrating velocity channels."""

    pelvis_xy: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    camera_position: tuple[float, float, float] | None = None


def forward_diff(x: np.ndarray) -> np.ndarray:
    d = np.diff(x, axis=0)
    return np.concatenate([d, d[-1:]], axis=0)


def wrap_angle(a):
    return np.angle(np.exp(1j * np.asarray(a)))


def joints_to_local(joints: np.ndarray, heading: np.ndarray) -> np.ndarray:
    """Non-pelvis joints relative to the pelvis, rotated into the heading frame."""
    rel = joints[:, 1:] - joints[:, PELVIS : PELVIS + 1]
    return np.einsum("fji,fpj->fpi", rot_z(heading), rel)


def joints_from_local(local: np.ndarray, pelvis: np.ndarray, heading: np.ndarray) -> np.ndarray:
    world = np.einsum("fij,fpj->fpi", rot_z(heading), local) + pelvis[:, None, :]
    return np.concatenate([pelvis[:, None, :], world], axis=1)


def _check_length(traj: TrajectoryPair) -> None:
    if traj.n_frames < 2:
        raise TooShort(f"need at least 2 frames, got {traj.n_frames}")


def build_human_features(traj: TrajectoryPair) -> np.ndarray:
    _check_length(traj)
    h = traj.human
    n = traj.n_frames
    pelvis = traj.pelvis
    out = np.empty((n, HUMAN_DIM))
    out[:, HUMAN_SLICES["root_z"]] = pelvis[:, 2:3]
    out[:, HUMAN_SLICES["root_vel_xy"]] = forward_diff(pelvis[:, :2]) * traj.fps
    dh = wrap_angle(np.diff(h.heading))
    out[:, 3] = np.concatenate([dh, dh[-1:]]) * traj.fps
    out[:, HUMAN_SLICES["pose6d"]] = h.pose6d.reshape(n, -1)
    out[:, HUMAN_SLICES["joints"]] = joints_to_local(h.joints, h.heading).reshape(n, -1)
    return out


def build_camera_features(traj: TrajectoryPair) -> np.ndarray:
    _check_length(traj)
    c = traj.camera
    n = traj.n_frames
    out = np.empty((n, CAMERA_DIM))
    out[:, CAMERA_SLICES["rotation6d"]] = matrix_to_rot6d(c.rotation)
    out[:, CAMERA_SLICES["velocity"]] = forward_diff(c.position) * traj.fps
    out[:, CAMERA_SLICES["offset"]] = c.position - traj.pelvis
    out[:, CAMERA_SLICES["fov"]] = c.fov
    return out


def framing_projection(traj: TrajectoryPair) -> tuple[np.ndarray, np.ndarray]:
    """Raw NDC (F, 9, 2) and in-front flags (F, 9) of the framing joints."""
    c = traj.camera
    pts = traj.human.joints[:, list(FRAMING_JOINTS)]
    return project_points(c.rotation, c.position, c.fov, pts)


def build_framing_features(traj: TrajectoryPair) -> np.ndarray:
    ndc, _ = framing_projection(traj)
    return np.clip(ndc, -FRAMING_CLIP, FRAMING_CLIP).reshape(traj.n_frames, FRAMING_DIM)


def _integrate(v: np.ndarray, x0, fps: float) -> np.ndarray:
    steps = np.cumsum(v[:-1] / fps, axis=0)
    return np.concatenate([np.zeros((1,) + v.shape[1:]), steps], axis=0) + np.asarray(x0)


def integrate_features(
    human,
    camera,
    fps: float,
    init: RootInit | None = None,
    camera_anchor: str = "offset",
) -> TrajectoryPair:
    """Recover world trajectories from human and camera features.

    ``camera_anchor="offset"`` places the camera at pelvis + offset each frame;
    ``"velocity"`` integrates the camera velocity from ``init.camera_position``
    (or from pelvis + offset at frame 0 when that is unset).
    """
    human = np.asarray(human, dtype=np.float64)
    camera = np.asarray(camera, dtype=np.float64)
    if len(human) != len(camera):
        raise LengthMismatch(f"human has {len(human)} frames, camera has {len(camera)}")
    if human.shape[1:] != (HUMAN_DIM,) or camera.shape[1:] != (CAMERA_DIM,):
        raise ValueError("feature widths must be 199 (human) and 14 (camera)")
    if len(human) < 2:
        raise TooShort("need at least 2 frames")
    init = init or RootInit()
    n = len(human)
    xy = _integrate(human[:, HUMAN_SLICES["root_vel_xy"]], init.pelvis_xy, fps)
    heading = _integrate(human[:, 3], init.heading, fps)
    pelvis = np.column_stack([xy, human[:, 0]])
    local = human[:, HUMAN_SLICES["joints"]].reshape(n, NUM_JOINTS - 1, 3)
    joints = joints_from_local(local, pelvis, heading)
    pose6d = human[:, HUMAN_SLICES["pose6d"]].reshape(n, NUM_JOINTS, 6)

    offset = camera[:, CAMERA_SLICES["offset"]]
    if camera_anchor == "offset":
        position = pelvis + offset
    elif camera_anchor == "velocity":
        start = init.camera_position if init.camera_position is not None else pelvis[0] + offset[0]
        position = _integrate(camera[:, CAMERA_SLICES["velocity"]], start, fps)
    else:
        raise ValueError(f"unknown camera_anchor {camera_anchor!r}")
    rotation = rot6d_to_matrix(camera[:, CAMERA_SLICES["rotation6d"]])
    fov = np.clip(camera[:, CAMERA_SLICES["fov"]], FOV_MIN, FOV_MAX)
    return TrajectoryPair(
        human=HumanTrack(joints=joints, heading=heading, pose6d=pose6d),
        camera=CameraTrack(rotation=rotation, position=position, fov=fov),
        fps=float(fps),
    )


def root_init_of(traj: TrajectoryPair) -> RootInit:
    p = traj.pelvis[0]
    return RootInit(
        pelvis_xy=(float(p[0]), float(p[1])),
        heading=float(traj.human.heading[0]),
        camera_position=tuple(float(v) for v in traj.camera.position[0]),
    )


def joint_channel_mask(joint_mask) -> np.ndarray:
    """Human feature channels (199,) owned by the flagged joints.

    A joint owns its 6 pose channels and, for non-pelvis joints, its 3
    local-position channels; the pelvis additionally owns the root channels.
    """
    joint_mask = np.asarray(joint_mask, dtype=bool)
    out = np.zeros(HUMAN_DIM, dtype=bool)
    for j in np.flatnonzero(joint_mask):
        start = HUMAN_SLICES["pose6d"].start + 6 * j
        out[start : start + 6] = True
        if j == PELVIS:
            out[:4] = True
        else:
            start = HUMAN_SLICES["joints"].start + 3 * (j - 1)
            out[start : start + 3] = True
    return out
