"""JSON-lines dataset format.

One JSON object per line::

    {"id": str, "fps": float, "F": int,
     "condition_label": {"motion": str, "camera": str},
     "human": [[199 floats] * F], "camera": [[14 floats] * F], "framing": [[18 floats] * F],
     "world": {...} | absent, "latent": [[floats] * F/4] | absent}

``world`` holds the raw trajectory: ``joints`` (F x 22 x 3), ``heading`` (F),
``pose6d`` (F x 22 x 6), ``cam_rotation`` (F x 3 x 3, world to camera),
``cam_position`` (F x 3), ``fov`` (F x 2). Floats are written with Python's
shortest round-trip repr, so parsing is lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import (
    CAMERA_DIM,
    FRAMING_DIM,
    HUMAN_DIM,
    CameraTrack,
    HumanTrack,
    TrajectoryPair,
    build_camera_features,
    build_framing_features,
    build_human_features,
)
from .synthetic import ConditionLabel


@dataclass(frozen=True)
class Record:
    id: str
    fps: float
    label: ConditionLabel
    human: np.ndarray
    camera: np.ndarray
    framing: np.ndarray
    world: TrajectoryPair | None = None
    latent: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.human)
        if self.human.shape != (n, HUMAN_DIM):
            raise ValueError(f"human features must be (F, {HUMAN_DIM}), got {self.human.shape}")
        if self.camera.shape != (n, CAMERA_DIM):
            raise ValueError(f"camera features must be (F, {CAMERA_DIM}), got {self.camera.shape}")
        if self.framing.shape != (n, FRAMING_DIM):
            raise ValueError(f"framing features must be (F, {FRAMING_DIM}), got {self.framing.shape}")

    @property
    def n_frames(self) -> int:
        return len(self.human)

    @classmethod
    def from_trajectory(cls, id: str, label: ConditionLabel, traj: TrajectoryPair,
                        keep_world: bool = False, latent=None) -> "Record":
        return cls(
            id=id,
            fps=traj.fps,
            label=label,
            human=build_human_features(traj),
            camera=build_camera_features(traj),
            framing=build_framing_features(traj),
            world=traj if keep_world else None,
            latent=latent,
        )

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "fps": self.fps,
            "F": self.n_frames,
            "condition_label": self.label.to_dict(),
            "human": self.human.tolist(),
            "camera": self.camera.tolist(),
            "framing": self.framing.tolist(),
        }
        if self.world is not None:
            w = self.world
            d["world"] = {
                "joints": w.human.joints.tolist(),
                "heading": w.human.heading.tolist(),
                "pose6d": w.human.pose6d.tolist(),
                "cam_rotation": w.camera.rotation.tolist(),
                "cam_position": w.camera.position.tolist(),
                "fov": w.camera.fov.tolist(),
            }
        if self.latent is not None:
            d["latent"] = np.asarray(self.latent).tolist()
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Record":
        n = int(d["F"])
        fps = float(d["fps"])
        world = None
        if d.get("world") is not None:
            w = d["world"]
            world = TrajectoryPair(
                human=HumanTrack(
                    joints=np.asarray(w["joints"], dtype=np.float64),
                    heading=np.asarray(w["heading"], dtype=np.float64),
                    pose6d=np.asarray(w["pose6d"], dtype=np.float64),
                ),
                camera=CameraTrack(
                    rotation=np.asarray(w["cam_rotation"], dtype=np.float64),
                    position=np.asarray(w["cam_position"], dtype=np.float64),
                    fov=np.asarray(w["fov"], dtype=np.float64),
                ),
                fps=fps,
            )
        rec = cls(
            id=str(d["id"]),
            fps=fps,
            label=ConditionLabel.from_dict(d["condition_label"]),
            human=np.asarray(d["human"], dtype=np.float64).reshape(n, HUMAN_DIM),
            camera=np.asarray(d["camera"], dtype=np.float64).reshape(n, CAMERA_DIM),
            framing=np.asarray(d["framing"], dtype=np.float64).reshape(n, FRAMING_DIM),
            world=world,
            latent=None if d.get("latent") is None else np.asarray(d["latent"], dtype=np.float64),
        )
        return rec


def write_records(path: str | Path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), allow_nan=False, separators=(",", ":")))
            fh.write("\n")


def read_records(path: str | Path) -> list[Record]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(Record.from_json(json.loads(line)))
    return out
