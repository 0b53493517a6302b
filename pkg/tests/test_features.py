import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from auxguide.errors import LengthMismatch, TooShort
from auxguide.features import (
    CAMERA_DIM,
    CAMERA_SLICES,
    FRAMING_DIM,
    HUMAN_DIM,
    HUMAN_SLICES,
    CameraTrack,
    HumanTrack,
    RootInit,
    TrajectoryPair,
    build_camera_features,
    build_framing_features,
    build_human_features,
    integrate_features,
    joint_channel_mask,
    root_init_of,
)
from auxguide.geometry import FRAMING_JOINTS, NUM_JOINTS, CameraPose, look_at, matrix_to_rot6d, project_to_ndc
from auxguide.synthetic import ALL_LABELS, GenConfig, generate_pair


def make_pair(n=5, fps=30.0, pelvis_velocity=(0.0, 0.0, 0.0), cam_offset=(0.0, -3.0, 0.5)):
    t = np.arange(n) / fps
    pelvis = np.array([0.0, 0.0, 1.0]) + t[:, None] * np.asarray(pelvis_velocity)
    rest = np.random.default_rng(0).normal(scale=0.3, size=(NUM_JOINTS, 3))
    rest[0] = 0.0
    joints = pelvis[:, None, :] + rest
    pose6d = np.broadcast_to(matrix_to_rot6d(np.eye(3)), (n, NUM_JOINTS, 6)).copy()
    position = pelvis + np.asarray(cam_offset)
    rotation = look_at(position, pelvis)
    return TrajectoryPair(
        human=HumanTrack(joints=joints, heading=np.zeros(n), pose6d=pose6d),
        camera=CameraTrack(rotation=rotation, position=position, fov=np.full((n, 2), 1.0)),
        fps=fps,
    )


def test_widths():
    p = make_pair()
    assert build_human_features(p).shape == (5, HUMAN_DIM) == (5, 199)
    assert build_camera_features(p).shape == (5, CAMERA_DIM) == (5, 14)
    assert build_framing_features(p).shape == (5, FRAMING_DIM) == (5, 18)


def test_static_features():
    h = build_human_features(make_pair())
    assert np.all(h[:, 1:4] == 0.0)
    assert np.all(h[:, 0] == 1.0)
    c = build_camera_features(make_pair())
    assert np.all(c[:, CAMERA_SLICES["velocity"]] == 0.0)
    assert np.allclose(c[:, CAMERA_SLICES["offset"]], [0.0, -3.0, 0.5])


def test_pelvis_velocity_column():
    h = build_human_features(make_pair(pelvis_velocity=(1.0, 0.0, 0.0)))
    assert np.allclose(h[:, 1], 1.0, atol=1e-12)


def test_camera_offset_column():
    c = build_camera_features(make_pair(cam_offset=(0.0, 0.0, 3.0)))
    assert np.allclose(c[:, CAMERA_SLICES["offset"]], [0.0, 0.0, 3.0])


def test_too_short():
    with pytest.raises(TooShort):
        build_human_features(make_pair(n=1))


def test_framing_matches_per_joint_projection():
    p = generate_pair(ALL_LABELS[5], GenConfig(frames=8, seed=3))
    fr = build_framing_features(p)
    for f in range(8):
        pose = CameraPose(p.camera.rotation[f], p.camera.position[f], *p.camera.fov[f])
        for k, j in enumerate(FRAMING_JOINTS):
            ndc, _ = project_to_ndc(pose, p.human.joints[f, j])
            assert np.allclose(fr[f, 2 * k : 2 * k + 2], ndc, atol=1e-12)


def test_framing_examples():
    n = 3
    joints = np.zeros((n, NUM_JOINTS, 3))
    joints[:, :, 2] = 2.0
    joints[:, FRAMING_JOINTS[1], 0] = 2.0  # lateral offset equal to depth
    pair = TrajectoryPair(
        human=HumanTrack(joints=joints, heading=np.zeros(n), pose6d=np.zeros((n, NUM_JOINTS, 6))),
        camera=CameraTrack(rotation=np.broadcast_to(np.eye(3), (n, 3, 3)), position=np.zeros((n, 3)),
                           fov=np.full((n, 2), np.pi / 2)),
        fps=30.0,
    )
    fr = build_framing_features(pair)
    assert np.allclose(fr[:, 4:6], 0.0)  # pelvis on the optical axis
    assert np.allclose(fr[:, 2], 1.0)


def test_integrate_zero_velocity():
    h = np.zeros((4, HUMAN_DIM))
    c = np.zeros((4, CAMERA_DIM))
    c[:, :6] = [1, 0, 0, 0, 1, 0]
    c[:, 12:] = 1.0
    tr = integrate_features(h, c, 30.0, RootInit(pelvis_xy=(1.0, 2.0)))
    assert np.allclose(tr.pelvis, [1.0, 2.0, 0.0])


def test_integrate_constant_velocity():
    h = np.zeros((4, HUMAN_DIM))
    h[:, 1] = 1.0
    c = np.zeros((4, CAMERA_DIM))
    c[:, :6] = [1, 0, 0, 0, 1, 0]
    c[:, 12:] = 1.0
    tr = integrate_features(h, c, 1.0)
    assert np.allclose(tr.pelvis[:, 0], [0, 1, 2, 3])


def test_integrate_length_mismatch():
    with pytest.raises(LengthMismatch):
        integrate_features(np.zeros((4, HUMAN_DIM)), np.zeros((3, CAMERA_DIM)), 30.0)


@given(st.sampled_from(ALL_LABELS), st.integers(0, 2**32), st.sampled_from(["offset", "velocity"]))
def test_round_trip(label, seed, anchor):
    p = generate_pair(label, GenConfig(frames=16, seed=seed))
    feats = (build_human_features(p), build_camera_features(p), build_framing_features(p))
    back = integrate_features(feats[0], feats[1], p.fps, root_init_of(p), camera_anchor=anchor)
    again = (build_human_features(back), build_camera_features(back), build_framing_features(back))
    for a, b in zip(feats, again):
        assert np.max(np.abs(a - b)) < 1e-6


@given(st.sampled_from(ALL_LABELS), st.integers(0, 2**32))
def test_time_reversal_negates_velocities(label, seed):
    p = generate_pair(label, GenConfig(frames=12, seed=seed))
    rev = TrajectoryPair(
        human=HumanTrack(p.human.joints[::-1], p.human.heading[::-1], p.human.pose6d[::-1]),
        camera=CameraTrack(p.camera.rotation[::-1], p.camera.position[::-1], p.camera.fov[::-1]),
        fps=p.fps,
    )
    v = build_human_features(p)[:, 1:4]
    vr = build_human_features(rev)[:, 1:4]
    # forward difference at frame f of the reversal is minus the one at frame n-2-f of the original
    assert np.allclose(vr[:-1], -v[:-1][::-1], atol=1e-9)
    c = build_camera_features(p)[:, 6:9]
    cr = build_camera_features(rev)[:, 6:9]
    assert np.allclose(cr[:-1], -c[:-1][::-1], atol=1e-9)


def test_joint_channel_mask():
    m = np.zeros(NUM_JOINTS, bool)
    m[20] = True
    ch = joint_channel_mask(m)
    assert ch.sum() == 9
    assert ch[HUMAN_SLICES["pose6d"]].sum() == 6
    m[0] = True
    assert joint_channel_mask(m)[:4].all()
