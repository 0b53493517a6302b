"""Find joints that sit off-screen for most of a clip and resample only their
feature channels with RePaint, keeping every other channel fixed.

The prior is a per-channel standardised isotropic Gaussian fitted to the
human features of a small synthetic set, so the refill is crude; the point
is the masking plumbing.

    python scripts/offscreen_refine.py --n 256 --threshold 0.3
"""

import argparse

import numpy as np

from auxguide.diffusion import AnalyticGaussianDenoiser, make_schedule, repaint_inpaint
from auxguide.features import build_framing_features, integrate_features, joint_channel_mask
from auxguide.geometry import JOINT_NAMES, detect_offscreen_chains
from auxguide.metrics import out_rate
from auxguide.rng import make_rng
from auxguide.synthetic import GenConfig, generate_dataset


def chain_mask(rec, threshold):
    w = rec.world
    return detect_offscreen_chains(w.camera.rotation, w.camera.position, w.camera.fov, w.human.joints, threshold)[0]


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--threshold", type=float, default=0.3)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    records = generate_dataset(a.n, GenConfig(seed=a.seed), with_world=True)
    flagged = [(r, m) for r in records if (m := chain_mask(r, a.threshold)).any()]
    print(f"{len(flagged)} of {len(records)} clips have off-screen chains at threshold {a.threshold}")
    if not flagged:
        raise SystemExit(0)
    rec, joints = flagged[0]
    print(f"clip {rec.id} ({rec.label.motion.value}, {rec.label.camera.value}): refining",
          ", ".join(JOINT_NAMES[j] for j in np.flatnonzero(joints)))

    rows = np.concatenate([r.human for r in records])
    mean, std = rows.mean(0), rows.std(0) + 1e-6
    sched = make_schedule()
    prior = AnalyticGaussianDenoiser(((np.zeros(rows.shape[1]), 1.0),), sched)
    keep = ~joint_channel_mask(joints)
    known = (rec.human - mean) / std
    out = repaint_inpaint(prior, sched, a.steps, known, keep, make_rng(a.seed, 1), jump_length=10, jump_n_sample=2)
    human = out * std + mean
    human[:, keep] = rec.human[:, keep]
    print(f"resampled {int((~keep).sum())} of {keep.size} channels; kept channels unchanged:",
          np.array_equal(human[:, keep], rec.human[:, keep]))

    traj = integrate_features(human, rec.camera, rec.fps, camera_anchor="offset")
    print(f"out-of-frame rate before {out_rate(rec.framing):.3f}, after {out_rate(build_framing_features(traj)):.3f}")
