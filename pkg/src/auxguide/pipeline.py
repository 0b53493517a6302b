"""Glue between the autoencoder, the latent denoiser and the metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autoencoder import AEConfig, decode_all, encode
from .dataset import Record
from .diffusion import (
    DenoiserConfig,
    DenoiserTrainConfig,
    GuidanceWeights,
    MLPDenoiser,
    NoiseSchedule,
    ddpm_sample,
    train_denoiser,
)
from .features import build_framing_features, integrate_features
from .linalg import ProjectorPair, projector_pair
from .metrics import fd_from_rows, out_rate, prdc, trajectory_out_rate
from .rng import make_rng
from .synthetic import ConditionLabel


@dataclass(frozen=True)
class LatentStats:
    """Per-channel mean and one shared scale; a scalar scale keeps the framing subspace fixed."""

    mean: np.ndarray
    scale: float

    def normalize(self, u):
        return (np.asarray(u) - self.mean) / self.scale

    def denormalize(self, v):
        return np.asarray(v) * self.scale + self.mean


def latent_stats(latents) -> LatentStats:
    flat = np.asarray(latents).reshape(-1, np.shape(latents)[-1])
    mean = flat.mean(axis=0)
    scale = float(np.sqrt(np.mean((flat - mean) ** 2)))
    return LatentStats(mean=mean, scale=scale if scale > 0 else 1.0)


def encode_records(ae_params, ae_cfg: AEConfig, records, chunk: int = 128) -> np.ndarray:
    out = []
    for s in range(0, len(records), chunk):
        part = records[s : s + chunk]
        out.append(encode(ae_params, ae_cfg, np.stack([r.human for r in part]), np.stack([r.camera for r in part])))
    return np.concatenate(out)


def label_indices(records) -> np.ndarray:
    return np.array([r.label.index for r in records], dtype=int)


def fit_latent_denoiser(latents, labels, sched: NoiseSchedule, cfg: DenoiserConfig, hp: DenoiserTrainConfig):
    stats = latent_stats(latents)
    model, log = train_denoiser(stats.normalize(latents), labels, sched, cfg, hp)
    return model, stats, log


def framing_projector(ae_params) -> ProjectorPair:
    return projector_pair(ae_params["framing"])


def sample_latents(model: MLPDenoiser, stats: LatentStats, sched: NoiseSchedule, labels, n_latent_frames: int,
                   steps: int, proj: ProjectorPair, w: GuidanceWeights, seed: int) -> np.ndarray:
    """Raw-scale latents (N, L, D), one per entry of ``labels``."""
    labels = np.asarray(labels, dtype=int)
    shape = (len(labels), n_latent_frames, model.width)
    v = ddpm_sample(model, sched, steps, shape, make_rng(seed, 40), condition=labels, parallel=proj, w=w)
    return stats.denormalize(v)


def decode_records(ae_params, ae_cfg: AEConfig, latents, labels, fps: float, prefix: str = "gen",
                   keep_world: bool = True, keep_latent: bool = True) -> list[Record]:
    """Decode latents into records whose framing is recomputed from integrated world trajectories."""
    human, camera, _ = decode_all(ae_params, ae_cfg, latents)
    out = []
    for i, (h, c, lab) in enumerate(zip(human, camera, labels)):
        traj = integrate_features(h, c, fps, camera_anchor="offset")
        label = lab if isinstance(lab, ConditionLabel) else ConditionLabel.from_index(int(lab))
        out.append(Record(
            id=f"{prefix}-{i:06d}", fps=float(fps), label=label, human=h, camera=c,
            framing=build_framing_features(traj),
            world=traj if keep_world else None,
            latent=latents[i] if keep_latent else None,
        ))
    return out


def evaluate(gen: list[Record], ref: list[Record], k: int = 5) -> dict[str, float]:
    """Metric report of generated records against a reference set."""
    g_fr = np.concatenate([r.framing for r in gen])
    r_fr = np.concatenate([r.framing for r in ref])
    g_ft = np.concatenate([np.hstack([r.human, r.camera]) for r in gen])
    r_ft = np.concatenate([np.hstack([r.human, r.camera]) for r in ref])
    if all(r.world is not None for r in gen):
        gen_out = trajectory_out_rate([r.world for r in gen])
    else:
        gen_out = out_rate([r.framing for r in gen])
    report = {
        "FD_framing": fd_from_rows(g_fr, r_fr),
        "FD_feat": fd_from_rows(g_ft, r_ft),
        "out_rate": gen_out,
        "out_rate_ref": out_rate([r.framing for r in ref]),
    }
    if len(gen) > k and len(ref) > k:
        p = prdc(np.stack([r.framing.ravel() for r in ref]), np.stack([r.framing.ravel() for r in gen]), k)
        report.update({f"{name}_framing": v for name, v in p.items()})
    return report
