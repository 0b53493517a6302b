"""Joint human/camera autoencoder with a learnable linear framing map.

The encoder sees human and camera features only. The framing latent is a
fixed linear image ``z = u @ W.T`` of the joint latent ``u = [x, y]`` and is
decoded by its own head, so framing supervision reaches the encoder through
``W`` alone.

Temporal down/up-sampling stacks ``ds`` consecutive frames into one latent
frame; every stage is a per-latent-frame MLP.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import Divergence, ShapeMismatch
from .features import CAMERA_DIM, FRAMING_DIM, HUMAN_DIM
from .nn import Adam, Params, grad_check, init_mlp, mlp_backward, mlp_forward
from .rng import make_rng

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AEConfig:
    d_x: int = 128
    d_y: int = 64
    d_z: int = 64
    ds: int = 4
    enc_hidden: tuple[int, ...] = (256,)
    dec_x_hidden: tuple[int, ...] = (256,)
    dec_y_hidden: tuple[int, ...] = (128,)
    dec_z_hidden: tuple[int, ...] = (128,)
    act: str = "silu"
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    human_dim: int = HUMAN_DIM
    camera_dim: int = CAMERA_DIM
    framing_dim: int = FRAMING_DIM

    @property
    def d_u(self) -> int:
        return self.d_x + self.d_y

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "AEConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass(frozen=True)
class AETrainConfig:
    steps: int = 2000
    batch_size: int = 32
    lr: float = 1.9e-4
    warmup: int = 1000
    seed: int = 0


@dataclass
class TrainLog:
    initial_loss: float
    final_loss: float
    history: list[tuple[int, float]] = field(default_factory=list)
    grad_check_error: float | None = None


NORM_KEYS = ("human", "camera", "framing")


def _widths(cfg: AEConfig) -> dict[str, int]:
    return {"human": cfg.human_dim, "camera": cfg.camera_dim, "framing": cfg.framing_dim}


def is_buffer(name: str) -> bool:
    return name.startswith("norm.")


def init_autoencoder(cfg: AEConfig, seed: int = 0, stats: dict | None = None) -> Params:
    """Fresh parameters; ``stats`` maps modality -> (mean, std) for input scaling."""
    rng = make_rng(seed, 10)
    ds = cfg.ds
    p: Params = {}
    p.update(init_mlp(rng, "enc", [ds * (cfg.human_dim + cfg.camera_dim), *cfg.enc_hidden, cfg.d_u]))
    q, _ = np.linalg.qr(rng.standard_normal((cfg.d_u, cfg.d_z)))
    p["framing"] = q.T.copy()
    p.update(init_mlp(rng, "dec_x", [cfg.d_u, *cfg.dec_x_hidden, ds * cfg.human_dim]))
    p.update(init_mlp(rng, "dec_y", [cfg.d_u, *cfg.dec_y_hidden, ds * cfg.camera_dim]))
    p.update(init_mlp(rng, "dec_z", [cfg.d_z, *cfg.dec_z_hidden, ds * cfg.framing_dim]))
    for key, width in _widths(cfg).items():
        mean, std = (stats or {}).get(key, (np.zeros(width), np.ones(width)))
        p[f"norm.{key}.mean"] = np.asarray(mean, dtype=np.float64).copy()
        p[f"norm.{key}.std"] = np.asarray(std, dtype=np.float64).copy()
    return p


def feature_stats(arrays: np.ndarray, floor: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    flat = arrays.reshape(-1, arrays.shape[-1])
    mean = flat.mean(axis=0)
    std = flat.std(axis=0)
    std = np.where(std < floor, 1.0, std)
    return mean, std


def _batched(a) -> tuple[np.ndarray, bool]:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 2:
        return a[None], True
    return a, False


def _normalize(p: Params, key: str, a: np.ndarray) -> np.ndarray:
    return (a - p[f"norm.{key}.mean"]) / p[f"norm.{key}.std"]


def _denormalize(p: Params, key: str, a: np.ndarray) -> np.ndarray:
    return a * p[f"norm.{key}.std"] + p[f"norm.{key}.mean"]


def _encode_normed(p: Params, cfg: AEConfig, xn: np.ndarray, yn: np.ndarray):
    b, f, _ = xn.shape
    if f % cfg.ds:
        raise ShapeMismatch(f"frame count {f} not divisible by ds={cfg.ds}")
    inp = np.concatenate([xn, yn], axis=-1).reshape(b, f // cfg.ds, -1)
    return mlp_forward(p, "enc", inp, cfg.act)


def encode(p: Params, cfg: AEConfig, x_raw, y_raw) -> np.ndarray:
    """Joint latent (B, F/ds, d_x + d_y); 2-D inputs give a 2-D result."""
    x, single = _batched(x_raw)
    y, _ = _batched(y_raw)
    if x.shape[:2] != y.shape[:2]:
        raise ShapeMismatch(f"human {x.shape[:2]} and camera {y.shape[:2]} lengths differ")
    if x.shape[-1] != cfg.human_dim or y.shape[-1] != cfg.camera_dim:
        raise ShapeMismatch("feature widths do not match the config")
    u, _ = _encode_normed(p, cfg, _normalize(p, "human", x), _normalize(p, "camera", y))
    return u[0] if single else u


def framing_latent(p: Params, u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    w = p["framing"]
    if u.shape[-1] != w.shape[1]:
        raise ShapeMismatch(f"latent width {u.shape[-1]} != framing map input {w.shape[1]}")
    return u @ w.T


def _unstack(a: np.ndarray, ds: int) -> np.ndarray:
    b, l, c = a.shape
    return a.reshape(b, l * ds, c // ds)


def decode_all(p: Params, cfg: AEConfig, u) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw-scale reconstructions (human, camera, framing), each (B, F, width)."""
    u, single = _batched(u)
    if u.shape[-1] != cfg.d_u:
        raise ShapeMismatch(f"latent width {u.shape[-1]} != {cfg.d_u}")
    ox, _ = mlp_forward(p, "dec_x", u, cfg.act)
    oy, _ = mlp_forward(p, "dec_y", u, cfg.act)
    oz, _ = mlp_forward(p, "dec_z", framing_latent(p, u), cfg.act)
    outs = (
        _denormalize(p, "human", _unstack(ox, cfg.ds)),
        _denormalize(p, "camera", _unstack(oy, cfg.ds)),
        _denormalize(p, "framing", _unstack(oz, cfg.ds)),
    )
    return tuple(o[0] for o in outs) if single else outs


def ae_loss_and_grads(p: Params, cfg: AEConfig, batch, need_grads: bool = True):
    """Weighted sum of three per-element mean squared errors in normalised units."""
    human, camera, framing = (np.asarray(a, dtype=np.float64) for a in batch)
    xn = _normalize(p, "human", human)
    yn = _normalize(p, "camera", camera)
    zn = _normalize(p, "framing", framing)
    u, c_enc = _encode_normed(p, cfg, xn, yn)
    z = u @ p["framing"].T
    ox, c_x = mlp_forward(p, "dec_x", u, cfg.act)
    oy, c_y = mlp_forward(p, "dec_y", u, cfg.act)
    oz, c_z = mlp_forward(p, "dec_z", z, cfg.act)
    b, l, _ = u.shape
    rx = ox - xn.reshape(b, l, -1)
    ry = oy - yn.reshape(b, l, -1)
    rz = oz - zn.reshape(b, l, -1)
    wx, wy, wz = cfg.loss_weights
    loss = wx * np.mean(rx * rx) + wy * np.mean(ry * ry) + wz * np.mean(rz * rz)
    if not need_grads:
        return float(loss), None
    grads: Params = {}
    gu = mlp_backward(p, "dec_x", c_x, 2 * wx * rx / rx.size, grads, cfg.act)
    gu = gu + mlp_backward(p, "dec_y", c_y, 2 * wy * ry / ry.size, grads, cfg.act)
    gz = mlp_backward(p, "dec_z", c_z, 2 * wz * rz / rz.size, grads, cfg.act)
    grads["framing"] = gz.reshape(-1, cfg.d_z).T @ u.reshape(-1, cfg.d_u)
    gu = gu + gz @ p["framing"]
    mlp_backward(p, "enc", c_enc, gu, grads, cfg.act)
    return float(loss), grads


def ae_loss(p: Params, cfg: AEConfig, batch) -> float:
    return ae_loss_and_grads(p, cfg, batch, need_grads=False)[0]


def ae_grad_check(p: Params, cfg: AEConfig, batch, eps: float = 1e-5, n_checks: int = 100, seed: int = 0,
                  names=None) -> float:
    trainable = [n for n in p if not is_buffer(n)] if names is None else list(names)
    return grad_check(lambda q: ae_loss_and_grads(q, cfg, batch), p, make_rng(seed, 11),
                      n_checks=n_checks, eps=eps, names=trainable)


def framing_condition(p: Params) -> float:
    s = np.linalg.svd(p["framing"], compute_uv=False)
    return float(s[-1] / s[0])


def stack_records(records) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return (
        np.stack([r.human for r in records]),
        np.stack([r.camera for r in records]),
        np.stack([r.framing for r in records]),
    )


def dataset_loss(p: Params, cfg: AEConfig, data, chunk: int = 128) -> float:
    n = len(data[0])
    total = 0.0
    for s in range(0, n, chunk):
        part = tuple(a[s : s + chunk] for a in data)
        total += ae_loss(p, cfg, part) * len(part[0])
    return total / n


def train_autoencoder(records, cfg: AEConfig = AEConfig(), hp: AETrainConfig = AETrainConfig(),
                      log_every: int = 100) -> tuple[Params, TrainLog]:
    if not records:
        raise ValueError("empty dataset")
    data = stack_records(records)
    stats = {k: feature_stats(a) for k, a in zip(NORM_KEYS, data)}
    p = init_autoencoder(cfg, hp.seed, stats)
    opt = Adam(lr=hp.lr, warmup=hp.warmup)
    trainable = {n for n in p if not is_buffer(n)}
    rng = make_rng(hp.seed, 12)
    n = len(data[0])
    initial = dataset_loss(p, cfg, data)
    history = [(0, initial)]
    order = rng.permutation(n)
    cursor = 0
    for step in range(1, hp.steps + 1):
        if cursor + hp.batch_size > n:
            order = rng.permutation(n)
            cursor = 0
        idx = np.sort(order[cursor : cursor + hp.batch_size])
        cursor += hp.batch_size
        loss, grads = ae_loss_and_grads(p, cfg, tuple(a[idx] for a in data))
        if not np.isfinite(loss):
            raise Divergence(f"autoencoder loss became {loss} at step {step}")
        opt.step(p, grads, trainable)
        if step % log_every == 0 or step == hp.steps:
            history.append((step, loss))
            log.info("ae step %d loss %.5f", step, loss)
    final = dataset_loss(p, cfg, data)
    if framing_condition(p) < 1e-6:
        warnings.warn("framing map is numerically rank deficient; auxiliary sampling will degrade")
    return p, TrainLog(initial_loss=initial, final_loss=final, history=history)
