"""DDPM machinery with classifier-free and auxiliary (framing) guidance.

Timesteps are 1-indexed: ``alpha_bar[t - 1]`` belongs to step ``t`` and step
0 denotes clean data. Condition arrays hold one integer label per sample,
``NULL`` (-1) meaning unconditional.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import Divergence, ShapeMismatch
from .linalg import ProjectorPair
from .nn import Adam, Params, grad_check, init_mlp, mlp_backward, mlp_forward
from .rng import make_rng

log = logging.getLogger(__name__)

NULL = -1


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray
    alpha_bar: np.ndarray

    @property
    def T(self) -> int:
        return len(self.beta)

    def abar(self, t) -> np.ndarray:
        """alpha_bar at step(s) ``t`` with ``abar(0) == 1``."""
        t = np.asarray(t)
        return np.where(t > 0, self.alpha_bar[np.maximum(t, 1) - 1], 1.0)


def make_schedule(T: int = 1000, beta_start: float = 1e-4, beta_end: float = 2e-2) -> NoiseSchedule:
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    beta = np.linspace(beta_start, beta_end, T) if T > 1 else np.array([beta_start])
    return NoiseSchedule(beta=beta, alpha_bar=np.cumprod(1.0 - beta))


def forward_diffuse(u0, t, eps, sched: NoiseSchedule) -> np.ndarray:
    u0 = np.asarray(u0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if u0.shape != eps.shape:
        raise ShapeMismatch("u0 and eps differ in shape")
    a = sched.abar(t)
    a = np.reshape(a, np.shape(a) + (1,) * (u0.ndim - np.ndim(a)))
    return np.sqrt(a) * u0 + np.sqrt(1.0 - a) * eps


@dataclass(frozen=True)
class GuidanceWeights:
    w_c: float = 0.0
    w_z: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.w_c) and np.isfinite(self.w_z)):
            raise ValueError("guidance weights must be finite")
        if self.w_c < 0 or self.w_z < 0:
            raise ValueError("guidance weights must be non-negative")


class Denoiser(Protocol):
    width: int

    def predict(self, u_t: np.ndarray, t: np.ndarray, condition: np.ndarray) -> np.ndarray:
        """Noise prediction for ``u_t`` (B, ..., width) at per-sample steps ``t`` (B,)."""


def combine_guidance(eps_uncond, eps_cond, parallel, w: GuidanceWeights) -> np.ndarray:
    """``eps_u + w_z P eps_u + w_c (eps_c - eps_u)`` applied over the last axis.

    ``parallel`` is the projector onto the framing-determined subspace (a
    ``ProjectorPair`` or a plain matrix); it may be ``None`` when ``w_z == 0``.
    """
    eps_uncond = np.asarray(eps_uncond, dtype=np.float64)
    eps_cond = np.asarray(eps_cond, dtype=np.float64)
    if eps_uncond.shape != eps_cond.shape:
        raise ShapeMismatch("conditional and unconditional predictions differ in shape")
    out = eps_uncond
    if parallel is not None:
        p = parallel.parallel if isinstance(parallel, ProjectorPair) else np.asarray(parallel)
        if p.shape != (eps_uncond.shape[-1],) * 2:
            raise ShapeMismatch(f"projector {p.shape} does not match width {eps_uncond.shape[-1]}")
        out = out + w.w_z * (eps_uncond @ p.T)
    elif w.w_z != 0:
        raise ValueError("w_z > 0 needs a projector")
    return out + w.w_c * (eps_cond - eps_uncond)


# --- analytic Gaussian oracle -------------------------------------------------


@dataclass(frozen=True)
class AnalyticGaussianDenoiser:
    """Exact noise prediction when the data are isotropic Gaussians.

    ``components[k] = (mu_k, sigma_k)`` is the law under condition ``k``; the
    unconditional law is the ``weights``-mixture of the components, unless
    ``uncond`` gives its own (mu, sigma).
    """

    components: tuple[tuple[np.ndarray, float], ...]
    sched: NoiseSchedule
    weights: tuple[float, ...] | None = None
    uncond: tuple[np.ndarray, float] | None = None

    @property
    def width(self) -> int:
        return len(self.components[0][0])

    def _mixture_eps(self, u, abar, mus, sigmas, logw):
        a = np.sqrt(abar)[..., None]
        var = abar[..., None] * sigmas**2 + (1.0 - abar[..., None])  # (..., K)
        diff = u[..., None, :] - a[..., None] * mus  # (..., K, D)
        d = u.shape[-1]
        logp = logw - 0.5 * np.sum(diff**2, -1) / var - 0.5 * d * np.log(var)
        logp -= logp.max(axis=-1, keepdims=True)
        r = np.exp(logp)
        r /= r.sum(axis=-1, keepdims=True)
        score_term = np.sum((r / var)[..., None] * diff, axis=-2)
        return np.sqrt(1.0 - abar)[..., None] * score_term

    def predict(self, u_t, t, condition=None) -> np.ndarray:
        u_t = np.asarray(u_t, dtype=np.float64)
        b = u_t.shape[0]
        t = np.broadcast_to(np.asarray(t), (b,))
        cond = np.full(b, NULL) if condition is None else np.broadcast_to(np.asarray(condition), (b,))
        abar = self.sched.abar(t).astype(np.float64)
        abar = abar.reshape((b,) + (1,) * (u_t.ndim - 2))
        abar = np.broadcast_to(abar, u_t.shape[:-1])
        out = np.empty_like(u_t)
        mus = np.stack([np.asarray(m, dtype=np.float64) for m, _ in self.components])
        sig = np.array([s for _, s in self.components], dtype=np.float64)
        for k in np.unique(cond):
            sel = cond == k
            if k == NULL:
                if self.uncond is not None:
                    m, s = self.uncond
                    km, ks, kw = np.asarray(m)[None], np.array([s]), np.zeros(1)
                else:
                    w = np.ones(len(sig)) if self.weights is None else np.asarray(self.weights, float)
                    km, ks, kw = mus, sig, np.log(w / w.sum())
            else:
                km, ks, kw = mus[k : k + 1], sig[k : k + 1], np.zeros(1)
            out[sel] = self._mixture_eps(u_t[sel], abar[sel], km, ks, kw)
        return out


def gaussian_eps(u_t, t, mu, sigma0: float, sched: NoiseSchedule) -> np.ndarray:
    """Closed form for a single isotropic Gaussian N(mu, sigma0^2 I)."""
    a = float(sched.abar(t))
    return (np.asarray(u_t) - np.sqrt(a) * np.asarray(mu)) * np.sqrt(1 - a) / (a * sigma0**2 + 1 - a)


def analytic_eps(d: AnalyticGaussianDenoiser, u_t, t, condition=None) -> np.ndarray:
    return d.predict(u_t, t, condition)


# --- sampling -----------------------------------------------------------------


def strided_steps(T: int, steps: int) -> np.ndarray:
    """Increasing timesteps ``tau_1 < ... < tau_S`` evenly spread over [1, T]."""
    if not 1 <= steps <= T:
        raise ValueError(f"steps must lie in [1, {T}]")
    return np.unique(np.round(np.linspace(1, T, steps)).astype(int))


def _guided_eps(denoiser, x, t, condition, parallel, w: GuidanceWeights):
    b = x.shape[0]
    tt = np.full(b, t)
    null = np.full(b, NULL)
    eps_u = denoiser.predict(x, tt, null)
    if condition is None or w.w_c == 0:
        eps_c = eps_u
    else:
        eps_c = denoiser.predict(x, tt, condition)
    return combine_guidance(eps_u, eps_c, parallel if w.w_z != 0 or parallel is not None else None, w)


def _reverse_step(x, eps, abar_t, abar_prev, rng):
    beta = 1.0 - abar_t / abar_prev
    mean = (x - beta / np.sqrt(1.0 - abar_t) * eps) / np.sqrt(1.0 - beta)
    var = beta * (1.0 - abar_prev) / (1.0 - abar_t)
    if var <= 0:
        return mean
    return mean + np.sqrt(var) * rng.standard_normal(x.shape)


def ddpm_sample(
    denoiser,
    sched: NoiseSchedule,
    steps: int,
    shape: tuple[int, ...],
    rng: np.random.Generator,
    condition=None,
    parallel=None,
    w: GuidanceWeights = GuidanceWeights(),
) -> np.ndarray:
    """Ancestral sampling over strided steps with the guided noise prediction."""
    taus = strided_steps(sched.T, steps)
    abars = np.concatenate([[1.0], sched.abar(taus)])
    x = rng.standard_normal(shape)
    for k in range(len(taus), 0, -1):
        eps = _guided_eps(denoiser, x, int(taus[k - 1]), condition, parallel, w)
        x = _reverse_step(x, eps, abars[k], abars[k - 1], rng)
    return x


def jump_schedule(n_steps: int, jump_length: int = 0, jump_n_sample: int = 1) -> list[int]:
    """Sequence of strided-step indices visited by resampling; 0 is clean."""
    jumps = {}
    if jump_length > 0 and jump_n_sample > 1:
        jumps = {j: jump_n_sample - 1 for j in range(0, n_steps - jump_length, jump_length)}
    k = n_steps
    seq = [k]
    while k >= 1:
        k -= 1
        seq.append(k)
        if jumps.get(k, 0) > 0:
            jumps[k] -= 1
            for _ in range(jump_length):
                k += 1
                seq.append(k)
    return seq


def repaint_inpaint(
    denoiser,
    sched: NoiseSchedule,
    steps: int,
    known,
    mask,
    rng: np.random.Generator,
    jump_length: int = 0,
    jump_n_sample: int = 1,
    condition=None,
    parallel=None,
    w: GuidanceWeights = GuidanceWeights(),
) -> np.ndarray:
    """Fill the channels where ``mask`` is False; True channels are copied from ``known``.

    ``mask`` broadcasts against ``known``. At every visited step the known
    channels are replaced by a fresh forward-diffused copy of ``known``.
    """
    known = np.asarray(known, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, known.shape)
    except ValueError as exc:
        raise ShapeMismatch(f"mask {mask.shape} does not broadcast to {known.shape}") from exc
    taus = strided_steps(sched.T, steps)
    abars = np.concatenate([[1.0], sched.abar(taus)])
    seq = jump_schedule(len(taus), jump_length, jump_n_sample)
    x = rng.standard_normal(known.shape)
    for cur, nxt in zip(seq[:-1], seq[1:]):
        if nxt < cur:
            eps = _guided_eps(denoiser, x, int(taus[cur - 1]), condition, parallel, w)
            x = _reverse_step(x, eps, abars[cur], abars[nxt], rng)
            if nxt == 0:
                x = np.where(mask, known, x)
            else:
                noisy = np.sqrt(abars[nxt]) * known + np.sqrt(1 - abars[nxt]) * rng.standard_normal(known.shape)
                x = np.where(mask, noisy, x)
        else:
            beta = 1.0 - abars[nxt] / abars[cur]
            x = np.sqrt(1 - beta) * x + np.sqrt(beta) * rng.standard_normal(x.shape)
    return x


# --- toy learned denoiser ---------------------------------------------------------


@dataclass(frozen=True)
class DenoiserConfig:
    width: int = 192
    context: int = 1
    hidden: tuple[int, ...] = (512, 512)
    t_embed: int = 32
    pos_embed: int = 8
    n_labels: int = 16
    act: str = "silu"

    @property
    def in_dim(self) -> int:
        return (2 * self.context + 1) * self.width + self.t_embed + self.pos_embed + self.n_labels

    def to_dict(self) -> dict:
        return {"width": self.width, "context": self.context, "hidden": list(self.hidden),
                "t_embed": self.t_embed, "pos_embed": self.pos_embed, "n_labels": self.n_labels,
                "act": self.act}

    @classmethod
    def from_dict(cls, d: dict) -> "DenoiserConfig":
        d = dict(d)
        d["hidden"] = tuple(d["hidden"])
        return cls(**d)


@dataclass(frozen=True)
class DenoiserTrainConfig:
    steps: int = 4000
    batch_size: int = 16
    lr: float = 3e-4
    warmup: int = 200
    cond_dropout: float = 0.1
    seed: int = 0


def sinusoidal(x: np.ndarray, dim: int, max_period: float = 1000.0) -> np.ndarray:
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / half)
    ang = np.asarray(x, dtype=np.float64)[..., None] * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)


def init_denoiser(cfg: DenoiserConfig, seed: int = 0) -> Params:
    return init_mlp(make_rng(seed, 20), "den", [cfg.in_dim, *cfg.hidden, cfg.width])


def _denoiser_inputs(cfg: DenoiserConfig, x, t, cond, T: int):
    """Per-frame inputs (B, L, in_dim) for latents ``x`` (B, L, D)."""
    b, l, d = x.shape
    c = cfg.context
    padded = np.concatenate([np.repeat(x[:, :1], c, 1), x, np.repeat(x[:, -1:], c, 1)], axis=1)
    window = np.concatenate([padded[:, i : i + l] for i in range(2 * c + 1)], axis=-1)
    temb = np.broadcast_to(sinusoidal(np.asarray(t) * (1000.0 / T), cfg.t_embed)[:, None], (b, l, cfg.t_embed))
    pos = np.broadcast_to(sinusoidal(np.arange(l) / max(l - 1, 1) * 50.0, cfg.pos_embed, 100.0), (b, l, cfg.pos_embed))
    onehot = np.zeros((b, cfg.n_labels))
    cond = np.asarray(cond)
    valid = cond >= 0
    onehot[np.flatnonzero(valid), cond[valid]] = 1.0
    onehot = np.broadcast_to(onehot[:, None], (b, l, cfg.n_labels))
    return np.concatenate([window, temb, pos, onehot], axis=-1)


@dataclass
class MLPDenoiser:
    """Per-latent-frame MLP over a window of neighbouring frames, the step and the label."""

    params: Params
    cfg: DenoiserConfig
    T: int

    @property
    def width(self) -> int:
        return self.cfg.width

    def predict(self, u_t, t, condition=None) -> np.ndarray:
        u_t = np.asarray(u_t, dtype=np.float64)
        b = u_t.shape[0]
        t = np.broadcast_to(np.asarray(t), (b,))
        cond = np.full(b, NULL) if condition is None else np.broadcast_to(np.asarray(condition), (b,))
        inp = _denoiser_inputs(self.cfg, u_t, t, cond, self.T)
        out, _ = mlp_forward(self.params, "den", inp, self.cfg.act)
        return out


def noise_loss_and_grads(params: Params, cfg: DenoiserConfig, x_t, t, cond, eps, T: int, need_grads=True):
    """Per-element mean squared error between true and predicted noise."""
    inp = _denoiser_inputs(cfg, x_t, t, cond, T)
    out, cache = mlp_forward(params, "den", inp, cfg.act)
    r = out - eps
    loss = float(np.mean(r * r))
    if not need_grads:
        return loss, None
    grads: Params = {}
    mlp_backward(params, "den", cache, 2 * r / r.size, grads, cfg.act)
    return loss, grads


@dataclass
class DenoiserLog:
    initial_loss: float
    final_loss: float
    history: list[tuple[int, float]] = field(default_factory=list)


def _noised_batch(latents, labels, sched, rng, idx, cond_dropout):
    x0 = latents[idx]
    t = rng.integers(1, sched.T + 1, size=len(idx))
    eps = rng.standard_normal(x0.shape)
    x_t = forward_diffuse(x0, t, eps, sched)
    cond = labels[idx].copy()
    cond[rng.random(len(idx)) < cond_dropout] = NULL
    return x_t, t, cond, eps


def _eval_noise_loss(params, cfg, latents, labels, sched, seed: int, n_rep: int = 4) -> float:
    rng = make_rng(seed, 22)
    losses = []
    for _ in range(n_rep):
        idx = np.arange(len(latents))
        x_t, t, cond, eps = _noised_batch(latents, labels, sched, rng, idx, 0.1)
        losses.append(noise_loss_and_grads(params, cfg, x_t, t, cond, eps, sched.T, need_grads=False)[0])
    return float(np.mean(losses))


def train_denoiser(latents, labels, sched: NoiseSchedule, cfg: DenoiserConfig,
                   hp: DenoiserTrainConfig = DenoiserTrainConfig(), log_every: int = 200):
    """Fit the noise-prediction MLP on latent sequences (N, L, D) with integer labels (N,).

    Labels are replaced by the null condition with probability ``cond_dropout``.
    Initial and final losses are measured on the same fixed noised draws.
    """
    latents = np.asarray(latents, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if len(latents) == 0:
        raise ValueError("empty latent dataset")
    params = init_denoiser(cfg, hp.seed)
    opt = Adam(lr=hp.lr, warmup=hp.warmup)
    rng = make_rng(hp.seed, 21)
    eval_seed = hp.seed
    initial = _eval_noise_loss(params, cfg, latents, labels, sched, eval_seed)
    history = [(0, initial)]
    n = len(latents)
    for step in range(1, hp.steps + 1):
        idx = rng.integers(0, n, size=hp.batch_size)
        x_t, t, cond, eps = _noised_batch(latents, labels, sched, rng, idx, hp.cond_dropout)
        loss, grads = noise_loss_and_grads(params, cfg, x_t, t, cond, eps, sched.T)
        if not np.isfinite(loss):
            raise Divergence(f"denoiser loss became {loss} at step {step}")
        opt.step(params, grads)
        if step % log_every == 0 or step == hp.steps:
            history.append((step, loss))
            log.info("denoiser step %d loss %.5f", step, loss)
    final = _eval_noise_loss(params, cfg, latents, labels, sched, eval_seed)
    return MLPDenoiser(params=params, cfg=cfg, T=sched.T), DenoiserLog(initial, final, history)


def denoiser_grad_check(model: MLPDenoiser, latents, labels, sched, seed: int = 0,
                        eps: float = 1e-5, n_checks: int = 100) -> float:
    rng = make_rng(seed, 23)
    idx = np.arange(min(len(latents), 4))
    x_t, t, cond, noise = _noised_batch(np.asarray(latents), np.asarray(labels), sched, rng, idx, 0.0)
    return grad_check(
        lambda p: noise_loss_and_grads(p, model.cfg, x_t, t, cond, noise, sched.T),
        model.params, make_rng(seed, 24), n_checks=n_checks, eps=eps,
    )
