"""Minimal numpy MLPs with hand-written backprop, Adam, and a gradient checker.

Parameters live in flat ``dict[str, ndarray]`` stores so that models,
optimizers and checkpoints share one representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

Params = dict[str, np.ndarray]


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


ACTIVATIONS = {
    "silu": (lambda x: x * _sigmoid(x),
             lambda x: _sigmoid(x) * (1.0 + x * (1.0 - _sigmoid(x)))),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
}


def init_mlp(rng: np.random.Generator, prefix: str, sizes: list[int], zero_last: bool = False) -> Params:
    out = {}
    for i, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
        last = i == len(sizes) - 2
        scale = 0.0 if (last and zero_last) else np.sqrt(1.0 / a)
        out[f"{prefix}.{i}.w"] = rng.standard_normal((a, b)) * scale
        out[f"{prefix}.{i}.b"] = np.zeros(b)
    return out


def n_layers(params: Params, prefix: str) -> int:
    n = 0
    while f"{prefix}.{n}.w" in params:
        n += 1
    return n


def mlp_forward(params: Params, prefix: str, x: np.ndarray, act: str = "silu"):
    """Apply Linear-(act-Linear)* over the last axis; returns (y, cache)."""
    f, _ = ACTIVATIONS[act]
    depth = n_layers(params, prefix)
    cache = []
    h = x
    for i in range(depth):
        cache.append(h)
        pre = h @ params[f"{prefix}.{i}.w"] + params[f"{prefix}.{i}.b"]
        if i < depth - 1:
            cache.append(pre)
            h = f(pre)
        else:
            h = pre
    return h, cache


def mlp_backward(params: Params, prefix: str, cache, gy: np.ndarray, grads: Params, act: str = "silu"):
    """Accumulate parameter gradients into ``grads``; returns d loss / d input."""
    _, df = ACTIVATIONS[act]
    depth = n_layers(params, prefix)
    g = gy
    idx = len(cache)
    for i in reversed(range(depth)):
        if i < depth - 1:
            idx -= 1
            g = g * df(cache[idx])
        idx -= 1
        h = cache[idx]
        h2 = h.reshape(-1, h.shape[-1])
        g2 = g.reshape(-1, g.shape[-1])
        _accum(grads, f"{prefix}.{i}.w", h2.T @ g2)
        _accum(grads, f"{prefix}.{i}.b", g2.sum(axis=0))
        g = g @ params[f"{prefix}.{i}.w"].T
    return g


def _accum(grads: Params, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value


@dataclass
class Adam:
    lr: float = 1.9e-4
    warmup: int = 1000
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def current_lr(self) -> float:
        if self.warmup <= 0:
            return self.lr
        return self.lr * min(1.0, (self.step_count + 1) / self.warmup)

    def step(self, params: Params, grads: Params, trainable=None) -> None:
        lr = self.current_lr()
        self.step_count += 1
        t = self.step_count
        for name, g in grads.items():
            if trainable is not None and name not in trainable:
                continue
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            v = self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            mhat = m / (1 - self.beta1**t)
            vhat = v / (1 - self.beta2**t)
            params[name] -= lr * mhat / (np.sqrt(vhat) + self.eps)


def grad_check(
    loss_and_grads: Callable[[Params], tuple[float, Params]],
    params: Params,
    rng: np.random.Generator,
    n_checks: int = 100,
    eps: float = 1e-5,
    names=None,
    floor: float = 1e-6,
) -> float:
    """Max relative error of analytic gradients against central differences.

    ``n_checks`` coordinates are drawn uniformly over the parameters in
    ``names`` (default: every entry of ``grads``). The relative error of one
    coordinate is ``|a - n| / max(|a|, |n|, floor)``. Perturbed entries are
    restored bit-exactly.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-6, 1e-3]")
    _, grads = loss_and_grads(params)
    pool = [n for n in (names if names is not None else grads) if params[n].size > 0]
    sizes = np.array([params[n].size for n in pool], dtype=np.float64)
    picks = rng.choice(len(pool), size=n_checks, p=sizes / sizes.sum())
    worst = 0.0
    for k in picks:
        name = pool[k]
        arr = params[name]
        flat = int(rng.integers(arr.size))
        idx = np.unravel_index(flat, arr.shape)
        orig = arr[idx]
        arr[idx] = orig + eps
        lp, _ = loss_and_grads(params)
        arr[idx] = orig - eps
        lm, _ = loss_and_grads(params)
        arr[idx] = orig
        numeric = (lp - lm) / (2 * eps)
        analytic = grads[name][idx] if name in grads else 0.0
        denom = max(abs(analytic), abs(numeric), floor)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
