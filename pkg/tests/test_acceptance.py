"""Acceptance suite: one check per headline criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when output capture is on.
"""

import json
import math
import time

import numpy as np
import pytest

from auxguide.cli import main
from auxguide.decomposition import (
    IsotropicGaussian,
    conditional_mean,
    decompose,
    rejection_conditional_mean,
)
from auxguide.diffusion import (
    AnalyticGaussianDenoiser,
    GuidanceWeights,
    combine_guidance,
    ddpm_sample,
    make_schedule,
    repaint_inpaint,
)
from auxguide.linalg import projector_pair, pseudo_inverse
from auxguide.metrics import GaussianStats, frechet_distance, out_rate, prdc
from auxguide.rng import make_rng


@pytest.fixture
def verdict(capsys):
    def report(name: str, ok: bool, detail: str = ""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return report


def framing_corpus(count: int = 200):
    for i in range(count):
        rng = make_rng(i, 900)
        n = int(rng.integers(2, 65))
        d_z = int(rng.integers(1, n))
        yield rng.standard_normal((d_z, n))


def test_projection_algebra(verdict):
    t = time.perf_counter()
    worst = 0.0
    for f in framing_corpus():
        p = projector_pair(f)
        eye = np.eye(f.shape[1])
        for m in (p.parallel, p.perpendicular):
            worst = max(worst, np.max(np.abs(m @ m - m)), np.max(np.abs(m - m.T)))
        worst = max(worst, np.max(np.abs(p.parallel + p.perpendicular - eye)), np.max(np.abs(f @ p.perpendicular)))
    dt = time.perf_counter() - t
    verdict("projection algebra", worst < 1e-9 and dt < 5.0, f"max err {worst:.2e} (< 1e-9), {dt:.2f}s (< 5s)")


def test_penrose_conditions(verdict):
    worst = 0.0
    for a in framing_corpus():
        x = pseudo_inverse(a)
        ax, xa = a @ x, x @ a
        worst = max(worst, np.max(np.abs(ax @ a - a)), np.max(np.abs(xa @ x - x)),
                    np.max(np.abs(ax - ax.T)), np.max(np.abs(xa - xa.T)))
    verdict("Penrose conditions", worst < 1e-9, f"max err {worst:.2e} (< 1e-9)")


def test_split_independence_suite(verdict, tmp_path):
    out = tmp_path / "lemma.json"
    t = time.perf_counter()
    code = main(["verify-lemma", "--seed", "0", "--n", "100000", "--dim", "8", "--d-z", "3", "--out", str(out)])
    dt = time.perf_counter() - t
    rep = json.loads(out.read_text())
    band = 5 / math.sqrt(1e5)
    bands_ok = all(c["deviation"] < band and c["band"] <= band + 1e-15 for c in rep["checks"])
    worst = max(c["deviation"] for c in rep["checks"])
    ok = code == 0 and bands_ok and rep["density_mismatch"] < 1e-8 and dt < 30
    verdict("verify-lemma split suite", ok,
            f"max moment dev {worst:.4f} (< {band:.4f}), density gap {rep['density_mismatch']:.1e} (< 1e-8), "
            f"{dt:.1f}s (< 30s)")


def test_conditional_mean_identity(verdict):
    ratios = []
    for n, d_z, seed in [(4, 1, 0), (6, 2, 1), (8, 2, 2)]:
        rng = make_rng(seed, 99)
        f = rng.standard_normal((d_z, n))
        f /= np.linalg.norm(f, axis=1, keepdims=True)
        g = IsotropicGaussian(0.5 * rng.standard_normal(n), 1.0)
        z = f @ g.mu + 0.3 * rng.standard_normal(d_z)
        mean, se, k = rejection_conditional_mean(g, f, z, seed=seed)
        ratios.append(float(np.max(np.abs(mean - conditional_mean(g, f, z)) / se)))
    verdict("conditional mean identity", max(ratios) < 3,
            "max |dev|/SE per config " + ", ".join(f"{r:.2f}" for r in ratios) + " (< 3)")


def test_guidance_correctness(verdict):
    rng = make_rng(0, 901)
    eu, ec = rng.standard_normal((2, 16, 8))
    p = projector_pair(rng.standard_normal((3, 8)))
    cfg_ok = all(np.array_equal(combine_guidance(eu, ec, p, GuidanceWeights(wc, 0.0)), eu + wc * (ec - eu))
                 for wc in (0.0, 0.5, 1.0, 2.0, 7.5))
    uncond_ok = np.array_equal(combine_guidance(eu, ec, p, GuidanceWeights(0.0, 0.0)), eu)
    hand = combine_guidance(np.array([1.0, 1.0]), np.array([2.0, 0.0]), np.diag([1.0, 0.0]), GuidanceWeights(2.0, 0.5))
    hand_ok = np.array_equal(hand, [3.5, -1.0])
    verdict("guidance correctness", cfg_ok and uncond_ok and hand_ok,
            f"CFG at w_z=0 bitwise {cfg_ok}, unconditional at (0,0) {uncond_ok}, hand example {hand.tolist()}")


def test_direction_of_effect(verdict):
    t = time.perf_counter()
    s = make_schedule()
    rng = make_rng(0, 902)
    f = rng.standard_normal((3, 8))
    p = projector_pair(f)
    d = AnalyticGaussianDenoiser(((rng.standard_normal(8), 1.0),), s)
    par_var, perp_var = [], []
    for i, wz in enumerate((0.0, 0.25, 0.5, 1.0)):
        x = ddpm_sample(d, s, 50, (10_000, 8), make_rng(1, 903, i), parallel=p, w=GuidanceWeights(0.0, wz))
        perp, par = decompose(x, p)
        par_var.append(float(np.trace(np.cov(par.T))))
        perp_var.append(float(np.trace(np.cov(perp.T))))
    dt = time.perf_counter() - t
    decreasing = all(b < a for a, b in zip(par_var, par_var[1:]))
    perp_change = max(abs(v / perp_var[0] - 1) for v in perp_var)
    ok = decreasing and perp_change < 0.05 and dt < 120
    verdict("direction of effect", ok,
            "P_par var " + " > ".join(f"{v:.3f}" for v in par_var)
            + f", P_perp max change {100 * perp_change:.2f}% (< 5%), {dt:.1f}s (< 120s)")


def test_end_to_end_toy_run(verdict, tmp_path):
    from toy_pipeline import run_seed

    t = time.perf_counter()
    runs = [run_seed(seed, tmp_path) for seed in (0, 1, 2)]
    dt = time.perf_counter() - t
    ae_ok = all(r["ae"]["loss_ratio"] >= 2 and r["ae"]["grad_check_rel_error"] < 1e-4 for r in runs)
    den_ok = all(r["denoiser"]["loss_ratio"] >= 2 for r in runs)
    finite = all(math.isfinite(row["FD_framing"]) for r in runs for row in r["sweep"])
    n_fd = sum(r["fd_improved"] for r in runs)
    n_out = sum(r["out_not_worse"] for r in runs)
    for r in runs:
        base = next(row for row in r["sweep"] if row["w_z"] == 0.0)
        best = next(row for row in r["sweep"] if row["w_z"] == r["best_wz"])
        print(f"seed {r['seed']}: ae x{r['ae']['loss_ratio']:.1f} gc {r['ae']['grad_check_rel_error']:.1e}, "
              f"denoiser x{r['denoiser']['loss_ratio']:.1f}, FD {base['FD_framing']:.2f} -> {best['FD_framing']:.2f}, "
              f"out {base['out_rate']:.3f} -> {best['out_rate']:.3f} at w_z={r['best_wz']:g}")
    ok = ae_ok and den_ok and finite and n_fd >= 2 and n_out >= 2 and dt < 900
    verdict("end-to-end toy run", ok,
            f"AE >=2x & gc<1e-4 {ae_ok}, denoiser >=2x {den_ok}, FD finite {finite}, "
            f"FD better {n_fd}/3, out_rate not worse {n_out}/3, {dt:.0f}s (< 900s)")


def test_repaint(verdict):
    s = make_schedule()
    mu = np.array([1.0, -0.5, 0.25, 2.0])
    d = AnalyticGaussianDenoiser(((mu, 1.0),), s)
    known = make_rng(0, 904).standard_normal((200, 3, 4))
    mask = np.array([True, False, True, False])
    out = repaint_inpaint(d, s, 50, known, mask, make_rng(1), jump_length=5, jump_n_sample=2)
    exact = np.array_equal(out[..., mask], known[..., mask])
    n = 4000
    free = repaint_inpaint(d, s, 50, np.zeros((n, 4)), np.zeros(4, bool), make_rng(2))
    plain = ddpm_sample(d, s, 50, (n, 4), make_rng(3))
    gap = float(np.max(np.abs(free.mean(0) - plain.mean(0))))
    band = 5 / math.sqrt(n)
    verdict("RePaint", exact and gap < band,
            f"known channels bit-exact {exact}, all-unknown mean gap {gap:.4f} (< {band:.4f})")


def brute_prdc(real, gen, k):
    def dist(a, b):
        return math.dist(a, b)

    def radius(pts, i):
        return sorted(dist(pts[i], q) for j, q in enumerate(pts) if j != i)[k - 1]

    rr = [radius(real, i) for i in range(len(real))]
    rg = [radius(gen, j) for j in range(len(gen))]
    return {
        "precision": sum(any(dist(g, r) < rr[i] for i, r in enumerate(real)) for g in gen) / len(gen),
        "recall": sum(any(dist(r, g) < rg[j] for j, g in enumerate(gen)) for r in real) / len(real),
        "density": sum(dist(g, r) < rr[i] for g in gen for i, r in enumerate(real)) / (k * len(gen)),
        "coverage": sum(min(dist(r, g) for g in gen) < rr[i] for i, r in enumerate(real)) / len(real),
    }


def test_metric_oracles(verdict):
    def one_d(m, v):
        return GaussianStats(np.array([m]), np.array([[v]]), 10)

    fd_cases = [((0, 1), (0, 1), 0.0), ((0, 1), (1, 1), 1.0), ((0, 1), (0, 4), 1.0),
                ((2, 9), (-1, 0.25), 9 + 2.5**2), ((0.5, 2.0), (0.5, 8.0), 2.0)]
    fd_err = max(abs(frechet_distance(one_d(*a), one_d(*b)) - want) for a, b, want in fd_cases)

    mismatches = instances = 0
    for i in range(200):
        rng = make_rng(i, 905)
        k = int(rng.integers(1, 5))
        n_real, n_gen = (int(v) for v in rng.integers(k + 1, 21, size=2))
        dim = int(rng.integers(1, 4))
        # grid points produce ties and points exactly on a radius
        real = rng.integers(-3, 4, size=(n_real, dim)).astype(float)
        gen = rng.integers(-3, 4, size=(n_gen, dim)) + (0.5 if i % 2 else 0.0)
        got = prdc(real, gen, k)
        want = brute_prdc(real.tolist(), gen.tolist(), k)
        instances += 1
        mismatches += any(abs(got[m] - want[m]) > 1e-12 for m in want)

    f = np.full((2, 18), 2.0)
    f[0, 6:8] = [0.3, -0.2]
    out_ok = (out_rate(np.zeros((3, 18))) == 0.0 and out_rate(np.full((3, 18), 2.0)) == 1.0
              and out_rate(f) == 0.5 and out_rate([f, np.zeros((4, 18))]) == 1 / 6
              and out_rate(np.zeros((2, 18)), in_front=np.zeros((2, 9), bool)) == 1.0)
    verdict("metric oracles", fd_err < 1e-12 and mismatches == 0 and out_ok,
            f"FD 1D max err {fd_err:.1e} (< 1e-12), PRDC mismatches {mismatches}/{instances}, out_rate hand cases {out_ok}")


def test_determinism(verdict, tmp_path):
    from test_cli import run_all

    mp = pytest.MonkeyPatch()
    try:
        a = run_all(tmp_path / "a", mp)
        b = run_all(tmp_path / "b", mp)
    finally:
        mp.undo()
    differ = sorted(name for name in a if a[name] != b.get(name))
    ok = set(a) == set(b) and not differ
    verdict("determinism", ok, f"{len(a)} output files from 7 subcommands, differing: {differ or 'none'}")
