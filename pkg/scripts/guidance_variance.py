"""Sample an isotropic Gaussian with the exact denoiser and show how the framing
weight w_z shrinks the spread along the framing subspace only.

    python scripts/guidance_variance.py --n 10000 --steps 50
"""

import argparse

import numpy as np

from auxguide.decomposition import decompose
from auxguide.diffusion import AnalyticGaussianDenoiser, GuidanceWeights, ddpm_sample, make_schedule
from auxguide.linalg import projector_pair
from auxguide.rng import make_rng

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--d-z", type=int, default=3)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--wz", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0, 2.0])
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    sched = make_schedule()
    rng = make_rng(a.seed, 0)
    proj = projector_pair(rng.standard_normal((a.d_z, a.dim)))
    model = AnalyticGaussianDenoiser(((rng.standard_normal(a.dim), 1.0),), sched)
    print(f"{'w_z':>6}{'var par / dim':>16}{'var perp / dim':>16}")
    for i, wz in enumerate(a.wz):
        x = ddpm_sample(model, sched, a.steps, (a.n, a.dim), make_rng(a.seed, 1, i),
                        parallel=proj, w=GuidanceWeights(0.0, wz))
        perp, par = decompose(x, proj)
        print(f"{wz:>6g}{np.trace(np.cov(par.T)) / a.d_z:>16.4f}{np.trace(np.cov(perp.T)) / (a.dim - a.d_z):>16.4f}")
