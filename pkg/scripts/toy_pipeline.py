"""Run the full toy pipeline through the CLI for a few seeds and summarise the sweep.

    python scripts/toy_pipeline.py --seeds 0 1 2 --work runs/toy
"""

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from auxguide.cli import main as cli

SWEEP_WZ = "0,1,2"


def run_seed(seed: int, work: Path, n_train: int = 512, n_sample: int = 256, wc: float = 2.0) -> dict:
    d = work / f"seed{seed}"
    d.mkdir(parents=True, exist_ok=True)
    s = str(seed)
    steps = [
        ["gen-data", "--seed", s, "--n", str(n_train), "--out", str(d / "train.jsonl")],
        ["gen-data", "--seed", str(seed + 1000), "--n", str(n_train), "--out", str(d / "ref.jsonl")],
        ["train-ae", "--seed", s, "--dataset", str(d / "train.jsonl"), "--out", str(d / "ae")],
        ["train-denoiser", "--seed", s, "--dataset", str(d / "train.jsonl"),
         "--ae-checkpoint", str(d / "ae"), "--out", str(d / "den")],
        ["sample", "--seed", s, "--checkpoint", str(d / "den"), "--n", str(n_sample),
         "--wc", str(wc), "--wz", "0", "--out", str(d / "gen.jsonl")],
        ["eval", "--dataset", str(d / "gen.jsonl"), "--reference", str(d / "ref.jsonl"), "--out", str(d / "eval")],
        ["sweep", "--seed", s, "--checkpoint", str(d / "den"), "--reference", str(d / "ref.jsonl"),
         "--n", str(n_sample), "--wc", str(wc), "--sweep-wz", SWEEP_WZ, "--out", str(d / "sweep.csv")],
    ]
    for argv in steps:
        code = cli(argv)
        if code != 0:
            raise SystemExit(f"{argv[0]} failed with exit code {code}")
    rows = list(csv.DictReader(open(d / "sweep.csv")))
    rows = [{k: float(v) for k, v in r.items()} for r in rows]
    base = next(r for r in rows if r["w_z"] == 0.0)
    best = min(rows, key=lambda r: r["FD_framing"])
    return {
        "seed": seed,
        "ae": json.loads((d / "ae" / "train_log.json").read_text()),
        "denoiser": json.loads((d / "den" / "train_log.json").read_text()),
        "eval": json.loads((d / "eval" / "metrics.json").read_text()),
        "sweep": rows,
        "best_wz": best["w_z"],
        "fd_improved": best["FD_framing"] < base["FD_framing"],
        "out_not_worse": best["out_rate"] <= base["out_rate"],
    }


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--work", type=Path, default=Path("runs/toy"))
    a = ap.parse_args()
    for seed in a.seeds:
        t = time.time()
        r = run_seed(seed, a.work)
        print(f"seed {seed}: ae x{r['ae']['loss_ratio']:.2f} gc {r['ae']['grad_check_rel_error']:.2g}  "
              f"den x{r['denoiser']['loss_ratio']:.2f}  best w_z {r['best_wz']:g}  "
              f"FD better {r['fd_improved']}  out ok {r['out_not_worse']}  ({time.time() - t:.0f}s)")
        for row in r["sweep"]:
            print("   ", {k: round(v, 4) for k, v in row.items()})
    sys.exit(0)
