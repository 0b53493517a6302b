"""Command-line driver.

    python -m auxguide gen-data --seed 0 --n 512 --out data/train.jsonl
    python -m auxguide train-ae --dataset data/train.jsonl --out ckpt/ae
    python -m auxguide train-denoiser --dataset data/train.jsonl --ae-checkpoint ckpt/ae --out ckpt/den
    python -m auxguide sample --checkpoint ckpt/den --wc 2 --wz 0.5 --out gen.jsonl
    python -m auxguide eval --dataset gen.jsonl --reference data/ref.jsonl --out report
    python -m auxguide verify-lemma --seed 7 --n 100000
    python -m auxguide sweep --checkpoint ckpt/den --reference data/ref.jsonl --wz 0,0.25,0.5 --out sweep.csv

Every option can also come from a JSON object passed with ``--config``
(keys are option names with dashes or underscores); flags on the command
line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import autoencoder as ae
from .checkpoint import load_checkpoint, save_checkpoint
from .dataset import read_records, write_records
from .decomposition import IsotropicGaussian, cochran_check, conditional_mean, density_factor_check
from .diffusion import DenoiserConfig, DenoiserTrainConfig, GuidanceWeights, MLPDenoiser, denoiser_grad_check, make_schedule
from .errors import AuxGuideError, ConfigError
from .linalg import projector_pair
from .pipeline import (
    LatentStats,
    decode_records,
    encode_records,
    evaluate,
    fit_latent_denoiser,
    framing_projector,
    label_indices,
    sample_latents,
)
from .rng import make_rng
from .synthetic import GenConfig, generate_dataset, label_schedule, uniform_mix

log = logging.getLogger("auxguide")

SWEEP_COLUMNS = ("w_c", "w_z", "FD_framing", "out_rate", "FD_feat", "coverage_framing")


def _floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _ae_checkpoint(path):
    params, config = load_checkpoint(path, kind="autoencoder")
    return params, ae.AEConfig.from_dict(config["model"])


def _denoiser_checkpoint(path):
    params, config = load_checkpoint(path, kind="denoiser")
    cfg = DenoiserConfig.from_dict(config["model"])
    sched = make_schedule(**config["schedule"])
    stats = LatentStats(mean=params.pop("latent.mean"), scale=float(params.pop("latent.scale")[0]))
    return MLPDenoiser(params=params, cfg=cfg, T=sched.T), stats, sched, config


# --- subcommands -----------------------------------------------------------------


def cmd_gen_data(a) -> int:
    cfg = GenConfig(frames=a.frames, fps=a.fps, seed=a.seed)
    recs = generate_dataset(a.n, cfg, path=a.out, with_world=a.world)
    log.info("wrote %d records to %s", len(recs), a.out)
    return 0


def cmd_train_ae(a) -> int:
    records = read_records(a.dataset)
    cfg = ae.AEConfig(d_z=a.d_z)
    hp = ae.AETrainConfig(steps=a.train_steps, batch_size=a.batch_size, lr=a.lr, warmup=a.warmup, seed=a.seed)
    params, tlog = ae.train_autoencoder(records, cfg, hp)
    batch = ae.stack_records(records[: min(4, len(records))])
    tlog.grad_check_error = ae.ae_grad_check(params, cfg, batch, seed=a.seed)
    out = Path(a.out)
    save_checkpoint(out, "autoencoder", params, {"model": cfg.to_dict(), "train": vars(hp)})
    report = {
        "initial_loss": tlog.initial_loss,
        "final_loss": tlog.final_loss,
        "loss_ratio": tlog.initial_loss / tlog.final_loss,
        "grad_check_rel_error": tlog.grad_check_error,
        "framing_condition": ae.framing_condition(params),
        "history": tlog.history,
    }
    _write_json(out / "train_log.json", report)
    print(f"ae loss {tlog.initial_loss:.5f} -> {tlog.final_loss:.5f}, grad-check {tlog.grad_check_error:.3g}")
    return 0


def cmd_train_denoiser(a) -> int:
    if not a.ae_checkpoint:
        raise ConfigError("train-denoiser needs --ae-checkpoint")
    records = read_records(a.dataset)
    ae_params, ae_cfg = _ae_checkpoint(a.ae_checkpoint)
    latents = encode_records(ae_params, ae_cfg, records)
    labels = label_indices(records)
    sched_cfg = {"T": a.T, "beta_start": a.beta_start, "beta_end": a.beta_end}
    sched = make_schedule(**sched_cfg)
    cfg = DenoiserConfig(width=ae_cfg.d_u, hidden=tuple(a.hidden))
    hp = DenoiserTrainConfig(steps=a.train_steps, batch_size=a.batch_size, lr=a.lr, warmup=a.warmup,
                             cond_dropout=a.cond_dropout, seed=a.seed)
    model, stats, dlog = fit_latent_denoiser(latents, labels, sched, cfg, hp)
    gc = denoiser_grad_check(model, stats.normalize(latents), labels, sched, seed=a.seed)
    params = dict(model.params)
    params["latent.mean"] = stats.mean
    params["latent.scale"] = np.array([stats.scale])
    config = {"model": cfg.to_dict(), "train": vars(hp), "schedule": sched_cfg,
              "ae_checkpoint": str(a.ae_checkpoint), "n_latent_frames": int(latents.shape[1])}
    out = Path(a.out)
    save_checkpoint(out, "denoiser", params, config)
    _write_json(out / "train_log.json", {
        "initial_loss": dlog.initial_loss,
        "final_loss": dlog.final_loss,
        "loss_ratio": dlog.initial_loss / dlog.final_loss,
        "grad_check_rel_error": gc,
        "history": dlog.history,
    })
    print(f"denoiser loss {dlog.initial_loss:.5f} -> {dlog.final_loss:.5f}, grad-check {gc:.3g}")
    return 0


def _generate(a, w: GuidanceWeights, model=None):
    model, stats, sched, config = model or _denoiser_checkpoint(a.checkpoint)
    ae_params, ae_cfg = _ae_checkpoint(a.ae_checkpoint or config["ae_checkpoint"])
    if a.frames % ae_cfg.ds:
        raise ConfigError(f"--frames must be a multiple of {ae_cfg.ds}")
    labels = [lab.index for lab in label_schedule(a.n, uniform_mix(), a.seed)]
    proj = framing_projector(ae_params)
    latents = sample_latents(model, stats, sched, labels, a.frames // ae_cfg.ds, a.steps, proj, w, a.seed)
    return decode_records(ae_params, ae_cfg, latents, labels, a.fps)


def cmd_sample(a) -> int:
    recs = _generate(a, GuidanceWeights(a.wc[0], a.wz[0]))
    write_records(a.out, recs)
    log.info("wrote %d samples to %s", len(recs), a.out)
    return 0


def _report_rows(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "value"])
    for k in sorted(report):
        w.writerow([k, repr(float(report[k]))])
    return buf.getvalue()


def cmd_eval(a) -> int:
    if not a.reference:
        raise ConfigError("eval needs --reference")
    report = evaluate(read_records(a.dataset), read_records(a.reference), k=a.k)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(_report_rows(report))
    _write_json(out / "metrics.json", report)
    for k in sorted(report):
        print(f"{k:<20}{report[k]:.6g}")
    return 0


def cmd_verify_lemma(a) -> int:
    rng = make_rng(a.seed, 50)
    f = rng.standard_normal((a.d_z, a.dim))
    g = IsotropicGaussian(mu=rng.standard_normal(a.dim), sigma=a.sigma)
    proj = projector_pair(f)
    rep = cochran_check(g, proj, a.n, a.seed)
    dens = density_factor_check(g, proj, 1000, a.seed)
    z = f @ g.mu + rng.standard_normal(a.d_z)
    cm = conditional_mean(g, f, z)
    image_err = float(np.max(np.abs(f @ cm - z)))
    lines = [rep.table(),
             f"{'density factorisation':<24}{dens:>14.6g}{1e-8:>14.6g}  {'pass' if dens < 1e-8 else 'FAIL'}",
             f"{'F E[u|z] - z':<24}{image_err:>14.6g}{1e-9:>14.6g}  {'pass' if image_err < 1e-9 else 'FAIL'}"]
    ok = rep.passed and dens < 1e-8 and image_err < 1e-9
    print("\n".join(lines))
    print("all checks passed" if ok else "verification FAILED")
    if a.out:
        _write_json(Path(a.out), {
            "n_samples": a.n, "dim": a.dim, "d_z": a.d_z, "sigma": a.sigma, "passed": ok,
            "checks": [{"name": c.name, "deviation": c.deviation, "band": c.band} for c in rep.checks],
            "density_mismatch": dens, "conditional_mean_image_error": image_err,
        })
    return 0 if ok else 1


def sweep_rows(a, reference) -> list[dict]:
    loaded = _denoiser_checkpoint(a.checkpoint)
    rows = []
    for wc in a.wc:
        for wz in a.wz:
            gen = _generate(a, GuidanceWeights(wc, wz), loaded)
            rep = evaluate(gen, reference, k=a.k)
            rows.append({"w_c": wc, "w_z": wz, **{c: rep[c] for c in SWEEP_COLUMNS[2:]}})
            log.info("w_c=%g w_z=%g FD_framing=%.4f out_rate=%.4f", wc, wz, rep["FD_framing"], rep["out_rate"])
    return rows


def cmd_sweep(a) -> int:
    if not a.reference:
        raise ConfigError("sweep needs --reference")
    rows = sweep_rows(a, read_records(a.reference))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) for k, v in r.items()})
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(buf.getvalue())
    print(buf.getvalue(), end="")
    return 0


# --- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="JSON file of option values; flags override it")
    common.add_argument("-v", "--verbose", action="store_true")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--frames", type=int, default=64)
    data.add_argument("--fps", type=float, default=30.0)
    data.add_argument("--n", type=int, default=512, help="number of sequences")

    train = argparse.ArgumentParser(add_help=False)
    train.add_argument("--dataset", required=False)
    train.add_argument("--out", required=False)
    train.add_argument("--train-steps", type=int)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--lr", type=float, default=1e-3)
    train.add_argument("--warmup", type=int, default=100)

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--checkpoint", help="denoiser checkpoint directory")
    gen.add_argument("--ae-checkpoint", help="defaults to the one recorded in the denoiser checkpoint")
    gen.add_argument("--steps", type=int, default=50, help="sampling steps")
    gen.add_argument("--wc", type=_floats, default=[0.0], help="classifier-free weight(s)")
    gen.add_argument("--wz", type=_floats, default=[0.0], help="framing guidance weight(s)")
    gen.add_argument("--out")

    p = argparse.ArgumentParser(prog="auxguide", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-data", parents=[common, data], help="generate a synthetic dataset")
    s.add_argument("--out", required=False)
    s.add_argument("--world", action="store_true", help="also store raw world trajectories")
    s.set_defaults(func=cmd_gen_data, required_opts=("out",))

    s = sub.add_parser("train-ae", parents=[common, train], help="train the autoencoder")
    s.add_argument("--d-z", type=int, default=64)
    s.set_defaults(func=cmd_train_ae, train_steps=800, batch_size=32, required_opts=("dataset", "out"))

    s = sub.add_parser("train-denoiser", parents=[common, train], help="train the latent denoiser")
    s.add_argument("--ae-checkpoint")
    s.add_argument("--hidden", type=lambda t: [int(v) for v in _floats(t)], default=[256, 256])
    s.add_argument("--cond-dropout", type=float, default=0.1)
    s.add_argument("--T", type=int, default=1000)
    s.add_argument("--beta-start", type=float, default=1e-4)
    s.add_argument("--beta-end", type=float, default=2e-2)
    s.set_defaults(func=cmd_train_denoiser, train_steps=1500, batch_size=16,
                   required_opts=("dataset", "out", "ae_checkpoint"))

    s = sub.add_parser("sample", parents=[common, data, gen], help="sample with guidance")
    s.set_defaults(func=cmd_sample, required_opts=("checkpoint", "out"))

    s = sub.add_parser("eval", parents=[common], help="metrics of a sample file against a reference")
    s.add_argument("--dataset", help="generated records")
    s.add_argument("--reference", help="reference records")
    s.add_argument("--out", help="report directory")
    s.add_argument("--k", type=int, default=5)
    s.set_defaults(func=cmd_eval, required_opts=("dataset", "reference", "out"))

    s = sub.add_parser("verify-lemma", parents=[common], help="Monte Carlo checks of the orthogonal split")
    s.add_argument("--n", type=int, default=100_000)
    s.add_argument("--dim", type=int, default=8)
    s.add_argument("--d-z", type=int, default=3)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--out", help="optional JSON report")
    s.set_defaults(func=cmd_verify_lemma, required_opts=())

    s = sub.add_parser("sweep", parents=[common, data, gen], help="grid over w_c x w_z")
    s.add_argument("--sweep-wz", type=_floats, dest="wz", help="same as --wz")
    s.add_argument("--reference")
    s.add_argument("--k", type=int, default=5)
    s.set_defaults(func=cmd_sweep, required_opts=("checkpoint", "reference", "out"))
    return p


def _apply_config(parser, argv, args):
    """Re-parse with values from ``--config`` as defaults."""
    try:
        values = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(values, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {act.dest for act in sub._actions}
    defaults = {}
    for key, val in values.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        if dest in ("wc", "wz"):
            val = _floats(val)
        defaults[dest] = val
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.config:
            args = _apply_config(parser, argv, args)
        missing = [o for o in args.required_opts if getattr(args, o, None) in (None, "")]
        if missing:
            raise ConfigError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
        return args.func(args)
    except (AuxGuideError, OSError, ValueError, KeyError) as exc:
        print(f"auxguide {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
