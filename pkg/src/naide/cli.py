"""Command-line front end.

Subcommands: corrupt, train, finetune, denoise, eval, check-lemma,
gradcheck. Exit codes: 0 success, 1 usage/configuration error, 2 data
error (unreadable or malformed files), 3 numeric failure (non-finite
loss, failed lemma or gradient check).

Flags override values from an optional JSON config file (flat keys
mirroring TrainConfig); the effective configuration is echoed as
config.json into every output directory so runs can be reproduced.
Only `train` (supervised mode) and `eval` ever read clean images;
`finetune` and `denoise` see the noisy input and sigma alone.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ACTIVATIONS, STOP_RULES, TrainConfig
from .context import context_width
from .denoiser import (
    adaptive_batch_loss_and_grad,
    affine_map,
    denoise_image,
    supervised_loss_and_grad,
    verify_lemma_monte_carlo,
    write_affine_csv,
)
from .errors import ConfigError, DataError, NaideError, ParseError, TrainingError
from .image import load_image, load_pgm, save_image, save_pgm
from .metrics import evaluate_suite, write_metrics_csv
from .mlp import MlpWeights, gradient_check, init_weights
from .noise import NoiseSpec, add_gaussian_noise
from .training import (
    TrainReport,
    adaptive_train_from_scratch,
    fine_tune,
    make_supervised_dataset,
    train_supervised,
)


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; this artifact uses 1."""

    def error(self, message):
        raise ConfigError(message)


def _add_config_flags(sub):
    sub.add_argument("--config", type=Path, default=None, help="JSON file with TrainConfig keys")
    sub.add_argument("--sigma", type=float, default=None, help="noise level in 8-bit units")
    sub.add_argument("--k", type=int, default=None, help="context window size (odd)")
    sub.add_argument("--activation", choices=ACTIVATIONS, default=None)
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--batch-size", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--stop", choices=STOP_RULES, default=None, help="fine-tune stopping rule")
    sub.add_argument(
        "--hidden", default=None, help="comma-separated hidden layer widths, e.g. 64,64,64"
    )


def _config_overrides(args) -> dict:
    """TrainConfig keys set explicitly via this invocation: file then flags."""
    data = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
    flag_map = {
        "sigma": "sigma_255",
        "k": "k",
        "activation": "activation",
        "epochs": "epochs",
        "batch_size": "batch_size",
        "seed": "seed",
        "stop": "stop_rule",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if getattr(args, "hidden", None) is not None:
        try:
            data["hidden"] = [int(w) for w in str(args.hidden).split(",") if w.strip()]
        except ValueError as exc:
            raise ConfigError(f"--hidden must be comma-separated integers: {args.hidden}") from exc
    return data


def _effective_config(args) -> TrainConfig:
    return TrainConfig.from_dict(_config_overrides(args))


def _write_run_outputs(out_dir: Path, config: TrainConfig, weights, report: TrainReport):
    out_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out_dir / "checkpoint.ckpt", weights, config)
    if report.best_weights is not None:
        save_checkpoint(out_dir / "best.ckpt", report.best_weights, config)
    report.to_csv(out_dir / "report.csv")
    (out_dir / "config.json").write_text(config.to_json())


def _k_for_weights(weights: MlpWeights, requested: "int | None") -> int:
    k = math.isqrt(weights.input_width + 1)
    if context_width(k) != weights.input_width:
        raise ConfigError(f"checkpoint input width {weights.input_width} is not k*k-1 for any k")
    if requested is not None and requested != k:
        raise ConfigError(f"checkpoint was built for k={k}, but --k {requested} was given")
    return k


def cmd_corrupt(args) -> int:
    if args.sigma is None:
        raise ConfigError("corrupt requires --sigma")
    clean = load_pgm(args.input)
    spec = NoiseSpec(args.sigma)
    noisy = add_gaussian_noise(clean, spec, 0 if args.seed is None else args.seed)
    out = Path(args.out)
    save_image(noisy, out)
    preview = out.with_suffix(".preview.pgm")
    save_pgm(noisy, preview)
    print(f"wrote {out} and preview {preview}")
    return 0


def cmd_train(args) -> int:
    config = _effective_config(args)
    spec = NoiseSpec(config.sigma_255)
    if args.mode == "supervised":
        paths = []
        for item in args.inputs:
            p = Path(item)
            paths.extend(sorted(p.glob("*.pgm")) if p.is_dir() else [p])
        if not paths:
            raise DataError("no training images found")
        clean = [load_pgm(p) for p in paths]
        dataset = make_supervised_dataset(clean, spec, config.k, config.seed)
        weights, report = train_supervised(dataset, config)
    else:
        if len(args.inputs) != 1:
            raise ConfigError("adaptive mode trains on exactly one noisy image")
        noisy = load_image(Path(args.inputs[0]))
        weights, report = adaptive_train_from_scratch(noisy, spec, config)
    _write_run_outputs(Path(args.out), config, weights, report)
    print(
        f"trained {args.mode}: {len(report.epochs)} epochs, "
        f"final objective {report.final_objective:.6g}, stop reason: {report.stop_reason}"
    )
    return 0


def cmd_finetune(args) -> int:
    weights, stored = load_checkpoint(args.checkpoint)
    k = _k_for_weights(weights, args.k)
    # config layering: checkpoint-stored < JSON file < flags; the network
    # architecture always comes from the checkpoint itself
    merged = stored.to_dict() if stored is not None else {}
    overrides = _config_overrides(args)
    if overrides.get("k", k) != k:
        raise ConfigError(f"checkpoint was built for k={k}, config requests k={overrides['k']}")
    merged.update(overrides)
    merged["k"] = k
    merged["hidden"] = [int(d) for d in weights.dims[1:-1]]
    merged["activation"] = weights.output_activation
    config = TrainConfig.from_dict(merged)
    spec = NoiseSpec(config.sigma_255)
    noisy = load_image(Path(args.input))
    tuned, report = fine_tune(weights, noisy, spec, config)
    _write_run_outputs(Path(args.out), config, tuned, report)
    print(
        f"fine-tuned: {len(report.epochs)} epochs, final objective "
        f"{report.final_objective:.6g}, stop reason: {report.stop_reason}"
    )
    return 0


def cmd_denoise(args) -> int:
    weights, _ = load_checkpoint(args.checkpoint)
    k = _k_for_weights(weights, args.k)
    noisy = load_image(Path(args.input))
    recon = denoise_image(weights, noisy, k)
    save_image(recon, Path(args.out))
    if args.dump_affine is not None:
        write_affine_csv(affine_map(weights, noisy, k), args.dump_affine)
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    weights, stored = load_checkpoint(args.checkpoint)
    k = _k_for_weights(weights, args.k)
    sigma = args.sigma
    if sigma is None and stored is not None:
        sigma = stored.sigma_255
    if sigma is None:
        raise ConfigError("eval requires --sigma (checkpoint carries no config)")
    spec = NoiseSpec(sigma)
    report = evaluate_suite(args.clean_dir, weights, spec, k, 0 if args.seed is None else args.seed)
    write_metrics_csv(report, args.out)
    for m in report.per_image:
        print(f"{m.name}: {m.psnr_db:.3f} dB")
    print(f"mean {report.mean_psnr:.3f} dB, std {report.std_psnr:.3f} dB over {len(report.per_image)} images")
    return 0


def cmd_check_lemma(args) -> int:
    if args.n_samples < 1000:
        print(
            f"warning: n={args.n_samples} is underpowered; use >= 1000 samples",
            file=sys.stderr,
        )
    spec = NoiseSpec(args.sigma)
    check = verify_lemma_monte_carlo(
        args.x, args.a, args.b, spec, args.n_samples, 0 if args.seed is None else args.seed
    )
    print(
        f"empirical {check.empirical_mean:.8f}  closed form {check.closed_form:.8f}  "
        f"std error {check.std_error:.3g}  deviation {check.deviation_sigmas:.2f} SE"
    )
    if check.deviation_sigmas > 4.0:
        print("FAIL: empirical mean deviates by more than 4 standard errors", file=sys.stderr)
        return 3
    return 0


def cmd_gradcheck(args) -> int:
    dims = [int(w) for w in str(args.dims).split(",") if w.strip()]
    seed = 0 if args.seed is None else args.seed
    activation = args.activation or "positive"
    weights = init_weights(dims, activation, seed)
    rng = np.random.default_rng(seed + 1)
    # fresh init has zero biases, which can park hidden pre-activations
    # exactly on the ReLU kink (e.g. when every unit below is dead) where
    # central differences disagree with the subgradient; shift off zero
    for bias in weights.biases[:-1]:
        bias += rng.uniform(0.05, 0.3, size=bias.shape)
    batch = 8
    contexts = rng.uniform(-0.5, 0.5, size=(batch, dims[0]))
    z = rng.uniform(0.0, 1.0, size=batch)
    x = np.clip(z + rng.normal(0.0, 0.05, size=batch), 0.0, 1.0)
    spec = NoiseSpec(25.0)

    checks = [
        ("supervised", lambda w: supervised_loss_and_grad(w, x, z, contexts)),
        ("adaptive", lambda w: adaptive_batch_loss_and_grad(w, z, contexts, spec)),
    ]
    worst = 0.0
    for name, loss_fn in checks:
        err = gradient_check(weights, loss_fn, seed=seed)
        print(f"{name} objective: max relative error {err:.3g}")
        worst = max(worst, err)
    if worst > args.tol:
        print(f"FAIL: relative error {worst:.3g} exceeds tolerance {args.tol:.3g}", file=sys.stderr)
        return 3
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="naide", description="pixel-wise affine image denoiser")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("corrupt", help="add Gaussian noise to a clean PGM")
    p.add_argument("input", type=Path, help="clean PGM image")
    p.add_argument("--out", type=Path, required=True, help="output noisy image (.ngf)")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("train", help="train a denoiser from scratch")
    p.add_argument("inputs", nargs="+", help="clean PGMs/dirs (supervised) or one noisy image (adaptive)")
    p.add_argument("--mode", choices=("supervised", "adaptive"), default="supervised")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="adapt a checkpoint to one noisy image")
    p.add_argument("input", help="noisy image (.ngf or .pgm)")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("denoise", help="apply a checkpoint to a noisy image")
    p.add_argument("input", help="noisy image (.ngf or .pgm)")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output image (.pgm or .ngf)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--dump-affine", type=Path, default=None, help="write per-pixel a,b CSV here")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("eval", help="corrupt+denoise a clean suite and report PSNR")
    p.add_argument("clean_dir", type=Path, help="directory of clean PGM images")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="metrics CSV path")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check-lemma", help="Monte-Carlo check of the estimated-loss identity")
    p.add_argument("--x", type=float, default=0.5, help="clean pixel value")
    p.add_argument("--a", type=float, default=0.8, help="slope")
    p.add_argument("--b", type=float, default=0.1, help="intercept")
    p.add_argument("--sigma", type=float, default=25.5, help="noise level, 8-bit units")
    p.add_argument("--n-samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_check_lemma)

    p = sub.add_parser("gradcheck", help="finite-difference check of both training objectives")
    p.add_argument("--dims", default="8,16,2", help="comma-separated layer widths")
    p.add_argument("--activation", choices=ACTIVATIONS, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NaideError as exc:  # any other package failure counts as data
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
