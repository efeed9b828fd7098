"""``grnndelay`` command line: generate, train, tune, estimate, evaluate.

Every command writes its outputs atomically plus a ``<out>.manifest.json``
sidecar holding the fully resolved parameters and the argument list, so
``main(manifest["argv"])`` reruns the command.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__, _backend
from ._io import atomic_write, fmt
from .dataset import Dataset, load_conditions_csv, load_csv, save_csv, split
from .ga import FITNESS_PROTOCOLS, SIGMA_MODES, GaConfig
from .ga import run as run_ga
from .grnn import Sigma, estimate_batch, fit, load_model, save_model
from .metrics import evaluate
from .tracegen import GenConfig, from_mapping, generate, header_comment, read_config

_GEN_FLAGS = {
    "base_delay_ms": float, "propagation_ms_per_m": float, "load_exponent": float,
    "contention_gain_ms": float, "device_gain_ms": float, "rung_gain_ms": float,
    "noise_cv": float,
    "loading_min": float, "loading_max": float, "length_min": float, "length_max": float,
    "contention_min": float, "contention_max": float, "devices_min": int,
    "devices_max": int, "plc_rungs_min": int, "plc_rungs_max": int,
}
_GA_FLAGS = {
    "population": "population_size", "generations": "generations",
    "crossover_rate": "crossover_rate", "mutation_rate": "mutation_rate",
    "mutation_scale": "mutation_scale", "tournament_size": "tournament_size",
    "elitism": "elitism_count", "holdout_fraction": "holdout_fraction",
    "early_stop": "early_stop",
}


class CliError(Exception):
    pass


def _manifest(args, params: dict, inputs: dict, outputs: dict) -> None:
    doc = {
        "tool": "grnndelay",
        "version": __version__,
        "kernel_backend": _backend.BACKEND,
        "command": args.command,
        "argv": [str(a) for a in args.argv],
        "params": params,
        "seed": params.get("seed"),
        "inputs": inputs,
        "outputs": outputs,
    }
    with atomic_write(f"{args.out}.manifest.json") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_sigma(text: str) -> Sigma:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"--sigma must be a number or 5 comma-separated numbers, got {text!r}")
    return Sigma(values)


def _training_side(args) -> tuple[Dataset, dict]:
    ds = load_csv(args.input)
    outputs = {}
    if args.train_fraction is None:
        if args.test_out:
            raise CliError("--test-out needs --train-fraction")
        return ds, outputs
    train, test = split(ds, args.train_fraction, args.seed)
    if args.test_out:
        save_csv(test, args.test_out)
        outputs["test"] = str(args.test_out)
    return train, outputs


def cmd_generate(args) -> None:
    cfg = read_config(args.config) if args.config else GenConfig()
    overrides = {k: getattr(args, k) for k in _GEN_FLAGS if getattr(args, k) is not None}
    if args.n is not None:
        overrides["n_samples"] = args.n
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = from_mapping(overrides, cfg)
    save_csv(generate(cfg), args.out, comment=header_comment(cfg))
    params = cfg.to_dict()
    for name, (lo, hi) in params.pop("ranges").items():
        params[f"{name}_min"], params[f"{name}_max"] = lo, hi
    _manifest(args, params, {"config": str(args.config) if args.config else None},
              {"dataset": str(args.out)})
    print(f"wrote {cfg.n_samples} rows to {args.out}")


def cmd_train(args) -> None:
    sigma = _parse_sigma(args.sigma)
    train, outputs = _training_side(args)
    model = fit(train, sigma)
    save_model(model, args.out)
    outputs["model"] = str(args.out)
    params = {"sigma": args.sigma, "seed": args.seed, "train_fraction": args.train_fraction}
    _manifest(args, params, {"dataset": str(args.input)}, outputs)
    print(f"sigma={','.join(fmt(v) for v in sigma.values)} patterns={len(model)}")


def cmd_tune(args) -> None:
    kwargs = {field: getattr(args, flag) for flag, field in _GA_FLAGS.items()
              if getattr(args, flag) is not None}
    cfg = GaConfig(seed=args.seed, sigma_mode=args.sigma_mode,
                   fitness_protocol=args.fitness_protocol, **kwargs)
    train, outputs = _training_side(args)
    result = run_ga(train, cfg, workers=args.workers)
    model = fit(train, result.best_sigma)
    history = args.history or f"{args.out}.history.csv"
    save_model(model, args.out)
    result.write_history(history)
    outputs.update(model=str(args.out), history=str(history))
    params = {**cfg.to_dict(), "train_fraction": args.train_fraction}
    _manifest(args, params, {"dataset": str(args.input)}, outputs)
    sigma = ",".join(f"{v:.6g}" for v in result.best_sigma.values)
    print(f"best_mape={result.best_mape:.4f}% sigma={sigma}")


def cmd_estimate(args) -> None:
    model = load_model(args.model)
    conds = load_conditions_csv(args.input)
    preds = estimate_batch(model, conds)
    with atomic_write(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("row", "predicted_ms"))
        for i, p in enumerate(preds, start=1):
            w.writerow([i, fmt(p)])
    _manifest(args, {}, {"model": str(args.model), "conditions": str(args.input)},
              {"predictions": str(args.out)})
    print(f"wrote {len(preds)} predictions to {args.out}")


def cmd_evaluate(args) -> None:
    model = load_model(args.model)
    test = load_csv(args.input)
    predictions = args.predictions or f"{args.out}.predictions.csv"
    report = evaluate(model, test, predictions_path=predictions)
    report.write_csv(args.out)
    _manifest(args, {}, {"model": str(args.model), "dataset": str(args.input)},
              {"report": str(args.out), "predictions": str(predictions)})
    print(report.summary())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grnndelay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic delay trace CSV")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--n", type=int, help="number of rows")
    g.add_argument("--seed", type=int)
    g.add_argument("--config", type=Path, help="key=value generator settings")
    for key, typ in _GEN_FLAGS.items():
        g.add_argument(f"--{key.replace('_', '-')}", dest=key, type=typ)
    g.set_defaults(func=cmd_generate)

    def labeled(sp):
        sp.add_argument("--in", dest="input", required=True, type=Path)
        sp.add_argument("--out", required=True, type=Path, help="model JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--train-fraction", type=float,
                        help="split the input and keep this fraction for training")
        sp.add_argument("--test-out", type=Path, help="write the held-out rows here")

    t = sub.add_parser("train", help="fit a GRNN with a fixed sigma")
    labeled(t)
    t.add_argument("--sigma", required=True,
                   help="isotropic value or 5 comma-separated per-feature values")
    t.set_defaults(func=cmd_train)

    u = sub.add_parser("tune", help="GA-tune sigma, then fit")
    labeled(u)
    u.add_argument("--sigma-mode", choices=SIGMA_MODES, default="isotropic")
    u.add_argument("--fitness-protocol", choices=FITNESS_PROTOCOLS, default="leave-one-out")
    u.add_argument("--history", type=Path, help="GA history CSV (default <out>.history.csv)")
    u.add_argument("--workers", type=int, default=1, help="threads for fitness evaluation")
    for flag in _GA_FLAGS:
        typ = float if "rate" in flag or flag in ("mutation_scale", "holdout_fraction") else int
        u.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ)
    u.set_defaults(func=cmd_tune)

    e = sub.add_parser("estimate", help="predict delays for a conditions CSV")
    e.add_argument("--model", required=True, type=Path)
    e.add_argument("--in", dest="input", required=True, type=Path)
    e.add_argument("--out", required=True, type=Path)
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("evaluate", help="score a model on a labeled CSV")
    v.add_argument("--model", required=True, type=Path)
    v.add_argument("--in", dest="input", required=True, type=Path)
    v.add_argument("--out", required=True, type=Path, help="report CSV")
    v.add_argument("--predictions", type=Path,
                   help="per-row CSV (default <out>.predictions.csv)")
    v.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    try:
        args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"grnndelay {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
