"""Command line interface.

Subcommands: train, generate, evaluate, account, calibrate, toy.
Errors exit nonzero with a one-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .accountant import (
    DEFAULT_ORDERS,
    calibrate,
    compose_two_systems,
    rdp_to_dp,
    sgm_rdp_curve,
)
from .config import load_config
from .data import RecordSchema, export_csv, load_csv, make_toy_dataset
from .evaluation import dimension_wise_prediction, mmd_squared, tstr_evaluate
from .exceptions import RdpcganError
from .pipeline import load_generator_bundle, run
from .training import sample_synthetic


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rdpcgan",
                                     description="Differentially private synthetic data toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the full configured pipeline")
    p.add_argument("--config", required=True)

    p = sub.add_parser("generate", help="sample synthetic records from a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("evaluate", help="compare a synthetic CSV against a real one")
    p.add_argument("--real", required=True)
    p.add_argument("--synth", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--tstr-runs", type=int, default=10)

    p = sub.add_parser("account", help="privacy budget of one or two SGM mechanisms")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--q2", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--steps2", type=int, default=None)
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("calibrate", help="solve steps (sigma given) or sigma (steps given)")
    p.add_argument("--target-eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("toy", help="write a toy dataset CSV plus its schema")
    p.add_argument("--kind", required=True,
                   choices=["markov_binary", "gaussian_mixture", "two_class"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


def _cmd_train(args) -> dict:
    manifest = run(load_config(args.config))
    return {"out_dir": str(load_config(args.config).out_dir),
            "epsilon": manifest["privacy"]["epsilon"],
            "status": manifest["status"]}


def _cmd_generate(args) -> dict:
    generator, decoder, schema, arch = load_generator_bundle(args.model, args.schema)
    rng = np.random.default_rng(args.seed)
    synth = sample_synthetic(generator, decoder, schema, args.count, rng,
                             noise_dim=arch.noise_dim)
    if schema.target_column is not None:
        raise RdpcganError("checkpoint schema has a target column; generate per-class "
                           "models with the supervised pipeline instead")
    export_csv(synth, args.out)
    return {"out": args.out, "count": args.count}


def _cmd_evaluate(args) -> dict:
    schema_doc = json.loads(Path(args.schema).read_text())
    schema = RecordSchema.from_dict(schema_doc)
    real = load_csv(args.real, schema)
    synth = load_csv(args.synth, schema)
    metrics: dict = {"mmd": mmd_squared(synth.features, real.features).to_dict()}
    if schema.all_binary():
        metrics["dimension_wise"] = dimension_wise_prediction(
            synth, real, top_k=args.top_k).to_dict()
    if real.labels is not None and synth.labels is not None:
        metrics["tstr"] = tstr_evaluate(synth, real, runs=args.tstr_runs).to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    return metrics


def _curve_dict(curve) -> dict:
    return {"orders": list(curve.orders), "epsilons": list(curve.epsilons)}


def _cmd_account(args) -> dict:
    curve1 = sgm_rdp_curve(args.q, args.sigma).scaled(args.steps)
    two = args.q2 is not None or args.sigma2 is not None or args.steps2 is not None
    if two:
        if None in (args.q2, args.sigma2, args.steps2):
            raise RdpcganError("two-mechanism accounting needs --q2, --sigma2 and --steps2")
        curve2 = sgm_rdp_curve(args.q2, args.sigma2).scaled(args.steps2)
        composed = compose_two_systems(curve1, curve2, args.delta)
        result = {
            "mechanisms": [
                {"q": args.q, "sigma": args.sigma, "steps": args.steps},
                {"q": args.q2, "sigma": args.sigma2, "steps": args.steps2},
            ],
            "delta": args.delta,
            "epsilon": composed.guarantee.epsilon,
            "alpha_star": composed.alpha_total,
            "epsilon_rdp_at_alpha_star": composed.epsilon_total_rdp,
            "curve": _curve_dict(curve1.added(curve2)),
        }
    else:
        guarantee = rdp_to_dp(curve1, args.delta)
        result = {
            "mechanisms": [{"q": args.q, "sigma": args.sigma, "steps": args.steps}],
            "delta": args.delta,
            "epsilon": guarantee.epsilon,
            "alpha_star": guarantee.alpha_star,
            "curve": _curve_dict(curve1),
        }
    if not args.as_json:
        print(f"(epsilon = {result['epsilon']:.6f}, delta = {args.delta:g})-DP "
              f"at alpha = {result['alpha_star']:g}")
    return result


def _cmd_calibrate(args) -> dict:
    params = calibrate(args.target_eps, args.delta, args.q,
                       sigma=args.sigma, steps=args.steps)
    achieved = rdp_to_dp(sgm_rdp_curve(params.q, params.sigma).scaled(params.steps),
                         args.delta)
    return {"q": params.q, "sigma": params.sigma, "steps": params.steps,
            "achieved_epsilon": achieved.epsilon, "delta": args.delta}


def _cmd_toy(args) -> dict:
    ds = make_toy_dataset(args.kind, args.n, args.width, args.seed)
    export_csv(ds, args.out)
    schema_path = str(Path(args.out).with_suffix("")) + ".schema.json"
    Path(schema_path).write_text(json.dumps(ds.schema.to_dict(), indent=2) + "\n")
    return {"out": args.out, "schema": schema_path, "n": args.n}


_COMMANDS = {
    "train": _cmd_train,
    "generate": _cmd_generate,
    "evaluate": _cmd_evaluate,
    "account": _cmd_account,
    "calibrate": _cmd_calibrate,
    "toy": _cmd_toy,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        result = _COMMANDS[args.command](args)
    except RdpcganError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
