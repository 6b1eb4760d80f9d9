"""Run configuration: one JSON document drives a whole pipeline run.

Shape (all sections optional unless noted):

    {
      "seed": 7,
      "out_dir": "runs/demo",                    # required
      "data": {"path": "x.csv", "schema": "x.schema.json"}
           or {"toy": {"kind": "markov_binary", "n": 4000, "width": 32}},
      "train_frac": 0.5,
      "arch": {"channels": [8,16,32,64,64], "latent_dim": 128, ...},
      "plan": {"lr": 0.005, "batch_size": 64, "n_ae": 300, "n_gan": 100,
               "n_d": 5, "microbatch_size": 1, "weight_clip": 0.01,
               "sampling": "poisson"},
      "noise": {"clip": 1.0, "sigma_ae": 0.0, "sigma_gan": 0.0},
      "budget": {"target_epsilon": 1.0, "delta": 1e-5, "split": 0.5},
      "loss": "auto",                            # auto | bce | mse
      "supervised": false,
      "variant": "full",                         # ablation switch
      "eval": {"mmd_samples": 2000, "top_k": 10, "tstr_runs": 10,
               "dimension_seeds": [0]}
    }

Omitting "budget" (or setting it null) trains without a privacy target
(the epsilon = infinity setting when the sigmas are zero).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import RecordSchema
from .exceptions import ConfigError
from .models import ArchConfig
from .training import ABLATION_VARIANTS, TrainPlan


@dataclass
class EvalOptions:
    mmd_samples: int = 2000
    top_k: int = 10
    tstr_runs: int = 10
    dimension_seeds: tuple[int, ...] = (0,)


@dataclass
class RunConfig:
    out_dir: Path
    seed: int = 0
    data: dict = field(default_factory=dict)
    train_frac: float = 0.5
    arch_options: dict = field(default_factory=dict)
    plan: TrainPlan = field(default_factory=TrainPlan)
    clip: float = 1.0
    sigma_ae: float = 0.0
    sigma_gan: float = 0.0
    loss: str = "auto"
    supervised: bool = False
    variant: str = "full"
    eval_options: EvalOptions = field(default_factory=EvalOptions)
    raw: dict = field(default_factory=dict)

    def arch_for(self, schema: RecordSchema) -> ArchConfig:
        opts = dict(self.arch_options)
        opts.setdefault("input_width", schema.input_width)
        if "channels" in opts:
            opts["channels"] = tuple(opts["channels"])
        return ArchConfig(**opts)


def _expect_keys(section: dict, allowed: set[str], where: str) -> None:
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, base_dir=path.parent)


def parse_config(raw: dict, base_dir: Path = Path(".")) -> RunConfig:
    _expect_keys(raw, {"seed", "out_dir", "data", "train_frac", "arch", "plan",
                       "noise", "budget", "loss", "supervised", "variant", "eval"},
                 "config")
    if "out_dir" not in raw:
        raise ConfigError("config needs an out_dir")
    data = raw.get("data", {})
    if "path" in data:
        data = dict(data)
        data["path"] = str((base_dir / data["path"]))
        if "schema" in data:
            data["schema"] = str(base_dir / data["schema"])

    plan_raw = dict(raw.get("plan", {}))
    _expect_keys(plan_raw, {"lr", "batch_size", "microbatch_size", "n_ae", "n_gan",
                            "n_d", "weight_clip", "sampling"}, "plan")
    budget = raw.get("budget") or {}
    _expect_keys(budget, {"target_epsilon", "delta", "split"}, "budget")
    plan = TrainPlan(
        seed=int(raw.get("seed", 0)),
        target_epsilon=budget.get("target_epsilon"),
        delta=float(budget.get("delta", 1e-5)),
        budget_split=float(budget.get("split", 0.5)),
        **plan_raw,
    )
    noise = raw.get("noise", {})
    _expect_keys(noise, {"clip", "sigma_ae", "sigma_gan"}, "noise")
    eval_raw = dict(raw.get("eval", {}))
    _expect_keys(eval_raw, {"mmd_samples", "top_k", "tstr_runs", "dimension_seeds"}, "eval")
    if "dimension_seeds" in eval_raw:
        eval_raw["dimension_seeds"] = tuple(eval_raw["dimension_seeds"])
    variant = raw.get("variant", "full")
    if variant not in ABLATION_VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}; choose from {ABLATION_VARIANTS}")
    return RunConfig(
        out_dir=base_dir / raw["out_dir"],
        seed=int(raw.get("seed", 0)),
        data=data,
        train_frac=float(raw.get("train_frac", 0.5)),
        arch_options=dict(raw.get("arch", {})),
        plan=plan,
        clip=float(noise.get("clip", 1.0)),
        sigma_ae=float(noise.get("sigma_ae", 0.0)),
        sigma_gan=float(noise.get("sigma_gan", 0.0)),
        loss=raw.get("loss", "auto"),
        supervised=bool(raw.get("supervised", False)),
        variant=variant,
        eval_options=EvalOptions(**eval_raw),
        raw=raw,
    )
