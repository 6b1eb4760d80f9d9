"""End-to-end run: train, sample, evaluate, and persist artifacts.

Every run writes into its out_dir:
    model.ckpt            all network tensors (binary container)
    model.ckpt.meta.json  schema + architecture sidecar for `generate`
    synthetic.csv         decoded synthetic records, |D_syn| = |D_train|
    report.json/.txt      evaluation metrics
    manifest.json         config echo, ledger, guarantees, artifact hashes

Manifests contain no timestamps, so identical (config, seed) runs yield
byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import Dataset, RecordSchema, export_csv, load_csv, make_toy_dataset, split
from .dp import NoiseConfig
from .evaluation import dimension_wise_prediction, mmd_squared, top_k_features, tstr_evaluate
from .exceptions import ConfigError, DataError
from .models import ArchConfig, build_decoder, build_generator
from .nn.checkpoint import load_params, save_params
from .training import (
    SupervisedModels,
    TrainedModel,
    TrainPlan,
    arch_for_variant,
    sample_supervised,
    sample_synthetic,
    train_model,
    train_supervised,
)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_data(cfg: RunConfig) -> Dataset:
    data = cfg.data
    if "path" in data:
        if "schema" not in data:
            raise ConfigError("data.path needs a matching data.schema")
        return load_csv(data["path"], data["schema"])
    if "toy" in data:
        toy = dict(data["toy"])
        kind = toy.pop("kind")
        return make_toy_dataset(kind, seed=toy.pop("seed", cfg.seed), **toy)
    raise ConfigError("config data section needs either path/schema or toy")


def _evaluate(cfg: RunConfig, schema: RecordSchema, train: Dataset, test: Dataset,
              synth: Dataset, rng: np.random.Generator) -> dict:
    opts = cfg.eval_options
    metrics: dict = {}
    cap = opts.mmd_samples

    def sample_rows(ds: Dataset) -> np.ndarray:
        rows = ds.features
        if len(rows) > cap:
            rows = rows[rng.choice(len(rows), cap, replace=False)]
        return rows

    metrics["mmd"] = mmd_squared(sample_rows(synth), sample_rows(test)).to_dict()
    if schema.all_binary():
        features = top_k_features(train.features, opts.top_k)
        synth_report = dimension_wise_prediction(
            synth, test, seeds=opts.dimension_seeds, features=features)
        real_report = dimension_wise_prediction(
            train, test, seeds=opts.dimension_seeds, features=features)
        metrics["dimension_wise"] = {
            "synthetic": synth_report.to_dict(),
            "real_baseline": real_report.to_dict(),
        }
    if train.labels is not None and synth.labels is not None:
        metrics["tstr"] = tstr_evaluate(synth, test, runs=opts.tstr_runs).to_dict()
        metrics["trtr"] = tstr_evaluate(train, test, runs=opts.tstr_runs).to_dict()
    return metrics


def _report_text(metrics: dict) -> str:
    lines = []
    if "mmd" in metrics:
        m = metrics["mmd"]
        lines.append(f"MMD^2 = {m['mmd_squared']:.6f} (bandwidth {m['bandwidth']:.4f}, "
                     f"samples {m['sample_sizes']})")
    if "dimension_wise" in metrics:
        d = metrics["dimension_wise"]
        lines.append(f"dimension-wise mean F1: synthetic {d['synthetic']['mean_f1']:.4f} "
                     f"vs real baseline {d['real_baseline']['mean_f1']:.4f}")
    if "tstr" in metrics:
        t = metrics["tstr"]["auroc"]
        r = metrics["trtr"]["auroc"]
        lines.append(f"TSTR AUROC {t['mean']:.4f} +/- {t['std']:.4f} "
                     f"(train-on-real {r['mean']:.4f} +/- {r['std']:.4f})")
    return "\n".join(lines) + "\n"


def _manifest_privacy(cfg: RunConfig, ledgers: list) -> dict:
    out = {
        "target_epsilon": cfg.plan.target_epsilon,
        "delta": cfg.plan.delta,
        "mechanisms": [led.snapshot() for led in ledgers],
    }
    epsilons = [s["epsilon"] for s in out["mechanisms"]]
    if any(e == "infinity" for e in epsilons):
        out["epsilon"] = "infinity"
    else:
        out["epsilon"] = max(epsilons)
    return out


def save_model_bundle(path: Path, model: TrainedModel, schema: RecordSchema,
                      cfg_raw: dict) -> None:
    save_params(path, model.params_bundle())
    meta = {
        "schema": schema.to_dict(),
        "arch": asdict(model.arch),
        "config": cfg_raw,
    }
    Path(str(path) + ".meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_generator_bundle(path, schema_path=None):
    """Rebuild the generator + decoder pair from a checkpoint for sampling."""
    path = Path(path)
    meta_path = Path(str(path) + ".meta.json")
    if not meta_path.exists():
        raise DataError(f"missing sidecar {meta_path}; cannot rebuild networks")
    meta = json.loads(meta_path.read_text())
    schema_doc = meta["schema"]
    if schema_path is not None:
        schema_doc = json.loads(Path(schema_path).read_text())
    schema = RecordSchema.from_dict(schema_doc)
    arch_raw = dict(meta["arch"])
    arch_raw["channels"] = tuple(arch_raw["channels"])
    arch = ArchConfig(**arch_raw)
    tensors = load_params(path)
    rng = np.random.default_rng(0)
    generator = build_generator(arch, rng)
    generator.set_params(_segment(tensors, "generator"))
    decoder = None
    if arch.use_autoencoder:
        decoder = build_decoder(arch, rng)
        decoder.set_params(_segment(tensors, "decoder"))
    return generator, decoder, schema, arch


def _segment(tensors: dict, role: str) -> dict:
    prefix = role + "/"
    return {k[len(prefix):]: v for k, v in tensors.items() if k.startswith(prefix)}


def run(config: RunConfig) -> dict:
    """Execute the configured pipeline; returns the manifest dict."""
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ledgers = []
    try:
        manifest = _run_stages(config, out_dir, ledgers)
    except Exception as exc:
        partial = {
            "status": "error",
            "error": {"type": type(exc).__name__, "message": str(exc)},
            "config": config.raw,
            "privacy": _manifest_privacy(config, ledgers) if ledgers else None,
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(partial, sort_keys=True, indent=2) + "\n")
        raise
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return manifest


def _run_stages(cfg: RunConfig, out_dir: Path, ledgers: list) -> dict:
    dataset = _load_data(cfg)
    train, test = split(dataset, cfg.train_frac, seed=cfg.seed)
    schema = dataset.schema
    arch = arch_for_variant(cfg.arch_for(schema), cfg.variant)
    noise_ae = NoiseConfig(cfg.clip, cfg.sigma_ae, "autoencoder")
    noise_gan = NoiseConfig(cfg.clip, cfg.sigma_gan, "discriminator")
    synth_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 3]))

    if cfg.supervised:
        models = train_supervised(train, cfg.plan, noise_ae, noise_gan, arch,
                                  loss_kind=cfg.loss)
        for m in models.models.values():
            ledgers.append(m.ledger)
        synth = sample_supervised(models, len(train), synth_rng)
        bundle_model = models.models[sorted(models.models)[0]]
        audits = {str(c): m.audit.reads for c, m in models.models.items()}
    else:
        model = train_model(train, cfg.plan, noise_ae, noise_gan, arch,
                            loss_kind=cfg.loss)
        ledgers.append(model.ledger)
        synth = sample_synthetic(model.generator, model.decoder, schema, len(train),
                                 synth_rng, noise_dim=arch.noise_dim)
        bundle_model = model
        audits = model.audit.reads

    ckpt = out_dir / "model.ckpt"
    save_model_bundle(ckpt, bundle_model, schema, cfg.raw)
    synth_path = out_dir / "synthetic.csv"
    export_csv(synth, synth_path)

    metrics = _evaluate(cfg, schema, train, test, synth, eval_rng)
    (out_dir / "report.json").write_text(
        json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    (out_dir / "report.txt").write_text(_report_text(metrics))

    manifest = {
        "status": "ok",
        "config": cfg.raw,
        "seed": cfg.seed,
        "data": {
            "n_train": len(train),
            "n_test": len(test),
            "input_width": schema.input_width,
            "encoded_width": schema.encoded_width,
        },
        "privacy": _manifest_privacy(cfg, ledgers),
        "access_audit": audits,
        "metrics": metrics,
        "artifacts": {
            "model": ckpt.name,
            "synthetic": synth_path.name,
            "sha256": {
                ckpt.name: _sha256(ckpt),
                synth_path.name: _sha256(synth_path),
            },
        },
    }
    return manifest
