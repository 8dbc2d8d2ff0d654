"""Command-line entry point: gen-synth, train, posttrain, eval, preprocess.

Every command takes an optional ``--config`` JSON file; explicit flags
override it. The resolved configuration is written into each artifact and
nothing time-dependent is, so reruns produce identical bytes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import metrics
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import (
    MULTICLASS,
    DatasetFormatError,
    filter_by_mi,
    gen_synthetic_multiclass,
    gen_synthetic_multilabel,
    load_dataset_csv,
    load_splits,
    save_splits,
    split,
    split_counts,
)
from .data.cub import CubFormatError, ingest_cub, preprocess_cub
from .models import init_model
from .posttrain import ExtractionError, PostTrainConfig, UnsupportedModelError, evaluate_rules, run_pipeline
from .rules import AspSyntaxError, RuleSetError, emit_asp, parse_asp, sanitize_atom
from .training import TrainConfig, default_metric, train, write_history_csv

log = logging.getLogger("neural_dnf")

DEFAULT_SEED = 73
METRIC_FLAGS = {"jaccard": "jaccard", "macrof1": "macro_f1", "macro_f1": "macro_f1", "accuracy": "accuracy"}


class ConfigError(ValueError):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _out_dir(path) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {p}")
    return p


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _load_config(args, defaults: dict, flag_map: dict) -> dict:
    """defaults <- config file <- flags that were given.

    ``flag_map`` maps argparse dest to a dotted config key.
    """
    cfg = dict(defaults)
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{args.config}: invalid JSON ({e.msg} at line {e.lineno})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        unknown = sorted(set(data) - set(defaults))
        if unknown:
            raise ConfigError(f"{args.config}: unknown key(s) {', '.join(unknown)}")
        cfg = _merge(cfg, data)
    for dest, key in flag_map.items():
        value = getattr(args, dest, None)
        if value is None:
            continue
        node = cfg
        *parents, leaf = key.split(".")
        for part in parents:
            node[part] = dict(node.get(part) or {})
            node = node[part]
        node[leaf] = value
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) in (None, "")]
    if missing:
        raise ConfigError(f"missing required setting(s): {', '.join(missing)}")


# -- gen-synth ---------------------------------------------------------------

def cmd_gen_synth(args) -> int:
    defaults = {"kind": None, "n_targets": 3, "noise_attrs": 20, "attrs": 20, "samples": 10000,
                "seed": DEFAULT_SEED, "out": None}
    cfg = _load_config(args, defaults, {"kind": "kind", "n_targets": "n_targets", "noise_attrs": "noise_attrs",
                                        "attrs": "attrs", "samples": "samples", "seed": "seed", "out": "out"})
    _require(cfg, "kind", "out")
    out = _out_dir(cfg["out"])
    if cfg["kind"] == "multiclass":
        ds, gt = gen_synthetic_multiclass(cfg["n_targets"], cfg["noise_attrs"], cfg["samples"], cfg["seed"])
    elif cfg["kind"] == "multilabel":
        ds, gt = gen_synthetic_multilabel(cfg["n_targets"], cfg["attrs"], cfg["samples"], cfg["seed"])
    else:
        raise ConfigError(f"unknown synthetic kind {cfg['kind']!r}")
    n = cfg["samples"]
    n_train, n_val, n_test = split_counts(n)
    parts = split(ds, n_train, n_val, n_test, cfg["seed"])
    for part in parts:
        part.metadata = {**part.metadata, "run_config": cfg}
    save_splits(dict(zip(("train", "val", "test"), parts)), out)
    _write(out / "ground_truth.lp", f"% config: {json.dumps(cfg, sort_keys=True)}\n" + emit_asp(gt.rules))
    print(f"wrote {len(ds)} samples ({n_train}/{n_val}/{n_test}) to {out}")
    return 0


# -- train ---------------------------------------------------------------------

def _default_loss(task: str) -> str:
    return "ce" if task == MULTICLASS else "bce"


def cmd_train(args) -> int:
    defaults = {"data": None, "out": None, "model": "eo", "n_conj": None, "seed": DEFAULT_SEED,
                "train": TrainConfig().to_dict()}
    defaults["train"]["loss"] = None
    cfg = _load_config(args, defaults, {
        "data": "data", "out": "out", "model": "model", "n_conj": "n_conj", "seed": "seed",
        "loss": "train.loss", "epochs": "train.epochs", "batch_size": "train.batch_size",
        "l1": "train.l1", "lr": "train.optim.lr",
    })
    _require(cfg, "data", "out")
    out = _out_dir(cfg["out"])
    splits = load_splits(cfg["data"])
    tr, va = splits["train"], splits["val"]
    if cfg["model"] == "eo" and tr.task != MULTICLASS:
        raise ConfigError("the exactly-one model needs a multi-class dataset")
    if cfg["n_conj"] is None:
        cfg["n_conj"] = 3 * tr.n_targets
    if cfg["train"].get("loss") is None:
        cfg["train"]["loss"] = _default_loss(tr.task)
    cfg["train"]["seed"] = cfg["seed"]
    tcfg = TrainConfig(**cfg["train"])
    cfg["train"] = tcfg.to_dict()

    model = init_model(cfg["model"], tr.n_attributes, cfg["n_conj"], tr.n_targets, cfg["seed"])
    model, history = train(model, tr, va, tcfg)
    metric = default_metric(tr)
    result = {
        "config": cfg,
        "metric": metric,
        "val": metrics.score(metric, model.inference(va.bipolar()), va.target_matrix()),
        "val_accuracy": metrics.score("accuracy", model.inference(va.bipolar()), va.target_matrix())
        if tr.task == MULTICLASS else None,
        "final_loss": history[-1].loss,
    }
    meta = {"config": cfg, "attribute_names": tr.attribute_names, "target_names": tr.target_names, "task": tr.task}
    save_checkpoint(model, out / "checkpoint.json", meta)
    write_history_csv(history, out / "history.csv")
    _write(out / "metrics.json", _dump(result))
    print(f"val {metric}: {result['val']:.4f}")
    return 0


# -- posttrain -----------------------------------------------------------------

def cmd_posttrain(args) -> int:
    defaults = {"checkpoint": None, "data": None, "out": None, "posttrain": PostTrainConfig().to_dict()}
    cfg = _load_config(args, defaults, {
        "checkpoint": "checkpoint", "data": "data", "out": "out", "epsilon": "posttrain.epsilon",
        "finetune_epochs": "posttrain.finetune_epochs", "metric": "posttrain.metric",
    })
    _require(cfg, "checkpoint", "data", "out")
    if cfg["posttrain"].get("metric") is not None:
        cfg["posttrain"]["metric"] = _metric_name(cfg["posttrain"]["metric"])
    out = _out_dir(cfg["out"])
    model, meta = load_checkpoint(cfg["checkpoint"])
    if model.kind == "mlp":
        raise UnsupportedModelError("post-training is defined for neural DNF models only, got an MLP checkpoint")
    pcfg = PostTrainConfig(**cfg["posttrain"])
    cfg["posttrain"] = pcfg.to_dict()
    tcfg = TrainConfig(**meta.get("config", {}).get("train", {"loss": "ce"}))
    splits = load_splits(cfg["data"])
    report, art = run_pipeline(model, splits["train"], splits["val"], splits["test"], tcfg, pcfg)
    run_meta = {"config": cfg, "train_config": tcfg.to_dict(), "attribute_names": splits["train"].attribute_names,
                "target_names": splits["train"].target_names, "task": splits["train"].task}
    for stage in ("pruned", "finetuned", "thresholded"):
        save_checkpoint(art[stage], out / f"{stage}.json", {**run_meta, "stage": stage})
    _write(out / "rules.lp", f"% config: {json.dumps(cfg, sort_keys=True)}\n" + emit_asp(art["rules"]))
    _write(out / "report.json", _dump({"config": cfg, "report": report.to_dict()}))
    for stage, value in report.stages:
        print(f"{stage} {report.metric}: {value:.4f}")
    return 0


# -- eval ----------------------------------------------------------------------

def _metric_name(flag: str) -> str:
    try:
        return METRIC_FLAGS[flag.lower()]
    except KeyError:
        raise ConfigError(f"unknown metric {flag!r}; choose jaccard, macrof1 or accuracy") from None


def _load_eval_data(path: str, split_name: str):
    p = Path(path)
    if p.is_dir():
        p = p / f"{split_name}.csv"
    if not p.exists():
        raise FileNotFoundError(f"dataset file not found: {p}")
    return load_dataset_csv(p)


def cmd_eval(args) -> int:
    defaults = {"checkpoint": None, "rules": None, "data": None, "split": "test", "metric": None,
                "interpret": "threshold0", "out": None}
    cfg = _load_config(args, defaults, {k: k for k in defaults})
    _require(cfg, "data")
    if (cfg["checkpoint"] is None) == (cfg["rules"] is None):
        raise ConfigError("give exactly one of --checkpoint or --rules")
    ds = _load_eval_data(cfg["data"], cfg["split"])
    metric = _metric_name(cfg["metric"]) if cfg["metric"] else default_metric(ds)
    targets = ds.target_matrix()

    if cfg["rules"] is not None:
        text = Path(cfg["rules"]).read_text(encoding="utf-8")
        rules = parse_asp(text, targets=[sanitize_atom(t) for t in ds.target_names])
        value = evaluate_rules(rules, ds, metric)
    else:
        model, _ = load_checkpoint(cfg["checkpoint"])
        if ds.n_attributes != model.n_in or ds.n_targets != model.n_out:
            raise ValueError(
                f"dataset has {ds.n_attributes} attributes / {ds.n_targets} targets, "
                f"model expects {model.n_in} / {model.n_out}"
            )
        outputs = model.inference(ds.bipolar())
        if cfg["interpret"] == "argmax":
            hot = np.full_like(outputs, -1.0)
            hot[np.arange(len(ds)), outputs.argmax(axis=1)] = 1.0
            outputs = hot
        elif cfg["interpret"] != "threshold0":
            raise ConfigError(f"unknown interpretation {cfg['interpret']!r}")
        value = metrics.score(metric, outputs, targets)
    result = {"config": cfg, "metric": metric, "value": value, "n_samples": len(ds)}
    if cfg["out"]:
        _write(Path(cfg["out"]), _dump(result))
    sys.stdout.write(_dump(result))
    return 0


# -- preprocess ----------------------------------------------------------------

def cmd_preprocess(args) -> int:
    defaults = {"kind": None, "input": None, "out": None, "n": None, "t": None, "classes": None,
                "val_fraction": 0.2, "seed": DEFAULT_SEED}
    cfg = _load_config(args, defaults, {k: k for k in defaults})
    _require(cfg, "kind", "input", "out")
    out = _out_dir(cfg["out"])
    if cfg["kind"] == "cub":
        _require(cfg, "n")
        raw = ingest_cub(cfg["input"])
        if raw.is_train is None:
            raise CubFormatError("train_test_split.txt is required to separate training images")
        if cfg["classes"] is not None:
            raw = raw.first_classes(cfg["classes"])
        ds, mask = preprocess_cub(raw, cfg["n"], raw.image_ids[raw.is_train])
        ds.metadata = {**ds.metadata, "run_config": cfg}
        train_rows = np.flatnonzero(raw.is_train)
        perm = np.random.default_rng(cfg["seed"]).permutation(train_rows.size)
        n_val = int(round(cfg["val_fraction"] * train_rows.size))
        parts = {
            "train": ds.subset(np.sort(train_rows[perm[n_val:]])),
            "val": ds.subset(np.sort(train_rows[perm[:n_val]])),
            "test": ds.subset(np.flatnonzero(~raw.is_train)),
        }
        save_splits(parts, out)
        print(f"kept {int(mask.sum())} of {mask.size} attributes: {' '.join(ds.attribute_names)}")
    elif cfg["kind"] == "mi":
        _require(cfg, "t")
        splits = load_splits(cfg["input"])
        filtered = filter_by_mi(splits["train"], cfg["t"])
        keep = [splits["train"].attribute_names.index(a) for a in filtered.attribute_names]
        parts = {}
        for name, part in splits.items():
            sel = part.select_attributes(keep)
            sel.metadata = {**part.metadata, "mi_threshold": cfg["t"], "run_config": cfg}
            parts[name] = sel
        save_splits(parts, out)
        print(f"kept {len(keep)} of {splits['train'].n_attributes} attributes")
    else:
        raise ConfigError(f"unknown preprocess kind {cfg['kind']!r}")
    return 0


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="neural-dnf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="generate a synthetic dataset with ground-truth rules")
    g.add_argument("--config")
    g.add_argument("--kind", choices=["multiclass", "multilabel"])
    g.add_argument("--classes", "--labels", dest="n_targets", type=int)
    g.add_argument("--noise-attrs", type=int, help="multi-class: noise attributes after the selector block")
    g.add_argument("--attrs", type=int, help="multi-label: total attributes")
    g.add_argument("--samples", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_synth)

    t = sub.add_parser("train", help="train a model on DIR/{train,val}.csv")
    t.add_argument("--config")
    t.add_argument("--data")
    t.add_argument("--out")
    t.add_argument("--model", choices=["vanilla", "eo", "mlp"])
    t.add_argument("--n-conj", type=int, help="conjunctions (hidden units); default 3 per target")
    t.add_argument("--loss", choices=["ce", "bce"])
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--l1", type=float)
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    q = sub.add_parser("posttrain", help="prune, finetune, threshold and extract rules")
    q.add_argument("--config")
    q.add_argument("--checkpoint")
    q.add_argument("--data")
    q.add_argument("--out")
    q.add_argument("--epsilon", type=float)
    q.add_argument("--finetune-epochs", type=int)
    q.add_argument("--metric")
    q.set_defaults(func=cmd_posttrain)

    e = sub.add_parser("eval", help="score a checkpoint or a rules file on a dataset")
    e.add_argument("--config")
    e.add_argument("--checkpoint")
    e.add_argument("--rules")
    e.add_argument("--data", help="CSV file, or a directory holding <split>.csv")
    e.add_argument("--split", choices=["train", "val", "test"])
    e.add_argument("--metric", help="jaccard, macrof1 or accuracy")
    e.add_argument("--interpret", choices=["threshold0", "argmax"])
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("preprocess", help="CUB class-majority encoding or MI attribute filtering")
    r.add_argument("--config")
    r.add_argument("--kind", choices=["cub", "mi"])
    r.add_argument("--input")
    r.add_argument("--out")
    r.add_argument("--n", type=int, help="cub: keep attributes mostly present in >= N classes")
    r.add_argument("--t", type=float, help="mi: keep attributes with MI >= t (nats)")
    r.add_argument("--classes", type=int, help="cub: use only the first K classes")
    r.add_argument("--val-fraction", type=float)
    r.add_argument("--seed", type=int)
    r.set_defaults(func=cmd_preprocess)
    return p


# most specific first: several of these subclass ValueError
_CATEGORIES = [
    (UnsupportedModelError, "unsupported-model"),
    (ConfigError, "config"),
    (CheckpointError, "checkpoint"),
    (AspSyntaxError, "rules-syntax"),
    (RuleSetError, "rules"),
    (ExtractionError, "invalid-state"),
    (DatasetFormatError, "data-format"),
    (CubFormatError, "data-format"),
    (FileNotFoundError, "io"),
    (OSError, "io"),
    (FloatingPointError, "numeric"),
    (ValueError, "invalid-argument"),
    (TypeError, "invalid-argument"),
]


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except tuple(c for c, _ in _CATEGORIES) as exc:
        category = next(name for cls, name in _CATEGORIES if isinstance(exc, cls))
        message = " ".join(str(exc).split())
        print(f"error: {category}: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
