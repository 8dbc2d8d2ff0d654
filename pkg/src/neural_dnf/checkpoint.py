"""JSON checkpoints for every model kind.

Floats go through ``json`` which writes ``repr`` (shortest round-tripping
form), so loading gives back bit-identical arrays.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .models import MlpBaseline, NeuralDnfEoModel, NeuralDnfModel
from .semi_symbolic import SemiSymbolicLayer

FORMAT = "neural-dnf-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _layer_to_dict(layer: SemiSymbolicLayer) -> dict:
    return {
        "kind": layer.kind,
        "delta": layer.delta,
        "trainable": layer.trainable,
        "weights": layer.weights.tolist(),
        "mask": layer.mask.tolist(),
    }


def _layer_from_dict(d: dict) -> SemiSymbolicLayer:
    return SemiSymbolicLayer(
        np.array(d["weights"], dtype=np.float64),
        d["kind"],
        d["delta"],
        d["trainable"],
        np.array(d["mask"], dtype=np.float64),
    )


def model_to_dict(model, metadata: Optional[dict] = None) -> dict:
    out = {"format": FORMAT, "version": VERSION, "kind": model.kind,
           "shape": {"n_in": model.n_in, "n_conj": model.n_conj, "n_out": model.n_out}}
    if model.kind == "mlp":
        out["params"] = {k: v.tolist() for k, v in model.params.items()}
    else:
        plain = model.plain()
        out["conj"] = _layer_to_dict(plain.conj)
        out["disj"] = _layer_to_dict(plain.disj)
        if model.kind == "eo":
            out["constraint"] = _layer_to_dict(model.constraint)
    out["metadata"] = metadata or {}
    return out


def model_from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise CheckpointError("not a neural DNF checkpoint")
    if d.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {d.get('version')!r}")
    kind = d.get("kind")
    try:
        model = _build(kind, d)
    except KeyError as e:
        raise CheckpointError(f"checkpoint is missing field {e}") from None
    shape = d.get("shape")
    if shape is not None and shape != {"n_in": model.n_in, "n_conj": model.n_conj, "n_out": model.n_out}:
        raise CheckpointError(f"declared shape {shape} does not match the stored weights")
    return model


def _build(kind, d: dict):
    if kind == "mlp":
        return MlpBaseline(**{k: np.array(v, dtype=np.float64) for k, v in d["params"].items()})
    if kind not in ("vanilla", "eo"):
        raise CheckpointError(f"unknown model kind {kind!r}")
    base = NeuralDnfModel(_layer_from_dict(d["conj"]), _layer_from_dict(d["disj"]))
    if kind == "eo":
        return NeuralDnfEoModel(base, _layer_from_dict(d["constraint"]))
    return base


def save_checkpoint(model, path, metadata: Optional[dict] = None) -> None:
    text = json.dumps(model_to_dict(model, metadata), indent=1, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path):
    """Returns (model, metadata)."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})") from None
    return model_from_dict(d), d.get("metadata", {})
