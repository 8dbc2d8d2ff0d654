"""The synthetic-data protocol: generate, split 6400/1600/2000, train, then
run post-training without the finetuning stage and score every stage on the
test split."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .data import MULTICLASS, gen_synthetic_multiclass, gen_synthetic_multilabel, split, split_counts
from .models import init_model
from .posttrain import PostTrainConfig, run_pipeline
from .training import TrainConfig, train


@dataclass
class SyntheticRun:
    task: str = MULTICLASS
    n_targets: int = 3
    n_attrs: int = 20  # noise attributes for multi-class, all attributes for multi-label
    n_samples: int = 10000
    model: str = "eo"
    n_conj: Optional[int] = None  # default 3 per target
    seed: int = 73
    train: TrainConfig = field(default_factory=TrainConfig)
    posttrain: PostTrainConfig = field(default_factory=lambda: PostTrainConfig(finetune_epochs=0))

    def resolved(self) -> "SyntheticRun":
        loss = "ce" if self.task == MULTICLASS else "bce"
        return dataclasses.replace(
            self,
            n_conj=self.n_conj or 3 * self.n_targets,
            train=dataclasses.replace(self.train, loss=loss, seed=self.seed),
        )


def make_splits(run: SyntheticRun):
    if run.task == MULTICLASS:
        ds, gt = gen_synthetic_multiclass(run.n_targets, run.n_attrs, run.n_samples, run.seed)
    else:
        ds, gt = gen_synthetic_multilabel(run.n_targets, run.n_attrs, run.n_samples, run.seed)
    return split(ds, *split_counts(run.n_samples), seed=run.seed), gt


def run_synthetic(run: SyntheticRun, splits=None):
    """Returns (PipelineReport, trained model, pipeline artifacts)."""
    run = run.resolved()
    tr, va, te = splits or make_splits(run)[0]
    model = init_model(run.model, tr.n_attributes, run.n_conj, tr.n_targets, run.seed)
    train(model, tr, va, run.train)
    report, artifacts = run_pipeline(model, tr, va, te, run.train, run.posttrain)
    return report, model, artifacts
