"""The adaptation pipeline: synthetic pretraining, then repeated cycles
of pseudo-label prediction, confidence-based selection, and training on
two augmented views of every selected sample.

Per-cycle randomness derives from (seed, cycle), never from a running
stream, so an interrupted run resumed from a checkpoint reproduces the
uninterrupted run exactly.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np
import torch

from .augment import AugmentationPolicy, apply as apply_augment
from .confidence import PseudoLabeledSample, SelectionPolicy, select, word_confidence
from .errors import DivergenceError, ModelError, NonFiniteLossError
from .model import Recognizer
from .render import Dataset, WordImage


@dataclass(frozen=True)
class AdaptationConfig:
    cycles: int = 50
    policy: SelectionPolicy = field(default_factory=SelectionPolicy.none)
    view_a: AugmentationPolicy = field(default_factory=AugmentationPolicy.weak)
    view_b: AugmentationPolicy = field(default_factory=AugmentationPolicy.strong)
    epochs_per_cycle: int = 1
    seed: int = 0
    max_nonfinite: int = 1
    empty_streak_limit: int = 3
    min_selected: int = 1

    def __post_init__(self):
        if self.cycles < 0:
            raise ModelError("cycles must be >= 0")
        if self.epochs_per_cycle < 1:
            raise ModelError("epochs_per_cycle must be >= 1")


@dataclass
class CycleReport:
    cycle: int
    num_total: int
    num_selected: int
    mean_confidence: float
    median_confidence: float
    train_loss: float | None = None
    cer: float | None = None
    wer: float | None = None

    def to_dict(self) -> dict:
        return {
            "cycle": self.cycle,
            "num_total": self.num_total,
            "num_selected": self.num_selected,
            "mean_confidence": self.mean_confidence,
            "median_confidence": self.median_confidence,
            "train_loss": self.train_loss,
            "cer": self.cer,
            "wer": self.wer,
        }


def _cycle_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _batches(order: np.ndarray, batch_size: int):
    for start in range(0, len(order), batch_size):
        yield [int(i) for i in order[start:start + batch_size]]


def pretrain_synthetic(
    rec: Recognizer,
    dataset: Dataset,
    weak_policy: AugmentationPolicy | None = None,
    epochs: int = 1,
    seed: int = 0,
) -> list[float]:
    """Train on the labeled synthetic set under weak augmentation.

    One epoch by default (the initial-model recipe); more epochs help
    when the synthetic set is small. Returns per-step losses.
    """
    if not dataset.labeled:
        raise ModelError("pretraining needs a labeled dataset")
    policy = weak_policy if weak_policy is not None else AugmentationPolicy.weak()
    losses = []
    for epoch in range(epochs):
        rng = _cycle_rng(seed, 0, epoch)
        order = rng.permutation(len(dataset))
        for batch_ids in _batches(order, rec.config.batch_size):
            batch = []
            for i in batch_ids:
                im = dataset[i]
                batch.append((apply_augment(policy, im, rng), im.transcription))
            losses.append(rec.train_step(batch))
    return losses


def predict_pseudo_labels(
    rec: Recognizer, dataset: Dataset, cycle: int | None = None,
    include_eos: bool = True,
) -> list[PseudoLabeledSample]:
    """Fresh greedy predictions with confidences for every image."""
    if len(dataset) == 0:
        raise ModelError("cannot pseudo-label an empty dataset")
    preds = rec.predict(list(dataset))
    out = []
    for im, pred in zip(dataset, preds):
        out.append(PseudoLabeledSample(
            image=im,
            pseudo_label=pred.text,
            confidence=word_confidence(pred, include_eos=include_eos),
            cycle_predicted=rec.cycle if cycle is None else cycle,
        ))
    return out


def augment_views(
    batch: list[PseudoLabeledSample],
    view_a: AugmentationPolicy,
    view_b: AugmentationPolicy,
    rng: np.random.Generator,
) -> tuple[list[tuple[WordImage, str]], list[tuple[WordImage, str]]]:
    """Two augmented versions of each sample, paired with its pseudo-label."""
    a = [(apply_augment(view_a, s.image, rng), s.pseudo_label) for s in batch]
    b = [(apply_augment(view_b, s.image, rng), s.pseudo_label) for s in batch]
    return a, b


def consistency_batch_loss(
    rec: Recognizer,
    batch: list[PseudoLabeledSample],
    view_a: AugmentationPolicy,
    view_b: AugmentationPolicy,
    rng: np.random.Generator,
) -> torch.Tensor:
    """Sum over the batch of the recognition losses of both augmented
    views against the same fixed pseudo-labels. Differentiable."""
    if not batch:
        raise ModelError("empty batch")
    views_a, views_b = augment_views(batch, view_a, view_b, rng)
    return rec.per_sample_losses(views_a).sum() + rec.per_sample_losses(views_b).sum()


def _train_cycle(
    rec: Recognizer,
    selected: list[PseudoLabeledSample],
    config: AdaptationConfig,
    rng: np.random.Generator,
) -> float:
    """One pass (or more) over the selected set; returns the mean step loss."""
    step_losses = []
    for _ in range(config.epochs_per_cycle):
        order = rng.permutation(len(selected))
        for batch_ids in _batches(order, rec.config.batch_size):
            batch = [selected[i] for i in batch_ids]
            loss = consistency_batch_loss(rec, batch, config.view_a, config.view_b, rng)
            loss = loss / (2 * len(batch))
            if not torch.isfinite(loss):
                raise NonFiniteLossError(
                    "non-finite consistency loss",
                    diagnostics={"batch_size": len(batch)})
            rec.net.train()
            rec.optimizer.zero_grad()
            loss.backward()
            rec.optimizer.step()
            step_losses.append(float(loss.detach()))
    return float(np.mean(step_losses))


def adapt(
    rec: Recognizer,
    unlabeled: Dataset,
    config: AdaptationConfig,
    eval_split: Dataset | None = None,
    on_cycle_end=None,
) -> list[CycleReport]:
    """Run adaptation cycles starting at the recognizer's cycle counter.

    Each cycle predicts fresh pseudo-labels, selects a subset, trains on
    two augmented views per sample, and appends a report. The eval split
    is scored for reporting only; it never steers selection or stopping.
    ``on_cycle_end(rec, report)`` may persist checkpoints; its return
    value (a path) feeds the divergence error, if one is raised later.
    """
    reports: list[CycleReport] = []
    empty_streak = 0
    last_ckpt = None

    while rec.cycle < config.cycles:
        cycle = rec.cycle
        rng = _cycle_rng(config.seed, 1, cycle)
        samples = predict_pseudo_labels(rec, unlabeled, cycle=cycle)
        confidences = [s.confidence for s in samples]

        selected = select(samples, config.policy, cycle=cycle, rng=rng)
        report = CycleReport(
            cycle=cycle,
            num_total=len(samples),
            num_selected=len(selected),
            mean_confidence=float(np.mean(confidences)),
            median_confidence=float(statistics.median(confidences)),
        )

        if len(selected) < max(1, config.min_selected):
            empty_streak += 1
            if empty_streak >= config.empty_streak_limit:
                reports.append(report)
                raise DivergenceError(
                    f"selection below minimum for {empty_streak} consecutive cycles",
                    last_checkpoint=last_ckpt, reports=reports)
        else:
            empty_streak = 0
            try:
                report.train_loss = _train_cycle(rec, selected, config, rng)
            except NonFiniteLossError as e:
                reports.append(report)
                raise DivergenceError(
                    f"non-finite loss in cycle {cycle}: {e}",
                    last_checkpoint=last_ckpt, reports=reports) from e

        if eval_split is not None:
            from .evaluation import evaluate

            result = evaluate(rec, eval_split)
            report.cer = result.cer
            report.wer = result.wer

        rec.cycle = cycle + 1
        reports.append(report)
        if on_cycle_end is not None:
            maybe = on_cycle_end(rec, report)
            if maybe:
                last_ckpt = maybe
    return reports
