"""Word-level confidence and pseudo-label selection strategies.

Confidence of a decoded word is the arithmetic mean over decode steps of
the maximum per-step class probability. Selection policies: keep all,
threshold on confidence, keep a scheduled top fraction by confidence, or
a scheduled random fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charset import EOS_ID
from .errors import ConfigError, ModelError
from .model import Prediction
from .render import WordImage

POLICY_KINDS = ("none", "threshold", "top_fraction", "random_fraction")


@dataclass
class PseudoLabeledSample:
    image: WordImage
    pseudo_label: str
    confidence: float
    cycle_predicted: int = 0


@dataclass(frozen=True)
class SelectionPolicy:
    """Which pseudo-labeled samples enter training.

    ``schedule`` maps cycle ranges to fractions as (start, stop, fraction)
    with start inclusive and stop exclusive; the ranges must not overlap
    and must cover every cycle the policy is asked about.
    """

    kind: str = "none"
    tau: float | None = None
    schedule: tuple[tuple[int, int, float], ...] = field(default=())

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"selection kind {self.kind!r} invalid")
        if self.kind == "threshold":
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise ConfigError("threshold policy needs tau in (0,1)")
        if self.kind in ("top_fraction", "random_fraction"):
            if not self.schedule:
                raise ConfigError(f"{self.kind} policy needs a schedule")
            for start, stop, frac in self.schedule:
                if start >= stop:
                    raise ConfigError("schedule range must have start < stop")
                if not 0.0 < frac <= 1.0:
                    raise ConfigError("schedule fractions must be in (0,1]")
            spans = sorted((s, e) for s, e, _ in self.schedule)
            for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
                if s1 < e0:
                    raise ConfigError("schedule ranges overlap")

    def fraction_for(self, cycle: int) -> float:
        for start, stop, frac in self.schedule:
            if start <= cycle < stop:
                return frac
        raise ConfigError(f"cycle {cycle} not covered by the selection schedule")

    @classmethod
    def none(cls) -> "SelectionPolicy":
        return cls(kind="none")

    @classmethod
    def threshold(cls, tau: float) -> "SelectionPolicy":
        return cls(kind="threshold", tau=tau)

    @classmethod
    def top_fraction(cls, schedule) -> "SelectionPolicy":
        return cls(kind="top_fraction", schedule=tuple(map(tuple, schedule)))

    @classmethod
    def random_fraction(cls, schedule) -> "SelectionPolicy":
        return cls(kind="random_fraction", schedule=tuple(map(tuple, schedule)))


def word_confidence(pred: Prediction, include_eos: bool = True) -> float:
    """Mean over decode steps of the maximum class probability.

    ``include_eos`` controls whether the final end-of-sequence step (when
    present) counts toward the mean; it does by default.
    """
    dists = pred.step_dists
    if dists.shape[0] == 0:
        raise ModelError("cannot score an empty prediction")
    maxima = dists.max(axis=1)
    if not include_eos and pred.num_steps > 1 and pred.char_ids[-1] == EOS_ID:
        maxima = maxima[:-1]
    return float(maxima.mean())


def select(
    samples: list[PseudoLabeledSample],
    policy: SelectionPolicy,
    cycle: int = 0,
    rng: np.random.Generator | None = None,
) -> list[PseudoLabeledSample]:
    """Apply a selection policy; the result preserves input order.

    Threshold keeps samples with confidence >= tau (an empty result is
    legal and reported by the caller). Fraction policies keep ceil(f*J)
    samples, ties broken by input position.
    """
    if not samples:
        raise ModelError("selection needs a nonempty sample list")

    if policy.kind == "none":
        return list(samples)

    if policy.kind == "threshold":
        return [s for s in samples if s.confidence >= policy.tau]

    frac = policy.fraction_for(cycle)
    k = math.ceil(frac * len(samples))

    if policy.kind == "top_fraction":
        ranked = sorted(range(len(samples)),
                        key=lambda i: (-samples[i].confidence, i))
        keep = sorted(ranked[:k])
        return [samples[i] for i in keep]

    if rng is None:
        raise ConfigError("random_fraction selection needs an rng")
    keep = sorted(rng.choice(len(samples), size=k, replace=False).tolist())
    return [samples[i] for i in keep]
