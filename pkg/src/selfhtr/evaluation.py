"""CER/WER scoring and the diagnostic curves built on top of it.

CER is corpus-level: total edit distance over total reference length.
WER is the fraction of word images whose hypothesis is not an exact
match. Scoring is verbatim: case- and punctuation-sensitive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .confidence import word_confidence
from .errors import DataError, DivergenceError
from .model import Recognizer
from .render import Dataset


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance (insertions + deletions + substitutions)."""
    return int(kernels.levenshtein(a, b))


@dataclass
class SampleRecord:
    reference: str
    hypothesis: str
    distance: int
    confidence: float


@dataclass
class EvalResult:
    cer: float
    wer: float
    records: list[SampleRecord]

    @property
    def num_samples(self) -> int:
        return len(self.records)

    def to_dict(self) -> dict:
        return {"cer": self.cer, "wer": self.wer, "num_samples": self.num_samples}


def score_pairs(pairs: list[tuple[str, str, float]]) -> EvalResult:
    """Aggregate (reference, hypothesis, confidence) triples."""
    if not pairs:
        raise DataError("nothing to score")
    records = [
        SampleRecord(ref, hyp, edit_distance(ref, hyp), conf)
        for ref, hyp, conf in pairs
    ]
    total_len = sum(len(r.reference) for r in records)
    if total_len == 0:
        raise DataError("reference transcriptions are all empty")
    cer = sum(r.distance for r in records) / total_len
    wer = sum(1 for r in records if r.hypothesis != r.reference) / len(records)
    return EvalResult(cer=cer, wer=wer, records=records)


def evaluate(rec: Recognizer, dataset: Dataset, include_eos: bool = True) -> EvalResult:
    """Greedy-decode the unaugmented dataset and score against its labels."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate an empty dataset")
    if not dataset.labeled:
        raise DataError("evaluation needs a labeled dataset")
    preds = rec.predict(list(dataset))
    pairs = [
        (im.transcription, p.text, word_confidence(p, include_eos=include_eos))
        for im, p in zip(dataset, preds)
    ]
    return score_pairs(pairs)


def error_by_confidence_fraction(
    records: list[SampleRecord], fractions: list[float]
) -> list[dict]:
    """CER/WER over the most-confident ceil(f*n) samples, per fraction.

    Sorting is by descending confidence with input order breaking ties,
    so fraction 1.0 reproduces the overall result exactly.
    """
    if not records:
        raise DataError("no records")
    order = sorted(range(len(records)),
                   key=lambda i: (-records[i].confidence, i))
    rows = []
    for f in fractions:
        k = max(1, int(np.ceil(f * len(records))))
        subset = [records[i] for i in order[:k]]
        total_len = sum(len(r.reference) for r in subset)
        cer = sum(r.distance for r in subset) / total_len if total_len else 0.0
        wer = sum(1 for r in subset if r.hypothesis != r.reference) / len(subset)
        rows.append({"fraction": f, "n": k, "cer": cer, "wer": wer})
    return rows


def threshold_sweep(run_fn, taus: list[float | None]) -> list[dict]:
    """One adaptation run per threshold; ``None`` is the no-selection
    baseline sentinel. Diverged runs are recorded, not dropped."""
    rows = []
    for tau in taus:
        try:
            result = run_fn(tau)
            rows.append({
                "tau": tau, "cer": result.cer, "wer": result.wer,
                "diverged": False,
            })
        except DivergenceError:
            rows.append({
                "tau": tau, "cer": float("nan"), "wer": float("nan"),
                "diverged": True,
            })
    return rows


def write_records_tsv(records: list[SampleRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["reference", "hypothesis", "distance", "confidence"])
        for r in records:
            writer.writerow([r.reference, r.hypothesis, r.distance,
                             f"{r.confidence:.6f}"])


def read_records_tsv(path: str) -> list[SampleRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader)
        if header[:4] != ["reference", "hypothesis", "distance", "confidence"]:
            raise DataError(f"{path}: unexpected records header {header!r}")
        for row in reader:
            records.append(SampleRecord(row[0], row[1], int(row[2]), float(row[3])))
    return records
