"""Text corpus ingestion, statistics, and string generation.

Three generation modes drive synthesis: ``natural`` replays the source
token stream, ``uniform`` draws i.i.d. from the lexicon, ``random``
builds strings character by character from the observed unigram
distribution, re-applying capitalization and trailing punctuation at
their observed rates and emitting the single-character token inventory
as-is.

Statistics are computed on "core" tokens: one trailing punctuation mark
is stripped (and tallied separately) and characters are case-folded, so
the random generator can re-apply capitalization and punctuation as
independent events.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .charset import Charset
from .errors import CorpusError, IngestError

TRAILING_PUNCT = ".,;:!?"

CORPUS_MODES = ("natural", "uniform", "random")


@dataclass
class TextCorpus:
    tokens: list[str]
    source: str = "<memory>"

    def __post_init__(self):
        if any(not t for t in self.tokens):
            raise CorpusError("corpus contains empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class CorpusSpec:
    mode: str
    target_count: int
    seed: int = 0

    def __post_init__(self):
        if self.mode not in CORPUS_MODES:
            raise CorpusError(f"unknown corpus mode {self.mode!r}")
        if self.target_count < 1:
            raise CorpusError("target_count must be >= 1")


@dataclass
class CorpusStats:
    charset: Charset
    lexicon: set[str]
    char_unigram: dict[str, float]
    word_length_dist: dict[int, float]
    capitalization_prob: float
    trailing_punct_prob: dict[str, float]  # "" = no trailing mark; sums to 1
    single_char_tokens: set[str]
    single_char_weights: dict[str, float] = field(default_factory=dict)
    single_char_prob: float = 0.0
    rejected_symbols: dict[str, int] = field(default_factory=dict)
    n_tokens: int = 0
    # conditional core-length distribution of tokens that are not
    # single-character tokens; used by the random generator's multi path
    multi_length_dist: dict[int, float] = field(default_factory=dict)

    def validate(self) -> None:
        for name, dist in (
            ("char_unigram", self.char_unigram),
            ("word_length_dist", self.word_length_dist),
            ("trailing_punct_prob", self.trailing_punct_prob),
        ):
            total = sum(dist.values())
            if abs(total - 1.0) > 1e-9:
                raise CorpusError(f"{name} sums to {total}, expected 1")
            if any(p < 0 for p in dist.values()):
                raise CorpusError(f"{name} has negative probabilities")
        if not 0.0 <= self.capitalization_prob <= 1.0:
            raise CorpusError("capitalization_prob outside [0,1]")


def ingest_text(raw: str | bytes, source: str = "<memory>") -> TextCorpus:
    """Whitespace-tokenize raw text; punctuation stays attached to tokens."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise IngestError(
                f"{source}: undecodable input at byte offset {e.start}"
            ) from e
    return TextCorpus(raw.split(), source=source)


def strip_trailing_punct(token: str) -> tuple[str, str]:
    """Split one trailing punctuation mark off a token.

    Returns (core, mark) where mark is "" when nothing was stripped.
    A bare punctuation mark is its own core.
    """
    if len(token) > 1 and token[-1] in TRAILING_PUNCT:
        return token[:-1], token[-1]
    return token, ""


def _fold(ch: str, charset: Charset) -> str:
    low = ch.lower()
    return low if low in charset else ch


def _clean(token: str, charset: Charset, rejected: Counter | None = None) -> str:
    kept = []
    for ch in token:
        if ch in charset:
            kept.append(ch)
        elif rejected is not None:
            rejected[ch] += 1
    return "".join(kept)


def derive_statistics(corpus: TextCorpus, charset: Charset) -> CorpusStats:
    """One pass over the corpus collecting every distribution generation needs.

    Symbols outside the charset are dropped from tokens and tallied under
    ``rejected_symbols``; tokens that clean to nothing are skipped.
    """
    if len(corpus) == 0:
        raise CorpusError("cannot derive statistics from an empty corpus")

    rejected: Counter = Counter()
    char_counts: Counter = Counter()
    length_counts: Counter = Counter()
    multi_length_counts: Counter = Counter()
    punct_counts: Counter = Counter()
    single_counts: Counter = Counter()
    lexicon: set[str] = set()
    n_caps = 0
    n_tokens = 0

    for token in corpus.tokens:
        token = _clean(token, charset, rejected)
        if not token:
            continue
        n_tokens += 1
        lexicon.add(token)
        core, mark = strip_trailing_punct(token)
        punct_counts[mark] += 1
        length_counts[len(core)] += 1
        if token[0].isupper():
            n_caps += 1
        for ch in core:
            char_counts[_fold(ch, charset)] += 1
        if len(token) == 1:
            single_counts[token] += 1
        else:
            multi_length_counts[len(core)] += 1

    if n_tokens == 0:
        raise CorpusError("corpus is empty after charset cleaning")

    total_chars = sum(char_counts.values())
    total_singles = sum(single_counts.values())
    total_multi = sum(multi_length_counts.values())

    stats = CorpusStats(
        charset=charset,
        lexicon=lexicon,
        char_unigram={c: char_counts[c] / total_chars for c in sorted(char_counts)},
        word_length_dist={
            l: length_counts[l] / n_tokens for l in sorted(length_counts)
        },
        capitalization_prob=n_caps / n_tokens,
        trailing_punct_prob={
            m: punct_counts[m] / n_tokens for m in sorted(punct_counts)
        },
        single_char_tokens=set(single_counts),
        single_char_weights={
            t: single_counts[t] / total_singles for t in sorted(single_counts)
        }
        if total_singles
        else {},
        single_char_prob=total_singles / n_tokens,
        rejected_symbols=dict(rejected),
        n_tokens=n_tokens,
        multi_length_dist={
            l: multi_length_counts[l] / total_multi for l in sorted(multi_length_counts)
        }
        if total_multi
        else {},
    )
    stats.validate()
    return stats


def _draw(rng: np.random.Generator, items: list, probs: np.ndarray):
    return items[int(rng.choice(len(items), p=probs))]


def generate_strings(
    spec: CorpusSpec, corpus: TextCorpus, stats: CorpusStats
) -> list[str]:
    """Emit ``spec.target_count`` strings under the chosen mode.

    Deterministic given (spec, corpus, stats) including the seed.
    """
    rng = np.random.default_rng(spec.seed)

    if spec.mode == "natural":
        stream = [
            t for t in (_clean(tok, stats.charset) for tok in corpus.tokens) if t
        ]
        if not stream:
            raise CorpusError("natural mode needs a nonempty corpus")
        reps = -(-spec.target_count // len(stream))
        return (stream * reps)[: spec.target_count]

    if spec.mode == "uniform":
        lexicon = sorted(stats.lexicon)
        if not lexicon:
            raise CorpusError("uniform mode needs a nonempty lexicon")
        idx = rng.integers(0, len(lexicon), size=spec.target_count)
        return [lexicon[int(i)] for i in idx]

    # random mode
    alphabet = [c for c in sorted(stats.char_unigram) if stats.char_unigram[c] > 0]
    if not alphabet:
        raise CorpusError("random mode needs a non-degenerate char unigram")
    alpha_p = np.array([stats.char_unigram[c] for c in alphabet], dtype=np.float64)
    alpha_p = alpha_p / alpha_p.sum()

    singles = sorted(stats.single_char_weights)
    single_p = (
        np.array([stats.single_char_weights[t] for t in singles], dtype=np.float64)
        if singles
        else None
    )

    lengths = sorted(stats.multi_length_dist) or sorted(stats.word_length_dist)
    length_src = stats.multi_length_dist or stats.word_length_dist
    length_p = np.array([length_src[l] for l in lengths], dtype=np.float64)
    length_p = length_p / length_p.sum()

    marks = sorted(stats.trailing_punct_prob)
    mark_p = np.array([stats.trailing_punct_prob[m] for m in marks], dtype=np.float64)

    out = []
    for _ in range(spec.target_count):
        if singles and rng.random() < stats.single_char_prob:
            out.append(_draw(rng, singles, single_p))
            continue
        length = _draw(rng, lengths, length_p)
        chars = [alphabet[int(i)] for i in rng.choice(len(alphabet), size=length, p=alpha_p)]
        if rng.random() < stats.capitalization_prob:
            up = chars[0].upper()
            if up in stats.charset:
                chars[0] = up
        word = "".join(chars)
        mark = _draw(rng, marks, mark_p)
        out.append(word + mark)
    return out
