"""Character inventory shared by every component.

Ids are dense: 0 = padding, 1 = start-of-sequence, 2 = end-of-sequence,
printable symbols from 3 upward. The decoder emits a distribution over
the "emittable" classes (end-of-sequence plus the printables), so class
index = id - 2 with class 0 being end-of-sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CharsetError

PAD_ID = 0
SOS_ID = 1
EOS_ID = 2
_NUM_SPECIALS = 3

DEFAULT_CHARS = (
    "abcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    ".,;:!?'\"()-&"
)


@dataclass(frozen=True)
class Charset:
    chars: tuple[str, ...]
    id_of: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.chars)) != len(self.chars):
            raise CharsetError("duplicate symbols in charset")
        for ch in self.chars:
            if len(ch) != 1:
                raise CharsetError(f"charset entries must be single symbols, got {ch!r}")
        object.__setattr__(
            self, "id_of", {c: i + _NUM_SPECIALS for i, c in enumerate(self.chars)}
        )

    @classmethod
    def from_string(cls, chars: str) -> "Charset":
        return cls(tuple(chars))

    @classmethod
    def default(cls) -> "Charset":
        return cls.from_string(DEFAULT_CHARS)

    def __len__(self) -> int:
        return len(self.chars)

    @property
    def num_ids(self) -> int:
        """Dense id count including the three special tokens."""
        return len(self.chars) + _NUM_SPECIALS

    @property
    def num_classes(self) -> int:
        """Emittable classes: printables plus end-of-sequence."""
        return len(self.chars) + 1

    def __contains__(self, ch: str) -> bool:
        return ch in self.id_of

    def validate(self, text: str) -> None:
        for ch in text:
            if ch not in self.id_of:
                raise CharsetError(f"symbol {ch!r} not in charset")

    def text_to_ids(self, text: str) -> list[int]:
        self.validate(text)
        return [self.id_of[ch] for ch in text]

    def ids_to_text(self, ids) -> str:
        out = []
        for i in ids:
            if i == EOS_ID:
                break
            if i in (PAD_ID, SOS_ID):
                raise CharsetError(f"id {i} is not printable")
            if not _NUM_SPECIALS <= i < self.num_ids:
                raise CharsetError(f"id {i} outside charset")
            out.append(self.chars[i - _NUM_SPECIALS])
        return "".join(out)

    def id_to_class(self, char_id: int) -> int:
        return char_id - 2

    def class_to_id(self, class_index: int) -> int:
        return class_index + 2

    def class_index_of(self, ch: str) -> int:
        """Class index of a printable symbol in the decoder output layer."""
        return self.id_of[ch] - 2
