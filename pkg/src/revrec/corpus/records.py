"""Review records: tokenization, sentence segmentation and rating normalization."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..errors import DataError

_TOKEN_RE = re.compile(r"[^\W_]+")
# a terminator followed by whitespace; a terminator at end-of-text needs no split
_SENTENCE_BREAK_RE = re.compile(r"(?<=[.!?])\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase `text` and split it on every run of non-alphanumeric characters."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Sentence:
    text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        return cls(text, tuple(tokenize(text)))

    def __len__(self) -> int:
        return len(self.tokens)


def segment_sentences(title: Optional[str], body: str) -> list[Sentence]:
    """Split a review into sentences; a non-empty title becomes sentence 0."""
    sentences = []
    if title and title.strip():
        sentences.append(Sentence.from_text(title.strip()))
    for fragment in _SENTENCE_BREAK_RE.split(body or ""):
        fragment = fragment.strip()
        if fragment:
            sentences.append(Sentence.from_text(fragment))
    return sentences


@dataclass(frozen=True)
class ReviewRecord:
    """One user appreciation: who rated what, how much, and the review text."""

    user_id: str
    item_id: str
    rating: int
    body: str
    title: Optional[str] = None
    sentences: tuple[Sentence, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if self.rating not in (1, 2, 3, 4, 5):
            raise DataError(f"rating must be an integer in 1..5, got {self.rating!r}")
        if not self.sentences:
            object.__setattr__(
                self, "sentences", tuple(segment_sentences(self.title, self.body))
            )

    @property
    def tokens(self) -> list[str]:
        """All word tokens of the review, title first."""
        return [tok for s in self.sentences for tok in s.tokens]

    @property
    def n_words(self) -> int:
        return sum(len(s) for s in self.sentences)

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    def to_json(self) -> dict:
        out = {"user_id": self.user_id, "item_id": self.item_id, "rating": self.rating}
        if self.title is not None:
            out["title"] = self.title
        out["text"] = self.body
        return out


def normalize_rating(raw: float, source_min: float = 1, source_max: float = 5) -> int:
    """Map `raw` affinely from [source_min, source_max] onto the integers 1..5.

    Rounds half up, so the endpoints land on 1 and 5 exactly.

    >>> normalize_rating(10, 0, 20)
    3
    """
    if not source_max > source_min:
        raise DataError(f"rating scale is empty: [{source_min}, {source_max}]")
    if not (source_min <= raw <= source_max) or math.isnan(raw):
        raise DataError(f"rating {raw} outside [{source_min}, {source_max}]")
    scaled = 1 + 4 * (raw - source_min) / (source_max - source_min)
    return min(5, max(1, math.floor(scaled + 0.5)))


def records_by(records: Iterable[ReviewRecord], key: str) -> dict[str, list[ReviewRecord]]:
    """Group records by ``"user_id"`` or ``"item_id"``, keeping input order."""
    groups: dict[str, list[ReviewRecord]] = {}
    for r in records:
        groups.setdefault(getattr(r, key), []).append(r)
    return groups
