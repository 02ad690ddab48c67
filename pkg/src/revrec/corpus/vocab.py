"""Dictionaries and binary bag-of-words vectors."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import ConfigurationError, DataError
from .records import ReviewRecord


def load_stopwords() -> frozenset[str]:
    text = resources.files("revrec.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    )


@dataclass(frozen=True)
class SparseBinaryVector:
    """A 0/1 vector stored as the sorted tuple of its active indices."""

    dims: int
    active: tuple[int, ...] = ()

    def __post_init__(self):
        act = self.active
        if any(b <= a for a, b in zip(act, act[1:])):
            raise ValueError("active indices must be strictly increasing")
        if act and (act[0] < 0 or act[-1] >= self.dims):
            raise ValueError(f"active index out of range for dims={self.dims}")

    @classmethod
    def from_indices(cls, dims: int, indices: Iterable[int]) -> "SparseBinaryVector":
        return cls(dims, tuple(sorted(set(indices))))

    @cached_property
    def support(self) -> frozenset[int]:
        return frozenset(self.active)

    def __len__(self) -> int:
        return len(self.active)

    @property
    def norm(self) -> float:
        return math.sqrt(len(self.active))

    def dot(self, other: "SparseBinaryVector") -> int:
        self._check(other)
        small, big = sorted((self.support, other.support), key=len)
        return sum(1 for i in small if i in big)

    def cosine(self, other: "SparseBinaryVector") -> float:
        """Cosine similarity; 0 when either vector is empty."""
        if not self.active or not other.active:
            self._check(other)
            return 0.0
        # sqrt of the product keeps self-similarity exactly 1
        return self.dot(other) / math.sqrt(len(self.active) * len(other.active))

    def union(self, other: "SparseBinaryVector") -> "SparseBinaryVector":
        self._check(other)
        return SparseBinaryVector(self.dims, tuple(sorted(self.support | other.support)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dims)
        out[list(self.active)] = 1.0
        return out

    def _check(self, other: "SparseBinaryVector") -> None:
        if other.dims != self.dims:
            raise ValueError(f"dimension mismatch: {self.dims} vs {other.dims}")


def union_all(dims: int, vectors: Iterable[SparseBinaryVector]) -> SparseBinaryVector:
    idx: set[int] = set()
    for v in vectors:
        if v.dims != dims:
            raise ValueError(f"dimension mismatch: {dims} vs {v.dims}")
        idx.update(v.active)
    return SparseBinaryVector(dims, tuple(sorted(idx)))


def stack_dense(vectors: Sequence[SparseBinaryVector], dims: int) -> np.ndarray:
    """Rows of a dense 0/1 matrix, one per vector."""
    out = np.zeros((len(vectors), dims))
    for row, v in enumerate(vectors):
        out[row, list(v.active)] = 1.0
    return out


@dataclass(frozen=True)
class DictionaryConfig:
    max_size: int = 100_000
    min_doc_freq: int = 10
    remove_stopwords: bool = False

    def __post_init__(self):
        if self.max_size < 1:
            raise ConfigurationError("max_size must be positive")
        if self.min_doc_freq < 0:
            raise ConfigurationError("min_doc_freq must be non-negative")


# the two dictionaries used for text representations
RAW_DICTIONARY = DictionaryConfig(max_size=100_000, min_doc_freq=10, remove_stopwords=False)
AUTOENCODER_DICTIONARY = DictionaryConfig(max_size=5000, min_doc_freq=0, remove_stopwords=True)


@dataclass(frozen=True)
class Dictionary:
    token_to_index: dict[str, int]
    config: DictionaryConfig = field(default_factory=DictionaryConfig)
    stopwords: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.token_to_index)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    @property
    def tokens(self) -> list[str]:
        """Tokens ordered by index."""
        return sorted(self.token_to_index, key=self.token_to_index.__getitem__)

    def vectorize(self, tokens: Iterable[str]) -> SparseBinaryVector:
        return vectorize(tokens, self)

    def to_json(self) -> dict:
        return {
            "tokens": self.tokens,
            "config": {
                "max_size": self.config.max_size,
                "min_doc_freq": self.config.min_doc_freq,
                "remove_stopwords": self.config.remove_stopwords,
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "Dictionary":
        config = DictionaryConfig(**data["config"])
        stop = load_stopwords() if config.remove_stopwords else frozenset()
        return cls({t: i for i, t in enumerate(data["tokens"])}, config, stop)


def build_dictionary(
    records: Sequence[ReviewRecord],
    config: DictionaryConfig,
    stopwords: Optional[Iterable[str]] = None,
) -> Dictionary:
    """Keep the `max_size` tokens with the highest document frequency.

    A document is one review (title included). Tokens seen in fewer than
    `min_doc_freq` documents are dropped, and stopwords too when the config asks.
    Ties in frequency are broken lexicographically, so the result does not
    depend on record order.
    """
    if not records:
        raise DataError("cannot build a dictionary from zero records")
    stop = frozenset(stopwords) if stopwords is not None else (
        load_stopwords() if config.remove_stopwords else frozenset()
    )
    df: Counter[str] = Counter()
    for r in records:
        df.update(set(r.tokens))
    kept = [
        (t, n)
        for t, n in df.items()
        if n >= config.min_doc_freq and not (config.remove_stopwords and t in stop)
    ]
    if not kept:
        raise ConfigurationError(
            f"empty vocabulary: no token reaches min_doc_freq={config.min_doc_freq}"
        )
    kept.sort(key=lambda tn: (-tn[1], tn[0]))
    vocab = {t: i for i, (t, _) in enumerate(kept[: config.max_size])}
    return Dictionary(vocab, config, stop if config.remove_stopwords else frozenset())


def vectorize(tokens: Iterable[str], dictionary: Dictionary) -> SparseBinaryVector:
    """Binary bag of words over `dictionary`; out-of-dictionary tokens are ignored."""
    index = dictionary.token_to_index
    return SparseBinaryVector(
        len(index), tuple(sorted({index[t] for t in tokens if t in index}))
    )
