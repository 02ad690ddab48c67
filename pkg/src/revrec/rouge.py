"""Recall-oriented ROUGE-n."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of the contiguous n-grams of `tokens`, as tuples."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[j : j + n]) for j in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    """Share of the reference n-grams found in the candidate.

    Matching is clipped: a reference n-gram occurring c times is matched at most
    min(c, count in candidate) times. A reference without n-grams scores 0.
    """
    ref = ngrams(reference, n)
    total = sum(ref.values())
    if not total:
        return 0.0
    cand = ngrams(candidate, n)
    return sum(min(c, cand[g]) for g, c in ref.items()) / total


def rouge_scores(
    candidate: Sequence[str], reference: Sequence[str], ns: Iterable[int] = (1, 2, 3)
) -> dict[int, float]:
    return {n: rouge_n(candidate, reference, n) for n in ns}
