from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..corpus import ReviewRecord
from ..errors import DataError


@dataclass(frozen=True)
class BiasModel:
    """Overall, per-user and per-item mean ratings.

    Unknown users and items fall back to the overall mean.
    """

    mu: float
    mu_u: dict[str, float] = field(default_factory=dict)
    mu_i: dict[str, float] = field(default_factory=dict)

    def user(self, u: str) -> float:
        return self.mu_u.get(u, self.mu)

    def item(self, i: str) -> float:
        return self.mu_i.get(i, self.mu)


def _means(records: Sequence[ReviewRecord], key: str) -> dict[str, float]:
    sums: dict[str, list[float]] = {}
    for r in records:
        acc = sums.setdefault(getattr(r, key), [0.0, 0])
        acc[0] += r.rating
        acc[1] += 1
    return {k: s / n for k, (s, n) in sums.items()}


def fit_biases(train: Sequence[ReviewRecord]) -> BiasModel:
    if not train:
        raise DataError("cannot fit biases on an empty training set")
    mu = float(np.mean([r.rating for r in train]))
    return BiasModel(mu, _means(train, "user_id"), _means(train, "item_id"))
