"""Train/validation/test splits and activity-based subsets."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError
from .records import ReviewRecord


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[ReviewRecord, ...]
    validation: tuple[ReviewRecord, ...]
    test: tuple[ReviewRecord, ...]
    seed: int

    @property
    def counts(self) -> dict[str, int]:
        return {"train": len(self.train), "val": len(self.validation), "test": len(self.test)}


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def split_dataset(records: Sequence[ReviewRecord], seed: int) -> DatasetSplit:
    """Shuffle under `seed` and cut 80/10/10 by position.

    Validation and test sizes are each round(n/10), at least one record, so the
    training share is within one record of 80%.
    """
    n = len(records)
    if n < 3:
        raise DataError(f"need at least 3 records to split, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_val = max(1, _round_half_up(n / 10))
    n_test = max(1, _round_half_up(n / 10))
    n_train = n - n_val - n_test
    shuffled = [records[j] for j in order]
    return DatasetSplit(
        train=tuple(shuffled[:n_train]),
        validation=tuple(shuffled[n_train : n_train + n_val]),
        test=tuple(shuffled[n_train + n_val :]),
        seed=seed,
    )


def _top(counts: Counter, n: Optional[float]) -> set[str]:
    ranked = sorted(counts, key=lambda k: (-counts[k], k))
    if n is None or n == math.inf:
        return set(ranked)
    if n < 1:
        raise ValueError("subset sizes must be >= 1")
    return set(ranked[: int(n)])


def select_subset(
    records: Sequence[ReviewRecord],
    n_users: Optional[float] = None,
    n_items: Optional[float] = None,
) -> list[ReviewRecord]:
    """Keep records whose user is among the `n_users` most active users and whose
    item is among the `n_items` most reviewed items (ties by id).

    ``None`` or ``math.inf`` keeps everyone.
    """
    users = _top(Counter(r.user_id for r in records), n_users)
    items = _top(Counter(r.item_id for r in records), n_items)
    return [r for r in records if r.user_id in users and r.item_id in items]
