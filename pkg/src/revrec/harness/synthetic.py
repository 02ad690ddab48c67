"""Synthetic review corpora with planted structure.

Ratings come from non-negative rank-`latent_rank` user and item factors:
``clip(round(gamma_u . gamma_i + noise * eps), 1, 5)``. Review text mixes

* filler words shared by everybody,
* item words naming the item,
* taste words: every latent dimension owns a block of the taste vocabulary
  and a user draws from the blocks in proportion to a sharpened copy of their
  factor, so users with similar tastes write alike (``style=True``; with
  ``style=False`` taste words are drawn uniformly and carry no signal),
* sentiment words whose polarity follows the rating, with some noise.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..corpus import ReviewRecord

FILLER = (
    "the a it this was is and i of to with in for but very really quite just "
    "had has my on at as so too"
).split()
POSITIVE = (
    "great excellent lovely superb delicious fantastic wonderful tasty perfect "
    "brilliant enjoyable amazing pleasant outstanding solid"
).split()
NEGATIVE = (
    "bad awful poor bland terrible disappointing weak stale nasty watery "
    "boring flat harsh mediocre sour"
).split()
# probability that a sentiment word agrees with the rating's polarity
_AGREEMENT = {1: 0.85, 2: 0.7, 3: 0.5, 4: 0.7, 5: 0.85}


def plant_factors(n_users: int, n_items: int, latent_rank: int, rng: np.random.Generator):
    """Uniform non-negative factors scaled so dot products average 3."""
    scale = np.sqrt(3.0 / (latent_rank / 4.0))
    U = rng.random((n_users, latent_rank)) * scale
    V = rng.random((n_items, latent_rank)) * scale
    return U, V


def generate_synthetic_corpus(
    n_users: int = 200,
    n_items: int = 300,
    latent_rank: int = 4,
    vocab: int = 600,
    noise: float = 0.5,
    seed: int = 0,
    density: float = 0.15,
    style: bool = True,
    sharpness: float = 4.0,
) -> list[ReviewRecord]:
    """Reviews for a random subset of the user x item grid.

    User activity and item popularity are log-normal, so some users and items
    have few reviews. `vocab` is the number of taste words, split evenly over
    the latent dimensions.
    """
    if min(n_users, n_items, latent_rank, vocab) < 1:
        raise ValueError("all sizes must be >= 1")
    rng = np.random.default_rng(seed)
    U, V = plant_factors(n_users, n_items, latent_rank, rng)

    activity = rng.lognormal(0.0, 0.6, n_users)
    popularity = rng.lognormal(0.0, 0.6, n_items)
    activity /= activity.mean()
    popularity /= popularity.mean()
    p_obs = np.minimum(1.0, density * np.outer(activity, popularity))
    observed = rng.random((n_users, n_items)) < p_obs
    # every user and item gets at least one review
    for u in np.flatnonzero(~observed.any(axis=1)):
        observed[u, rng.integers(n_items)] = True
    for i in np.flatnonzero(~observed.any(axis=0)):
        observed[rng.integers(n_users), i] = True

    per_dim = max(1, vocab // latent_rank)
    taste_words = [[f"t{k}w{j}" for j in range(per_dim)] for k in range(latent_rank)]
    if style:
        weights = U**sharpness
        weights /= weights.sum(axis=1, keepdims=True)
    else:
        weights = np.full((n_users, latent_rank), 1.0 / latent_rank)
    item_words = [[f"item{i}", f"i{i}x", f"i{i}y"] for i in range(n_items)]

    records = []
    users, items = np.nonzero(observed)
    for u, i in zip(users.tolist(), items.tolist()):
        dot = float(U[u] @ V[i])
        rating = int(np.clip(np.rint(dot + noise * rng.standard_normal()), 1, 5))
        sentences = []
        for _ in range(int(rng.integers(2, 6))):
            words = list(rng.choice(FILLER, size=int(rng.integers(2, 5))))
            if rng.random() < 0.5:
                words.append(item_words[i][int(rng.integers(3))])
            for k in rng.choice(latent_rank, size=int(rng.integers(1, 4)), p=weights[u]):
                words.append(taste_words[k][int(rng.integers(per_dim))])
            if rng.random() < 0.6:
                positive = rating >= 3
                if rng.random() > _AGREEMENT[rating]:
                    positive = not positive
                words.append(rng.choice(POSITIVE if positive else NEGATIVE))
            rng.shuffle(words)
            sentences.append(" ".join(str(w) for w in words).capitalize() + ".")
        title: Optional[str] = None
        if rng.random() < 0.5:
            title = str(rng.choice(POSITIVE if rating >= 3 else NEGATIVE)).capitalize() + "!"
        records.append(
            ReviewRecord(f"u{u:04d}", f"i{i:04d}", rating, " ".join(sentences), title)
        )
    return records
