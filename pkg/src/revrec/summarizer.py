"""Personalized extractive review generation.

A candidate piece of text written by another user u' about the item is scored
against the target user u by

    score = (sim_text(candidate, profile_u) + sim_rating(author_rating, r_hat)) / 2

Three procedures use this score: the best single sentence (1S), the best complete
review (CT) and a greedy multi-sentence selection (XS) that, after the best
sentence, trades the score against the cosine overlap with the text selected so far
until the target user's average review length is reached. Random and
ROUGE-maximizing selectors share the same control flow and serve as lower and
upper references.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .autoencoder import AutoencoderParams
from .corpus import Dictionary, ReviewRecord, Sentence, SparseBinaryVector, union_all, vectorize
from .errors import ConfigurationError
from .ratings.profiles import NONE, ProfileSet, TextProfile, profile_from_vector, text_similarity
from .rouge import rouge_n


class Mode(str, Enum):
    ONE_SENTENCE = "1S"
    COMPLETE_TEXT = "CT"
    SENTENCES = "XS"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigurationError(f"unknown generation mode {value!r} (1s, ct or xs)") from None


@dataclass(frozen=True, eq=False)
class Candidate:
    """A sentence (or, for CT, a whole review) written by another user."""

    sentence: Sentence
    author: str
    author_rating: int
    item: str
    position: int
    bow: SparseBinaryVector  # over the raw dictionary, for the diversity term
    profile: Optional[TextProfile] = None  # same representation as user profiles

    @property
    def key(self) -> tuple[str, int]:
        return (self.author, self.position)

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.sentence.tokens


@dataclass(frozen=True)
class GeneratedReview:
    selected: tuple[Candidate, ...]
    mode: Mode
    scores: tuple[float, ...] = ()
    target_length: int = 0
    exhausted: bool = False  # pool ran out before target_length was reached

    @property
    def empty(self) -> bool:
        return not self.selected

    @property
    def tokens(self) -> list[str]:
        return [t for c in self.selected for t in c.tokens]

    @property
    def word_count(self) -> int:
        return sum(len(c.tokens) for c in self.selected)

    @property
    def text(self) -> str:
        return " ".join(c.sentence.text for c in self.selected)

    def to_json(self, user: str, item: str) -> dict:
        return {
            "user": user,
            "item": item,
            "mode": self.mode.value,
            "text": self.text,
            "sources": [
                {"author": c.author, "rating": c.author_rating, "score": s}
                for c, s in zip(self.selected, self.scores)
            ],
        }


def rating_similarity(r_other: float, r_hat: float) -> float:
    return 1.0 / (1.0 + abs(r_other - r_hat))


def score_candidate(
    c: Candidate,
    target_profile: Optional[TextProfile],
    r_hat: float,
    sim_t: Callable[[TextProfile, TextProfile], float] = text_similarity,
) -> float:
    """Mean of the text and rating similarities.

    Without a target profile (ratings-only scoring) the text similarity is 0.
    """
    if target_profile is None:
        text = 0.0
    else:
        if c.profile is None or c.profile.kind != target_profile.kind:
            got = None if c.profile is None else c.profile.kind
            raise ConfigurationError(
                f"candidate is in {got} representation, profile is {target_profile.kind}"
            )
        text = sim_t(c.profile, target_profile)
    return (text + rating_similarity(c.author_rating, r_hat)) / 2.0


def _sorted(candidates: Sequence[Candidate]) -> list[Candidate]:
    return sorted(candidates, key=lambda c: c.key)


def _argmax(values: Sequence[float]) -> int:
    # first maximum wins: callers keep the pool in tie-break order
    best = 0
    for j in range(1, len(values)):
        if values[j] > values[best]:
            best = j
    return best


def _select_best(pool: list[Candidate], scores: Sequence[float], mode: Mode) -> GeneratedReview:
    if not pool:
        return GeneratedReview((), mode)
    j = _argmax(scores)
    return GeneratedReview((pool[j],), mode, (float(scores[j]),))


Criterion = Callable[[Candidate, list[Candidate], SparseBinaryVector], float]


def _forward_select(pool: list[Candidate], criterion: Criterion, target_length: int) -> GeneratedReview:
    """Greedy selection: take the best candidate, then keep adding the best
    remaining one while the selected text is shorter than `target_length`."""
    if target_length < 0:
        raise ValueError("target_length must be >= 0")
    if not pool:
        return GeneratedReview((), Mode.SENTENCES, (), target_length, exhausted=target_length > 0)
    pool = list(pool)
    dims = pool[0].bow.dims
    selected: list[Candidate] = []
    scores: list[float] = []
    bag = SparseBinaryVector(dims)
    words = 0
    while pool:
        values = [criterion(c, selected, bag) for c in pool]
        j = _argmax(values)
        chosen = pool.pop(j)
        selected.append(chosen)
        scores.append(float(values[j]))
        bag = bag.union(chosen.bow)
        words += len(chosen.tokens)
        if words >= target_length:
            break
    return GeneratedReview(
        tuple(selected), Mode.SENTENCES, tuple(scores), target_length,
        exhausted=words < target_length,
    )


def generate_1s(
    candidates: Sequence[Candidate],
    target_profile: Optional[TextProfile],
    r_hat: float,
    sim_t: Callable[[TextProfile, TextProfile], float] = text_similarity,
) -> GeneratedReview:
    """The single best-scoring sentence; ties go to the smallest (author, position)."""
    pool = _sorted(candidates)
    return _select_best(pool, [score_candidate(c, target_profile, r_hat, sim_t) for c in pool], Mode.ONE_SENTENCE)


def generate_ct(
    reviews: Sequence[Candidate],
    target_profile: Optional[TextProfile],
    r_hat: float,
    sim_t: Callable[[TextProfile, TextProfile], float] = text_similarity,
) -> GeneratedReview:
    """The best-scoring complete review, each review scored as one long sentence."""
    pool = _sorted(reviews)
    return _select_best(pool, [score_candidate(c, target_profile, r_hat, sim_t) for c in pool], Mode.COMPLETE_TEXT)


def generate_xs(
    candidates: Sequence[Candidate],
    target_profile: Optional[TextProfile],
    r_hat: float,
    target_length: int,
    sim_t: Callable[[TextProfile, TextProfile], float] = text_similarity,
) -> GeneratedReview:
    pool = _sorted(candidates)
    score = {id(c): score_candidate(c, target_profile, r_hat, sim_t) for c in pool}
    return _forward_select(pool, lambda c, sel, bag: score[id(c)] - c.bow.cosine(bag), target_length)


def generate_random(
    candidates: Sequence[Candidate], mode, target_length: int = 0, seed: int = 0
) -> GeneratedReview:
    """Same procedures with the score replaced by one seeded uniform draw per candidate."""
    mode = Mode.parse(mode)
    pool = _sorted(candidates)
    draws = np.random.default_rng(seed).random(len(pool)).tolist()
    if mode is not Mode.SENTENCES:
        return _select_best(pool, draws, mode)
    score = {id(c): d for c, d in zip(pool, draws)}
    return _forward_select(pool, lambda c, sel, bag: score[id(c)] - c.bow.cosine(bag), target_length)


def generate_oracle(
    candidates: Sequence[Candidate],
    reference: Sequence[str],
    n: int,
    mode,
    target_length: int = 0,
) -> GeneratedReview:
    """Selection that maximizes ROUGE-n against the actual review.

    1S/CT take the exact argmax; XS adds, at each step, the candidate that most
    increases the ROUGE-n of the accumulated text (forward selection, so not
    optimal over subsets).
    """
    mode = Mode.parse(mode)
    pool = _sorted(candidates)
    if mode is not Mode.SENTENCES:
        return _select_best(pool, [rouge_n(c.tokens, reference, n) for c in pool], mode)

    def criterion(c, selected, bag):
        return rouge_n([t for s in selected for t in s.tokens] + list(c.tokens), reference, n)

    return _forward_select(pool, criterion, target_length)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def average_length(user_reviews: Sequence[ReviewRecord], global_mean: float = 0.0) -> int:
    """Mean word count of the user's reviews, or `global_mean` without reviews."""
    if not user_reviews:
        return _round_half_up(global_mean)
    return _round_half_up(sum(r.n_words for r in user_reviews) / len(user_reviews))


def global_average_length(records: Sequence[ReviewRecord]) -> float:
    return sum(r.n_words for r in records) / len(records) if records else 0.0


def build_candidates(
    item_reviews: Sequence[ReviewRecord],
    target_user: str,
    mode,
    raw_dictionary: Dictionary,
    text_dictionary: Optional[Dictionary] = None,
    kind: str = NONE,
    encoder: Optional[AutoencoderParams] = None,
    alpha: float = 1.0,
) -> list[Candidate]:
    """Candidates from the reviews of one item, excluding the target user's.

    CT yields one candidate per review; 1S and XS one per sentence. When `kind`
    is raw or latent each candidate also carries its text as a profile.
    """
    mode = Mode.parse(mode)
    out = []
    for r in item_reviews:
        if r.user_id == target_user:
            continue
        if mode is Mode.COMPLETE_TEXT:
            units = [(0, Sentence(r.text, tuple(r.tokens)))]
        else:
            units = list(enumerate(r.sentences))
        for pos, s in units:
            profile = None
            if kind != NONE:
                profile = profile_from_vector(vectorize(s.tokens, text_dictionary), kind, encoder, alpha)
            out.append(
                Candidate(s, r.user_id, r.rating, r.item_id, pos, vectorize(s.tokens, raw_dictionary), profile)
            )
    return _sorted(out)


class ReviewGenerator:
    """Generates reviews for (user, item) pairs from a fixed training set.

    `rating_fn` gives r_hat. With ``profiles=None`` the text similarity is
    dropped and selection relies on ratings alone.
    """

    def __init__(
        self,
        train: Sequence[ReviewRecord],
        raw_dictionary: Dictionary,
        rating_fn: Callable[[str, str], float],
        profiles: Optional[ProfileSet] = None,
        text_dictionary: Optional[Dictionary] = None,
        encoder: Optional[AutoencoderParams] = None,
    ):
        self.raw_dictionary = raw_dictionary
        self.rating_fn = rating_fn
        self.profiles = profiles
        self.text_dictionary = text_dictionary
        self.encoder = encoder
        self.by_item: dict[str, list[ReviewRecord]] = {}
        self.by_user: dict[str, list[ReviewRecord]] = {}
        for r in train:
            self.by_item.setdefault(r.item_id, []).append(r)
            self.by_user.setdefault(r.user_id, []).append(r)
        self.global_length = global_average_length(train)
        self._cache: dict[tuple[str, Mode], list[Candidate]] = {}

    @classmethod
    def from_model(cls, train, model, use_text: bool = True) -> "ReviewGenerator":
        if model.raw_dictionary is None:
            raise ConfigurationError("the rating model carries no raw dictionary")
        if not use_text or model.profiles is None:
            return cls(train, model.raw_dictionary, model.predict)
        return cls(train, model.raw_dictionary, model.predict, model.profiles,
                   model.text_dictionary, model.encoder)

    def target_length(self, u: str) -> int:
        return average_length(self.by_user.get(u, []), self.global_length)

    def candidates(self, u: str, i: str, mode) -> list[Candidate]:
        mode = Mode.parse(mode)
        key = (i, mode)
        pool = self._cache.get(key)
        if pool is None:
            kind = NONE if self.profiles is None else self.profiles.kind
            pool = self._cache[key] = build_candidates(
                self.by_item.get(i, []), "", mode, self.raw_dictionary,
                self.text_dictionary, kind, self.encoder,
                1.0 if self.profiles is None else self.profiles.alpha,
            )
        return [c for c in pool if c.author != u]

    def generate(self, u: str, i: str, mode) -> GeneratedReview:
        mode = Mode.parse(mode)
        pool = self.candidates(u, i, mode)
        profile = None if self.profiles is None else self.profiles[u]
        r_hat = self.rating_fn(u, i)
        if mode is Mode.ONE_SENTENCE:
            return generate_1s(pool, profile, r_hat)
        if mode is Mode.COMPLETE_TEXT:
            return generate_ct(pool, profile, r_hat)
        return generate_xs(pool, profile, r_hat, self.target_length(u))
