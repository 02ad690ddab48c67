"""Polarity classification of reviews.

Labels come from ratings (1-2 negative, 4-5 positive, 3 dropped). The text
classifier is a linear SVM on the binary bag of words. The combined classifier
adds the frozen rating prediction of the review's (user, item) pair to the
text score inside the hinge:

    min_w  mean (1 - (x.w + prediction(u, i)) y)_+  +  lam ||w||^2
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .corpus import Dictionary, ReviewRecord, SparseBinaryVector, vectorize
from .errors import ConfigurationError, DataError
from .persist import load_bundle, save_bundle

logger = logging.getLogger(__name__)

TEXT_ONLY = "text_only"
COMBINED = "combined"
LAMBDA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0)

RatingFn = Callable[[str, str], float]


def label_from_rating(rating: int) -> Optional[int]:
    """-1 for ratings 1-2, +1 for 4-5, ``None`` (dropped) for 3."""
    if rating not in (1, 2, 3, 4, 5):
        raise ValueError(f"rating must be in 1..5, got {rating!r}")
    if rating == 3:
        return None
    return 1 if rating >= 4 else -1


@dataclass(frozen=True)
class PolarityExample:
    features: SparseBinaryVector
    label: int
    user: str
    item: str
    rating: int


def make_examples(records: Iterable[ReviewRecord], dictionary: Dictionary) -> list[PolarityExample]:
    out = []
    for r in records:
        label = label_from_rating(r.rating)
        if label is not None:
            out.append(PolarityExample(vectorize(r.tokens, dictionary), label, r.user_id, r.item_id, r.rating))
    return out


def hinge(x):
    return np.maximum(0.0, x)


def _design(examples: Sequence[PolarityExample]):
    dims = examples[0].features.dims
    idx = [np.fromiter(e.features.active, dtype=np.int64) for e in examples]
    y = np.array([e.label for e in examples], dtype=np.float64)
    return dims, idx, y


def _margins(w, idx, y, offsets):
    scores = np.array([w[a].sum() for a in idx]) + offsets
    return 1.0 - y * scores


def objective(w: np.ndarray, examples: Sequence[PolarityExample], lam: float,
              offsets: Optional[np.ndarray] = None) -> float:
    """Mean hinge loss plus lam ||w||^2."""
    _, idx, y = _design(examples)
    off = np.zeros(len(examples)) if offsets is None else np.asarray(offsets, dtype=np.float64)
    return float(hinge(_margins(w, idx, y, off)).mean() + lam * (w @ w))


def subgradient(w: np.ndarray, examples: Sequence[PolarityExample], lam: float,
                offsets: Optional[np.ndarray] = None) -> np.ndarray:
    """A subgradient of `objective`; exact gradient away from hinge kinks."""
    _, idx, y = _design(examples)
    off = np.zeros(len(examples)) if offsets is None else np.asarray(offsets, dtype=np.float64)
    active = _margins(w, idx, y, off) > 0
    g = 2.0 * lam * w
    n = len(examples)
    for a, yy, on in zip(idx, y, active):
        if on:
            g[a] -= yy / n
    return g


def _pegasos(dims, idx, y, offsets, lam, epochs, seed):
    """Stochastic subgradient descent with step 1 / (2 lam t).

    This is Pegasos for the regularizer (2 lam / 2) ||w||^2. The weight vector
    is kept as scale * v so the shrinkage step costs O(1).
    """
    rng = np.random.default_rng(seed)
    v = np.zeros(dims)
    scale = 1.0
    t = 0
    history = []
    n = len(y)
    for _ in range(epochs):
        for j in rng.permutation(n):
            t += 1
            eta = 1.0 / (2.0 * lam * t)
            a = idx[j]
            margin = y[j] * (scale * v[a].sum() + offsets[j])
            if t == 1:
                v[:] = 0.0
                scale = 1.0
            else:
                scale *= 1.0 - 1.0 / t
            if margin < 1.0:
                v[a] += eta * y[j] / scale
            if scale < 1e-9:
                v *= scale
                scale = 1.0
        w = scale * v
        loss = float(hinge(_margins(w, idx, y, offsets)).mean() + lam * (w @ w))
        history.append(loss)
    return scale * v, history


@dataclass(eq=False)
class LinearClassifier:
    w: np.ndarray
    lam: float
    mode: str = TEXT_ONLY
    recommender: Optional[RatingFn] = field(default=None, repr=False)
    center_f: bool = False
    history: list = field(default_factory=list, repr=False)

    def offset(self, u: str, i: str) -> float:
        if self.mode != COMBINED:
            return 0.0
        if self.recommender is None:
            raise ConfigurationError("combined classifier has no recommender attached")
        pred = self.recommender(u, i)
        return pred - 3.0 if self.center_f else pred

    def score(self, features: SparseBinaryVector, u: str = "", i: str = "") -> float:
        return float(self.w[list(features.active)].sum()) + self.offset(u, i)


def _check_examples(examples: Sequence[PolarityExample], lam: float) -> None:
    if lam <= 0:
        raise ConfigurationError("lambda must be positive")
    labels = {e.label for e in examples}
    if labels != {-1, 1}:
        raise DataError(f"training needs both classes, got labels {sorted(labels)}")


def train_text_svm(examples: Sequence[PolarityExample], lam: float = 1e-2, epochs: int = 10,
                   seed: int = 0) -> LinearClassifier:
    _check_examples(examples, lam)
    dims, idx, y = _design(examples)
    w, history = _pegasos(dims, idx, y, np.zeros(len(y)), lam, epochs, seed)
    return LinearClassifier(w, lam, TEXT_ONLY, history=history)


def train_combined(examples: Sequence[PolarityExample], recommender: RatingFn, lam: float = 1e-2,
                   epochs: int = 10, seed: int = 0, center_f: bool = False) -> LinearClassifier:
    """Learn w with the recommender's predictions frozen as per-example offsets."""
    _check_examples(examples, lam)
    dims, idx, y = _design(examples)
    offsets = np.array([recommender(e.user, e.item) for e in examples], dtype=np.float64)
    if center_f:
        offsets = offsets - 3.0
    w, history = _pegasos(dims, idx, y, offsets, lam, epochs, seed)
    return LinearClassifier(w, lam, COMBINED, recommender, center_f, history)


def predict_polarity(model, features: SparseBinaryVector, u: str = "", i: str = "") -> int:
    """Sign of the model score, with 0 mapped to +1."""
    return 1 if model.score(features, u, i) >= 0 else -1


@dataclass
class RatingThresholdClassifier:
    """A recommender used directly as a polarity classifier: prediction - 3."""

    recommender: RatingFn

    def score(self, features, u: str = "", i: str = "") -> float:
        return self.recommender(u, i) - 3.0


def evaluate_error(model, examples: Sequence[PolarityExample]) -> float:
    """Fraction of misclassified examples."""
    if not examples:
        raise DataError("no polarity examples to evaluate (all rated 3?)")
    wrong = sum(predict_polarity(model, e.features, e.user, e.item) != e.label for e in examples)
    return wrong / len(examples)


def select_lambda(
    train: Sequence[PolarityExample],
    val: Sequence[PolarityExample],
    grid: Sequence[float] = LAMBDA_GRID,
    epochs: int = 10,
    seed: int = 0,
    recommender: Optional[RatingFn] = None,
    center_f: bool = False,
) -> tuple[LinearClassifier, dict[float, float]]:
    """Train one classifier per lambda and keep the best on `val`.

    Ties go to the larger lambda. Returns the chosen classifier and the
    validation error of every grid point.
    """
    errors: dict[float, float] = {}
    best = None
    for lam in sorted(grid):
        if recommender is None:
            clf = train_text_svm(train, lam, epochs, seed)
        else:
            clf = train_combined(train, recommender, lam, epochs, seed, center_f)
        errors[lam] = evaluate_error(clf, val)
        if best is None or errors[lam] <= errors[best.lam]:
            best = clf
    return best, errors


def save_classifier(path: Union[str, Path], clf: LinearClassifier, dictionary: Dictionary,
                    ratings_model: Optional[str] = None) -> None:
    meta = {
        "lambda": clf.lam,
        "mode": clf.mode,
        "center_f": clf.center_f,
        "ratings_model": ratings_model,
        "dictionary": dictionary.to_json(),
        "history": list(clf.history),
    }
    save_bundle(path, "sentiment", meta, {"w": clf.w})


def load_classifier(path: Union[str, Path], recommender: Optional[RatingFn] = None
                    ) -> tuple[LinearClassifier, Dictionary, dict]:
    meta, arrays = load_bundle(path, "sentiment")
    clf = LinearClassifier(arrays["w"], float(meta["lambda"]), meta["mode"], recommender,
                           bool(meta["center_f"]), list(meta["history"]))
    return clf, Dictionary.from_json(meta["dictionary"]), meta
