"""The five-component hybrid rating predictor

    prediction(u, i) = b1 mu + b2 mu_u + b3 mu_i + b4 (gamma_u . gamma_i) + b5 text(u, i)

where text(u, i) is the similarity-weighted rating of item i by the training
users, divided by the number of training reviews of i. Components are fitted
independently on the training set; the weights b are least squares on a
separate fitting set (the validation split by default).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from ..autoencoder import AutoencoderParams
from ..corpus import Dictionary, ReviewRecord, SparseBinaryVector
from ..errors import ConfigurationError, DataError
from ..persist import load_bundle, pack_ragged, save_bundle, unpack_ragged
from .bias import BiasModel, fit_biases
from .nmf import FactorModel, fit_nmf, predict_mf
from .profiles import LATENT, NONE, RAW, ProfileSet, TextProfile, build_profile_set, text_similarity

logger = logging.getLogger(__name__)

COMPONENTS = ("mu", "mu_u", "mu_i", "mf", "text")
RIDGE = 1e-8
RATING_RANGE = (1.0, 5.0)

TrainIndex = Mapping[str, Sequence[tuple[str, int]]]


def build_train_index(train: Sequence[ReviewRecord]) -> dict[str, list[tuple[str, int]]]:
    """Per item, the (user, rating) pairs of its training reviews."""
    index: dict[str, list[tuple[str, int]]] = {}
    for r in train:
        index.setdefault(r.item_id, []).append((r.user_id, r.rating))
    return index


def predict_text_term(
    u: str,
    i: str,
    profiles: ProfileSet,
    train_index: TrainIndex,
    sim: Optional[Callable[[TextProfile, TextProfile], float]] = None,
) -> float:
    """Text term: sum of rating(v, i) * sim(profile_v, profile_u) over the training
    reviews of i, divided by their count. 0 for items without training reviews.

    The target user's own training review of i, if any, is part of the sum.
    """
    reviews = train_index.get(i)
    if not reviews:
        return 0.0
    target = profiles[u]
    if sim is not None:
        return sum(r * sim(profiles[v], target) for v, r in reviews) / len(reviews)
    row = profiles.similarity_row(u)
    total = 0.0
    for v, r in reviews:
        j = profiles.index(v)
        s = row[j] if j is not None else text_similarity(profiles[v], target)
        total += r * s
    return total / len(reviews)


def fit_betas(components: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Least-squares weights of the component columns, via the normal equations.

    Falls back to a 1e-8 ridge when X^T X is singular, which sets the weight of
    an all-zero column to exactly 0.
    """
    X = np.asarray(components, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("components must be (n, p) with one target per row")
    n, p = X.shape
    if n < p:
        raise DataError(f"need at least {p} fitting points, got {n}")
    A = X.T @ X
    rhs = X.T @ y
    if np.linalg.matrix_rank(A) < p:
        A = A + RIDGE * np.eye(p)
    return np.linalg.solve(A, rhs)


@dataclass(eq=False)
class HybridRatingModel:
    betas: np.ndarray
    bias: BiasModel
    factors: FactorModel
    profiles: Optional[ProfileSet]
    train_index: dict[str, list[tuple[str, int]]]
    text_dictionary: Optional[Dictionary] = None
    raw_dictionary: Optional[Dictionary] = None
    encoder: Optional[AutoencoderParams] = None
    meta: dict = field(default_factory=dict)

    @property
    def profile_kind(self) -> str:
        return NONE if self.profiles is None else self.profiles.kind

    def text_term(self, u: str, i: str) -> float:
        if self.profiles is None:
            return 0.0
        return predict_text_term(u, i, self.profiles, self.train_index)

    def components(self, u: str, i: str) -> np.ndarray:
        """The unweighted component predictions, in `COMPONENTS` order."""
        b = self.bias
        return np.array(
            [b.mu, b.user(u), b.item(i), predict_mf(self.factors, u, i), self.text_term(u, i)]
        )

    def raw_score(self, u: str, i: str) -> float:
        return float(self.betas @ self.components(u, i))

    def predict(self, u: str, i: str) -> float:
        return predict_hybrid(self, u, i)

    __call__ = predict


def predict_hybrid(model: HybridRatingModel, u: str, i: str) -> float:
    lo, hi = RATING_RANGE
    return float(min(hi, max(lo, model.raw_score(u, i))))


def component_matrix(model: HybridRatingModel, records: Sequence[ReviewRecord]) -> np.ndarray:
    return np.array([model.components(r.user_id, r.item_id) for r in records]).reshape(-1, 5)


def fit_hybrid(
    train: Sequence[ReviewRecord],
    fit_set: Optional[Sequence[ReviewRecord]] = None,
    profile: str = RAW,
    dictionary: Optional[Dictionary] = None,
    encoder: Optional[AutoencoderParams] = None,
    k: int = 16,
    lambda_u: float = 0.05,
    lambda_i: float = 0.05,
    alpha: float = 1.0,
    max_iters: int = 500,
    tol: float = 1e-7,
    seed: int = 0,
    raw_dictionary: Optional[Dictionary] = None,
    factors: Optional[FactorModel] = None,
) -> HybridRatingModel:
    """Fit every component on `train`, then the weights on `fit_set`.

    `dictionary` is the profile dictionary: the raw dictionary for raw profiles,
    the autoencoder dictionary for latent ones. With ``fit_set=None`` the
    weights are fitted on `train`. Pre-fitted `factors` are reused as is.
    """
    if profile not in (RAW, LATENT, NONE):
        raise ConfigurationError(f"unknown profile kind {profile!r}")
    if profile != NONE and dictionary is None:
        raise ConfigurationError(f"{profile} profiles need a dictionary")
    bias = fit_biases(train)
    if factors is None:
        factors = fit_nmf(train, k, lambda_u, lambda_i, max_iters, tol, seed)
    profiles = None
    if profile != NONE:
        profiles = build_profile_set(train, profile, dictionary, encoder, alpha)
    model = HybridRatingModel(
        betas=np.zeros(5),
        bias=bias,
        factors=factors,
        profiles=profiles,
        train_index=build_train_index(train),
        text_dictionary=dictionary if profile != NONE else None,
        raw_dictionary=raw_dictionary if raw_dictionary is not None else (
            dictionary if profile == RAW else None
        ),
        encoder=encoder if profile == LATENT else None,
        meta={
            "profile": profile,
            "k": factors.k,
            "lambda_u": factors.lambda_u,
            "lambda_i": factors.lambda_i,
            "alpha": alpha,
            "seed": seed,
            "max_iters": max_iters,
            "tol": tol,
            "betas_fitted_on": "train" if fit_set is None else "validation",
        },
    )
    fitting = train if fit_set is None else fit_set
    X = component_matrix(model, fitting)
    y = np.array([r.rating for r in fitting], dtype=np.float64)
    model.betas = fit_betas(X, y)
    logger.info("hybrid(%s) betas %s", profile, np.round(model.betas, 4).tolist())
    return model


def evaluate_mse(predictor: Callable[[str, str], float], test: Sequence[ReviewRecord]) -> float:
    """Mean squared error of `predictor(user, item)` against the test ratings."""
    if not test:
        raise DataError("cannot evaluate on an empty test set")
    err = [(predictor(r.user_id, r.item_id) - r.rating) ** 2 for r in test]
    return float(np.mean(err))


# -- persistence -------------------------------------------------------------


def _str_array(xs) -> np.ndarray:
    return np.array(list(xs), dtype=str)


def save_model(path: Union[str, Path], model: HybridRatingModel) -> None:
    b, f = model.bias, model.factors
    items = sorted(model.train_index)
    pairs = [model.train_index[i] for i in items]
    users_all = sorted({v for ps in pairs for v, _ in ps})
    uix = {v: j for j, v in enumerate(users_all)}
    ip, ix = pack_ragged([[uix[v] for v, _ in ps] for ps in pairs])
    arrays = {
        "betas": model.betas,
        "bias_users": _str_array(b.mu_u),
        "bias_mu_u": np.array(list(b.mu_u.values()), dtype=np.float64),
        "bias_items": _str_array(b.mu_i),
        "bias_mu_i": np.array(list(b.mu_i.values()), dtype=np.float64),
        "mf_users": _str_array(f.users),
        "mf_items": _str_array(f.items),
        "gamma_u": f.gamma_u,
        "gamma_i": f.gamma_i,
        "mf_objective": np.array(f.objective, dtype=np.float64),
        "index_items": _str_array(items),
        "index_users": _str_array(users_all),
        "index_indptr": ip,
        "index_user_idx": ix,
        "index_ratings": np.array([r for ps in pairs for _, r in ps], dtype=np.int64),
    }
    meta = dict(model.meta)
    meta.update(
        mu=b.mu,
        mf={"lambda_u": f.lambda_u, "lambda_i": f.lambda_i, "seed": f.seed, "k": f.k},
        profile=model.profile_kind,
        components=list(COMPONENTS),
    )
    if model.raw_dictionary is not None:
        meta["raw_dictionary"] = model.raw_dictionary.to_json()
    if model.profiles is not None:
        ps = model.profiles
        meta["alpha"] = ps.alpha
        meta["text_dictionary"] = model.text_dictionary.to_json()
        arrays["profile_users"] = _str_array(ps.users)
        if ps.kind == RAW:
            arrays["profile_indptr"], arrays["profile_active"] = pack_ragged(
                [list(ps.profiles[u].vector.active) for u in ps.users]
            )
        else:
            arrays["profile_codes"] = np.vstack([ps.profiles[u].vector for u in ps.users])
            arrays["profile_empty"] = ps.empty.vector
            arrays["ae_W"], arrays["ae_b"], arrays["ae_b_prime"] = (
                model.encoder.W, model.encoder.b, model.encoder.b_prime
            )
    save_bundle(path, "ratings", meta, arrays)


def load_model(path: Union[str, Path]) -> HybridRatingModel:
    meta, a = load_bundle(path, "ratings")
    bias = BiasModel(
        float(meta["mu"]),
        dict(zip(a["bias_users"].tolist(), a["bias_mu_u"].tolist())),
        dict(zip(a["bias_items"].tolist(), a["bias_mu_i"].tolist())),
    )
    mf = meta["mf"]
    factors = FactorModel(
        tuple(a["mf_users"].tolist()),
        tuple(a["mf_items"].tolist()),
        a["gamma_u"].reshape(-1, mf["k"]),
        a["gamma_i"].reshape(-1, mf["k"]),
        mf["lambda_u"],
        mf["lambda_i"],
        mf["seed"],
        tuple(a["mf_objective"].tolist()),
    )
    users_all = a["index_users"].tolist()
    ratings = a["index_ratings"].tolist()
    train_index = {}
    for j, item in enumerate(a["index_items"].tolist()):
        lo, hi = int(a["index_indptr"][j]), int(a["index_indptr"][j + 1])
        train_index[item] = [
            (users_all[int(a["index_user_idx"][t])], ratings[t]) for t in range(lo, hi)
        ]
    raw_dict = Dictionary.from_json(meta["raw_dictionary"]) if "raw_dictionary" in meta else None
    profiles = text_dict = encoder = None
    kind = meta["profile"]
    if kind != NONE:
        alpha = float(meta["alpha"])
        text_dict = Dictionary.from_json(meta["text_dictionary"])
        users = a["profile_users"].tolist()
        if kind == RAW:
            dims = len(text_dict)
            rows = unpack_ragged(a["profile_indptr"], a["profile_active"])
            profs = {
                u: TextProfile(RAW, SparseBinaryVector(dims, tuple(act)), alpha)
                for u, act in zip(users, rows)
            }
            empty = TextProfile(RAW, SparseBinaryVector(dims), alpha)
        else:
            encoder = AutoencoderParams(a["ae_W"], a["ae_b"], a["ae_b_prime"])
            codes = a["profile_codes"].reshape(len(users), -1)
            profs = {u: TextProfile(LATENT, codes[j], alpha) for j, u in enumerate(users)}
            empty = TextProfile(LATENT, a["profile_empty"], alpha)
        profiles = ProfileSet(profs, empty)
    keep = {k: v for k, v in meta.items() if k not in ("raw_dictionary", "text_dictionary", "mf", "mu")}
    return HybridRatingModel(
        betas=a["betas"],
        bias=bias,
        factors=factors,
        profiles=profiles,
        train_index=train_index,
        text_dictionary=text_dict,
        raw_dictionary=raw_dict if raw_dict is not None else (text_dict if kind == RAW else None),
        encoder=encoder,
        meta=keep,
    )
