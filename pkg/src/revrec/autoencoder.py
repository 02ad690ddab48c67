"""Tied-weight sigmoid autoencoder over binary bag-of-words sentences.

    code  = sig(W s + b)
    recon = sig(W^T code + b')

Training minimizes the squared reconstruction error, each sentence weighted by
the inverse of the number of sentences in its review.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse

from .corpus import Dictionary, ReviewRecord, SparseBinaryVector, vectorize
from .errors import ConfigurationError, DataError, NumericalError
from .persist import load_bundle, save_bundle

logger = logging.getLogger(__name__)


def sigmoid(t):
    """Logistic function, stable for large |t|."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class AutoencoderParams:
    W: np.ndarray  # (coding_dim, vocab_size), shared by encoder and decoder
    b: np.ndarray  # (coding_dim,)
    b_prime: np.ndarray  # (vocab_size,)

    def __post_init__(self):
        c, v = self.W.shape
        if self.b.shape != (c,) or self.b_prime.shape != (v,):
            raise ValueError("bias shapes do not match W")

    @property
    def coding_dim(self) -> int:
        return self.W.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.W.shape[1]

    @classmethod
    def initialize(cls, vocab_size: int, coding_dim: int, seed: int = 0) -> "AutoencoderParams":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        bound = np.sqrt(6.0 / (vocab_size + coding_dim))
        return cls(
            rng.uniform(-bound, bound, (coding_dim, vocab_size)),
            np.zeros(coding_dim),
            np.zeros(vocab_size),
        )

    def copy(self) -> "AutoencoderParams":
        return AutoencoderParams(self.W.copy(), self.b.copy(), self.b_prime.copy())


def encode(params: AutoencoderParams, s: SparseBinaryVector) -> np.ndarray:
    """Latent code of a binary vector; sums only the active columns of W."""
    if s.dims != params.vocab_size:
        raise ValueError(f"vector has {s.dims} dims, autoencoder expects {params.vocab_size}")
    pre = params.W[:, list(s.active)].sum(axis=1) + params.b
    return sigmoid(pre)


def decode(params: AutoencoderParams, code: np.ndarray) -> np.ndarray:
    code = np.asarray(code, dtype=np.float64)
    if code.shape != (params.coding_dim,):
        raise ValueError(f"code has shape {code.shape}, expected ({params.coding_dim},)")
    return sigmoid(params.W.T @ code + params.b_prime)


def encode_batch(params: AutoencoderParams, X: np.ndarray) -> np.ndarray:
    return sigmoid(X @ params.W.T + params.b)


def reconstruction_loss(
    params: AutoencoderParams, X: np.ndarray, weights: Optional[np.ndarray] = None
) -> float:
    """Weighted sum over rows of ||x - dec(cod(x))||^2."""
    H = encode_batch(params, X)
    Y = sigmoid(H @ params.W + params.b_prime)
    per_row = np.sum((Y - X) ** 2, axis=1)
    if weights is None:
        return float(per_row.sum())
    return float(per_row @ weights)


def loss_and_gradient(
    params: AutoencoderParams,
    X: np.ndarray,
    weights: Optional[np.ndarray] = None,
    target: Optional[np.ndarray] = None,
) -> tuple[float, AutoencoderParams]:
    """Loss of `reconstruction_loss` and its exact gradient.

    W receives both the decoder term (through W^T) and the encoder term.
    `target` defaults to `X`; pass the clean rows when `X` is corrupted.
    """
    W = params.W
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=np.float64)
    H = encode_batch(params, X)
    Y = sigmoid(H @ W + params.b_prime)
    diff = Y - (X if target is None else target)
    loss = float(np.sum(diff * diff, axis=1) @ w)

    d_out = 2.0 * w[:, None] * diff * Y * (1.0 - Y)  # (n, vocab)
    d_hidden = (d_out @ W.T) * H * (1.0 - H)  # (n, coding)
    grad_W = H.T @ d_out + d_hidden.T @ X
    return loss, AutoencoderParams(grad_W, d_hidden.sum(axis=0), d_out.sum(axis=0))


def sentence_weights(records: Sequence[ReviewRecord]) -> list[float]:
    """1 / (sentences in the review) for every sentence of every record, in record order."""
    return [1.0 / len(r.sentences) for r in records for _ in r.sentences]


def sentence_vectors(records: Sequence[ReviewRecord], dictionary: Dictionary) -> list[SparseBinaryVector]:
    return [vectorize(s.tokens, dictionary) for r in records for s in r.sentences]


_CHUNK = 2048  # rows densified at once when evaluating the full loss


def _sparse_rows(vectors: Sequence[SparseBinaryVector], dims: int) -> sparse.csr_matrix:
    indptr = np.cumsum([0] + [len(v.active) for v in vectors])
    indices = np.fromiter((j for v in vectors for j in v.active), dtype=np.int64, count=int(indptr[-1]))
    return sparse.csr_matrix((np.ones(len(indices)), indices, indptr), shape=(len(vectors), dims))


def train(
    sentences: Sequence[SparseBinaryVector],
    coding_dim: int = 1000,
    epochs: int = 10,
    learning_rate: float = 0.1,
    batch_size: int = 32,
    seed: int = 0,
    weights: Optional[Sequence[float]] = None,
    corruption: float = 0.0,
    init: Optional[AutoencoderParams] = None,
) -> tuple[AutoencoderParams, list[float]]:
    """Mini-batch SGD on the weighted reconstruction loss.

    Returns the parameters and the loss history: entry 0 is the loss at
    initialization, entry e the loss after epoch e, both as the weighted mean
    per sentence over the whole training set. `corruption` > 0 zeroes that
    fraction of input bits before encoding (masking noise); the target stays
    clean.
    """
    if not sentences:
        raise DataError("no sentences to train on")
    if not 0.0 <= corruption < 1.0:
        raise ConfigurationError("corruption must lie in [0, 1)")
    vocab = sentences[0].dims
    X = _sparse_rows(sentences, vocab)
    w = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (X.shape[0],):
        raise ConfigurationError("one weight per sentence is required")
    total_w = w.sum()

    rng = np.random.default_rng(seed)
    params = init.copy() if init is not None else AutoencoderParams.initialize(
        vocab, coding_dim, int(rng.integers(2**32))
    )

    def epoch_loss() -> float:
        loss = sum(
            reconstruction_loss(params, X[j : j + _CHUNK].toarray(), w[j : j + _CHUNK])
            for j in range(0, X.shape[0], _CHUNK)
        ) / total_w
        if not np.isfinite(loss):
            raise NumericalError(
                f"autoencoder loss became non-finite (lr={learning_rate}, batch={batch_size})"
            )
        return float(loss)

    history = [epoch_loss()]
    for epoch in range(epochs):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], batch_size):
            idx = order[start : start + batch_size]
            xb = X[idx].toarray()
            if corruption:
                xin = xb * (rng.random(xb.shape) >= corruption)
                _, grad = loss_and_gradient(params, xin, w[idx], target=xb)
            else:
                _, grad = loss_and_gradient(params, xb, w[idx])
            step = learning_rate / len(idx)
            params.W[...] -= step * grad.W
            params.b[...] -= step * grad.b
            params.b_prime[...] -= step * grad.b_prime
        history.append(epoch_loss())
        logger.debug("autoencoder epoch %d loss %.6f", epoch + 1, history[-1])
    return params, history



def train_on_records(
    records: Sequence[ReviewRecord],
    dictionary: Dictionary,
    coding_dim: int = 1000,
    epochs: int = 10,
    learning_rate: float = 0.1,
    batch_size: int = 32,
    seed: int = 0,
    corruption: float = 0.0,
) -> tuple[AutoencoderParams, list[float]]:
    """Train on every sentence of `records`, weighted by 1/sentences-per-review."""
    return train(
        sentence_vectors(records, dictionary), coding_dim, epochs, learning_rate,
        batch_size, seed, sentence_weights(records), corruption,
    )


def save_autoencoder(path: Union[str, Path], params: AutoencoderParams, dictionary: Dictionary,
                     meta: Optional[dict] = None) -> None:
    info = dict(meta or {})
    info["dictionary"] = dictionary.to_json()
    save_bundle(path, "autoencoder", info, {"W": params.W, "b": params.b, "b_prime": params.b_prime})


def load_autoencoder(path: Union[str, Path]) -> tuple[AutoencoderParams, Dictionary, dict]:
    meta, a = load_bundle(path, "autoencoder")
    params = AutoencoderParams(a["W"], a["b"], a["b_prime"])
    dictionary = Dictionary.from_json(meta.pop("dictionary"))
    if len(dictionary) != params.vocab_size:
        raise DataError(f"{path}: dictionary size {len(dictionary)} != autoencoder vocabulary {params.vocab_size}")
    return params, dictionary, meta
