"""User text profiles and the similarities between them.

A raw profile is the binary union of every bag of words a user wrote, compared
with the cosine. A latent profile is the autoencoder code of that union vector,
compared with 1 / (alpha + euclidean distance).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from ..autoencoder import AutoencoderParams, encode
from ..corpus import Dictionary, ReviewRecord, SparseBinaryVector, union_all, vectorize
from ..errors import ConfigurationError
from ..persist import pack_ragged

RAW = "raw"
LATENT = "latent"
NONE = "none"
PROFILE_KINDS = (RAW, LATENT, NONE)


@dataclass(frozen=True, eq=False)
class TextProfile:
    kind: str
    vector: Union[SparseBinaryVector, np.ndarray]
    alpha: float = 1.0

    @property
    def dims(self) -> int:
        return self.vector.dims if self.kind == RAW else len(self.vector)


def union_vector(records: Sequence[ReviewRecord], dictionary: Dictionary) -> SparseBinaryVector:
    return union_all(len(dictionary), (vectorize(r.tokens, dictionary) for r in records))


def profile_from_vector(
    bow: SparseBinaryVector,
    kind: str,
    encoder: Optional[AutoencoderParams] = None,
    alpha: float = 1.0,
) -> TextProfile:
    """Wrap a bag of words as a profile of `kind` (encoding it when latent)."""
    if kind == RAW:
        return TextProfile(RAW, bow, alpha)
    if kind == LATENT:
        if encoder is None:
            raise ConfigurationError("latent profiles need a trained autoencoder")
        if alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        return TextProfile(LATENT, encode(encoder, bow), alpha)
    raise ConfigurationError(f"unknown profile kind {kind!r}")


def build_text_profile(
    user_records: Sequence[ReviewRecord],
    kind: str,
    dictionary: Dictionary,
    encoder: Optional[AutoencoderParams] = None,
    alpha: float = 1.0,
) -> TextProfile:
    """Profile of all the text in `user_records`.

    For latent profiles `dictionary` must be the autoencoder's dictionary. A user
    without text gets the empty bag of words (encoded, when latent).
    """
    if kind == LATENT and encoder is None:
        raise ConfigurationError("latent profiles need a trained autoencoder")
    return profile_from_vector(union_vector(user_records, dictionary), kind, encoder, alpha)


def similarity_raw(p: TextProfile, q: TextProfile) -> float:
    if p.kind != RAW or q.kind != RAW:
        raise ConfigurationError(f"raw similarity on {p.kind}/{q.kind} profiles")
    return p.vector.cosine(q.vector)


def similarity_latent(p: TextProfile, q: TextProfile) -> float:
    if p.kind != LATENT or q.kind != LATENT:
        raise ConfigurationError(f"latent similarity on {p.kind}/{q.kind} profiles")
    if p.vector.shape != q.vector.shape:
        raise ValueError(f"dimension mismatch: {p.vector.shape} vs {q.vector.shape}")
    return 1.0 / (q.alpha + float(np.linalg.norm(p.vector - q.vector)))


def text_similarity(p: TextProfile, q: TextProfile) -> float:
    """Dispatch on profile kind; both profiles must share it."""
    if p.kind != q.kind:
        raise ConfigurationError(f"profile kinds differ: {p.kind} vs {q.kind}")
    return similarity_raw(p, q) if p.kind == RAW else similarity_latent(p, q)


class ProfileSet:
    """Profiles of the training users, with cached similarity rows.

    Unknown users get `empty`, the profile of a user who wrote nothing.
    """

    def __init__(self, profiles: Mapping[str, TextProfile], empty: TextProfile):
        self.kind = empty.kind
        self.alpha = empty.alpha
        self.users = tuple(sorted(profiles))
        self.profiles = dict(profiles)
        self.empty = empty
        self._index = {u: j for j, u in enumerate(self.users)}
        self._rows: dict[str, np.ndarray] = {}
        self._matrix = None

    def __getitem__(self, u: str) -> TextProfile:
        return self.profiles.get(u, self.empty)

    def __contains__(self, u: str) -> bool:
        return u in self.profiles

    def __len__(self) -> int:
        return len(self.users)

    def index(self, u: str) -> Optional[int]:
        return self._index.get(u)

    def similarity_row(self, u: str) -> np.ndarray:
        """Similarity of every known user (in `users` order) to user `u`."""
        row = self._rows.get(u)
        if row is None:
            row = self._rows[u] = self.similarities_to(self[u])
        return row

    @property
    def similarity_matrix(self) -> np.ndarray:
        return np.vstack([self.similarity_row(u) for u in self.users]) if self.users else np.zeros((0, 0))

    def similarities_to(self, target: TextProfile) -> np.ndarray:
        """Similarity of every known user to an arbitrary `target` profile."""
        if target.kind != self.kind:
            raise ConfigurationError(f"profile kinds differ: {self.kind} vs {target.kind}")
        if not self.users:
            return np.zeros(0)
        X = self._stacked()
        if self.kind == RAW:
            t = target.vector.to_dense()
            dots = np.asarray(X @ t).ravel()
            norms = np.sqrt(np.asarray(X.sum(axis=1)).ravel() * t.sum())
            return np.divide(dots, norms, out=np.zeros_like(dots), where=norms > 0)
        return 1.0 / (self.alpha + np.linalg.norm(X - target.vector, axis=1))

    def _stacked(self):
        if self._matrix is None:
            ps = [self.profiles[u] for u in self.users]
            if self.kind == RAW:
                indptr, indices = pack_ragged([list(p.vector.active) for p in ps])
                self._matrix = sp.csr_matrix(
                    (np.ones(len(indices)), indices, indptr), shape=(len(ps), ps[0].vector.dims)
                )
            else:
                self._matrix = np.vstack([p.vector for p in ps])
        return self._matrix


def build_profile_set(
    train: Sequence[ReviewRecord],
    kind: str,
    dictionary: Dictionary,
    encoder: Optional[AutoencoderParams] = None,
    alpha: float = 1.0,
) -> ProfileSet:
    by_user: dict[str, list[ReviewRecord]] = {}
    for r in train:
        by_user.setdefault(r.user_id, []).append(r)
    profiles = {
        u: build_text_profile(recs, kind, dictionary, encoder, alpha) for u, recs in by_user.items()
    }
    empty = profile_from_vector(SparseBinaryVector(len(dictionary)), kind, encoder, alpha)
    return ProfileSet(profiles, empty)
