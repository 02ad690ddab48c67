"""Masked non-negative matrix factorization of the rating matrix.

Only observed (training) cells enter the fit, which minimizes

    ||M * (R - G_U G_I^T)||^2 + lambda_u ||G_U||^2 + lambda_i ||G_I||^2

Two block solvers are available. Both keep the factors non-negative and never
increase the objective:

* ``"anls"`` (default): alternating non-negative least squares. Each user row
  is solved as an NNLS problem over that user's observed items (ridge term
  included) by coordinate descent, then the same for items. After each
  iteration both factors are pushed further along their last change (clipped
  at zero); the move is kept only if it lowers the objective, and its length
  adapts to how often that happens.
* ``"mu"``: Lee-Seung multiplicative updates restricted to the mask, with the
  penalties added to the denominators,
  ``G_U <- G_U * (M*R) G_I / ((M*(G_U G_I^T)) G_I + lambda_u G_U)``.
  Cheaper per sweep but much slower to converge.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from ..corpus import ReviewRecord
from ..errors import ConfigurationError, DataError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FactorModel:
    users: tuple[str, ...]
    items: tuple[str, ...]
    gamma_u: np.ndarray  # (n_users, k)
    gamma_i: np.ndarray  # (n_items, k)
    lambda_u: float = 0.0
    lambda_i: float = 0.0
    seed: int = 0
    objective: tuple[float, ...] = ()
    _user_index: dict = field(init=False, repr=False)
    _item_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_user_index", {u: j for j, u in enumerate(self.users)})
        object.__setattr__(self, "_item_index", {i: j for j, i in enumerate(self.items)})

    @property
    def k(self) -> int:
        return self.gamma_u.shape[1]

    def user_vector(self, u: str) -> Optional[np.ndarray]:
        j = self._user_index.get(u)
        return None if j is None else self.gamma_u[j]

    def item_vector(self, i: str) -> Optional[np.ndarray]:
        j = self._item_index.get(i)
        return None if j is None else self.gamma_i[j]


def predict_mf(model: FactorModel, u: str, i: str) -> float:
    """Dot product of the user and item factors; 0 when either is unknown."""
    gu, gi = model.user_vector(u), model.item_vector(i)
    if gu is None or gi is None:
        return 0.0
    return float(gu @ gi)


def masked_objective(
    R: sp.csr_matrix, U: np.ndarray, V: np.ndarray, lambda_u: float, lambda_i: float
) -> float:
    rows = np.repeat(np.arange(R.shape[0]), np.diff(R.indptr))
    pred = np.einsum("ij,ij->i", U[rows], V[R.indices])
    return float(
        np.sum((R.data - pred) ** 2) + lambda_u * np.sum(U * U) + lambda_i * np.sum(V * V)
    )


def _mu_step(X, Y, R, rows, cols, lam):
    """In-place multiplicative update of X given Y, where R is X-major."""
    pred = np.einsum("ij,ij->i", X[rows], Y[cols])
    P = sp.csr_matrix((pred, R.indices, R.indptr), shape=R.shape)
    num = R @ Y
    den = P @ Y + lam * X
    np.divide(num, den, out=num, where=den > 0)
    num[den <= 0] = 1.0
    X *= num


def _nnls_step(X, Y, R, rows, cols, lam, sweeps=10, rtol=1e-10):
    """In-place minimization over X given Y, every row an NNLS problem.

    Works on the per-row normal equations (gram_a x = rhs_a restricted to
    x >= 0) by cyclic coordinate descent, all rows at once, warm-started
    from the current X. Each coordinate step is an exact minimization, so the
    objective never increases; the sweeps stop once no entry moves by more
    than `rtol` relative to the largest entry.
    """
    n, k = X.shape
    pattern = sp.csr_matrix((np.ones_like(R.data), R.indices, R.indptr), shape=R.shape)
    outer = (Y[:, :, None] * Y[:, None, :]).reshape(len(Y), k * k)
    gram = np.asarray(pattern @ outer).reshape(n, k, k)
    gram += lam * np.eye(k)
    rhs = np.asarray(R @ Y)
    diag = np.diagonal(gram, axis1=1, axis2=2).copy()
    live = diag > 0
    X[~live] = 0.0  # unobserved rows with lam = 0 keep no signal
    safe = np.where(live, diag, 1.0)
    for _ in range(sweeps):
        moved = 0.0
        for j in range(k):
            # gradient of the row objective along coordinate j
            g = np.einsum("ak,ak->a", gram[:, j, :], X) - rhs[:, j]
            new = np.where(live[:, j], np.maximum(0.0, X[:, j] - g / safe[:, j]), 0.0)
            moved = max(moved, float(np.max(np.abs(new - X[:, j]))))
            X[:, j] = new
        if moved <= rtol * max(1.0, float(X.max())):
            break


SOLVERS = {"anls": _nnls_step, "mu": _mu_step}


def masked_nmf(
    R: sp.csr_matrix,
    k: int,
    lambda_u: float = 0.05,
    lambda_i: float = 0.05,
    max_iters: int = 500,
    tol: float = 1e-7,
    seed: int = 0,
    solver: str = "anls",
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Factor the observed entries of sparse `R` as U V^T with U, V >= 0.

    Every stored entry of `R` counts as observed (explicit zeros included);
    absent entries are masked out. Returns ``(U, V, objective_history)`` where
    the history starts with the objective at initialization.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if solver not in SOLVERS:
        raise ConfigurationError(f"unknown NMF solver {solver!r} ({', '.join(SOLVERS)})")
    step = SOLVERS[solver]
    if lambda_u < 0 or lambda_i < 0:
        raise ConfigurationError("regularization weights must be non-negative")
    R = sp.csr_matrix(R, dtype=np.float64)
    R.sort_indices()
    if R.nnz == 0:
        raise DataError("no observed entries to factorize")
    if (R.data < 0).any():
        raise DataError("non-negative factorization needs non-negative entries")
    n_u, n_i = R.shape
    if k > min(n_u, n_i):
        warnings.warn(f"k={k} exceeds min(#users, #items)={min(n_u, n_i)}", stacklevel=2)

    rng = np.random.default_rng(seed)
    scale = np.sqrt(R.data.mean() / k)
    # 1 - U[0,1) lies in (0, 1]: a zero entry could never leave zero
    U = (1.0 - rng.random((n_u, k))) * scale
    V = (1.0 - rng.random((n_i, k))) * scale

    Rt = R.T.tocsr()
    Rt.sort_indices()
    rows = np.repeat(np.arange(n_u), np.diff(R.indptr))
    rows_t = np.repeat(np.arange(n_i), np.diff(Rt.indptr))

    history = [masked_objective(R, U, V, lambda_u, lambda_i)]
    extrapolate = solver == "anls"
    reach = 0.5
    for it in range(max_iters):
        if extrapolate:
            U0, V0 = U.copy(), V.copy()
        step(U, V, R, rows, R.indices, lambda_u)
        step(V, U, Rt, rows_t, Rt.indices, lambda_i)
        obj = masked_objective(R, U, V, lambda_u, lambda_i)
        if extrapolate:
            Ue = np.maximum(0.0, U + reach * (U - U0))
            Ve = np.maximum(0.0, V + reach * (V - V0))
            obj_e = masked_objective(R, Ue, Ve, lambda_u, lambda_i)
            if obj_e < obj:
                U, V, obj = Ue, Ve, obj_e
                reach = min(1.5 * reach, 10.0)
            else:
                reach = max(0.5 * reach, 0.01)
        if not np.isfinite(obj):
            raise NumericalError(f"NMF objective became non-finite at iteration {it + 1}")
        prev = history[-1]
        history.append(obj)
        if prev > 0 and (prev - obj) / prev < tol:
            break
    logger.debug("masked NMF: %d iterations, objective %.6g", len(history) - 1, history[-1])
    return U, V, history


def nmf_dense(
    matrix: np.ndarray, mask: np.ndarray, k: int, **kwargs
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """`masked_nmf` on a dense matrix; cells where `mask` is false are ignored."""
    mask = np.asarray(mask, dtype=bool)
    r, c = np.nonzero(mask)
    R = sp.csr_matrix((np.asarray(matrix, dtype=np.float64)[r, c], (r, c)), shape=mask.shape)
    return masked_nmf(R, k, **kwargs)


def fit_nmf(
    train: Sequence[ReviewRecord],
    k: int = 16,
    lambda_u: float = 0.05,
    lambda_i: float = 0.05,
    max_iters: int = 500,
    tol: float = 1e-7,
    seed: int = 0,
    solver: str = "anls",
) -> FactorModel:
    """Fit user and item factors on the training ratings."""
    if not train:
        raise DataError("cannot factorize an empty training set")
    users = tuple(sorted({r.user_id for r in train}))
    items = tuple(sorted({r.item_id for r in train}))
    uidx = {u: j for j, u in enumerate(users)}
    iidx = {i: j for j, i in enumerate(items)}
    cells: dict[tuple[int, int], list[int]] = {}
    for r in train:
        cells.setdefault((uidx[r.user_id], iidx[r.item_id]), []).append(r.rating)
    keys = sorted(cells)
    vals = np.array([np.mean(cells[key]) for key in keys])
    rc = np.array(keys, dtype=np.int64).reshape(-1, 2)
    R = sp.csr_matrix((vals, (rc[:, 0], rc[:, 1])), shape=(len(users), len(items)))
    U, V, history = masked_nmf(R, k, lambda_u, lambda_i, max_iters, tol, seed, solver)
    return FactorModel(users, items, U, V, lambda_u, lambda_i, seed, tuple(history))
