import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from revrec.corpus import DictionaryConfig, ReviewRecord, SparseBinaryVector, build_dictionary
from revrec.errors import ConfigurationError, DataError
from revrec.ratings import (
    COMPONENTS,
    LATENT,
    NONE,
    RAW,
    FactorModel,
    ProfileSet,
    TextProfile,
    build_profile_set,
    build_text_profile,
    evaluate_mse,
    fit_betas,
    fit_biases,
    fit_hybrid,
    fit_nmf,
    load_model,
    masked_nmf,
    masked_objective,
    nmf_dense,
    predict_hybrid,
    predict_mf,
    predict_text_term,
    save_model,
    similarity_latent,
    similarity_raw,
    text_similarity,
)
from revrec.autoencoder import AutoencoderParams


def rec(u, i, rating, body="plain text."):
    return ReviewRecord(u, i, rating, body)


# -- biases ------------------------------------------------------------------


def test_bias_examples():
    b = fit_biases([rec("u", "a", 4), rec("u", "b", 2)])
    assert b.mu == 3 and b.user("u") == 3
    b = fit_biases([rec("A", "x", 5), rec("B", "x", 1)])
    assert (b.mu, b.user("A"), b.user("B")) == (3, 5, 1)
    assert b.user("nobody") == b.mu and b.item("nothing") == b.mu
    with pytest.raises(DataError):
        fit_biases([])


# -- factorization -----------------------------------------------------------


@pytest.mark.parametrize("solver", ["anls", "mu"])
def test_rank_one_is_recovered(solver):
    rng = np.random.default_rng(0)
    R = np.outer(rng.random(8) + 0.1, rng.random(6) + 0.1)
    U, V, hist = nmf_dense(R, np.ones_like(R, bool), 1, lambda_u=0, lambda_i=0,
                           max_iters=500, tol=0, seed=0, solver=solver)
    assert hist[-1] < 1e-6 * hist[0]
    assert np.allclose(U @ V.T, R, atol=1e-3)


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.floats(0, 1), st.sampled_from(["anls", "mu"]))
def test_objective_monotone_and_factors_nonnegative(seed, lam, solver):
    rng = np.random.default_rng(seed)
    R = rng.integers(1, 6, (9, 7)).astype(float)
    mask = rng.random((9, 7)) < 0.5
    mask[0, 0] = True
    U, V, hist = nmf_dense(R, mask, 3, lambda_u=lam, lambda_i=lam, max_iters=40, tol=0,
                           seed=seed, solver=solver)
    assert np.all(np.diff(hist) <= 1e-10 * max(1.0, hist[0]))
    assert (U >= 0).all() and (V >= 0).all()


def test_objective_matches_dense_formula():
    rng = np.random.default_rng(1)
    R = rng.integers(1, 6, (5, 4)).astype(float)
    mask = rng.random((5, 4)) < 0.6
    U, V = rng.random((5, 2)), rng.random((4, 2))
    r, c = np.nonzero(mask)
    S = sp.csr_matrix((R[r, c], (r, c)), shape=R.shape)
    dense = np.sum((mask * (R - U @ V.T)) ** 2) + 0.3 * np.sum(U**2) + 0.7 * np.sum(V**2)
    assert masked_objective(S, U, V, 0.3, 0.7) == pytest.approx(dense, rel=1e-12)


@pytest.mark.parametrize("solver", ["anls", "mu"])
def test_masked_cells_do_not_matter(solver):
    rng = np.random.default_rng(2)
    R = rng.integers(1, 6, (10, 12)).astype(float)
    mask = rng.random(R.shape) < 0.4
    R2 = R.copy()
    R2[~mask] = rng.random((~mask).sum()) * 100
    a = nmf_dense(R, mask, 3, max_iters=30, seed=5, solver=solver)
    b = nmf_dense(R2, mask, 3, max_iters=30, seed=5, solver=solver)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_nmf_argument_errors():
    R = sp.csr_matrix(np.ones((3, 3)))
    with pytest.raises(ConfigurationError):
        masked_nmf(R, 0)
    with pytest.raises(ConfigurationError):
        masked_nmf(R, 1, lambda_u=-1)
    with pytest.raises(ConfigurationError):
        masked_nmf(R, 1, solver="sgd")
    with pytest.raises(DataError):
        masked_nmf(sp.csr_matrix((3, 3)), 1)
    with pytest.warns(UserWarning):
        masked_nmf(R, 5, max_iters=2)


def test_predict_mf_examples():
    m = FactorModel(("a", "z"), ("i",), np.array([[1.0, 2.0], [0.0, 0.0]]), np.array([[3.0, 1.0]]))
    assert predict_mf(m, "a", "i") == 5.0
    assert predict_mf(m, "z", "i") == 0.0
    assert predict_mf(m, "unseen", "i") == 0.0


def test_fit_nmf_on_records_is_seeded():
    rng = np.random.default_rng(0)
    data = [rec(f"u{a}", f"i{b}", int(rng.integers(1, 6))) for a in range(6) for b in range(5) if rng.random() < 0.7]
    f1, f2 = fit_nmf(data, 2, seed=3), fit_nmf(data, 2, seed=3)
    assert np.array_equal(f1.gamma_u, f2.gamma_u)
    assert list(f1.users) == sorted({r.user_id for r in data})


# -- text profiles and similarities ----------------------------------------------


def raw_profile(dims, idx):
    return TextProfile(RAW, SparseBinaryVector.from_indices(dims, idx))


def test_raw_similarity_examples():
    p = raw_profile(4, [0, 1])
    assert similarity_raw(p, p) == 1.0
    assert similarity_raw(p, raw_profile(4, [2, 3])) == 0.0
    assert similarity_raw(p, raw_profile(4, [1, 2])) == pytest.approx(0.5)
    assert similarity_raw(p, raw_profile(4, [])) == 0.0


def test_latent_similarity_examples():
    p = TextProfile(LATENT, np.array([0.1, 0.2]), alpha=1.0)
    assert similarity_latent(p, p) == 1.0
    q = TextProfile(LATENT, np.array([0.1 + 3.0, 0.2]), alpha=1.0)
    assert similarity_latent(p, q) == pytest.approx(0.25)
    half = TextProfile(LATENT, np.array([0.4]), alpha=0.5)
    assert similarity_latent(half, half) == 2.0


def test_similarity_kind_mismatch():
    with pytest.raises(ConfigurationError):
        text_similarity(raw_profile(2, [0]), TextProfile(LATENT, np.array([0.5, 0.5])))


def test_build_text_profile_examples():
    d = build_dictionary([rec("u", "i", 3, "a b c")], DictionaryConfig(10, 0, False))
    prof = build_text_profile([rec("u", "x", 3, "a b"), rec("u", "y", 3, "b c")], RAW, d)
    assert set(prof.vector.active) == {d.token_to_index[t] for t in "abc"}
    assert build_text_profile([], RAW, d).vector.active == ()
    enc = AutoencoderParams.initialize(len(d), 5, seed=0)
    lat = build_text_profile([rec("u", "x", 3, "a b")], LATENT, d, enc)
    assert lat.vector.shape == (5,) and ((lat.vector > 0) & (lat.vector < 1)).all()


def test_profile_set_similarity_rows_match_pairwise():
    rng = np.random.default_rng(0)
    profs = {f"u{j}": raw_profile(15, rng.choice(15, rng.integers(0, 6), replace=False)) for j in range(8)}
    ps = ProfileSet(profs, raw_profile(15, []))
    for u in profs:
        row = ps.similarity_row(u)
        for v in profs:
            assert row[ps.index(v)] == pytest.approx(similarity_raw(profs[v], profs[u]), abs=1e-12)


# -- text term -----------------------------------------------------------------


def _profiles(sims_to_target):
    """Latent profiles whose similarity to the target equals the given values."""
    target = TextProfile(LATENT, np.zeros(1))
    profs = {"t": target}
    for name, s in sims_to_target.items():
        profs[name] = TextProfile(LATENT, np.array([1.0 / s - 1.0]))
    return ProfileSet(profs, TextProfile(LATENT, np.zeros(1)))


def test_text_term_examples():
    ps = _profiles({"a": 1.0})
    assert predict_text_term("t", "i", ps, {"i": [("a", 4)]}) == pytest.approx(4.0)
    ps = _profiles({"a": 0.5, "b": 0.5})
    assert predict_text_term("t", "i", ps, {"i": [("a", 4), ("b", 2)]}) == pytest.approx(1.5)
    assert predict_text_term("t", "new", ps, {"i": [("a", 4)]}) == 0.0


def test_text_term_includes_own_review():
    ps = _profiles({"a": 0.5})
    both = predict_text_term("t", "i", ps, {"i": [("a", 4), ("t", 2)]})
    assert both == pytest.approx((4 * 0.5 + 2 * 1.0) / 2)


# -- weights and hybrid model ------------------------------------------------------


def test_fit_betas_exact_recovery():
    rng = np.random.default_rng(0)
    X = rng.random((50, 5)) * 5
    beta = fit_betas(X, X[:, 2].copy())
    assert np.allclose(beta, [0, 0, 1, 0, 0], atol=1e-6)


def test_fit_betas_zero_column():
    rng = np.random.default_rng(1)
    X = rng.random((40, 5))
    X[:, 4] = 0.0
    y = X @ np.array([0.5, 1.0, 0.0, 2.0, 7.0])
    beta = fit_betas(X, y)
    assert beta[4] == 0.0
    assert np.allclose(beta[:4], [0.5, 1.0, 0.0, 2.0], atol=1e-5)


@given(st.integers(0, 10_000))
def test_fit_betas_normal_equations(seed):
    rng = np.random.default_rng(seed)
    X = rng.random((30, 5)) * 5
    y = rng.integers(1, 6, 30).astype(float)
    beta = fit_betas(X, y)
    scale = np.abs(X.T @ y).max()
    assert np.abs(X.T @ (X @ beta - y)).max() / scale < 1e-6


def test_fit_betas_underdetermined():
    with pytest.raises(DataError):
        fit_betas(np.ones((3, 5)), np.ones(3))


def small_corpus(seed=0, n_users=25, n_items=30):
    from revrec.harness.synthetic import generate_synthetic_corpus
    from revrec.corpus import split_dataset

    return split_dataset(generate_synthetic_corpus(n_users, n_items, 2, vocab=60, seed=seed, density=0.3), seed)


def test_clamp_and_single_component_prediction():
    split = small_corpus()
    m = fit_hybrid(split.train, split.validation, NONE, k=2)
    m.betas = np.array([1.0, 0, 0, 0, 0])
    assert m.predict("u0000", "i0000") == pytest.approx(m.bias.mu)
    m.betas = np.array([2.1 / m.bias.mu * 3, 0, 0, 0, 0])
    assert predict_hybrid(m, "u0000", "i0000") == 5.0
    m.betas = np.array([0.4 / m.bias.mu, 0, 0, 0, 0])
    assert predict_hybrid(m, "u0000", "i0000") == 1.0


def test_evaluate_mse_examples():
    data = [rec("u", "a", 1), rec("u", "b", 5)]
    assert evaluate_mse(lambda u, i: 3.0, data) == 4.0
    truth = {r.item_id: r.rating for r in data}
    assert evaluate_mse(lambda u, i: truth[i], data) == 0.0
    with pytest.raises(DataError):
        evaluate_mse(lambda u, i: 3.0, [])


@pytest.mark.parametrize("kind", [RAW, LATENT, NONE])
def test_model_round_trip_is_bit_exact(tmp_path, kind):
    from revrec.autoencoder import train_on_records
    from revrec.corpus import AUTOENCODER_DICTIONARY

    split = small_corpus(1)
    raw = build_dictionary(split.train, DictionaryConfig(1000, 2, False))
    enc = None
    d = raw
    if kind == LATENT:
        d = build_dictionary(split.train, AUTOENCODER_DICTIONARY)
        enc, _ = train_on_records(split.train, d, coding_dim=6, epochs=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = fit_hybrid(split.train, split.validation, kind, None if kind == NONE else d, enc, k=3,
                       raw_dictionary=raw)
    save_model(tmp_path / "m.bin", m)
    back = load_model(tmp_path / "m.bin")
    pairs = [(r.user_id, r.item_id) for r in split.test] + [("ghost", "i0001"), ("u0001", "ghost")]
    for u, i in pairs:
        assert back.predict(u, i) == m.predict(u, i)
        assert np.array_equal(back.components(u, i), m.components(u, i))
    save_model(tmp_path / "m2.bin", back)
    assert (tmp_path / "m.bin").read_bytes() == (tmp_path / "m2.bin").read_bytes()


def test_hybrid_dominates_single_components_on_validation():
    split = small_corpus(2)
    d = build_dictionary(split.train, DictionaryConfig(1000, 2, False))
    m = fit_hybrid(split.train, split.validation, RAW, d, k=3)
    from revrec.ratings import component_matrix

    X = component_matrix(m, split.validation)
    y = np.array([r.rating for r in split.validation], float)
    combo = np.mean((X @ m.betas - y) ** 2)
    for j, name in enumerate(COMPONENTS):
        assert combo <= np.mean((X[:, j] - y) ** 2) + 1e-9, name
