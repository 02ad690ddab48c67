import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revrec.autoencoder import (
    AutoencoderParams,
    decode,
    encode,
    load_autoencoder,
    loss_and_gradient,
    reconstruction_loss,
    save_autoencoder,
    sentence_weights,
    sigmoid,
    train,
    train_on_records,
)
from revrec.corpus import DictionaryConfig, ReviewRecord, SparseBinaryVector, build_dictionary
from revrec.errors import ConfigurationError, DataError


def toy_params(vocab=6, coding=4, seed=0):
    rng = np.random.default_rng(seed)
    return AutoencoderParams(rng.normal(0, 0.5, (coding, vocab)), rng.normal(0, 0.5, coding),
                             rng.normal(0, 0.5, vocab))


def dense_encode(p, x):
    return 1.0 / (1.0 + np.exp(-(p.W @ x + p.b)))


def dense_decode(p, h):
    return 1.0 / (1.0 + np.exp(-(p.W.T @ h + p.b_prime)))


def test_sigmoid_examples():
    assert sigmoid(0.0) == 0.5
    assert sigmoid(40.0) == pytest.approx(1.0, abs=1e-15)
    assert sigmoid(-1.37) == pytest.approx(1.0 - sigmoid(1.37), abs=1e-15)
    assert np.all(np.isfinite(sigmoid(np.array([-1000.0, 1000.0]))))


def test_encode_decode_zero_weights():
    p = AutoencoderParams(np.zeros((3, 5)), np.zeros(3), np.zeros(5))
    assert np.all(encode(p, SparseBinaryVector(5, (0, 3))) == 0.5)
    assert np.all(decode(p, np.ones(3)) == 0.5)
    assert decode(p, np.ones(3)).shape == (5,)


def test_encode_empty_vector_is_sigmoid_of_bias():
    p = toy_params()
    assert np.array_equal(encode(p, SparseBinaryVector(6)), sigmoid(p.b))


@given(st.sets(st.integers(0, 5)), st.integers(0, 50))
def test_encode_decode_match_dense_oracle(active, seed):
    p = toy_params(seed=seed)
    s = SparseBinaryVector.from_indices(6, active)
    code = encode(p, s)
    np.testing.assert_allclose(code, dense_encode(p, s.to_dense()), atol=1e-12, rtol=0)
    assert np.all((code > 0) & (code < 1))
    np.testing.assert_allclose(decode(p, code), dense_decode(p, code), atol=1e-12, rtol=0)


def test_shape_mismatch_rejected():
    p = toy_params()
    with pytest.raises(ValueError):
        encode(p, SparseBinaryVector(5, (1,)))
    with pytest.raises(ValueError):
        decode(p, np.zeros(3))
    with pytest.raises(ValueError):
        AutoencoderParams(np.zeros((2, 3)), np.zeros(3), np.zeros(3))


def finite_difference_check(p, X, w, eps=1e-5):
    _, grad = loss_and_gradient(p, X, w)
    worst = 0.0
    for name in ("W", "b", "b_prime"):
        arr, g = getattr(p, name), getattr(grad, name)
        num = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + eps
            up = reconstruction_loss(p, X, w)
            arr[idx] = keep - eps
            down = reconstruction_loss(p, X, w)
            arr[idx] = keep
            num[idx] = (up - down) / (2 * eps)
        worst = max(worst, np.linalg.norm(g - num) / max(np.linalg.norm(g) + np.linalg.norm(num), 1e-12))
    return worst


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    X = (rng.random((5, 6)) < 0.5).astype(float)
    w = rng.random(5) + 0.5
    assert finite_difference_check(toy_params(seed=1), X, w) < 1e-4


def test_loss_matches_reconstruction_loss():
    rng = np.random.default_rng(4)
    X = (rng.random((7, 6)) < 0.4).astype(float)
    p = toy_params(seed=2)
    loss, _ = loss_and_gradient(p, X)
    assert loss == pytest.approx(reconstruction_loss(p, X), rel=1e-12)


def test_epoch_zero_loss_on_zero_inputs_at_zero_decoder():
    vocab = 9
    init = AutoencoderParams(np.zeros((4, vocab)), np.zeros(4), np.zeros(vocab))
    _, history = train([SparseBinaryVector(vocab)] * 10, coding_dim=4, epochs=0, init=init)
    assert history == [pytest.approx(vocab * 0.25)]


def test_memorization_halves_loss():
    s = SparseBinaryVector(12, (1, 4, 7))
    _, history = train([s] * 50, coding_dim=4, epochs=200, learning_rate=0.1, seed=0)
    assert history[-1] < 0.5 * history[0]
    drops = sum(b <= a for a, b in zip(history, history[1:]))
    assert drops >= 0.9 * (len(history) - 1)


def test_training_keeps_weights_tied_and_finite():
    s = [SparseBinaryVector(8, (0, 2)), SparseBinaryVector(8, (5,))]
    p, _ = train(s, coding_dim=3, epochs=5, seed=1)
    assert p.W.shape == (3, 8)
    assert all(np.all(np.isfinite(a)) for a in (p.W, p.b, p.b_prime))


def test_training_is_deterministic():
    s = [SparseBinaryVector(8, (0, 2)), SparseBinaryVector(8, (5,)), SparseBinaryVector(8, (1, 7))]
    a, ha = train(s, coding_dim=3, epochs=4, seed=5, batch_size=2)
    b, hb = train(s, coding_dim=3, epochs=4, seed=5, batch_size=2)
    assert np.array_equal(a.W, b.W) and ha == hb


def test_training_errors():
    with pytest.raises(DataError):
        train([], coding_dim=3)
    with pytest.raises(ConfigurationError):
        train([SparseBinaryVector(4, (1,))], coding_dim=2, corruption=1.0)
    with pytest.raises(ConfigurationError):
        train([SparseBinaryVector(4, (1,))], coding_dim=2, weights=[1.0, 2.0])


def test_sentence_weights_are_inverse_review_length():
    recs = [ReviewRecord("u", "i", 4, "One. Two. Three."), ReviewRecord("v", "i", 2, "Only one.")]
    assert sentence_weights(recs) == [pytest.approx(1 / 3)] * 3 + [1.0]


def test_save_load_round_trip(tmp_path):
    recs = [ReviewRecord(f"u{j}", "i", 4, "hoppy bitter beer. dark malty stout.") for j in range(4)]
    d = build_dictionary(recs, DictionaryConfig(50, 0, True))
    p, _ = train_on_records(recs, d, coding_dim=3, epochs=2)
    save_autoencoder(tmp_path / "ae.bin", p, d, {"seed": 0})
    q, d2, meta = load_autoencoder(tmp_path / "ae.bin")
    assert np.array_equal(p.W, q.W) and np.array_equal(p.b_prime, q.b_prime)
    assert d2.tokens == d.tokens and meta["seed"] == 0
    with pytest.raises(DataError):
        load_autoencoder(tmp_path / "missing.bin")
