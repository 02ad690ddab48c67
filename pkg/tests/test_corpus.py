import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from revrec.corpus import (
    AUTOENCODER_DICTIONARY,
    DictionaryConfig,
    ReviewRecord,
    SparseBinaryVector,
    build_dictionary,
    load_records,
    load_stopwords,
    normalize_rating,
    read_reviews,
    segment_sentences,
    select_subset,
    split_dataset,
    tokenize,
    vectorize,
    write_reviews,
    write_split,
)
from revrec.corpus.vocab import Dictionary
from revrec.errors import ConfigurationError, DataError


def rec(u, i, rating=4, body="good stuff.", title=None):
    return ReviewRecord(u, i, rating, body, title)


# -- ratings and records -----------------------------------------------------


@pytest.mark.parametrize(
    "raw,lo,hi,expected",
    [(3, 1, 5, 3), (20, 0, 20, 5), (10, 0, 20, 3), (0, 0, 20, 1), (1, 1, 5, 1), (5, 1, 5, 5)],
)
def test_normalize_rating_examples(raw, lo, hi, expected):
    assert normalize_rating(raw, lo, hi) == expected


def test_normalize_rating_out_of_range():
    with pytest.raises(DataError):
        normalize_rating(21, 0, 20)
    with pytest.raises(DataError):
        normalize_rating(3, 5, 5)


@given(st.floats(0, 20, allow_nan=False))
def test_normalize_rating_monotone_and_in_scale(x):
    r = normalize_rating(x, 0, 20)
    assert 1 <= r <= 5
    assert normalize_rating(min(20.0, x + 1.0), 0, 20) >= r


def test_record_rejects_bad_rating():
    with pytest.raises(DataError):
        ReviewRecord("u", "i", 6, "text")
    with pytest.raises(DataError):
        ReviewRecord("u", "i", 0, "text")


def test_segmentation_examples():
    assert len(segment_sentences("Great!", "Loved it. Would buy again.")) == 3
    assert segment_sentences(None, "") == []
    out = segment_sentences(None, "No terminator")
    assert [s.text for s in out] == ["No terminator"]


def test_title_is_first_sentence():
    r = rec("u", "i", body="Loved it. Would buy again.", title="Great!")
    assert r.sentences[0].text == "Great!"
    assert r.tokens == ["great", "loved", "it", "would", "buy", "again"]
    assert r.n_words == 6


def test_tokenize_lowercases_and_strips_punctuation():
    assert tokenize("It's GREAT, really!") == ["it", "s", "great", "really"]
    assert tokenize("") == []


@given(st.text(max_size=200))
def test_sentences_cover_all_body_tokens(body):
    r = ReviewRecord("u", "i", 3, body)
    assert [t for s in r.sentences for t in s.tokens] == tokenize(body)


# -- dictionary and vectors ------------------------------------------------------


def test_dictionary_tie_break_is_lexical():
    d = build_dictionary([rec("u1", "i", body="a b"), rec("u2", "i", body="a c")],
                         DictionaryConfig(2, 0, False))
    assert d.tokens == ["a", "b"]


def test_dictionary_drops_rare_tokens():
    records = [rec(f"u{j}", "i", body="common" + (" rare" if j == 0 else "")) for j in range(12)]
    d = build_dictionary(records, DictionaryConfig(100000, 10, False))
    assert "common" in d and "rare" not in d


def test_dictionary_counts_documents_not_occurrences():
    records = [rec("u1", "i", body="x x x x x"), rec("u2", "i", body="y"), rec("u3", "i", body="y")]
    d = build_dictionary(records, DictionaryConfig(1, 0, False))
    assert d.tokens == ["y"]


def test_dictionary_empty_vocabulary_is_configuration_error():
    with pytest.raises(ConfigurationError):
        build_dictionary([rec("u", "i", body="only one document")], DictionaryConfig(10, 2, False))
    with pytest.raises(DataError):
        build_dictionary([], DictionaryConfig(10, 0, False))


def test_autoencoder_dictionary_removes_stopwords():
    stop = load_stopwords()
    assert {"the", "and", "is"} <= stop
    d = build_dictionary([rec("u", "i", body="the beer is hoppy and bitter")], AUTOENCODER_DICTIONARY)
    assert set(d.tokens) == {"beer", "hoppy", "bitter"}


def test_dictionary_json_round_trip():
    d = build_dictionary([rec("u", "i", body="b a c a")], DictionaryConfig(10, 0, False))
    back = Dictionary.from_json(json.loads(json.dumps(d.to_json())))
    assert back.tokens == d.tokens and back.config == d.config


def test_vectorize_examples():
    d = Dictionary({"a": 0, "b": 1}, DictionaryConfig(10, 0, False))
    assert vectorize([], d).active == ()
    assert vectorize(["a", "a", "b"], d).active == (0, 1)
    assert vectorize(["zzz"], d).active == ()


def test_sparse_vector_validation():
    with pytest.raises(ValueError):
        SparseBinaryVector(3, (2, 1))
    with pytest.raises(ValueError):
        SparseBinaryVector(3, (3,))


vectors = st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        st.just(n),
        st.sets(st.integers(0, n - 1)),
        st.sets(st.integers(0, n - 1)),
    )
)


@given(vectors)
def test_sparse_vector_matches_dense_oracle(case):
    n, a, b = case
    p, q = SparseBinaryVector.from_indices(n, a), SparseBinaryVector.from_indices(n, b)
    dp, dq = p.to_dense(), q.to_dense()
    assert p.dot(q) == int(dp @ dq)
    expected = 0.0 if not a or not b else dp @ dq / (np.linalg.norm(dp) * np.linalg.norm(dq))
    assert p.cosine(q) == pytest.approx(expected, abs=1e-12)
    assert 0.0 <= p.cosine(q) <= 1.0 + 1e-12
    assert set(p.union(q).active) == a | b


# -- splits and subsets ------------------------------------------------------


def many(n):
    return [rec(f"u{j % 7}", f"i{j}", 1 + j % 5) for j in range(n)]


@pytest.mark.parametrize("n,sizes", [(10, (8, 1, 1)), (1000, (800, 100, 100)), (3, (1, 1, 1))])
def test_split_sizes(n, sizes):
    s = split_dataset(many(n), seed=7)
    assert (len(s.train), len(s.validation), len(s.test)) == sizes


def test_split_is_a_partition_and_deterministic():
    data = many(57)
    a, b = split_dataset(data, 3), split_dataset(data, 3)
    assert a == b
    ids = [id(r) for part in (a.train, a.validation, a.test) for r in part]
    assert sorted(ids) == sorted(id(r) for r in data)
    assert split_dataset(data, 4) != a


def test_split_too_small():
    with pytest.raises(DataError):
        split_dataset(many(2), 0)


def test_subset_examples():
    data = many(20)
    assert select_subset(data, None, None) == data
    assert select_subset(data, float("inf"), float("inf")) == data
    two = [rec("A", f"i{j}") for j in range(5)] + [rec("B", "i9")]
    out = select_subset(two, n_users=1)
    assert {r.user_id for r in out} == {"A"} and len(out) == 5
    # the surviving user reviewed none of the surviving items
    disjoint = [rec("A", "x"), rec("A", "y"), rec("B", "z"), rec("C", "z")]
    assert select_subset(disjoint, n_users=1, n_items=1) == []


# -- io ----------------------------------------------------------------------


def test_read_reviews_normalizes_and_skips(tmp_path):
    path = tmp_path / "raw.jsonl"
    lines = [
        {"user_id": "u", "item_id": "i", "rating": 17, "rating_min": 0, "rating_max": 20, "text": "Nice. Hoppy."},
        {"user_id": "u", "item_id": "j", "rating": 99, "text": "bad scale"},
        {"user_id": "v", "item_id": "i", "rating": 2, "title": "Meh", "text": "flat"},
    ]
    path.write_text("\n".join(json.dumps(x) for x in lines) + "\n")
    report = read_reviews(path)
    assert report.skipped == 1
    assert [r.rating for r in report.records] == [4, 2]
    assert report.records[1].title == "Meh"
    with pytest.raises(DataError):
        read_reviews(path, strict=True)


def test_write_and_load_round_trip(tmp_path):
    data = many(12)
    write_reviews(tmp_path / "c.jsonl", data)
    assert load_records(tmp_path / "c.jsonl") == data
    write_split(split_dataset(data, 1), tmp_path / "split")
    assert sorted(p.name for p in (tmp_path / "split").iterdir()) == [
        "split_meta.json", "test.jsonl", "train.jsonl", "val.jsonl"
    ]
