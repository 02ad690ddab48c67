from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from revrec.rouge import ngrams, rouge_n, rouge_scores

tokens = st.lists(st.sampled_from("abcdef"), max_size=25)


def brute_force_rouge(candidate, reference, n):
    """Double loop over reference n-grams, each consuming one unused candidate match."""
    ref = [tuple(reference[j : j + n]) for j in range(len(reference) - n + 1)]
    cand = [tuple(candidate[j : j + n]) for j in range(len(candidate) - n + 1)]
    used = [False] * len(cand)
    hits = 0
    for g in ref:
        for j, h in enumerate(cand):
            if not used[j] and h == g:
                used[j] = True
                hits += 1
                break
    return hits / len(ref) if ref else 0.0


def test_ngram_examples():
    assert ngrams(["a", "b", "a"], 1) == Counter({("a",): 2, ("b",): 1})
    assert ngrams(["a", "b", "a"], 2) == Counter({("a", "b"): 1, ("b", "a"): 1})
    assert ngrams(["a"], 3) == Counter()
    with pytest.raises(ValueError):
        ngrams(["a"], 0)


@given(tokens, st.integers(1, 4))
def test_ngram_total_count(seq, n):
    assert sum(ngrams(seq, n).values()) == max(0, len(seq) - n + 1)


def test_rouge_examples():
    ref = "the beer is good".split()
    assert rouge_n("good beer".split(), ref, 1) == 0.5
    for n in (1, 2, 3):
        assert rouge_n(ref, ref, n) == 1.0
        assert rouge_n(["x", "y", "z"], ref, n) == 0.0
    assert rouge_scores(ref, ref) == {1: 1.0, 2: 1.0, 3: 1.0}
    assert rouge_n(["a"], [], 1) == 0.0


@given(tokens, tokens, st.sampled_from([1, 2, 3]))
def test_rouge_equals_brute_force(candidate, reference, n):
    assert rouge_n(candidate, reference, n) == brute_force_rouge(candidate, reference, n)


@given(tokens, tokens, tokens, st.sampled_from([1, 2, 3]))
def test_rouge_monotone_in_candidate_superset(candidate, extra, reference, n):
    score = rouge_n(candidate, reference, n)
    assert rouge_n(candidate + extra, reference, n) >= score
    assert 0.0 <= score <= 1.0


def test_rouge_is_recall_oriented():
    a, b = ["x", "y"], ["x", "y", "z", "w"]
    assert rouge_n(a, b, 1) == 0.5 and rouge_n(b, a, 1) == 1.0
