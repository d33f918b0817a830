import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import formlang as fl
from formlang.vocab import DistributionWeights


def test_make_vocab_fig2_equivalence():
    v = fl.make_vocab(250)
    assert v.total_size == 500
    assert v.close_of(1) == 251
    assert v.open_of(251) == 1


def test_make_vocab_minimal():
    v = fl.make_vocab(1)
    assert v.total_size == 2
    assert v.is_open(0) and not v.is_open(1)


def test_make_vocab_rejects_empty():
    with pytest.raises(ValueError):
        fl.make_vocab(0)
    with pytest.raises(ValueError):
        fl.make_vocab(-3)


def test_vocab_mapping_is_bijection():
    v = fl.make_vocab(17)
    closes = [v.close_of(t) for t in range(17)]
    assert sorted(closes) == list(range(17, 34))
    assert all(v.open_of(c) == t for t, c in enumerate(closes))


def test_zipf_masses_match_closed_form():
    d = fl.make_distribution("zipf", 3, 1.0, 2.7)
    raw = np.array([1 / 3.7, 1 / 4.7, 1 / 5.7])
    np.testing.assert_allclose(d.probabilities, raw / raw.sum(), rtol=1e-14)


def test_uniform_distribution():
    d = fl.make_distribution("uniform", 4)
    np.testing.assert_array_equal(d.probabilities, np.full(4, 0.25))


def test_zipf_rank_ratio_500():
    # mass(rank 1) / mass(rank 500) = (502.7 / 3.7) ** 1
    d = fl.make_distribution("zipf", 500, 1.0, 2.7)
    ratio = d.probabilities[0] / d.probabilities[499]
    assert ratio == pytest.approx(502.7 / 3.7, rel=1e-12)
    assert ratio == pytest.approx(135.9, abs=0.05)


def test_zipf_parameter_validation():
    with pytest.raises(ValueError):
        fl.make_distribution("zipf", 10, alpha=0.0)
    with pytest.raises(ValueError):
        fl.make_distribution("zipf", 10, alpha=-1.0)
    with pytest.raises(ValueError):
        fl.make_distribution("zipf", 10, alpha=1.0, beta=-1.0)
    with pytest.raises(ValueError):
        fl.make_distribution("uniform", 0)
    with pytest.raises(ValueError):
        fl.make_distribution("triangular", 5)


@given(
    kind=st.sampled_from(["uniform", "zipf"]),
    size=st.integers(min_value=1, max_value=600),
    alpha=st.floats(min_value=0.05, max_value=4.0),
    beta=st.floats(min_value=-0.9, max_value=10.0),
    seed=st.one_of(st.none(), st.integers(min_value=0, max_value=2**32 - 1)),
)
def test_distribution_invariants(kind, size, alpha, beta, seed):
    d = fl.make_distribution(kind, size, alpha=alpha, beta=beta, permute_seed=seed)
    assert abs(float(d.probabilities.sum()) - 1.0) <= 1e-12
    assert float(d.probabilities.min()) > 0.0
    # zipf mass strictly decreases in rank, modulo the stored permutation
    if kind == "zipf" and size > 1:
        by_rank = d.probabilities[d.rank_permutation]
        assert np.all(np.diff(by_rank) < 0)


def test_determinism_bit_for_bit():
    a = fl.make_distribution("zipf", 100, 1.0, 2.7, permute_seed=5)
    b = fl.make_distribution("zipf", 100, 1.0, 2.7, permute_seed=5)
    assert np.array_equal(a.probabilities, b.probabilities)
    assert np.array_equal(a.rank_permutation, b.rank_permutation)
    c = fl.make_distribution("zipf", 100, 1.0, 2.7, permute_seed=6)
    assert not np.array_equal(c.rank_permutation, a.rank_permutation)


def test_params_roundtrip_recomputes_probabilities():
    d = fl.make_distribution("zipf", 64, 1.3, 0.5, permute_seed=9)
    d2 = DistributionWeights.from_params(d.to_params())
    assert np.array_equal(d.probabilities, d2.probabilities)
    assert "probabilities" not in d.to_params()


def test_sample_token_degenerate_support():
    d = fl.make_distribution("uniform", 1)
    rng = np.random.default_rng(0)
    assert all(fl.sample_token(d, rng) == 0 for _ in range(20))


def test_sample_token_deterministic_under_seed():
    d = fl.make_distribution("zipf", 50, 1.0, 2.7)
    a = fl.sample_tokens(d, np.random.default_rng(123), 1000)
    b = fl.sample_tokens(d, np.random.default_rng(123), 1000)
    assert np.array_equal(a, b)


def test_uniform_sampling_frequencies_within_5pct():
    d = fl.make_distribution("uniform", 500)
    draws = fl.sample_tokens(d, np.random.default_rng(7), 10_000_000)
    freq = np.bincount(draws, minlength=500) / draws.size
    assert np.all(np.abs(freq - 1 / 500) < 0.05 / 500)


def test_zipf_sampling_matches_masses():
    d = fl.make_distribution("zipf", 20, 1.0, 2.7, permute_seed=3)
    draws = fl.sample_tokens(d, np.random.default_rng(11), 500_000)
    freq = np.bincount(draws, minlength=20) / draws.size
    np.testing.assert_allclose(freq, d.probabilities, rtol=0.05)
