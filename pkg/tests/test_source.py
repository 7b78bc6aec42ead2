import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vlc_limits import (
    Pmf,
    ProductSource,
    binary_entropy,
    entropy,
    info_distribution,
    phi,
    sum_iid_distribution,
    varentropy,
)
from conftest import random_pmf


def test_pmf_rejects_bad_input():
    with pytest.raises(ValueError):
        Pmf([0.5, 0.6])
    with pytest.raises(ValueError):
        Pmf([0.5, -0.5, 1.0])
    with pytest.raises(ValueError):
        Pmf([])


def test_pmf_strips_zero_atoms():
    p = Pmf([0.5, 0.0, 0.5], labels=["a", "b", "c"])
    assert len(p) == 2
    assert list(p.labels) == ["a", "c"]


def test_order_index_is_stable_descending():
    p = Pmf([0.2, 0.3, 0.2, 0.3])
    assert list(p.order_index) == [1, 3, 0, 2]
    assert np.all(np.diff(p.sorted_probs) <= 0)


def test_entropy_uniform_and_binary():
    assert entropy(Pmf([0.25] * 4)) == pytest.approx(2.0, abs=1e-14)
    assert entropy(Pmf([0.89, 0.11])) == pytest.approx(binary_entropy(0.11), abs=1e-14)
    assert varentropy(Pmf([0.25] * 4)) == pytest.approx(0.0, abs=1e-14)


def test_phi_edges():
    assert phi(0.0) == 0.0
    assert phi(1.0) == 0.0
    assert phi(0.5) == pytest.approx(0.5)
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.11) == pytest.approx(binary_entropy(0.89), abs=1e-14)


def test_varentropy_binary_closed_form():
    p = 0.11
    delta = math.log2((1 - p) / p)
    expected = p * (1 - p) * delta * delta
    assert varentropy(Pmf([1 - p, p])) == pytest.approx(expected, rel=1e-12)


def test_sum_iid_matches_direct_convolution(rng):
    vals = np.array([0.0, 1.3, 2.9])
    probs = np.array([0.5, 0.3, 0.2])
    v3, p3 = sum_iid_distribution(vals, probs, 3)
    # direct triple loop
    acc = {}
    for i, vi in enumerate(vals):
        for j, vj in enumerate(vals):
            for k, vk in enumerate(vals):
                key = round(vi + vj + vk, 9)
                acc[key] = acc.get(key, 0.0) + probs[i] * probs[j] * probs[k]
    ref = sorted(acc.items())
    assert v3.size == len(ref)
    for (rv, rp), av, ap in zip(ref, v3, p3):
        assert av == pytest.approx(rv, abs=1e-9)
        assert ap == pytest.approx(rp, abs=1e-12)
    assert p3.sum() == pytest.approx(1.0, abs=1e-12)


def test_sum_iid_binary_uses_binomial():
    # two-atom base: atom count is exactly k + 1 and masses are binomial
    v, q = sum_iid_distribution([0.0, 1.0], [0.7, 0.3], 50)
    assert v.size == 51
    from scipy import stats

    assert np.allclose(q, stats.binom.pmf(np.arange(51), 50, 0.3), atol=1e-15)


def test_info_distribution_moments(rng):
    for n in (2, 3, 5):
        base = Pmf(random_pmf(rng, n))
        k = 4
        v, q = info_distribution(ProductSource(base, k))
        assert q.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.dot(v, q) == pytest.approx(k * entropy(base), rel=1e-10)
        mean = np.dot(v, q)
        var = np.dot((v - mean) ** 2, q)
        assert var == pytest.approx(k * varentropy(base), rel=1e-8, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), st.integers(1, 5))
def test_info_distribution_mean_property(raw, k):
    probs = np.asarray(raw) / np.sum(raw)
    base = Pmf(probs)
    v, q = info_distribution(ProductSource(base, k))
    assert np.dot(v, q) == pytest.approx(k * entropy(base), rel=1e-9, abs=1e-9)
