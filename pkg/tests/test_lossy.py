import itertools
import math

import numpy as np
import pytest

from vlc_limits import (
    DistortionSpec,
    OutOfRange,
    Pmf,
    ProductSource,
    ball_log_prob,
    binary_entropy,
    default_output,
    entropy,
    erokhin_exact,
    hamming,
    hamming_h0eps_bounds,
    hdeps_exact,
    lemma3_mc_check,
    rd_excess_solve,
    rd_solve,
    rplus,
    solve_cutoff,
    theorem5_and_hdeps,
    theorem6_bounds,
    tilted_cutoff_expansion,
)
from conftest import random_pmf
from oracles import (
    greedy_cell_code_value,
    lossy_lstar_lp,
    min_ball_cutoff,
    quantizer_entropy_min,
)


def test_hamming_spec():
    dist = hamming(3)
    assert dist.matrix.shape == (3, 3)
    p = Pmf([0.5, 0.3, 0.2])
    assert dist.d_min(p) == 0.0
    assert dist.d_max(p) == pytest.approx(0.5)  # best constant guess


def test_rd_binary_hamming_closed_form():
    for p in (0.5, 0.11):
        base = Pmf([1.0 - p, p])
        for d in (0.01, 0.05, min(0.1, p * 0.9)):
            if not 0.0 < d < p:
                continue
            sol = rd_solve(base, hamming(2), d)
            assert sol.rate == pytest.approx(
                binary_entropy(p) - binary_entropy(d), abs=1e-6
            )
            assert sol.slope_lambda == pytest.approx(math.log2((1 - d) / d), rel=1e-4)
            assert sol.csiszar_residual <= 1e-7
            # reproduction marginal of the optimal channel
            q1 = (p - d) / (1.0 - 2.0 * d)
            assert sol.output_dist[1] == pytest.approx(q1, abs=1e-6)


def test_rd_slope_matches_finite_difference():
    base = Pmf([0.89, 0.11])
    d = 0.05
    delta = 1e-6
    r_hi = rd_solve(base, hamming(2), d + delta).rate
    r_lo = rd_solve(base, hamming(2), d - delta).rate
    fd = -(r_hi - r_lo) / (2.0 * delta)
    lam = rd_solve(base, hamming(2), d).slope_lambda
    assert lam == pytest.approx(fd, rel=1e-4)


def test_rd_solve_structural_identities(rng):
    from vlc_limits import NotConverged

    converged = 0
    for _ in range(6):
        ns = int(rng.integers(2, 5))
        nz = int(rng.integers(2, 5))
        p = Pmf(random_pmf(rng, ns))
        D = rng.uniform(0.0, 2.0, size=(ns, nz))
        D[np.arange(ns), rng.integers(0, nz, ns)] = 0.0  # reachable d_min 0
        dist = DistortionSpec(D)
        dmax = dist.d_max(p)
        d = 0.35 * dmax
        if d <= 0.0:
            continue
        try:
            sol = rd_solve(p, dist, d)
        except NotConverged:
            # certification can stall on flat random instances; refusing to
            # return an uncertified solution is the documented behavior
            continue
        converged += 1
        assert np.dot(p.probs, sol.tilted) == pytest.approx(sol.rate, abs=1e-7)
        assert np.dot(p.probs, sol.cond_dist) == pytest.approx(d, abs=1e-7)
        ball_bits = -np.log2((D <= d) @ sol.output_dist)
        assert np.all(sol.tilted <= ball_bits + 1e-7)
        assert 0.0 <= sol.rate <= entropy(p) + 1e-9
    assert converged >= 3


def test_rd_solve_out_of_range():
    base = Pmf([0.89, 0.11])
    with pytest.raises(OutOfRange):
        rd_solve(base, hamming(2), 0.0)
    with pytest.raises(OutOfRange):
        rd_solve(base, hamming(2), 0.2)  # above d_max = 0.11


def test_rd_excess_reduces_to_erokhin_at_zero_distortion():
    p = Pmf([0.5, 0.25, 0.125, 0.125])
    got = rd_excess_solve(p, hamming(4), 0.0, 0.1)
    want = erokhin_exact(p, 0.1).value
    assert got == pytest.approx(want, abs=1e-6)
    assert got == pytest.approx(1.1225081, abs=1e-6)


def test_rd_excess_uniform_permutation_lower_bound():
    # symmetric sources: excess-constrained rate >= (1-eps) R(d) - h(eps)
    p = Pmf([0.25] * 4)
    dist = hamming(4)
    for d in (0.1, 0.3):
        r_avg = rd_solve(p, dist, d).rate
        for eps in (0.05, 0.2):
            r_exc = rd_excess_solve(p, dist, d, eps)
            assert r_exc >= (1.0 - eps) * r_avg - binary_entropy(eps) - 1e-9


def test_rplus_lossless_identity(rng):
    from vlc_limits import einfo_cutoff_exact

    for n, k in ((3, 1), (2, 3), (4, 2)):
        base = Pmf(random_pmf(rng, n))
        for eps in (0.0, 0.1, 0.3):
            got = rplus(ProductSource(base, k), hamming(n), 0.0, eps, base.probs)
            if k == 1:
                want = solve_cutoff(base.info, base.probs, eps).expectation
            else:
                want = einfo_cutoff_exact(ProductSource(base, k), eps)
            assert got == pytest.approx(want, abs=1e-9)


def test_rplus_improvement_reaches_vertex_infimum(rng):
    # any fixed output upper-bounds the infimum (a bad default can even be
    # infinite); the alternating k=1 improvement lands on the true infimum
    for _ in range(6):
        ns = int(rng.integers(2, 5))
        p = random_pmf(rng, ns)
        base = Pmf(p)
        D = rng.uniform(0.0, 1.5, size=(ns, ns))
        D[np.arange(ns), np.arange(ns)] = 0.0
        dist = DistortionSpec(D)
        d = float(rng.uniform(0.1, 0.6))
        eps = float(rng.uniform(0.0, 0.3))
        oracle = min_ball_cutoff(p, D, d, eps)
        out0 = default_output(base, dist, d)
        plain = rplus(ProductSource(base, 1), dist, d, eps, out0)
        improved = rplus(ProductSource(base, 1), dist, d, eps, out0, improve_sweeps=60)
        assert oracle <= plain + 1e-9
        assert improved <= plain + 1e-12
        assert improved == pytest.approx(oracle, abs=1e-9)


def test_ball_log_prob_matches_enumeration(rng):
    ns, nz, k = 3, 3, 4
    D = rng.uniform(0.0, 1.0, size=(ns, nz))
    dist = DistortionSpec(D)
    q = random_pmf(rng, nz)
    d = 0.37
    s_block = [0, 2, 1, 2]
    got = ball_log_prob(dist, q, s_block, d, k)
    mass = 0.0
    for z in itertools.product(range(nz), repeat=k):
        if sum(D[s, zz] for s, zz in zip(s_block, z)) <= k * d + 1e-12:
            mass += float(np.prod([q[zz] for zz in z]))
    assert got == pytest.approx(-math.log2(mass), abs=1e-9)


def test_hdeps_matches_bruteforce(rng):
    for _ in range(5):
        ns = int(rng.integers(2, 6))
        nz = int(rng.integers(2, 5))
        p = random_pmf(rng, ns)
        D = rng.uniform(0.0, 1.0, size=(ns, nz))
        D[:, 0] = 0.0  # guarantee feasibility at every eps
        d = float(rng.uniform(0.05, 0.6))
        eps = float(rng.uniform(0.0, 0.4))
        got = hdeps_exact(Pmf(p), DistortionSpec(D), d, eps)
        want = quantizer_entropy_min(p, D, d, eps)
        assert want is not None
        assert got == pytest.approx(want, abs=1e-9)


def test_hamming_h0eps_bounds_contain_quantizer_minimum():
    p = Pmf([0.4, 0.3, 0.2, 0.1])
    for eps in (0.05, 0.1, 0.2):
        lo, hi = hamming_h0eps_bounds(p, eps)
        hd = hdeps_exact(p, hamming(4), 0.0, eps)
        assert lo - 1e-9 <= hd <= hi + 1e-9
    # frozen spot value
    assert hdeps_exact(p, hamming(4), 0.0, 0.1) == pytest.approx(1.485475, abs=1e-5)


def test_theorem5_and_hdeps_brackets(rng):
    for _ in range(4):
        ns = int(rng.integers(3, 6))
        nz = int(rng.integers(2, 5))
        p = random_pmf(rng, ns)
        D = rng.uniform(0.0, 1.0, size=(ns, nz))
        D[:, 0] = 0.0
        d = float(rng.uniform(0.1, 0.5))
        eps = float(rng.uniform(0.02, 0.3))
        res = theorem5_and_hdeps(Pmf(p), DistortionSpec(D), d, eps)
        hd = res["hdeps_exact"]
        t7 = res["t7_bounds"]
        assert t7["h_lower"] - 1e-9 <= hd <= t7["h_upper"] + 1e-9
        # deterministic-code brute force sits inside the t5 bracket
        det = best_deterministic_length(p, D, d, eps)
        assert res["t5_lower"] - 1e-9 <= det <= res["t5_upper"] + 1e-9
        # randomization can only help
        lp = lossy_lstar_lp(p, D, d, eps)
        assert lp is not None and lp <= det + 1e-9


def best_deterministic_length(p, D, d, eps):
    """Brute minimum average length over deterministic (d, eps) codes."""
    ns, nz = D.shape
    best = math.inf
    for f in itertools.product(range(nz), repeat=ns):
        excess = sum(p[s] for s in range(ns) if D[s, f[s]] > d)
        if excess > eps + 1e-12:
            continue
        mass = np.zeros(nz)
        for s, z in enumerate(f):
            mass[z] += p[s]
        w = np.sort(mass[mass > 0.0])[::-1]
        val = sum(float(wi) * (r.bit_length() - 1) for r, wi in enumerate(w, start=1))
        best = min(best, val)
    return best


def test_theorem6_bounds_contain_brute_optimum(rng):
    for _ in range(4):
        ns = int(rng.integers(2, 5))
        nz = int(rng.integers(2, 4))
        p = random_pmf(rng, ns)
        D = rng.uniform(0.0, 1.0, size=(ns, nz))
        D[:, 0] = 0.0
        d = float(rng.uniform(0.1, 0.5))
        eps = float(rng.uniform(0.02, 0.3))
        lo, hi = theorem6_bounds(ProductSource(Pmf(p), 1), DistortionSpec(D), d, eps)
        brute = lossy_lstar_lp(p, D, d, eps)
        assert brute is not None
        assert lo <= brute + 1e-9
        assert brute <= hi + 1e-9


def test_greedy_cell_structure_attains_lp_optimum():
    # ordered-codebook greedy-cell codes with a budgeted erase boundary
    # reach the LP optimum over all randomized codes; instances are drawn
    # until several have a nontrivial optimum
    rng = np.random.default_rng(7)
    found = 0
    for _ in range(200):
        ns = int(rng.integers(3, 6))
        nz = int(rng.integers(2, 4))
        p = random_pmf(rng, ns)
        D = rng.uniform(0.0, 1.0, size=(ns, nz))
        d = float(rng.uniform(0.15, 0.45))
        eps = float(rng.uniform(0.0, 0.2))
        lp = lossy_lstar_lp(p, D, d, eps)
        if lp is None or lp < 0.05:
            continue
        greedy = greedy_cell_code_value(p, D, d, eps)
        assert greedy == pytest.approx(lp, abs=1e-8)
        found += 1
        if found == 6:
            break
    assert found == 6


def test_tilted_cutoff_expansion_shape():
    base = Pmf([0.89, 0.11])
    res = tilted_cutoff_expansion(base, hamming(2), 0.05, 0.1, [8, 32, 128])
    assert list(res["k"]) == [8, 32, 128]
    np.testing.assert_allclose(
        res["remainder"], np.asarray(res["exact"]) - np.asarray(res["main"])
    )
    assert np.all(np.abs(res["remainder"]) <= 3.0)
    sol = rd_solve(base, hamming(2), 0.05)
    assert res["rate"] == pytest.approx(sol.rate, abs=1e-9)


def test_lemma3_mc_constants_tame_violations():
    base = Pmf([0.89, 0.11])
    bare = lemma3_mc_check(base, hamming(2), 0.05, 64, 500, 7)
    tamed = lemma3_mc_check(base, hamming(2), 0.05, 64, 500, 7, c1=1.0, c2=50.0)
    assert bare["violation_freq"] == pytest.approx(0.44, abs=1e-12)
    assert tamed["violation_freq"] == 0.0
    # counter-based streams: same seed reproduces exactly
    again = lemma3_mc_check(base, hamming(2), 0.05, 64, 500, 7)
    assert again["violation_freq"] == bare["violation_freq"]
    assert again["mean_lhs"] == bare["mean_lhs"]
