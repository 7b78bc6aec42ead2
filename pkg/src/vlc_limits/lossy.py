"""Rate-distortion machinery over finite alphabets.

Covers: the average-distortion solver (alternating minimization with a
certified optimality gap, slope matched to the distortion level by
bisection), the excess-distortion variant through the exact indicator
reduction, distortion-ball probabilities for product outputs, the cutoff
upper bound on average length evaluated at a supplied output distribution,
bracketing bounds relating minimum average length / minimum mutual
information / quantizer output entropy, exhaustive tiny-scale quantizer
search, the blockwise expansion of the tilted-information cutoff, and a
seeded Monte Carlo diagnostic for the almost-sure ball-probability
refinement.

Unit discipline: solvers run in nats so exp/log always pair in one base;
conversion to bits happens once at each public boundary. The slope
variable is nats per distortion unit internally; RdSolution.slope_lambda
is bits per distortion unit and equals -R'(d) for the bit-valued rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from . import _ba, cutoff as _cutoff, source as _source
from ._backend import njit, resolve_backend
from .errors import (
    DpStateCapExceeded,
    Infeasible,
    InvalidEpsilon,
    NotConverged,
    OutOfRange,
    ScaleExceeded,
    TypeCapExceeded,
)
from .iidlimits import _compositions, _gauss_weight
from .source import LOG2E, Pmf, ProductSource, phi, binary_entropy

_LN2 = math.log(2.0)
_LOG2_E = LOG2E
_DEFAULT_COMPOSITION_CAP = 2_000_000
_DEFAULT_DP_STATE_CAP = 1_000_000
_DP_KEY_DECIMALS = 9


@dataclass(frozen=True)
class DistortionSpec:
    """Per-(source, reproduction) distortion values.

    Entries are nonnegative; +inf marks forbidden pairs, but every source
    row must keep at least one finite entry. Blocks use the normalized
    separable extension (mean of per-letter values).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("distortion matrix must be 2-D and nonempty")
        if np.any(np.isnan(m)) or np.any(m < 0):
            raise ValueError("distortion entries must be nonnegative (or +inf)")
        if not np.all(np.isfinite(m).any(axis=1)):
            raise ValueError("every source row needs a finite distortion entry")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def n_source(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_repro(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_zero_one(self) -> bool:
        """True when all entries are exactly 0 or 1 (Hamming-like)."""
        return bool(np.isin(self.matrix, (0.0, 1.0)).all())

    def d_min(self, p: Pmf) -> float:
        """Smallest distortion with finite rate: E[min over reproductions]."""
        self._check_source(p)
        return float(np.dot(p.probs, np.min(self.matrix, axis=1)))

    def d_max(self, p: Pmf) -> float:
        """Distortion beyond which zero rate suffices: min_z E[d(S,z)]."""
        self._check_source(p)
        col = np.where(np.isfinite(self.matrix), self.matrix, np.inf)
        means = p.probs @ col
        return float(np.min(means))

    def _check_source(self, p: Pmf) -> None:
        if len(p) != self.n_source:
            raise ValueError(
                f"source has {len(p)} positive-mass symbols but the matrix has "
                f"{self.n_source} rows (zero-mass symbols are dropped by Pmf)"
            )


def hamming(n: int) -> DistortionSpec:
    return DistortionSpec(np.ones((n, n)) - np.eye(n))


@dataclass(frozen=True)
class RdSolution:
    """Converged average-distortion solve at one distortion level.

    rate and tilted are in bits; slope_lambda is bits per distortion unit;
    cond_dist[s] is the implied channel's expected distortion from s, used
    by the blockwise almost-sure diagnostic.
    """

    rate: float
    slope_lambda: float
    output_dist: np.ndarray
    tilted: np.ndarray
    d: float
    csiszar_residual: float
    cond_dist: np.ndarray

    @property
    def lambda_nats(self) -> float:
        return self.slope_lambda / _LOG2_E


def _shifted_channel(D: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """exp(-lam*(D - rowmin)) and the row minima.

    Row-shifting keeps every row's largest entry at exp(0)=1, so no source
    row can underflow to all zeros at large slopes; the multiplicative
    update is invariant to row scaling, and the shift re-enters the
    objective analytically.
    """
    row_min = np.min(D, axis=1)
    with np.errstate(invalid="ignore"):
        shifted = D - row_min[:, None]
    shifted = np.where(np.isnan(shifted), np.inf, shifted)  # inf - inf rows absent
    return np.exp(-lam * shifted), row_min


def _solve_at_slope(p, D, lam, state, tol, max_iter):
    """Fixed-slope solve. Returns (q, J_nats, avg_dist, multipliers)."""
    C, row_min = _shifted_channel(D, lam)
    q0 = state.get("q")
    q, gap = _ba.ba_fixed_slope(p, C, q0=q0, tol=tol, max_iter=max_iter)
    state["q"] = q
    den = C @ q
    J = lam * row_min - np.log(den)
    W = C * q[None, :] / den[:, None]
    avg = float(np.sum(p @ np.where(W > 0.0, W * np.where(np.isfinite(D), D, 0.0), 0.0)))
    u = C.T @ (p / den)
    return q, J, avg, u


def _bracket_distortion(eval_d, d_target, lo0=1.0):
    """Find [lo, hi] with avg_dist(lo) >= d_target >= avg_dist(hi)."""
    lo = hi = lo0
    for _ in range(200):
        if eval_d(hi) <= d_target:
            break
        hi *= 2.0
    else:
        raise NotConverged("slope bracket: distortion never drops to target")
    for _ in range(200):
        if eval_d(lo) >= d_target:
            break
        lo /= 2.0
    else:
        raise NotConverged("slope bracket: distortion never rises to target")
    return lo, hi


def _solve_distortion_target(p, D, d_target, tol, max_iter):
    """Match E[d] = d_target by bisection on the slope; warm-started."""
    state = {}
    cache = {}

    def avg_dist(lam):
        if lam not in cache:
            cache[lam] = _solve_at_slope(p, D, lam, state, tol, max_iter)
        return cache[lam][2]

    lo, hi = _bracket_distortion(avg_dist, d_target)
    if lo == hi:
        lam = lo
    else:
        lam = float(optimize.brentq(lambda x: avg_dist(x) - d_target, lo, hi,
                                    xtol=1e-12, rtol=8.9e-16, maxiter=300))
    q, J, avg, u = cache.get(lam) or _solve_at_slope(p, D, lam, state, tol, max_iter)
    return lam, q, J, avg, u


def rd_solve(
    p: Pmf,
    dist: DistortionSpec,
    d: float,
    *,
    tol: float = 1e-11,
    max_iter: int = 200_000,
) -> RdSolution:
    """Minimum mutual information at average distortion exactly d.

    Valid strictly inside (d_min, d_max). The returned solution carries a
    certified multiplier residual; structural identities (mean tilted value
    equals rate, per-symbol Markov link to ball probabilities, the Jensen
    cap on the unshifted exponent) are re-verified and a violation beyond
    float tolerance raises NotConverged.
    """
    dist._check_source(p)
    dmin, dmax = dist.d_min(p), dist.d_max(p)
    if not dmin < d < dmax:
        raise OutOfRange(f"need d_min={dmin:.6g} < d < d_max={dmax:.6g}, got {d!r}")
    lam, q, J, avg, u = _solve_distortion_target(p.probs, dist.matrix, d, tol, max_iter)

    rate_nats = float(p.probs @ J) - lam * d
    tilted = (J - lam * d) * _LOG2_E
    residual = float(max(np.max(u) - 1.0, 0.0))
    if residual > 1e-7:
        raise NotConverged("multiplier constraint violated", residual=residual)
    if abs(float(p.probs @ tilted) - rate_nats * _LOG2_E) > 1e-7:
        raise NotConverged("mean tilted value drifted from rate",
                           residual=abs(float(p.probs @ tilted) - rate_nats * _LOG2_E))
    finite_d = np.where(np.isfinite(dist.matrix), dist.matrix, 0.0)
    jensen_cap = np.where(
        np.all(np.isfinite(dist.matrix) | (q[None, :] <= 0), axis=1),
        finite_d @ q, np.inf,
    )
    if np.any(J < -1e-9) or np.any(J > lam * jensen_cap + 1e-7):
        raise NotConverged("exponent left its Jensen range",
                           residual=float(np.max(J - lam * jensen_cap)))
    ball_mass = (dist.matrix <= d) @ q
    with np.errstate(divide="ignore"):
        ball_bits = -np.log2(ball_mass)
    if np.any(tilted > ball_bits + 1e-7):
        raise NotConverged("tilted value exceeded its ball-probability cap",
                           residual=float(np.max(tilted - ball_bits)))

    C = _shifted_channel(dist.matrix, lam)[0]
    W = C * q[None, :] / (C @ q)[:, None]
    cond = np.sum(np.where(W > 0.0, W * finite_d, 0.0), axis=1)
    return RdSolution(
        rate=rate_nats * _LOG2_E,
        slope_lambda=lam * _LOG2_E,
        output_dist=q,
        tilted=tilted,
        d=float(d),
        csiszar_residual=residual,
        cond_dist=cond,
    )


def _masked_min_rate_nats(weights: np.ndarray, allowed: np.ndarray,
                          tol: float, max_iter: int) -> float:
    """min over q of sum_s w_s * (-ln q(allowed_s)); weights sum to 1."""
    C = allowed.astype(np.float64)
    q, _gap = _ba.ba_fixed_slope(weights, C, tol=tol, max_iter=max_iter)
    den = C @ q
    return float(weights @ -np.log(den))


def rd_excess_solve(
    p: Pmf,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    *,
    tol: float = 1e-11,
    max_iter: int = 200_000,
) -> float:
    """Minimum mutual information under P[d(S,Z) > d] <= epsilon, in bits.

    Exact reduction: the excess event is itself a 0/1 distortion, so the
    average-distortion solver applies to the indicator matrix at level
    epsilon. The boundary epsilon = P[no reproduction within d] collapses
    to a support-constrained solve.
    """
    dist._check_source(p)
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    E = (dist.matrix > d).astype(np.float64)
    uncovered = np.all(E == 1.0, axis=1)
    floor_eps = float(p.probs @ uncovered)
    if eps < floor_eps - 1e-12:
        raise Infeasible(
            f"excess probability cannot go below {floor_eps:.6g} at d={d!r}"
        )
    best_cover = float(np.max(p.probs @ (1.0 - E)))
    if eps >= 1.0 - best_cover - 1e-15:
        return 0.0
    if eps <= floor_eps + 1e-12:
        allowed = E == 0.0
        allowed[uncovered] = True
        return _masked_min_rate_nats(p.probs, allowed, tol, max_iter) * _LOG2_E
    lam, q, J, avg, u = _solve_distortion_target(p.probs, E, eps, tol, max_iter)
    return max(0.0, (float(p.probs @ J) - lam * eps) * _LOG2_E)


# ---------------------------------------------------------------------------
# distortion-ball probabilities for product outputs


def _log_convolve_trunc(la: np.ndarray, lb: np.ndarray, t: int) -> np.ndarray:
    """Log-domain convolution of log-pmf arrays, truncated to sums <= t."""
    out = np.full(min(la.size + lb.size - 1, t + 1), -np.inf)
    for j in range(out.size):
        a = np.arange(max(0, j - lb.size + 1), min(j, la.size - 1) + 1)
        out[j] = special.logsumexp(la[a] + lb[j - a])
    return out


def _ball_bits_zero_one(counts: np.ndarray, miss: np.ndarray, t: int) -> float:
    """-log2 P[sum of binomial mismatch counts <= t], exact.

    Linear-domain convolution first; the rare underflow (far tails) falls
    back to log-domain accumulation on the truncated lattice.
    """
    pmfs = []
    for n, x in zip(counts, miss):
        if n == 0:
            continue
        hi = min(int(n), t)
        pmfs.append((int(n), float(x), np.arange(hi + 1)))
    if not pmfs:
        return 0.0
    acc = None
    for n, x, supp in pmfs:
        arr = stats.binom.pmf(supp, n, x)
        acc = arr if acc is None else np.convolve(acc, arr)[: t + 1]
    prob = float(np.sum(acc[: t + 1]))
    if prob > 1e-280:
        return -math.log2(min(prob, 1.0))
    lacc = None
    for n, x, supp in pmfs:
        larr = stats.binom.logpmf(supp, n, x)
        lacc = larr if lacc is None else _log_convolve_trunc(lacc, larr, t)
    lp = float(special.logsumexp(lacc[: t + 1]))
    return -lp * _LOG2_E


def _ball_bits_generic(counts: np.ndarray, rows: np.ndarray, q: np.ndarray,
                       budget: float, state_cap: int) -> float:
    """Dict DP over the partial distortion sum, pruned above the budget."""
    states = {0.0: 1.0}
    for s, n in enumerate(counts):
        if n == 0:
            continue
        step = [(float(v), float(pz)) for v, pz in zip(rows[s], q)
                if pz > 0.0 and np.isfinite(v)]
        for _ in range(int(n)):
            nxt: dict[float, float] = {}
            for acc, pr in states.items():
                for v, pz in step:
                    total = acc + v
                    if total > budget:
                        continue
                    key = round(total, _DP_KEY_DECIMALS)
                    nxt[key] = nxt.get(key, 0.0) + pr * pz
            if len(nxt) > state_cap:
                raise DpStateCapExceeded(
                    f"{len(nxt)} partial-sum states exceed cap {state_cap}"
                )
            states = nxt
            if not states:
                return math.inf
    prob = min(sum(states.values()), 1.0)
    return -math.log2(prob) if prob > 0.0 else math.inf


def _ball_bits_counts(dist: DistortionSpec, q: np.ndarray, counts: np.ndarray,
                      d: float, k: int, state_cap: int = _DEFAULT_DP_STATE_CAP) -> float:
    budget = k * d + 1e-9
    if dist.is_zero_one:
        miss = 1.0 - (dist.matrix == 0.0) @ q
        return _ball_bits_zero_one(counts, miss, int(budget))
    return _ball_bits_generic(counts, dist.matrix, q, budget, state_cap)


def ball_log_prob(dist: DistortionSpec, output, s_block, d: float, k: int) -> float:
    """-log2 of the product-output mass of the distortion ball around s_block.

    s_block is a length-k sequence of source symbol indices; output is the
    single-letter reproduction pmf whose k-fold product is used. The value
    depends on s_block only through its composition.
    """
    s = np.asarray(s_block, dtype=np.int64)
    if s.size != k:
        raise ValueError(f"s_block has {s.size} letters, expected k={k}")
    if s.size and (s.min() < 0 or s.max() >= dist.n_source):
        raise IndexError("s_block contains out-of-range symbol indices")
    q = np.asarray(output, dtype=np.float64)
    if q.shape != (dist.n_repro,) or abs(q.sum() - 1.0) > 1e-9 or np.any(q < 0):
        raise ValueError("output must be a pmf over the reproduction alphabet")
    counts = np.bincount(s, minlength=dist.n_source)
    return _ball_bits_counts(dist, q, counts, float(d), int(k))


# ---------------------------------------------------------------------------
# cutoff upper bound at a supplied output distribution


def _cutoff_value_desc(values: np.ndarray, masses: np.ndarray, eps: float) -> float:
    """Greedy-erasure expectation, tolerant of +inf atoms and of masses
    that sum to 1 only within float error."""
    order = np.argsort(-values, kind="stable")
    v, m = values[order], masses[order]
    before = np.concatenate(([0.0], np.cumsum(m)[:-1]))
    cut = np.clip(eps - before, 0.0, m)
    kept = m - cut
    infinite = ~np.isfinite(v)
    if np.any(kept[infinite] > 1e-12):
        return math.inf
    keep = ~infinite & (kept > 0.0)
    return float(np.dot(v[keep], kept[keep]))


def _composition_atoms(base: Pmf, dist: DistortionSpec, d: float, k: int,
                       q: np.ndarray, composition_cap: int):
    ns = len(base)
    n_comp = math.comb(k + ns - 1, ns - 1)
    if n_comp > composition_cap:
        raise TypeCapExceeded(
            f"{n_comp} compositions exceed cap {composition_cap}"
        )
    kfact = math.factorial(k)
    logp = np.log(base.probs)
    values = np.empty(n_comp)
    masses = np.empty(n_comp)
    for i, comp in enumerate(_compositions(k, ns)):
        c = np.asarray(comp, dtype=np.int64)
        denom = 1
        for x in comp:
            denom *= math.factorial(x)
        ln_mass = math.log(kfact // denom) + float(c @ logp)
        masses[i] = math.exp(ln_mass)
        values[i] = _ball_bits_counts(dist, q, c, d, k)
    return values, masses


def rplus(
    src: ProductSource,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    output,
    *,
    improve_sweeps: int = 0,
    composition_cap: int = _DEFAULT_COMPOSITION_CAP,
) -> float:
    """Cutoff expectation of the ball surprisal at a product output, in bits.

    Upper-bounds the minimum average length at (d, epsilon) for any choice
    of `output`; the infimum over outputs is NOT solved globally. With
    improve_sweeps > 0 the single-letter output is refined (exact
    alternating descent at k=1, best-effort simplex search otherwise) and
    the best value seen is returned; the gap to the true infimum stays
    unknown either way. Ball surprisals are constant on composition
    classes, so the distribution is assembled exactly per composition.
    """
    dist._check_source(src.base)
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    if eps >= 1.0:
        return 0.0
    q = np.asarray(output, dtype=np.float64)
    if q.shape != (dist.n_repro,) or abs(q.sum() - 1.0) > 1e-9 or np.any(q < 0):
        raise ValueError("output must be a pmf over the reproduction alphabet")

    def value_at(qv: np.ndarray) -> float:
        vals, ms = _composition_atoms(src.base, dist, d, src.k, qv, composition_cap)
        return _cutoff_value_desc(vals, ms, eps)

    best = value_at(q)
    if improve_sweeps <= 0:
        return best
    if src.k == 1:
        for q0 in (q, np.full(dist.n_repro, 1.0 / dist.n_repro)):
            v, _ = _improve_output_single(src.base, dist, d, eps, q0, improve_sweeps)
            best = min(best, v)
        return best
    x0 = np.log(np.maximum(q, 1e-12))
    res = optimize.minimize(
        lambda x: value_at(special.softmax(x)), x0, method="Nelder-Mead",
        options={"maxiter": improve_sweeps * dist.n_repro, "xatol": 1e-6,
                 "fatol": 1e-10},
    )
    return min(best, float(res.fun))


def _improve_output_single(base, dist, d, eps, q0, sweeps):
    """Alternating descent for k=1: erasure weights vs weighted mask solve.

    Both half-steps are exact minimizations, so the value is monotone
    nonincreasing; a local optimum of the joint problem results.
    """
    ball = dist.matrix <= d
    p = base.probs
    q = q0.copy()
    value = math.inf
    for _ in range(max(1, sweeps)):
        mass = ball @ q
        with np.errstate(divide="ignore"):
            vals = -np.log2(mass)
        order = np.argsort(-vals, kind="stable")
        before = np.concatenate(([0.0], np.cumsum(p[order])[:-1]))
        cut = np.clip(eps - before, 0.0, p[order])
        w = np.empty_like(p)
        w[order] = (p[order] - cut) / np.where(p[order] > 0, p[order], 1.0)
        a = p * w
        live = a > 0.0
        if np.any(live & ~np.isfinite(vals)):
            return math.inf, q
        new_value = float(np.dot(a[live], vals[live])) if np.any(live) else 0.0
        if not np.any(live):
            return 0.0, q
        total = float(a.sum())
        q = _ba.ba_fixed_slope(a[live] / total, ball[live].astype(np.float64),
                               q0=q, tol=1e-12, max_iter=200_000)[0]
        if new_value > value - 1e-12:
            value = min(value, new_value)
            break
        value = new_value
    mass = ball @ q
    with np.errstate(divide="ignore"):
        vals = -np.log2(mass)
    value = min(value, _cutoff_value_desc(vals, p, eps))
    return value, q


def default_output(p: Pmf, dist: DistortionSpec, d: float) -> np.ndarray:
    """Reproduction pmf used when the caller does not supply one."""
    return _default_output(p, dist, d)


def _default_output(p: Pmf, dist: DistortionSpec, d: float) -> np.ndarray:
    """Reasonable single-letter output for the cutoff upper bound."""
    dmin, dmax = dist.d_min(p), dist.d_max(p)
    if dmin < d < dmax:
        return rd_solve(p, dist, d).output_dist
    if d >= dmax:
        col = np.where(np.isfinite(dist.matrix), dist.matrix, np.inf)
        out = np.zeros(dist.n_repro)
        out[int(np.argmin(p.probs @ col))] = 1.0
        return out
    covered = np.min(dist.matrix, axis=1) <= d
    if not np.any(covered):
        return np.full(dist.n_repro, 1.0 / dist.n_repro)
    w = p.probs[covered]
    q, _ = _ba.ba_fixed_slope(w / w.sum(),
                              (dist.matrix <= d).astype(np.float64)[covered],
                              tol=1e-12, max_iter=200_000)
    return q


def _product_flatten(p: Pmf, dist: DistortionSpec, k: int, cap: int):
    ns, nz = dist.n_source, dist.n_repro
    if ns**k > cap or nz**k > cap:
        raise ScaleExceeded(
            f"product alphabet {ns}^{k} x {nz}^{k} exceeds cap {cap}"
        )
    pk = p.probs.copy()
    Dk = dist.matrix.copy()
    for _ in range(k - 1):
        Dk = np.add.outer(Dk, dist.matrix).transpose(0, 2, 1, 3).reshape(
            Dk.shape[0] * ns, Dk.shape[1] * nz
        )
        pk = np.kron(pk, p.probs)
    return pk, Dk / k


def theorem6_bounds(
    src: ProductSource,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    *,
    product_cap: int = 4096,
    improve_sweeps: int = 0,
    tol: float = 1e-11,
) -> tuple[float, float]:
    """Sandwich on minimum average length under the excess constraint.

    Lower: the excess-constrained information solve on the flattened
    product alphabet, less its geometric-distribution penalty. Upper: the
    ball-surprisal cutoff at a product output. Exact flattening caps at
    `product_cap` strings per side (chain through the single-letter bounds
    for longer blocks).
    """
    eps = float(epsilon)
    pk, Dk = _product_flatten(src.base, dist, src.k, product_cap)
    pspec = DistortionSpec(Dk)
    pk_pmf = Pmf(pk)
    best_cover = float(np.max(pk @ (Dk <= d)))
    if eps >= 1.0 - best_cover - 1e-15:
        return 0.0, 0.0
    rate = rd_excess_solve(pk_pmf, pspec, d, eps, tol=tol)
    lower = max(0.0, rate - math.log2(rate + 1.0) - _LOG2_E)
    out = _default_output(src.base, dist, d)
    upper = rplus(src, dist, d, eps, out, improve_sweeps=improve_sweeps)
    return lower, upper


# ---------------------------------------------------------------------------
# exhaustive quantizer search and the entropy bracket


@njit(cache=True)
def _hdeps_scan_numba(contrib, pvec, nz, eps_tol):  # pragma: no cover
    ns = contrib.shape[0]
    total = 1
    for _ in range(ns):
        total *= nz
    best = np.inf
    digits = np.zeros(ns, dtype=np.int64)
    q = np.zeros(nz)
    for _ in range(total):
        excess = 0.0
        for s in range(ns):
            excess += contrib[s, digits[s]]
        if excess <= eps_tol:
            for z in range(nz):
                q[z] = 0.0
            for s in range(ns):
                q[digits[s]] += pvec[s]
            ent = 0.0
            for z in range(nz):
                if q[z] > 0.0:
                    ent -= q[z] * math.log2(q[z])
            if ent < best:
                best = ent
        s = 0
        while s < ns:
            digits[s] += 1
            if digits[s] < nz:
                break
            digits[s] = 0
            s += 1
    return best


def _hdeps_scan_numpy(contrib, pvec, nz, eps_tol, chunk=1 << 18):
    ns = contrib.shape[0]
    total = nz**ns
    radix = nz ** np.arange(ns, dtype=np.int64)
    best = math.inf
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // radix[None, :]) % nz
        excess = np.zeros(idx.size)
        for s in range(ns):
            excess += contrib[s, digits[:, s]]
        ok = excess <= eps_tol
        if not np.any(ok):
            continue
        dg = digits[ok]
        q = np.zeros((dg.shape[0], nz))
        for s in range(ns):
            np.add.at(q, (np.arange(dg.shape[0]), dg[:, s]), pvec[s])
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -np.sum(np.where(q > 0, q * np.log2(q), 0.0), axis=1)
        best = min(best, float(np.min(ent)))
    return best


def hdeps_exact(
    p: Pmf,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    *,
    ns_cap: int = 10,
    nz_cap: int = 6,
) -> float:
    """Exhaustive minimum output entropy over deterministic quantizers
    meeting the excess-distortion constraint, in bits."""
    dist._check_source(p)
    ns, nz = dist.n_source, dist.n_repro
    if ns > ns_cap or nz > nz_cap:
        raise ScaleExceeded(
            f"{ns} source x {nz} reproduction symbols exceed the scan caps "
            f"({ns_cap}, {nz_cap})"
        )
    eps_tol = float(epsilon) + 1e-12
    contrib = p.probs[:, None] * (dist.matrix > d)
    if resolve_backend() == "numba":
        best = float(_hdeps_scan_numba(contrib, p.probs, nz, eps_tol))
    else:
        best = _hdeps_scan_numpy(contrib, p.probs, nz, eps_tol)
    if not math.isfinite(best):
        raise Infeasible(f"no quantizer meets excess <= {epsilon!r} at d={d!r}")
    return best


def theorem5_and_hdeps(
    p: Pmf,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    *,
    ns_cap: int = 10,
    nz_cap: int = 6,
    improve_sweeps: int = 50,
) -> dict:
    """Entropy bracket for deterministic coding plus the surrounding bounds.

    Returns t5_lower/t5_upper (bracket on the deterministic minimum average
    length), t7_bounds (h_lower/h_upper on the quantizer entropy from the
    ball-surprisal cutoff; r_lower/r_upper on the excess-constrained
    information, r_lower None when the tilted solve is out of range), and
    hdeps_exact when the alphabets are small enough to scan.
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    out: dict = {}
    try:
        out["hdeps_exact"] = hdeps_exact(p, dist, d, eps, ns_cap=ns_cap, nz_cap=nz_cap)
    except ScaleExceeded:
        pass

    rp = rplus(ProductSource(p, 1), dist, d, eps, _default_output(p, dist, d),
               improve_sweeps=improve_sweeps)
    lo_phi = phi(max(1.0 - eps, 1.0 / math.e))
    hi_phi = phi(min(eps, 1.0 / math.e))
    h_lower = max(0.0, rp - lo_phi)
    h_upper = rp + math.log2(rp + 1.0 + hi_phi) + 1.0 + hi_phi
    r_lower = None
    dmin, dmax = dist.d_min(p), dist.d_max(p)
    if dmin < d < dmax:
        sol = rd_solve(p, dist, d)
        ej = _cutoff.solve_cutoff(sol.tilted, p.probs, eps).expectation
        r_lower = max(
            0.0,
            ej - math.log2(sol.rate + sol.slope_lambda * d + 1.0)
            - _LOG2_E - binary_entropy(eps),
        )
    out["t7_bounds"] = {
        "h_lower": h_lower,
        "h_upper": h_upper,
        "r_lower": r_lower,
        "r_upper": rp,
    }
    if "hdeps_exact" in out:
        hd = out["hdeps_exact"]
        out["t5_lower"] = max(0.0, hd - math.log2(hd + 1.0) - _LOG2_E)
        out["t5_upper"] = hd
    else:
        out["t5_lower"] = max(0.0, h_lower - math.log2(h_upper + 1.0) - _LOG2_E)
        out["t5_upper"] = h_upper
    return out


# ---------------------------------------------------------------------------
# blockwise expansion and the almost-sure diagnostic


def tilted_cutoff_expansion(
    base: Pmf,
    dist: DistortionSpec,
    d: float,
    epsilon: float,
    k_grid,
    *,
    atom_cap: int = _source._DEFAULT_ATOM_CAP,
) -> dict:
    """Exact cutoff expectation of blockwise tilted-information sums vs the
    second-order main term, per k.

    Returns arrays k/exact/main/remainder plus the single-letter rate and
    dispersion. The sums are exact convolutions of the single-letter tilted
    atoms; additivity over letters makes this the block quantity.
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    sol = rd_solve(base, dist, d)
    rate = sol.rate
    var = max(0.0, float(base.probs @ sol.tilted**2) - rate * rate)
    weight = _gauss_weight(eps)
    ks, exact, main = [], [], []
    for k in k_grid:
        k = int(k)
        sv, sq = _source.sum_iid_distribution(sol.tilted, base.probs, k,
                                              atom_cap=atom_cap)
        exact.append(_cutoff.solve_cutoff(sv, sq, eps).expectation)
        main.append((1.0 - eps) * k * rate
                    - math.sqrt(k * var / (2.0 * math.pi)) * weight)
        ks.append(k)
    ks = np.asarray(ks)
    exact = np.asarray(exact)
    main = np.asarray(main)
    return {
        "k": ks,
        "exact": exact,
        "main": main,
        "remainder": exact - main,
        "rate": rate,
        "dispersion": var,
    }


def lemma3_mc_check(
    base: Pmf,
    dist: DistortionSpec,
    d: float,
    k: int,
    trials: int,
    seed: int,
    *,
    c1: float = 0.0,
    c2: float = 0.0,
) -> dict:
    """Monte Carlo frequency of blockwise ball-surprisal bound violations.

    For sampled source blocks, compares -log2 of the product-output ball
    mass against the tilted sum plus (1/2)log2 k + c2, slope-corrected by
    the block's conditional-distortion deviation from d and the supplied
    quadratic constant c1. Diagnostic only: the underlying statement is
    asymptotic and the constants are not pinned down, so nothing is
    asserted here.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sol = rd_solve(base, dist, d)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    counts = rng.multinomial(int(k), base.probs, size=int(trials))
    uniq, inverse = np.unique(counts, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    lhs_u = np.array([
        _ball_bits_counts(dist, sol.output_dist, c, float(d), int(k))
        for c in uniq
    ])
    lhs = lhs_u[inverse]
    tilted_sum = counts @ sol.tilted
    dbar = counts @ sol.cond_dist / k
    rhs = (
        tilted_sum
        + 0.5 * math.log2(k)
        + c2
        - k * sol.slope_lambda * (d - dbar)
        + k * c1 * (d - dbar) ** 2
    )
    viol = lhs > rhs + 1e-9
    return {
        "violation_freq": float(np.mean(viol)),
        "trials": int(trials),
        "seed": int(seed),
        "k": int(k),
        "mean_lhs": float(np.mean(lhs)),
        "mean_rhs": float(np.mean(rhs)),
        "c1": float(c1),
        "c2": float(c2),
    }
