"""Exact finite-blocklength limits for memoryless sources, plus the Gaussian
second-order approximation.

Blocks of k letters are handled through composition classes: every string
in a class is equiprobable, so the class is one row holding an exact
big-integer string count and a contiguous big-integer rank range. Sums of
floor(log2 rank) over a rank interval decompose over dyadic blocks
[2^j, 2^(j+1) - 1], each contributing j bits per covered rank, which keeps
the evaluation polynomial in k while ranks themselves are astronomical.

The approximation side packages the second-order main term

    (1 - eps) k H - sqrt(k V / (2 pi)) exp(-qinv(eps)^2 / 2)

with an optional refined remainder for binary sources. The displayed sign
of the remainder's (log2 k)/2 term is selectable: the zero-error expansion
anchor forces the negative choice, which is the default; see the README.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import cutoff as _cutoff
from . import source as _source
from .errors import InvalidEpsilon, ScaleExceeded, TypeCapExceeded
from .source import Pmf, ProductSource

_DEFAULT_TYPE_CAP = 2_000_000
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class TypeTable:
    """Composition classes of a memoryless block, descending per-string prob.

    Parallel row arrays: log2_probs (per-string, bits), counts (exact big
    integers), rank_starts/rank_ends (1-based, inclusive, contiguous).
    """

    k: int
    alphabet: int
    log2_probs: np.ndarray
    counts: list
    rank_starts: list
    rank_ends: list

    @property
    def rows(self):
        return list(zip(self.log2_probs, self.counts, self.rank_starts, self.rank_ends))

    def masses(self) -> np.ndarray:
        """Total probability of each row (count times per-string prob)."""
        out = np.empty(len(self.counts))
        for i, c in enumerate(self.counts):
            out[i] = math.exp(math.log(c) + float(self.log2_probs[i]) * _LN2)
        return out


def _compositions(k: int, a: int):
    """Yield all composition vectors of k into a nonnegative parts."""
    if a == 1:
        yield (k,)
        return
    for head in range(k + 1):
        for rest in _compositions(k - head, a - 1):
            yield (head,) + rest


def build_type_table(src: ProductSource, type_cap: int = _DEFAULT_TYPE_CAP) -> TypeTable:
    """Enumerate composition classes with exact counts and rank ranges."""
    k, a = src.k, len(src.base)
    n_types = math.comb(k + a - 1, a - 1)
    if n_types > type_cap:
        raise TypeCapExceeded(f"{n_types} composition classes exceed cap {type_cap}")
    log2p_base = -src.base.info  # log2 of each base prob
    if a == 2:
        i = np.arange(k + 1)
        log2_probs = (k - i) * log2p_base[0] + i * log2p_base[1]
        counts = [math.comb(k, int(j)) for j in i]
    else:
        log2_list = []
        counts = []
        kfact = math.factorial(k)
        for comp in _compositions(k, a):
            log2_list.append(float(np.dot(comp, log2p_base)))
            denom = 1
            for c in comp:
                denom *= math.factorial(c)
            counts.append(kfact // denom)
        log2_probs = np.asarray(log2_list)

    order = np.argsort(-log2_probs, kind="stable")
    log2_probs = log2_probs[order]
    counts = [counts[int(j)] for j in order]

    # merge rows whose per-string probabilities agree within 1e-12 bits
    merged_lp = [log2_probs[0]]
    merged_counts = [counts[0]]
    for lp, c in zip(log2_probs[1:], counts[1:]):
        if merged_lp[-1] - lp <= 1e-12:
            merged_counts[-1] += c
        else:
            merged_lp.append(lp)
            merged_counts.append(c)

    starts, ends = [], []
    pos = 1
    for c in merged_counts:
        starts.append(pos)
        ends.append(pos + c - 1)
        pos += c
    return TypeTable(
        k=k,
        alphabet=a,
        log2_probs=np.asarray(merged_lp),
        counts=merged_counts,
        rank_starts=starts,
        rank_ends=ends,
    )


def _length_class_masses(table: TypeTable) -> tuple[np.ndarray, np.ndarray]:
    """Mass of each codeword-length class j under the ranked assignment.

    Class j covers ranks [2^j, 2^(j+1) - 1]; intersecting those dyadic
    blocks with the table's rank ranges gives each class's probability
    without touching individual ranks.
    """
    total_ranks = table.rank_ends[-1]
    J = total_ranks.bit_length() - 1
    masses = np.zeros(J + 1)
    for lp, count, rs, re in table.rows:
        ln_p = float(lp) * _LN2
        j_lo = rs.bit_length() - 1
        j_hi = re.bit_length() - 1
        for j in range(j_lo, j_hi + 1):
            blk_lo = 1 << j
            blk_hi = (1 << (j + 1)) - 1
            overlap = min(re, blk_hi) - max(rs, blk_lo) + 1
            if overlap > 0:
                masses[j] += math.exp(math.log(overlap) + ln_p)
    return np.arange(J + 1, dtype=np.float64), masses


def lstar_exact(
    src: ProductSource, epsilon: float, type_cap: int = _DEFAULT_TYPE_CAP
) -> float:
    """Exact optimal average length for the k-letter block at budget eps.

    The cutoff is applied to the codeword-length variable whose class
    masses come from the dyadic-block decomposition above; for expanded
    alphabets up to 2^20 strings this matches the single-shot construction
    on the flattened pmf to 1e-9.
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    table = build_type_table(src, type_cap=type_cap)
    values, masses = _length_class_masses(table)
    total = masses.sum()
    if abs(total - 1.0) > 1e-9:
        raise ArithmeticError(f"length-class masses sum to {total!r}")
    return _cutoff.solve_cutoff(values, masses / total, eps).expectation


def einfo_cutoff_exact(
    src: ProductSource, epsilon: float, atom_cap: int = _source._DEFAULT_ATOM_CAP
) -> float:
    """Cutoff expectation of the block information (exact convolution)."""
    values, probs = _source.info_distribution(src, atom_cap=atom_cap)
    return _cutoff.solve_cutoff(values, probs, epsilon).expectation


def length_class_pmf(
    src: ProductSource, type_cap: int = _DEFAULT_TYPE_CAP
) -> tuple[np.ndarray, np.ndarray]:
    """Distribution of the zero-error codeword length for the block.

    Returns (lengths j, masses); masses sum to 1 up to accumulated float
    error. This is the pmf sketched by the normalized-length figure.
    """
    table = build_type_table(src, type_cap=type_cap)
    return _length_class_masses(table)


def _block_top_mass(src: ProductSource) -> float:
    return float(np.max(src.base.probs)) ** src.k


def theorem2_bounds_block(
    src: ProductSource,
    epsilon: float,
    *,
    type_cap: int = _DEFAULT_TYPE_CAP,
    atom_cap: int = _source._DEFAULT_ATOM_CAP,
) -> tuple[float, float]:
    """Block form of the cutoff-information sandwich on the optimal length.

    upper = E[<block info>_eps]; lower = upper + L*(0) - k H. Requires
    eps < 1 - (max base prob)^k, mirroring the single-shot condition.
    """
    eps = float(epsilon)
    q0 = _block_top_mass(src)
    if not 0.0 <= eps < 1.0 - q0:
        raise InvalidEpsilon(
            f"block bounds require 0 <= eps < 1 - top block mass = {1.0 - q0!r}"
        )
    einfo = einfo_cutoff_exact(src, eps, atom_cap=atom_cap)
    l0 = lstar_exact(src, 0.0, type_cap=type_cap)
    lower = einfo + l0 - src.k * _source.entropy(src.base)
    return lower, einfo


def theorem1_bounds_block(
    src: ProductSource,
    epsilon: float,
    *,
    type_cap: int = _DEFAULT_TYPE_CAP,
    atom_cap: int = _source._DEFAULT_ATOM_CAP,
) -> tuple[float, float]:
    """Block form of the sandwich on the minimum mutual information."""
    eps = float(epsilon)
    q0 = _block_top_mass(src)
    if not 0.0 <= eps < 1.0 - q0:
        raise InvalidEpsilon(
            f"block bounds require 0 <= eps < 1 - top block mass = {1.0 - q0!r}"
        )
    einfo = einfo_cutoff_exact(src, eps, atom_cap=atom_cap)
    l0 = lstar_exact(src, 0.0, type_cap=type_cap)
    penalty = (
        (eps * math.log2(l0 + eps) if l0 + eps > 0 else 0.0)
        + 2.0 * _source.binary_entropy(eps)
        + eps * _source.LOG2E
        + _source.phi(eps)
    )
    return einfo - penalty, einfo


_FLAT_STRING_CAP = 1 << 20


def erokhin_block_exact(src: ProductSource, epsilon: float):
    """Exact minimum block mutual information, by flattening the block pmf.

    Composition rows expand to individual equiprobable strings, so the
    flat pmf has (alphabet size)^k entries; refuse beyond 2^20.
    """
    from . import erokhin as _erokhin

    n_strings = len(src.base) ** src.k
    if n_strings > _FLAT_STRING_CAP:
        raise ScaleExceeded(
            f"{n_strings} block strings exceed the flattening cap {_FLAT_STRING_CAP}"
        )
    table = build_type_table(src)
    per_string = np.exp2(table.log2_probs)
    counts = np.asarray([int(c) for c in table.counts], dtype=np.int64)
    flat = np.repeat(per_string, counts)
    return _erokhin.erokhin_exact(Pmf(flat / flat.sum()), epsilon)


def qinv(epsilon: float) -> float:
    """Inverse of the standard Gaussian complementary cdf."""
    eps = float(epsilon)
    if not 0.0 < eps < 1.0:
        raise InvalidEpsilon(f"qinv needs 0 < eps < 1, got {epsilon!r}")
    return float(math.sqrt(2.0) * special.erfcinv(2.0 * eps))


def _gauss_weight(epsilon: float) -> float:
    """exp(-qinv(eps)^2 / 2), continuously 0 at eps in {0, 1}."""
    if epsilon <= 0.0 or epsilon >= 1.0:
        return 0.0
    return math.exp(-0.5 * qinv(epsilon) ** 2)


@dataclass(frozen=True)
class GaussApprox:
    """Second-order approximation at one (k, eps) point."""

    k: int
    epsilon: float
    main: float
    theta: float | None
    H: float
    V: float
    degenerate: bool

    @property
    def value(self) -> float:
        return self.main + (self.theta if self.theta is not None else 0.0)


def gaussian_approx(
    base: Pmf,
    k: int,
    epsilon: float,
    remainder_mode: str = "none",
    theta_sign: int = -1,
) -> GaussApprox:
    """Main second-order term, optionally with the refined binary remainder.

    remainder_mode 'binary_refined' is only defined for two-symbol bases
    with unequal masses; theta_sign selects the sign of its (log2 k)/2 term
    (-1 is the default; +1 is exposed for comparison, see module docstring).
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    H = _source.entropy(base)
    V = _source.varentropy(base)
    degenerate = V <= 0.0
    main = (1.0 - eps) * k * H
    if not degenerate:
        main -= math.sqrt(k * V / (2.0 * math.pi)) * _gauss_weight(eps)

    theta = None
    if remainder_mode == "binary_refined":
        if len(base) != 2:
            raise ValueError("binary_refined needs a two-symbol base")
        p = float(np.min(base.probs))
        if p >= 0.5:
            raise ValueError("binary_refined needs unequal symbol masses")
        if theta_sign not in (-1, 1):
            raise ValueError("theta_sign must be -1 or +1")
        theta = (1.0 - eps) * (
            theta_sign * 0.5 * math.log2(k)
            - 0.5 * math.log2(4.0 * math.e**3 * math.pi)
            + p / (1.0 - 2.0 * p)
            + math.log2(1.0 / (1.0 - 2.0 * p))
            + (0.5 / (1.0 - 2.0 * p)) * math.log2((1.0 - p) / p)
        )
    elif remainder_mode != "none":
        raise ValueError("remainder_mode must be 'none' or 'binary_refined'")

    return GaussApprox(
        k=k, epsilon=eps, main=main, theta=theta, H=H, V=V, degenerate=degenerate
    )


def lemma1_check(values, probs, epsilon: float, k_grid) -> np.ndarray:
    """Exact-minus-main residuals for sums of iid copies of a variable.

    For each k the exact cutoff expectation of the k-fold sum (iterated
    convolution) is compared against the second-order main term built from
    the variable's own mean and variance.
    """
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    v = np.asarray(values, dtype=np.float64)
    q = np.asarray(probs, dtype=np.float64)
    mu = float(np.dot(q, v))
    var = max(0.0, float(np.dot(q, v * v)) - mu * mu)
    weight = _gauss_weight(eps)
    out = []
    for k in k_grid:
        sv, sq = _source.sum_iid_distribution(v, q, int(k))
        exact = _cutoff.solve_cutoff(sv, sq, eps).expectation
        main = (1.0 - eps) * k * mu - math.sqrt(k * var / (2.0 * math.pi)) * weight
        out.append(exact - main)
    return np.asarray(out)


def dispersion_smalleps_check(eps_grid) -> np.ndarray:
    """Ratio of the Gaussian dispersion weight to its small-eps asymptote.

    The asymptote eps * sqrt(2 ln(1/eps)) uses the natural log; the ratio
    must approach 1 from proper evaluation of exp(-qinv(eps)^2/2)/sqrt(2 pi).
    """
    out = []
    for eps in eps_grid:
        e = float(eps)
        if not 0.0 < e <= 0.5:
            raise InvalidEpsilon("ratio check needs eps in (0, 0.5]")
        f = _gauss_weight(e) / math.sqrt(2.0 * math.pi)
        asym = e * math.sqrt(2.0 * math.log(1.0 / e))
        out.append(f / asym)
    return np.asarray(out)
