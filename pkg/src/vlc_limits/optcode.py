"""Optimal single-shot variable-length coding with an error budget.

Symbols sorted by decreasing probability are assigned the binary strings
{'', '0', '1', '00', ...} in lexicographic order, so the rank-m symbol gets
a string of length floor(log2 m). No prefix condition is imposed. With an
error budget eps, the code erases (maps to the empty string) the least
likely outcomes, randomizing on the boundary length class so the expected
erased mass is exactly eps; the achieved average length is the cutoff
expectation of the length variable.

The deterministic variant replaces the boundary coin with a rank threshold
m0 inside the boundary class, keeping m0 itself losslessly; its length
exceeds the randomized optimum by at most phi(min(eps, 1/e)) bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import cutoff as _cutoff
from . import source as _source
from .errors import InvalidEpsilon, RankOutOfSupport, UnknownSymbol
from .source import Pmf

LOG2E = math.log2(math.e)


def rank_to_bits(m: int) -> str:
    """Binary string of lexicographic rank m (1-based; rank 1 is '')."""
    if m < 1:
        raise ValueError("ranks are 1-based")
    ell = m.bit_length() - 1
    if ell == 0:
        return ""
    return format(m - (1 << ell), f"0{ell}b")


def bits_to_rank(bits: str) -> int:
    """Inverse of rank_to_bits."""
    if bits and set(bits) - {"0", "1"}:
        raise ValueError(f"not a binary string: {bits!r}")
    return (1 << len(bits)) + (int(bits, 2) if bits else 0)


@dataclass(frozen=True)
class Codeword:
    """A binary string, possibly empty."""

    bits: str

    @property
    def rank(self) -> int:
        return bits_to_rank(self.bits)

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class OptimalCode:
    """Ranked codebook with boundary-randomization data.

    Fields M, eta, alpha describe the erasure profile: ranks with codeword
    length below eta are kept, lengths above eta are erased, and the length
    class eta itself is erased with probability alpha. M is the smallest
    rank count whose cumulative mass reaches 1 - epsilon. At epsilon = 1
    exactly, alpha equals 1 (the profile erases everything; the code still
    achieves average length 0).
    """

    pmf: Pmf
    epsilon: float
    M: int
    eta: int
    alpha: float
    avg_length: float
    _sorted_probs: np.ndarray = field(repr=False)
    _cum: np.ndarray = field(repr=False)
    _rank_of_index: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.pmf)

    def rank_of(self, symbol) -> int:
        """1-based rank of a symbol (original index or label)."""
        try:
            idx = self.pmf.index_of(symbol)
        except KeyError as e:
            raise UnknownSymbol(str(symbol)) from e
        return int(self._rank_of_index[idx])

    def length_class_mass(self, j: int) -> float:
        """P[codeword length == j] under the ranked assignment."""
        lo = 1 << j
        hi = min((1 << (j + 1)) - 1, self.n)
        if lo > self.n:
            return 0.0
        upper = float(self._cum[hi - 1])
        lower = float(self._cum[lo - 2]) if lo >= 2 else 0.0
        return upper - lower


def _check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    return eps


def build_code(p: Pmf, epsilon: float) -> OptimalCode:
    """Construct the optimal code at error budget epsilon."""
    eps = _check_epsilon(epsilon)
    q = p.sorted_probs
    cum = np.cumsum(q)
    n = q.size
    rank_of_index = np.empty(n, dtype=np.int64)
    rank_of_index[p.order_index] = np.arange(1, n + 1)

    if eps >= 1.0 - q[0]:
        # degenerate regime: every outcome maps to the empty string
        alpha = (eps - (1.0 - float(q[0]))) / float(q[0]) if q[0] > 0 else 0.0
        return OptimalCode(
            pmf=p, epsilon=eps, M=1, eta=0, alpha=min(alpha, 1.0), avg_length=0.0,
            _sorted_probs=q, _cum=cum, _rank_of_index=rank_of_index,
        )

    M = int(np.searchsorted(cum, 1.0 - eps, side="left")) + 1
    M = min(M, n)
    eta = M.bit_length() - 1

    hi = min((1 << (eta + 1)) - 1, n)
    p_gt = max(0.0, 1.0 - float(cum[hi - 1]))
    lo = 1 << eta
    p_eq = float(cum[hi - 1]) - (float(cum[lo - 2]) if lo >= 2 else 0.0)
    alpha = (eps - p_gt) / p_eq if p_eq > 0 else 0.0
    alpha = min(max(alpha, 0.0), 1.0)

    avg = (1.0 - alpha) * eta * p_eq
    for j in range(1, eta):  # j = 0 contributes nothing
        lo_j = 1 << j
        hi_j = min((1 << (j + 1)) - 1, n)
        avg += j * (float(cum[hi_j - 1]) - float(cum[lo_j - 2]))

    return OptimalCode(
        pmf=p, epsilon=eps, M=M, eta=eta, alpha=alpha, avg_length=float(avg),
        _sorted_probs=q, _cum=cum, _rank_of_index=rank_of_index,
    )


def zero_error_length(p: Pmf) -> float:
    """Average length at zero error: the sum over i >= 1 of P[rank >= 2^i]."""
    q = p.sorted_probs
    cum = np.cumsum(q)
    n = q.size
    total = 0.0
    i = 1
    while (1 << i) <= n:
        total += 1.0 - float(cum[(1 << i) - 2])
        i += 1
    return total


def deterministic_length(p: Pmf, epsilon: float) -> float:
    """Average length of the best deterministic (coin-free) variant.

    Uses the smallest rank threshold m0 in the boundary length class whose
    conditional tail mass is within the boundary budget, keeping m0 itself
    losslessly. Exceeds the randomized optimum by at most
    phi(min(eps, 1/e)) = at most 0.531 bits.
    """
    eps = _check_epsilon(epsilon)
    q = p.sorted_probs
    if eps >= 1.0 - q[0]:
        return 0.0
    code = build_code(p, eps)
    cum = code._cum
    n = q.size
    eta = code.eta
    lo = 1 << eta
    # the conditional-tail condition picks m0 = M: keep ranks 1..M, erase the
    # rest; erased mass 1 - cum[M-1] <= eps by the definition of M
    m0 = code.M
    avg = 0.0
    for j in range(1, eta):
        lo_j = 1 << j
        hi_j = min((1 << (j + 1)) - 1, n)
        avg += j * (float(cum[hi_j - 1]) - float(cum[lo_j - 2]))
    kept_eta = float(cum[m0 - 1]) - (float(cum[lo - 2]) if lo >= 2 else 0.0)
    avg += eta * kept_eta
    return float(avg)


def encode(code: OptimalCode, symbol, coin: float) -> Codeword:
    """Encode one symbol; boundary-class symbols are kept when coin >= alpha."""
    rank = code.rank_of(symbol)
    ell = rank.bit_length() - 1
    if ell > code.eta:
        return Codeword("")
    if ell == code.eta and coin < code.alpha:
        return Codeword("")
    return Codeword(rank_to_bits(rank))


def decode(code: OptimalCode, w) -> object:
    """Symbol of the codeword's lexicographic rank; '' decodes to rank 1."""
    bits = w.bits if isinstance(w, Codeword) else str(w)
    rank = bits_to_rank(bits)
    if rank > code.n:
        raise RankOutOfSupport(f"rank {rank} exceeds alphabet size {code.n}")
    idx = int(code.pmf.order_index[rank - 1])
    return code.pmf.labels[idx] if code.pmf.labels is not None else idx


def theorem2_bounds(p: Pmf, epsilon: float) -> tuple[float, float]:
    """Cutoff-information sandwich around the optimal average length.

    upper = E[<info>_eps]; lower = upper + L*(0) - H(S). Valid (and only
    accepted) for 0 <= eps < 1 - max prob.
    """
    eps = float(epsilon)
    q0 = float(np.max(p.probs))
    if not 0.0 <= eps < 1.0 - q0:
        raise InvalidEpsilon(
            f"theorem2 bounds require 0 <= eps < 1 - max prob = {1.0 - q0!r}"
        )
    einfo = _cutoff.solve_cutoff(p.info, p.probs, eps).expectation
    lower = einfo + zero_error_length(p) - _source.entropy(p)
    return lower, einfo


_MC_CHUNK = 1 << 20


def mc_validate(code: OptimalCode, src: Pmf, n: int, seed: int = 0) -> dict:
    """Simulate the code on n samples and report empirical error and length.

    Sampling and coins come from counter-based streams keyed by
    (seed, chunk index), so reports are bit-identical across reruns.
    Confidence radii are 3 sigma (binomial for the error frequency, CLT
    with the sample variance for the mean length).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cum_src = np.cumsum(src.probs)
    err_count = 0
    len_sum = 0
    len_sq_sum = 0
    done = 0
    chunk_index = 0
    while done < n:
        m = min(_MC_CHUNK, n - done)
        ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(chunk_index,))
        g = np.random.Generator(np.random.Philox(ss))
        u = g.random(m)
        coins = g.random(m)
        idx = np.searchsorted(cum_src, u, side="right")
        np.clip(idx, 0, len(src) - 1, out=idx)
        ranks = code._rank_of_index[idx]
        ells = np.frexp(ranks.astype(np.float64))[1] - 1  # floor(log2 rank)
        kept = (ells < code.eta) | ((ells == code.eta) & (coins >= code.alpha))
        err_count += int(np.count_nonzero(~kept & (ranks != 1)))
        kept_ells = ells[kept]
        len_sum += int(kept_ells.sum())
        len_sq_sum += int(np.dot(kept_ells, kept_ells))
        done += m
        chunk_index += 1

    emp_error = err_count / n
    emp_len = len_sum / n
    var_len = max(0.0, len_sq_sum / n - emp_len * emp_len)
    return {
        "n": n,
        "seed": int(seed),
        "emp_error": emp_error,
        "emp_avg_len": emp_len,
        "ci3_error": 3.0 * math.sqrt(max(emp_error * (1.0 - emp_error), 1e-300) / n),
        "ci3_avg_len": 3.0 * math.sqrt(var_len / n),
    }
