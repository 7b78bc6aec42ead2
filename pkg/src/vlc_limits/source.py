"""Finite discrete sources and the scalar information quantities.

This module owns the probability-mass representation used everywhere else:
a finite pmf with a deterministic probability-descending order, the
per-symbol information values, and the distribution of the information in a
memoryless block (an iterated convolution of the single-letter atoms).

Conventions
-----------
* probabilities live in linear domain as float64; information in bits
* zero-mass symbols are stripped at construction
* ties in the descending order are broken by ascending original index,
  which keeps every downstream code construction deterministic
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import AtomCapExceeded

LOG2E = math.log2(math.e)

_SUM_TOL = 1e-12
_MERGE_TOL = 1e-12  # bits; convolution atoms closer than this are one multiset
_DEFAULT_ATOM_CAP = 10**7


def phi(x: float) -> float:
    """x * log2(1/x), continuously extended with phi(0) = 0."""
    if x <= 0.0:
        return 0.0
    return -x * math.log2(x)


def binary_entropy(x: float) -> float:
    """Entropy of a {x, 1-x} coin in bits."""
    return phi(x) + phi(1.0 - x)


class Pmf:
    """Finite discrete distribution with a deterministic descending order.

    Parameters
    ----------
    probs : array-like
        Probability masses. Must be nonnegative and sum to 1 within 1e-12.
        Zero entries are stripped (with their labels).
    labels : sequence of str, optional
        Symbol names. When omitted, symbols are addressed by original index.
    """

    __slots__ = ("probs", "labels", "order_index", "_label_to_index")

    def __init__(self, probs, labels=None):
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("probs must be a non-empty 1-D array")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("probs must be finite and nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"probs must sum to 1 within {_SUM_TOL}, got {total!r}")

        keep = arr > 0.0
        if labels is not None:
            labels = [str(l) for l in labels]
            if len(labels) != arr.size:
                raise ValueError("labels length must match probs length")
            labels = [l for l, k in zip(labels, keep) if k]
        arr = arr[keep]

        self.probs = arr
        self.probs.flags.writeable = False
        self.labels = labels
        # argsort of the negated masses: descending, ties by original index
        self.order_index = np.argsort(-arr, kind="stable")
        self.order_index.flags.writeable = False
        self._label_to_index = (
            {l: i for i, l in enumerate(labels)} if labels is not None else None
        )

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"Pmf(n={len(self)}, probs={np.array2string(self.probs, precision=4)})"

    @property
    def info(self) -> np.ndarray:
        """Per-symbol information -log2 p, in original symbol order."""
        return -np.log2(self.probs)

    @property
    def sorted_probs(self) -> np.ndarray:
        """Masses in probability-descending order."""
        return self.probs[self.order_index]

    def index_of(self, symbol) -> int:
        """Original index of a symbol given as index or label."""
        if self._label_to_index is not None and isinstance(symbol, str):
            if symbol not in self._label_to_index:
                raise KeyError(symbol)
            return self._label_to_index[symbol]
        i = int(symbol)
        if not 0 <= i < len(self):
            raise KeyError(symbol)
        return i


@dataclass(frozen=True)
class ProductSource:
    """k independent copies of a base source (memoryless block)."""

    base: Pmf
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")


def entropy(p: Pmf) -> float:
    """H(S) in bits."""
    return float(np.dot(p.probs, p.info))


def varentropy(p: Pmf) -> float:
    """Variance of the information, in bits squared."""
    info = p.info
    h = float(np.dot(p.probs, info))
    second = float(np.dot(p.probs, info * info))
    return max(0.0, second - h * h)


def third_abs_moment(p: Pmf) -> float:
    """E[|info - H|^3] in bits cubed."""
    info = p.info
    h = float(np.dot(p.probs, info))
    return float(np.dot(p.probs, np.abs(info - h) ** 3))


def _merge_atoms(values: np.ndarray, probs: np.ndarray, tol: float):
    """Sort atoms by value and merge those within tol of each other."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    q = probs[order]
    if v.size <= 1:
        return v, q
    starts = np.concatenate(([0], np.nonzero(np.diff(v) > tol)[0] + 1))
    return v[starts], np.add.reduceat(q, starts)


def _convolve_atoms(a, b, atom_cap):
    va, pa = a
    vb, pb = b
    v = np.add.outer(va, vb).ravel()
    q = np.multiply.outer(pa, pb).ravel()
    v, q = _merge_atoms(v, q, _MERGE_TOL)
    if v.size > atom_cap:
        raise AtomCapExceeded(f"{v.size} atoms exceed cap {atom_cap}")
    return v, q


def sum_iid_distribution(values, probs, k: int, atom_cap: int = _DEFAULT_ATOM_CAP):
    """Exact distribution of the sum of k iid copies of a discrete variable.

    Returns (values, probs) with values ascending. A two-atom base uses the
    closed binomial form directly (the k+1 sums are computed without any
    intermediate rounding); larger bases go through iterated convolution
    with binary exponentiation, merging atoms within 1e-12.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    v0 = np.asarray(values, dtype=np.float64)
    p0 = np.asarray(probs, dtype=np.float64)
    v0, p0 = _merge_atoms(v0, p0, _MERGE_TOL)

    if v0.size == 1:
        return np.array([k * v0[0]]), np.array([1.0])
    if v0.size == 2:
        if k + 1 > atom_cap:
            raise AtomCapExceeded(f"{k + 1} atoms exceed cap {atom_cap}")
        i = np.arange(k + 1)
        vals = (k - i) * v0[0] + i * v0[1]
        pm = stats.binom.pmf(i, k, p0[1])
        return vals, pm

    result = None
    base = (v0, p0)
    n = k
    while n:
        if n & 1:
            result = base if result is None else _convolve_atoms(result, base, atom_cap)
        n >>= 1
        if n:
            base = _convolve_atoms(base, base, atom_cap)
    return result


def info_distribution(src: ProductSource, atom_cap: int = _DEFAULT_ATOM_CAP):
    """Exact distribution of the block information (sum of per-letter infos).

    Returns (values, probs), values ascending in bits. Raises
    AtomCapExceeded when the convolution would produce more distinct atoms
    than the cap.
    """
    base_vals = src.base.info
    return sum_iid_distribution(base_vals, src.base.probs, src.k, atom_cap=atom_cap)
