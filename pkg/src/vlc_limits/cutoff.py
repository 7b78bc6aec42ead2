"""The error-budget cutoff operator on discrete real-valued variables.

Given a discrete variable X and a budget eps, the cutoff keeps X below a
threshold eta, zeroes everything above it, and randomizes the atom at eta
itself so that exactly eps of probability mass is removed:

    P[X > eta] + alpha * P[X = eta] = eps,   0 <= alpha < 1.

The solved expectation E[X * 1{X < eta}] + (1 - alpha) * eta * P[X = eta]
is what every bound in this package is made of. An independent variational
evaluation (greedy assignment of the eps budget to the largest atoms) is
exposed as the oracle the solver is tested against.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidEpsilon

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CutoffSpec:
    """Solved cutoff: threshold, boundary randomization, and expectation."""

    eta: float
    alpha: float
    epsilon: float
    expectation: float


def _as_atoms(values, probs):
    v = np.asarray(values, dtype=np.float64).ravel()
    q = np.asarray(probs, dtype=np.float64).ravel()
    if v.size != q.size or v.size == 0:
        raise ValueError("values and probs must be non-empty and equally sized")
    if np.any(q < 0.0) or not np.all(np.isfinite(q)) or not np.all(np.isfinite(v)):
        raise ValueError("atoms must be finite with nonnegative probabilities")
    total = float(q.sum())
    if abs(total - 1.0) > _PROB_SUM_TOL:
        raise ValueError(f"atom probabilities must sum to 1 within {_PROB_SUM_TOL}")
    # collapse duplicate values so the boundary atom has its full mass
    uv, inverse = np.unique(v, return_inverse=True)
    uq = np.zeros_like(uv)
    np.add.at(uq, inverse, q)
    keep = uq > 0.0
    return uv[keep], uq[keep]


def _check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    return eps


def solve_cutoff(values, probs, epsilon: float) -> CutoffSpec:
    """Solve for (eta, alpha) and the cutoff expectation.

    Scans atoms in decreasing value accumulating tail mass; the first atom
    where the running tail exceeds eps becomes eta, and alpha spends the
    leftover budget on it. When eps equals the tail mass exactly at an atom
    boundary the next atom is chosen with alpha = 0 (the pair is non-unique
    there; the induced variable is the same). At eps = 1 every atom is cut:
    eta is placed below the support and alpha = 0.
    """
    eps = _check_epsilon(epsilon)
    v, q = _as_atoms(values, probs)  # ascending values
    n = v.size
    tails = np.cumsum(q[::-1])  # tails[i] = mass of the top (i+1) atoms
    idx = int(np.searchsorted(tails, eps, side="right"))
    if idx >= n:
        # the entire distribution is cut (eps = 1 up to rounding)
        return CutoffSpec(eta=float(v[0] - 1.0), alpha=0.0, epsilon=eps, expectation=0.0)
    j = n - 1 - idx  # ascending index of the threshold atom
    above = float(tails[idx - 1]) if idx > 0 else 0.0
    alpha = (eps - above) / float(q[j])
    alpha = min(max(alpha, 0.0), 1.0)
    expectation = float(np.dot(v[:j], q[:j])) + (1.0 - alpha) * float(v[j]) * float(q[j])
    return CutoffSpec(eta=float(v[j]), alpha=alpha, epsilon=eps, expectation=expectation)


def cutoff_expectation_variational(values, probs, epsilon: float) -> float:
    """Independent evaluation of the cutoff expectation.

    Solves the variational form directly: spend an error budget of eps
    probability mass to erase as much of E[X] as possible, which means
    assigning it greedily to the largest atoms (fractionally at the
    boundary). Must agree with solve_cutoff within 1e-10.
    """
    eps = _check_epsilon(epsilon)
    v, q = _as_atoms(values, probs)
    # descending scan: cut_i = how much of atom i's mass the budget covers
    vd = v[::-1]
    qd = q[::-1]
    before = np.concatenate(([0.0], np.cumsum(qd)[:-1]))
    cut = np.clip(eps - before, 0.0, qd)
    return float(np.dot(vd, qd - cut))
