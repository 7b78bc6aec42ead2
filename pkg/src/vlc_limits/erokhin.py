"""Minimum mutual information under a symbol-error budget.

The exact value admits a water-filling parametric form: with symbols in
descending order and a support size M, the level eta >= 0 solves

    sum_{m<=M} P(m) = 1 - eps + (M - 1) * eta,

and the value is

    sum_{m<=M} phi(P(m)) - phi(1 - eps) - (M - 1) * phi(eta),

with phi(x) = x log2(1/x). The feasibility window for the pair (M, eta) is
P(M+1) <= eta < P(M): iterating M upward from the smallest mass-feasible
size, the first M whose level clears the next symbol's mass is optimal.
(Accepting merely 0 < eta <= P(M) picks the wrong support for sources such
as {0.4, 0.4, 0.2} at eps = 0.21; the convex-program oracle in this module
guards the rule.)

A certified alternating-minimization oracle solves the same quantity as a
rate-distortion program under the error-indicator distortion, either by
matching the average distortion to eps (inequality route) or by maximizing
the concave dual in the slope (equality route).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _ba
from . import cutoff as _cutoff
from . import optcode as _optcode
from . import source as _source
from .errors import InvalidEpsilon, NoValidParameter
from .source import Pmf, binary_entropy, phi

LOG2E = math.log2(math.e)


@dataclass(frozen=True)
class ErokhinPoint:
    """Value of the minimum mutual information with its parametric pair."""

    value: float
    M: int
    eta_param: float
    epsilon: float


def _check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise InvalidEpsilon(f"epsilon must lie in [0, 1], got {epsilon!r}")
    return eps


def erokhin_exact(p: Pmf, epsilon: float) -> ErokhinPoint:
    """Exact parametric evaluation.

    Returns value 0 for eps >= 1 - max prob (a constant guess already meets
    the budget) and the full entropy at eps = 0.
    """
    eps = _check_epsilon(epsilon)
    q = p.sorted_probs
    n = q.size
    if eps >= 1.0 - float(q[0]):
        return ErokhinPoint(value=0.0, M=1, eta_param=0.0, epsilon=eps)

    cum = np.cumsum(q)
    m_min = int(np.searchsorted(cum, 1.0 - eps, side="left")) + 1
    m_min = max(2, min(m_min, n))
    for M in range(m_min, n + 1):
        eta = (float(cum[M - 1]) - (1.0 - eps)) / (M - 1)
        eta = max(eta, 0.0)
        nxt = float(q[M]) if M < n else 0.0
        if eta >= nxt:
            head = q[:M]
            value = (
                -float(np.dot(head, np.log2(head)))
                - phi(1.0 - eps)
                - (M - 1) * phi(eta)
            )
            return ErokhinPoint(value=max(value, 0.0), M=M, eta_param=eta, epsilon=eps)
    raise NoValidParameter(
        "no support size admits a feasible water level; this indicates a bug"
    )


def _indicator_matrix(n: int) -> np.ndarray:
    D = np.ones((n, n))
    np.fill_diagonal(D, 0.0)
    return D


def erokhin_oracle(
    p: Pmf,
    epsilon: float,
    *,
    constraint: str = "equality",
    tol: float = 1e-9,
    max_iter: int = 100_000,
) -> float:
    """Independent convex-program evaluation (bits).

    Solves min I(S;Z) under the error-indicator distortion at level eps.
    ``constraint='inequality'`` matches the average distortion to eps by a
    root solve on the slope; ``constraint='equality'`` maximizes the concave
    dual g(lam) = F(lam) - lam * eps directly. Both agree on the binding
    regime eps < 1 - max prob; this is the guard for erokhin_exact.
    """
    eps = _check_epsilon(epsilon)
    if constraint not in ("equality", "inequality"):
        raise ValueError("constraint must be 'equality' or 'inequality'")
    n = len(p)
    if eps >= 1.0 - float(np.max(p.probs)):
        return 0.0
    if eps == 0.0:
        return _source.entropy(p)
    D = _indicator_matrix(n)
    rate_nats = _rd_rate_at_distortion(
        p.probs, D, eps, route=constraint, tol=tol, max_iter=max_iter
    )
    return max(rate_nats, 0.0) * LOG2E


def _rd_rate_at_distortion(probs, D, target, *, route, tol, max_iter):
    """Rate (nats) of the distortion-constrained program at the target level."""
    state = {"q": None}

    def F_and_D(lam):
        C = np.exp(-lam * D)
        q, _ = _ba.ba_fixed_slope(probs, C, q0=state["q"], tol=tol, max_iter=max_iter)
        state["q"] = q
        den = C.dot(q)
        F = float(np.dot(probs, -np.log(den)))
        dist, _ = _ba.channel_stats(probs, D, C, q)
        return F, dist

    lam_lo, lam_hi = _bracket_slope(F_and_D, target)
    if route == "inequality":
        lam = optimize.brentq(
            lambda l: F_and_D(l)[1] - target, lam_lo, lam_hi, xtol=1e-12, rtol=1e-14
        )
        F, _ = F_and_D(lam)
        return F - lam * target
    # equality route: maximize the concave dual over the slope
    res = optimize.minimize_scalar(
        lambda l: -(F_and_D(l)[0] - l * target),
        bounds=(lam_lo, lam_hi),
        method="bounded",
        options={"xatol": 1e-11},
    )
    return float(-res.fun)


def _bracket_slope(F_and_D, target, lam0=1.0, cap=60):
    """Find [lam_lo, lam_hi] with D(lam_lo) >= target >= D(lam_hi)."""
    lam_lo = lam_hi = lam0
    for _ in range(cap):
        if F_and_D(lam_lo)[1] > target:
            break
        lam_lo /= 2.0
    else:
        raise NoValidParameter("could not bracket the slope from below")
    for _ in range(cap):
        if F_and_D(lam_hi)[1] < target:
            break
        lam_hi *= 2.0
    else:
        raise NoValidParameter("could not bracket the slope from above")
    return lam_lo, lam_hi


def theorem1_bounds(p: Pmf, epsilon: float) -> tuple[float, float]:
    """Cutoff-information sandwich on the minimum mutual information."""
    eps = float(epsilon)
    q0 = float(np.max(p.probs))
    if not 0.0 <= eps < 1.0 - q0:
        raise InvalidEpsilon(f"bounds require 0 <= eps < 1 - max prob = {1.0 - q0!r}")
    einfo = _cutoff.solve_cutoff(p.info, p.probs, eps).expectation
    l0 = _optcode.zero_error_length(p)
    penalty = (
        (eps * math.log2(l0 + eps) if l0 + eps > 0 else 0.0)
        + 2.0 * binary_entropy(eps)
        + eps * LOG2E  # eps * log2(e)
        + phi(eps)  # eps * log2(1/eps)
    )
    return einfo - penalty, einfo


def psi(x: float) -> float:
    """x + (1+x) log2(1+x) - x log2 x, the strengthened lower-bound kernel."""
    if x < 0.0:
        raise ValueError("psi is defined for x >= 0")
    if x == 0.0:
        return 0.0
    return x + (1.0 + x) * math.log2(1.0 + x) - x * math.log2(x)


def psi_inv(y: float) -> float:
    """Inverse of psi on [0, inf), by bracketed root solve."""
    if y < 0.0:
        raise ValueError("psi_inv is defined for y >= 0")
    if y == 0.0:
        return 0.0
    # psi(x) >= x, so the root lies in [0, y]
    return float(optimize.brentq(lambda x: psi(x) - y, 0.0, y, xtol=1e-13, rtol=1e-15))


def theorem3_bounds(p: Pmf, epsilon: float) -> tuple[float, float, float]:
    """Bounds on the optimal average length built from the mutual-information
    minimum: (plain lower, upper, strengthened psi-inverse lower)."""
    eps = float(epsilon)
    q0 = float(np.max(p.probs))
    if not 0.0 <= eps < 1.0 - q0:
        raise InvalidEpsilon(f"bounds require 0 <= eps < 1 - max prob = {1.0 - q0!r}")
    h_eps = erokhin_exact(p, eps).value
    h_full = _source.entropy(p)
    lower = h_eps - math.log2(h_eps + 1.0) - LOG2E
    upper = (
        h_eps
        + (eps * math.log2(h_full + eps) if h_full + eps > 0 else 0.0)
        + eps * LOG2E
        + phi(eps)
        + 2.0 * binary_entropy(eps)
    )
    return lower, upper, psi_inv(h_eps)


def hamming_h0eps_bounds(p: Pmf, epsilon: float) -> tuple[float, float]:
    """Cutoff-information bounds on the zero-distortion quantizer entropy."""
    eps = _check_epsilon(epsilon)
    einfo = _cutoff.solve_cutoff(p.info, p.probs, eps).expectation
    inv_e = 1.0 / math.e
    return einfo - phi(max(1.0 - eps, inv_e)), einfo + phi(min(eps, inv_e))
