"""Alternating-minimization core for rate-distortion style programs.

For a fixed slope lam >= 0 over a distortion matrix D the inner problem is

    min over output pmfs q of  F(q) = sum_s p_s * (-log sum_z q_z * c_sz),

with c_sz = exp(-lam * D_sz). One sweep multiplies q elementwise by

    u_z = sum_s p_s * c_sz / (sum_z' q_z' * c_sz'),

and max_z log(u_z), taken over ALL columns, upper-bounds the remaining gap
F(q') - min F, so convergence is certified rather than guessed.

Everything here works in nats; callers convert to bits at the boundary.
Both a numba kernel and a pure numpy twin are provided; `ba_fixed_slope`
dispatches on the configured backend.
"""
from __future__ import annotations

import math

import numpy as np

from ._backend import njit, resolve_backend
from .errors import NotConverged

# Multiplicative updates cannot resurrect an atom once it rounds to exact
# zero, yet warm starts across slopes routinely drive atoms through 1e-200
# territory before the support widens again. Pinning the iterate at a tiny
# positive floor keeps re-entry possible; at this size the floor perturbs
# den and F below machine precision, so the exit certificate still stands.
_Q_FLOOR = 1e-300


@njit(cache=True)
def _ba_sweeps_numba(p, C, q, tol, max_iter):
    ns, nz = C.shape
    den = np.empty(ns)
    u = np.empty(nz)
    gap = math.inf
    it = 0
    while it < max_iter:
        for s in range(ns):
            acc = 0.0
            for z in range(nz):
                acc += q[z] * C[s, z]
            den[s] = acc
        for z in range(nz):
            acc = 0.0
            for s in range(ns):
                acc += p[s] * C[s, z] / den[s]
            u[z] = acc
        gap = 0.0
        for z in range(nz):
            if u[z] > 0.0 and math.log(u[z]) > gap:
                gap = math.log(u[z])
        total = 0.0
        for z in range(nz):
            q[z] = q[z] * u[z]
            if q[z] < _Q_FLOOR:
                q[z] = _Q_FLOOR
            total += q[z]
        for z in range(nz):
            q[z] /= total
        it += 1
        if gap < tol:
            break
    return q, gap, it


def _ba_sweeps_numpy(p, C, q, tol, max_iter):
    gap = math.inf
    it = 0
    while it < max_iter:
        den = C.dot(q)
        u = C.T.dot(p / den)
        pos = u > 0.0
        gap = max(float(np.max(np.log(u[pos]))), 0.0) if np.any(pos) else 0.0
        q = np.maximum(q * u, _Q_FLOOR)
        q /= q.sum()
        it += 1
        if gap < tol:
            break
    return q, gap, it


def ba_fixed_slope(p, C, q0=None, tol=1e-11, max_iter=100_000):
    """Run certified BA sweeps at a fixed slope.

    Parameters
    ----------
    p : source pmf (1-D)
    C : ns x nz nonnegative kernel, typically exp(-lam * D)
    q0 : starting output pmf; default uniform
    tol : stop when the duality gap (nats) drops below this
    max_iter : raise NotConverged past this many sweeps

    Returns
    -------
    q : converged output pmf
    gap : final certified gap in nats
    """
    p = np.ascontiguousarray(p, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    q = (
        np.full(C.shape[1], 1.0 / C.shape[1])
        if q0 is None
        else np.ascontiguousarray(q0, dtype=np.float64).copy()
    )
    if resolve_backend() == "numba":
        q, gap, it = _ba_sweeps_numba(p, C, q, tol, max_iter)
    else:
        q, gap, it = _ba_sweeps_numpy(p, C, q, tol, max_iter)
    if gap >= tol:
        raise NotConverged(
            f"fixed-slope sweeps did not certify tol={tol} in {max_iter} iterations",
            residual=float(gap),
        )
    return q, float(gap)


def channel_stats(p, D, C, q):
    """Distortion and rate (nats) of the channel implied by output q.

    The implied channel is W(z|s) = q_z c_sz / den_s; its average distortion
    and mutual information are what slope search and reporting need.
    """
    den = C.dot(q)
    W = (C * q[None, :]) / den[:, None]
    dist = float(np.dot(p, (W * D).sum(axis=1)))
    # I(S;Z) with the exact output marginal of W, robust to q != marginal
    out = W.T.dot(p)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(W > 0.0, W / out[None, :], 1.0)
        rate = float(np.dot(p, np.sum(np.where(W > 0.0, W * np.log(ratio), 0.0), axis=1)))
    return dist, max(rate, 0.0)
