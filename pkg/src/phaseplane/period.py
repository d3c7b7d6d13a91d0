"""Period of an oscillation from its phase-plane branches.

The time to traverse a branch is the integral of dx / |phi(x)|, whose
integrand blows up like (distance to a turning point)^(-1/2) at both ends.
Integrals are computed by tanh-sinh quadrature, which clusters nodes
double-exponentially at the endpoints and so needs no knowledge of the
singularity exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotClosed, NumericalFailure, QuadratureError
from .reduction import BranchProfile, ClosureReport

MAX_LEVEL = 12
T_MAX = 4.0  # node range in the transformed variable; weights beyond are < 1e-35
METHODS = ("symmetric-quadrature", "two-branch-quadrature", "shooting")


@dataclass(frozen=True)
class PeriodEstimate:
    """A period with its estimated absolute error and the method used."""

    T: float
    err: float
    method: str

    def __post_init__(self):
        if not (self.T > 0 and self.err >= 0):
            raise NumericalFailure(f"invalid period estimate T={self.T!r}, err={self.err!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.T


def _nodes(level: int):
    """Abscissae t of level ``level`` that are new with respect to coarser levels."""
    h = 2.0 ** -level
    n = int(T_MAX / h)
    k = np.arange(-n, n + 1)
    if level > 0:
        k = k[k % 2 != 0]
    return k * h


def quad_singular(g: Callable, lo: float, hi: float, tol: float = 1e-10, *,
                  distances: bool = False, max_level: int = MAX_LEVEL) -> tuple[float, float]:
    """Tanh-sinh quadrature of g over [lo, hi].

    ``g`` is called with a numpy array of abscissae.  With
    ``distances=True`` it is called as ``g(x, d_lo, d_hi)`` where ``d_lo =
    x - lo`` and ``d_hi = hi - x`` are computed directly from the transform,
    so they stay accurate where x itself rounds to an endpoint.  Use this
    form when the singularity depends on the distance to a non-zero
    endpoint.

    Levels halve the step until two successive sums differ by at most tol;
    the returned error estimate is that last difference.  Without distances
    it also includes the effect of rounding x next to an endpoint (about
    |g| * ulp(x) / distance per node), which for singularities at a
    non-zero endpoint can dominate.

    Returns
    -------
    value, err : float

    Raises
    ------
    QuadratureError
        No convergence by ``max_level`` or a NaN from the integrand.
    """
    if not lo < hi:
        raise ValueError("quad_singular needs lo < hi")
    r = 0.5 * (hi - lo)
    total = 0.0
    rounding = 0.0
    prev = None
    for level in range(max_level + 1):
        t = _nodes(level)
        y = 0.5 * math.pi * np.sinh(t)
        with np.errstate(over="ignore"):
            d_lo = 2.0 * r / (1.0 + np.exp(-2.0 * y))
            d_hi = 2.0 * r / (1.0 + np.exp(2.0 * y))
            w = 0.5 * math.pi * np.cosh(t) / np.cosh(y) ** 2
        x = np.where(d_lo <= d_hi, lo + d_lo, hi - d_hi)
        keep = (d_lo > 0) & (d_hi > 0) & (w > 0)
        if not distances:
            keep &= (x > lo) & (x < hi)
        x, d_lo, d_hi, w = x[keep], d_lo[keep], d_hi[keep], w[keep]
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.asarray(g(x, d_lo, d_hi) if distances else g(x), dtype=float)
        if gx.shape != x.shape:
            gx = np.broadcast_to(gx, x.shape)
        bad = ~np.isfinite(gx)
        if bad.any():
            xb = float(x[bad][0])
            raise QuadratureError(f"integrand is not finite at x={xb!r}")
        total += r * float(np.sum(w * gx))
        if not distances:
            rel = np.minimum(1.0, np.spacing(x) / np.minimum(d_lo, d_hi))
            rounding += r * float(np.sum(w * np.abs(gx) * rel))
        value = total * 2.0 ** -level
        if prev is not None:
            err = abs(value - prev)
            if level >= 3 and err <= tol:
                return value, err + rounding * 2.0 ** -level
        prev = value
    raise QuadratureError(f"tanh-sinh did not reach tol={tol:g} by level {max_level}")


def period_symmetric(phi: Callable, A: float, tol: float = 1e-10, *,
                     offset: bool = False) -> PeriodEstimate:
    """T = 4 * integral over [0, A] of dx / phi(x).

    Assumes an orbit symmetric about x = 0 with turning points at +-A.
    ``phi`` takes an array; with ``offset=True`` it receives the distance
    A - x instead of x, which keeps phi accurate next to the turning point.
    """
    if not A > 0:
        raise ValueError("amplitude must be positive")

    def g(x, d_lo, d_hi):
        p = np.asarray(phi(d_hi if offset else x), dtype=float)
        if np.any(p <= 0):
            xb = float(np.asarray(x)[np.argmax(np.broadcast_to(p, np.shape(x)) <= 0)])
            raise NumericalFailure(f"phi is not positive at interior point x={xb!r}")
        return 1.0 / p

    if offset:
        value, err = quad_singular(g, 0.0, A, tol / 4.0, distances=True)
    else:
        value, err = quad_singular(lambda x: g(x, None, None), 0.0, A, tol / 4.0)
    return PeriodEstimate(4.0 * value, 4.0 * err, "symmetric-quadrature")


def branch_time(profile: BranchProfile, tol: float = 1e-10) -> tuple[float, float]:
    """Time spent on one branch, the integral of dx / sqrt(u) along it."""
    if profile.end_turning_point is None:
        raise NotClosed("branch has no end turning point")

    def g(s, d_lo, d_hi):
        near_start = d_lo <= d_hi
        u = np.empty_like(s)
        if near_start.any():
            u[near_start] = profile.u(from_start=d_lo[near_start])
        if (~near_start).any():
            u[~near_start] = profile.u(from_end=d_hi[~near_start])
        if np.any(u <= 0):
            raise NumericalFailure("interpolated u is not positive inside a branch")
        return 1.0 / np.sqrt(u)

    return quad_singular(g, 0.0, profile.length, tol, distances=True)


def period_two_branch(report: ClosureReport, tol: float = 1e-10) -> PeriodEstimate:
    """Period of a closed orbit as the sum of its two branch traversal times."""
    if not report.closed:
        raise NotClosed(f"orbit from A={report.amplitude!r} is {report.verdict} "
                        f"(defect {report.defect:.3g})")
    T = err = 0.0
    for br in report.branches:
        t, e = branch_time(br, tol / 2.0)
        T += t
        err += e
    return PeriodEstimate(T, err, "two-branch-quadrature")


def symmetric_from_report(report: ClosureReport, tol: float = 1e-10) -> PeriodEstimate:
    """The symmetric formula with phi taken from the branch leaving x = A."""
    first = report.branches[0] if report.branches else None
    if first is None or first.spec.direction != -1 or not first.span[0] < 0.0:
        raise NotClosed("symmetric formula needs a branch from A running through x = 0")
    A = report.amplitude

    def phi(y):
        return np.sqrt(np.maximum(first.u(from_start=y), 0.0))

    return period_symmetric(phi, A, tol, offset=True)
