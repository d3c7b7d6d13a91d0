"""Amplitude relation for separable oscillators x'' = f1(x) * f2(x').

Dividing by f2 and integrating along the orbit from the turning point
(A, 0) gives the implicit first integral

    G(phi) = integral_0^phi s / f2(s) ds  =  F(x) = integral_A^x f1(s) ds,

so phi(x) = G^{-1}(F(x)).  G is strictly monotone while f2 keeps one sign,
which makes the inversion a one-dimensional bracketed root-find.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import FactorVanishes, OutsideRange
from .expr import Expr, compile_expr, parse, to_text, variables
from .system import OscillatorSystem

QUAD_ABS_TOL = 1e-12
ROOT_REL_TOL = 1e-12
SIGN_SAMPLES = 64
PHI_CEILING = 1e150


@dataclass(frozen=True)
class SeparableSystem:
    """The factor pair (f1(x), f2(v)) with f = f1 * f2."""

    f1: Expr
    f2: Expr
    _f1: Callable = field(init=False, repr=False, compare=False)
    _f2: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not variables(self.f1) <= {"x"}:
            raise ValueError(f"f1 may depend on x only: {to_text(self.f1)}")
        if not variables(self.f2) <= {"v"}:
            raise ValueError(f"f2 may depend on v only: {to_text(self.f2)}")
        g1, g2 = compile_expr(self.f1), compile_expr(self.f2)
        object.__setattr__(self, "_f1", lambda x: g1(x, 0.0))
        object.__setattr__(self, "_f2", lambda v: g2(0.0, v))

    @classmethod
    def from_text(cls, f1: str, f2: str) -> "SeparableSystem":
        return cls(parse(f1, ("x",)), parse(f2, ("v",)))

    @classmethod
    def from_system(cls, sys: OscillatorSystem) -> "SeparableSystem":
        if sys.separable is None:
            raise ValueError("system was not given as a separable pair")
        return cls(*sys.separable)

    def to_system(self, **kw) -> OscillatorSystem:
        return OscillatorSystem.from_factors(self.f1, self.f2, **kw)


def _check_f2(sys: SeparableSystem, phi: float) -> float:
    """Sample f2 on [0, phi]; return its sign there or raise if it vanishes."""
    f2 = sys._f2
    ref = f2(0.0)
    for s in np.linspace(0.0, phi, SIGN_SAMPLES + 1):
        val = f2(float(s))
        if val == 0.0 or (val > 0.0) != (ref > 0.0) or not math.isfinite(val):
            raise FactorVanishes(f"f2 vanishes or changes sign on [0, {phi:g}] near v={s:g}",
                                 sys.f2)
    return 1.0 if ref > 0.0 else -1.0


def G(sys: SeparableSystem, phi: float, *, check: bool = True) -> float:
    """Integral of s / f2(s) over [0, phi]."""
    if phi == 0.0:
        return 0.0
    if check:
        _check_f2(sys, phi)
    f2 = sys._f2
    val, _ = integrate.quad(lambda s: s / f2(s), 0.0, phi, epsabs=QUAD_ABS_TOL,
                            epsrel=1e-13, limit=200)
    return val


def F(sys: SeparableSystem, A: float, x: float | None = None, *,
      offset: float | None = None) -> float:
    """Integral of f1 from A to x.

    Pass ``offset = A - x`` instead of x to keep relative precision when x
    is very close to A.
    """
    f1 = sys._f1
    if offset is None:
        if x is None:
            raise TypeError("give x or offset")
        if x == A:
            return 0.0
        val, _ = integrate.quad(f1, A, x, epsabs=QUAD_ABS_TOL, epsrel=1e-13, limit=200)
        return val
    if offset == 0.0:
        return 0.0
    val, _ = integrate.quad(lambda t: f1(A - t), 0.0, offset, epsabs=QUAD_ABS_TOL,
                            epsrel=1e-13, limit=200)
    return -val


def phi_separable(sys: SeparableSystem, A: float, x: float | None = None, *,
                  offset: float | None = None) -> float:
    """Non-negative phi solving G(phi) = F(A, x).

    Raises
    ------
    OutsideRange
        F(A, x) is not attained by G on [0, inf): x lies beyond a turning point.
    FactorVanishes
        f2 has a zero before the required phi is reached.
    """
    target = F(sys, A, x, offset=offset)
    if target == 0.0:
        return 0.0
    f2 = sys._f2
    sign = 1.0 if f2(0.0) > 0.0 else -1.0
    if f2(0.0) == 0.0:
        raise FactorVanishes("f2(0) = 0", sys.f2)
    if target * sign < 0.0:
        raise OutsideRange(f"F = {target:g} has the wrong sign for G: no real phi")

    # G(phi) ~ phi^2 / (2 f2(0)) for small phi
    hi = math.sqrt(2.0 * abs(f2(0.0)) * abs(target))
    lo, g_lo = 0.0, 0.0
    while True:
        _check_f2(sys, hi)
        g_hi = abs(G(sys, hi, check=False))
        if g_hi >= abs(target):
            break
        if g_hi - g_lo <= 1e-14 * g_hi or hi > PHI_CEILING:
            raise OutsideRange(f"G saturates near {g_hi:.15g} below F = {abs(target):g}: "
                               "no real phi")
        lo, g_lo = hi, g_hi
        hi *= 2.0

    def resid(p):
        return G(sys, p, check=False) - target

    return optimize.brentq(resid, lo, hi, xtol=1e-300, rtol=ROOT_REL_TOL)


def phi_function(sys: SeparableSystem, A: float) -> Callable:
    """Vectorised phi as a function of the offset A - x (for period_symmetric)."""

    def phi(offset):
        return np.array([phi_separable(sys, A, offset=float(y))
                         for y in np.atleast_1d(offset)])

    return phi
