"""Phase-plane reduction of x'' = f(x, x') to x' = phi(x).

A half-orbit between two turning points (x' = 0) is described by the
energy-like variable u(x) = phi(x)^2, which satisfies

    du/dx = 2 f(x, sigma * sqrt(u)),    u(x0) = 0,

on a branch travelling in direction ``d`` with velocity sign ``sigma``.
The equation for phi itself has infinite slope at phi = 0; in u it is
finite, but f(x, sigma*sqrt(u)) still carries a u^(1/2) dependence when f
depends on v.  Close to each turning point the branch is therefore traced
through the inverse relation dx/dv = v / f(x, v), which is regular there,
and u is interpolated in the square-root distance to the turning point.

A closed orbit is a pair of branches (lower, then upper) whose second
turning point returns to the starting amplitude; the gap is the closure
defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._dopri import Dopri5
from .errors import (BlowUp, ConservativeFamily, DomainError, NoOscillation,
                     NonReturningBranch, NoSignChange, NumericalFailure, RootFindError,
                     StepUnderflow)
from .system import OscillatorSystem

TURN_TOL = 1e-12
MAX_STEPS = 10**6
U_GUARD = 1e12
ARC_NODES = 24
DEFAULT_CLOSURE_TOL = 1e-7


@dataclass(frozen=True)
class BranchSpec:
    """A half-orbit leaving the turning point ``start``.

    ``direction`` is +1 for motion towards larger x, ``velocity_sign`` the
    sign of x' on the branch (phi = velocity_sign * sqrt(u)).
    """

    start: float
    direction: int
    velocity_sign: int

    def __post_init__(self):
        if self.direction not in (1, -1) or self.velocity_sign not in (1, -1):
            raise ValueError("direction and velocity_sign must be +1 or -1")


def seed_coefficients(sys: OscillatorSystem, spec: BranchSpec) -> tuple[float, float]:
    """Leading coefficients of u(s) = a*s + b*s^(3/2) + O(s^2) at a turning point.

    ``s = d*(x - x0)`` is the distance travelled from the turning point.
    Substituting the series into du/ds = 2 d f(x0 + d s, sigma sqrt(u)) and
    matching powers of sqrt(s) gives a = 2 d f(x0, 0) and
    b = (4/3) d sigma f_v(x0, 0) sqrt(a).

    Raises
    ------
    NoOscillation
        If a <= 0: the orbit cannot leave x0 in direction d.
    """
    d, sigma = spec.direction, spec.velocity_sign
    r = sys.full(spec.start, 0.0)
    a = 2.0 * d * r.value
    if not a > 0.0:
        raise NoOscillation(
            f"f({spec.start!r}, 0) = {r.value!r}: no departure in direction {d:+d}")
    b = (4.0 / 3.0) * d * sigma * r.d_v * math.sqrt(a)
    return a, b


# Piecewise cubic Hermite interpolation =======================================

def _hermite_q(w, w0, w1, u0, u1, g0, g1, seed):
    """Interpolate u = w^2 q(w) near a turning point, w = sqrt(distance).

    q is smooth (q = a + b w + ...), so a cubic in q keeps u and du/ds
    accurate without dividing the derivative error by w.  ``g`` is du/ds
    at the nodes; returns (u, du/ds).
    """
    a, b = seed
    with np.errstate(divide="ignore", invalid="ignore"):
        q0 = np.where(w0 > 0, u0 / (w0 * w0), a)
        q1 = np.where(w1 > 0, u1 / (w1 * w1), a)
        # du/ds = q + w q'/2
        p0 = np.where(w0 > 0, 2.0 * (g0 - q0) / w0, b)
        p1 = np.where(w1 > 0, 2.0 * (g1 - q1) / w1, b)
    q, dq = _hermite(w, w0, w1, q0, q1, p0, p1)
    return w * w * q, q + 0.5 * w * dq


def _hermite(z, z0, z1, y0, y1, m0, m1):
    h = z1 - z0
    t = (z - z0) / h
    t2 = t * t
    t3 = t2 * t
    val = ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * m0
           + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * m1)
    der = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * m0
           + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * h * m1) / h
    return val, der


@dataclass(frozen=True, eq=False)
class BranchProfile:
    """Sampled branch u(x) = phi(x)^2 with a C1 piecewise-cubic interpolant.

    Nodes are stored along the direction of travel as distances from the
    start turning point (``dist_start``) and, once the branch has turned,
    from the end turning point (``dist_end``).  Intervals inside the
    departure arc (index < ``head``) and the arrival arc (index >= ``tail``)
    interpolate q = u / distance as a cubic in sqrt(distance); the rest are
    cubic in x.
    """

    spec: BranchSpec
    x_nodes: np.ndarray
    dist_start: np.ndarray
    dist_end: Optional[np.ndarray]
    u_values: np.ndarray
    slopes: np.ndarray  # du/dx at the nodes
    end_turning_point: Optional[float]
    tol: float
    head: int
    tail: int
    sys: OscillatorSystem
    seed_start: tuple[float, float]
    seed_end: Optional[tuple[float, float]]

    @property
    def start(self) -> float:
        return self.spec.start

    @property
    def grid(self) -> np.ndarray:
        return self.x_nodes

    @property
    def length(self) -> float:
        return float(self.dist_start[-1])

    @property
    def span(self) -> tuple[float, float]:
        g = self.grid
        return (float(min(g[0], g[-1])), float(max(g[0], g[-1])))

    def evaluate(self, x=None, *, from_start=None, from_end=None):
        """Interpolated (u, du/dx).

        The position is x, or a distance from the start or the end turning
        point; distances keep full relative precision close to a turning
        point, where x itself would round.
        """
        d = self.spec.direction
        s_nodes = self.dist_start
        L = s_nodes[-1]
        if from_end is not None:
            de = np.asarray(from_end, dtype=float)
            s = L - de
            xq = self.end_turning_point - d * de if self.end_turning_point is not None else None
        elif from_start is not None:
            s = np.asarray(from_start, dtype=float)
            de = L - s
            xq = self.spec.start + d * s
        else:
            xq = np.asarray(x, dtype=float)
            s = d * (xq - self.spec.start)
            de = L - s
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        de = np.atleast_1d(de)
        xq = np.atleast_1d(xq) if xq is not None else self.spec.start + d * s
        i = np.clip(np.searchsorted(s_nodes, s, side="right") - 1, 0, len(s_nodes) - 2)
        if from_end is not None and self.dist_end is not None:
            # locate by distance from the end where that is the precise coordinate
            j = np.clip(np.searchsorted(-self.dist_end, -de, side="right") - 1,
                        0, len(s_nodes) - 2)
            i = np.where(j >= self.tail, j, i)
        u0, u1 = self.u_values[i], self.u_values[i + 1]
        g0, g1 = d * self.slopes[i], d * self.slopes[i + 1]  # du/ds
        u = np.empty_like(s)
        du_ds = np.empty_like(s)

        m = (i >= self.head) & (i < self.tail)
        if m.any():
            # in x itself: node spacings rebuilt from distances would round
            k = i[m]
            xn = self.x_nodes
            val, der = _hermite(xq[m], xn[k], xn[k + 1], u0[m], u1[m],
                                self.slopes[k], self.slopes[k + 1])
            u[m], du_ds[m] = val, d * der

        m = i < self.head
        if m.any():
            k = i[m]
            u[m], du_ds[m] = _hermite_q(np.sqrt(np.maximum(s[m], 0.0)), np.sqrt(s_nodes[k]),
                                        np.sqrt(s_nodes[k + 1]), u0[m], u1[m], g0[m], g1[m],
                                        self.seed_start)

        m = i >= self.tail
        if m.any():
            k = i[m]
            e_nodes = self.dist_end
            val, der = _hermite_q(np.sqrt(np.maximum(de[m], 0.0)), np.sqrt(e_nodes[k]),
                                  np.sqrt(e_nodes[k + 1]), u0[m], u1[m], -g0[m], -g1[m],
                                  self.seed_end)
            u[m], du_ds[m] = val, -der

        du_dx = d * du_ds
        if scalar:
            return float(u[0]), float(du_dx[0])
        return u, du_dx

    def u(self, x=None, **kw):
        return self.evaluate(x, **kw)[0]

    def phi(self, x=None, **kw):
        """Signed velocity on the branch, sigma * sqrt(u)."""
        u = self.u(x, **kw)
        return self.spec.velocity_sign * np.sqrt(np.maximum(u, 0.0))

    def _midpoints(self):
        s = self.dist_start
        return 0.5 * (s[:-1] + s[1:])

    def midpoint_residuals(self) -> np.ndarray:
        """|du/dx - 2 f(x, sigma sqrt(u))| at the midpoint of every interval."""
        s_mid = self._midpoints()
        x_mid = self.spec.start + self.spec.direction * s_mid
        u, du = self.evaluate(from_start=s_mid)
        sigma = self.spec.velocity_sign
        f = self.sys.f
        rhs = np.array([2.0 * f(xm, sigma * math.sqrt(max(um, 0.0)))
                        for xm, um in zip(x_mid, u)])
        return np.abs(du - rhs)

    def residual_bound(self) -> np.ndarray:
        u = self.u(from_start=self._midpoints())
        return 10.0 * self.tol * np.maximum(1.0, np.abs(u))


# Branch integration ===========================================================

def _arc(sys: OscillatorSystem, x_turn: float, d: int, v_edge: float,
         tol: float) -> tuple[list, list]:
    """Distances s(v) from a turning point, for v from 0 to ``v_edge``.

    Along the arc x = x_turn + d*s and ds/dv = d*v / f(x, v), which is
    regular at v = 0.  The distance is integrated with a relative
    tolerance so that it stays accurate however close to the turning
    point.  Returns nodes (s, v) uniform in v.
    """
    f = sys.f

    def rhs(v, y):
        fx = f(x_turn + d * y[0], v)
        if fx == 0.0:
            raise StepUnderflow(f"acceleration vanishes at x={x_turn + d * y[0]!r}, v={v!r}")
        return [d * v / fx]

    vs = [v_edge * k / ARC_NODES for k in range(ARC_NODES + 1)]
    ss = [0.0]
    y = [0.0]
    # every node is a step endpoint: dense output is not accurate enough here
    for v_from, v_to in zip(vs, vs[1:]):
        solver = Dopri5(rhs, v_from, y, v_to, rtol=tol, atol=1e-300,
                        first_step=abs(v_to - v_from))
        while not solver.finished:
            solver.step()
            if solver.n_accepted > MAX_STEPS:
                raise StepUnderflow("step-count guard tripped in turning-point arc")
        y = solver.y
        ss.append(y[0])
    if any(q <= p for p, q in zip(ss, ss[1:])):
        raise StepUnderflow(f"turning-point arc at x={x_turn!r} is not monotone")
    return ss, vs


def integrate_branch(sys: OscillatorSystem, spec: BranchSpec, tol: float = 1e-10,
                     x_stop: float | None = None, scale: float | None = None) -> BranchProfile:
    """Integrate one branch from its turning point.

    The branch ends where u returns to zero (its end turning point), at
    ``x_stop``, or with an error when a guard trips.  ``scale`` is the
    amplitude used for the departure length and the |x| guard; it defaults
    to |start|.

    Raises
    ------
    NoOscillation
        The branch cannot depart from ``spec.start``.
    NonReturningBranch
        The |x| guard tripped before u returned to zero.
    BlowUp, StepUnderflow
        u overflowed its guard, or the stepper stalled near a non-simple zero.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    x0, d, sigma = float(spec.start), spec.direction, spec.velocity_sign
    seed_start = seed_coefficients(sys, spec)
    amp = abs(x0) if scale is None else abs(scale)
    h0 = min(1e-3, 1e-2 * amp) if amp > 0 else 1e-3
    u_switch = seed_start[0] * h0
    x_guard = 1e3 * max(1.0, amp)
    f = sys.f

    def slope(x, u):
        return 2.0 * f(x, sigma * math.sqrt(u if u > 0.0 else 0.0))

    def arc_ok(x, v, departing):
        # x(v) is only a usable parametrisation while f keeps its turning-point sign
        f_turn = f(x, 0.0)
        if departing != (d * f_turn > 0.0):
            return False
        fv = f(x, v)
        return fv * f_turn > 0.0 and abs(fv) >= 0.5 * abs(f_turn)

    try:
        # departure arc, shortened until f stays one-signed along it
        for _ in range(40):
            ss, vs = _arc(sys, x0, d, sigma * math.sqrt(u_switch), tol)
            if all(abs(f(x0 + d * sk, vk)) >= 0.5 * abs(f(x0, 0.0))
                   and f(x0 + d * sk, vk) * d > 0.0 for sk, vk in zip(ss, vs)):
                break
            u_switch *= 0.25
        else:
            raise StepUnderflow(f"no regular departure arc at x={x0!r}")
        if x_stop is not None and d * (x_stop - x0) <= ss[-1]:
            raise ValueError("x_stop lies inside the departure arc")
        xs = [x0 + d * s for s in ss]
        us = [v * v for v in vs]
        head = len(xs) - 1

        # bulk, in x
        bound = x_stop if x_stop is not None else d * x_guard
        solver = Dopri5(lambda x, y: [slope(x, y[0])], xs[-1], [us[-1]], bound,
                        rtol=tol, atol=tol)
        crossing = None
        while not solver.finished:
            step = solver.step()
            if solver.n_accepted > MAX_STEPS:
                raise StepUnderflow("step-count guard tripped")
            u_old, u_new = step.y0[0], step.y1[0]
            if abs(u_new) > U_GUARD:
                raise BlowUp(f"|u| exceeded {U_GUARD:g} at x={step.t1!r}")
            if crossing is None and u_new > u_switch and _dips_below(step, u_switch):
                # the step jumped over a turning point; take it again in halves
                solver.retry(step, 0.5 * abs(step.h))
                continue
            while crossing is None and u_new <= u_switch < u_old:
                x_c = step.bisect(0, u_switch, TURN_TOL)
                u_c = step.component(x_c, 0)
                if arc_ok(x_c, sigma * math.sqrt(max(u_c, 0.0)), departing=False):
                    crossing = x_c
                elif u_switch < 1e-40:
                    if d * f(x_c, 0.0) >= 0.0:
                        raise NonReturningBranch(
                            f"branch from x={x0!r} creeps into an equilibrium near x={x_c!r}")
                    raise StepUnderflow(f"non-simple turning point near x={x_c!r}")
                else:
                    u_switch *= 0.25
            if crossing is not None and abs(crossing - step.t0) <= 1e-9 * max(1.0, abs(step.t0)):
                # the previous node already sits on the crossing
                crossing = step.t0
                break
            if crossing is not None and solver.t_bound != crossing:
                # integrate afresh up to the crossing so its node is a step endpoint
                solver = Dopri5(solver.fun, step.t0, step.y0, crossing, rtol=tol, atol=tol,
                                first_step=abs(crossing - step.t0))
                continue
            if abs(step.h) > 1e-9 * max(1.0, abs(step.t0)) and not _interpolates(step, slope, tol):
                solver.retry(step, 0.5 * abs(step.h))
                continue
            xs.append(step.t1)
            us.append(u_new)
        if crossing is None and x_stop is None:
            raise NonReturningBranch(
                f"branch from x={x0!r} reached |x| guard {x_guard:g} without turning")

        dist_start = [d * (x - x0) for x in xs]
        dist_start[:head + 1] = ss
        end = None
        seed_end = None
        dist_end = None
        tail = len(xs) - 1
        if crossing is not None:
            # arrival arc: trace it forward once to find the turning point, then
            # back from there so distances to it keep relative precision
            u_c = us[-1]
            v_c = sigma * math.sqrt(u_c)
            fwd, _ = _arc_forward(sys, crossing, d, v_c, tol)
            end = crossing + d * fwd
            if not d * f(end, 0.0) < 0.0:
                raise StepUnderflow(f"non-simple turning point near x={end!r}")
            es, evs = _arc(sys, end, -d, v_c, tol)
            end = crossing + d * es[-1]
            length = dist_start[-1] + es[-1]
            tail = len(xs) - 1
            for e, v in zip(reversed(es[:-1]), reversed(evs[:-1])):
                xs.append(end - d * e)
                us.append(v * v)
                dist_start.append(length - e)
            dist_end = [length - s for s in dist_start]
            dist_end[tail:] = list(reversed(es))
            seed_end = seed_coefficients(sys, BranchSpec(end, -d, sigma))
    except ZeroDivisionError as exc:
        raise DomainError(str(exc)) from exc

    dist_start = np.array(dist_start)
    if np.any(np.diff(dist_start) <= 0):
        raise NumericalFailure("branch grid is not monotone in x")
    slopes = np.array([slope(x, u) for x, u in zip(xs, us)])
    return BranchProfile(spec, np.array(xs), dist_start, None if dist_end is None else np.array(dist_end),
                         np.array(us), slopes, end, tol, head, tail, sys, seed_start, seed_end)


def _arc_forward(sys, x_from, d, v_from, tol):
    """Distance travelled from x_from while v runs from ``v_from`` to 0."""
    f = sys.f

    def rhs(v, y):
        fx = f(x_from + d * y[0], v)
        if fx == 0.0:
            raise StepUnderflow(f"acceleration vanishes at x={x_from + d * y[0]!r}")
        return [d * v / fx]

    solver = Dopri5(rhs, v_from, [0.0], 0.0, rtol=tol, atol=tol * 1e-3,
                    first_step=abs(v_from) / 8)
    while not solver.finished:
        solver.step()
        if solver.n_accepted > MAX_STEPS:
            raise StepUnderflow("step-count guard tripped in turning-point arc")
    return solver.y[0], solver.n_accepted


def _dips_below(step, level, samples=16) -> bool:
    """Whether the dense output of ``step`` drops below ``level`` inside the step."""
    h = step.t1 - step.t0
    return any(step.component(step.t0 + h * k / samples, 0) <= level
               for k in range(1, samples))


def _interpolates(step, slope, tol) -> bool:
    """Whether the cubic Hermite interpolant across ``step`` is good enough.

    At the midpoint it must agree with the stepper's dense output to tol and
    satisfy the branch ODE to 5*tol (relative to max(1, |u|)).
    """
    x_l, x_r = step.t0, step.t1
    u_l, u_r = step.y0[0], step.y1[0]
    m_l, m_r = slope(x_l, u_l), slope(x_r, u_r)
    h = x_r - x_l
    x_m = 0.5 * (x_l + x_r)
    u_herm = 0.5 * (u_l + u_r) + 0.125 * h * (m_l - m_r)
    du_herm = 1.5 * (u_r - u_l) / h - 0.25 * (m_l + m_r)
    scale = tol * max(1.0, abs(u_herm))
    if abs(u_herm - step.component(x_m, 0)) > scale:
        return False
    return abs(du_herm - slope(x_m, u_herm)) <= 5.0 * scale


# Closure ======================================================================

@dataclass(frozen=True, eq=False)
class ClosureReport:
    """Outcome of tracing the branch pair from (A, 0).

    ``lower_turning`` is the intermediate turning point, ``return_point``
    the turning point where the second branch ends; defect = return - A.
    """

    amplitude: float
    lower_turning: float
    return_point: float
    defect: float
    branches: tuple
    verdict: str  # "closed" | "not-closed" | "no-oscillation"
    closure_tol: float

    @property
    def closed(self) -> bool:
        return self.verdict == "closed"


def first_departure(sys: OscillatorSystem, A: float) -> int:
    """Sign of the initial acceleration, which fixes the order of the branches."""
    f0 = sys.f(A, 0.0)
    if f0 == 0.0:
        raise NoOscillation(f"(x, v) = ({A!r}, 0) is an equilibrium")
    return 1 if f0 > 0 else -1


def closure_defect(sys: OscillatorSystem, A: float, tol: float = 1e-10,
                   closure_tol: float = DEFAULT_CLOSURE_TOL,
                   strict: bool = True) -> ClosureReport:
    """Integrate the branch pair from (A, 0) and measure its closure defect.

    With ``strict=False`` a failure to oscillate is reported through the
    verdict "no-oscillation" instead of raising.
    """
    if not A > 0:
        raise ValueError("amplitude must be positive")
    try:
        d = first_departure(sys, A)
        first = integrate_branch(sys, BranchSpec(A, d, d), tol, scale=A)
        x_mid = first.end_turning_point
        second = integrate_branch(sys, BranchSpec(x_mid, -d, -d), tol, scale=A)
    except NoOscillation:
        if strict:
            raise
        nan = math.nan
        return ClosureReport(A, nan, nan, nan, (), "no-oscillation", closure_tol)
    x_ret = second.end_turning_point
    delta = x_ret - A
    verdict = "closed" if abs(delta) <= closure_tol else "not-closed"
    return ClosureReport(A, x_mid, x_ret, delta, (first, second), verdict, closure_tol)


def find_limit_cycle_amplitude(sys: OscillatorSystem, A_lo: float, A_hi: float,
                               tol: float = 1e-9, integ_tol: float = 1e-10,
                               closure_tol: float = DEFAULT_CLOSURE_TOL,
                               max_iter: int = 200) -> float:
    """Amplitude in [A_lo, A_hi] at which the closure defect vanishes.

    Regula falsi with the Illinois modification, falling back to bisection
    whenever the bracket fails to halve.  Stops once |defect| <= tol.
    """

    def defect(A):
        return closure_defect(sys, A, integ_tol, closure_tol).defect

    lo, hi = float(A_lo), float(A_hi)
    d_lo, d_hi = defect(lo), defect(hi)
    if abs(d_lo) <= closure_tol and abs(d_hi) <= closure_tol:
        mid = 0.5 * (lo + hi)
        if abs(defect(mid)) <= closure_tol:
            raise ConservativeFamily(
                f"closure defect vanishes across [{lo}, {hi}]: every amplitude is periodic")
    if abs(d_lo) <= tol:
        return lo
    if abs(d_hi) <= tol:
        return hi
    if (d_lo > 0) == (d_hi > 0):
        raise NoSignChange(f"defect has the same sign at {lo} ({d_lo:g}) and {hi} ({d_hi:g})")

    side = 0
    for _ in range(max_iter):
        width = hi - lo
        A = (lo * d_hi - hi * d_lo) / (d_hi - d_lo)
        if not lo < A < hi:
            A = 0.5 * (lo + hi)
        d_A = defect(A)
        if abs(d_A) <= tol or width <= 4e-16 * max(abs(lo), abs(hi)):
            return A
        if (d_A > 0) == (d_lo > 0):
            lo, d_lo = A, d_A
            if side == -1:
                d_hi *= 0.5
            side = -1
        else:
            hi, d_hi = A, d_A
            if side == 1:
                d_lo *= 0.5
            side = 1
        if hi - lo > 0.5 * width:
            mid = 0.5 * (lo + hi)
            d_mid = defect(mid)
            if abs(d_mid) <= tol:
                return mid
            if (d_mid > 0) == (d_lo > 0):
                lo, d_lo = mid, d_mid
            else:
                hi, d_hi = mid, d_mid
            side = 0
    raise RootFindError(f"no convergence after {max_iter} iterations")
