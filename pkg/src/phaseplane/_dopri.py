"""Dormand-Prince 5(4) stepper with dense output, on plain float lists.

State vectors are short (one or two components), so lists beat numpy here.
Step control: safety 0.9, growth at most 5x, shrink at least 0.1x.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import StepUnderflow

C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (-71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200,
                          -22 / 525, 1 / 40)

# continuous extension, rows = stages 1..7, columns = theta^1..theta^4
P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)

SAFETY, MAX_GROWTH, MIN_SHRINK = 0.9, 5.0, 0.1

Fun = Callable[[float, list], list]


class Step:
    """One accepted step from ``t0`` to ``t1`` with its dense interpolant."""

    __slots__ = ("t0", "t1", "y0", "y1", "f0", "h", "q")

    def __init__(self, t0, t1, y0, y1, stages):
        self.t0, self.t1, self.y0, self.y1 = t0, t1, y0, y1
        self.f0 = stages[0]
        self.h = t1 - t0
        n = len(y0)
        self.q = [[sum(stages[s][i] * P[s][j] for s in range(7)) for j in range(4)]
                  for i in range(n)]

    def theta(self, t: float) -> float:
        return (t - self.t0) / self.h

    def __call__(self, t: float) -> list:
        th = (t - self.t0) / self.h
        h = self.h
        return [y + h * th * (q[0] + th * (q[1] + th * (q[2] + th * q[3])))
                for y, q in zip(self.y0, self.q)]

    def component(self, t: float, i: int) -> float:
        th = (t - self.t0) / self.h
        q = self.q[i]
        return self.y0[i] + self.h * th * (q[0] + th * (q[1] + th * (q[2] + th * q[3])))

    def derivative(self, t: float) -> list:
        th = (t - self.t0) / self.h
        return [q[0] + th * (2 * q[1] + th * (3 * q[2] + th * 4 * q[3])) for q in self.q]

    def bisect(self, i: int, level: float, tol: float) -> float:
        """Locate t in [t0, t1] where component ``i`` crosses ``level``."""
        lo, hi = self.t0, self.t1
        g_lo = self.component(lo, i) - level
        if g_lo == 0.0:
            return lo
        while abs(hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            g_mid = self.component(mid, i) - level
            if g_mid == 0.0:
                return mid
            if (g_mid > 0.0) == (g_lo > 0.0):
                lo, g_lo = mid, g_mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def _norm(err: Sequence[float], y0: Sequence[float], y1: Sequence[float],
          rtol: float, atol: float) -> float:
    s = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        s += (e / sc) ** 2
    return math.sqrt(s / len(err))


class Dopri5:
    """Adaptive integrator advancing ``y' = fun(t, y)`` towards ``t_bound``.

    Call :meth:`step` repeatedly; each call returns the accepted
    :class:`Step` (or ``None`` once ``t_bound`` is reached).
    """

    def __init__(self, fun: Fun, t0: float, y0: Sequence[float], t_bound: float,
                 rtol: float, atol: float, max_step: float = math.inf,
                 first_step: float | None = None):
        self.fun = fun
        self.t = float(t0)
        self.y = [float(c) for c in y0]
        self.t_bound = float(t_bound)
        self.direction = 1.0 if t_bound >= t0 else -1.0
        self.rtol, self.atol = rtol, atol
        self.max_step = max_step
        self.f = fun(self.t, self.y)
        self.nfev = 1
        self.n_accepted = 0
        self.h_abs = first_step if first_step else self._initial_step()
        self.h_abs = min(self.h_abs, max_step, abs(self.t_bound - self.t))

    def _initial_step(self) -> float:
        # Hairer-Norsett-Wanner starting step heuristic
        sc = [self.atol + self.rtol * abs(c) for c in self.y]
        d0 = math.sqrt(sum((c / s) ** 2 for c, s in zip(self.y, sc)) / len(sc))
        d1 = math.sqrt(sum((c / s) ** 2 for c, s in zip(self.f, sc)) / len(sc))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, abs(self.t_bound - self.t))
        y1 = [c + self.direction * h0 * fc for c, fc in zip(self.y, self.f)]
        f1 = self.fun(self.t + self.direction * h0, y1)
        self.nfev += 1
        d2 = math.sqrt(sum(((a - b) / s) ** 2 for a, b, s in zip(f1, self.f, sc)) / len(sc)) / h0
        if d1 <= 1e-15 and d2 <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1)

    def retry(self, step: Step, h_abs: float) -> None:
        """Undo ``step`` and retake it with step size ``h_abs``."""
        self.t, self.y, self.f = step.t0, step.y0, step.f0
        self.h_abs = h_abs
        self.n_accepted -= 1

    @property
    def finished(self) -> bool:
        return self.direction * (self.t_bound - self.t) <= 0.0

    def step(self) -> Step | None:
        if self.finished:
            return None
        fun, t, y, f0 = self.fun, self.t, self.y, self.f
        n = len(y)
        min_step = 10.0 * abs(math.nextafter(t, self.direction * math.inf) - t)
        h_abs = self.h_abs
        rejected = False
        while True:
            if h_abs < min_step and abs(self.t_bound - t) > min_step:
                raise StepUnderflow(f"step size underflow at t={t!r}")
            h = h_abs * self.direction
            t_new = t + h
            if self.direction * (t_new - self.t_bound) > 0:
                t_new = self.t_bound
            h = t_new - t
            h_abs = abs(h)
            k1 = f0
            k2 = fun(t + C2 * h, [y[i] + h * A21 * k1[i] for i in range(n)])
            k3 = fun(t + C3 * h, [y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in range(n)])
            k4 = fun(t + C4 * h, [y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                                  for i in range(n)])
            k5 = fun(t + C5 * h, [y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i]
                                              + A54 * k4[i]) for i in range(n)])
            k6 = fun(t_new, [y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                         + A64 * k4[i] + A65 * k5[i]) for i in range(n)])
            y_new = [y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i]
                                 + B6 * k6[i]) for i in range(n)]
            k7 = fun(t_new, y_new)
            self.nfev += 6
            err = [h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]) for i in range(n)]
            en = _norm(err, y, y_new, self.rtol, self.atol)
            if not math.isfinite(en):
                h_abs *= MIN_SHRINK
                rejected = True
                continue
            if en <= 1.0:
                factor = MAX_GROWTH if en == 0.0 else min(MAX_GROWTH, SAFETY * en ** -0.2)
                if rejected:
                    factor = min(1.0, factor)
                self.h_abs = min(h_abs * factor, self.max_step)
                break
            h_abs *= max(MIN_SHRINK, SAFETY * en ** -0.2)
            rejected = True
        step = Step(t, t_new, y, y_new, (k1, k2, k3, k4, k5, k6, k7))
        self.t, self.y, self.f = t_new, y_new, k7
        self.n_accepted += 1
        return step
