"""Time-domain ground truth for the phase-plane results.

Direct integration of x' = v, v' = f(x, v) with detection of the turning
points v = 0.  Periods and return amplitudes measured here share no code
with the reduction except the Runge-Kutta stepper and the expression
evaluator.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from ._dopri import Dopri5, Step
from .errors import BlowUp, InsufficientEvents, NoPeriodicAttractor, StepUnderflow
from .system import OscillatorSystem

EVENT_TOL = 1e-12
STATE_GUARD = 1e6
T_MAX = 1e4
MAX_STEPS = 10**7


@dataclass(frozen=True)
class OrbitEvent:
    """A zero of v.  ``direction`` is the sign of v just after the crossing,
    so -1 marks a maximum of x and +1 a minimum."""

    t: float
    x: float
    direction: int


@dataclass(frozen=True, eq=False)
class OrbitTrace:
    """Samples (t, x, v) at the integrator's step endpoints, plus v = 0 events."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    events: tuple
    _steps: list = field(default_factory=list, repr=False)

    def state(self, t: float) -> tuple[float, float]:
        """(x, v) at time t from the dense output of the covering step."""
        starts = [s.t0 for s in self._steps]
        i = max(0, min(bisect.bisect_right(starts, t) - 1, len(self._steps) - 1))
        x, v = self._steps[i](t)
        return x, v

    def events_in(self, direction: int) -> list:
        return [e for e in self.events if e.direction == direction]


def _vector_field(sys: OscillatorSystem):
    f = sys.f

    def rhs(t, y):
        return [y[1], f(y[0], y[1])]

    return rhs


def _start_event(sys: OscillatorSystem, x0: float, v0: float) -> OrbitEvent | None:
    if v0 != 0.0:
        return None
    a = sys.f(x0, 0.0)
    if a == 0.0:
        return None
    return OrbitEvent(0.0, x0, 1 if a > 0.0 else -1)


def _run(sys: OscillatorSystem, x0: float, v0: float, t_end: float,
         tol: float, max_step: float) -> Iterator[tuple[Step, OrbitEvent | None]]:
    """Yield each accepted step with the v = 0 event inside it, if any."""
    solver = Dopri5(_vector_field(sys), 0.0, [x0, v0], t_end, rtol=tol, atol=tol,
                    max_step=max_step)
    while not solver.finished:
        step = solver.step()
        if solver.n_accepted > MAX_STEPS:
            raise StepUnderflow("step-count guard tripped")
        (xa, va), (xb, vb) = step.y0, step.y1
        if not (abs(xb) <= STATE_GUARD and abs(vb) <= STATE_GUARD):
            raise BlowUp(f"state left |x|, |v| <= {STATE_GUARD:g} at t={step.t1!r}")
        event = None
        if va != 0.0 and (vb == 0.0 or (va > 0.0) != (vb > 0.0)):
            te = step.t1 if vb == 0.0 else step.bisect(1, 0.0, EVENT_TOL)
            event = OrbitEvent(te, step.component(te, 0), -1 if va > 0.0 else 1)
        yield step, event


def simulate(sys: OscillatorSystem, x0: float, v0: float, t_end: float,
             tol: float = 1e-10, max_step: float = math.inf) -> OrbitTrace:
    """Integrate from (x0, v0) over [0, t_end].

    A start with v0 = 0 is itself recorded as the first event.
    """
    if not t_end > 0 or not tol > 0:
        raise ValueError("t_end and tol must be positive")
    ts, xs, vs, steps = [0.0], [float(x0)], [float(v0)], []
    start = _start_event(sys, x0, v0)
    events = [start] if start else []
    for step, event in _run(sys, float(x0), float(v0), t_end, tol, max_step):
        steps.append(step)
        ts.append(step.t1)
        xs.append(step.y1[0])
        vs.append(step.y1[1])
        if event is not None:
            events.append(event)
    return OrbitTrace(np.array(ts), np.array(xs), np.array(vs), tuple(events), steps)


def measure_period(trace: OrbitTrace) -> tuple[float, float]:
    """Time to the next event of the same direction as the starting one.

    Returns the period and x at that returning event.
    """
    if not trace.events or trace.events[0].t != trace.t[0]:
        raise InsufficientEvents("trace does not start at a turning point")
    first = trace.events[0]
    for e in trace.events[1:]:
        if e.direction == first.direction:
            return e.t - first.t, e.x
    raise InsufficientEvents("no returning turning point of the same direction")


def steady_amplitude(sys: OscillatorSystem, x0: float, tol: float = 1e-8,
                     integ_tol: float = 1e-11, t_max: float = T_MAX,
                     floor: float = 1e-6) -> tuple[float, float]:
    """Settle onto a periodic attractor from (x0, 0) by long-time integration.

    Turning points of the starting direction are compared period by period;
    once three consecutive changes are all <= tol the last amplitude and the
    last period are returned.

    Raises
    ------
    NoPeriodicAttractor
        The amplitude decays below ``max(floor, 100 * tol)``, no turning
        point occurs, or t_max passes without convergence.
    """
    floor = max(floor, 100.0 * tol)
    start = _start_event(sys, float(x0), 0.0)
    if start is None:
        raise NoPeriodicAttractor(f"(x, v) = ({x0!r}, 0) is an equilibrium")
    last = start
    quiet = 0
    for _, event in _run(sys, float(x0), 0.0, t_max, integ_tol, math.inf):
        if event is None or event.direction != start.direction:
            continue
        if abs(event.x) < floor:
            raise NoPeriodicAttractor(f"amplitude decayed below {floor:g} by t={event.t:.6g}")
        quiet = quiet + 1 if abs(event.x - last.x) <= tol else 0
        period = event.t - last.t
        last = event
        if quiet >= 3:
            return abs(event.x), period
    raise NoPeriodicAttractor(f"amplitude did not settle to {tol:g} by t={t_max:g}")


def el_residual(sys: OscillatorSystem, x: float, v: float) -> float:
    """d/dt(df/dv) + df/dx along a trajectory, expanded with x'' = f."""
    r = sys.full(x, v)
    return r.d_xv * v + r.d_vv * r.value + r.d_x


def el_series(sys: OscillatorSystem, trace: OrbitTrace) -> np.ndarray:
    """The residual at every sample of a trace."""
    return np.array([el_residual(sys, x, v) for x, v in zip(trace.x, trace.v)])
