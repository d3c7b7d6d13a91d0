import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseplane import catalog
from phaseplane.errors import BlowUp, InsufficientEvents, NoPeriodicAttractor
from phaseplane.oracle import (el_residual, el_series, measure_period, simulate,
                               steady_amplitude)
from phaseplane.reduction import closure_defect
from phaseplane.system import OscillatorSystem

HARMONIC = catalog.get("harmonic")
MICKENS = catalog.get("mickens")
DUFFING = catalog.get("duffing")
VDP = catalog.get("vanderpol")
DAMPED = catalog.get("damped-linear")


# simulate --------------------------------------------------------------------------

def test_harmonic_returns_after_two_pi():
    tr = simulate(HARMONIC, 1.0, 0.0, 10.0, 1e-10)
    x, v = tr.state(2 * math.pi)
    assert x == pytest.approx(1.0, abs=1e-8)
    assert v == pytest.approx(0.0, abs=1e-8)


def test_damped_return_is_lower():
    _, x_back = measure_period(simulate(DAMPED, 1.0, 0.0, 10.0, 1e-10))
    assert x_back < 1.0


def test_mickens_second_same_direction_event_closes():
    tr = simulate(MICKENS, 1.0, 0.0, 15.0, 1e-10)
    same = tr.events_in(tr.events[0].direction)
    assert len(same) >= 2
    assert same[1].x == pytest.approx(1.0, abs=1e-7)
    assert closure_defect(MICKENS, 1.0).return_point == pytest.approx(same[1].x, abs=1e-7)


def test_trace_invariants():
    tr = simulate(VDP, 0.5, 0.0, 30.0, 1e-10)
    assert np.all(np.diff(tr.t) > 0)
    for e in tr.events:
        x, v = tr.state(e.t)
        assert x == pytest.approx(e.x, abs=1e-10)
        assert abs(v) <= 1e-9
    # events alternate between maxima and minima of x
    dirs = [e.direction for e in tr.events]
    assert all(a != b for a, b in zip(dirs, dirs[1:]))


def test_guard_trips_on_runaway():
    with pytest.raises(BlowUp):
        simulate(OscillatorSystem.from_text("x^3"), 1.0, 0.0, 100.0)


def test_simulate_validates_arguments():
    with pytest.raises(ValueError):
        simulate(HARMONIC, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        simulate(HARMONIC, 1.0, 0.0, 1.0, tol=0.0)


@pytest.mark.parametrize("sys_,energy", [
    (HARMONIC, lambda x, v: v * v / 2 + x * x / 2),
    (DUFFING, lambda x, v: v * v / 2 + x * x / 2 + x**4 / 4),
])
@pytest.mark.parametrize("A", [0.3, 1.0, 2.5])
def test_energy_is_conserved(sys_, energy, A):
    tr = simulate(sys_, A, 0.0, 20.0, 1e-10)
    E = energy(tr.x, tr.v)
    assert np.max(np.abs(E - E[0])) <= 1e-7 * max(1.0, abs(E[0]))


# measure_period --------------------------------------------------------------------

def test_harmonic_period():
    T, x_back = measure_period(simulate(HARMONIC, 1.0, 0.0, 10.0, 1e-10))
    assert T == pytest.approx(2 * math.pi, abs=1e-8)
    assert x_back == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("A", [0.1, 1.0, 10.0])
def test_isochrony(A):
    T, _ = measure_period(simulate(HARMONIC, A, 0.0, 10.0, 1e-10))
    assert T == pytest.approx(2 * math.pi, abs=1e-8)


def test_damped_linear_return_amplitude():
    _, x_back = measure_period(simulate(DAMPED, 1.0, 0.0, 10.0, 1e-10))
    assert x_back < 1.0 - 1e-3


def test_van_der_pol_spirals_inward_outside_cycle():
    _, x_back = measure_period(simulate(VDP, 2.5, 0.0, 20.0, 1e-10))
    assert x_back < 2.5


def test_period_needs_a_starting_turning_point():
    with pytest.raises(InsufficientEvents):
        measure_period(simulate(HARMONIC, 0.0, 1.0, 10.0))


def test_period_needs_a_return():
    with pytest.raises(InsufficientEvents):
        measure_period(simulate(HARMONIC, 1.0, 0.0, 4.0))


# steady_amplitude ------------------------------------------------------------------

def test_van_der_pol_attractor_matches_frozen_fixture():
    A, T = steady_amplitude(VDP, 0.5, tol=1e-8)
    A_ref, T_ref = catalog.VANDERPOL_ORACLE[1.0]
    assert 1.5 < A < 2.5
    assert A == pytest.approx(A_ref, abs=1e-6)
    assert T == pytest.approx(T_ref, rel=1e-6)


def test_harmonic_is_its_own_attractor():
    A, T = steady_amplitude(HARMONIC, 1.0)
    assert A == pytest.approx(1.0, abs=1e-8)
    assert T == pytest.approx(2 * math.pi, abs=1e-8)


def test_damped_has_no_periodic_attractor():
    with pytest.raises(NoPeriodicAttractor):
        steady_amplitude(DAMPED, 1.0)


def test_equilibrium_start_has_no_attractor():
    with pytest.raises(NoPeriodicAttractor):
        steady_amplitude(HARMONIC, 0.0)


# el_residual -----------------------------------------------------------------------

@pytest.mark.parametrize("x,v", [(0.0, 0.0), (3.0, -2.0), (-1.5, 7.0)])
def test_el_residual_harmonic(x, v):
    assert el_residual(HARMONIC, x, v) == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("x,v", [(0.0, 0.0), (3.0, -2.0), (-1.5, 7.0)])
def test_el_residual_pure_damping(x, v):
    assert el_residual(OscillatorSystem.from_text("v"), x, v) == pytest.approx(0.0, abs=1e-12)


def test_el_residual_mickens():
    assert el_residual(MICKENS, 1.0, 0.0) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_el_residual_mickens_hand_formula(x, v):
    hand = -2 * v * v + 2 * x * x * (1 + v * v) - (1 + v * v)
    assert el_residual(MICKENS, x, v) == pytest.approx(hand, rel=1e-12, abs=1e-12)


def along_trace_fd(sys_, tr, t, dt):
    """d/dt f_v by centred differences in time, plus f_x."""
    fv = lambda s: sys_.full(*tr.state(s)).d_v  # noqa: E731
    x, v = tr.state(t)
    return (fv(t + dt) - fv(t - dt)) / (2 * dt) + sys_.full(x, v).d_x


@pytest.mark.parametrize("name", ["mickens", "vanderpol", "duffing"])
def test_el_residual_matches_time_derivative(name):
    sys_ = catalog.get(name)
    # the difference step is the local sample spacing, so the trace is
    # sampled densely enough for an O(dt^2) quotient to reach 1e-4
    tr = simulate(sys_, 1.0, 0.0, 8.0, 1e-12, max_step=2e-3)
    for i in range(1, len(tr.t) - 1, 7):
        dt = min(tr.t[i + 1] - tr.t[i], tr.t[i] - tr.t[i - 1])
        el = el_residual(sys_, tr.x[i], tr.v[i])
        fd = along_trace_fd(sys_, tr, tr.t[i], dt)
        assert abs(fd - el) <= 1e-4 * max(1.0, abs(el))


def test_el_series_matches_pointwise():
    tr = simulate(VDP, 1.0, 0.0, 3.0)
    series = el_series(VDP, tr)
    assert series.shape == tr.t.shape
    assert series[5] == el_residual(VDP, tr.x[5], tr.v[5])
