import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseplane import catalog
from phaseplane.errors import FactorVanishes, OutsideRange
from phaseplane.reduction import BranchSpec, integrate_branch
from phaseplane.separable import F, G, SeparableSystem, phi_separable

MICKENS = SeparableSystem.from_text("-x", "1+v^2")
HARMONIC = SeparableSystem.from_text("-x", "1")
DUFFING = SeparableSystem.from_text("-x-x^3", "1")


def midpoint_rule(fn, lo, hi, n=10**6):
    s = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    return float(np.sum(fn(s)) * (hi - lo) / n)


def test_G_mickens():
    expected = math.log(2) / 2
    assert G(MICKENS, 1.0) == pytest.approx(expected, abs=1e-12)
    assert G(MICKENS, 1.0) == pytest.approx(midpoint_rule(lambda s: s / (1 + s * s), 0, 1),
                                            abs=1e-11)


def test_G_of_zero():
    assert G(MICKENS, 0.0) == 0.0
    assert G(DUFFING, 0.0) == 0.0


def test_G_unit_factor():
    assert G(HARMONIC, 2.0) == pytest.approx(2.0, abs=1e-12)


def test_F_mickens():
    assert F(MICKENS, 1.0, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert F(MICKENS, 1.0, 0.0) == pytest.approx(midpoint_rule(lambda s: -s, 1, 0), abs=1e-12)


def test_F_at_amplitude():
    assert F(MICKENS, 1.3, 1.3) == 0.0
    assert F(MICKENS, 1.3, offset=0.0) == 0.0


def test_F_duffing():
    assert F(DUFFING, 1.0, 0.0) == pytest.approx(0.75, abs=1e-12)


def test_F_offset_form_keeps_precision():
    A, y = 1.0, 1e-20
    # -integral of -x over [A - y, A] = A y - y^2 / 2
    assert F(MICKENS, A, offset=y) == pytest.approx(A * y, rel=1e-12)


def test_phi_mickens():
    assert phi_separable(MICKENS, 1.0, 0.0) == pytest.approx(math.sqrt(math.e - 1), rel=1e-12)


def test_phi_at_amplitude_is_exactly_zero():
    for sys_ in (MICKENS, HARMONIC, DUFFING):
        assert phi_separable(sys_, 1.7, 1.7) == 0.0


def test_phi_harmonic():
    assert phi_separable(HARMONIC, 1.0, 0.5) == pytest.approx(math.sqrt(0.75), rel=1e-12)


def test_phi_beyond_turning_point():
    with pytest.raises(OutsideRange):
        phi_separable(HARMONIC, 1.0, 1.5)


def test_factor_with_zero_is_rejected():
    sys_ = SeparableSystem.from_text("-x", "1 - v^2")
    with pytest.raises(FactorVanishes):
        G(sys_, 2.0)
    with pytest.raises(FactorVanishes):
        phi_separable(sys_, 2.0, 0.0)


def test_bounded_G_range():
    # G = (1 - 1/(1+phi^2)) / 2 < 1/2 while F reaches A^2 / 2
    sys_ = SeparableSystem.from_text("-x", "(1+v^2)^2")
    assert phi_separable(sys_, 0.9, 0.0) > 0
    with pytest.raises(OutsideRange):
        phi_separable(sys_, 1.1, 0.0)


def test_factors_are_checked():
    with pytest.raises(ValueError):
        SeparableSystem.from_text("v", "1")


def test_from_catalog_system():
    sep = SeparableSystem.from_system(catalog.get("mickens"))
    assert phi_separable(sep, 1.0, 0.0) == pytest.approx(math.sqrt(math.e - 1), rel=1e-12)
    with pytest.raises(ValueError):
        SeparableSystem.from_system(catalog.get("vanderpol"))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.2, 2.5))
def test_closed_form_mickens(A):
    xs = np.linspace(0, A, 9)
    for x in xs:
        exact = math.sqrt(math.expm1(A * A - x * x))
        assert phi_separable(MICKENS, A, x) == pytest.approx(exact, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("name", ["mickens", "duffing", "harmonic"])
@pytest.mark.parametrize("A", [0.5, 1.0, 2.0])
def test_agrees_with_reduction(name, A):
    sys_ = catalog.get(name)
    sep = SeparableSystem.from_system(sys_)
    br = integrate_branch(sys_, BranchSpec(A, -1, -1), 1e-10)
    xs = np.linspace(-A, A, 41)
    for x in xs:
        assert abs(phi_separable(sep, A, x) ** 2 - br.u(x)) <= 1e-8 * max(1.0, br.u(x))


@pytest.mark.parametrize("sep", [MICKENS, DUFFING, HARMONIC])
def test_phi_decreases_towards_amplitude(sep):
    A = 1.4
    phis = [phi_separable(sep, A, x) for x in np.linspace(0, A, 30)]
    assert all(b < a for a, b in zip(phis, phis[1:]))
