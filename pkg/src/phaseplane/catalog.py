"""Named oscillators with reference data.

Every reference fact records where it comes from and how to recompute it,
so that tests can check the pipeline against it instead of trusting it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .expr import parse
from .system import OscillatorSystem


@dataclass(frozen=True)
class ReferenceFact:
    """A known quantity with its provenance.

    ``provenance`` is one of "closed-form", "oracle-frozen" or "trivial";
    ``recipe`` says how the value was (or can be) obtained.
    """

    name: str
    value: object
    provenance: str
    recipe: str


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    defaults: Mapping[str, float]
    build: Callable[..., OscillatorSystem] = field(repr=False)
    facts: Callable[..., list] = field(repr=False)
    description: str = ""


def _num(value: float) -> str:
    value = float(value)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _separable(text: str, f1: str, f2: str, **kw) -> OscillatorSystem:
    return OscillatorSystem(parse(text), separable=(parse(f1, ("x",)), parse(f2, ("v",))), **kw)


def _harmonic() -> OscillatorSystem:
    return _separable("-x", "-x", "1", name="harmonic", params={})


def _harmonic_facts() -> list:
    return [
        ReferenceFact("u(x)", lambda A, x: A * A - x * x, "closed-form",
                      "energy integral v^2 + x^2 = A^2"),
        ReferenceFact("T", 2.0 * math.pi, "closed-form", "isochrony of x'' = -x"),
    ]


def _mickens(s: float = 2) -> OscillatorSystem:
    if s != int(s) or s < 1:
        raise ValueError(f"mickens exponent s must be a positive integer, got {s!r}")
    s = int(s)
    if s % 2:
        warnings.warn("odd s breaks the v -> -v symmetry; mickens with odd s is experimental",
                      stacklevel=3)
    f2 = "1+v^2" if s == 2 else f"1+v^{s}"
    return OscillatorSystem.from_factors("-x", f2, name="mickens", params={"s": s})


def _mickens_facts(s: float = 2) -> list:
    if int(s) != 2:
        return []
    return [
        ReferenceFact("u(x)", lambda A, x: math.expm1(A * A - x * x), "closed-form",
                      "G(phi) = ln(1 + phi^2) / 2 = (A^2 - x^2) / 2, solved for phi^2"),
    ]


def _duffing(alpha: float = 1, beta: float = 1) -> OscillatorSystem:
    f1 = f"-{_num(alpha)}*x - {_num(beta)}*x^3"
    if alpha == 1 and beta == 1:
        f1 = "-x - x^3"
    return _separable(f1, f1, "1", name="duffing", params={"alpha": alpha, "beta": beta})


def _duffing_facts(alpha: float = 1, beta: float = 1) -> list:
    return [
        ReferenceFact("u(x)",
                      lambda A, x: alpha * (A * A - x * x) + beta * (A ** 4 - x ** 4) / 2,
                      "closed-form", "u = 2 * integral_x^A (alpha s + beta s^3) ds"),
    ]


# Frozen by running steady_amplitude(vanderpol(mu), 0.5, tol=1e-10,
# integ_tol=1e-13); see tests/fixtures/make_oracle.py.
VANDERPOL_ORACLE = {
    1.0: (2.008619860875, 6.663286859323),
    0.1: (2.000103979845, 6.287111272286),
}


def _vanderpol(mu: float = 1) -> OscillatorSystem:
    text = "(1-x^2)*v - x" if mu == 1 else f"{_num(mu)}*(1-x^2)*v - x"
    return OscillatorSystem(parse(text), name="vanderpol", params={"mu": mu})


def _vanderpol_facts(mu: float = 1) -> list:
    if float(mu) not in VANDERPOL_ORACLE:
        return []
    A, T = VANDERPOL_ORACLE[float(mu)]
    recipe = ("steady_amplitude from x0 = 0.5, amplitude tol 1e-10, integrator tol 1e-13; "
              "regenerate with tests/fixtures/make_oracle.py")
    return [
        ReferenceFact("A*", A, "oracle-frozen", recipe),
        ReferenceFact("T*", T, "oracle-frozen", recipe),
    ]


def _damped_linear(c: float = 0.1) -> OscillatorSystem:
    return OscillatorSystem(parse(f"-x - {_num(c)}*v"), name="damped-linear", params={"c": c})


def _damped_facts(c: float = 0.1) -> list:
    return [ReferenceFact("closed", False, "trivial", "energy decays at rate c v^2")]


ENTRIES: dict[str, CatalogEntry] = {
    e.name: e for e in (
        CatalogEntry("harmonic", {}, _harmonic, _harmonic_facts, "x'' = -x"),
        CatalogEntry("mickens", {"s": 2}, _mickens, _mickens_facts, "x'' = -x (1 + x'^s)"),
        CatalogEntry("duffing", {"alpha": 1, "beta": 1}, _duffing, _duffing_facts,
                     "x'' = -alpha x - beta x^3"),
        CatalogEntry("vanderpol", {"mu": 1}, _vanderpol, _vanderpol_facts,
                     "x'' = mu (1 - x^2) x' - x"),
        CatalogEntry("damped-linear", {"c": 0.1}, _damped_linear, _damped_facts,
                     "x'' = -x - c x'"),
    )
}


def names() -> list[str]:
    return list(ENTRIES)


def _resolve(name: str, params: Mapping[str, object] | None) -> tuple[CatalogEntry, dict]:
    if name not in ENTRIES:
        raise KeyError(f"unknown catalog entry {name!r}; choose from {', '.join(ENTRIES)}")
    entry = ENTRIES[name]
    merged = dict(entry.defaults)
    for key, value in (params or {}).items():
        if key not in entry.defaults:
            raise ValueError(f"{name} has no parameter {key!r}")
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"parameter {key} must be a number, got {value!r}") from None
        if not math.isfinite(value):
            raise ValueError(f"parameter {key} must be finite")
        merged[key] = value
    return entry, merged


def get(name: str, params: Mapping[str, object] | None = None) -> OscillatorSystem:
    """Instantiate catalog entry ``name`` with ``params`` over its defaults."""
    entry, merged = _resolve(name, params)
    return entry.build(**merged)


def facts(name: str, params: Mapping[str, object] | None = None) -> list[ReferenceFact]:
    entry, merged = _resolve(name, params)
    return entry.facts(**merged)
