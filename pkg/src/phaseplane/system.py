"""The oscillator x'' = f(x, x') handed to every numerical routine."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .expr import Binary, EvalResult, Expr, compile_expr, eval_full, parse, to_text, variables


@dataclass(frozen=True)
class OscillatorSystem:
    """Right-hand side f(x, v) of x'' = f(x, x'), with v standing for x'.

    ``separable`` optionally holds the factor pair (f1(x), f2(v)) with
    f = f1 * f2; ``name`` and ``params`` are set for catalog entries.
    """

    expr: Expr
    separable: tuple[Expr, Expr] | None = None
    name: str | None = None
    params: dict = field(default_factory=dict, compare=False)
    _fast: Callable[[float, float], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_fast", compile_expr(self.expr))

    @classmethod
    def from_text(cls, source: str, **kw) -> "OscillatorSystem":
        return cls(parse(source), **kw)

    @classmethod
    def from_factors(cls, f1: str | Expr, f2: str | Expr, **kw) -> "OscillatorSystem":
        e1 = parse(f1, ("x",)) if isinstance(f1, str) else f1
        e2 = parse(f2, ("v",)) if isinstance(f2, str) else f2
        return cls(Binary("*", e1, e2), separable=(e1, e2), **kw)

    def f(self, x: float, v: float) -> float:
        return self._fast(x, v)

    def full(self, x: float, v: float) -> EvalResult:
        return eval_full(self.expr, x, v)

    @property
    def velocity_free(self) -> bool:
        """True when f has no v-dependence (a conservative oscillator)."""
        return "v" not in variables(self.expr)

    @property
    def text(self) -> str:
        return to_text(self.expr)

    def describe(self) -> dict:
        d = {"f": self.text}
        if self.name:
            d["catalog"] = self.name
            d["params"] = dict(self.params)
        if self.separable:
            d["f1"] = to_text(self.separable[0])
            d["f2"] = to_text(self.separable[1])
        return d
