"""Causal curves under a probit structural mean model.

For baseline risk ``p0`` (the untreated counterfactual risk among the
treated) the treated risk is ``p1 = Phi(Phi^-1(p0) + psi1 + psi2 * v)``
for effect-modifier value ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SemiBartError
from .normal import norm_cdf, norm_ppf


@dataclass(frozen=True)
class CausalCurveQuery:
    p0_grid: tuple
    psi1: float
    psi2: float | None = None
    modifier_values: tuple | None = None

    def __post_init__(self):
        grid = tuple(float(p) for p in self.p0_grid)
        if not grid:
            raise SemiBartError("empty p0 grid")
        for p in grid:
            if not 0.0 < p < 1.0:
                raise SemiBartError(f"p0 value {p!r} outside (0, 1)")
        object.__setattr__(self, "p0_grid", grid)
        if not np.isfinite(self.psi1):
            raise SemiBartError("psi1 must be finite")
        if self.modifier_values is not None:
            if self.psi2 is None:
                raise SemiBartError("modifier values given without psi2")
            object.__setattr__(self, "modifier_values",
                               tuple(float(v) for v in self.modifier_values))
        elif self.psi2 is not None:
            raise SemiBartError("psi2 given without modifier values")


def treated_risk(p0: float, shift: float) -> float:
    return float(norm_cdf(norm_ppf(p0) + shift))


def causal_curve(q: CausalCurveQuery) -> list:
    """Rows of (p0, modifier value or None, p1), modifier-major order."""
    rows = []
    mods = (None,) if q.modifier_values is None else q.modifier_values
    for v in mods:
        shift = q.psi1 + (0.0 if v is None else q.psi2 * v)
        for p0 in q.p0_grid:
            rows.append((p0, v, treated_risk(p0, shift)))
    return rows


def parse_grid(text: str) -> tuple:
    """``"0.1,0.2,0.5"`` or an inclusive ``"start:stop:step"`` range."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(t) for t in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise ValueError
            start, stop, step = parts
            k = int(np.floor((stop - start) / step + 1e-9))
            return tuple(round(start + i * step, 12) for i in range(k + 1))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise SemiBartError(f"cannot parse grid {text!r}") from None


def format_number(x: float) -> str:
    """Shortest round-trip repr, dropping a trailing ``.0``."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s
