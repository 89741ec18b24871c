"""Posterior draw container, summaries and the draws CSV format."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SamplerError


@dataclass
class PosteriorDraws:
    """Post-burn-in draws of the linear coefficients and error variance.

    ``sigma2_draws`` is ``None`` for binary outcomes.  ``first_iter`` is the
    1-based iteration number of the first stored row.
    """

    psi_draws: np.ndarray
    sigma2_draws: np.ndarray | None
    term_labels: tuple
    first_iter: int = 1
    acceptance: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.psi_draws.shape[0]

    def columns(self) -> dict:
        cols = {f"psi_{lab}": self.psi_draws[:, j] for j, lab in enumerate(self.term_labels)}
        if self.sigma2_draws is not None:
            cols["sigma2"] = self.sigma2_draws
        return cols


@dataclass(frozen=True)
class Summary:
    mean: float
    sd: float
    lower95: float
    upper95: float


def summarize_vector(x) -> Summary:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise SamplerError("need at least 2 draws to summarize")
    # linear interpolation of order statistics (type 7)
    lo, hi = np.quantile(x, [0.025, 0.975], method="linear")
    return Summary(float(x.mean()), float(x.std(ddof=1)), float(lo), float(hi))


def summarize(draws: PosteriorDraws) -> dict:
    """Posterior mean, sd and equal-tailed 95% interval per parameter."""
    if draws.n_draws == 0:
        raise SamplerError("no stored draws")
    return {name: summarize_vector(col) for name, col in draws.columns().items()}


def write_draws_csv(draws: PosteriorDraws, fh) -> None:
    cols = draws.columns()
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["iter", *cols])
    data = np.column_stack(list(cols.values()))
    for k, row in enumerate(data):
        w.writerow([draws.first_iter + k, *(repr(float(v)) for v in row)])


def write_summary_csv(summary: dict, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["parameter", "mean", "sd", "lower95", "upper95"])
    for name, s in summary.items():
        w.writerow([name, repr(s.mean), repr(s.sd), repr(s.lower95), repr(s.upper95)])
