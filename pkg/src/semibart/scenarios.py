"""Simulation scenarios: covariates, treatment and outcome generators.

Column layout is ``a, x1, ..., xK`` followed by the outcome ``y``.

``s1``
    Bernoulli(0.25) treatment independent of covariates; four Bernoulli
    covariates (p = 0.5, 0.5, 0.75, 0.75) then twenty Gaussians in four
    exchangeable blocks of five (correlations 0.20/0.15/0.10/0.05, means
    2.0/1.5/1.0/0.0).  Continuous outcome, ``h = 2a``.
``s2a``, ``s2b``
    Thirty AR(1) Gaussians (rho = 0.5), logistic treatment, continuous
    outcome with ``h = 2a - a x1 + 2 x1``; ``s2b`` has a rougher treatment
    model and a high-order polynomial nuisance mean.
``s3``
    As ``s2a`` for covariates and treatment, probit binary outcome with
    ``h = 0.3a - 0.1 a x1 + 0.1 x1``.
``s4``
    As ``s2a`` with ``h = 2a`` and ``x1`` entering only the nuisance part;
    the analyst still fits ``a, a:x1, x1`` so the model is misspecified.

All draws come from ``numpy.random.default_rng(seed)`` (PCG64): Gaussians
via a Cholesky factor of the covariance, Bernoulli variables as
``uniform < p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import BINARY, CONTINUOUS, Dataset, LinearTermSpec
from .exceptions import DataError
from .normal import norm_cdf_array

SCENARIOS = ("s1", "s2a", "s2b", "s3", "s4")

_TERMS = {
    "s1": "a",
    "s2a": "a,a:x1,x1",
    "s2b": "a,a:x1,x1",
    "s3": "a,a:x1,x1",
    "s4": "a,a:x1,x1",
}

# generating coefficients of the analyst's terms; s4's a:x1 and x1 terms
# have no generating counterpart
TRUE_PSI = {
    "s1": (2.0,),
    "s2a": (2.0, -1.0, 2.0),
    "s2b": (2.0, -1.0, 2.0),
    "s3": (0.3, -0.1, 0.1),
    "s4": (2.0, float("nan"), float("nan")),
}


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    n: int = 500
    seed: int = 0

    def __post_init__(self):
        sid = str(self.id).lower()
        if sid not in SCENARIOS:
            raise DataError(f"unknown scenario {self.id!r}; choose from {', '.join(SCENARIOS)}")
        if self.n < 10:
            raise DataError("scenario sample size must be at least 10")
        if self.seed < 0:
            raise DataError("seed must be non-negative")
        object.__setattr__(self, "id", sid)


@dataclass(frozen=True)
class GeneratedDataset:
    dataset: Dataset
    true_psi: tuple
    linear_spec: LinearTermSpec
    terms_text: str
    spec: ScenarioSpec


def expit(x):
    return 1.0 / (1.0 + np.exp(-x))


def _mvn(rng, n, mean, cov):
    chol = np.linalg.cholesky(cov)
    return mean + rng.standard_normal((n, len(mean))) @ chol.T


def _bernoulli(rng, p):
    p = np.asarray(p, dtype=float)
    return (rng.random(p.shape) < p).astype(float)


def s1_covariance():
    cov = np.eye(20)
    for b, rho in enumerate((0.20, 0.15, 0.10, 0.05)):
        blk = slice(5 * b, 5 * b + 5)
        cov[blk, blk] = rho
    np.fill_diagonal(cov, 1.0)
    mean = np.repeat([2.0, 1.5, 1.0, 0.0], 5)
    return mean, cov


def ar1_covariance(p=30, rho=0.5):
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _logcos(x):
    return np.log(np.abs(np.cos(np.pi / 2.0 * x)))


def _s1_covariates(rng, n):
    mean, cov = s1_covariance()
    cont = _mvn(rng, n, mean, cov)
    bins = np.column_stack([_bernoulli(rng, np.full(n, p)) for p in (0.25, 0.5, 0.5, 0.75, 0.75)])
    return np.column_stack([bins, cont])


def _ar1_covariates(rng, n, treatment_logit):
    x = _mvn(rng, n, np.zeros(30), ar1_covariance())
    # before the treatment column is prepended, x[:, k - 1] is covariate xk
    a = _bernoulli(rng, expit(treatment_logit(lambda k: x[:, k - 1])))
    return np.column_stack([a, x])


def _simple_logit(c):
    return 0.1 + 0.2 * c(1) - np.sin(c(3)) / 3 - 0.1 * c(22)


def _rough_logit(c):
    return (0.1 + 0.2 * c(1) - 0.5 * c(2) - 0.1 * c(1) * c(2) + 0.3 * c(4) + 0.1 * c(5)
            + 0.7 * c(4) * c(5) - 0.4 * c(11) * c(22) - 0.4 * c(10) ** 2 * c(15) - 0.1 * c(22))


def _s1_mean(c):
    return (1 + 2 * c(0) + 2 * c(5) + np.sin(np.pi * c(1) * c(6)) - 2 * np.exp(c(2) * c(4))
            + _logcos(c(7)) - 1.8 * np.cos(c(8)) + 3 * c(2) * np.abs(c(6)) ** 1.5)


def _s2a_mean(c):
    a = c(0)
    return (1 + 2 * a - a * c(1) + 2 * c(1) + np.sin(np.pi * c(21) * c(6))
            - np.exp(c(5) / 5 * c(4)) + _logcos(c(7)) - 1.8 * np.cos(c(8))
            + 0.2 * c(10) * np.abs(c(6)) ** 1.5)


def _s2b_mean(c):
    a = c(0)
    return (1 + 2 * a - a * c(1) + 2 * c(1) - c(2) + 2 * c(3) - 1.5 * c(4) - 0.5 * c(5) - 2 * c(6)
            + c(3) ** 2 - c(6) ** 2 + 2 * c(3) * c(4) - c(2) * c(6) + 0.5 * c(5) * c(6)
            - 0.2 * c(2) * c(3) * c(4) + c(6) * c(8) * c(9) - c(7) * c(21) * c(24) * c(25)
            + c(10) * c(13) * c(14) * c(26) - c(24) * c(25) ** 2 * c(10) + 3 * c(3) * c(16) ** 2
            - 3 * c(4) * c(17) ** 2 + c(3) * c(4) * c(9) * c(14) - c(3) * c(4) * c(9) * c(14) ** 2
            + 1.5 * c(10) * c(21))


def _s3_index(c):
    a = c(0)
    return (0.1 + 0.3 * a - 0.1 * a * c(1) + 0.1 * c(1) - np.sin(np.pi / 4 * c(21) * c(6))
            + np.exp(c(6) / 5) * c(10) / 4 - 0.12 * c(21) * c(8) * c(9)
            + 0.05 * c(7) * c(9) * c(10) ** 2)


def _s4_mean(c):
    return (1 + 2 * c(0) + np.sin(np.pi * c(21) * c(6)) - np.exp(c(5) / 5 * c(4))
            + _logcos(c(7)) - 1.8 * np.cos(c(8)) + 0.2 * c(10) * np.abs(c(6)) ** 1.5
            + c(1) * c(2) - 0.5 * c(1) ** 2 - np.cos(c(1)))


_MEANS = {"s1": _s1_mean, "s2a": _s2a_mean, "s2b": _s2b_mean, "s3": _s3_index, "s4": _s4_mean}


def column_names(scenario: str) -> tuple:
    k = 24 if scenario == "s1" else 30
    return ("a",) + tuple(f"x{i}" for i in range(1, k + 1))


def mean_function(scenario: str, X) -> np.ndarray:
    """Outcome mean (probit index for ``s3``) at the rows of ``[a, x1, ...]``."""
    X = np.asarray(X, dtype=float)
    return _MEANS[scenario](lambda k: X[:, k])


def covariates(spec: "ScenarioSpec", rng) -> np.ndarray:
    if spec.id == "s1":
        return _s1_covariates(rng, spec.n)
    logit = _rough_logit if spec.id == "s2b" else _simple_logit
    return _ar1_covariates(rng, spec.n, logit)


def generate(spec: ScenarioSpec) -> GeneratedDataset:
    rng = np.random.default_rng(spec.seed)
    X = covariates(spec, rng)
    mu = mean_function(spec.id, X)
    if spec.id == "s3":
        y = _bernoulli(rng, norm_cdf_array(mu))
        kind = BINARY
    else:
        y = mu + rng.standard_normal(spec.n)
        kind = CONTINUOUS
    names = column_names(spec.id)
    ds = Dataset(y=y, X=X, column_names=names, outcome_kind=kind, outcome_name="y")
    terms = _TERMS[spec.id]
    return GeneratedDataset(
        dataset=ds,
        true_psi=TRUE_PSI[spec.id],
        linear_spec=LinearTermSpec.parse(terms, names),
        terms_text=terms,
        spec=spec,
    )


def true_h(spec: ScenarioSpec | str, a, x1=0.0) -> float:
    """Generating linear component at treatment ``a`` and modifier ``x1``."""
    sid = spec.id if isinstance(spec, ScenarioSpec) else str(spec).lower()
    if sid not in SCENARIOS:
        raise DataError(f"unknown scenario {sid!r}")
    if sid in ("s1", "s4"):
        return 2.0 * a
    p1, p2, p3 = TRUE_PSI[sid]
    return p1 * a + p2 * a * x1 + p3 * x1
