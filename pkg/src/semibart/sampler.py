"""The semi-BART Gibbs sampler.

Each sweep backfits the ``m`` trees against partial residuals, then draws the
linear coefficients ``psi`` from their conjugate normal posterior, then either
the error variance (continuous outcomes) or the probit latent vector (binary
outcomes).  Continuous outcomes are modeled on the standardized scale and the
stored draws are mapped back at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from .data import (BINARY, Dataset, LinearTermSpec, Standardization, build_design,
                   destandardize_draws, standardize)
from .draws import PosteriorDraws
from .exceptions import DesignError, SamplerError
from .normal import sample_latent
from .trees import (
    DEFAULT_MOVE_PROBS,
    MOVE_NAMES,
    Forest,
    SplitData,
    TreePrior,
    _tree_step,
    backfit_sweep,
    leaf_sigma_mu,
)


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``sigma2_psi`` is the prior variance of each ``psi`` component and
    ``psi0`` its prior mean (zeros when ``None``).  ``alpha``, ``beta``,
    ``n_min`` and ``move_probs`` control the tree prior and proposals;
    setting ``alpha = 0`` turns the forest into a fixed intercept, which the
    tests use to compare against closed-form linear regression.
    """

    m: int = 50
    n_iter: int = 10000
    n_burn: int = 2500
    nu0: float = 3.0
    q_cal: float = 0.9
    k_scale: float = 2.0
    sigma2_psi: float = 16.0
    psi0: tuple | None = None
    seed: int = 0
    alpha: float = 0.95
    beta: float = 2.0
    n_min: int = 5
    move_probs: tuple = DEFAULT_MOVE_PROBS

    def __post_init__(self):
        if self.m < 1:
            raise SamplerError("m must be at least 1")
        if not 0 <= self.n_burn < self.n_iter:
            raise SamplerError("need 0 <= burn-in < iterations")
        if not self.sigma2_psi > 0:
            raise SamplerError("sigma2_psi must be positive")
        if not self.nu0 > 0:
            raise SamplerError("nu0 must be positive")
        if not 0 < self.q_cal < 1:
            raise SamplerError("q_cal must lie in (0, 1)")
        if not self.k_scale > 0:
            raise SamplerError("k_scale must be positive")
        probs = np.asarray(self.move_probs, dtype=float)
        if probs.shape != (4,) or np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
            raise SamplerError("move_probs must be 4 non-negative weights summing to 1")
        if self.seed < 0:
            raise SamplerError("seed must be non-negative")


@dataclass(frozen=True)
class Problem:
    """Everything the sweep needs that stays fixed across iterations."""

    target: np.ndarray      # standardized y, or the 0/1 outcome for probit
    L2: np.ndarray
    split: SplitData
    binary: bool
    standardization: Standardization
    term_labels: tuple
    psi0: np.ndarray
    prior: TreePrior
    lambda0: float

    @property
    def n(self) -> int:
        return self.target.shape[0]

    @property
    def q(self) -> int:
        return self.L2.shape[1]


@dataclass
class SamplerState:
    """Current forest, coefficients, error variance and latent outcome.

    ``fit`` caches the forest prediction at the training rows.  For binary
    outcomes ``sigma2`` stays at 1 and ``z`` holds the latent vector.
    """

    forest: Forest
    psi: np.ndarray
    sigma2: float
    z: np.ndarray | None
    fit: np.ndarray
    counts: np.ndarray = field(default_factory=lambda: np.zeros((2, 4), dtype=np.int64))


def calibrate_lambda(sample_var: float, nu0: float, q: float) -> float:
    """Scale ``lambda0`` so a scaled-inverse-chi2(nu0, lambda0) prior has P(sigma2 < sample_var) = q."""
    return float(sample_var * chi2.ppf(1.0 - q, nu0) / nu0)


def prepare(ds: Dataset, spec: LinearTermSpec, cfg: SamplerConfig,
            treatment: int | None = None) -> Problem:
    design = build_design(ds, spec, treatment)
    binary = ds.outcome_kind == BINARY
    if not binary and ds.n <= design.q:
        raise DesignError(f"need more observations ({ds.n}) than linear terms ({design.q})")
    std_ds, st = standardize(ds)
    if cfg.psi0 is None:
        psi0 = np.zeros(design.q)
    else:
        psi0 = np.asarray(cfg.psi0, dtype=float)
        if psi0.shape != (design.q,):
            raise SamplerError(f"psi0 has length {psi0.size}, expected {design.q}")
    if design.L1.shape[1] == 0:
        # nothing left for the trees to split on: a constant column keeps the
        # forest a pure intercept
        L1 = np.zeros((ds.n, 1))
    else:
        L1 = design.L1
    prior = TreePrior(alpha=cfg.alpha, beta=cfg.beta,
                      sigma_mu=leaf_sigma_mu(cfg.m, cfg.k_scale, binary), n_min=cfg.n_min)
    lambda0 = 1.0 if binary else calibrate_lambda(np.var(std_ds.y), cfg.nu0, cfg.q_cal)
    return Problem(
        target=np.array(std_ds.y, dtype=float),
        L2=np.ascontiguousarray(design.L2, dtype=float),
        split=SplitData.from_matrix(L1),
        binary=binary,
        standardization=st,
        term_labels=design.term_labels,
        psi0=psi0,
        prior=prior,
        lambda0=lambda0,
    )


def initialize(problem: Problem, cfg: SamplerConfig) -> SamplerState:
    """Single-leaf trees with zero means, ``psi = psi0``, ``sigma2 = var(y)``."""
    forest = Forest.empty(cfg.m, problem.split, problem.prior.n_min)
    if problem.binary:
        z = np.where(problem.target > 0.5, 0.5, -0.5)
        sigma2 = 1.0
    else:
        z = None
        sigma2 = float(np.var(problem.target))
    return SamplerState(forest=forest, psi=problem.psi0.copy(), sigma2=sigma2, z=z,
                        fit=np.zeros(problem.n))


def working_response(state: SamplerState, problem: Problem) -> np.ndarray:
    """Standardized y for continuous outcomes, the latent z for probit."""
    return state.z if problem.binary else problem.target


def backfit_tree_step(state: SamplerState, j: int, problem: Problem, cfg: SamplerConfig,
                      rng: np.random.Generator) -> np.ndarray:
    """One proposal plus leaf redraw for tree ``j``; returns the partial residual used.

    The sweep in :func:`run_sweep` does the same for all trees in one
    compiled call; this entry point exists for inspection and testing.
    """
    f = state.forest
    if not 0 <= j < f.m:
        raise SamplerError(f"tree index {j} out of range")
    others = state.fit - f.tree_fit(j)
    resid = working_response(state, problem) - others - problem.L2 @ state.psi
    var, cut, left, depth, mu, growable, leaf_of = f.arrays(j)
    _tree_step(problem.split.xt, problem.split.xflat, problem.split.grid, problem.split.gstart,
               var, cut, left, depth, mu, growable, leaf_of, resid, state.sigma2,
               problem.prior.sigma_mu ** 2, problem.prior.alpha, problem.prior.beta,
               problem.prior.n_min, np.asarray(cfg.move_probs, dtype=float), rng, state.counts)
    state.fit = others + f.tree_fit(j)
    return resid


def psi_posterior(L2, ystar, sigma2: float, sigma2_psi: float, psi0) -> tuple:
    """Mean and lower Cholesky factor of the posterior precision of ``psi``."""
    L2 = np.asarray(L2, dtype=float)
    q = L2.shape[1]
    prec = L2.T @ L2 / sigma2 + np.eye(q) / sigma2_psi
    try:
        chol = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError:
        raise SamplerError(
            f"psi posterior precision is not positive definite; collinear linear terms: "
            f"{_collinear_columns(L2)}") from None
    rhs = L2.T @ ystar / sigma2 + np.asarray(psi0, dtype=float) / sigma2_psi
    mean = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    return mean, chol


def _collinear_columns(L2) -> list:
    _, s, vt = np.linalg.svd(L2, full_matrices=False)
    tol = max(L2.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    bad = set()
    for k in np.nonzero(s <= tol)[0]:
        bad.update(np.nonzero(np.abs(vt[k]) > 1e-8)[0].tolist())
    return sorted(bad) or list(range(L2.shape[1]))


def draw_psi(L2, ystar, sigma2, sigma2_psi, psi0, rng, labels=None) -> np.ndarray:
    try:
        mean, chol = psi_posterior(L2, ystar, sigma2, sigma2_psi, psi0)
    except SamplerError as exc:
        if labels is None:
            raise
        cols = [labels[i] for i in _collinear_columns(np.asarray(L2, dtype=float))]
        raise SamplerError(f"psi posterior precision is not positive definite; "
                           f"collinear linear terms: {', '.join(cols)}") from exc
    # chol^T x = e gives x ~ N(0, prec^-1)
    return mean + np.linalg.solve(chol.T, rng.standard_normal(mean.size))


def update_psi(state: SamplerState, problem: Problem, cfg: SamplerConfig,
               rng: np.random.Generator) -> np.ndarray:
    ystar = working_response(state, problem) - state.fit
    state.psi = draw_psi(problem.L2, ystar, state.sigma2, cfg.sigma2_psi, problem.psi0, rng,
                         problem.term_labels)
    return state.psi


def draw_sigma2(resid, nu0: float, lambda0: float, rng: np.random.Generator, size=None):
    """sigma2 = (nu0 * lambda0 + sum(resid**2)) / chi2(nu0 + n)."""
    resid = np.asarray(resid, dtype=float)
    lam_n = nu0 * lambda0 + resid @ resid
    return lam_n / rng.chisquare(nu0 + resid.size, size=size)


def update_sigma2(state: SamplerState, problem: Problem, cfg: SamplerConfig,
                  rng: np.random.Generator) -> float:
    if problem.binary:
        raise SamplerError("binary outcomes keep sigma2 fixed at 1")
    resid = problem.target - state.fit - problem.L2 @ state.psi
    state.sigma2 = float(draw_sigma2(resid, cfg.nu0, problem.lambda0, rng))
    return state.sigma2


def update_latent_probit(state: SamplerState, problem: Problem,
                         rng: np.random.Generator) -> np.ndarray:
    if not problem.binary:
        raise SamplerError("latent update applies to binary outcomes only")
    mean = state.fit + problem.L2 @ state.psi
    state.z = sample_latent(mean, problem.target, rng)
    return state.z


def run_sweep(state: SamplerState, problem: Problem, cfg: SamplerConfig,
              rng: np.random.Generator) -> None:
    """Trees 1..m, then psi, then sigma2 or z."""
    f = state.forest
    sp = problem.split
    state.fit = backfit_sweep(
        sp.xt, sp.xflat, sp.grid, sp.gstart, f.var, f.cut, f.left, f.depth, f.mu,
        f.growable, f.leaf_of, working_response(state, problem), problem.L2 @ state.psi,
        state.sigma2, problem.prior.sigma_mu ** 2, problem.prior.alpha, problem.prior.beta,
        problem.prior.n_min, np.asarray(cfg.move_probs, dtype=float), rng, state.counts)
    update_psi(state, problem, cfg, rng)
    if problem.binary:
        update_latent_probit(state, problem, rng)
    else:
        update_sigma2(state, problem, cfg, rng)


def _check_finite(state: SamplerState, it: int) -> None:
    if not (np.all(np.isfinite(state.fit)) and np.all(np.isfinite(state.psi))
            and np.isfinite(state.sigma2)):
        raise SamplerError(f"non-finite sampler state at iteration {it}")
    if state.z is not None and not np.all(np.isfinite(state.z)):
        raise SamplerError(f"non-finite latent outcome at iteration {it}")


def acceptance_stats(counts) -> dict:
    return {name: (int(counts[0, k]), int(counts[1, k])) for k, name in enumerate(MOVE_NAMES)}


def fit(ds: Dataset, spec: LinearTermSpec, cfg: SamplerConfig = SamplerConfig(),
        treatment: int | None = None, callback=None) -> PosteriorDraws:
    """Run the sampler and return post-burn-in draws on the original outcome scale.

    ``callback(it, state)`` is called after every sweep when given.
    """
    problem = prepare(ds, spec, cfg, treatment)
    rng = np.random.default_rng(cfg.seed)
    state = initialize(problem, cfg)
    keep = cfg.n_iter - cfg.n_burn
    psi_draws = np.empty((keep, problem.q))
    sigma2_draws = None if problem.binary else np.empty(keep)
    for it in range(cfg.n_iter):
        run_sweep(state, problem, cfg, rng)
        _check_finite(state, it + 1)
        if callback is not None:
            callback(it, state)
        k = it - cfg.n_burn
        if k >= 0:
            psi_draws[k] = state.psi
            if sigma2_draws is not None:
                sigma2_draws[k] = state.sigma2
    draws = PosteriorDraws(
        psi_draws=psi_draws,
        sigma2_draws=sigma2_draws,
        term_labels=problem.term_labels,
        first_iter=cfg.n_burn + 1,
        acceptance=acceptance_stats(state.counts),
    )
    return destandardize_draws(draws, problem.standardization)
