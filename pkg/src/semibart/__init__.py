"""Semi-parametric Bayesian additive regression trees.

A sum-of-trees models the nuisance covariates while treatment and effect
modifiers enter through a linear term whose coefficients ``psi`` carry the
causal interpretation.  Continuous (Gaussian) and binary (probit) outcomes
are supported.
"""

from ._accel import BACKEND
from .curve import CausalCurveQuery, causal_curve
from .data import (
    Dataset,
    DesignSplit,
    LinearTermSpec,
    Standardization,
    build_design,
    destandardize_draws,
    load_csv,
    standardize,
    write_csv,
)
from .draws import PosteriorDraws, Summary, summarize
from .exceptions import DataError, DesignError, ReplicationError, SamplerError, SemiBartError
from .harness import ReplicationPlan, ReplicationReport, report_table
from .harness import run as run_replications
from .sampler import SamplerConfig, SamplerState, fit
from .scenarios import GeneratedDataset, ScenarioSpec, generate, true_h
from .trees import Forest, TreePrior, log_marginal_leaf, predict, predict_forest

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CausalCurveQuery",
    "DataError",
    "Dataset",
    "DesignError",
    "DesignSplit",
    "Forest",
    "GeneratedDataset",
    "LinearTermSpec",
    "PosteriorDraws",
    "ReplicationError",
    "ReplicationPlan",
    "ReplicationReport",
    "SamplerConfig",
    "SamplerError",
    "SamplerState",
    "ScenarioSpec",
    "SemiBartError",
    "Standardization",
    "Summary",
    "TreePrior",
    "build_design",
    "causal_curve",
    "destandardize_draws",
    "fit",
    "generate",
    "load_csv",
    "log_marginal_leaf",
    "predict",
    "predict_forest",
    "report_table",
    "run_replications",
    "standardize",
    "summarize",
    "true_h",
    "write_csv",
]
