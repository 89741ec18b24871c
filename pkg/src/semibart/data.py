"""Datasets, linear-term designs and outcome standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import DataError, DesignError

CONTINUOUS = "continuous"
BINARY = "binary"
OUTCOME_KINDS = (CONTINUOUS, BINARY)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Outcome vector plus an ``n x p`` covariate matrix.

    Binary covariates are stored as 0/1 floats.  Arrays are copied and made
    read-only on construction.
    """

    y: np.ndarray
    X: np.ndarray
    column_names: tuple
    outcome_kind: str = CONTINUOUS
    outcome_name: str = "y"

    def __post_init__(self):
        y = _frozen(self.y)
        X = _frozen(self.X)
        if X.ndim != 2:
            raise DataError("covariate matrix must be two-dimensional")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError("outcome length does not match covariate rows")
        n, p = X.shape
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise DataError("need at least one covariate column")
        names = tuple(str(c) for c in self.column_names)
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        if len(set(names)) != p:
            raise DataError("duplicate column names")
        if self.outcome_kind not in OUTCOME_KINDS:
            raise DataError(f"unknown outcome kind {self.outcome_kind!r}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("dataset contains non-finite values")
        if self.outcome_kind == BINARY and not np.all((y == 0.0) | (y == 1.0)):
            raise DataError("binary outcome contains values other than 0/1")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise DesignError(f"unknown column {name!r}") from None


@dataclass(frozen=True)
class LinearTermSpec:
    """Ordered linear terms; each term is a product of 1 to 3 column indices."""

    terms: tuple

    def __post_init__(self):
        terms = tuple(tuple(int(i) for i in t) for t in self.terms)
        if not terms:
            raise DesignError("linear term list is empty")
        seen = set()
        for t in terms:
            if not 1 <= len(t) <= 3:
                raise DesignError(f"term {t} must reference 1 to 3 columns")
            if min(t) < 0:
                raise DesignError(f"negative column index in term {t}")
            key = tuple(sorted(t))
            if key in seen:
                raise DesignError(f"duplicate term {t}")
            seen.add(key)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def parse(cls, text: str, column_names) -> "LinearTermSpec":
        """Parse ``"a,a:x1,x1"`` against a list of column names."""
        names = list(column_names)
        terms = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                raise DesignError(f"empty term in {text!r}")
            idx = []
            for name in chunk.split(":"):
                name = name.strip()
                if name not in names:
                    raise DesignError(f"term {chunk!r} references unknown column {name!r}")
                idx.append(names.index(name))
            terms.append(tuple(idx))
        return cls(tuple(terms))

    def labels(self, column_names) -> tuple:
        return tuple(":".join(column_names[i] for i in t) for t in self.terms)

    @property
    def main_effects(self) -> tuple:
        return tuple(t[0] for t in self.terms if len(t) == 1)


@dataclass(frozen=True)
class DesignSplit:
    """Tree covariates ``L1`` and linear design ``L2`` derived from a dataset."""

    L1: np.ndarray
    L2: np.ndarray
    l1_columns: tuple
    term_labels: tuple
    treatment: int

    @property
    def q(self) -> int:
        return self.L2.shape[1]


def build_design(ds: Dataset, spec: LinearTermSpec, treatment: int | None = None) -> DesignSplit:
    """Evaluate the linear terms and split the covariates.

    Column ``j`` of ``L2`` is the row-wise product of the covariates in term
    ``j``.  ``L1`` keeps every covariate except the treatment column and
    covariates that carry their own main-effect term.  The treatment defaults
    to the first column of the first term.
    """
    for t in spec.terms:
        for i in t:
            if i >= ds.p:
                raise DesignError(f"column index {i} out of range for {ds.p} columns")
    if treatment is None:
        treatment = spec.terms[0][0]
    if not 0 <= treatment < ds.p:
        raise DesignError(f"treatment index {treatment} out of range")
    L2 = np.empty((ds.n, len(spec.terms)))
    for j, t in enumerate(spec.terms):
        L2[:, j] = np.prod(ds.X[:, list(t)], axis=1)
    dropped = set(spec.main_effects) | {treatment}
    keep = tuple(c for c in range(ds.p) if c not in dropped)
    return DesignSplit(
        L1=_frozen(ds.X[:, list(keep)].reshape(ds.n, len(keep))),
        L2=_frozen(L2),
        l1_columns=keep,
        term_labels=spec.labels(ds.column_names),
        treatment=treatment,
    )


@dataclass(frozen=True)
class Standardization:
    shift: float = 0.0
    scale: float = 1.0
    applied: bool = False

    def __post_init__(self):
        if not self.scale > 0:
            raise DataError("standardization scale must be positive")


def standardize(ds: Dataset) -> tuple[Dataset, Standardization]:
    """Map a continuous outcome onto [-0.5, 0.5]; binary outcomes pass through."""
    if ds.outcome_kind == BINARY:
        return ds, Standardization()
    lo, hi = float(ds.y.min()), float(ds.y.max())
    scale = hi - lo
    if scale <= 0.0:
        raise DataError("degenerate outcome: all values are equal")
    if not np.finfo(float).tiny <= scale * scale < np.inf:
        # variance draws are rescaled by scale**2
        raise DataError(f"outcome range {scale!r} is too extreme to standardize")
    shift = 0.5 * (lo + hi)
    y = (ds.y - shift) / scale
    return replace(ds, y=y), Standardization(shift=shift, scale=scale, applied=True)


def destandardize_draws(draws, st: Standardization):
    """Return draws on the original outcome scale (psi * s, sigma2 * s**2)."""
    from .draws import PosteriorDraws

    s = st.scale
    sigma2 = None if draws.sigma2_draws is None else draws.sigma2_draws * (s * s)
    return PosteriorDraws(
        psi_draws=draws.psi_draws * s,
        sigma2_draws=sigma2,
        term_labels=draws.term_labels,
        first_iter=draws.first_iter,
        acceptance=dict(draws.acceptance),
    )


def _parse_cell(text, row, col):
    if text.strip() == "":
        raise DataError(f"missing value at row {row}, column {col}")
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"non-numeric value {text!r} at row {row}, column {col}") from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r} at row {row}, column {col}")
    return value


def load_csv(path, outcome_column: str, outcome_kind: str = CONTINUOUS) -> Dataset:
    """Read a headered CSV into a :class:`Dataset`.

    ``outcome_kind`` may also be ``"auto"``: binary when every outcome value
    is 0 or 1, continuous otherwise.  Rows are numbered from 1 after the
    header in error messages.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if outcome_column not in header:
            raise DataError(f"outcome column {outcome_column!r} not in header")
        rows = []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(f"row {r} has {len(record)} fields, expected {len(header)}")
            rows.append([_parse_cell(v, r, header[c]) for c, v in enumerate(record)])
    if not rows:
        raise DataError(f"{path} has no data rows")
    table = np.array(rows, dtype=float)
    j = header.index(outcome_column)
    y = table[:, j]
    X = np.delete(table, j, axis=1)
    names = [h for h in header if h != outcome_column]
    if outcome_kind == "auto":
        outcome_kind = BINARY if np.all((y == 0.0) | (y == 1.0)) else CONTINUOUS
    if outcome_kind == BINARY and not np.all((y == 0.0) | (y == 1.0)):
        raise DataError(f"binary outcome column {outcome_column!r} contains values other than 0/1")
    return Dataset(y=y, X=X, column_names=names, outcome_kind=outcome_kind,
                   outcome_name=outcome_column)


def write_csv(ds: Dataset, path) -> None:
    """Write a dataset with covariates first and the outcome last."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.column_names) + [ds.outcome_name])
        for i in range(ds.n):
            w.writerow([repr(float(v)) for v in ds.X[i]] + [repr(float(ds.y[i]))])
