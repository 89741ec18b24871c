"""Monte Carlo replication studies: bias, interval coverage and ESD."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .draws import summarize
from .exceptions import ReplicationError, SemiBartError
from .sampler import SamplerConfig, fit
from .scenarios import GeneratedDataset, ScenarioSpec, generate


@dataclass(frozen=True)
class ReplicationPlan:
    """``scenario`` fixes the scenario id and sample size; its seed is ignored."""

    scenario: ScenarioSpec
    n_reps: int = 100
    sampler_cfg: SamplerConfig = SamplerConfig(n_iter=2000, n_burn=500)
    base_seed: int = 0

    def __post_init__(self):
        if self.n_reps < 2:
            raise ReplicationError("need at least 2 replications")
        if self.base_seed < 0:
            raise ReplicationError("base seed must be non-negative")


def replication_seeds(base_seed: int, r: int) -> tuple:
    """(data seed, sampler seed) for replication ``r``; independent of run order."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(r,))
    d, s = ss.generate_state(2, np.uint64)
    return int(d), int(s)


@dataclass(frozen=True)
class ReplicationRow:
    rep: int
    data_seed: int
    sampler_seed: int
    parameter: str
    true_value: float
    estimate: float
    lower95: float
    upper95: float

    @property
    def covered(self) -> bool:
        return bool(self.lower95 <= self.true_value <= self.upper95)


@dataclass(frozen=True)
class ParameterMetrics:
    bias: float
    coverage: float
    esd: float


@dataclass
class ReplicationReport:
    scenario: str
    n: int
    n_reps: int
    parameters: tuple
    rows: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)


def posterior_estimator(gd: GeneratedDataset, cfg: SamplerConfig) -> dict:
    """Posterior mean and equal-tailed 95% interval for each psi term."""
    summary = summarize(fit(gd.dataset, gd.linear_spec, cfg))
    return {k[4:]: (s.mean, s.lower95, s.upper95)
            for k, s in summary.items() if k.startswith("psi_")}


def _one_replication(args):
    plan, r, estimator = args
    data_seed, sampler_seed = replication_seeds(plan.base_seed, r)
    spec = ScenarioSpec(plan.scenario.id, plan.scenario.n, data_seed)
    cfg = _with_seed(plan.sampler_cfg, sampler_seed)
    try:
        gd = generate(spec)
        est = estimator(gd, cfg)
    except SemiBartError as exc:
        raise ReplicationError(
            f"replication {r} failed (data seed {data_seed}, sampler seed {sampler_seed}): {exc}"
        ) from exc
    labels = gd.linear_spec.labels(gd.dataset.column_names)
    rows = []
    for label, truth in zip(labels, gd.true_psi):
        mean, lo, hi = est[label]
        rows.append(ReplicationRow(r, data_seed, sampler_seed, label, float(truth),
                                   float(mean), float(lo), float(hi)))
    return rows


def _with_seed(cfg: SamplerConfig, seed: int) -> SamplerConfig:
    return replace(cfg, seed=seed)


def compute_metrics(rows, parameters) -> dict:
    """Bias, coverage and ESD per parameter from per-replication rows.

    Parameters without a generating value (NaN truth) get NaN bias and
    coverage; their ESD is still reported.
    """
    out = {}
    for p in parameters:
        sel = [r for r in rows if r.parameter == p]
        est = np.array([r.estimate for r in sel])
        truth = sel[0].true_value
        esd = float(np.std(est, ddof=1)) if est.size > 1 else float("nan")
        if math.isnan(truth):
            out[p] = ParameterMetrics(float("nan"), float("nan"), esd)
        else:
            hits = sum(r.covered for r in sel)
            out[p] = ParameterMetrics(float(np.mean(est - truth)), hits / len(sel), esd)
    return out


def run(plan: ReplicationPlan, estimator=posterior_estimator, workers: int = 1,
        progress=None) -> ReplicationReport:
    """Run every replication and reduce in replication order.

    ``estimator(generated, cfg)`` maps term label to (estimate, lower, upper);
    it must be picklable when ``workers > 1``.  ``progress(done, total)`` is
    called after each finished replication.
    """
    if workers < 1:
        raise ReplicationError("workers must be at least 1")
    jobs = [(plan, r, estimator) for r in range(plan.n_reps)]
    results = []
    if workers == 1:
        for k, job in enumerate(jobs):
            results.append(_one_replication(job))
            if progress is not None:
                progress(k + 1, plan.n_reps)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for k, res in enumerate(pool.map(_one_replication, jobs)):
                results.append(res)
                if progress is not None:
                    progress(k + 1, plan.n_reps)
    rows = [row for res in results for row in res]
    params = tuple(dict.fromkeys(r.parameter for r in rows))
    return ReplicationReport(
        scenario=plan.scenario.id,
        n=plan.scenario.n,
        n_reps=plan.n_reps,
        parameters=params,
        rows=rows,
        metrics=compute_metrics(rows, params),
    )


def round_half_up(x: float, places: int) -> str:
    """Decimal rendering of ``x`` rounded half away from zero; NaN prints as NA."""
    if x is None or math.isnan(x):
        return "NA"
    q = Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    if q == 0:
        q = abs(q)
    return f"{q:.{places}f}"


TABLE_HEADER = ("Method", "Parameter", "Bias", "Cov.", "ESD")


def table_rows(report: ReplicationReport) -> list:
    return [
        ("Semi-BART", f"psi_{p}", round_half_up(m.bias, 2), round_half_up(m.coverage, 2),
         round_half_up(m.esd, 3))
        for p, m in report.metrics.items()
    ]


def report_table(report: ReplicationReport) -> tuple:
    """(CSV text, aligned text) renderings of the summary table."""
    rows = table_rows(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    w.writerows(rows)
    widths = [max(len(str(r[i])) for r in [TABLE_HEADER, *rows]) for i in range(5)]
    lines = [f"scenario {report.scenario}, n = {report.n}, {report.n_reps} replications"]
    for r in [TABLE_HEADER, *rows]:
        cells = [str(r[0]).ljust(widths[0]), str(r[1]).ljust(widths[1])]
        cells += [str(v).rjust(widths[i]) for i, v in enumerate(r[2:], start=2)]
        lines.append("  ".join(cells).rstrip())
    return buf.getvalue(), "\n".join(lines) + "\n"


AUDIT_HEADER = ("rep", "data_seed", "sampler_seed", "parameter", "true", "estimate",
                "lower95", "upper95", "covered")


def write_audit(report: ReplicationReport, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(AUDIT_HEADER)
    for r in report.rows:
        w.writerow([r.rep, r.data_seed, r.sampler_seed, r.parameter, repr(r.true_value),
                    repr(r.estimate), repr(r.lower95), repr(r.upper95), int(r.covered)])


def read_audit(fh) -> list:
    rows = []
    for rec in csv.DictReader(fh):
        rows.append(ReplicationRow(int(rec["rep"]), int(rec["data_seed"]),
                                   int(rec["sampler_seed"]), rec["parameter"],
                                   float(rec["true"]), float(rec["estimate"]),
                                   float(rec["lower95"]), float(rec["upper95"])))
    return rows
