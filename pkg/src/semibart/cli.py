"""Command-line interface: ``fit``, ``simulate``, ``replicate`` and ``curve``.

Numeric options may also come from a flat ``key=value`` file passed with
``--config`` (keys are option names without the leading dashes).  Explicit
flags win over the config file, which wins over built-in defaults.

Outputs are written to temporary files and renamed into place only after
every output of the command is ready, so a failing command leaves the
requested paths untouched.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .curve import CausalCurveQuery, causal_curve, format_number, parse_grid
from .data import BINARY, CONTINUOUS, LinearTermSpec, load_csv, write_csv
from .draws import summarize, write_draws_csv, write_summary_csv
from .exceptions import SemiBartError
from .harness import ReplicationPlan, report_table, run, write_audit
from .sampler import SamplerConfig, fit
from .scenarios import SCENARIOS, ScenarioSpec, generate


class CLIError(SemiBartError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


# option -> (type, default) for options that a config file may set
_FIT_OPTS = {
    "m": (int, 50),
    "iters": (int, 10000),
    "burn": (int, 2500),
    "k": (float, 2.0),
    "nu": (float, 3.0),
    "q": (float, 0.9),
    "sigma-psi": (float, 16.0),
    "seed": (int, 0),
}
_SIM_OPTS = {"n": (int, 500), "seed": (int, 0)}
_REP_OPTS = {
    "n": (int, 500),
    "reps": (int, 100),
    "iters": (int, 2000),
    "burn": (int, 500),
    "m": (int, 50),
    "k": (float, 2.0),
    "nu": (float, 3.0),
    "q": (float, 0.9),
    "sigma-psi": (float, 16.0),
    "workers": (int, 1),
    "seed": (int, 0),
}
_CURVE_OPTS = {}

_HELP = {
    "m": "number of trees",
    "iters": "total MCMC iterations",
    "burn": "burn-in iterations (not stored)",
    "k": "leaf prior scale k",
    "nu": "prior degrees of freedom for sigma2",
    "q": "calibration quantile for the sigma2 prior scale",
    "sigma-psi": "prior variance of each psi component",
    "seed": "RNG seed",
    "n": "sample size",
    "reps": "number of replications",
    "workers": "parallel worker processes",
}


def _add_options(p, opts):
    for name, (typ, default) in opts.items():
        p.add_argument(f"--{name}", type=typ, default=None,
                       help=f"{_HELP[name]} (default {default})")
    p.add_argument("--config", help="key=value file with option defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semibart", description="Semi-parametric BART sampler and tools.")
    parser.add_argument("--version", action="version", version=f"semibart {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit the model to a CSV file")
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--outcome", required=True, help="outcome column name")
    p.add_argument("--terms", required=True, help="linear terms, e.g. a,a:x1,x1")
    p.add_argument("--treatment", help="treatment column (default: first column of first term)")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--binary", dest="kind", action="store_const", const=BINARY,
                      help="probit model for a 0/1 outcome")
    kind.add_argument("--continuous", dest="kind", action="store_const", const=CONTINUOUS,
                      help="Gaussian model even for a 0/1-valued outcome")
    _add_options(p, _FIT_OPTS)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_fit, opts=_FIT_OPTS)

    p = sub.add_parser("simulate", help="generate a simulation scenario dataset")
    p.add_argument("--scenario", required=True, type=str.lower, choices=SCENARIOS)
    _add_options(p, _SIM_OPTS)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_simulate, opts=_SIM_OPTS)

    p = sub.add_parser("replicate", help="run a replication study for a scenario")
    p.add_argument("--scenario", required=True, type=str.lower, choices=SCENARIOS)
    _add_options(p, _REP_OPTS)
    p.add_argument("--progress", action="store_true", help="report progress on stderr")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(handler=cmd_replicate, opts=_REP_OPTS)

    p = sub.add_parser("curve", help="probit causal curve p0 -> p1")
    p.add_argument("--p0", required=True, help="comma list or start:stop:step grid")
    p.add_argument("--psi1", required=True, type=float)
    p.add_argument("--psi2", type=float)
    p.add_argument("--modifier-values", help="comma list of effect-modifier values")
    p.add_argument("--out", default="-", help="output CSV path, or - for stdout")
    p.set_defaults(handler=cmd_curve, opts=_CURVE_OPTS)
    return parser


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def resolve_options(args) -> dict:
    """Merge flags, config file and defaults for the command's numeric options."""
    config = read_config(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(config) - set(args.opts))
    if unknown:
        raise CLIError(f"unknown config key {unknown[0]!r} for {args.command}")
    resolved = {}
    for name, (typ, default) in args.opts.items():
        flag = getattr(args, name.replace("-", "_"))
        if flag is not None:
            resolved[name] = flag
        elif name in config:
            try:
                resolved[name] = typ(config[name])
            except ValueError:
                raise CLIError(f"config value for {name!r} is not a valid "
                               f"{typ.__name__}: {config[name]!r}") from None
        else:
            resolved[name] = default
    return resolved


def write_outputs(out_dir, files: dict) -> None:
    """Write ``{name: text}`` into ``out_dir`` via temp files and renames."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CLIError(f"cannot create output directory {out}: {exc.strerror}") from None
    for name in files:
        if (out / name).is_dir():
            raise CLIError(f"cannot write {out / name}: it is a directory")
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise CLIError(f"cannot write outputs to {out}: {exc.strerror}") from None


def _sampler_config(o: dict, **extra) -> SamplerConfig:
    return SamplerConfig(m=o["m"], n_iter=o["iters"], n_burn=o["burn"], nu0=o["nu"],
                         q_cal=o["q"], k_scale=o["k"], sigma2_psi=o["sigma-psi"],
                         seed=o["seed"], **extra)


def cmd_fit(args, o) -> int:
    ds = load_csv(args.data, args.outcome, args.kind or "auto")
    spec = LinearTermSpec.parse(args.terms, ds.column_names)
    treatment = None if args.treatment is None else ds.column_index(args.treatment)
    draws = fit(ds, spec, _sampler_config(o), treatment=treatment)
    d, s = io.StringIO(), io.StringIO()
    write_draws_csv(draws, d)
    write_summary_csv(summarize(draws), s)
    write_outputs(args.out, {"draws.csv": d.getvalue(), "summary.csv": s.getvalue()})
    return 0


def meta_text(gd) -> str:
    truth = ",".join(format_number(v) if v == v else "NA" for v in gd.true_psi)
    return (f"scenario={gd.spec.id}\nn={gd.spec.n}\nseed={gd.spec.seed}\n"
            f"outcome={gd.dataset.outcome_kind}\nterms={gd.terms_text}\ntrue_psi={truth}\n")


def cmd_simulate(args, o) -> int:
    gd = generate(ScenarioSpec(args.scenario, o["n"], o["seed"]))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "data.csv"
        write_csv(gd.dataset, path)
        data = path.read_text(encoding="utf-8")
    write_outputs(args.out, {"data.csv": data, "meta.txt": meta_text(gd)})
    return 0


def cmd_replicate(args, o) -> int:
    plan = ReplicationPlan(scenario=ScenarioSpec(args.scenario, o["n"], 0), n_reps=o["reps"],
                           sampler_cfg=_sampler_config(o),
                           base_seed=o["seed"])

    def progress(done, total):
        print(f"replication {done}/{total}", file=sys.stderr, flush=True)

    report = run(plan, workers=o["workers"], progress=progress if args.progress else None)
    csv_text, txt = report_table(report)
    audit = io.StringIO()
    write_audit(report, audit)
    write_outputs(args.out, {"report.csv": csv_text, "report.txt": txt,
                             "audit.csv": audit.getvalue()})
    return 0


def _parse_values(text):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise CLIError(f"cannot parse value list {text!r}") from None


def cmd_curve(args, o) -> int:
    mods = None if args.modifier_values is None else _parse_values(args.modifier_values)
    q = CausalCurveQuery(parse_grid(args.p0), args.psi1, args.psi2, mods)
    lines = ["p0,modifier,p1"]
    for p0, v, p1 in causal_curve(q):
        mod = "" if v is None else format_number(v)
        lines.append(f"{format_number(p0)},{mod},{p1:.4f}")
    text = "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        target = Path(args.out)
        write_outputs(target.parent if str(target.parent) else ".", {target.name: text})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return args.handler(args, opts)
    except SemiBartError as exc:
        print(f"semibart {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"semibart {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
