"""CSV ingestion, JSON report documents, and the command-line surface.

Exit codes: 0 success, 1 usage error (bad flags, unknown subcommand),
2 numeric or model error (singular input, breached guard, bad config).
Reports are JSON documents with schema_version "1"; the Marchenko-Pastur
grid can also be emitted as CSV for external plotting.  The seed resolves
from --seed, then the COVSHRINK_SEED environment variable, then 0.
"""

import argparse
import csv
import datetime
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, CovshrinkError, CsvFormatError
from .estimators import (
    MODE_CENTERED,
    MODE_UNCENTERED,
    dp_equivariant,
    sample_covariance,
    scatter_matrix,
    stein_triangular,
    tsai_estimator,
)
from .hdtest import decomposite_t2, hotelling_t2, power_simulation
from .loss_risk import min_risk, monte_carlo_risk
from .rmt import MPModel, mp_cdf, mp_density
from .sim import EXPERIMENTS, ExperimentConfig, PopulationModel, make_sigma

SCHEMA_VERSION = "1"
ENV_SEED = "COVSHRINK_SEED"


class _UsageError(Exception):
    """Flag combinations argparse cannot catch; mapped to exit code 1."""


def read_csv(path: str, delimiter: str = ",", header: bool = False) -> np.ndarray:
    """Parse a rectangular numeric CSV into an (n, p) observation matrix.

    Rows are observations, columns variables.  Errors carry the 1-based
    physical line (and column for a bad cell).  Fully empty lines are
    skipped; a file without data rows is an error.
    """
    try:
        with open(path, newline="") as fh:
            raw = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise CsvFormatError(f"cannot read {path}: {exc}") from exc
    numbered = [(i, row) for i, row in enumerate(raw, start=1) if row and any(c.strip() for c in row)]
    if header and numbered:
        numbered = numbered[1:]
    if not numbered:
        raise CsvFormatError(f"{path}: no data rows")
    width = len(numbered[0][1])
    data = np.empty((len(numbered), width))
    for out_i, (lineno, row) in enumerate(numbered):
        if len(row) != width:
            raise CsvFormatError(
                f"{path}: line {lineno} has {len(row)} fields, expected {width}",
                line=lineno,
            )
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise CsvFormatError(
                    f"{path}: non-numeric value {cell.strip()!r} at line {lineno}, column {j + 1}",
                    line=lineno,
                    column=j + 1,
                ) from None
            if not math.isfinite(value):
                raise CsvFormatError(
                    f"{path}: non-finite value at line {lineno}, column {j + 1}",
                    line=lineno,
                    column=j + 1,
                )
            data[out_i, j] = value
    return data


@dataclass(frozen=True)
class ReportDocument:
    """Envelope for every CLI result; round-trips losslessly through JSON."""

    schema_version: str
    command: list
    config: dict
    results: dict
    seed: int
    timestamps: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "results": self.results,
            "seed": self.seed,
            "timestamps": self.timestamps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        d = json.loads(text)
        return cls(
            schema_version=d["schema_version"],
            command=d["command"],
            config=d["config"],
            results=d["results"],
            seed=d["seed"],
            timestamps=d["timestamps"],
        )


def matrix_payload(m: np.ndarray) -> dict:
    """Row-major matrix serialization with explicit dimensions."""
    a = np.asarray(m, dtype=float)
    return {"rows": int(a.shape[0]), "cols": int(a.shape[1]), "data": a.ravel().tolist()}


def parse_model(text: str, p: int) -> PopulationModel:
    """Parse identity | ar1:RHO | spiked:V1,V2,... into a population model."""
    name, _, rest = text.partition(":")
    if name == "identity":
        return PopulationModel(variant="identity", p=p)
    if name == "ar1":
        try:
            rho = float(rest)
        except ValueError:
            raise ConfigError(f"ar1 needs a numeric correlation, got {text!r}") from None
        return PopulationModel(variant="ar1", p=p, rho=rho)
    if name == "spiked":
        try:
            spikes = tuple(float(v) for v in rest.split(",") if v)
        except ValueError:
            raise ConfigError(f"spiked needs numeric values, got {text!r}") from None
        return PopulationModel(variant="spiked", p=p, spikes=spikes)
    raise ConfigError(f"unknown population model {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covshrink",
        description="Equivariant covariance estimation, spectral diagnostics, and mean tests.",
    )
    parser.add_argument("--seed", type=int, default=None,
                        help=f"master seed (default: ${ENV_SEED} or 0)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for replicate loops (results independent of this)")
    parser.add_argument("--output", default=None, help="write the report here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (csv only for the mp grid; default json)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    est = sub.add_parser("estimate", help="estimate a covariance matrix from CSV data")
    est.add_argument("--input", required=True)
    est.add_argument("--method", choices=("sample", "stein", "dp", "tsai"), default="tsai")
    est.add_argument("--n-convention", choices=("uncentered", "centered"), default="centered",
                     help="divisor convention: n on raw cross products, or n-1 after centering")
    est.add_argument("--delimiter", default=",")
    est.add_argument("--header", action="store_true")

    tt = sub.add_parser("ttest", help="one-sample mean test")
    tt.add_argument("--input", required=True)
    tt.add_argument("--method", choices=("hotelling", "decomposite"), default="decomposite")
    tt.add_argument("--delimiter", default=",")
    tt.add_argument("--header", action="store_true")

    mp = sub.add_parser("mp", help="Marchenko-Pastur density/CDF grid")
    mp.add_argument("--c", type=float, required=True, help="concentration ratio in (0, 1)")
    mp.add_argument("--points", type=int, default=101, help="grid size across the support")

    rk = sub.add_parser("risk", help="closed-form and Monte Carlo Stein-loss risks")
    rk.add_argument("--n", type=int, required=True)
    rk.add_argument("--p", type=int, required=True)
    rk.add_argument("--closed-form", action="store_true")
    rk.add_argument("--monte-carlo", action="store_true")
    rk.add_argument("--methods", default="sample,stein_triangular,dp_equivariant")
    rk.add_argument("--model", default="identity")
    rk.add_argument("--replicates", type=int, default=10000)

    si = sub.add_parser("simulate", help="run a desk-scale experiment")
    si.add_argument("--experiment", choices=tuple(EXPERIMENTS), required=True)
    si.add_argument("--n", type=int, required=True)
    si.add_argument("--p", type=int, required=True)
    si.add_argument("--replicates", type=int, default=30)
    si.add_argument("--model", default="identity")
    si.add_argument("--methods", default="")
    si.add_argument("--drop-rows", action="store_true",
                    help="omit per-replicate rows from the report")

    pw = sub.add_parser("power", help="rejection rate of a mean test under a mean shift")
    pw.add_argument("--n", type=int, required=True)
    pw.add_argument("--p", type=int, required=True)
    pw.add_argument("--delta", required=True, help="comma-separated shift vector of length p")
    pw.add_argument("--alpha", type=float, default=0.05)
    pw.add_argument("--replicates", type=int, default=1000)
    pw.add_argument("--method", choices=("hotelling", "decomposite", "oracle"), default="oracle")
    pw.add_argument("--rate", choices=("hdim", "classical"), default="hdim")
    pw.add_argument("--model", default="identity")
    return parser


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    return 0


def _cmd_estimate(args, seed):
    data = read_csv(args.input, delimiter=args.delimiter, header=args.header)
    centered = args.n_convention == "centered"
    mode = MODE_CENTERED if centered else MODE_UNCENTERED
    if args.method == "sample":
        est = sample_covariance(data, mode=mode)
    elif args.method == "stein":
        est = stein_triangular(scatter_matrix(data, centered=centered))
    elif args.method == "dp":
        est = dp_equivariant(scatter_matrix(data, centered=centered))
    else:
        est = tsai_estimator(sample_covariance(data, mode=mode))
    results = {
        "method": est.method,
        "n": est.n,
        "p": est.p,
        "divisor": est.divisor,
        "target": est.target,
        "matrix": matrix_payload(est.matrix),
    }
    if est.shrinkage is not None:
        results["shrinkage"] = {
            "sample_eigenvalues": est.shrinkage.sample_eigenvalues.tolist(),
            "shrunk_eigenvalues": est.shrinkage.shrunk_eigenvalues.tolist(),
            "denominators": est.shrinkage.denominators.tolist(),
        }
    config = {"input": args.input, "method": args.method, "n_convention": args.n_convention,
              "header": args.header}
    return config, results


def _cmd_ttest(args, seed):
    data = read_csv(args.input, delimiter=args.delimiter, header=args.header)
    res = hotelling_t2(data) if args.method == "hotelling" else decomposite_t2(data)
    config = {"input": args.input, "method": args.method, "header": args.header}
    results = {"statistic": res.statistic, "dof": res.dof, "pvalue": res.pvalue,
               "method": res.method, "n": res.n, "p": res.p}
    return config, results


def _mp_table(args):
    model = MPModel(args.c)
    if args.points < 2:
        raise ConfigError(f"need at least 2 grid points, got {args.points}")
    xs = np.linspace(model.lambda_minus, model.lambda_plus, args.points)
    return model, [
        {"x": float(x), "density": float(mp_density(float(x), model)),
         "cdf": mp_cdf(float(x), model)}
        for x in xs
    ]


def _cmd_mp(args, seed):
    model, table = _mp_table(args)
    config = {"c": args.c, "points": args.points}
    results = {"lambda_minus": model.lambda_minus, "lambda_plus": model.lambda_plus,
               "table": table}
    return config, results


def _cmd_risk(args, seed, threads):
    closed = args.closed_form or not args.monte_carlo
    config = {"n": args.n, "p": args.p, "closed_form": closed,
              "monte_carlo": args.monte_carlo, "model": args.model,
              "replicates": args.replicates}
    results = {}
    if closed:
        results["closed_form"] = {kind: min_risk(kind, args.n, args.p)
                                  for kind in ("ml", "stein", "dp")}
    if args.monte_carlo:
        sigma = make_sigma(parse_model(args.model, args.p))
        mc = {}
        for method in [m for m in args.methods.split(",") if m]:
            est = monte_carlo_risk(method, sigma, args.n, args.replicates, seed,
                                   threads=threads)
            mc[method] = {"mean_loss": est.mean_loss, "std_error": est.std_error,
                          "replicates": est.replicates, "failures": est.failures}
        results["monte_carlo"] = mc
    return config, results


def _cmd_simulate(args, seed, threads):
    model = parse_model(args.model, args.p)
    config_obj = ExperimentConfig(
        model=model,
        n=args.n,
        replicates=args.replicates,
        seed=seed,
        methods=tuple(m for m in args.methods.split(",") if m),
        keep_rows=not args.drop_rows,
    )
    report = EXPERIMENTS[args.experiment](config_obj, threads=threads)
    config = {"experiment": args.experiment, **config_obj.to_dict()}
    return config, report.to_dict()


def _cmd_power(args, seed, threads):
    delta = np.array([float(v) for v in args.delta.split(",") if v], dtype=float)
    if delta.shape[0] != args.p:
        raise ConfigError(f"delta has {delta.shape[0]} entries, expected p={args.p}")
    sigma = make_sigma(parse_model(args.model, args.p))
    rep = power_simulation(args.n, args.p, sigma, delta, alpha=args.alpha,
                           replicates=args.replicates, seed=seed,
                           method=args.method, rate=args.rate, threads=threads)
    config = {"n": args.n, "p": args.p, "delta": delta.tolist(), "alpha": args.alpha,
              "replicates": args.replicates, "method": args.method, "rate": args.rate,
              "model": args.model}
    results = {"rejection_rate": rep.rejection_rate, "std_error": rep.std_error,
               "replicates": rep.replicates, "failures": rep.failures,
               "critical_value": rep.critical_value, "alpha": rep.alpha,
               "method": rep.method, "rate": rep.rate, "n": rep.n, "p": rep.p}
    return config, results


def _render_csv(args, results) -> str:
    if args.subcommand != "mp":
        raise _UsageError("csv output is only available for the mp grid")
    lines = ["x,density,cdf"]
    for row in results["table"]:
        lines.append(f"{row['x']!r},{row['density']!r},{row['cdf']!r}")
    return "\n".join(lines) + "\n"


def run_cli(argv) -> int:
    """Parse argv, run the subcommand, write the report. Returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        # argparse signals usage problems with 2; the contract here is 1
        return 1 if code == 2 else code

    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    try:
        seed = _resolve_seed(args)
        threads = max(1, args.threads)
        if args.subcommand == "estimate":
            config, results = _cmd_estimate(args, seed)
        elif args.subcommand == "ttest":
            config, results = _cmd_ttest(args, seed)
        elif args.subcommand == "mp":
            config, results = _cmd_mp(args, seed)
        elif args.subcommand == "risk":
            config, results = _cmd_risk(args, seed, threads)
        elif args.subcommand == "simulate":
            config, results = _cmd_simulate(args, seed, threads)
        else:
            config, results = _cmd_power(args, seed, threads)

        fmt = args.format or ("csv" if args.subcommand == "mp" else "json")
        if fmt == "csv":
            text = _render_csv(args, results)
        else:
            doc = ReportDocument(
                schema_version=SCHEMA_VERSION,
                command=list(argv),
                config=config,
                results=results,
                seed=seed,
                timestamps={
                    "started": started,
                    "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                },
            )
            text = doc.to_json()
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (CovshrinkError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
