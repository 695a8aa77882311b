"""Command-line front end producing CSV/JSON data for plots.

Exit codes: 0 success, 2 configuration error, 3 numerical anomaly, 4 I/O error.
"""
import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, fields

import numpy as np

from . import experiments as ex
from .confseq import confset_2d
from .errors import ConvergenceError, DomainError, NumericalAnomaly
from .families import FamilyKind, SuffStats, cumulative_stats

EXIT_OK, EXIT_CONFIG, EXIT_ANOMALY, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    family: str = "Bernoulli"
    hyper: float = None
    mixture: str = "continuous"
    param: list = None
    n: int = 200
    delta: float = 0.05
    c: float = 1.0
    reps: int = 1
    seed: int = 0
    baselines: list = field(default_factory=list)
    out: str = None
    format: str = None
    threads: int = None
    # changepoint
    sigma0: float = 1.0
    sigma1: float = 1.0
    t_star: int = 50
    horizon: int = 100
    scan: str = "full"
    # set2d
    box: list = field(default_factory=lambda: [-2.0, 4.0, 0.1, 4.0])
    resolution: list = field(default_factory=lambda: [1024, 1024])
    # tune-c
    n0s: list = field(default_factory=lambda: [50, 100, 200])
    # bandit-demo
    dim: int = 3

    def validate(self):
        if not 0 < self.delta <= 1:
            raise ConfigError(f"--delta must be in (0, 1], got {self.delta}")
        if not self.c > 0:
            raise ConfigError(f"--c must be positive, got {self.c}")
        if self.reps < 1:
            raise ConfigError(f"--reps must be at least 1, got {self.reps}")
        if self.n < 0:
            raise ConfigError(f"--n must be nonnegative, got {self.n}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {self.format!r}")
        unknown = set(self.baselines) - set(ex.BASELINES)
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}; choose from {list(ex.BASELINES)}")
        if len(self.box) != 4 or len(self.resolution) != 2:
            raise ConfigError("--box needs mu_lo,mu_hi,sigma_lo,sigma_hi and --resolution rows,cols")
        return self

    def kind(self):
        name = self.family
        hyper = self.hyper
        if hyper is None:
            hyper = {"GaussianMean": 1.0, "Gamma": 1.0, "Weibull": 1.0}.get(name, 0.0)
        try:
            return FamilyKind(name, hyper, self.mixture)
        except (ValueError, DomainError) as exc:
            raise ConfigError(str(exc)) from exc

    def true_param(self, kind):
        defaults = {
            "GaussianMean": [0.0], "GaussianVariance": [1.0], "Bernoulli": [0.5], "Exponential": [1.0],
            "Gamma": [1.0], "Weibull": [1.0], "Pareto": [1.0], "Poisson": [1.0], "ChiSquare": [5.0],
            "Gaussian2D": [1.0, 1.0],
        }
        p = self.param if self.param else defaults[kind.name]
        if len(p) != kind.dim:
            raise ConfigError(f"{kind.name} takes {kind.dim} parameter value(s), got {p}")
        p = tuple(float(v) for v in p) if kind.dim == 2 else float(p[0])
        try:
            kind.check_param(p)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        return p


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="JSON file with RunConfig fields; flags override it")
    a("--family", help="family name, e.g. Bernoulli, GaussianMean, Gaussian2D")
    a("--hyper", type=float, help="fixed hyper-parameter (sigma, mu or shape k)")
    a("--mixture", choices=["continuous", "discrete"], help="ChiSquare mixture variant")
    a("--param", type=_floats, help="true parameter(s), comma separated")
    a("--n", type=int, help="maximum sample size")
    a("--delta", type=float)
    a("--c", type=float, help="regularisation")
    a("--reps", type=int, help="number of replicates")
    a("--seed", type=int)
    a("--baselines", type=_names, help="comma separated: " + ",".join(ex.BASELINES))
    a("--out", help="output path (default stdout)")
    a("--format", choices=["csv", "json"])
    a("--threads", type=int, help="worker threads (default: up to 8)")
    a("--sigma0", type=float)
    a("--sigma1", type=float)
    a("--t-star", dest="t_star", type=int)
    a("--horizon", type=int)
    a("--scan", help="'full' or a geometric ratio such as 1.1")
    a("--box", type=_floats, help="mu_lo,mu_hi,sigma_lo,sigma_hi")
    a("--resolution", type=_ints, help="rows,cols")
    a("--n0s", type=_ints, help="sample sizes for tune-c")
    a("--dim", type=int, help="dimension for bandit-demo")

    parser = argparse.ArgumentParser(prog="bregcs", description="Time-uniform Bregman confidence sequences.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("envelope", "per-n confidence envelopes (CSV)"),
        ("coverage", "Monte Carlo time-uniform coverage report (JSON)"),
        ("changepoint", "GLR detection times for a Gaussian variance change (CSV)"),
        ("set2d", "Gaussian (mu, sigma) confidence set on a grid (CSV + JSON sidecar)"),
        ("tune-c", "width-minimising regularisation per sample size (CSV)"),
        ("bandit-demo", "linear bandit ellipsoid radii per round (CSV)"),
    ]:
        sub.add_parser(name, parents=[common], help=text)
    return parser


def load_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"cannot parse {args.config}: {exc}") from exc
        known = {f.name for f in fields(RunConfig)}
        bad = set(data) - known
        if bad:
            raise ConfigError(f"unknown config keys {sorted(bad)}")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    if isinstance(data.get("param"), (int, float)):
        data["param"] = [data["param"]]
    return RunConfig(**data).validate()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(cfg, header, rows, default="csv"):
    fmt = cfg.format or default
    if fmt == "json":
        text = json.dumps([dict(zip(header, [_jsonable(v) for v in row])) for row in rows], indent=1) + "\n"
    else:
        text = _csv_text(header, rows)
    _write(cfg.out, text)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_envelope(cfg):
    kind = cfg.kind()
    rows = ex.envelope_study(kind, cfg.true_param(kind), max(cfg.n, 1), cfg.delta, cfg.c, cfg.reps, cfg.seed,
                             cfg.baselines, cfg.threads)
    _emit(cfg, ["method", "rep", "n", "lower", "upper", "estimate"], rows)


def cmd_coverage(cfg):
    kind = cfg.kind()
    p = cfg.true_param(kind)
    grid = None
    if kind.dim == 2:
        b = cfg.box
        grid = (((b[0], b[1]), (b[2], b[3])), tuple(cfg.resolution))
    rep = ex.coverage_study(kind, p, max(cfg.n, 1), cfg.delta, cfg.c, cfg.reps, cfg.seed, grid, cfg.threads)
    if (cfg.format or "json") == "csv":
        _write(cfg.out, _csv_text(list(rep), [list(rep.values())]))
    else:
        _write(cfg.out, json.dumps(rep, indent=1) + "\n")


def cmd_changepoint(cfg):
    scan = cfg.scan if cfg.scan == "full" else float(cfg.scan)
    try:
        rows = ex.changepoint_study(cfg.sigma0, cfg.sigma1, cfg.t_star, cfg.horizon, cfg.delta, cfg.c, cfg.reps,
                                    cfg.seed, scan, threads=cfg.threads)
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc
    _emit(cfg, ["rep", "detection_time", "detected"], rows)


def cmd_set2d(cfg):
    cfg.family = "Gaussian2D"
    kind = cfg.kind()
    p = cfg.true_param(kind)
    xs = ex.sample(kind, p, cfg.n, ex.rep_rng(cfg.seed, 0))
    stats = SuffStats.from_array(cumulative_stats(kind, xs)[-1]) if cfg.n > 0 else SuffStats()
    b = cfg.box
    box = ((b[0], b[1]), (b[2], b[3]))
    try:
        cs = confset_2d(stats, cfg.c, cfg.delta, box, tuple(cfg.resolution))
    except (ValueError, DomainError) as exc:
        raise ConfigError(str(exc)) from exc
    rows_, cols_ = cs.resolution
    ii, jj = np.meshgrid(np.arange(rows_), np.arange(cols_), indexing="ij")
    rows = zip(ii.ravel(), jj.ravel(), cs.mu[jj.ravel()], cs.sigma[ii.ravel()], cs.membership.ravel().astype(int))
    _emit(cfg, ["row", "col", "theta1", "theta2", "member"], rows)
    if cfg.out:
        side = {"box": [list(box[0]), list(box[1])], "resolution": [rows_, cols_], "n": cfg.n,
                "delta": cfg.delta, "c": cfg.c, "seed": cfg.seed, "touches_edge": cs.touches_edge,
                "theta1": "mu", "theta2": "sigma"}
        _write(cfg.out + ".json", json.dumps(side, indent=1) + "\n")


def cmd_tune_c(cfg):
    kind = cfg.kind()
    rows = ex.tune_c_study(kind, cfg.true_param(kind), tuple(cfg.n0s), cfg.delta, cfg.reps, cfg.seed,
                           threads=cfg.threads)
    _emit(cfg, ["n0", "c_star", "width"], rows)


def cmd_bandit_demo(cfg):
    if cfg.dim < 1:
        raise ConfigError(f"--dim must be positive, got {cfg.dim}")
    rows = ex.bandit_demo(cfg.dim, max(cfg.n, 1), cfg.delta, cfg.seed)
    _emit(cfg, ["n", "info_gain", "radius_sq_paper", "radius_ay", "covered"], rows)


COMMANDS = {
    "envelope": cmd_envelope, "coverage": cmd_coverage, "changepoint": cmd_changepoint,
    "set2d": cmd_set2d, "tune-c": cmd_tune_c, "bandit-demo": cmd_bandit_demo,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        COMMANDS[args.command](cfg)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalAnomaly, ConvergenceError) as exc:
        print(f"numerical anomaly: {exc}", file=sys.stderr)
        return EXIT_ANOMALY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
