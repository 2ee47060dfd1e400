"""Command-line front end: ``bscap {pdf,capacity,correlation,mc,validate,sweep}``.

Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import validate as validation
from .capacity import (awgn_capacity, capacity_high_snr_fixed_tx, capacity_low_snr,
                       capacity_quadrature)
from .copulas import Comonotone, Copula, Countermonotone
from .dependence import bound_report, pearson_from_copula, rho_lower, rho_upper
from .errors import ConvergenceError, DomainError, UnsupportedVariantError
from .montecarlo import SimSpec, default_threads, estimate_capacity, estimate_correlation, estimate_moment
from .snr import LinearRho, SnrModel, parse_dependence, pdf
from .units import db_to_linear, linear_to_db

EXIT_OK, EXIT_VALIDATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

CAPACITY_COLUMNS = ["snr_hat_db", "m", "dep_tag", "rho_induced", "method", "capacity_bps_hz", "err"]
AWGN_COLUMN = "capacity_over_awgn"
CORRELATION_COLUMNS = ["m", "dep_tag", "rho", "method"]
METHODS = ("quadrature", "asymptotic-high", "asymptotic-low", "mc")

log = logging.getLogger("bscap")


class UsageError(Exception):
    pass


def fmt(x):
    """Fixed 12-significant-digit rendering used for every numeric CSV cell."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return "%.12g" % x


def write_csv(rows, columns, output):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def db_grid(start, stop, step):
    if not step > 0:
        raise UsageError("SNR step must be positive")
    if stop < start:
        raise UsageError("SNR stop must not be below start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    # computed from the index so no rounding drift accumulates
    return [float("%.12g" % (start + k * step)) for k in range(n)]


# ---------------------------------------------------------------------------
# sweep specification
# ---------------------------------------------------------------------------

@dataclass
class SweepSpec:
    snr_hat_db: list
    m_list: list
    dependence_list: list
    methods: list = field(default_factory=lambda: ["quadrature"])
    mc: dict = field(default_factory=dict)
    output: str | None = None
    normalize_awgn: bool = False
    keep_going: bool = False

    def __post_init__(self):
        if not self.snr_hat_db:
            raise UsageError("empty SNR grid")
        if not self.m_list:
            raise UsageError("empty m list")
        if not self.dependence_list:
            raise UsageError("empty dependence list")
        if not self.methods:
            raise UsageError("empty method list")
        bad = [x for x in self.methods if x not in METHODS]
        if bad:
            raise UsageError(f"unknown methods {bad}; choose from {list(METHODS)}")
        for m in self.m_list:
            if not m > 0:
                raise UsageError(f"m must be positive, got {m}")
        for tag in self.dependence_list:
            try:
                parse_dependence(tag)
            except DomainError as exc:
                raise UsageError(str(exc)) from exc
        if "mc" in self.methods:
            for tag in self.dependence_list:
                if isinstance(parse_dependence(tag), LinearRho):
                    raise UsageError(f"Monte Carlo needs a copula, not {tag!r}")


def _grid_from_config(value):
    if isinstance(value, dict):
        return db_grid(float(value["start"]), float(value["stop"]), float(value["step"]))
    return [float(v) for v in value]


def sweep_from_config(cfg) -> SweepSpec:
    try:
        return SweepSpec(
            snr_hat_db=_grid_from_config(cfg["snr_hat_db"]),
            m_list=[float(m) for m in cfg["m_list"]],
            dependence_list=list(cfg["dependence_list"]),
            methods=list(cfg.get("methods", ["quadrature"])),
            mc=dict(cfg.get("mc", {})),
            output=cfg.get("output"),
            normalize_awgn=bool(cfg.get("normalize_awgn", False)),
            keep_going=bool(cfg.get("keep_going", False)),
        )
    except KeyError as exc:
        raise UsageError(f"config is missing key {exc}") from exc


PRESETS = {
    "fig1a": {"command": "capacity", "snr_hat_db": {"start": -30, "stop": 45, "step": 5},
              "m_list": [2], "dependence_list": ["fgm:-1", "fgm:0", "fgm:1"],
              "methods": ["quadrature", "asymptotic-high", "asymptotic-low"]},
    "fig1b": {"command": "capacity", "snr_hat_db": {"start": -30, "stop": 30, "step": 5},
              "m_list": [0.5, 5], "dependence_list": ["fgm:-1", "fgm:1", "independent", "frank:-30", "frank:30"],
              "methods": ["quadrature"], "normalize_awgn": True},
    "fig1c": {"command": "correlation", "m_list": [0.5, 1, 1.5, 2, 3, 4, 5, 6, 7, 8, 9, 10],
              "dependence_list": ["fgm:1", "fgm:-1", "frank:30", "frank:-30"], "bounds": True},
}


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def induced_rho(dep, m):
    if isinstance(dep, LinearRho):
        return dep.rho
    if isinstance(dep, (Comonotone, Countermonotone)):
        return bound_report(dep, m).rho
    return pearson_from_copula(dep, m).rho


def _capacity_point(db, m, tag, method, mc):
    dep = parse_dependence(tag)
    model = SnrModel.build(m, dep, snr_hat_db=db)
    rho = induced_rho(dep, m)
    if method == "quadrature":
        res = capacity_quadrature(model)
        value, err, name = res.value, res.err_estimate, res.method
    elif method == "asymptotic-high":
        res = capacity_high_snr_fixed_tx(model.snr_hat, m)
        value, err, name = res.value, 0.0, res.method
    elif method == "asymptotic-low":
        res = capacity_low_snr(model.snr_hat, m, rho)
        value, err, name = res.value, 0.0, res.method
    else:
        spec = SimSpec(model, int(mc.get("n_samples", 100_000)), seed=int(mc.get("seed", 0)),
                       n_streams=int(mc.get("n_streams", 1)))
        est = estimate_capacity(spec, threads=1)
        value, err, name = est.mean, est.std_error, "monte-carlo"
    return {"snr_hat_db": db, "m": m, "dep_tag": dep.tag, "rho_induced": rho, "method": name,
            "capacity_bps_hz": value, "err": err}


def _error_row(db, m, tag, method, exc):
    return {"snr_hat_db": db, "m": m, "dep_tag": tag, "rho_induced": float("nan"), "method": method,
            "capacity_bps_hz": float("nan"), "err": f"error:{type(exc).__name__}"}


def run_capacity_sweep(spec: SweepSpec, threads=None):
    """Rows in sweep order (SNR outermost, then m, dependence, method); failures raise or mark."""
    points = [(db, m, tag, meth) for db in spec.snr_hat_db for m in spec.m_list
              for tag in spec.dependence_list for meth in spec.methods]
    # correlations are cached; computing them up front keeps worker threads free of duplicates
    for m in spec.m_list:
        for tag in spec.dependence_list:
            induced_rho(parse_dependence(tag), m)

    def work(p):
        try:
            return _capacity_point(*p, spec.mc), None
        except (ArithmeticError, DomainError, UnsupportedVariantError) as exc:
            return _error_row(*p, exc), exc

    threads = threads or default_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, points))
    else:
        results = [work(p) for p in points]
    rows, failures = [], []
    for (row, exc), p in zip(results, points):
        if exc is not None:
            failures.append((p, exc))
        rows.append(row)
    if spec.normalize_awgn:
        for row in rows:
            ref = awgn_capacity(db_to_linear(row["snr_hat_db"])).value
            row[AWGN_COLUMN] = row["capacity_bps_hz"] / ref
    return rows, failures


def run_correlation(m_list, dependence_list, bounds=True):
    rows = []
    for m in m_list:
        for tag in dependence_list:
            dep = parse_dependence(tag)
            if isinstance(dep, LinearRho):
                rows.append({"m": m, "dep_tag": dep.tag, "rho": dep.rho, "method": "linear"})
                continue
            rep = bound_report(dep, m) if not dep.has_density else pearson_from_copula(dep, m)
            rows.append({"m": m, "dep_tag": dep.tag, "rho": rep.rho, "method": rep.method})
        if bounds:
            rows.append({"m": m, "dep_tag": "bound:upper", "rho": rho_upper(m), "method": "closed-form"})
            rows.append({"m": m, "dep_tag": "bound:lower", "rho": rho_lower(m), "method": "closed-form"})
    return rows


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc


def _capacity_spec_from_args(args):
    if args.config:
        cfg = _load_config(args.config)
        spec = sweep_from_config(cfg)
        if args.output:
            spec.output = args.output
        spec.keep_going = spec.keep_going or args.keep_going
        spec.normalize_awgn = spec.normalize_awgn or args.normalize_awgn
        return spec
    if args.snr_hat_db is not None:
        grid = [float(x) for x in args.snr_hat_db]
    else:
        grid = db_grid(args.snr_db_start, args.snr_db_stop, args.snr_db_step)
    methods = [x for item in args.methods for x in item.split(",") if x]
    mc = {"n_samples": args.mc_samples, "seed": args.seed, "n_streams": args.n_streams}
    return SweepSpec(grid, list(args.m or []), list(args.dep or []), methods, mc, args.output,
                     args.normalize_awgn, args.keep_going)


def _emit_capacity(spec, threads):
    rows, failures = run_capacity_sweep(spec, threads)
    columns = CAPACITY_COLUMNS + ([AWGN_COLUMN] if spec.normalize_awgn else [])
    for (db, m, tag, meth), exc in failures:
        log.error("capacity failed at snr_hat_db=%g m=%g dep=%s method=%s: %s", db, m, tag, meth, exc)
    if failures and not spec.keep_going:
        return EXIT_NUMERIC
    write_csv(rows, columns, spec.output)
    return EXIT_OK


def cmd_capacity(args):
    return _emit_capacity(_capacity_spec_from_args(args), args.threads)


def cmd_correlation(args):
    if args.config:
        cfg = _load_config(args.config)
        m_list = [float(m) for m in cfg.get("m_list", [])]
        deps = list(cfg.get("dependence_list", []))
        bounds = bool(cfg.get("bounds", True))
        output = args.output or cfg.get("output")
    else:
        if args.m_grid:
            start, stop, step = args.m_grid
            m_list = db_grid(start, stop, step)
        else:
            m_list = list(args.m or [])
        deps, bounds, output = list(args.dep or []), not args.no_bounds, args.output
    if not m_list:
        raise UsageError("empty m list")
    if not deps and not bounds:
        raise UsageError("empty dependence list")
    for m in m_list:
        if not m > 0:
            raise UsageError(f"m must be positive, got {m}")
    write_csv(run_correlation(m_list, deps, bounds), CORRELATION_COLUMNS, output)
    return EXIT_OK


def cmd_pdf(args):
    model = SnrModel.build(args.m, args.dep, snr_hat_db=args.snr_hat_db)
    if args.gamma:
        gam = np.array([float(g) for g in args.gamma])
    else:
        if args.gamma_max is None:
            raise UsageError("give --gamma values or a --gamma-max grid")
        lo = args.gamma_min
        if args.grid == "log":
            if not lo > 0:
                raise UsageError("a log grid needs --gamma-min > 0")
            gam = np.logspace(math.log10(lo), math.log10(args.gamma_max), args.points)
        else:
            gam = np.linspace(lo, args.gamma_max, args.points)
    if np.any(gam < 0):
        raise UsageError("gamma values must be non-negative")
    vals = np.atleast_1d(pdf(gam, model, method=args.method))
    rows = [{"gamma": g, "pdf": v} for g, v in zip(gam, vals)]
    write_csv(rows, ["gamma", "pdf"], args.output)
    return EXIT_OK


def cmd_mc(args):
    model = SnrModel.build(args.m, args.dep, snr_hat_db=args.snr_hat_db)
    spec = SimSpec(model, args.n_samples, seed=args.seed, n_streams=args.n_streams)
    threads = args.threads
    if args.quantity == "capacity":
        est = estimate_capacity(spec, threads)
    elif args.quantity == "correlation":
        est = estimate_correlation(spec, threads)
    else:
        est = estimate_moment(spec, args.order, threads)
    quantity = args.quantity if args.quantity != "moment" else f"moment:{args.order:g}"
    row = {"snr_hat_db": args.snr_hat_db, "m": args.m, "dep_tag": model.dependence.tag,
           "quantity": quantity, "mean": est.mean, "std_error": est.std_error, "n": est.n}
    write_csv([row], ["snr_hat_db", "m", "dep_tag", "quantity", "mean", "std_error", "n"], args.output)
    return EXIT_OK


def cmd_validate(args):
    report = validation.run(quick=args.quick, seed=args.seed)
    sys.stderr.write(validation.to_text(report))
    text = validation.to_json(report)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_sweep(args):
    if (args.config is None) == (args.preset is None):
        raise UsageError("give exactly one of --config or --preset")
    cfg = dict(PRESETS[args.preset]) if args.preset else _load_config(args.config)
    if args.output:
        cfg["output"] = args.output
    kind = cfg.get("command", "capacity")
    if kind == "capacity":
        spec = sweep_from_config(cfg)
        spec.keep_going = spec.keep_going or args.keep_going
        return _emit_capacity(spec, args.threads)
    if kind == "correlation":
        m_list = [float(m) for m in cfg.get("m_list", [])]
        if not m_list:
            raise UsageError("empty m list")
        rows = run_correlation(m_list, list(cfg.get("dependence_list", [])), bool(cfg.get("bounds", True)))
        write_csv(rows, CORRELATION_COLUMNS, cfg.get("output"))
        return EXIT_OK
    raise UsageError(f"unknown sweep command {kind!r}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="bscap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, threads=True):
        sp.add_argument("-o", "--output", help="output file (default stdout)")
        if threads:
            sp.add_argument("--threads", type=_positive_int, default=None,
                            help="worker threads (default: $BSCAP_THREADS or all cores)")

    sp = sub.add_parser("pdf", help="density of the reader SNR on a grid")
    sp.add_argument("--dep", required=True, help="dependence tag, e.g. fgm:0.5, frank:-30, linear:0.3")
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--snr-hat-db", type=float, required=True)
    sp.add_argument("--gamma", nargs="+", help="explicit gamma values (linear scale)")
    sp.add_argument("--gamma-min", type=float, default=0.0)
    sp.add_argument("--gamma-max", type=float)
    sp.add_argument("--points", type=_positive_int, default=201)
    sp.add_argument("--grid", choices=("lin", "log"), default="lin")
    sp.add_argument("--method", choices=("auto", "general", "closed"), default="auto")
    common(sp, threads=False)
    sp.set_defaults(func=cmd_pdf)

    sp = sub.add_parser("capacity", help="average capacity sweep")
    sp.add_argument("--config", help="JSON sweep specification")
    sp.add_argument("--snr-hat-db", nargs="+", help="explicit SNR values in dB")
    sp.add_argument("--snr-db-start", type=float, default=-30.0)
    sp.add_argument("--snr-db-stop", type=float, default=45.0)
    sp.add_argument("--snr-db-step", type=float, default=5.0)
    sp.add_argument("--m", type=float, nargs="+")
    sp.add_argument("--dep", nargs="+")
    sp.add_argument("--methods", nargs="+", default=["quadrature"],
                    help="any of quadrature, asymptotic-high, asymptotic-low, mc")
    sp.add_argument("--mc-samples", type=_positive_int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-streams", type=_positive_int, default=1)
    sp.add_argument("--normalize-awgn", action="store_true",
                    help="append the ratio to the AWGN capacity log2(1 + snr_hat)")
    sp.add_argument("--keep-going", action="store_true", help="mark failed rows and exit 0")
    common(sp)
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("correlation", help="copula-induced Pearson correlation vs m")
    sp.add_argument("--config", help="JSON specification")
    sp.add_argument("--m", type=float, nargs="+")
    sp.add_argument("--m-grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"))
    sp.add_argument("--dep", nargs="+")
    sp.add_argument("--no-bounds", action="store_true", help="omit the bound:upper/bound:lower rows")
    common(sp, threads=False)
    sp.set_defaults(func=cmd_correlation)

    sp = sub.add_parser("mc", help="Monte Carlo estimate for one configuration")
    sp.add_argument("--dep", required=True)
    sp.add_argument("--m", type=float, required=True)
    sp.add_argument("--snr-hat-db", type=float, default=0.0)
    sp.add_argument("--n-samples", type=_positive_int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-streams", type=_positive_int, default=1)
    sp.add_argument("--quantity", choices=("capacity", "correlation", "moment"), default="capacity")
    sp.add_argument("--order", type=float, default=1.0, help="moment order for --quantity moment")
    common(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("validate", help="run the cross-check suite")
    sp.add_argument("--quick", action="store_true", help="skip the Monte Carlo checks")
    sp.add_argument("--seed", type=int, default=validation.DEFAULT_SEED)
    common(sp, threads=False)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("sweep", help="run a JSON sweep file or a built-in figure preset")
    sp.add_argument("--config")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--keep-going", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError, UnsupportedVariantError) as exc:
        sys.stderr.write(f"bscap: error: {exc}\n")
        return EXIT_USAGE
    except (ConvergenceError, ArithmeticError) as exc:
        sys.stderr.write(f"bscap: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
