"""Command-line front end: ``hawkestail {tail,table,diag,simulate}``.

Every option may also come from a JSON file passed with ``--config``; flags
given on the command line win over the file, and the file wins over the
built-in defaults.  The default worker-thread count is read from the
``HAWKESTAIL_THREADS`` environment variable.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field

from . import deviations as dev
from .cgf import DEFAULT_HORIZON, DEFAULT_STEP, cgf_context
from .errors import ConvergenceError, LatticeError, SingularSaddleError
from .importance import is_tail
from .kernel import kernel_from_config
from .simulator import HawkesModel, mc_tail, simulate_paths, write_paths_csv

THREADS_ENV = "HAWKESTAIL_THREADS"
PRESETS = {"exp": {"type": "exp", "alpha": 1.0, "beta": 2.0},
           "powerlaw": {"type": "powerlaw", "c": 1.0, "p": 3.0}}
TABLE_TIMES = (5.0, 10.0, 25.0, 40.0, 50.0)
TABLE_LEVELS = (4.0, 5.0)
METHODS = ("is", "naive", "order1", "order2", "clt", "mdp")

DEFAULTS = {"nu": 1.0, "kernel": "exp", "method": "order2", "n_paths": 100_000,
            "seed": 20240101, "step": DEFAULT_STEP, "horizon": DEFAULT_HORIZON,
            "path_method": "cluster", "x4_weight": 4, "output": None,
            "t": None, "x": None, "y": None, "m": None, "threads": None,
            "alpha": None, "beta": None, "c": None, "p": None}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    nu: float
    kernel: dict
    method: str = "order2"
    t: float | None = None
    x: float | None = None
    y: float | None = None
    m: int | None = None
    n_paths: int = 100_000
    seed: int = 20240101
    step: float = DEFAULT_STEP
    horizon: float = DEFAULT_HORIZON
    threads: int = 1
    output: str | None = None
    path_method: str = "cluster"
    x4_weight: int = 4
    extra: dict = field(default_factory=dict)

    def model(self) -> HawkesModel:
        return HawkesModel(self.nu, kernel_from_config(self.kernel))


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return n


def _kernel_spec(merged: dict) -> dict:
    kern = merged["kernel"]
    if isinstance(kern, dict):
        spec = dict(kern)
    elif kern in PRESETS:
        spec = dict(PRESETS[kern])
    else:
        raise UsageError(f"unknown kernel {kern!r}; use one of {sorted(PRESETS)} or a config object")
    keys = ("alpha", "beta") if spec["type"] == "exp" else ("c", "p")
    for k in keys:
        if merged.get(k) is not None:
            spec[k] = float(merged[k])
    other = [k for k in ("alpha", "beta", "c", "p") if k not in keys and merged.get(k) is not None]
    if other:
        raise UsageError(f"options {other} do not apply to a {spec['type']} kernel")
    return spec


def build_config(ns: argparse.Namespace) -> RunConfig:
    file_cfg: dict = {}
    if getattr(ns, "config", None):
        with open(ns.config) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
    merged = dict(DEFAULTS)
    merged.update({k: v for k, v in file_cfg.items() if k in DEFAULTS})
    unknown = sorted(set(file_cfg) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {unknown}")
    merged.update({k: v for k, v in vars(ns).items() if k in DEFAULTS and v is not None})
    threads = merged["threads"] if merged["threads"] is not None else _default_threads()
    if int(threads) < 1:
        raise UsageError("--threads must be >= 1")
    return RunConfig(nu=float(merged["nu"]), kernel=_kernel_spec(merged), method=merged["method"],
                     t=merged["t"], x=merged["x"], y=merged["y"], m=merged["m"],
                     n_paths=int(merged["n_paths"]), seed=int(merged["seed"]),
                     step=float(merged["step"]), horizon=float(merged["horizon"]),
                     threads=int(threads), output=merged["output"],
                     path_method=merged["path_method"], x4_weight=int(merged["x4_weight"]))


def fmt3(v: float) -> str:
    """Three significant digits in scientific notation, e.g. 2.02E-03."""
    return f"{v:.2E}"


def _open_out(cfg: RunConfig):
    return open(cfg.output, "w", newline="") if cfg.output else None


def _emit(text: str, cfg: RunConfig) -> None:
    fh = _open_out(cfg)
    if fh is None:
        sys.stdout.write(text)
    else:
        with fh:
            fh.write(text)


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"method {cfg.method!r} needs --{' --'.join(missing)}")


def tail_value(cfg: RunConfig) -> tuple[float, float | None]:
    """(estimate, std_error or None) for a single tail query."""
    model = cfg.model()
    meth = cfg.method
    if meth not in METHODS:
        raise UsageError(f"unknown method {meth!r}")
    if meth in ("clt", "mdp"):
        _require(cfg, "t", "y")
        if meth == "clt":
            return dev.clt_tail(model, cfg.t, cfg.y), None
        return dev.mdp_tail(model, cfg.t, cfg.y, cfg.m), None
    _require(cfg, "t", "x")
    if meth == "naive":
        return mc_tail(model, cfg.t, cfg.x, cfg.n_paths, cfg.seed, cfg.threads)
    if meth == "is":
        est = is_tail(model, cfg.t, cfg.x, cfg.n_paths, cfg.seed, cfg.threads)
        return est.estimate, est.std_error
    order = 1 if meth == "order1" else 2
    return dev.ldp_tail(model, cfg.t, cfg.x, order, cfg.step, cfg.horizon, cfg.x4_weight), None


def cmd_tail(cfg: RunConfig) -> int:
    est, se = tail_value(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "t", "x", "y", "estimate", "std_error"])
    w.writerow([cfg.method, cfg.t, "" if cfg.x is None else cfg.x, "" if cfg.y is None else cfg.y,
                repr(float(est)), "" if se is None else repr(float(se))])
    _emit(buf.getvalue(), cfg)
    return 0


def table_columns(levels=TABLE_LEVELS) -> list[str]:
    cols = ["t"]
    for x in levels:
        tag = f"x{x:g}"
        cols += [f"is_{tag}", f"is_se_{tag}", f"order1_{tag}", f"order2_{tag}"]
    for x in levels:
        tag = f"x{x:g}"
        cols += [f"reldiff_order1_{tag}", f"reldiff_order2_{tag}"]
    return cols


def relative_diff(approx: str, ref: str) -> str:
    """(approx - ref) / ref from the printed values; empty when undefined."""
    if not approx or not ref or float(ref) == 0.0:
        return ""
    return repr((float(approx) - float(ref)) / float(ref))


def cmd_table(cfg: RunConfig) -> int:
    model = cfg.model()
    rows = []
    for t in TABLE_TIMES:
        row = {"t": f"{t:g}"}
        for x in TABLE_LEVELS:
            tag = f"x{x:g}"
            if cfg.n_paths > 0:
                est = is_tail(model, t, x, cfg.n_paths, cfg.seed, cfg.threads)
                row[f"is_{tag}"], row[f"is_se_{tag}"] = fmt3(est.estimate), fmt3(est.std_error)
            else:
                row[f"is_{tag}"] = row[f"is_se_{tag}"] = ""
            for order in (1, 2):
                v = dev.ldp_tail(model, t, x, order, cfg.step, cfg.horizon, cfg.x4_weight)
                if v < 0:
                    print(f"hawkestail: warning: order-{order} approximation is negative "
                          f"at t={t:g}, x={x:g}: {v:.3e}", file=sys.stderr)
                row[f"order{order}_{tag}"] = fmt3(v)
        for x in TABLE_LEVELS:
            tag = f"x{x:g}"
            for order in (1, 2):
                row[f"reldiff_order{order}_{tag}"] = relative_diff(row[f"order{order}_{tag}"], row[f"is_{tag}"])
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=table_columns(), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), cfg)
    for x in TABLE_LEVELS:
        ctx = dev.expansion(model, x, dev.DEFAULT_ORDER, cfg.step, cfg.horizon, cfg.x4_weight)
        print(f"x={x:g}: c0={ctx.c0:.4g} c1={ctx.c1:.4g}", file=sys.stderr)
    return 0


def diag_payload(cfg: RunConfig) -> dict:
    _require(cfg, "x")
    model = cfg.model()
    sd = dev.SaddleData.of(model, cfg.x)
    payload = {"model": {"nu": model.nu, "kernel": cfg.kernel},
               "saddle": asdict(sd),
               "cgf": cgf_context(sd.theta_star, model, cfg.step, cfg.horizon).summary()}
    try:
        payload["expansion"] = dev.expansion(model, cfg.x, dev.DEFAULT_ORDER, cfg.step,
                                             cfg.horizon, cfg.x4_weight).to_dict()
    except (SingularSaddleError, ConvergenceError) as exc:
        payload["expansion"] = {"error": str(exc)}
    return payload


def cmd_diag(cfg: RunConfig) -> int:
    _emit(json.dumps(diag_payload(cfg), indent=2) + "\n", cfg)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    _require(cfg, "t")
    if cfg.n_paths < 1:
        raise UsageError("--n-paths must be >= 1")
    if cfg.path_method not in ("cluster", "thinning"):
        raise UsageError("--path-method must be cluster or thinning")
    paths = simulate_paths(cfg.model(), cfg.t, cfg.n_paths, cfg.seed, cfg.path_method)
    buf = io.StringIO()
    write_paths_csv(paths, buf)
    _emit(buf.getvalue(), cfg)
    return 0


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--config", help="JSON file with any of the options below (flags win)")
    g.add_argument("--nu", type=float, help="baseline intensity (default 1)")
    g.add_argument("--kernel", help="preset: exp = 1*exp(-2t), powerlaw = 1/(1+t)^3 (default exp)")
    g.add_argument("--alpha", type=float, help="exp kernel amplitude")
    g.add_argument("--beta", type=float, help="exp kernel decay rate")
    g.add_argument("--c", type=float, help="power-law kernel amplitude")
    g.add_argument("--p", type=float, help="power-law kernel exponent (> 2)")
    n = p.add_argument_group("numerics")
    n.add_argument("--n-paths", dest="n_paths", type=int, help="Monte Carlo paths (default 100000)")
    n.add_argument("--seed", type=int, help="base seed (default 20240101)")
    n.add_argument("--step", type=float, help=f"Volterra grid step (default {DEFAULT_STEP})")
    n.add_argument("--horizon", type=float, help=f"Volterra grid horizon (default {DEFAULT_HORIZON:g})")
    n.add_argument("--x4-weight", dest="x4_weight", type=int,
                   help="weight of the x'*x''' term in x'''' (4 = exact; 3 reproduces published tables)")
    n.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hawkestail", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("tail", help="one tail probability by a chosen method")
    p.add_argument("--method", choices=METHODS, help="default order2")
    p.add_argument("--t", type=float, help="time horizon")
    p.add_argument("--x", type=float, help="level: estimates P(N_t >= x t)")
    p.add_argument("--y", type=float, help="standardised level for clt/mdp")
    p.add_argument("--m", type=int, help="mdp truncation order (omit for the cubic form)")
    _common(p)
    p = sub.add_parser("table", help="IS / order1 / order2 table over t in {5,10,25,40,50}, x in {4,5}")
    _common(p)
    p = sub.add_parser("diag", help="JSON dump of saddle point, cgf and expansion quantities")
    p.add_argument("--x", type=float, help="level")
    _common(p)
    p = sub.add_parser("simulate", help="write event paths as CSV")
    p.add_argument("--t", type=float, help="time horizon")
    p.add_argument("--path-method", dest="path_method", help="cluster (default) or thinning")
    _common(p)
    return parser


COMMANDS = {"tail": cmd_tail, "table": cmd_table, "diag": cmd_diag, "simulate": cmd_simulate}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = build_config(ns)
        return COMMANDS[ns.command](cfg)
    except (UsageError, FileNotFoundError, json.JSONDecodeError) as exc:
        parser.error(str(exc))
    except (ValueError, LatticeError, ArithmeticError) as exc:
        print(f"hawkestail: error: {exc}", file=sys.stderr)
        return 1
    return 0  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
