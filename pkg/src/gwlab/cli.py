"""Command-line entry point: ``gwlab <command> [--preset NAME | --config PATH] ...``.

Exit codes: 0 success, 1 numerical failure, 2 config/validation error
(including a non-expanding map), 3 zero variance for ``clt``/``lil``,
4 conflicting regularity criteria in ``classify``.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .clt import clt_experiment, lil_trace
from .config import RunConfig, load_config
from .ergodic import (
    draw_mu,
    estimators_agree,
    finite_horizon_variance,
    invariant_density,
    lyapunov,
    mean_phi,
    variance_birkhoff_mc,
    variance_green_kubo,
)
from .errors import ConvergenceFailure, CriteriaDisagree, NotExpanding, ZeroVariance
from .regularity import classify
from .weierstrass import alpha, make_system, phi, residual_ratio, scale_maxima, zygmund_ratio

log = logging.getLogger("gwlab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ZERO_VARIANCE, EXIT_DISAGREE = 0, 1, 2, 3, 4


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % (v + 0.0)
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


class Run:
    """Shared state for one command invocation."""

    def __init__(self, cfg: RunConfig, workers: int = 1):
        self.cfg = cfg
        self.workers = workers
        self.outputs: list[str] = []
        self.sys = make_system(cfg.map, cfg.observable, cfg.policy, hoelder_eps=cfg.hoelder_eps)
        self._rho = None

    @property
    def seed(self) -> int:
        if self.cfg.seed is None:
            raise ValueError("this command uses Monte Carlo and needs a seed")
        return int(self.cfg.seed)

    @property
    def rho(self):
        if self._rho is None:
            u = self.cfg["ulam"]
            self._rho = invariant_density(self.sys.map, int(u["m"]), float(u["tol"]))
        return self._rho

    def gk(self):
        v = self.cfg["variance"]
        return variance_green_kubo(self.sys, self.rho, int(v["n_max"]), float(v["term_tol"]))

    def path(self, name):
        os.makedirs(self.cfg.out_dir, exist_ok=True)
        p = os.path.join(self.cfg.out_dir, name)
        self.outputs.append(p)
        return p

    def manifest(self, command):
        os.makedirs(self.cfg.out_dir, exist_ok=True)
        write_json(
            os.path.join(self.cfg.out_dir, f"manifest_{command}.json"),
            {
                "command": command,
                "config_hash": self.cfg.digest(),
                "config": self.cfg.to_dict(),
                "tool_version": __version__,
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "outputs": self.outputs,
                "workers": self.workers,
            },
        )


def cmd_eval(run: Run):
    e = run.cfg["eval"]
    if e["points"] is not None:
        x = np.asarray(e["points"], dtype=float)
    else:
        n = 2 ** int(e["grid_exp"])
        x = np.arange(n) / n
    a = np.atleast_1d(alpha(run.sys, x)) if x.size else x
    p = np.atleast_1d(phi(run.sys, x)) if x.size else x
    write_csv(run.path("eval.csv"), ["x", "alpha", "phi"], zip(x, a, p))


def cmd_density(run: Run):
    rho = run.rho
    rows = zip(range(rho.m), rho.left_endpoints, rho.weights, rho.density)
    write_csv(run.path("density.csv"), ["cell_index", "left_endpoint", "weight", "density_value"], rows)


def cmd_lyapunov(run: Run):
    res = lyapunov(run.sys.map, run.rho)
    write_json(run.path("lyapunov.json"), {"L": res.L, "ell": res.ell, "m": run.rho.m})


def cmd_variance(run: Run):
    v = run.cfg["variance"]
    gk = run.gk()
    n = int(v["mc_n"])
    mc = variance_birkhoff_mc(run.sys, run.rho, n, int(v["mc_samples"]), run.seed, workers=run.workers)
    rows = [
        ["green_kubo", gk.sigma2, gk.sigma, gk.terms_or_samples, gk.stderr, ""],
        ["birkhoff_mc", mc.sigma2, mc.sigma, mc.terms_or_samples, mc.stderr, n],
        ["green_kubo_at_n", finite_horizon_variance(gk, n), "", gk.terms_or_samples, "", n],
    ]
    write_csv(run.path("variance.csv"),
              ["method", "sigma2", "sigma", "terms_or_samples", "stderr", "horizon"], rows)
    write_csv(run.path("correlations.csv"), ["lag", "correlation"], enumerate(gk.diagnostics))
    write_json(run.path("variance_summary.json"), {
        "mean_phi": mean_phi(run.sys, run.rho),
        "estimators_agree": estimators_agree(gk, mc, n),
        "seed": run.seed,
    })


def cmd_classify(run: Run):
    c = run.cfg["classify"]
    v = run.cfg["variance"]
    verdict = classify(
        run.sys, run.rho, c["p_max"], float(c["orbit_tol"]), float(c["sigma_tol"]),
        n_max=int(v["n_max"]), term_tol=float(v["term_tol"]),
    )
    write_json(run.path("verdict.json"), verdict.to_dict())
    print(verdict.verdict)


def cmd_clt(run: Run):
    c = run.cfg["clt"]
    gk = run.gk()
    lyap = lyapunov(run.sys.map, run.rho)
    reports = clt_experiment(
        run.sys, run.rho, gk, lyap, c["h_list"], int(c["n_samples"]), run.seed,
        sigma_tol=float(run.cfg["classify"]["sigma_tol"]), workers=run.workers,
    )
    rows = [
        [r.h, -math.log2(r.h), r.n_samples, r.ks_vs_normal, r.ks_vs_birkhoff, r.mean_y, r.var_y, r.seed]
        for r in reports
    ]
    write_csv(run.path("clt.csv"),
              ["h", "k", "n_samples", "ks_vs_normal", "ks_vs_birkhoff", "mean_y", "var_y", "seed"], rows)


def cmd_lil(run: Run):
    c = run.cfg["lil"]
    gk = run.gk()
    lyap = lyapunov(run.sys.map, run.rho)
    xs = draw_mu(run.rho, run.seed, int(c["n_points"]))
    rows = []
    for x in xs:
        tr = lil_trace(run.sys, gk, lyap, x, int(c["k_min"]), int(c["k_max"]),
                       sigma_tol=float(run.cfg["classify"]["sigma_tol"]))
        for (k, h, r), s in zip(tr.entries, tr.running_sup):
            rows.append([tr.x, k, h, r, s])
    write_csv(run.path("lil.csv"), ["x", "k", "h", "R_k", "running_sup"], rows)
    write_json(run.path("lil_summary.json"),
               {"sigma_ell": gk.sigma * lyap.ell, "seed": run.seed, "n_points": len(xs)})


def _scan(run: Run, section, quantity, fname, col):
    c = run.cfg[section]
    ks = list(range(int(c["k_min"]), int(c["k_max"]) + 1))
    maxima = scale_maxima(quantity, run.sys, ks, int(c["n_x"]), run.seed)
    rows = [[k, 2.0**-k, int(c["n_x"]), m] for k, m in zip(ks, maxima)]
    write_csv(run.path(fname), ["k", "h", "n_x", col], rows)


def cmd_zygmund(run: Run):
    _scan(run, "zygmund", zygmund_ratio, "zygmund.csv", "max_zygmund_ratio")


def cmd_residual(run: Run):
    _scan(run, "residual", residual_ratio, "residual.csv", "max_abs_residual_ratio")


COMMANDS = {
    "eval": cmd_eval,
    "density": cmd_density,
    "lyapunov": cmd_lyapunov,
    "variance": cmd_variance,
    "classify": cmd_classify,
    "clt": cmd_clt,
    "lil": cmd_lil,
    "zygmund": cmd_zygmund,
    "residual": cmd_residual,
}

MONTE_CARLO = {"variance", "clt", "lil", "zygmund", "residual"}


def _points(text):
    text = text.strip()
    return [float(t) for t in text.split(",") if t.strip()] if text else []


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--preset", help="built-in preset: classic, smooth, nonlinear, cubic")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=JSON",
                        help="override any config field, e.g. --set ulam.m=4096")
    common.add_argument("--m", type=int, help="Ulam cell count")
    common.add_argument("--tol", type=float, help="truncation tolerance")
    common.add_argument("--p-max", type=int)
    common.add_argument("--n-samples", type=int, help="CLT sample count")
    common.add_argument("--mc-samples", type=int)
    common.add_argument("--mc-n", type=int)
    common.add_argument("--h", type=float, action="append", help="CLT scale (repeatable)")
    common.add_argument("--grid", type=int, help="eval grid exponent k (2**k points)")
    common.add_argument("--points", type=_points, help="comma-separated eval points")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="gwlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _overrides(args) -> dict:
    over: dict = {}

    def put(section, key, val):
        if val is not None:
            over.setdefault(section, {})[key] = val

    put("ulam", "m", args.m)
    put("truncation", "tol", args.tol)
    put("classify", "p_max", args.p_max)
    put("clt", "n_samples", args.n_samples)
    put("clt", "h_list", args.h)
    put("variance", "mc_samples", args.mc_samples)
    put("variance", "mc_n", args.mc_n)
    put("eval", "grid_exp", args.grid)
    put("eval", "points", args.points)
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out_dir"] = args.out
    for item in args.set:
        lhs, sep, rhs = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        try:
            val = json.loads(rhs)
        except json.JSONDecodeError:
            val = rhs
        parts = lhs.split(".")
        node = over
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return over


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.preset, _overrides(args))
        if args.workers < 1:
            raise ValueError("--workers must be >= 1")
        if args.command in MONTE_CARLO and cfg.seed is None:
            raise ValueError(f"{args.command} uses Monte Carlo and needs a seed")
        run = Run(cfg, workers=args.workers)
    except NotExpanding as exc:
        print(f"error: NotExpanding: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](run)
    except ZeroVariance as exc:
        print(f"error: ZeroVariance: {exc}", file=sys.stderr)
        return EXIT_ZERO_VARIANCE
    except CriteriaDisagree as exc:
        print(f"error: CriteriaDisagree: {exc}", file=sys.stderr)
        return EXIT_DISAGREE
    except ConvergenceFailure as exc:
        print(f"error: ConvergenceFailure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run.manifest(args.command)
    log.info("wrote %s", ", ".join(run.outputs))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
