"""Batch command line front-end.

Usage::

    ifpt <command> --config run.json --out results/ [--seed N] [--threads N]

with ``<command>`` one of ``solve``, ``grid6``, ``mc-check``, ``bracket``,
``calibrate`` and ``price``.  The configuration is a JSON object with
``"schema": 1``; unknown keys are rejected.  Exit status is 0 on success,
2 for configuration and input errors and 3 for numerical failures (including
hazard-bound violations), in which case a JSON error record is written to
standard error and to ``<out>/error.json``.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .barrier import IfptProblem, bracket_barriers, solve_barrier
from .calibration import DiscountCurve, RecoveryRate, bootstrap_hazard, stitch_barrier
from .errors import HazardBoundError, IfptError, NumericalError
from .io import read_discount, read_path, read_quotes, write_csv, write_json, write_snapshots
from .kernel import build_fejer, build_mollifier_pair
from .montecarlo import McConfig, sample_default_times, survival_mc
from .pricing import MarketModel, PayoffSpec, conditional_price, price_claim
from .spectral import make_grid
from .survival import GaussianDensity, make_exponential, survival_from_descriptor

SCHEMA = 1
COMMANDS = ("solve", "grid6", "mc-check", "bracket", "calibrate", "price")
GRID6_VALUES = (0.0625, 0.125, 0.25, 0.5)


class ConfigError(IfptError, ValueError):
    code = "config-error"


_BASE = {"schema", "command", "seed", "grid", "lam", "dt", "T", "solver"}
_KEYS = {
    "solve": _BASE | {"kernel", "density", "survival", "snapshots"},
    "grid6": _BASE | {"kernel", "sigmas", "nus", "snapshots"},
    "mc-check": _BASE | {"kernel", "density", "survival", "mc", "default_times"},
    "bracket": _BASE | {"density", "survival", "eps"},
    "calibrate": (_BASE - {"T"}) | {"kernel", "density", "quotes", "discount", "recovery",
                                    "h_max", "continuous", "snapshots"},
    "price": _BASE | {"kernel", "density", "survival", "mc", "market", "payoff",
                      "observed", "inner"},
}
_SECTION_KEYS = {
    "grid": {"N", "L"},
    "solver": {"theta", "snapshot_stride", "denom_floor", "leak_tol", "startup_substeps"},
    "mc": {"paths", "dt_sim", "antithetic", "chunk"},
    "density": {"kind", "mean", "std"},
    "market": {"X0", "mu", "sigma", "rho"},
    "payoff": {"kind", "K"},
}
_KERNEL_KEYS = {"fejer": {"type", "order"}, "mollifier": {"type", "eps", "member"}}
_SURVIVAL_KEYS = {"exponential": {"kind", "nu"}, "piecewise": {"kind", "knots", "horizon"},
                  "tabulated": {"kind", "times", "values"}}


def _check(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(section) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")
    return section


def load_config(path, command):
    """Read and schema-check a configuration file."""
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    _check(cfg, _KEYS[command], "config")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"config schema must be {SCHEMA}, got {cfg.get('schema')!r}")
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    for name, keys in _SECTION_KEYS.items():
        if name in cfg:
            _check(cfg[name], keys, name)
    if "kernel" in cfg:
        kind = cfg["kernel"].get("type")
        if kind not in _KERNEL_KEYS:
            raise ConfigError(f"unknown kernel type {kind!r}")
        _check(cfg["kernel"], _KERNEL_KEYS[kind], "kernel")
    if "survival" in cfg:
        kind = cfg["survival"].get("kind")
        if kind not in _SURVIVAL_KEYS:
            raise ConfigError(f"unknown survival kind {kind!r}")
        _check(cfg["survival"], _SURVIVAL_KEYS[kind], "survival")
    cfg["_base"] = str(Path(path).resolve().parent)
    return cfg


# builders ----------------------------------------------------------------------


def _grid(cfg):
    g = cfg.get("grid", {})
    return make_grid(g.get("N", 1024), g.get("L", 16.0))


def _kernel(cfg, grid):
    k = cfg.get("kernel", {"type": "fejer", "order": 64})
    if k["type"] == "fejer":
        return build_fejer(int(k.get("order", 64)), grid.L)
    pair = build_mollifier_pair(float(k["eps"]), grid.L)
    member = k.get("member", "over")
    if member not in ("over", "under"):
        raise ConfigError("mollifier member must be 'over' or 'under'")
    return getattr(pair, member)


def _density(cfg):
    d = cfg.get("density", {"kind": "gaussian", "std": 0.25})
    if d.get("kind", "gaussian") != "gaussian":
        raise ConfigError(f"unknown density kind {d.get('kind')!r}")
    return GaussianDensity(float(d.get("mean", 0.0)), float(d.get("std", 0.25)))


def _survival(cfg):
    if "survival" not in cfg:
        raise ConfigError("missing 'survival' section")
    return survival_from_descriptor(cfg["survival"], cfg.get("lam", 1.0))


def _problem(cfg, survival=None, density=None, kernel=None, T=None):
    grid = _grid(cfg)
    s = cfg.get("solver", {})
    return IfptProblem(
        survival=survival if survival is not None else _survival(cfg),
        density=density if density is not None else _density(cfg),
        lam=float(cfg.get("lam", 1.0)),
        kernel=kernel if kernel is not None else _kernel(cfg, grid),
        grid=grid, dt=float(cfg.get("dt", 1.0 / 64)),
        T=float(T if T is not None else cfg.get("T", 8.0)),
        theta=float(s.get("theta", 1.0)),
        snapshot_stride=int(s.get("snapshot_stride", 64)),
        denom_floor=float(s.get("denom_floor", 1e-10)),
        leak_tol=s.get("leak_tol", 1e-2),
        startup_substeps=int(s.get("startup_substeps", 32)))


def _mc(cfg, args):
    m = cfg.get("mc", {})
    return McConfig(paths=int(m.get("paths", 100_000)), dt_sim=float(m.get("dt_sim", 1.0 / 256)),
                    seed=int(cfg.get("seed", 0)), antithetic=bool(m.get("antithetic", False)),
                    chunk=int(m.get("chunk", 8192)), threads=args.threads).validate()


def _file(cfg, key):
    if key not in cfg:
        raise ConfigError(f"missing '{key}'")
    p = Path(cfg[key])
    p = p if p.is_absolute() else Path(cfg["_base"]) / p
    if not p.is_file():
        raise ConfigError(f"{key} file not found: {p}")
    return p


def _summary(sol):
    d = sol.diagnostics
    return {"max_relerr_G": float(d.relerr_G[1:].max()), "max_relerr_h": float(d.relerr_h[1:].max()),
            "max_identity_err": float(d.identity_err.max()),
            "max_ibp_resid": float(d.ibp_resid.max()),
            "max_boundary_mass": float(d.boundary_mass.max()),
            "b0": float(sol.b[0]), "bT": float(sol.b[-1])}


def _write_solution(out, sol, stem="barrier", snapshots=False):
    write_csv(out / f"{stem}.csv", sol.table())
    if snapshots:
        sub = out / f"{stem}_snapshots"
        sub.mkdir(exist_ok=True)
        write_snapshots(sub, sol.grid, sol.snapshots)
        write_csv(sub / "times.csv", {"k": np.arange(sol.snapshot_times.size),
                                      "t": sol.snapshot_times})


# commands ----------------------------------------------------------------------


def cmd_solve(cfg, out, args):
    sol = solve_barrier(_problem(cfg))
    _write_solution(out, sol, snapshots=bool(cfg.get("snapshots", False)))
    write_json(out / "summary.json", _summary(sol))


def _grid6_cell(cfg, sigma, nu):
    sol = solve_barrier(_problem(cfg, survival=make_exponential(nu, cfg.get("lam", 1.0)),
                                 density=GaussianDensity(0.0, sigma)))
    return sol.table(), _summary(sol), (sol.snapshots if cfg.get("snapshots") else None)


def cmd_grid6(cfg, out, args):
    sigmas = [float(v) for v in cfg.get("sigmas", GRID6_VALUES)]
    nus = [float(v) for v in cfg.get("nus", GRID6_VALUES)]
    _problem(cfg, survival=make_exponential(max(nus), cfg.get("lam", 1.0)),
             density=GaussianDensity(0.0, min(sigmas))).validate()
    cells = [(s, n) for s in sigmas for n in nus]
    plain = {k: v for k, v in cfg.items()}
    if args.threads > 1:
        with ProcessPoolExecutor(args.threads) as pool:
            results = list(pool.map(_grid6_cell, [plain] * len(cells),
                                    [c[0] for c in cells], [c[1] for c in cells]))
    else:
        results = [_grid6_cell(plain, s, n) for s, n in cells]
    rows = {k: [] for k in ("sigma", "nu", "max_relerr_G", "max_relerr_h", "max_identity_err",
                            "max_ibp_resid", "max_boundary_mass")}
    grid = _grid(cfg)
    for (s, n), (table, summ, snaps) in zip(cells, results):
        stem = f"cell_s{s:g}_n{n:g}"
        write_csv(out / f"{stem}.csv", table)
        if snaps is not None:
            sub = out / f"{stem}_snapshots"
            sub.mkdir(exist_ok=True)
            write_snapshots(sub, grid, snaps)
        rows["sigma"].append(s)
        rows["nu"].append(n)
        for k in list(rows)[2:]:
            rows[k].append(summ[k])
    write_csv(out / "grid6_summary.csv", rows)


def cmd_mc_check(cfg, out, args):
    prob = _problem(cfg)
    sol = solve_barrier(prob)
    mcfg = _mc(cfg, args)
    est = survival_mc(sol, prob.density, prob.lam, prob.kernel, prob.T, mcfg)
    write_csv(out / "barrier.csv", sol.table())
    write_csv(out / "survival_mc.csv", est.table())
    G = prob.survival.G(est.times)
    write_csv(out / "mc_comparison.csv",
              {"t": est.times, "S_hat": est.S_hat, "se": est.se, "G_ref": G,
               "abs_err": np.abs(est.S_hat - G)})
    if cfg.get("default_times", False):
        d = sample_default_times(sol, prob.density, prob.lam, prob.kernel, prob.T, mcfg)
        write_csv(out / "default_times.csv", d.table())


def cmd_bracket(cfg, out, args):
    eps = [float(e) for e in cfg.get("eps", [0.4, 0.2, 0.1])]
    grid = _grid(cfg)
    prob = _problem(cfg, kernel=build_mollifier_pair(eps[0], grid.L).over)
    res = bracket_barriers(prob, eps)
    rows = {"eps": [], "max_over_minus_under": [], "max_gap": []}
    for e, over, under in res:
        write_csv(out / f"over_eps{e:g}.csv", over.table())
        write_csv(out / f"under_eps{e:g}.csv", under.table())
        gap = under.b - over.b
        rows["eps"].append(e)
        rows["max_over_minus_under"].append(float(np.max(-gap)))
        rows["max_gap"].append(float(np.max(np.abs(gap))))
    write_csv(out / "bracket_summary.csv", rows)


def _discount(cfg):
    d = cfg.get("discount")
    if isinstance(d, dict):
        _check(d, {"flat_rate"}, "discount")
        return DiscountCurve.flat(float(d["flat_rate"]))
    return read_discount(_file(cfg, "discount"))


def cmd_calibrate(cfg, out, args):
    quotes = read_quotes(_file(cfg, "quotes"))
    lam = float(cfg.get("lam", 1.0))
    model = bootstrap_hazard(quotes, _discount(cfg), RecoveryRate(float(cfg.get("recovery", 0.4))),
                             lam=lam, h_max=cfg.get("h_max"))
    write_json(out / "hazard.json", model.descriptor())
    grid = _grid(cfg)
    s = cfg.get("solver", {})
    opts = {k: s[k] for k in ("theta", "snapshot_stride", "denom_floor", "leak_tol",
                              "startup_substeps") if k in s}
    sol = stitch_barrier(model, _density(cfg), lam, _kernel(cfg, grid), grid,
                         float(cfg.get("dt", 1.0 / 64)),
                         continuous=bool(cfg.get("continuous", False)), **opts)
    _write_solution(out, sol, snapshots=bool(cfg.get("snapshots", False)))
    summ = _summary(sol)
    summ["restart_times"] = [float(sol.times[i]) for i in sol.restarts]
    write_json(out / "summary.json", summ)


def cmd_price(cfg, out, args):
    prob = _problem(cfg)
    sol = solve_barrier(prob)
    mcfg = _mc(cfg, args)
    if "market" not in cfg or "payoff" not in cfg:
        raise ConfigError("pricing needs 'market' and 'payoff' sections")
    m = cfg["market"]
    market = MarketModel(float(m["X0"]), float(m.get("mu", 0.0)), float(m["sigma"]),
                         float(m.get("rho", 0.0))).validate()
    p = cfg["payoff"]
    payoff = PayoffSpec(p["kind"], None if p.get("K") is None else float(p["K"]))
    if p["kind"] == "custom":
        raise ConfigError("custom payoffs are only available from Python")
    payoff.validate()
    if "observed" in cfg:
        ts, xs = read_path(_file(cfg, "observed"))
        res = conditional_price(sol, prob.density, prob.lam, prob.kernel, market, payoff,
                                ts, xs, float(ts[-1]), prob.T, mcfg,
                                inner=int(cfg.get("inner", 1)))
    else:
        res = price_claim(sol, prob.density, prob.lam, prob.kernel, market, payoff, prob.T, mcfg)
    write_json(out / "price.json", res.to_json())


_DISPATCH = {"solve": cmd_solve, "grid6": cmd_grid6, "mc-check": cmd_mc_check,
             "bracket": cmd_bracket, "calibrate": cmd_calibrate, "price": cmd_price}


def build_parser():
    ap = argparse.ArgumentParser(prog="ifpt", description="Smoothed inverse first-passage-time "
                                 "barrier solver: batch runs from JSON configurations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON configuration file")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the configured seed")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker count (grid6 cells, Monte Carlo chunks)")
    return ap


def _fail(out, exc, status):
    payload = exc.payload() if isinstance(exc, IfptError) else {
        "error": "config-error", "message": str(exc)}
    payload["exit_status"] = status
    text = json.dumps(payload, sort_keys=True, default=str)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return status


def run(argv=None):
    """Execute one command; return the exit status."""
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out.mkdir(parents=True, exist_ok=True)
        stale = out / "error.json"
        if stale.exists():
            stale.unlink()
        _DISPATCH[args.command](cfg, out, args)
    except (HazardBoundError, NumericalError) as exc:
        return _fail(out, exc, 3)
    except (IfptError, ValueError, KeyError, TypeError, OSError) as exc:
        if isinstance(exc, KeyError):
            exc = ConfigError(f"missing configuration key {exc}")
        return _fail(out, exc, 2)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
