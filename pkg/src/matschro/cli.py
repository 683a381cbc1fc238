"""Command-line front end: ``matschro {verify,resonance,evolve,decay,resolvent-dump}``.

Exit codes: 0 when every check passes, 1 when a check fails (or a fit
window is empty), 2 for usage, configuration, input or resolution errors.
"""
import argparse
import json
import logging
import os
import sys

import numpy as np

from . import errors
from .config import load_config
from .decay import dispersive_experiment, gaussian_data
from .errors import ConfigurationError, FactorizationError, FitError, ResolutionError
from .evolution import SERIES_COLUMNS, propagate
from .grid import make_grid, japanese
from .identities import reports_to_json
from .operators import (build_H, build_power_nls_potential, factorize, load_tabulated_potential,
                        zero_potential)
from .projection import apply_Pd, generalized_kernel_cubic
from .resolvent import perturbed_resolvent
from .threshold import analyze_threshold, psi_on_grid, write_report
from .verify import full_suite

log = logging.getLogger("matschro")

FREE_BRACKETS = {"unweighted": (-0.6, -0.4), "weighted": (-1.7, -1.3)}
CUBIC_BRACKETS = {"unweighted": (-0.65, -0.35), "control": (-0.7, -0.35), "weighted": (-1.7, -1.3)}
R2_MIN = 0.98
USAGE_ERRORS = (ConfigurationError, FactorizationError, ResolutionError, OSError,
                errors.DegenerateProjectionError)


def build_potential(cfg, grid):
    if cfg.potential == "power_nls":
        return build_power_nls_potential(grid, cfg.sigma, cfg.mu)
    if cfg.potential == "zero":
        return zero_potential(grid, cfg.mu)
    return load_tabulated_potential(cfg.potential_file, grid, cfg.mu)


def _out(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def write_dat(path, columns, header, cfg):
    """gnuplot-friendly whitespace columns with a provenance comment."""
    np.savetxt(path, np.column_stack(columns), header=f"config_hash={cfg.hash}\n{header}")


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=str)


# -- commands -------------------------------------------------------------------

def cmd_verify(cfg):
    V = build_potential(cfg, cfg.grid())
    null_grid = make_grid(40.0, 4 * cfg.n)
    reports, res = full_suite(V, cfg.is_cubic, tolerances=cfg.tolerances, null_grid=null_grid,
                              kink=cfg.kink, tol=cfg.threshold_tol)
    path = _out(cfg, "verify.json")
    reports_to_json(reports, path, cfg.provenance("verify"))
    failed = [r.name for r in reports if not r.passed]
    for r in reports:
        log.info("%-34s %-4s residual=%.3g tol=%.3g", r.name, "PASS" if r.passed else "FAIL",
                 r.residual, r.tolerance)
    log.info("%d reports, %d failed -> %s", len(reports), len(failed), path)
    return 1 if failed else 0


def cmd_resonance(cfg):
    V = build_potential(cfg, cfg.grid())
    res, fp = analyze_threshold(V, tol=cfg.threshold_tol, kink=cfg.kink)
    rep = write_report(res, _out(cfg, "resonance.json"), cfg.provenance("resonance"))
    if res.resonance is not None:
        g = res.resonance.psi.grid
        p = res.resonance.psi.values
        write_dat(_out(cfg, "psi.dat"), [g.x, p[0].real, p[0].imag, p[1].real, p[1].imag],
                  "x re_psi1 im_psi1 re_psi2 im_psi2", cfg)
    log.info("threshold: %s", json.dumps({k: rep[k] for k in rep if k in ("kind", "rank", "c0", "c1",
                                                                          "c2_plus", "c2_minus")}))
    return 0


def _resonance_on(cfg, target):
    """Psi resampled onto ``target`` if the threshold is irregular, else None."""
    if cfg.potential == "zero":
        return None
    V = build_potential(cfg, cfg.grid())
    res, fp = analyze_threshold(V, tol=cfg.threshold_tol, kink=cfg.kink)
    if res.resonance is None:
        log.warning("threshold is %s: no resonance, the weighted column is the control only", res.cls.kind)
        return None
    return psi_on_grid(res.resonance, fp, target).values


def _initial_data(cfg, grid, kind):
    f = gaussian_data(grid, cfg.initial_width)
    if kind == "gaussian-bottom":
        f = f[::-1].copy()
    elif kind != "gaussian":
        raise ConfigurationError(f"unknown initial data {kind!r} (gaussian | gaussian-bottom)")
    return f


def cmd_evolve(cfg, initial="gaussian"):
    grid = cfg.evolution_grid()
    V = build_potential(cfg, grid)
    H = build_H(V)
    f = _initial_data(cfg, grid, initial)
    if cfg.is_cubic:
        basis = generalized_kernel_cubic(grid)
        f = f - apply_Pd(basis, f)
    pc = cfg.propagator()
    ev = propagate(H, f, pc)
    x = grid.x
    mask = np.abs(x) <= 0.9 * grid.half_width
    w = japanese(x[mask]) ** (-cfg.weight_sigma)
    rows = []
    for t in ev.times:
        U = ev[t]
        amp = np.max(np.abs(U[:, mask]), axis=0)
        rows.append((t, float(amp.max()), float((w * amp).max()), int(ev.flags[t])))
    rows = np.array(rows)
    write_dat(_out(cfg, "evolve.dat"), [rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]],
              "t unweighted_sup weighted_sup boundary_flag", cfg)
    last = ev[ev.times[-1]]
    write_dat(_out(cfg, "evolve_final.dat"), [x, np.abs(last[0]), np.abs(last[1])], "x abs_u1 abs_u2", cfg)
    if ev.first_flagged() is not None:
        log.warning("boundary contamination from t = %g", ev.first_flagged())
    log.info("evolved to t = %g on %d nodes", ev.times[-1], grid.n)
    return 0


def _judge(rep, brackets):
    out = {}
    fits = {"unweighted": rep.unweighted_fit, "control": rep.control_fit, "weighted": rep.weighted_fit}
    for name, (lo, hi) in brackets.items():
        f = fits[name]
        out[name] = {"bracket": [lo, hi], "exponent": None if f is None else f.exponent,
                     "pass": f is not None and lo <= f.exponent <= hi and f.r_squared > R2_MIN}
    return out


def cmd_decay(cfg):
    grid = cfg.evolution_grid()
    V = build_potential(cfg, grid)
    H = build_H(V)
    f = gaussian_data(grid, cfg.initial_width)
    pc = cfg.propagator()
    csv_path = _out(cfg, "decay.csv")
    prov = cfg.provenance("decay")
    window = (cfg.t_min, cfg.t_max)
    if cfg.potential == "zero":
        rep = dispersive_experiment(H, f, pc, sigma=1.0, correction="free", fit_window=window,
                                    csv_path=csv_path, provenance=f"config_hash={cfg.hash}")
        brackets = FREE_BRACKETS
    else:
        psi = _resonance_on(cfg, grid)
        basis = generalized_kernel_cubic(grid) if cfg.is_cubic else None
        rep = dispersive_experiment(H, f, pc, psi=psi, basis=basis, sigma=cfg.weight_sigma, fit_window=window,
                                    csv_path=csv_path, provenance=f"config_hash={cfg.hash}")
        brackets = CUBIC_BRACKETS if cfg.is_cubic else {}
    out = rep.to_dict()
    out["brackets"] = _judge(rep, brackets)
    out["provenance"] = prov
    _dump_json(_out(cfg, "decay.json"), out)
    rows = np.array([r[:4] for r in rep.rows], dtype=float)
    for j, name in enumerate(SERIES_COLUMNS[1:4], start=1):
        write_dat(_out(cfg, f"decay_{name}.dat"), [rows[:, 0], rows[:, j]], f"t {name}", cfg)
    if rep.flags.get("truncated"):
        log.warning("fit window truncated at the first boundary-flagged time %s", rep.flags["wraparound_from"])
    for name, j in out["brackets"].items():
        log.info("%-10s exponent=%.4f bracket=%s %s", name, j["exponent"], j["bracket"],
                 "PASS" if j["pass"] else "FAIL")
    return 0 if all(j["pass"] for j in out["brackets"].values()) else 1


def cmd_resolvent_dump(cfg):
    grid = cfg.grid()
    V = build_potential(cfg, grid)
    fp = factorize(V)
    R = perturbed_resolvent(fp, grid, cfg.mu, cfg.dump_z, cfg.dump_side, kink=cfg.kink)
    path = _out(cfg, "resolvent.csv")
    R.to_csv(path, stride=cfg.dump_stride, provenance=f"config_hash={cfg.hash} z={cfg.dump_z} side={cfg.dump_side}")
    d = np.diag(R.block(1, 1)) / grid.dx
    write_dat(_out(cfg, "resolvent_diag11.dat"), [grid.x, d.real, d.imag], "x re_R11(x,x) im_R11(x,x)", cfg)
    log.info("wrote %s", path)
    return 0


# -- argument handling ----------------------------------------------------------

def make_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--sigma", type=float, help="power-NLS exponent (1 = cubic)")
    common.add_argument("--grid-n", type=int, help="nodes of the command's primary grid")
    common.add_argument("--half-width", type=float, help="half width of the command's primary grid")
    common.add_argument("--t-min", type=float)
    common.add_argument("--t-max", type=float)
    common.add_argument("--method", help="split-step | crank-nicolson | dense-exponential")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors")
    p = argparse.ArgumentParser(prog="matschro", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="identity and threshold suites")
    sub.add_parser("resonance", parents=[common], help="threshold classification and resonance constants")
    ev = sub.add_parser("evolve", parents=[common], help="propagate initial data, write norm series")
    ev.add_argument("--initial", default="gaussian", help="gaussian | gaussian-bottom")
    sub.add_parser("decay", parents=[common], help="dispersive experiment with power-law fits")
    sub.add_parser("resolvent-dump", parents=[common], help="write the perturbed resolvent kernel as CSV")
    return p


COMMANDS = {"verify": cmd_verify, "resonance": cmd_resonance, "evolve": cmd_evolve,
            "decay": cmd_decay, "resolvent-dump": cmd_resolvent_dump}
EVOLUTION_COMMANDS = ("evolve", "decay")


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s",
                        stream=sys.stderr, force=True)
    # --grid-n / --half-width address the grid the command works on
    evo = args.command in EVOLUTION_COMMANDS
    overrides = {
        "output_dir": args.output_dir, "sigma": args.sigma, "t_min": args.t_min, "t_max": args.t_max,
        "method": args.method,
        ("evolution_n" if evo else "n"): args.grid_n,
        ("evolution_half_width" if evo else "half_width"): args.half_width,
    }
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "evolve":
            return cmd_evolve(cfg, args.initial)
        return COMMANDS[args.command](cfg)
    except USAGE_ERRORS as exc:
        log.error("error: %s", exc)
        return 2
    except FitError as exc:
        log.error("fit failed: %s", exc)
        return 1
    except (errors.NearEigenvalueError, errors.ThresholdInconsistencyError, errors.ResonanceError,
            errors.PrecisionError, errors.DomainError) as exc:
        log.error("check failed: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
