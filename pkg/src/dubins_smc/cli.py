"""Command-line entry point: ``dubins-smc {params,simulate,certify,validate-path}``.

Exit codes: 0 success, 1 usage or config error, 2 validation or infeasible
bounds, 3 certification failure or invariance violation, 4 runtime abort.

Options can come from an INI config (``--config``) with sections
``[path] [controller] [disturbance] [sim]``; command-line flags win.  The
output directory defaults to ``$DUBINS_SMC_OUT`` or ``./dubins_out``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import controller as ctl
from . import fileio
from .controller import ControllerParams, InfeasibleBoundsError, ParameterError
from .invariant import (CertificatePreconditionError, InvariantSetSpec, attractiveness_certificate,
                        default_kappa_max, nagumo_certificate)
from .plant import DisturbanceBounds, DisturbanceSignal
from .refpath import PathError, validate_assumptions
from .sim import BENCHMARK_STARTS, Scenario, ScenarioError, check_scenario, run_batch

OUT_ENV = "DUBINS_SMC_OUT"
EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_CERT, EXIT_ABORT = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    path: str = "benchmark"
    d1: float = 0.1
    d2: float = 0.1
    signal: str = "random"
    seed: int = 0
    hold: float = 0.05
    values: Optional[tuple] = None
    amplitudes: Optional[tuple] = None
    frequencies: tuple = (0.5, 0.5)
    target: str = "invariance"
    R: float = 0.8
    v: float = 0.8
    p: Optional[float] = None
    q: Optional[float] = None
    y_intercept: float = 1.0
    phi: float = 0.05
    law: str = "sign"
    dt: float = 1e-3
    t_max: Optional[float] = None
    integrator: Optional[str] = None
    starts: list = field(default_factory=lambda: [(-0.5, 30.0)])
    kappa_max: Optional[float] = None
    out: Optional[str] = None

    @property
    def bounds(self) -> DisturbanceBounds:
        return DisturbanceBounds(self.d1, self.d2)

    def controller(self, audited: bool = True) -> ControllerParams:
        """Parameters with p, q filled from the synthesis defaults; audited unless told otherwise."""
        b = self.bounds
        p = ctl.min_p(b) if self.p is None else self.p
        q = 0.5 * sum(ctl.q_window(b)) if self.q is None else self.q
        params = ControllerParams(R=self.R, v=self.v, p=p, q=q, y_intercept=self.y_intercept,
                                  phi=self.phi, law=self.law)
        if audited:
            ctl.audit(params, b)
        return params

    def disturbance(self) -> DisturbanceSignal:
        b = self.bounds
        if self.signal == "zero":
            return DisturbanceSignal.zero(b)
        if self.signal == "constant":
            c = self.values if self.values is not None else (self.d1, self.d2)
            return DisturbanceSignal("constant", b, values=tuple(c))
        if self.signal == "sinusoid":
            a = self.amplitudes if self.amplitudes is not None else (self.d1, self.d2)
            return DisturbanceSignal("sinusoid", b, amplitudes=tuple(a), frequencies=tuple(self.frequencies))
        if self.signal == "random":
            return DisturbanceSignal.uniform_random(b, seed=self.seed, hold=self.hold)
        if self.signal == "adversarial":
            return DisturbanceSignal.adversarial(b, target=self.target)
        raise UsageError(f"unknown disturbance kind {self.signal!r}")

    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "dubins_out")


def _parse_start(text: str) -> tuple[float, float]:
    try:
        y, th = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"start must be 'y_err,theta_err_deg', got {text!r}") from None
    return y, th


def _parse_starts(text: str) -> list:
    return [_parse_start(part) for part in text.split(";") if part.strip()]


# config-file key -> (RunConfig field, converter)
_CONFIG_KEYS = {
    "path": {"path": ("path", str), "name": ("path", str), "file": ("path", str)},
    "controller": {"r": ("R", float), "v": ("v", float), "p": ("p", float), "q": ("q", float),
                   "y_intercept": ("y_intercept", float), "phi": ("phi", float), "law": ("law", str)},
    "disturbance": {"d1": ("d1", float), "d2": ("d2", float), "kind": ("signal", str), "seed": ("seed", int),
                    "hold": ("hold", float), "values": ("values", lambda s: fileio.parse_numbers(s, 2)),
                    "amplitudes": ("amplitudes", lambda s: fileio.parse_numbers(s, 2)),
                    "frequencies": ("frequencies", lambda s: fileio.parse_numbers(s, 2)),
                    "target": ("target", str)},
    "sim": {"dt": ("dt", float), "t_max": ("t_max", float), "integrator": ("integrator", str),
            "starts": ("starts", _parse_starts), "out": ("out", str), "kappa_max": ("kappa_max", float)},
}


def load_config(file) -> RunConfig:
    cfg = RunConfig()
    try:
        data = fileio.read_config(file)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {file}: {exc}") from None
    for section, entries in data.items():
        keys = _CONFIG_KEYS.get(section.lower())
        if keys is None:
            raise UsageError(f"unknown config section [{section}]")
        for key, raw in entries.items():
            if key not in keys:
                raise UsageError(f"unknown key {key!r} in [{section}]")
            name, conv = keys[key]
            try:
                setattr(cfg, name, conv(raw))
            except (ValueError, UsageError) as exc:
                raise UsageError(f"[{section}] {key}: {exc}") from None
    if "path" in data:
        # relative path files are resolved against the config's directory
        candidate = Path(file).parent / cfg.path
        if candidate.exists():
            cfg.path = str(candidate)
    return cfg


def _add_common(sp, path=True):
    sp.add_argument("--config", help="INI run configuration; flags override it")
    sp.add_argument("--d1", type=float, help="speed disturbance bound d1_bar")
    sp.add_argument("--d2", type=float, help="turn-rate disturbance bound d2_bar")
    sp.add_argument("--R", dest="R", type=float, help="minimum turning radius")
    sp.add_argument("--v", type=float, help="nominal speed")
    sp.add_argument("--p", type=float, help="invariance margin")
    sp.add_argument("--q", type=float, help="sliding-variable margin")
    sp.add_argument("--y-intercept", dest="y_intercept", type=float)
    sp.add_argument("--phi", type=float, help="boundary-layer width")
    sp.add_argument("--law", choices=ctl.LAWS)
    if path:
        sp.add_argument("--path", help="built-in path name or path file")
        sp.add_argument("--benchmark", action="store_true", help="use the built-in benchmark path")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dubins-smc", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("params", help="synthesise controller parameters from disturbance bounds")
    _add_common(sp, path=False)
    sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("simulate", help="run closed-loop scenarios and write CSV logs")
    _add_common(sp)
    sp.add_argument("--start", action="append", help="initial error 'y_err,theta_err_deg' (repeatable)")
    sp.add_argument("--all-starts", action="store_true", help="the four benchmark initial errors")
    sp.add_argument("--signal", choices=("zero", "constant", "sinusoid", "random", "adversarial"))
    sp.add_argument("--seed", type=int)
    sp.add_argument("--hold", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--t-max", dest="t_max", type=float)
    sp.add_argument("--integrator", choices=("euler", "rk4"))
    sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dubins_out)")

    sp = sub.add_parser("certify", help="run the invariance and attractiveness certificates")
    _add_common(sp)
    sp.add_argument("--kappa-max", dest="kappa_max", type=float,
                    help="largest |curvature| to certify for (default: from --path, else 1/R_lower)")
    sp.add_argument("--n-samples", dest="n_samples", type=int, default=1000)
    sp.add_argument("--mode", choices=("proof", "exact"), default="proof")
    sp.add_argument("--out", help="directory for certificate.json")

    sp = sub.add_parser("validate-path", help="check a path against curvature and uniqueness assumptions")
    _add_common(sp)
    sp.add_argument("--r-lower", dest="r_lower", type=float, help="required minimum radius (default from params)")
    sp.add_argument("--json", action="store_true")
    return ap


_OVERRIDES = ("d1", "d2", "R", "v", "p", "q", "y_intercept", "phi", "law", "signal", "seed", "hold", "dt",
              "t_max", "integrator", "out", "kappa_max")


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for name in _OVERRIDES:
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "benchmark", False):
        cfg.path = "benchmark"
    elif getattr(args, "path", None):
        cfg.path = args.path
    if getattr(args, "all_starts", False):
        cfg.starts = [(y, float(np.degrees(th))) for y, th in BENCHMARK_STARTS]
    elif getattr(args, "start", None):
        cfg.starts = [_parse_start(s) for s in args.start]
    return cfg


# ---------------------------------------------------------------------------
# commands


def cmd_params(args, cfg: RunConfig) -> int:
    b = cfg.bounds
    feas = ctl.feasible(b)
    report = {"d1_bar": b.d1_bar, "d2_bar": b.d2_bar, "feasible": feas,
              "check": {"lhs_1_minus_d2": 1 - b.d2_bar, "rhs_half_1_plus_d1": 0.5 * (1 + b.d1_bar)}}
    code = EXIT_OK
    if feas:
        q_lo, q_hi = ctl.q_window(b)
        report.update(min_p=ctl.min_p(b), q_window=[q_lo, q_hi])
        try:
            params = cfg.controller()
            report.update(params=params.to_dict(), R_lower=ctl.min_path_radius(params))
        except ParameterError as exc:
            report["error"] = str(exc)
            code = EXIT_INVALID
    else:
        report["error"] = (f"infeasible bounds: need (1 - d2_bar) >= 0.5 (1 + d1_bar), got "
                           f"{1 - b.d2_bar:.6g} < {0.5 * (1 + b.d1_bar):.6g}")
        code = EXIT_INVALID
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"bounds      d1_bar = {b.d1_bar:g}, d2_bar = {b.d2_bar:g}")
        print(f"feasible    {feas}  ((1 - d2_bar) = {1 - b.d2_bar:.6g} vs 0.5 (1 + d1_bar) = "
              f"{0.5 * (1 + b.d1_bar):.6g})")
        if feas:
            print(f"min p       {report['min_p']:.8g}")
            print(f"q window    [{report['q_window'][0]:.8g}, {report['q_window'][1]:.8g}]")
        if "params" in report:
            pr = report["params"]
            print(f"chosen      p = {pr['p']:.8g}, q = {pr['q']:.8g}, R = {pr['R']:g}, v = {pr['v']:g}, "
                  f"y_intercept = {pr['y_intercept']:g}")
            print(f"R_lower     {report['R_lower']:.8g}")
    if "error" in report:
        print(f"error: {report['error']}", file=sys.stderr)
    return code


def _certificates(params, bounds, kappa_max, n_samples=1000, mode="proof"):
    spec = InvariantSetSpec.from_params(params)
    nag = nagumo_certificate(spec, params, bounds, kappa_max, n_samples=n_samples)
    att = attractiveness_certificate(params, bounds, kappa_max, mode=mode)
    return nag, att


def cmd_simulate(args, cfg: RunConfig) -> int:
    path = fileio.load_path(cfg.path)
    params = cfg.controller()
    signal = cfg.disturbance()
    scenarios = [Scenario(path, params, signal, start=(y, float(np.radians(th))), dt=cfg.dt, t_max=cfg.t_max,
                          integrator=cfg.integrator) for y, th in cfg.starts]
    for sc in scenarios:
        try:
            check_scenario(sc)
        except ScenarioError as exc:
            print(f"validation error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    logs = run_batch(scenarios, record=True, validate=False)

    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    rep = validate_assumptions(path, ctl.min_path_radius(params))
    kmax = 1.0 / rep.min_radius if np.isfinite(rep.min_radius) and rep.min_radius > 0 else 0.0
    try:
        nag, att = _certificates(params, cfg.bounds, kmax)
        certs = {"nagumo": nag.passed, "attractiveness": att.passed, "kappa_abs_max": kmax}
    except CertificatePreconditionError as exc:
        certs = {"error": str(exc)}

    runs = []
    for k, (log, (y0, th0)) in enumerate(zip(logs, cfg.starts)):
        name = f"run_{k:02d}.csv"
        fileio.write_csv(log, out / name)
        runs.append({"file": name, "start": {"y_err": y0, "theta_err_deg": th0}, "status": log.status,
                     "diagnostic": log.diagnostic, "metrics": log.metrics})
        m = log.metrics
        ct = "-" if m["convergence_time"] is None else f"{m['convergence_time']:.3f}"
        print(f"{name}: start=({y0:g}, {th0:g} deg) status={log.status} converged={m['converged']} "
              f"t_conv={ct} violations={m['invariance_violations']} switches={m['sign_switches']}")
    summary = {"path": path.name, "params": params.to_dict(), "bounds": asdict(cfg.bounds),
               "signal": {"kind": signal.kind, "seed": signal.seed, "hold": signal.hold},
               "dt": cfg.dt, "certificates": certs, "runs": runs}
    fileio.write_json(summary, out / "summary.json")
    print(f"wrote {len(runs)} CSV file(s) and summary.json to {out}")
    if any(log.status == "aborted" for log in logs):
        for log in logs:
            if log.diagnostic:
                print(f"aborted: {log.diagnostic}", file=sys.stderr)
        return EXIT_ABORT
    if any(log.metrics["invariance_violations"] for log in logs):
        return EXIT_CERT
    return EXIT_OK


def _path_kappa_max(cfg: RunConfig, params) -> Optional[float]:
    if cfg.path is None:
        return None
    path = fileio.load_path(cfg.path)
    rep = validate_assumptions(path, ctl.min_path_radius(params))
    return 1.0 / rep.min_radius if rep.min_radius > 0 else np.inf


def cmd_certify(args, cfg: RunConfig) -> int:
    # no audit here: out-of-range p or q must produce a failing report, not a refusal
    params = cfg.controller(audited=False)
    if not ctl.feasible(cfg.bounds):
        print("error: infeasible disturbance bounds", file=sys.stderr)
        return EXIT_INVALID
    if cfg.kappa_max is not None:
        kmax = cfg.kappa_max
    elif args.path or args.benchmark:
        kmax = _path_kappa_max(cfg, params)
    else:
        kmax = default_kappa_max(params)
    try:
        nag, att = _certificates(params, cfg.bounds, kmax, args.n_samples, args.mode)
    except CertificatePreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for rep in (nag, att):
        print(f"{rep.kind}: {'PASS' if rep.passed else 'FAIL'}")
        for c in rep.checks:
            if c.bound_extremum is None:
                val = f"min derivative {c.extremum:+.3e}"
            else:
                val = f"max sigma*sigma_dot {c.extremum:+.3e}, proof bound {c.bound_extremum:+.3e}"
            print(f"  {c.name:<24s} {'ok  ' if c.passed else 'FAIL'} {val} at {c.at}")
        for note in rep.notes:
            print(f"  note: {note}")
    out = cfg.out_dir() if (cfg.out or os.environ.get(OUT_ENV)) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        fileio.write_json({"nagumo": nag.to_dict(), "attractiveness": att.to_dict()}, out / "certificate.json")
    return EXIT_OK if nag.passed and att.passed else EXIT_CERT


def cmd_validate_path(args, cfg: RunConfig) -> int:
    path = fileio.load_path(cfg.path)
    params = cfg.controller(audited=False)
    r_lower = args.r_lower if args.r_lower is not None else ctl.min_path_radius(params)
    rep = validate_assumptions(path, r_lower, neighborhood=params.R)
    if args.json:
        print(json.dumps(fileio._jsonable(rep.to_dict()), indent=2))
    else:
        print(f"path {path.name}: {'PASS' if rep.passed else 'FAIL'} (R_lower = {r_lower:.6g}, "
              f"min radius = {rep.min_radius:.6g})")
        for f in rep.failures():
            print(f"  {f}")
    return EXIT_OK if rep.passed else EXIT_INVALID


COMMANDS = {"params": cmd_params, "simulate": cmd_simulate, "certify": cmd_certify,
            "validate-path": cmd_validate_path}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PathError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleBoundsError, ParameterError, ScenarioError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
