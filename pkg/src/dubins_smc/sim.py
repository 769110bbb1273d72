"""Closed-loop scenario execution and tracking metrics.

Runs that share a path, controller and step size are integrated together as
one vectorised batch; each run keeps its own disturbance realisation and its
own warm-started projection.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import controller as ctl
from .controller import ControllerParams, min_path_radius
from .frenet import frame_errors, from_transverse
from .invariant import boundary_margin, disturbance_gradient
from .plant import DisturbanceBounds, DisturbanceSignal, Pose, SignalBank, stage_times, step_arrays
from .refpath import ReferencePath, benchmark_path, validate_assumptions, wrap_angle

IN_SET_TOL = 1e-3
S_STOP = 1.0 - 1e-6
BENCHMARK_STARTS = (
    (-0.5, np.radians(30.0)),
    (0.5, np.radians(-30.0)),
    (0.5, np.radians(30.0)),
    (-0.5, np.radians(-30.0)),
)
LOG_COLUMNS = ("t", "x", "y", "theta", "s_hat", "y_err", "theta_err", "sigma", "omega", "d1", "d2", "in_S")


class ScenarioError(ValueError):
    """The scenario fails validation before any step is taken."""


def build_benchmark_path() -> ReferencePath:
    return benchmark_path()


@dataclass(frozen=True)
class Scenario:
    path: ReferencePath
    params: ControllerParams
    signal: DisturbanceSignal
    start: tuple[float, float] = (0.0, 0.0)  # (y_err, theta_err) placed at s = 0
    start_pose: Optional[Pose] = None
    dt: float = 1e-3
    t_max: Optional[float] = None
    integrator: Optional[str] = None
    eps_y: Optional[float] = None
    eps_theta: float = float(np.radians(5.0))
    require_start_in_set: bool = False
    audit_params: bool = True

    @property
    def method(self) -> str:
        if self.integrator is not None:
            return self.integrator
        return "euler" if self.params.law == "sign" else "rk4"

    @property
    def horizon(self) -> float:
        if self.t_max is not None:
            return self.t_max
        return 3.0 * self.path.length() / self.params.v

    @property
    def conv_eps_y(self) -> float:
        return 0.02 * self.params.R if self.eps_y is None else self.eps_y


@dataclass
class SimLog:
    columns: dict
    metrics: dict
    status: str = "completed"
    diagnostic: str = ""
    scenario: Optional[Scenario] = field(default=None, repr=False)

    def __len__(self):
        return len(self.columns["t"])

    def __getattr__(self, name):
        cols = self.__dict__.get("columns")
        if cols is not None and name in cols:
            return cols[name]
        raise AttributeError(name)

    def rows(self):
        cols = [self.columns[c] for c in LOG_COLUMNS]
        return zip(*cols)


@functools.lru_cache(maxsize=64)
def _validation(path: ReferencePath, r_lower: float, neighborhood: float):
    return validate_assumptions(path, r_lower, neighborhood=neighborhood, n_unique=200)


def check_scenario(sc: Scenario) -> None:
    """Raise ``ScenarioError`` if the path or parameters are not admissible."""
    if not sc.dt > 0:
        raise ScenarioError("dt must be positive")
    if sc.audit_params:
        try:
            ctl.audit(sc.params, sc.signal.bounds)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
    rep = _validation(sc.path, float(min_path_radius(sc.params)), float(sc.params.R))
    if not rep.passed:
        raise ScenarioError("path rejected: " + "; ".join(rep.failures()))
    if sc.require_start_in_set and sc.start_pose is None:
        from .invariant import contains
        if not contains(sc.start[0], sc.start[1], sc.params):
            raise ScenarioError(f"initial error {sc.start} is outside the invariant set")


class _Tracker:
    """Streaming per-run metrics.

    Convergence uses the settling time: the first step after which both
    thresholds hold for every remaining step.  ``first_entry_time`` is the
    first step at which they hold at all.
    """

    def __init__(self, n, eps_y, eps_th):
        self.eps_y, self.eps_th = np.asarray(eps_y), np.asarray(eps_th)
        self.first_entry = np.full(n, np.nan)
        self.settle = np.full(n, np.nan)
        self.max_y_after = np.zeros(n)
        self.max_th_after = np.zeros(n)
        self.max_sigma_after_entry = np.zeros(n)
        self.violations = np.zeros(n, int)
        self.min_margin = np.full(n, np.inf)
        self.switches = np.zeros(n, int)
        self.last_sign = np.zeros(n)
        self.prev_s = np.full(n, -np.inf)
        self.s_monotone = np.ones(n, bool)
        self.steps = np.zeros(n, int)
        self.t_end = np.zeros(n)
        self.s_end = np.zeros(n)

    def update(self, i, t, s, y, th, sg, om, margin):
        inside = (np.abs(y) < self.eps_y[i]) & (np.abs(th) < self.eps_th[i])
        self.first_entry[i[np.isnan(self.first_entry[i]) & inside]] = t
        entered = ~np.isnan(self.first_entry[i])
        j = i[entered]
        self.max_sigma_after_entry[j] = np.maximum(self.max_sigma_after_entry[j], np.abs(sg[entered]))

        self.settle[i[~inside]] = np.nan
        new = inside & np.isnan(self.settle[i])
        self.settle[i[new]] = t
        self.max_y_after[i[new]] = 0.0
        self.max_th_after[i[new]] = 0.0
        j = i[inside]
        self.max_y_after[j] = np.maximum(self.max_y_after[j], np.abs(y[inside]))
        self.max_th_after[j] = np.maximum(self.max_th_after[j], np.abs(th[inside]))

        self.violations[i] += margin < -IN_SET_TOL
        self.min_margin[i] = np.minimum(self.min_margin[i], margin)
        sgn = np.sign(om)
        nz = sgn != 0
        self.switches[i] += nz & (self.last_sign[i] != 0) & (sgn != self.last_sign[i])
        self.last_sign[i[nz]] = sgn[nz]
        self.s_monotone[i] &= s >= self.prev_s[i] - 1e-12
        self.prev_s[i] = s
        self.steps[i] += 1
        self.t_end[i] = t
        self.s_end[i] = s

    def metrics(self, k) -> dict:
        entered = not np.isnan(self.first_entry[k])
        # settling on the very last logged step does not count as converged
        settled = not np.isnan(self.settle[k]) and self.settle[k] < self.t_end[k]
        return {
            "steps": int(self.steps[k]),
            "t_end": float(self.t_end[k]),
            "s_end": float(self.s_end[k]),
            "converged": bool(settled),
            "convergence_time": float(self.settle[k]) if settled else None,
            "first_entry_time": float(self.first_entry[k]) if entered else None,
            "max_abs_y_after": float(self.max_y_after[k]) if settled else None,
            "max_abs_theta_after": float(self.max_th_after[k]) if settled else None,
            "max_abs_sigma_after_entry": float(self.max_sigma_after_entry[k]) if entered else None,
            "invariance_violations": int(self.violations[k]),
            "min_boundary_margin": float(self.min_margin[k]),
            "sign_switches": int(self.switches[k]),
            "s_monotone": bool(self.s_monotone[k]),
        }


def run_batch(scenarios: Sequence[Scenario], record: bool = True, validate: bool = True) -> list[SimLog]:
    """Integrate several scenarios together.

    All scenarios must share path, controller parameters, step size,
    integrator and horizon.  With ``record=False`` only metrics are kept.
    """
    scenarios = list(scenarios)
    if not scenarios:
        return []
    sc0 = scenarios[0]
    for sc in scenarios[1:]:
        if (sc.path is not sc0.path and sc.path != sc0.path) or sc.params != sc0.params or sc.dt != sc0.dt \
                or sc.method != sc0.method or sc.horizon != sc0.horizon:
            raise ValueError("batched scenarios must share path, params, dt, integrator and horizon")
    if validate:
        for sc in scenarios:
            check_scenario(sc)

    path, params, dt, method = sc0.path, sc0.params, sc0.dt, sc0.method
    n = len(scenarios)
    x, y, th, s_prev = np.empty(n), np.empty(n), np.empty(n), np.empty(n)
    for k, sc in enumerate(scenarios):
        if sc.start_pose is not None:
            res = path.project((sc.start_pose.x, sc.start_pose.y), neighborhood=params.R)
            x[k], y[k], th[k], s_prev[k] = sc.start_pose.x, sc.start_pose.y, sc.start_pose.theta, res.s_hat
        else:
            x[k], y[k], th[k] = from_transverse(path, 0.0, *sc.start)
            s_prev[k] = 0.0

    n_steps = int(np.ceil(sc0.horizon / dt - 1e-9))
    bank = SignalBank([sc.signal for sc in scenarios], sc0.horizon + dt)
    adversarial = bank.adversarial.any()
    targets = np.array([sc.signal.target for sc in scenarios])
    tracker = _Tracker(n, [sc.conv_eps_y for sc in scenarios], [sc.eps_theta for sc in scenarios])
    status = ["timeout"] * n
    diag = [""] * n
    active = np.ones(n, bool)
    rec = [] if record else None

    for step in range(n_steps + 1):
        i = np.flatnonzero(active)
        if i.size == 0:
            break
        t = step * dt
        s_hat, _ = path.project_many(x[i], y[i], hint=s_prev[i])
        _, ye, te, sgn, kabs = frame_errors(x[i], y[i], th[i], path, s_hat)
        singular = kabs * ye >= 1.0
        if np.any(singular):
            for k in i[singular]:
                status[k] = "aborted"
                diag[k] = f"frame singularity at t = {t:.6g}: |kappa| * y_err >= 1"
            active[i[singular]] = False
            keep = ~singular
            i, s_hat, ye, te, sgn, kabs = i[keep], s_hat[keep], ye[keep], te[keep], sgn[keep], kabs[keep]
            if i.size == 0:
                break
        s_prev[i] = s_hat
        sg = ctl.sigma(ye, te, params)
        om = ctl.turn_rate(ye, te, sgn, params)
        grad = None
        if adversarial:
            g1, g2 = np.zeros(n), np.zeros(n)
            u = om * sgn * params.R / params.v
            for target in np.unique(targets[i]):
                m = targets[i] == target
                c1, c2 = disturbance_gradient(ye[m], te[m], kabs[m], params, target, u[m])
                g1[i[m]], g2[i[m]] = c1, c2
            grad = (g1, g2)
        d_stages = [tuple(d[i] for d in bank.sample(tt, grad)) for tt in stage_times(t, dt, method)]
        margin = boundary_margin(ye, te, params)
        tracker.update(i, t, s_hat, ye, te, sg, om, margin)
        if record:
            row = np.full((len(LOG_COLUMNS), n), np.nan)
            row[:, i] = (np.full(i.size, t), x[i], y[i], wrap_angle(th[i]), s_hat, ye, te, sg, om,
                         d_stages[0][0], d_stages[0][1], margin >= -IN_SET_TOL)
            rec.append(row)
        done = s_hat >= S_STOP
        for k in i[done]:
            status[k] = "completed"
        active[i[done]] = False
        if step == n_steps:
            break
        go = ~done
        i = i[go]
        if i.size == 0:
            break
        d_stages = [(d1[go], d2[go]) for d1, d2 in d_stages]
        x[i], y[i], th[i] = step_arrays(x[i], y[i], th[i], params.v, om[go], dt, d_stages, method)

    logs = []
    data = np.stack(rec, axis=0) if record and rec else None
    for k, sc in enumerate(scenarios):
        cols = {}
        if data is not None:
            steps = tracker.steps[k]
            for c, name in enumerate(LOG_COLUMNS):
                col = data[:steps, c, k]
                cols[name] = col.astype(bool) if name == "in_S" else col
        logs.append(SimLog(cols, tracker.metrics(k), status[k], diag[k], sc))
    return logs


def run(scenario: Scenario, record: bool = True) -> SimLog:
    return run_batch([scenario], record=record)[0]


def benchmark_scenarios(params: ControllerParams, signal: DisturbanceSignal, starts=BENCHMARK_STARTS, **kw):
    path = build_benchmark_path()
    return [Scenario(path, params, signal, start=tuple(s), **kw) for s in starts]


def benchmark_suite(params: ControllerParams, signal: DisturbanceSignal, record: bool = True, **kw) -> list[SimLog]:
    """The four benchmark starts (-0.5, 30deg), (0.5, -30deg), (0.5, 30deg), (-0.5, -30deg)."""
    return run_batch(benchmark_scenarios(params, signal, **kw), record=record)


def sample_starts(params: ControllerParams, n: int, seed: int = 0, margin: float = 0.0) -> np.ndarray:
    """``n`` transverse errors drawn uniformly from the invariant set (rejection sampling)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        y = rng.uniform(-params.R, params.R, 4 * n)
        th = rng.uniform(-np.pi / 2, np.pi / 2, 4 * n)
        ok = boundary_margin(y, th, params) >= margin
        out.extend(zip(y[ok], th[ok]))
    return np.array(out[:n])


def vertex_signals(bounds: DisturbanceBounds) -> list[DisturbanceSignal]:
    return [DisturbanceSignal.constant(float(a), float(b), bounds) for a, b in bounds.vertices()]
