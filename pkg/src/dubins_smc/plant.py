"""Uncertain Dubins vehicle, disturbance realisations and fixed-step integration."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .refpath import wrap_angle

SIGNAL_KINDS = ("zero", "constant", "sinusoid", "random", "adversarial")
_RANDOM_BLOCK = 4096


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float

    def wrapped(self) -> "Pose":
        return Pose(self.x, self.y, float(wrap_angle(self.theta)))


@dataclass(frozen=True)
class DisturbanceBounds:
    d1_bar: float = 0.0
    d2_bar: float = 0.0

    def __post_init__(self):
        for name in ("d1_bar", "d2_bar"):
            val = getattr(self, name)
            if not 0.0 <= val < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {val}")

    def vertices(self) -> np.ndarray:
        """The four corners of the disturbance box, shape (4, 2)."""
        a, b = self.d1_bar, self.d2_bar
        return np.array([[-a, -b], [-a, b], [a, -b], [a, b]])


@dataclass(frozen=True, eq=False)
class DisturbanceSignal:
    """A bounded realisation of (d1(t), d2(t)).

    kinds: ``zero``, ``constant`` (``values``), ``sinusoid`` (``amplitudes``,
    ``frequencies`` in Hz, ``phases``), ``random`` (uniform on the box,
    piecewise constant over ``hold``, seeded), ``adversarial`` (state
    feedback: picks the box vertex that most decreases ``target``).
    """

    kind: str
    bounds: DisturbanceBounds
    values: tuple[float, float] = (0.0, 0.0)
    amplitudes: tuple[float, float] = (0.0, 0.0)
    frequencies: tuple[float, float] = (0.0, 0.0)
    phases: tuple[float, float] = (0.0, 0.0)
    seed: int = 0
    hold: float = 0.05
    target: str = "invariance"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        bars = (self.bounds.d1_bar, self.bounds.d2_bar)
        if self.kind == "constant" and any(abs(c) > b for c, b in zip(self.values, bars)):
            raise ValueError("constant disturbance exceeds its bounds")
        if self.kind == "sinusoid" and any(abs(a) > b for a, b in zip(self.amplitudes, bars)):
            raise ValueError("sinusoid amplitude exceeds its bounds")
        if self.kind == "random" and not self.hold > 0:
            raise ValueError("hold interval must be positive")
        if self.kind == "adversarial" and self.target not in ("invariance", "attraction"):
            raise ValueError("adversarial target must be 'invariance' or 'attraction'")

    # convenience constructors
    @classmethod
    def zero(cls, bounds: Optional[DisturbanceBounds] = None):
        return cls("zero", bounds or DisturbanceBounds())

    @classmethod
    def constant(cls, c1: float, c2: float, bounds: Optional[DisturbanceBounds] = None):
        return cls("constant", bounds or DisturbanceBounds(abs(c1), abs(c2)), values=(c1, c2))

    @classmethod
    def sinusoid(cls, amplitudes, frequencies, phases=(0.0, 0.0), bounds: Optional[DisturbanceBounds] = None):
        bounds = bounds or DisturbanceBounds(abs(amplitudes[0]), abs(amplitudes[1]))
        return cls("sinusoid", bounds, amplitudes=tuple(amplitudes), frequencies=tuple(frequencies),
                   phases=tuple(phases))

    @classmethod
    def uniform_random(cls, bounds: DisturbanceBounds, seed: int = 0, hold: float = 0.05):
        return cls("random", bounds, seed=seed, hold=hold)

    @classmethod
    def adversarial(cls, bounds: DisturbanceBounds, target: str = "invariance"):
        return cls("adversarial", bounds, target=target)

    @property
    def state_dependent(self) -> bool:
        return self.kind == "adversarial"

    def _random_values(self, k: np.ndarray) -> np.ndarray:
        """Values of hold-buckets ``k``; each block of buckets has its own seeded stream."""
        out = np.empty((k.size, 2))
        blocks = k // _RANDOM_BLOCK
        bars = np.array([self.bounds.d1_bar, self.bounds.d2_bar])
        for b in np.unique(blocks):
            tab = self._cache.get(b)
            if tab is None:
                rng = np.random.default_rng([self.seed, int(b)])
                tab = rng.uniform(-1.0, 1.0, (_RANDOM_BLOCK, 2)) * bars
                self._cache[b] = tab
            m = blocks == b
            out[m] = tab[k[m] % _RANDOM_BLOCK]
        return out

    def sample(self, t, gradient=None):
        """``(d1, d2)`` at time(s) ``t``.

        ``gradient`` = (c1, c2), the sensitivity of the adversary's target to
        (d1, d2); required for the adversarial kind, ignored otherwise.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("time must be non-negative")
        z = np.zeros_like(t)
        if self.kind == "zero":
            d1, d2 = z, z.copy()
        elif self.kind == "constant":
            d1, d2 = z + self.values[0], z + self.values[1]
        elif self.kind == "sinusoid":
            d1 = self.amplitudes[0] * np.sin(2 * np.pi * self.frequencies[0] * t + self.phases[0])
            d2 = self.amplitudes[1] * np.sin(2 * np.pi * self.frequencies[1] * t + self.phases[1])
        elif self.kind == "random":
            k = np.floor(np.atleast_1d(t) / self.hold).astype(np.int64)
            vals = self._random_values(k)
            d1, d2 = vals[:, 0].reshape(t.shape), vals[:, 1].reshape(t.shape)
        else:
            if gradient is None:
                raise ValueError("adversarial disturbance needs the target gradient")
            d1, d2 = worst_vertex(gradient, self.bounds)
            d1, d2 = z + d1, z + d2
        return d1[()], d2[()]


def sample(signal: DisturbanceSignal, t, gradient=None):
    return signal.sample(t, gradient)


def worst_vertex(gradient, bounds: DisturbanceBounds):
    """Box vertex minimising an objective affine in (d1, d2) with slopes ``gradient``."""
    c1, c2 = gradient
    d1 = np.where(np.asarray(c1) > 0, -bounds.d1_bar, bounds.d1_bar)
    d2 = np.where(np.asarray(c2) > 0, -bounds.d2_bar, bounds.d2_bar)
    return d1[()], d2[()]


class SignalBank:
    """Many signals sampled together, one value per run (used by batched runs)."""

    def __init__(self, signals: Sequence[DisturbanceSignal], t_max: float):
        self.signals = list(signals)
        n = len(self.signals)
        kinds = np.array([s.kind for s in self.signals])
        self.adversarial = kinds == "adversarial"
        self.const = np.zeros((n, 2))
        self.amp = np.zeros((n, 2))
        self.freq = np.zeros((n, 2))
        self.phase = np.zeros((n, 2))
        self.bars = np.array([[s.bounds.d1_bar, s.bounds.d2_bar] for s in self.signals]).reshape(n, 2)
        self.random_idx = np.flatnonzero(kinds == "random")
        for i, s in enumerate(self.signals):
            if s.kind == "constant":
                self.const[i] = s.values
            elif s.kind == "sinusoid":
                self.amp[i], self.freq[i], self.phase[i] = s.amplitudes, s.frequencies, s.phases
        if self.random_idx.size:
            self.hold = np.array([self.signals[i].hold for i in self.random_idx])
            n_buckets = int(np.ceil(t_max / self.hold.min())) + 2
            self.table = np.stack([self.signals[i]._random_values(np.arange(n_buckets))
                                   for i in self.random_idx], axis=1)  # (buckets, n_random, 2)
        self.sinus = np.flatnonzero(kinds == "sinusoid")

    def sample(self, t: float, gradient=None):
        d = self.const.copy()
        if self.sinus.size:
            i = self.sinus
            d[i] = self.amp[i] * np.sin(2 * np.pi * self.freq[i] * t + self.phase[i])
        if self.random_idx.size:
            k = np.minimum(np.floor(t / self.hold).astype(np.int64), self.table.shape[0] - 1)
            d[self.random_idx] = self.table[k, np.arange(self.random_idx.size)]
        if np.any(self.adversarial):
            c1, c2 = gradient
            m = self.adversarial
            d[m, 0] = np.where(np.asarray(c1)[m] > 0, -self.bars[m, 0], self.bars[m, 0])
            d[m, 1] = np.where(np.asarray(c2)[m] > 0, -self.bars[m, 1], self.bars[m, 1])
        return d[:, 0], d[:, 1]


# ---------------------------------------------------------------------------
# dynamics


def dynamics(pose: Pose, v: float, omega: float, d1: float = 0.0, d2: float = 0.0):
    """World-frame rates ``(xdot, ydot, thetadot)``."""
    return _rates(pose.x, pose.y, pose.theta, v, omega, d1, d2)


def _rates(x, y, theta, v, omega, d1, d2):
    speed = (1.0 + d1) * v
    return np.cos(theta) * speed, np.sin(theta) * speed, (1.0 + d2) * omega


def step_arrays(x, y, theta, v, omega, dt, d_stages, method: str = "rk4"):
    """Advance arrays of poses by ``dt`` with ``omega`` held.

    ``d_stages`` gives (d1, d2) at t (Euler) or at (t, t+dt/2, t+dt) (RK4).
    """
    if method == "euler":
        d1, d2 = d_stages[0]
        fx, fy, ft = _rates(x, y, theta, v, omega, d1, d2)
        return x + dt * fx, y + dt * fy, theta + dt * ft
    if method != "rk4":
        raise ValueError(f"unknown integrator {method!r}")
    (a1, a2), (b1, b2), (c1, c2) = d_stages
    k1 = _rates(x, y, theta, v, omega, a1, a2)
    k2 = _rates(x + 0.5 * dt * k1[0], y + 0.5 * dt * k1[1], theta + 0.5 * dt * k1[2], v, omega, b1, b2)
    k3 = _rates(x + 0.5 * dt * k2[0], y + 0.5 * dt * k2[1], theta + 0.5 * dt * k2[2], v, omega, b1, b2)
    k4 = _rates(x + dt * k3[0], y + dt * k3[1], theta + dt * k3[2], v, omega, c1, c2)
    return tuple(s + dt / 6.0 * (p + 2 * q + 2 * r + w)
                 for s, p, q, r, w in zip((x, y, theta), k1, k2, k3, k4))


def stage_times(t: float, dt: float, method: str):
    return (t,) if method == "euler" else (t, t + 0.5 * dt, t + dt)


def integrate_step(pose: Pose, controller, path, signal: DisturbanceSignal, t: float, dt: float,
                   method: str = "rk4", hint: Optional[float] = None):
    """One sample-and-hold step of the closed loop.

    ``controller`` is a ``ControllerParams``; the turn rate is computed once
    from the transverse state at ``t`` and held over the step.
    Returns ``(new_pose, transverse_state, omega)``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    from .controller import control
    from .frenet import to_transverse
    from .invariant import disturbance_gradient

    ts = to_transverse(pose, path, hint=hint)
    omega = control(ts, controller)
    grad = None
    if signal.state_dependent:
        grad = disturbance_gradient(ts.y_err, ts.theta_err, ts.kappa_abs, controller, signal.target)
    d_stages = [signal.sample(tt, grad) for tt in stage_times(t, dt, method)]
    x, y, th = step_arrays(pose.x, pose.y, pose.theta, controller.v, omega, dt, d_stages, method)
    return Pose(float(x), float(y), float(wrap_angle(th))), ts, omega
