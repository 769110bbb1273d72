"""Invariant sliding-mode turn-rate law, its boundary-layer variant, and
parameter synthesis from disturbance bounds."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .plant import DisturbanceBounds

LAWS = ("sign", "saturated")


class InfeasibleBoundsError(ValueError):
    """(1 - d2_bar) < 0.5 (1 + d1_bar): no margin q can reject these disturbances."""


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerParams:
    """Tuning of the sliding-mode law.

    R is the vehicle's minimum turning radius, v the nominal speed, p the
    invariance margin, q the sliding-variable margin, ``y_intercept`` the
    normalised lateral intercept of the invariant set and ``phi`` the
    boundary-layer width (only used by ``law="saturated"``).
    """

    R: float = 0.8
    v: float = 0.8
    p: float = 0.0
    q: float = 0.0
    y_intercept: float = 1.0
    phi: float = 0.05
    law: str = "sign"

    def __post_init__(self):
        if not self.R > 0 or not self.v > 0:
            raise ParameterError("R and v must be positive")
        if not 0.0 <= self.p < 1.0:
            raise ParameterError(f"p must lie in [0, 1), got {self.p}")
        if not 0.0 <= self.q < 1.0:
            raise ParameterError(f"q must lie in [0, 1), got {self.q}")
        if not 0.0 < self.y_intercept <= 1.0:
            raise ParameterError(f"y_intercept must lie in (0, 1], got {self.y_intercept}")
        if self.law not in LAWS:
            raise ParameterError(f"law must be one of {LAWS}")
        if self.law == "saturated" and not self.phi > 0:
            raise ParameterError("saturated law needs phi > 0")

    def with_(self, **kw) -> "ControllerParams":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {"R": self.R, "v": self.v, "p": self.p, "q": self.q, "y_intercept": self.y_intercept,
                "phi": self.phi, "law": self.law}


def _ratio(bounds: DisturbanceBounds) -> float:
    return (1.0 - bounds.d2_bar) / (1.0 + bounds.d1_bar)


def feasible(bounds: DisturbanceBounds) -> bool:
    return (1.0 - bounds.d2_bar) >= 0.5 * (1.0 + bounds.d1_bar)


def _require_feasible(bounds: DisturbanceBounds):
    if not feasible(bounds):
        raise InfeasibleBoundsError(
            f"disturbance bounds (d1_bar={bounds.d1_bar}, d2_bar={bounds.d2_bar}) violate "
            f"(1 - d2_bar) >= 0.5 (1 + d1_bar): {1 - bounds.d2_bar:.6g} < {0.5 * (1 + bounds.d1_bar):.6g}")


def min_p(bounds: DisturbanceBounds) -> float:
    """Smallest admissible invariance margin (gives the largest invariant set)."""
    _require_feasible(bounds)
    return 1.0 - _ratio(bounds)


def q_window(bounds: DisturbanceBounds) -> tuple[float, float]:
    _require_feasible(bounds)
    r = _ratio(bounds)
    return 1.0 - r, r


def min_path_radius(params: ControllerParams) -> float:
    """Smallest path radius of curvature for which the invariant set is guaranteed."""
    return 2.0 * params.R / (1.0 - params.p) - params.y_intercept * params.R


def audit(params: ControllerParams, bounds: DisturbanceBounds, atol: float = 1e-12) -> None:
    """Raise ``ParameterError`` unless p and q are admissible for ``bounds``."""
    _require_feasible(bounds)
    problems = []
    p_lo = min_p(bounds)
    if params.p < p_lo - atol:
        problems.append(f"p = {params.p} is below the invariance threshold {p_lo:.6g}")
    q_lo, q_hi = q_window(bounds)
    if not q_lo - atol <= params.q <= q_hi + atol:
        problems.append(f"q = {params.q} is outside the convergence window [{q_lo:.6g}, {q_hi:.6g}]")
    if problems:
        raise ParameterError("; ".join(problems))


def synthesize(bounds: DisturbanceBounds, R: float = 0.8, v: float = 0.8, p: Optional[float] = None,
               q: Optional[float] = None, y_intercept: float = 1.0, phi: float = 0.05,
               law: str = "sign") -> ControllerParams:
    """Audited parameters; p defaults to its minimum, q to the window midpoint."""
    if p is None:
        p = min_p(bounds)
    if q is None:
        q = 0.5 * sum(q_window(bounds))
    params = ControllerParams(R=R, v=v, p=p, q=q, y_intercept=y_intercept, phi=phi, law=law)
    audit(params, bounds)
    return params


# ---------------------------------------------------------------------------


def sigma(y_err, theta_err, params: ControllerParams):
    """Sliding variable; sign(0) = 0."""
    theta_err = np.asarray(theta_err, dtype=float)
    return (-np.asarray(y_err) * (1.0 - params.q) / params.R
            - np.sign(theta_err) * (1.0 - np.cos(theta_err)))[()]


def sat(x, phi: float):
    return np.clip(np.asarray(x, dtype=float) / phi, -1.0, 1.0)[()]


def turn_rate(y_err, theta_err, curv_sign, params: ControllerParams, law: Optional[str] = None):
    """Array form of the control law; ``|omega| <= v / R`` always."""
    law = law or params.law
    sg = sigma(y_err, theta_err, params)
    u = np.sign(sg) if law == "sign" else sat(sg, params.phi)
    return (np.asarray(curv_sign) * u * params.v / params.R)[()]


def control(ts, params: ControllerParams) -> float:
    """Turn rate for a ``TransverseState``."""
    return float(turn_rate(ts.y_err, ts.theta_err, ts.curv_sign, params))


def benchmark_params(law: str = "sign", phi: float = 0.05) -> ControllerParams:
    """R = v = 0.8, p = 0.182, q = 0.59, intercept 1 (benchmark settings)."""
    return ControllerParams(R=0.8, v=0.8, p=0.182, q=0.59, y_intercept=1.0, phi=phi, law=law)


BENCHMARK_BOUNDS = DisturbanceBounds(0.1, 0.1)
