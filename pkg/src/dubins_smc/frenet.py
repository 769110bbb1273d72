"""Transverse (Frenet-Serret) error coordinates and their perturbed dynamics.

Sign convention: ``y_err`` is positive towards the centre of curvature and
``theta_err`` is measured in the same rotational sense, both multiplied by
sign(R_hat(s_hat)).  Straight pieces use sign +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .refpath import ReferencePath, curvature_sign, wrap_angle


class FrameSingularityError(RuntimeError):
    """|kappa| * y_err >= 1: the point is at or beyond the centre of curvature."""


@dataclass(frozen=True)
class TransverseState:
    y_err: float
    theta_err: float
    s_hat: float
    curv_sign: float
    kappa_abs: float
    x_err: float = 0.0  # longitudinal residual of the projection

    @property
    def in_heading_range(self) -> bool:
        return abs(self.theta_err) <= np.pi / 2


@dataclass(frozen=True)
class TransverseRates:
    dy: float
    dtheta: float


def frame_errors(x, y, theta, path: ReferencePath, s_hat):
    """Vectorised errors at a known ``s_hat``.

    Returns ``(x_err, y_err, theta_err, curv_sign, kappa_abs)``.
    """
    xh, yh, th, kappa = path.frame(s_hat)
    sgn = curvature_sign(kappa)
    ex, ey = np.asarray(x) - xh, np.asarray(y) - yh
    c, s = np.cos(th), np.sin(th)
    x_err = ex * c + ey * s
    y_err = sgn * (ey * c - ex * s)
    theta_err = wrap_angle(sgn * (np.asarray(theta) - th))
    return x_err, y_err, theta_err, sgn, np.abs(kappa)


def to_transverse(pose, path: ReferencePath, hint: Optional[float] = None,
                  neighborhood: Optional[float] = None) -> TransverseState:
    """Project ``pose`` onto ``path`` and express it in transverse coordinates."""
    res = path.project((pose.x, pose.y), hint=hint, neighborhood=neighborhood)
    x_err, y_err, theta_err, sgn, kabs = frame_errors(pose.x, pose.y, pose.theta, path, res.s_hat)
    if float(kabs) * float(y_err) >= 1.0:
        raise FrameSingularityError(f"|kappa| * y_err = {float(kabs) * float(y_err):.6g} >= 1")
    return TransverseState(float(y_err), float(theta_err), res.s_hat, float(sgn), float(kabs), float(x_err))


def rates(y_err, theta_err, kappa_abs, curv_sign, v, omega, d1, d2):
    """Array form of the transverse dynamics; returns ``(dy, dtheta)``."""
    denom = 1.0 - kappa_abs * y_err
    if np.any(denom <= 0.0):
        raise FrameSingularityError("|kappa| * y_err >= 1")
    speed = (1.0 + d1) * v
    dy = np.sin(theta_err) * speed
    dtheta = -kappa_abs * np.cos(theta_err) / denom * speed + curv_sign * (1.0 + d2) * omega
    return dy, dtheta


def transverse_rates(ts: TransverseState, v: float, omega: float, d1: float = 0.0,
                     d2: float = 0.0) -> TransverseRates:
    dy, dth = rates(ts.y_err, ts.theta_err, ts.kappa_abs, ts.curv_sign, v, omega, d1, d2)
    return TransverseRates(float(dy), float(dth))


def from_transverse(path: ReferencePath, s: float, y_err: float, theta_err: float):
    """World pose ``(x, y, theta)`` at ``s`` with the given transverse errors."""
    xh, yh, th, kappa = path.frame(s)
    sgn = float(curvature_sign(kappa))
    nx, ny = -np.sin(th), np.cos(th)
    return (float(xh + sgn * y_err * nx), float(yh + sgn * y_err * ny),
            float(wrap_angle(th + sgn * theta_err)))
