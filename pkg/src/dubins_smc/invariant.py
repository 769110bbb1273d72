"""The robust invariant set of the transverse errors and grid certificates for it.

The set is the union of two halves that share the segment theta_err = 0:

* upper half (theta_err >= 0): bounded by L1 >= 0 and Gamma1 >= 0
* lower half (theta_err <= 0): bounded by L2 >= 0 and Gamma2 >= 0

which is the region whose boundary pieces are checked one by one in the
invariance argument (L1 and Gamma1 for theta_err >= 0, L2 and Gamma2 for
theta_err <= 0).  Intersecting all four inequalities everywhere would give a
lens that trajectories from the benchmark starts leave immediately.

Certificates evaluate the analytic derivatives of the boundary functions (and
of sigma * sigma_dot) on dense grids.  All expressions are affine in
(d1, d2), so the worst disturbance is found by enumerating the four corners of
the disturbance box; curvature enters through |kappa| / (1 - |kappa| y) and is
swept over both endpoints {0, kappa_abs_max}.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .controller import ControllerParams, min_path_radius, q_window, sigma
from .plant import DisturbanceBounds

CERT_TOL = 1e-9


class CertificatePreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class InvariantSetSpec:
    p: float
    y_intercept: float
    R: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        if not 0.0 < self.y_intercept <= 1.0:
            raise ValueError("y_intercept must lie in (0, 1]")
        if not self.R > 0:
            raise ValueError("R must be positive")

    @classmethod
    def from_params(cls, params: ControllerParams) -> "InvariantSetSpec":
        return cls(params.p, params.y_intercept, params.R)

    @property
    def corner_angle(self) -> float:
        """|theta_err| at the corners where the straight and curved boundaries meet."""
        return float(np.arccos(1.0 - self.y_intercept * (1.0 - self.p)))


def _spec(spec_or_params) -> InvariantSetSpec:
    if isinstance(spec_or_params, InvariantSetSpec):
        return spec_or_params
    return InvariantSetSpec.from_params(spec_or_params)


def boundary_values(y_err, theta_err, spec):
    """``(L1, L2, Gamma1, Gamma2)``."""
    spec = _spec(spec)
    u = np.asarray(y_err, dtype=float) / spec.R
    a, m = spec.y_intercept, 1.0 - spec.p
    c = 2.0 * np.cos(theta_err)
    return (u + a)[()], (a - u)[()], (-2.0 + a * m - u * m + c)[()], (-2.0 + a * m + u * m + c)[()]


def boundary_margin(y_err, theta_err, spec):
    """Smallest boundary value active in the half containing ``theta_err``.

    Non-negative exactly on the set (inside the box ``|y| <= R``,
    ``|theta| <= pi/2``); the value criterion checks compare to a tolerance.
    """
    spec = _spec(spec)
    L1, L2, G1, G2 = boundary_values(y_err, theta_err, spec)
    th = np.asarray(theta_err, dtype=float)
    upper = np.minimum(L1, G1)
    lower = np.minimum(L2, G2)
    m = np.where(th > 0, upper, np.where(th < 0, lower, np.minimum(upper, lower)))
    box = np.minimum(1.0 - np.abs(np.asarray(y_err)) / spec.R, np.pi / 2 - np.abs(th))
    return np.minimum(m, box)[()]


def contains(y_err, theta_err, spec, tol: float = 0.0):
    return (boundary_margin(y_err, theta_err, spec) >= -tol)[()]


def gamma2_tilde(spec, kappa_abs):
    """Auxiliary bound used near the Gamma2 boundary; ``inf`` on straight pieces."""
    spec = _spec(spec)
    k = np.asarray(kappa_abs, dtype=float)
    with np.errstate(divide="ignore"):
        inv = np.where(k > 0, 1.0 / (np.where(k > 0, k, 1.0) * spec.R), np.inf)
    return (-2.0 + spec.y_intercept * (1.0 - spec.p) + inv * (1.0 - spec.p))[()]


def _gamma2_tilde_root(spec) -> float:
    """Largest |kappa| with gamma2_tilde >= 0 (``inf`` if it never turns negative)."""
    m = 1.0 - spec.p
    den = spec.R * (2.0 - spec.y_intercept * m)
    return m / den if den > 0 else np.inf


def classify_region(y_err: float, theta_err: float, params: ControllerParams) -> int:
    """Region 1..4 of the (sign theta_err, sign sigma) partition of the set.

    1: theta >= 0, sigma >= 0;  3: theta >= 0, sigma <= 0;
    2: theta <= 0, sigma <= 0;  4: theta <= 0, sigma >= 0.
    Ties go to the lower-numbered region.
    """
    if not contains(y_err, theta_err, params):
        raise ValueError(f"({y_err}, {theta_err}) is outside the invariant set")
    sg = float(sigma(y_err, theta_err, params))
    th = float(theta_err)
    if th >= 0 and sg >= 0:
        return 1
    if th <= 0 and sg <= 0:
        return 2
    return 3 if th >= 0 else 4


def region_labels(y_err, theta_err, params: ControllerParams):
    """Vectorised region labels (no membership check)."""
    sg = sigma(y_err, theta_err, params)
    th = np.asarray(theta_err)
    return np.where((th >= 0) & (sg >= 0), 1,
                    np.where((th <= 0) & (sg <= 0), 2, np.where(th >= 0, 3, 4)))


# ---------------------------------------------------------------------------
# closed-loop derivatives (sign law unless a normalised input ``u`` is given)


def _curv_term(y_err, kappa_abs):
    # cos(theta) / (|R_hat| - y)  ==  kappa cos(theta) / (1 - kappa y)
    return np.asarray(kappa_abs) / (1.0 - np.asarray(kappa_abs) * np.asarray(y_err))


def boundary_derivatives(y_err, theta_err, kappa_abs, d1, d2, params: ControllerParams, u=None):
    """Time derivatives ``(L1dot, L2dot, Gamma1dot, Gamma2dot)`` along the closed loop.

    ``u`` is the normalised control omega * sign(R_hat) * R / v; it defaults
    to sign(sigma) (the discontinuous law).
    """
    v, R, p = params.v, params.R, params.p
    if u is None:
        u = np.sign(sigma(y_err, theta_err, params))
    s, c = np.sin(theta_err), np.cos(theta_err)
    k = _curv_term(y_err, kappa_abs)
    L1 = s * (1.0 + d1) * v / R
    G_common = 2.0 * c * (1.0 + d1) * v * k - 2.0 * u * (1.0 + d2) * v / R
    G1 = s * ((p - 1.0) * (1.0 + d1) * v / R + G_common)
    G2 = s * ((1.0 - p) * (1.0 + d1) * v / R + G_common)
    return L1, -L1, G1, G2


def sigma_sigma_dot(y_err, theta_err, kappa_abs, d1, d2, params: ControllerParams, u=None):
    """sigma * d(sigma)/dt along the closed loop."""
    v, R, q = params.v, params.R, params.q
    sg = sigma(y_err, theta_err, params)
    if u is None:
        u = np.sign(sg)
    s, c = np.sin(theta_err), np.cos(theta_err)
    ydot = s * (1.0 + d1) * v
    thdot = -c * (1.0 + d1) * v * _curv_term(y_err, kappa_abs) + u * (1.0 + d2) * v / R
    sdot = -(1.0 - q) * ydot / R - np.sign(theta_err) * s * thdot
    return sg * sdot


def sigma_sigma_dot_bound(y_err, theta_err, d1, d2, params: ControllerParams):
    """Curvature-free upper bound on sigma * sigma_dot used in the convergence argument.

    For sigma >= 0 (region 1): -|sigma||sin|/R [-q (1 + d1) v + (1 + d2) v];
    for sigma <= 0 (region 3): -|sigma||sin|/R [(q - 1)(1 + d1) v + (1 + d2) v].
    """
    v, R, q = params.v, params.R, params.q
    sg = sigma(y_err, theta_err, params)
    scale = -np.abs(sg) * np.abs(np.sin(theta_err)) / R
    coef = np.where(sg >= 0, -q, q - 1.0)
    return scale * (coef * (1.0 + d1) * v + (1.0 + d2) * v)


def disturbance_gradient(y_err, theta_err, kappa_abs, params: ControllerParams, target: str = "invariance",
                         u=None):
    """Slopes (c1, c2) of the adversary's objective with respect to (d1, d2).

    ``invariance``: the derivative of the tightest active boundary function
    (to be made as negative as possible).  ``attraction``: minus sigma*sigma_dot.
    Both objectives are affine in (d1, d2), so finite differences are exact.
    """
    if target == "invariance":
        L1, L2, G1, G2 = boundary_values(y_err, theta_err, params)
        th = np.asarray(theta_err)
        vals = np.stack(np.broadcast_arrays(L1, L2, G1, G2))
        vals = np.where(np.stack([th >= 0, th <= 0, th >= 0, th <= 0]), vals, np.inf)
        which = np.argmin(vals, axis=0)

        def f(d1, d2):
            dots = np.stack(np.broadcast_arrays(*boundary_derivatives(y_err, theta_err, kappa_abs, d1, d2,
                                                                      params, u)))
            return np.take_along_axis(dots, np.asarray(which)[None, ...], axis=0)[0]
    elif target == "attraction":
        def f(d1, d2):
            return -sigma_sigma_dot(y_err, theta_err, kappa_abs, d1, d2, params, u)
    else:
        raise ValueError(f"unknown adversary target {target!r}")
    f0 = f(0.0, 0.0)
    return (f(1.0, 0.0) - f0)[()], (f(0.0, 1.0) - f0)[()]


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Check:
    name: str
    passed: bool
    n_samples: int
    extremum: float                # min derivative (boundaries) or max sigma*sigma_dot (regions)
    at: dict = field(default_factory=dict)
    bound_extremum: Optional[float] = None  # region checks: max of the curvature-free bound


@dataclass
class CertificateReport:
    kind: str
    passed: bool
    checks: list
    params: dict
    bounds: dict
    kappa_abs_max: float
    tolerance: float
    notes: list = field(default_factory=list)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return asdict(self)


def _vertex_kappa_sweep(fn, kappa_abs_max, bounds: DisturbanceBounds):
    """Stack ``fn(d1, d2, kappa)`` over the 4 box corners x {0, kappa_abs_max}."""
    out, tags = [], []
    for d1, d2 in bounds.vertices():
        for k in (0.0, kappa_abs_max):
            out.append(fn(d1, d2, k))
            tags.append((float(d1), float(d2), float(k)))
    return np.stack(out), tags


def nagumo_certificate(spec, params: ControllerParams, bounds: DisturbanceBounds, kappa_abs_max: float,
                       n_samples: int = 1000, tol: float = CERT_TOL) -> CertificateReport:
    """Check that the closed-loop field points into the set on all four boundary pieces.

    Boundary 1: L1 = 0, theta in [0, corner];  Boundary 3: Gamma1 = 0, theta in [0, corner];
    Boundary 2: L2 = 0, theta in [-corner, 0]; Boundary 4: Gamma2 = 0, theta in [-corner, 0],
    only for curvatures where Gamma2 <= Gamma2_tilde.  A piece passes when the minimum derivative
    of its boundary function over samples, disturbance corners and curvature
    endpoints is >= -tol.
    """
    spec = _spec(spec)
    r_min = 2.0 * spec.R / (1.0 - spec.p) - spec.y_intercept * spec.R
    if kappa_abs_max < 0:
        raise CertificatePreconditionError("kappa_abs_max must be non-negative")
    if kappa_abs_max * r_min > 1.0 + 1e-12:
        raise CertificatePreconditionError(
            f"curvature bound 1/{1.0 / kappa_abs_max:.6g} violates the minimum path radius {r_min:.6g}")

    a, m, R = spec.y_intercept, 1.0 - spec.p, spec.R
    corner = spec.corner_angle
    up = np.linspace(0.0, corner, n_samples)
    lo = -up[::-1]
    pieces = {
        "boundary 1 (L1 = 0)": (np.full(n_samples, -a * R), up, 0),
        "boundary 2 (L2 = 0)": (np.full(n_samples, a * R), lo, 1),
        "boundary 3 (Gamma1 = 0)": ((a - 2.0 * (1.0 - np.cos(up)) / m) * R, up, 2),
        "boundary 4 (Gamma2 = 0)": ((-a + 2.0 * (1.0 - np.cos(lo)) / m) * R, lo, 3),
    }
    checks = []
    for name, (y, th, idx) in pieces.items():
        k_hi = kappa_abs_max
        if idx == 3:
            # Gamma2 = 0 here, so the piece matters only while Gamma2_tilde >= 0,
            # i.e. for |kappa| up to k_star.  The derivative is monotone in |kappa|,
            # so the endpoints of [0, min(kappa_abs_max, k_star)] bracket it.
            k_hi = min(kappa_abs_max, _gamma2_tilde_root(spec))
        vals, tags = _vertex_kappa_sweep(
            lambda d1, d2, k: boundary_derivatives(y, th, k, d1, d2, params)[idx], k_hi, bounds)
        j, i = np.unravel_index(np.argmin(vals), vals.shape)
        vmin = float(vals[j, i])
        d1, d2, k = tags[j]
        checks.append(Check(name, vmin >= -tol, int(n_samples), vmin,
                            {"y_err": float(y[i]), "theta_err": float(th[i]), "d1": d1, "d2": d2,
                             "kappa_abs": k}))
    return CertificateReport("nagumo", all(c.passed for c in checks), checks, params.to_dict(),
                             {"d1_bar": bounds.d1_bar, "d2_bar": bounds.d2_bar}, float(kappa_abs_max), tol)


def attractiveness_certificate(params: ControllerParams, bounds: DisturbanceBounds, kappa_abs_max: float,
                               n_samples: int = 64, tol: float = CERT_TOL,
                               mode: str = "proof") -> CertificateReport:
    """Check sigma * sigma_dot < 0 off the manifold in regions 1 and 3.

    The exact closed-form value is maximised over disturbance corners and
    curvature endpoints.  With ``mode="proof"`` the curvature-free bound that
    the convergence argument relies on must also be negative; this is what
    ties the check to the q window.  ``mode="exact"`` checks the closed form
    only (which, for admissible curvature, tolerates q above the window).
    """
    if mode not in ("proof", "exact"):
        raise ValueError("mode must be 'proof' or 'exact'")
    spec = InvariantSetSpec.from_params(params)
    R, a = params.R, params.y_intercept
    uu, tt = np.meshgrid(np.linspace(-a, a, n_samples), np.linspace(0.0, np.pi / 2, n_samples + 1)[1:])
    y, th = (uu * R).ravel(), tt.ravel()
    sg = sigma(y, th, params)
    L1, _, G1, _ = boundary_values(y, th, spec)
    regions = {
        "region 1": (sg > tol) & (L1 >= 0),
        "region 3": (sg < -tol) & (L1 >= 0) & (G1 >= 0),
    }
    notes = []
    q_lo, q_hi = q_window(bounds)
    if not q_lo - 1e-12 <= params.q <= q_hi + 1e-12:
        notes.append(f"q = {params.q} is outside the window [{q_lo:.6g}, {q_hi:.6g}]")
    checks = []
    for name, mask in regions.items():
        ys, ths = y[mask], th[mask]
        if ys.size == 0:
            checks.append(Check(name, True, 0, -np.inf))
            continue
        exact, tags = _vertex_kappa_sweep(
            lambda d1, d2, k: sigma_sigma_dot(ys, ths, k, d1, d2, params), kappa_abs_max, bounds)
        bound = np.stack([sigma_sigma_dot_bound(ys, ths, d1, d2, params) for d1, d2 in bounds.vertices()])
        j, i = np.unravel_index(np.argmax(exact), exact.shape)
        emax, bmax = float(exact[j, i]), float(bound.max())
        passed = emax < 0 and (mode == "exact" or bmax < 0)
        d1, d2, k = tags[j]
        at = {"y_err": float(ys[i]), "theta_err": float(ths[i]), "d1": d1, "d2": d2, "kappa_abs": k}
        if mode == "proof" and bmax >= 0:
            jb, ib = np.unravel_index(np.argmax(bound), bound.shape)
            vb = bounds.vertices()[jb]
            at = {"y_err": float(ys[ib]), "theta_err": float(ths[ib]), "d1": float(vb[0]), "d2": float(vb[1]),
                  "kappa_abs": None}
        checks.append(Check(name, passed, int(ys.size), emax, at, bmax))
    return CertificateReport("attractiveness", all(c.passed for c in checks), checks, params.to_dict(),
                             {"d1_bar": bounds.d1_bar, "d2_bar": bounds.d2_bar}, float(kappa_abs_max), tol,
                             notes + [f"mode={mode}"])


def default_kappa_max(params: ControllerParams) -> float:
    """Largest curvature the invariant set tolerates, 1 / min_path_radius."""
    return 1.0 / min_path_radius(params)
