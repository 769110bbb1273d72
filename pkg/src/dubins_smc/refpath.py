"""Curvature-constrained reference paths g(s), s in [0, 1].

A path is an ordered list of segments (lines, circular arcs, or analytic
parametric curves), each owning a sub-interval of [0, 1].  Every quantity is
evaluated with numpy and accepts scalar or array ``s``.

Curvature is stored as a signed value ``kappa = 1/R_hat`` so straight pieces
are ``kappa = 0`` rather than an infinite radius.  At segment joins the
right-limit (upcoming segment) is used.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

# coarse grid used to bracket the minimiser on analytic segments
PROJECTION_GRID = 1024
PROJECTION_TOL = 1e-10
WARM_WINDOW = 0.02


class PathError(ValueError):
    """Malformed path or out-of-domain query."""


class DegenerateCurveError(PathError):
    pass


class ProjectionError(RuntimeError):
    """Query point is too far from the path to have a well-defined projection."""


class UniquenessError(ProjectionError):
    """The nearest point on the path is not unique."""


def wrap_angle(a):
    """Wrap angles to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), TWO_PI)


# ---------------------------------------------------------------------------
# segments.  Each segment is parametrised by a local t in [0, 1]; derivatives
# returned by ``deriv`` are with respect to t.


@dataclass(frozen=True)
class LineSegment:
    start: tuple[float, float]
    end: tuple[float, float]
    kind: str = field(default="line", init=False)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        a, b = np.asarray(self.start, float), np.asarray(self.end, float)
        return a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        dx, dy = self.end[0] - self.start[0], self.end[1] - self.start[1]
        z = np.zeros_like(t)
        return dx + z, dy + z, z, z

    def length(self) -> float:
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    def closest(self, px, py, lo, hi):
        ax, ay = self.start
        dx, dy = self.end[0] - ax, self.end[1] - ay
        t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
        return np.clip(t, lo, hi)


@dataclass(frozen=True)
class ArcSegment:
    """Circular arc ``center + radius * (cos a, sin a)`` with
    ``a = start_angle + sweep * t``.  ``sweep > 0`` is counter-clockwise."""

    center: tuple[float, float]
    radius: float
    start_angle: float
    sweep: float
    kind: str = field(default="arc", init=False)

    def __post_init__(self):
        if not self.radius > 0:
            raise PathError("arc radius must be positive")
        if self.sweep == 0 or abs(self.sweep) > TWO_PI + 1e-12:
            raise PathError("arc sweep must be nonzero and at most 2*pi")

    def point(self, t):
        a = self.start_angle + self.sweep * np.asarray(t, dtype=float)
        return self.center[0] + self.radius * np.cos(a), self.center[1] + self.radius * np.sin(a)

    def deriv(self, t):
        a = self.start_angle + self.sweep * np.asarray(t, dtype=float)
        r, w = self.radius, self.sweep
        c, s = np.cos(a), np.sin(a)
        return -r * w * s, r * w * c, -r * w * w * c, -r * w * w * s

    def length(self) -> float:
        return float(self.radius * abs(self.sweep))

    def closest(self, px, py, lo, hi):
        alpha = np.arctan2(py - self.center[1], px - self.center[0])
        mid = 0.5 * (lo + hi)
        delta = wrap_angle(alpha - (self.start_angle + self.sweep * mid))
        t = np.clip(mid + delta / self.sweep, lo, hi)
        # outside the window the nearer endpoint wins; compare all three
        cands = np.stack([t, np.broadcast_to(lo, t.shape), np.broadcast_to(hi, t.shape)])
        cx, cy = self.point(cands)
        d2 = (cx - px) ** 2 + (cy - py) ** 2
        return np.take_along_axis(cands, np.argmin(d2, axis=0)[None], axis=0)[0]


@dataclass(frozen=True, eq=False)
class ParametricSegment:
    """Analytic curve ``(fx(u), fy(u))`` for u in ``[u0, u1]``.

    ``derivs`` holds ``(dfx, dfy, ddfx, ddfy)`` as functions of u.
    """

    fx: Callable
    fy: Callable
    derivs: tuple[Callable, Callable, Callable, Callable]
    u_range: tuple[float, float] = (0.0, 1.0)
    label: str = ""
    kind: str = field(default="analytic", init=False)

    def _u(self, t):
        u0, u1 = self.u_range
        return u0 + (u1 - u0) * np.asarray(t, dtype=float)

    def point(self, t):
        u = self._u(t)
        return np.broadcast_to(self.fx(u), u.shape) * 1.0, np.broadcast_to(self.fy(u), u.shape) * 1.0

    def deriv(self, t):
        u = self._u(t)
        k = self.u_range[1] - self.u_range[0]
        dfx, dfy, ddfx, ddfy = (np.broadcast_to(f(u), u.shape) * 1.0 for f in self.derivs)
        return dfx * k, dfy * k, ddfx * k * k, ddfy * k * k

    def length(self) -> float:
        t = np.linspace(0.0, 1.0, 20001)
        dx, dy, _, _ = self.deriv(t)
        return float(np.trapezoid(np.hypot(dx, dy), t))

    def closest(self, px, py, lo, hi):
        return _grid_newton(self, px, py, lo, hi)


def _grid_newton(seg, px, py, lo, hi, n_grid=PROJECTION_GRID, tol=PROJECTION_TOL):
    """Minimise |p - seg(t)|^2 over t in [lo, hi] (arrays).

    Coarse grid to find the basin, then safeguarded Newton/bisection on the
    stationarity condition (g(t) - p) . g'(t) = 0 inside the bracketing cell.
    """
    px, py = np.atleast_1d(px).astype(float), np.atleast_1d(py).astype(float)
    lo = np.broadcast_to(lo, px.shape).astype(float)
    hi = np.broadcast_to(hi, px.shape).astype(float)
    frac = np.linspace(0.0, 1.0, n_grid + 1)
    grid = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    gx, gy = seg.point(grid)
    d2 = (gx - px[:, None]) ** 2 + (gy - py[:, None]) ** 2
    i = np.argmin(d2, axis=1)
    rows = np.arange(px.size)
    a = grid[rows, np.maximum(i - 1, 0)]
    b = grid[rows, np.minimum(i + 1, n_grid)]
    t = grid[rows, i]

    def f_and_df(t):
        x, y = seg.point(t)
        dx, dy, ddx, ddy = seg.deriv(t)
        ex, ey = x - px, y - py
        return ex * dx + ey * dy, dx * dx + dy * dy + ex * ddx + ey * ddy

    fa, _ = f_and_df(a)
    fb, _ = f_and_df(b)
    interior = (fa < 0) & (fb > 0)
    for _ in range(100):
        f, df = f_and_df(t)
        neg = f < 0
        a = np.where(interior & neg, t, a)
        b = np.where(interior & ~neg, t, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            tn = t - f / df
        bad = ~np.isfinite(tn) | (tn <= a) | (tn >= b)
        tn = np.where(bad, 0.5 * (a + b), tn)
        step = np.abs(tn - t)
        t = np.where(interior, tn, t)
        if not np.any(interior & (step > tol)) and not np.any(interior & (b - a > tol) & bad):
            break
    # no sign change in the cell: the minimum sits on a window endpoint
    x_a, y_a = seg.point(a)
    x_b, y_b = seg.point(b)
    x_t, y_t = seg.point(t)
    cands = np.stack([t, a, b])
    d = np.stack([(x_t - px) ** 2 + (y_t - py) ** 2, (x_a - px) ** 2 + (y_a - py) ** 2,
                  (x_b - px) ** 2 + (y_b - py) ** 2])
    return cands[np.argmin(d, axis=0), rows]


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionResult:
    s_hat: float
    distance: float
    unique: bool


@dataclass
class ValidationReport:
    c1_ok: bool
    max_join_gap: float
    max_join_heading_jump: float
    curvature_ok: bool
    max_abs_curvature: float
    r_lower: float
    uniqueness_ok: bool
    uniqueness_violations: int
    uniqueness_samples: int
    curvature_sign_changes: int

    @property
    def passed(self) -> bool:
        return self.c1_ok and self.curvature_ok and self.uniqueness_ok

    @property
    def min_radius(self) -> float:
        return np.inf if self.max_abs_curvature == 0 else 1.0 / self.max_abs_curvature

    def failures(self) -> list[str]:
        out = []
        if not self.c1_ok:
            out.append(f"path is not C1 at a joint (gap {self.max_join_gap:.3g}, "
                       f"heading jump {self.max_join_heading_jump:.3g} rad)")
        if not self.curvature_ok:
            out.append(f"minimum radius of curvature {self.min_radius:.6g} < required {self.r_lower:.6g}")
        if not self.uniqueness_ok:
            out.append(f"nearest point not unique in the neighbourhood: {self.uniqueness_violations}/"
                       f"{self.uniqueness_samples} sampled tube points project to another foot")
        return out

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "c1_ok": self.c1_ok,
            "max_join_gap": self.max_join_gap,
            "max_join_heading_jump": self.max_join_heading_jump,
            "curvature_ok": self.curvature_ok,
            "max_abs_curvature": self.max_abs_curvature,
            "min_radius": self.min_radius,
            "r_lower": self.r_lower,
            "uniqueness_ok": self.uniqueness_ok,
            "uniqueness_violations": self.uniqueness_violations,
            "uniqueness_samples": self.uniqueness_samples,
            "curvature_sign_changes": self.curvature_sign_changes,
            "failures": self.failures(),
        }


@dataclass(frozen=True)
class ReferencePath:
    """Ordered segments with s-ranges partitioning [0, 1]."""

    segments: tuple
    breaks: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.segments) == 0:
            raise PathError("path needs at least one segment")
        if len(self.breaks) != len(self.segments) + 1:
            raise PathError("need len(segments) + 1 breakpoints")
        b = np.asarray(self.breaks, dtype=float)
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise PathError("segment s-ranges must partition [0, 1] in increasing order")

    @classmethod
    def from_segments(cls, segments: Sequence, breaks: Optional[Sequence[float]] = None, name: str = ""):
        """Build a path; without ``breaks`` the s-ranges are proportional to length."""
        segments = tuple(segments)
        if breaks is None:
            lengths = np.array([seg.length() for seg in segments])
            breaks = np.concatenate([[0.0], np.cumsum(lengths) / lengths.sum()])
            breaks[-1] = 1.0
        return cls(segments, tuple(float(x) for x in breaks), name)

    # -- lookup helpers -----------------------------------------------------

    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s < 0.0) | (s > 1.0)) or np.any(np.isnan(s)):
            raise PathError("path parameter s must lie in [0, 1]")
        b = np.asarray(self.breaks)
        idx = np.clip(np.searchsorted(b, s, side="right") - 1, 0, len(self.segments) - 1)
        t = (s - b[idx]) / (b[idx + 1] - b[idx])
        return s, idx, t

    def _gather(self, s, fn):
        s, idx, t = self._locate(s)
        outs = None
        for k, seg in enumerate(self.segments):
            m = idx == k
            if not np.any(m):
                continue
            vals = fn(seg, t[m], k)
            if outs is None:
                outs = [np.empty(s.shape) for _ in vals]
            for o, v in zip(outs, vals):
                o[m] = v
        return tuple(o[()] if o.ndim == 0 else o for o in outs)

    # -- geometry -------------------------------------------------------------

    def eval(self, s):
        """Point g(s) as ``(x, y)``."""
        return self._gather(s, lambda seg, t, k: seg.point(t))

    def derivatives(self, s):
        """``(x', y', x'', y'')`` with respect to s (right-limit at joins)."""
        b = self.breaks

        def fn(seg, t, k):
            h = b[k + 1] - b[k]
            dx, dy, ddx, ddy = seg.deriv(t)
            return dx / h, dy / h, ddx / h**2, ddy / h**2

        return self._gather(s, fn)

    def tangent_heading(self, s):
        dx, dy, _, _ = self.derivatives(s)
        if np.any(np.hypot(dx, dy) == 0.0):
            raise DegenerateCurveError("zero derivative: heading undefined")
        return wrap_angle(np.arctan2(dy, dx))

    def signed_curvature(self, s):
        dx, dy, ddx, ddy = self.derivatives(s)
        speed2 = dx * dx + dy * dy
        if np.any(speed2 == 0.0):
            raise DegenerateCurveError("zero derivative: curvature undefined")
        k = (dx * ddy - dy * ddx) / speed2**1.5
        # straight lines evaluate to exact zeros already; kill round-off
        return np.where(np.abs(k) < 1e-14, 0.0, k)[()]

    def frame(self, s):
        """``(x_hat, y_hat, theta_hat, kappa)`` in one pass."""

        def fn(seg, t, k):
            x, y = seg.point(t)
            dx, dy, ddx, ddy = seg.deriv(t)
            k_ = (dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5
            return x, y, np.arctan2(dy, dx), k_

        x, y, th, k = self._gather(s, fn)
        k = np.where(np.abs(k) < 1e-14, 0.0, k)
        return x, y, wrap_angle(th)[()], k[()]

    def length(self) -> float:
        return float(sum(seg.length() for seg in self.segments))

    # -- projection ------------------------------------------------------------

    def project_many(self, px, py, hint=None, window: float = WARM_WINDOW):
        """Vectorised nearest-point search.

        With ``hint`` the search is restricted to ``[hint - window, hint + window]``
        (warm start); otherwise the whole path is searched.  Returns
        ``(s_hat, distance)`` arrays.
        """
        px, py = np.atleast_1d(px).astype(float), np.atleast_1d(py).astype(float)
        if hint is None:
            slo, shi = np.zeros(px.shape), np.ones(px.shape)
        else:
            h = np.broadcast_to(np.asarray(hint, dtype=float), px.shape)
            slo, shi = np.clip(h - window, 0.0, 1.0), np.clip(h + window, 0.0, 1.0)
        best_s = np.full(px.shape, np.nan)
        best_d = np.full(px.shape, np.inf)
        b = self.breaks
        for k, seg in enumerate(self.segments):
            lo = np.maximum(slo, b[k])
            hi = np.minimum(shi, b[k + 1])
            m = lo <= hi
            if not np.any(m):
                continue
            h = b[k + 1] - b[k]
            tlo, thi = (lo[m] - b[k]) / h, (hi[m] - b[k]) / h
            t = seg.closest(px[m], py[m], tlo, thi)
            x, y = seg.point(t)
            d = np.hypot(x - px[m], y - py[m])
            s = b[k] + h * t
            cur = best_d[m]
            take = d < cur
            best_d[m] = np.where(take, d, cur)
            best_s[m] = np.where(take, s, best_s[m])
        return best_s, best_d

    def project(self, point, hint: Optional[float] = None, neighborhood: Optional[float] = None,
                check_unique: bool = True) -> ProjectionResult:
        """Nearest point on the path to ``point``.

        Without a hint the point must lie within ``neighborhood`` of the path
        (when given).  A second, distinct nearest point raises ``UniquenessError``.
        """
        px, py = float(point[0]), float(point[1])
        s, d = self.project_many(px, py, hint=hint)
        s, d = float(s[0]), float(d[0])
        if hint is None and neighborhood is not None and not d < neighborhood:
            raise ProjectionError(f"point is {d:.6g} from the path, outside the neighbourhood {neighborhood:.6g}")
        unique = True
        if check_unique and hint is None:
            unique = self._count_minima(np.array([px]), np.array([py]))[0] <= 1
            if not unique:
                raise UniquenessError(f"nearest point to ({px}, {py}) is not unique")
        return ProjectionResult(s, d, unique)

    def _count_minima(self, px, py, n_grid: int = 4096, rel_tol: float = 1e-9):
        """Number of distinct global-minimum basins of |p - g(s)| on a dense grid.

        Each local minimum of the sampled distance is refined; basins whose
        refined distance ties the global minimum (within ``rel_tol``) and whose
        foot points differ are counted.
        """
        s_grid = np.linspace(0.0, 1.0, n_grid + 1)
        gx, gy = self.eval(s_grid)
        d = np.hypot(gx[None, :] - px[:, None], gy[None, :] - py[:, None])
        counts = np.zeros(px.size, dtype=int)
        for i in range(px.size):
            row = d[i]
            left = np.concatenate([[np.inf], row[:-1]])
            right = np.concatenate([row[1:], [np.inf]])
            cand = np.flatnonzero((row <= left) & (row <= right))
            if cand.size == 0:
                cand = np.array([np.argmin(row)])
            step = 1.0 / n_grid
            s_ref, d_ref = self.project_many(np.full(cand.size, px[i]), np.full(cand.size, py[i]),
                                             hint=s_grid[cand], window=1.5 * step)
            dmin = d_ref.min()
            ties = s_ref[d_ref <= dmin + rel_tol * max(1.0, dmin)]
            fx, fy = self.eval(ties)
            fx, fy = np.atleast_1d(fx), np.atleast_1d(fy)
            # distinct foot points (adjacent grid minima refine to the same foot)
            distinct = []
            for x, y in zip(fx, fy):
                if all(np.hypot(x - a, y - b) > 1e-6 for a, b in distinct):
                    distinct.append((x, y))
            counts[i] = len(distinct)
        return counts

    def normal(self, s):
        """Left unit normal at s."""
        th = self.tangent_heading(s)
        return -np.sin(th), np.cos(th)


# ---------------------------------------------------------------------------


def tangent_heading(path: ReferencePath, s):
    return path.tangent_heading(s)


def signed_curvature(path: ReferencePath, s):
    return path.signed_curvature(s)


def project(path: ReferencePath, point, hint: Optional[float] = None,
            neighborhood: Optional[float] = None) -> ProjectionResult:
    return path.project(point, hint=hint, neighborhood=neighborhood)


def curvature_sign(kappa):
    """sign(R_hat) with straight pieces (kappa == 0) mapped to +1."""
    return np.where(np.asarray(kappa) < 0.0, -1.0, 1.0)[()]


def validate_assumptions(path: ReferencePath, r_lower: float, neighborhood: Optional[float] = None,
                         n_curvature: int = 20001, n_unique: int = 400, seed: int = 0,
                         join_tol: float = 1e-8) -> ValidationReport:
    """Check the reference-path restrictions against a minimum radius ``r_lower``.

    ``neighborhood`` is the radius of the tube in which nearest points must
    be unique (the vehicle turning radius); defaults to ``r_lower``.
    """
    b = np.asarray(path.breaks)
    gap, jump = 0.0, 0.0
    for k in range(1, len(path.segments)):
        left, right = path.segments[k - 1], path.segments[k]
        xl, yl = left.point(1.0)
        xr, yr = right.point(0.0)
        gap = max(gap, float(np.hypot(xl - xr, yl - yr)))
        dxl, dyl, _, _ = left.deriv(1.0)
        dxr, dyr, _, _ = right.deriv(0.0)
        jump = max(jump, float(abs(wrap_angle(np.arctan2(dyl, dxl) - np.arctan2(dyr, dxr)))))
    c1_ok = gap <= join_tol and jump <= join_tol

    # sample each segment on its closed range so both one-sided limits are seen
    kappas = []
    per_seg = max(8, n_curvature // len(path.segments))
    for k, seg in enumerate(path.segments):
        t = np.linspace(0.0, 1.0, per_seg)
        dx, dy, ddx, ddy = seg.deriv(t)
        kappas.append((dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5)
    kap = np.concatenate(kappas)
    kap = np.where(np.abs(kap) < 1e-12, 0.0, kap)
    kmax = float(np.max(np.abs(kap)))
    curvature_ok = kmax * r_lower <= 1.0 + 1e-12

    nz = np.sign(kap[kap != 0.0])
    sign_changes = int(np.count_nonzero(nz[1:] != nz[:-1])) if nz.size else 0

    # every tube point g(s) + off * n(s) must have g(s) as its nearest point;
    # a strictly closer foot elsewhere means the normals cross inside the tube
    radius = r_lower if neighborhood is None else neighborhood
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, 1.0, n_unique)
    off = rng.uniform(-radius, radius, n_unique) * (1.0 - 1e-9)
    x, y = path.eval(s)
    nx, ny = path.normal(s)
    _, d = path.project_many(x + off * nx, y + off * ny)
    violations = int(np.count_nonzero(d < np.abs(off) - 1e-9 * (1.0 + np.abs(off))))

    return ValidationReport(c1_ok, gap, jump, curvature_ok, kmax, float(r_lower),
                            violations == 0, violations, n_unique, sign_changes)


# ---------------------------------------------------------------------------
# builders


def line(start, end, name: str = "") -> ReferencePath:
    return ReferencePath.from_segments([LineSegment(tuple(start), tuple(end))], name=name)


def circle(center=(0.0, 0.0), radius: float = 1.0, start_angle: float = 0.0, ccw: bool = True,
           sweep: Optional[float] = None, name: str = "") -> ReferencePath:
    if sweep is None:
        sweep = TWO_PI if ccw else -TWO_PI
    return ReferencePath.from_segments([ArcSegment(tuple(center), radius, start_angle, sweep)], name=name)


def benchmark_path() -> ReferencePath:
    """Arc (radius 2, CCW) - straight - arc (radius 2, CW) benchmark path.

    x(s) = -2 sin(4 pi s), y(s) = 2 + 2 cos(4 pi s)        on [0, 0.25)
    x(s) = 8 (s - 0.25),   y(s) = 0                        on [0.25, 0.75)
    x(s) = 4 + 2 sin(4 pi (s - 0.75)), y = -2 + 2 cos(..)  on [0.75, 1]
    """
    segs = [
        ArcSegment((0.0, 2.0), 2.0, np.pi / 2, np.pi),
        LineSegment((0.0, 0.0), (4.0, 0.0)),
        ArcSegment((4.0, -2.0), 2.0, np.pi / 2, -np.pi),
    ]
    return ReferencePath(tuple(segs), (0.0, 0.25, 0.75, 1.0), name="benchmark")


BUILTIN_PATHS = {"benchmark": benchmark_path}
