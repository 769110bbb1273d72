import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dubins_smc import fileio
from dubins_smc.refpath import (ArcSegment, DegenerateCurveError, LineSegment, ParametricSegment, PathError,
                                ProjectionError, ReferencePath, UniquenessError, circle, curvature_sign, line,
                                benchmark_path, validate_assumptions, wrap_angle)


@pytest.fixture(scope="module")
def bench():
    return benchmark_path()


def brute_force(path, px, py, n=100_001):
    s = np.linspace(0.0, 1.0, n)
    x, y = path.eval(s)
    d = np.hypot(x - px, y - py)
    k = np.argmin(d)
    return s[k], d[k]


# -- closed-form geometry of the benchmark ------------------------------------

@pytest.mark.parametrize("s, xy", [(0.0, (0.0, 4.0)), (0.125, (-2.0, 2.0)), (0.25, (0.0, 0.0)),
                                   (0.5, (2.0, 0.0)), (0.75, (4.0, 0.0)), (0.875, (6.0, -2.0)),
                                   (1.0, (4.0, -4.0))])
def test_benchmark_points(bench, s, xy):
    np.testing.assert_allclose(bench.eval(s), xy, atol=1e-12)


def test_benchmark_matches_branch_formulas(bench):
    s = np.linspace(0, 1, 2001)
    x, y = bench.eval(s)
    ex = np.where(s < 0.25, -2 * np.sin(4 * np.pi * s),
                  np.where(s < 0.75, 8 * (s - 0.25), 4 + 2 * np.sin(4 * np.pi * (s - 0.75))))
    ey = np.where(s < 0.25, 2 + 2 * np.cos(4 * np.pi * s),
                  np.where(s < 0.75, 0.0, -2 + 2 * np.cos(4 * np.pi * (s - 0.75))))
    np.testing.assert_allclose(x, ex, atol=1e-12)
    np.testing.assert_allclose(y, ey, atol=1e-12)


def test_benchmark_heading_and_curvature(bench):
    assert bench.tangent_heading(0.1) == pytest.approx(wrap_angle(np.pi + 4 * np.pi * 0.1))
    assert bench.tangent_heading(0.5) == pytest.approx(0.0)
    assert bench.signed_curvature(0.1) == pytest.approx(0.5)
    assert bench.signed_curvature(0.5) == 0.0
    assert bench.signed_curvature(0.9) == pytest.approx(-0.5)
    assert bench.length() == pytest.approx(4 * np.pi + 4)


def test_heading_matches_finite_difference(bench):
    s = np.linspace(0.01, 0.99, 97)
    h = 1e-7
    x0, y0 = bench.eval(s - h)
    x1, y1 = bench.eval(s + h)
    fd = np.arctan2(y1 - y0, x1 - x0)
    np.testing.assert_allclose(wrap_angle(bench.tangent_heading(s) - fd), 0.0, atol=1e-6)


def test_curvature_sign_convention():
    assert curvature_sign(0.0) == 1.0
    assert curvature_sign(-0.3) == -1.0
    assert curvature_sign(2.0) == 1.0


def test_wrap_angle_range():
    a = wrap_angle(np.array([np.pi, -np.pi, 3 * np.pi, 0.1]))
    np.testing.assert_allclose(a, [np.pi, np.pi, np.pi, 0.1])


def test_parametric_parabola_curvature():
    seg = ParametricSegment(lambda u: u, lambda u: u * u,
                            (lambda u: np.ones_like(u), lambda u: 2 * u,
                             lambda u: np.zeros_like(u), lambda u: 2 + 0 * u), (-1.0, 1.0))
    path = ReferencePath.from_segments([seg])
    s = np.linspace(0, 1, 11)
    u = -1 + 2 * s
    np.testing.assert_allclose(path.signed_curvature(s), 2 / (1 + 4 * u * u) ** 1.5, rtol=1e-10)


def test_degenerate_heading_raises():
    seg = ParametricSegment(lambda u: u ** 3, lambda u: 0 * u,
                            (lambda u: 3 * u ** 2, lambda u: 0 * u, lambda u: 6 * u, lambda u: 0 * u),
                            (-1.0, 1.0))
    path = ReferencePath(tuple([seg]), (0.0, 1.0))
    with pytest.raises(DegenerateCurveError):
        path.tangent_heading(0.5)


def test_parameter_out_of_range(bench):
    with pytest.raises(PathError):
        bench.eval(1.2)


def test_breaks_must_partition():
    with pytest.raises(PathError):
        ReferencePath((LineSegment((0, 0), (1, 0)),), (0.0, 0.9))


# -- projection -----------------------------------------------------------------

def test_projection_on_line():
    path = line((0, 0), (10, 0))
    res = path.project((3.0, 0.4))
    assert res.s_hat == pytest.approx(0.3)
    assert res.distance == pytest.approx(0.4)
    assert res.unique


def test_projection_circle_closed_form():
    path = circle((1.0, -1.0), 2.0, start_angle=-np.pi / 2, sweep=np.pi)
    rng = np.random.default_rng(3)
    ang = rng.uniform(-np.pi / 2 + 0.05, np.pi / 2 - 0.05, 50)
    r = rng.uniform(1.3, 2.7, 50)
    px, py = 1 + r * np.cos(ang), -1 + r * np.sin(ang)
    s, d = path.project_many(px, py)
    np.testing.assert_allclose(d, np.abs(r - 2.0), atol=1e-12)
    np.testing.assert_allclose(s, (ang + np.pi / 2) / np.pi, atol=1e-12)


def test_projection_outside_neighborhood(bench):
    with pytest.raises(ProjectionError):
        bench.project((0.0, 2.0), neighborhood=0.8)


def test_projection_tie_is_rejected():
    # the centre of a half circle is equidistant from every point on it
    path = circle((0.0, 0.0), 1.0, start_angle=-np.pi / 2, sweep=np.pi)
    with pytest.raises(UniquenessError):
        path.project((0.0, 0.0))


def test_warm_start_matches_cold(bench):
    rng = np.random.default_rng(11)
    s0 = rng.uniform(0, 1, 200)
    x, y = bench.eval(s0)
    nx, ny = bench.normal(s0)
    off = rng.uniform(-0.5, 0.5, 200)
    px, py = x + off * nx, y + off * ny
    cold, dc = bench.project_many(px, py)
    warm, dw = bench.project_many(px, py, hint=np.clip(s0 + 0.005, 0, 1))
    np.testing.assert_allclose(warm, cold, atol=1e-9)
    np.testing.assert_allclose(dw, np.abs(off), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-0.79, 0.79))
def test_projection_agrees_with_scan(s0, off):
    path = benchmark_path()
    x, y = path.eval(s0)
    nx, ny = path.normal(s0)
    px, py = x + off * nx, y + off * ny
    res = path.project((px, py), neighborhood=0.8, check_unique=False)
    # inside the unique-projection tube the generating offset is the exact distance
    assert res.distance == pytest.approx(abs(off), abs=1e-9)
    _, d_bf = brute_force(path, px, py)
    assert res.distance <= d_bf + 1e-12


def test_analytic_segment_projection_newton():
    seg = ParametricSegment(lambda u: u, lambda u: 0.1 * np.sin(u),
                            (lambda u: np.ones_like(u), lambda u: 0.1 * np.cos(u),
                             lambda u: np.zeros_like(u), lambda u: -0.1 * np.sin(u)), (0.0, 6.0))
    path = ReferencePath.from_segments([seg])
    rng = np.random.default_rng(5)
    px, py = rng.uniform(0.5, 5.5, 40), rng.uniform(-0.5, 0.5, 40)
    _, d = path.project_many(px, py)
    for i in range(40):
        _, d_bf = brute_force(path, px[i], py[i])
        assert d[i] <= d_bf + 1e-12
        assert d[i] == pytest.approx(d_bf, abs=1e-6)


# -- assumption checks ----------------------------------------------------------

def test_validate_benchmark_passes(bench):
    rep = validate_assumptions(bench, 1.156, neighborhood=0.8)
    assert rep.passed, rep.failures()
    assert rep.min_radius == pytest.approx(2.0)
    assert rep.curvature_sign_changes == 1


def test_validate_small_circle_fails():
    rep = validate_assumptions(circle(radius=1.0, sweep=np.pi), 1.156, neighborhood=0.8)
    assert not rep.passed
    assert not rep.curvature_ok
    assert any("radius" in f for f in rep.failures())


def test_validate_corner_is_not_c1():
    path = ReferencePath.from_segments([LineSegment((0, 0), (1, 0)), LineSegment((1, 0), (1, 1))])
    rep = validate_assumptions(path, 1.0, neighborhood=0.3)
    assert not rep.c1_ok and not rep.passed


def test_validate_detects_non_unique_neighbourhood():
    # U-turn of radius 1.2: a 1.3 tube reaches past the arc centre
    path = ReferencePath.from_segments([
        LineSegment((0, 0), (5, 0)), ArcSegment((5, 1.2), 1.2, -np.pi / 2, np.pi),
        LineSegment((5, 2.4), (0, 2.4))])
    assert validate_assumptions(path, 1.1, neighborhood=0.8).passed
    rep = validate_assumptions(path, 1.1, neighborhood=1.3)
    assert not rep.uniqueness_ok


# -- path files -----------------------------------------------------------------

def test_path_file_roundtrip(tmp_path):
    text = """
[path]
name = hook

[segment 1]
kind = line
start = 0, 0
end = 4, 0

[segment 2]
kind = arc
center = 4, 2
radius = 2
start_angle = -pi/2
sweep = pi/2

[segment 3]
kind = analytic
x = 6 - 0*u
y = 2 + u
u = 0, 3
"""
    f = tmp_path / "hook.path"
    f.write_text(text)
    path = fileio.load_path(f)
    assert path.name == "hook"
    assert len(path.segments) == 3
    np.testing.assert_allclose(path.eval(1.0), (6.0, 5.0), atol=1e-12)
    assert validate_assumptions(path, 1.5, neighborhood=0.8).passed


def test_path_file_explicit_s_ranges():
    text = """
[segment a]
kind = line
start = 0, 0
end = 1, 0
s = 0, 0.5

[segment b]
kind = line
start = 1, 0
end = 3, 0
s = 0.5, 1
"""
    path = fileio.loads_path(text)
    np.testing.assert_allclose(path.eval(0.5), (1.0, 0.0))
    np.testing.assert_allclose(path.eval(0.75), (2.0, 0.0))


def test_path_file_errors():
    with pytest.raises(PathError):
        fileio.loads_path("[segment 1]\nkind = spline\n")
    with pytest.raises(PathError):
        fileio.loads_path("[path]\nname = x\n")
    with pytest.raises(FileNotFoundError):
        fileio.load_path("no-such-path")
