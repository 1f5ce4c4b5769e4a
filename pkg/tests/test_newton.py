"""Newton polygon, branch expansion, and chart decomposition tests."""

import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from oscdecay2d.funcspec import parse_spec
from oscdecay2d.newton import (GridSpec, monomialize_check, newton_polygon,
                               puiseux_branches, resolve_spec, root_directions,
                               sliver_decomposition)
from oscdecay2d.poly import BivariatePoly, parse_poly

DISK = "region { disk = 0.5 }"


def hull_oracle(points):
    """Brute-force lower-left hull: a support point is a vertex iff some
    weight (1, s), s > 0, is minimized at it uniquely among Pareto points."""
    pts = [p for p in points
           if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in points)]
    verts = set()
    for s_num in range(1, 400):
        s = F(s_num, 20)
        best = min(p[0] + s * p[1] for p in pts)
        opt = [p for p in pts if p[0] + s * p[1] == best]
        if len(opt) == 1:
            verts.add(opt[0])
    return sorted(verts)


@pytest.mark.parametrize("expr,expected", [
    ("y^2 - x^3", [(0, 2), (3, 0)]),
    ("x", [(1, 0)]),
    ("x^2*y + x*y^3 + x^5", [(1, 3), (2, 1), (5, 0)]),
])
def test_polygon_examples(expr, expected):
    poly = newton_polygon(parse_poly(expr))
    assert [(int(i), int(j)) for i, j in poly.vertices] == expected


def test_polygon_slope_example():
    poly = newton_polygon(parse_poly("y^2 - x^3"))
    assert [s for s, _ in poly.edges] == [F(-2, 3)]


def test_polygon_matches_oracle_random():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = rng.integers(1, 7)
        support = {(int(rng.integers(0, 7)), int(rng.integers(0, 7)))
                   for _ in range(n)}
        poly = newton_polygon(BivariatePoly([(i, j, 1) for i, j in support]))
        got = [(int(i), int(j)) for i, j in poly.vertices]
        want = [(int(i), int(j)) for i, j in hull_oracle(
            [(F(i), F(j)) for i, j in support])]
        assert got == want, (support, got, want)


@pytest.mark.parametrize("expr,branches", [
    ("y - x^2", ["x^2"]),
    ("y^2 - x^3", ["-x^(3/2)", "x^(3/2)"]),
    ("y^2 - 3*x*y + 2*x^2", ["x", "2*x"]),
])
def test_puiseux_examples(expr, branches):
    got = [b.expr() for b in puiseux_branches(parse_poly(expr))]
    assert got == branches


def test_puiseux_residuals_tiny():
    for expr in ("y - x^2", "y^2 - x^3", "y^2 - 3*x*y + 2*x^2",
                 "y^3 - x^4*y - x^5"):
        f = parse_poly(expr)
        for br in puiseux_branches(f):
            xs = np.geomspace(1e-4, 0.2, 20)
            res = np.abs(f(xs, br(xs)))
            scale = np.abs(f(xs, br(xs) + 0.1)) + 1.0
            if br.truncation_order is None:
                assert np.max(res / scale) < 1e-10
            else:
                # truncated branches: residual vanishes at a definite rate
                assert res[0] / scale[0] < 1e-6


def test_puiseux_steep_branch():
    got = [b.expr() for b in puiseux_branches(parse_poly("y^2 - x"))]
    assert got == ["-x^(1/2)", "x^(1/2)"]


def test_puiseux_complex_only_empty():
    assert puiseux_branches(parse_poly("y^2 + x^2")) == []


def test_root_directions_examples():
    spec = parse_spec(f'factor {{ poly = "x", gamma = 0.5 }} {DISK}')
    dirs = root_directions(spec)
    assert len(dirs) == 1 and dirs[0].angle == pytest.approx(math.pi / 2)

    spec = parse_spec(f'factor {{ poly = "y^2 - x^3", gamma = 0.1 }} {DISK}')
    dirs = root_directions(spec)
    assert len(dirs) == 1 and dirs[0].angle == pytest.approx(0.0)

    spec = parse_spec(f'factor {{ poly = "x^2 + y^2", gamma = 0.5 }} {DISK}')
    assert root_directions(spec) == []


def test_root_directions_boundary_tangents():
    spec = parse_spec('''factor { poly = "x", gamma = 0.0 }
factor { poly = "y - x^2", gamma = -0.9 }
region { sector { lower = "y = x^2", upper = "y = 2*x^2", side = in } radius = 0.5 }''')
    dirs = root_directions(spec)
    # factor y - x^2 has leading form y (line y=0); both boundary tangents
    # are the x-axis as well
    assert len(dirs) == 1 and dirs[0].angle == pytest.approx(0.0)


FIXTURES = {
    "xy": 'factor { poly = "x*y", gamma = 0.25 } region { disk = 0.5 }',
    "cusp": 'factor { poly = "y^2 - x^3", gamma = 0.25 } region { disk = 0.5 }',
    "twolines": ('factor { poly = "y^2 - 3*x*y + 2*x^2", gamma = 0.25 } '
                 'region { disk = 0.5 }'),
    "spec112": '''factor { poly = "x", gamma = 0.0 }
factor { poly = "y - x^2", gamma = -0.9 }
region { sector { lower = "y = x^2", upper = "y = 2*x^2", side = in } radius = 0.5 }''',
}


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_decomposition_covers_and_certifies(name):
    spec = parse_spec(FIXTURES[name])
    res = resolve_spec(spec)
    # chart areas tile the covered triangles
    area = sum(s.area() for s in res.slivers)
    assert area == pytest.approx(res.covered_area(), rel=1e-6)
    # certificates pass at eta = 0.3 on the default grid
    for sl in res.slivers:
        for fid, (factor, model) in enumerate(
                zip(spec.active_factors(), sl.per_factor)):
            cert = monomialize_check(sl, factor.poly, 0.3, factor_id=fid,
                                     model=model)
            assert cert.passed, (name, sl.ident, fid,
                                 cert.max_observed_ratio_error)


def test_xy_gives_one_exact_chart_per_triangle():
    spec = parse_spec(FIXTURES["xy"])
    res = resolve_spec(spec)
    assert len(res.slivers) == 8
    f = spec.active_factors()[0].poly
    for sl in res.slivers:
        assert sl.shift.is_zero()
        cert = monomialize_check(sl, f, 0.3)
        assert cert.max_observed_ratio_error < 1e-12


def test_certificate_rejects_point_outside():
    spec = parse_spec(FIXTURES["cusp"])
    res = resolve_spec(spec)
    sl = res.slivers[0]
    x = sl.x_max / 2
    bad_u = float(sl.upper(x)) * 2.0
    with pytest.raises(ValueError, match="outside sliver"):
        monomialize_check(sl, spec.active_factors()[0].poly, 0.3,
                          grid=GridSpec(points=((x, bad_u),)))


def test_cusp_branch_sliver_has_shift():
    spec = parse_spec(FIXTURES["cusp"])
    slivers = sliver_decomposition(spec)
    shifts = {s.shift.expr() for s in slivers}
    assert any("x^(3/2)" in s for s in shifts)


def test_spec112_monomializes_boundary_factor():
    spec = parse_spec(FIXTURES["spec112"])
    res = resolve_spec(spec)
    in_region = [s for s in res.slivers if s.region_weight]
    assert in_region
    # the chart shifted onto the parabola turns y - x^2 into +-y exactly
    on_branch = [s for s in in_region
                 if s.per_factor[0].beta == 1 and s.lower.is_zero()]
    assert on_branch
    for sl in on_branch:
        assert sl.per_factor[0].alpha == 0
        lead = sl.shift.leading()
        assert lead is not None and lead[0] == 2
    # every other in-region chart sees it as a multiple of x^2
    for sl in in_region:
        m = sl.per_factor[0]
        assert (m.alpha, m.beta) in ((F(0), 1), (F(2), 0))


def test_area_matches_monte_carlo():
    spec = parse_spec(FIXTURES["twolines"])
    res = resolve_spec(spec)
    rng = np.random.default_rng(0)
    H = 1.05 * res.covered_reach()
    n = 400000
    pts = rng.uniform(-H, H, size=(n, 2))
    from oscdecay2d.measure import _covered_mask
    frac = np.mean(_covered_mask(res, pts[:, 0], pts[:, 1], res.x_max))
    mc_area = frac * (2 * H) ** 2
    assert mc_area == pytest.approx(res.covered_area(), rel=0.01)


def test_jacobian_area_preservation():
    """Chart area equals the Monte-Carlo area of its image (shift maps have
    Jacobian 1)."""
    spec = parse_spec(FIXTURES["cusp"])
    res = resolve_spec(spec)
    rng = np.random.default_rng(1)
    sl = max((s for s in res.slivers), key=lambda s: s.area())
    a = sl.x_max
    ymax = float(sl.shift(a)) + float(sl.upper(a)) + 1e-9
    n = 400000
    xs = rng.uniform(0, a, n)
    ys = rng.uniform(-ymax, ymax, n)
    u = (ys - sl.shift(xs)) * sl.ysign
    inside = sl.contains_local(xs, u)
    mc = np.mean(inside) * a * 2 * ymax
    assert mc == pytest.approx(sl.area(), rel=0.02)


def test_model_matches_shifted_polygon():
    """Stored (alpha, beta) equal the active vertex of the shifted factor's
    polygon (self-consistency)."""
    from oscdecay2d.newton import _active_vertex, _chart_poly

    spec = parse_spec(FIXTURES["cusp"])
    res = resolve_spec(spec)
    f = spec.active_factors()[0].poly
    for sl in res.slivers[:24]:
        Q = _chart_poly(sl, f)
        vtx, d = _active_vertex(Q, sl.upper.leading_exponent(),
                                sl.lower.leading_exponent())
        assert (vtx[0], int(vtx[1])) == (sl.per_factor[0].alpha,
                                         sl.per_factor[0].beta)
