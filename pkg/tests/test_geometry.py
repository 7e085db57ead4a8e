import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdelab.errors import DomainError
from fdelab.fields import Meaning, SpaceTimeField
from fdelab.geometry import (
    CosinePotential,
    Cylinder,
    GeometrySpec,
    Interval,
    LinearFactor,
    PeriodicCircle,
    QuadraticPotential,
    ZeroPotential,
    curvature_bounds,
    f_laplacian,
    superflow_margin,
)

flat_line = GeometrySpec(m=3, domain=Interval(-5.0, 5.0), boundary="dirichlet")
gaussian_line = GeometrySpec(m=3, domain=Interval(-5.0, 5.0), potential=QuadraticPotential(1.0), boundary="dirichlet")


def test_f_laplacian_of_constant_vanishes():
    geom = GeometrySpec(m=3, conformal=LinearFactor(0.1, 0.3), potential=CosinePotential(0.4, 2.0))
    grid = geom.grid(32)
    assert np.max(np.abs(f_laplacian(np.full(grid.n, 2.5), 0.7, geom, grid))) < 1e-13


def test_f_laplacian_of_parabola_on_flat_interval():
    grid = flat_line.grid(41)
    lap = f_laplacian(grid.x**2, 0.0, flat_line, grid)
    np.testing.assert_allclose(lap[1:-1], 2.0, atol=1e-10)


def _sin_cos_residual(nx):
    geom = GeometrySpec(m=3, potential=CosinePotential(1.0, 1.0))
    grid = geom.grid(nx)
    x = grid.x
    exact = -np.sin(x) + np.sin(x) * np.cos(x)
    return np.max(np.abs(f_laplacian(np.sin(x), 0.0, geom, grid) - exact))


def test_f_laplacian_converges_at_second_order():
    errs = [_sin_cos_residual(n) for n in (32, 64, 128, 256)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.7 <= o <= 2.3 for o in orders), orders


def test_f_laplacian_rejects_bad_input():
    grid = flat_line.grid(11)
    with pytest.raises(DomainError):
        f_laplacian(np.ones(5), 0.0, flat_line, grid)
    with pytest.raises(DomainError):
        f_laplacian(np.ones(11), float("nan"), flat_line, grid)


def test_bakry_emery_values():
    assert flat_line.bakry_emery_m(1.3, 0.0) == 0.0
    assert gaussian_line.bakry_emery_m(2.0, 0.0) == pytest.approx(-1.0, abs=1e-14)
    big = GeometrySpec(m=1e12, domain=Interval(-5.0, 5.0), potential=QuadraticPotential(1.0), boundary="dirichlet")
    assert big.bakry_emery_m(3.0, 0.0) == pytest.approx(1.0, abs=1e-10)
    # m == n only allows constant potentials, whose tensor vanishes
    assert GeometrySpec(m=1).bakry_emery_m(np.linspace(0, 1, 4), 0.0).tolist() == [0.0] * 4
    with pytest.raises(DomainError):
        GeometrySpec(m=1, potential=CosinePotential(0.1, 1.0))


def test_geometry_validation():
    with pytest.raises(DomainError):
        GeometrySpec(m=0.5)
    with pytest.raises(DomainError):
        GeometrySpec(m=3, domain=Interval(0, 1), boundary="periodic")
    with pytest.raises(DomainError):
        GeometrySpec(m=3, potential=QuadraticPotential(1.0))
    with pytest.raises(DomainError):
        GeometrySpec(m=3, potential=CosinePotential(0.3, 1.5))


def test_curvature_bounds_examples():
    grid = flat_line.grid(41)
    cyl = Cylinder(0.0, 1.0, 2.0, 1.0)
    assert curvature_bounds(flat_line, cyl, grid) == curvature_bounds(flat_line, cyl, grid)
    b = curvature_bounds(flat_line, cyl, grid)
    assert (b.k, b.h) == (0.0, 0.0)
    shrinking = GeometrySpec(m=3, domain=Interval(-5, 5), conformal=LinearFactor(0.0, -1.0), boundary="dirichlet")
    b = curvature_bounds(shrinking, None, grid, np.linspace(0, 1, 5))
    assert b.h == pytest.approx(1.0) and b.k == 0.0
    b = curvature_bounds(gaussian_line, Cylinder(0.0, 0.0, 2.0, 1.0), gaussian_line.grid(81))
    assert b.k == pytest.approx(0.5, abs=1e-12)


@given(st.floats(0.2, 2.0), st.floats(0.0, 2.0))
def test_curvature_bounds_monotone_in_cylinder(r_small, extra):
    geom = GeometrySpec(m=3, domain=Interval(-5, 5), conformal=LinearFactor(0.0, 0.5),
                        potential=QuadraticPotential(1.0), boundary="dirichlet")
    grid = geom.grid(101)
    small = curvature_bounds(geom, Cylinder(0.3, 1.0, r_small, 0.5), grid)
    large = curvature_bounds(geom, Cylinder(0.3, 1.0, r_small + extra, 0.5 + extra), grid)
    assert large.k >= small.k and large.h >= small.h


def test_geodesic_distance_examples():
    assert flat_line.geodesic_distance(1.0, 3.0, 0.0) == 2.0
    growing = GeometrySpec(m=3, domain=Interval(-5, 5), conformal=LinearFactor(0.0, 1.0), boundary="dirichlet")
    assert growing.geodesic_distance(0.0, 1.0, math.log(2.0)) == pytest.approx(2.0, abs=1e-14)
    circle = GeometrySpec(m=3)
    assert circle.geodesic_distance(0.1, 2 * math.pi - 0.1, 0.0) == pytest.approx(0.2)


coords = st.floats(-4.0, 4.0)


@given(coords, coords, coords, st.floats(-1.0, 1.0))
def test_geodesic_distance_is_a_metric(a, b, c, t):
    for geom in (GeometrySpec(m=3, conformal=LinearFactor(0.2, 0.5)),
                 GeometrySpec(m=3, domain=Interval(-5, 5), conformal=LinearFactor(0.2, 0.5), boundary="dirichlet")):
        d = lambda x, y: float(geom.geodesic_distance(x, y, t))
        assert d(a, a) == 0.0
        assert d(a, b) == pytest.approx(d(b, a), abs=1e-12)
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


def _pressure_field(geom, values, times):
    grid = geom.grid(values.shape[1])
    return SpaceTimeField(grid, np.asarray(times, float), values, Meaning.V_I)


def test_superflow_margin_examples():
    geom = GeometrySpec(m=3, domain=Interval(-2, 2), boundary="dirichlet")
    fld = _pressure_field(geom, np.ones((3, 41)), [0, 0.5, 1])
    assert superflow_margin(geom, fld, "I", 0.5).kappa_super == 0.0

    shrinking = GeometrySpec(m=3, domain=Interval(-2, 2), conformal=LinearFactor(0.0, -1.0), boundary="dirichlet")
    assert superflow_margin(shrinking, fld, "I", 0.5).kappa_super == pytest.approx(1.0)

    gauss = GeometrySpec(m=3, domain=Interval(-2, 2), potential=QuadraticPotential(1.0), boundary="dirichlet")
    fld2 = _pressure_field(gauss, np.full((3, 41), 2.0), [0, 0.5, 1])
    assert superflow_margin(gauss, fld2, "I", 0.5).kappa_super == pytest.approx(1.0, abs=1e-12)


@given(st.floats(0.55, 0.95), st.floats(-0.5, 0.5), st.floats(0.0, 0.6))
def test_superflow_inequality_holds_with_returned_kappa(p, rate, amp):
    geom = GeometrySpec(m=3, conformal=LinearFactor(0.1, rate), potential=CosinePotential(amp, 1.0))
    grid = geom.grid(48)
    times = np.linspace(0.0, 1.0, 5)
    v = 1.0 + 0.4 * np.sin(grid.x)[None, :] * np.cos(times)[:, None]
    fld = SpaceTimeField(grid, times, v, Meaning.V_I)
    kappa = superflow_margin(geom, fld, "I", p).kappa_super
    t = times[:, None]
    margin = geom.conformal.rate(t) + (1 - p) * v * geom.metric_factor(t) * geom.bakry_emery_m(grid.x[None, :], t)
    assert np.min(margin) >= -kappa - 1e-12
    if kappa > 0:
        assert np.min(margin) == pytest.approx(-kappa, abs=1e-12)


def test_zero_potential_is_flat():
    assert ZeroPotential().spatially_constant
    assert PeriodicCircle().grid(8).periodic
