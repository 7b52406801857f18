import json
import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from deformcavity.shapes import (
    CustomRadial,
    HarmonicExpansion,
    Pear,
    RoundedCylinder,
    ShapeError,
    Sphere,
    Spheroid,
    StadiumOfRevolution,
    Superegg,
    TruncationWarning,
    average_radius,
    expand,
    make_shape,
    parse_config,
    radial,
    reconstruction_residual,
    shape_from_config,
)
from deformcavity.spectrum import CATALOG

from conftest import catalog_expansion

SYMMETRIC = ("superegg_1.7", "superegg_2.5", "stadium", "oblate", "prolate", "rounded_cylinder")


def test_radial_examples():
    th = np.linspace(0.0, math.pi, 9)
    assert np.allclose(radial(Superegg(2.0), th), 1.0, atol=1e-15)
    assert radial(Spheroid(1.0, 1.2), 0.0) == pytest.approx(1.2, abs=1e-15)
    assert radial(StadiumOfRevolution(1.0, 0.25), 0.5 * math.pi) == pytest.approx(1.0, abs=1e-15)
    # polar radius of the stadium is R + d/2, of the rounded cylinder d + R
    assert radial(StadiumOfRevolution(1.0, 0.25), 0.0) == pytest.approx(1.125, abs=1e-14)
    rc = RoundedCylinder(0.2, 0.3)
    assert radial(rc, 0.0) == pytest.approx(0.5, abs=1e-14)
    assert radial(rc, 0.5 * math.pi) == pytest.approx(0.5, abs=1e-14)
    # corner: point at distance d*sqrt(2) + R along the diagonal
    assert radial(rc, 0.25 * math.pi) == pytest.approx(0.3 * math.sqrt(2) + 0.2, abs=1e-14)
    with pytest.raises(ValueError):
        radial(Sphere(), 4.0)


@pytest.mark.parametrize("shape", [StadiumOfRevolution(1.0, 0.25), RoundedCylinder(0.2, 0.3),
                                   RoundedCylinder(2 * math.sqrt(3) / 10, 3 * math.sqrt(3) / 10)])
def test_piecewise_continuity(shape):
    for bp in shape.breakpoints():
        lo, hi = shape.radius_at(np.array([bp - 1e-13, bp + 1e-13]))
        assert abs(lo - hi) < 1e-12


@pytest.mark.parametrize("shape", [StadiumOfRevolution(1.0, 0.25), RoundedCylinder(0.2, 0.3)])
def test_piecewise_shapes_are_curves_of_the_right_kind(shape):
    # points on the profile in the (x, z) half plane
    th = np.linspace(1e-3, math.pi - 1e-3, 2001)
    r = shape.radius_at(th)
    x, z = r * np.sin(th), r * np.cos(th)
    if isinstance(shape, StadiumOfRevolution):
        h = shape.d / 2
        cap = np.abs(z) > h
        dist = np.hypot(x[cap], np.abs(z[cap]) - h)
        assert np.allclose(dist, shape.R, atol=1e-12)
        assert np.allclose(x[~cap], shape.R, atol=1e-12)
    else:
        d, R = shape.d, shape.R
        corner = (np.abs(z) > d) & (x > d)
        dist = np.hypot(x[corner] - d, np.abs(z[corner]) - d)
        assert np.allclose(dist, R, atol=1e-12)


def test_shape_validation():
    with pytest.raises(ShapeError):
        Superegg(0.0)
    with pytest.raises(ShapeError):
        Spheroid(-1.0, 1.0)
    with pytest.raises(ShapeError):
        StadiumOfRevolution(1.0, -0.1)
    with pytest.raises(ShapeError):
        RoundedCylinder(0.0, 0.3)
    with pytest.raises(ShapeError):
        Pear(-2.0, 0.0, 0.0)
    with pytest.raises(ShapeError):
        CustomRadial()
    with pytest.raises(ShapeError):
        CustomRadial(coefficients=((2, 0.1),), samples=((0.0, 1.0),))


def test_average_radius():
    assert average_radius(Sphere(2.5)) == 2.5
    assert average_radius(Superegg(2.0)) == pytest.approx(1.0, abs=1e-14)
    s = Spheroid(1.0, 1.2)
    ref, _ = integrate.quad(lambda t: 0.5 * s.radius_at(t) * math.sin(t), 0.0, math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert average_radius(s) == pytest.approx(ref, abs=1e-10)
    assert average_radius(s, quad_order=512) == pytest.approx(average_radius(s), abs=1e-10)


@pytest.mark.parametrize("name", SYMMETRIC)
def test_average_radius_is_linear(name):
    shape = CATALOG[name]
    if isinstance(shape, Spheroid):
        scaled = Spheroid(3 * shape.r_a, 3 * shape.r_c)
    elif isinstance(shape, Superegg):
        pytest.skip("superegg has no length parameter")
    else:
        scaled = type(shape)(3 * shape.R, 3 * shape.d)
    assert average_radius(scaled) == pytest.approx(3 * average_radius(shape), rel=1e-12)


def test_expand_sphere_and_pear():
    e = expand(Sphere(1.0))
    assert e.R0 == 1.0 and not any(e.coeffs.values())
    e = expand(Superegg(2.0), a_max=20)
    assert np.max(np.abs(e.axial())) < 1e-12
    e = expand(Pear(0.119, 0.095, 0.002))
    assert e.R0 == 1.0
    assert {a: c.real for (a, _), c in e.coeffs.items()} == {2: 0.119, 3: 0.095, 4: 0.002}
    assert sum(1 for c in e.axial() if c != 0.0) == 3


@pytest.mark.parametrize("name", SYMMETRIC)
def test_parity_kills_odd_coefficients(name):
    C = catalog_expansion(name).axial()
    assert np.max(np.abs(C[1::2])) < 1e-10


def test_spheroid_conventions():
    s = Spheroid(1.0, 1.2)
    avg = expand(s, a_max=20, convention="average")
    eqv = expand(s, a_max=20)
    assert eqv.convention == "equal_volume"
    assert avg.R0 == pytest.approx(average_radius(s), rel=1e-14)
    # the equal-volume form measures f against the rescaled equatorial radius
    rho = (1.0 * 1.0 * 1.2) ** (1 / 3)
    assert eqv.R0 == pytest.approx(average_radius(s) / rho, rel=1e-10)
    with pytest.raises(ValueError):
        expand(s, convention="median")


def test_truncation_warning_and_limits():
    with pytest.warns(TruncationWarning):
        expand(Superegg(1.7), a_max=10)
    with pytest.raises(ValueError):
        expand(Sphere(), a_max=65)
    with pytest.raises(ValueError):
        expand(Pear(0.1, 0.1, 0.1), a_max=3)


def test_reconstruction_residual_trend():
    assert reconstruction_residual(expand(Sphere()), Sphere()) < 1e-12
    for a in (4, 10):
        p = Pear(0.154, 0.097, 0.080)
        assert reconstruction_residual(expand(p, a_max=a), p) < 1e-12
    s = Superegg(1.7)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        res = [reconstruction_residual(expand(s, a_max=a), s) for a in (10, 20, 40)]
    assert res[0] > res[1] > res[2]


SMOOTH_ENOUGH = ("superegg_2.5", "stadium", "oblate", "prolate", "pear_1", "pear_2")


@pytest.mark.parametrize(
    "name",
    [*SMOOTH_ENOUGH,
     pytest.param("superegg_1.7", marks=pytest.mark.xfail(
         strict=True, reason="|theta|^1.7 cusp at the poles: sup residual 4.4e-4 at a_max=40, 2.1e-4 at 64")),
     pytest.param("rounded_cylinder", marks=pytest.mark.xfail(
         strict=True, reason="curvature jumps at the arc junctions: sup residual 3.8e-4 at a_max=40"))],
)
def test_reconstruction_residual_at_amax_40(name):
    exp = catalog_expansion(name, 40)
    assert reconstruction_residual(exp, CATALOG[name]) <= 1e-4


def test_coefficients_decay():
    for name in SYMMETRIC:
        C = np.abs(catalog_expansion(name, 40).axial()[2::2])
        # even coefficients eventually decrease
        assert C[-1] < C[:5].max() * 0.1


def test_expansion_invariants():
    with pytest.raises(ValueError):
        HarmonicExpansion(1.0, {(0, 0): 0.1}, 4)
    with pytest.raises(ValueError):
        HarmonicExpansion(1.0, {(2, 1): 0.1 + 0.2j, (2, -1): 0.1 + 0.2j}, 4, axisymmetric=False)
    ok = HarmonicExpansion(1.0, {(2, 1): 0.1 + 0.2j, (2, -1): -0.1 + 0.2j}, 4, axisymmetric=False)
    f = ok.deformation(np.array([0.7]), np.array([1.1]))
    assert abs(f.imag[0]) < 1e-15
    with pytest.raises(ValueError):
        HarmonicExpansion(1.0, {(2, 1): 0.1}, 4)


def test_scaled_and_export():
    e = catalog_expansion("pear_1")
    assert e.scaled(0.5).axial()[3] == pytest.approx(0.0475)
    rows = e.to_csv().strip().splitlines()
    assert rows[0] == "a,C_a" and rows[2] == "2,0.119"
    doc = json.loads(e.to_json())
    assert doc["R0"] == 1.0 and len(doc["coefficients"]) == 3


def test_config_and_factory():
    text = "# pear\nshape = pear\nC2 = 0.119\nc3 = 0.095\nC4 = 0.002\n"
    assert shape_from_config(text) == Pear(0.119, 0.095, 0.002)
    assert make_shape("rounded-cylinder", {"R": "2*sqrt(3)/10", "d": "3*sqrt(3)/10"}) == CATALOG["rounded_cylinder"]
    assert make_shape("superegg", {"n": 2.5}) == Superegg(2.5)
    assert make_shape("prolate", {}) == Spheroid(1.0, 1.2)
    with pytest.raises(ShapeError):
        make_shape("cube", {})
    with pytest.raises(ShapeError):
        make_shape("superegg", {"n": "import os"})
    with pytest.raises(ShapeError):
        make_shape("stadium", {"R": 1, "q": 2})
    with pytest.raises(ShapeError):
        parse_config("no equals sign")
    with pytest.raises(ShapeError):
        shape_from_config("C2 = 0.1")


def test_custom_radial():
    c = CustomRadial(coefficients=((2, 0.1), (4, 0.02)))
    e = expand(c, a_max=6)
    assert e.axial()[2] == 0.1 and e.axial()[4] == 0.02
    th = np.linspace(0.0, math.pi, 41)
    s = CustomRadial(samples=tuple(zip(th, Spheroid(1.0, 1.2).radius_at(th))))
    assert average_radius(s) == pytest.approx(average_radius(Spheroid(1.0, 1.2)), rel=1e-5)
