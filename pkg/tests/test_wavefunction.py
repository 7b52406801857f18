import math
import warnings

import numpy as np
import pytest

from deformcavity.perturb import (
    ModeIndex,
    PartialResultWarning,
    boundary_consistency,
    boundary_residual,
    boundary_values,
    evaluate_wavefunction,
    first_order_wavefunction,
    mode_energy,
    mode_zero,
    norm_squared,
    normalization_constant,
    normalize,
    residual_order_check,
    second_order_wavefunction,
    verify_inner_product,
)
from deformcavity.perturb.types import bare_radial_normalization
from deformcavity.perturb.wavefunction import _Grid, ball_grid
from deformcavity.shapes import Sphere, expand

import oracles
from conftest import catalog_expansion

SPHERE = expand(Sphere(1.3), a_max=6)
MODES = [(1, 0, 0), (2, 0, 0), (1, 1, 0), (1, 1, 1), (1, 2, 2), (2, 2, 1)]


def _points(R0, n=20, seed=3):
    rng = np.random.default_rng(seed)
    return np.column_stack([
        rng.uniform(0.05, 0.95, n) * R0,
        rng.uniform(0.05, math.pi - 0.05, n),
        rng.uniform(0.0, 2 * math.pi, n),
    ])


def test_normalization_constant():
    for l in range(4):
        for bc in ("dirichlet", "neumann"):
            md = ModeIndex(2, l, 0, bc)
            x = mode_zero(md)
            assert normalization_constant(md, 1.3) == pytest.approx(oracles.norm_constant(l, x, 1.3), rel=1e-10)
    b = math.pi
    N = normalization_constant(ModeIndex(1, 0, 0), 1.3)
    assert N == pytest.approx(math.sqrt(2) / (1.3**1.5 * abs(oracles.jn(1, b))), rel=1e-13)
    assert bare_radial_normalization(N, 0) == pytest.approx(N / math.sqrt(4 * math.pi))


def test_sphere_has_no_corrections():
    for bc in ("dirichlet", "neumann"):
        w = normalize(second_order_wavefunction(ModeIndex(1, 0, 0, bc), SPHERE))
        assert not w.A_coeffs and not w.B_coeffs and w.B0 == 0.0 and w.A_l_m == 0.0
        r = np.linspace(0.0, 1.3, 9)
        psi = evaluate_wavefunction(w, r, 0.4, 0.0, order=0)
        x = mode_zero(w.mode)
        assert np.allclose(psi, w.N * oracles.jn(0, x * r / 1.3) / math.sqrt(4 * math.pi), atol=1e-14)
        assert np.allclose(evaluate_wavefunction(w, r, 0.4, 0.0, order=2), psi, atol=1e-14)
    w = first_order_wavefunction(ModeIndex(1, 2, 1, "neumann"), SPHERE)
    assert not w.A_coeffs and w.A_l_m == 0.0


@pytest.mark.parametrize("name", ["superegg_1.7", "stadium", "oblate", "pear_1"])
@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_A_coefficients_match_closed_form(name, bc):
    exp = catalog_expansion(name)
    C = exp.axial()
    for n, l, m in MODES:
        w = first_order_wavefunction(ModeIndex(n, l, m, bc), exp)
        x = mode_zero(w.mode)
        ref = oracles.first_order_A(l, m, x, C, w.N, bc == "neumann", exp.R0)
        # compare A_p times its boundary denominator: the quantity the
        # boundary condition fixes (roundoff-level C_a give huge but inert A_p)
        weight = (lambda p: oracles.djn(p, x)) if bc == "neumann" else (lambda p: oracles.jn(p, x))
        scale = max(abs(v * weight(p)) for (p, _), v in ref.items())
        for key in set(ref) | set(w.A_coeffs):
            diff = abs(ref.get(key, 0.0) - w.A_coeffs.get(key, 0.0)) * abs(weight(key[0]))
            assert diff <= 1e-9 * scale, key
        assert all(q == m for _, q in w.A_coeffs)


def test_A_ground_dirichlet_ratio():
    exp = catalog_expansion("superegg_2.5")
    w = first_order_wavefunction(ModeIndex(1, 0, 0), exp)
    b = math.pi
    C = exp.axial()
    for p in (2, 4, 6, 8):
        got = w.A_coeffs[(p, 0)] / (w.N * b * C[p])
        assert got == pytest.approx(oracles.jn(1, b) / (math.sqrt(4 * math.pi) * oracles.jn(p, b)), rel=1e-9)


def test_A_lm_neumann_formula():
    exp = catalog_expansion("prolate")
    md = ModeIndex(1, 2, 1, "neumann")
    w = first_order_wavefunction(md, exp)
    x = mode_zero(md)
    L, C = 6, exp.axial()
    s = sum(math.sqrt((2 * k + 1) / math.pi) * k * (k + 1) * C[k] * oracles.cg(k, 0, 2, 0, 2, 0)
            * oracles.cg(k, 0, 2, 1, 2, 1) for k in range(1, 5))
    assert w.A_l_m == pytest.approx(-w.N * (x * x - 3 * L) / (8 * (x * x - L) ** 2) * s, rel=1e-12)
    assert first_order_wavefunction(ModeIndex(1, 2, 1, "dirichlet"), exp).A_l_m == 0.0


def test_B_selection_rule_axisymmetric():
    w = second_order_wavefunction(ModeIndex(1, 0, 0, "neumann"), catalog_expansion("pear_2"))
    assert w.B_coeffs and all(q == 0 for _, q in w.B_coeffs)
    assert max(p for p, _ in w.B_coeffs) <= 8


@pytest.mark.parametrize("name", ["superegg_1.7", "superegg_2.5", "rounded_cylinder", "pear_2"])
@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_boundary_residuals(name, bc):
    exp = catalog_expansion(name)
    for n, l, m in MODES:
        w = second_order_wavefunction(ModeIndex(n, l, m, bc), exp)
        res = boundary_residual(w, points=64, order=2 if w.complete else 1)
        assert max(res) < 1e-7
        r1, r2 = boundary_consistency(w.mode, exp)
        assert r1 < 1e-9 and r2 < 1e-9


def test_dirichlet_total_vanishes_on_boundary():
    exp = catalog_expansion("superegg_1.7")
    w = normalize(second_order_wavefunction(ModeIndex(1, 0, 0), exp))
    th = np.linspace(0.0, math.pi, 64)
    for order in (0, 1, 2):
        assert np.max(np.abs(evaluate_wavefunction(w, exp.R0, th, 0.0, order=order))) < 1e-8


def test_boundary_values_shape_and_guards():
    exp = catalog_expansion("stadium")
    w = first_order_wavefunction(ModeIndex(1, 1, 0, "neumann"), exp)
    vals = boundary_values(w, np.linspace(0.1, 3.0, 5), 0.0)
    assert vals.shape == (2, 5)
    with pytest.raises(ValueError):
        boundary_values(w, 0.3, 0.0, order=2)
    w2 = second_order_wavefunction(ModeIndex(1, 1, 0, "neumann"), exp)
    with pytest.raises(ValueError):
        boundary_residual(w2)


def test_residual_order_check():
    assert max(residual_order_check(ModeIndex(1, 2, 1), SPHERE, _points(1.3))) < 1e-10
    exp = catalog_expansion("superegg_1.7")
    for bc in ("dirichlet", "neumann"):
        res = residual_order_check(ModeIndex(1, 0, 0, bc), exp, _points(exp.R0))
        assert max(res) < 1e-6
    with pytest.raises(ValueError):
        residual_order_check(ModeIndex(1, 0, 0), exp, np.zeros((3, 2)))


@pytest.mark.parametrize("name", ["superegg_2.5", "prolate", "pear_1"])
def test_inner_product_route(name):
    exp = catalog_expansion(name)
    for bc in ("dirichlet", "neumann"):
        for n, l, m in MODES:
            md = ModeIndex(n, l, m, bc)
            e = mode_energy(md, exp)
            r1 = verify_inner_product(md, exp, 1)
            r2 = verify_inner_product(md, exp, 2)
            if l == 0:
                assert abs(r1) < 1e-8
            else:
                assert r1 == pytest.approx(e.ratio1, rel=1e-6)
            assert r2 == pytest.approx(e.ratio2, rel=1e-6)
    assert verify_inner_product(ModeIndex(1, 1, 0), SPHERE, 2) == 0.0
    with pytest.raises(ValueError):
        verify_inner_product(ModeIndex(1, 0, 0), exp, 3)


def test_first_order_orthogonal_to_ground():
    for name in ("superegg_1.7", "stadium"):
        exp = catalog_expansion(name)
        for bc in ("dirichlet", "neumann"):
            w = first_order_wavefunction(ModeIndex(1, 0, 0, bc), exp)
            grid, W = ball_grid(exp, 80, 1)
            v0 = grid.jet(w.orders[0], w.k)["v"]
            v1 = grid.jet(w.orders[1], w.k)["v"]
            assert abs(np.sum(W * np.conj(v0) * v1)) < 1e-8


def test_radial_derivative_matches_finite_difference():
    exp = catalog_expansion("stadium")
    w = normalize(second_order_wavefunction(ModeIndex(1, 0, 0, "neumann"), exp))
    pts = _points(exp.R0, 6)
    h = 1e-5
    for r, th, ph in pts:
        total = {}
        for terms in w.orders:
            for k, v in terms.items():
                total[k] = total.get(k, 0.0) + v
        grid = _Grid(exp, np.array([r]), np.array([th]), np.array([ph]))
        analytic = grid.jet(total, w.k)["r"][0]
        fd = (evaluate_wavefunction(w, r + h, th, ph) - evaluate_wavefunction(w, r - h, th, ph)) / (2 * h)
        assert abs(fd - analytic) < 1e-6


def test_normalize():
    exp = catalog_expansion("superegg_1.7")
    for bc in ("dirichlet", "neumann"):
        w = normalize(second_order_wavefunction(ModeIndex(1, 0, 0, bc), exp))
        assert norm_squared(w) == pytest.approx(1.0, abs=1e-8)
        assert w.B0 != 0.0
    w = normalize(second_order_wavefunction(ModeIndex(1, 0, 0), SPHERE))
    assert w.B0 == 0.0 and norm_squared(w) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        normalize(first_order_wavefunction(ModeIndex(1, 0, 0), exp))
    with pytest.raises(ValueError):
        normalize(second_order_wavefunction(ModeIndex(1, 1, 0), exp))


def test_evaluate_guards_and_coordinates():
    exp = catalog_expansion("prolate")
    w = second_order_wavefunction(ModeIndex(1, 1, 1, "dirichlet"), exp)
    assert not w.complete
    with pytest.warns(PartialResultWarning):
        evaluate_wavefunction(w, 0.5, 1.0, 0.2, order=2)
    with pytest.raises(ValueError):
        evaluate_wavefunction(w, 0.5, 1.0, order=3)
    with pytest.raises(ValueError):
        evaluate_wavefunction(first_order_wavefunction(w.mode, exp), 0.5, 1.0, order=2)
    with pytest.raises(ValueError):
        evaluate_wavefunction(w, -0.1, 1.0, order=1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        th = np.array([0.3, 1.2])
        R = exp.boundary(th)
        phys = evaluate_wavefunction(w, R, th, 0.7, order=1, coordinates="physical")
        mapped = evaluate_wavefunction(w, exp.R0, th, 0.7, order=1)
    assert np.allclose(phys, mapped, atol=1e-14)
    # complex phase e^{i m phi}
    a = evaluate_wavefunction(w, 0.5, 1.0, 0.0, order=1)
    b = evaluate_wavefunction(w, 0.5, 1.0, 0.9, order=1)
    assert b == pytest.approx(a * np.exp(0.9j), abs=1e-14)


def test_boundary_values_finite_at_poles():
    exp = catalog_expansion("superegg_1.7")
    for n, l, m in [(2, 1, 1), (1, 2, 2), (1, 0, 0)]:
        w = second_order_wavefunction(ModeIndex(n, l, m, "neumann"), exp)
        vals = boundary_values(w, np.array([0.0, math.pi]), np.array([0.0, 1.0]), order=1)
        assert np.all(np.isfinite(vals)) and np.max(vals) < 1e-8
