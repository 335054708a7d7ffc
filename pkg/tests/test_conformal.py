import math

import numpy as np
import pytest

from bilex import curve as cv
from bilex import conformal as cf
from bilex.errors import DomainError, InvalidCurveError


def test_identity_map():
    m = cf.build_phi(cv.identity_curve())
    assert isinstance(m, cf.ExactSector)
    assert m.phi(2 + 3j) == pytest.approx(2 + 3j)
    assert m.dphi(2 + 3j) == pytest.approx(1.0)
    assert cf.phi_boundary(m, -5.0) == pytest.approx(-5.0)


def test_bend_upper(bend_phi):
    assert bend_phi.opening == pytest.approx(1.5 * math.pi)
    assert cf.phi_eval(bend_phi, 1j) == pytest.approx(np.exp(3j * math.pi / 4))
    assert cf.phi_deriv(bend_phi, 1j) == pytest.approx(1.5 * np.exp(1j * math.pi / 4))
    assert cf.phi_boundary(bend_phi, -1.0) == pytest.approx(-1j)
    assert cf.phi_boundary(bend_phi, 4.0) == pytest.approx(8.0)
    assert cf.phi_boundary_inv(bend_phi, 8.0) == pytest.approx(4.0)
    assert cf.phi_boundary_inv(bend_phi, -1j) == pytest.approx(-1.0)


def test_bend_lower(bend):
    m = cf.build_phi(bend, "lower")
    assert m.inner.opening == pytest.approx(0.5 * math.pi)
    # e^{-i pi/2} z^{1/2} at z = i
    assert m.phi(1j) == pytest.approx(np.exp(-1j * math.pi / 4))
    # the half-plane is sent to the quarter plane right of the bend
    z = np.array([1j, 2 + 0.5j, -3 + 4j])
    assert np.all(cv.side_of(bend, m.phi(z)) == -1)
    x = np.linspace(-4, 4, 17)
    assert np.allclose(cv.eval_curve(bend, m.psi(x)), m.boundary(x))
    assert np.all(np.diff(m.psi(x)) < 0)


def test_domain_errors(bend_phi):
    with pytest.raises(DomainError):
        bend_phi.phi(np.array([1 - 1j]))
    with pytest.raises(DomainError):
        cf.build_phi(cv.bend_curve(), "middle")


def test_promotion_gate():
    gate = cf.promotion_gate()
    assert gate["passed"]
    for case in gate["cases"]:
        assert case["max_rel_error"] < 1e-4


def test_numeric_engine_boundary(zigzag_phi, zigzag):
    assert zigzag_phi.diagnostics["max_residual"] < 1e-9
    x = np.linspace(-30, 30, 601)
    t = zigzag_phi.psi(x)
    assert np.all(np.diff(t) > 0)
    # knots are hit at the prevertices
    assert np.allclose(zigzag_phi.psi(zigzag_phi.prevertices), zigzag.params, atol=1e-12)
    # interior values approach the boundary trace
    for xx in (-20.0, -0.7, 0.3, 0.58, 5.0):
        near = zigzag_phi.phi(np.array([xx + 1e-9j]))[0]
        assert abs(near - zigzag_phi.boundary(xx)) < 1e-6 * (1 + abs(near))


def test_numeric_derivative(zigzag_phi, rng):
    z = rng.uniform(-3, 3, 50) + 1j * rng.uniform(0.05, 3, 50)
    h = 1e-6
    fd = (zigzag_phi.phi(z + h) - zigzag_phi.phi(z - h)) / (2 * h)
    assert np.max(np.abs(fd - zigzag_phi.dphi(z)) / np.abs(zigzag_phi.dphi(z))) < 1e-6


def test_antiderivative_against_quadrature(zigzag_phi):
    from scipy import integrate
    a, b = -3.0, 2.5
    ref = integrate.quad(zigzag_phi.psi, a, b, points=list(zigzag_phi.prevertices), limit=200)[0]
    got = zigzag_phi.psi_antiderivative(b) - zigzag_phi.psi_antiderivative(a)
    assert got == pytest.approx(ref, rel=1e-10)


def test_images_left_and_injective(zigzag_phi, zigzag, rng):
    z = rng.uniform(-4, 4, 300) + 1j * np.exp(rng.uniform(-4, 1.5, 300))
    w = zigzag_phi.phi(z)
    assert np.all(cv.side_of(zigzag, w) == 1)
    d = np.abs(w[:, None] - w[None, :]) + np.eye(w.size)
    assert np.min(d) > 0


def test_growth_at_infinity(zigzag_phi, bend_phi):
    for m in (zigzag_phi, bend_phi):
        a = abs(m.phi(np.array([1e3j]))[0])
        b = abs(m.phi(np.array([1e6j]))[0])
        assert b > a > 100


def test_koebe(bend_phi, zigzag_phi, rng):
    lo, up = cf.koebe_check(cf.build_phi(cv.identity_curve()), np.array([0.3 + 2j]))
    assert lo[0] == pytest.approx(2.0) and up[0] == pytest.approx(0.5)
    lo, up = cf.koebe_check(bend_phi, np.array([1j]))
    assert lo[0] >= 1 and up[0] <= 1
    z = rng.uniform(-5, 5, 1000) + 1j * np.exp(rng.uniform(-4, 1.6, 1000))
    for m in (bend_phi, zigzag_phi):
        lo, up = cf.koebe_check(m, z)
        assert np.all(lo >= 1) and np.all(up <= 1)


def test_normalization_affine_factor(bend):
    a = cf.ExactSector(bend)
    b = cf.ExactSector(bend, 2.0, 0.5)
    z = np.array([1j, 2 + 3j])
    assert np.allclose(b.phi(z), a.phi(2 * z + 0.5))
    num = cf.build_phi(bend, engine="numeric")
    r, s = cf.affine_factor(num, a)
    assert np.allclose(num.phi(z), a.phi(r * z + s), rtol=1e-8)


def test_invalid_engine(bend):
    with pytest.raises(DomainError):
        cf.build_phi(cv.zigzag_curve(), engine="zipper")
