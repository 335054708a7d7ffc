import numpy as np
import pytest

from bilex import curve as cv
from bilex.extension import (F_diagnostics, F_eval, F_jacobian, build_extension, lip1_check, lip2_check,
                             linear_conjugation_check, normalization_check)


def test_identity(extensions):
    F = extensions["identity"]
    assert F_eval(F, 1 + 1j) == pytest.approx(1 + 2j)
    assert F_eval(F, 0.4 - 3j) == pytest.approx(0.4 - 6j)
    assert np.allclose(F_jacobian(F, np.array([1 + 1j, 2 - 1j])), [[1, 0], [0, 2]])
    assert (F.Lp_bound, F.lp_bound) == (2000.0, pytest.approx(1 / 120))


def test_affine(extensions):
    F = extensions["affine"]
    assert F_eval(F, 1 + 1j) == pytest.approx(5 + 4j)
    assert np.allclose(F_jacobian(F, np.array([0.3 + 0.2j])), [[2, 0], [0, 4]])


def test_bend(extensions):
    F = extensions["bend"]
    zeta = F.upper.reparam.extend(1j)
    assert F_eval(F, zeta) == pytest.approx(np.exp(3j * np.pi / 4), abs=1e-9)
    assert F_eval(F, 5.0) == 5.0


@pytest.mark.parametrize("name", ["identity", "affine", "bend", "zigzag"])
def test_boundary_agreement(name, extensions):
    F = extensions[name]
    x = np.linspace(-20, 20, 401)
    f = F.curve(x)
    for s in (1, -1):
        err = np.abs(F_eval(F, x + s * 1e-6j) - f)
        assert np.all(err < 1e-4 * (1 + np.abs(f)))


def test_continuity_across_line(extensions):
    F = extensions["zigzag"]
    x = np.linspace(-3, 3, 61)
    gaps = [np.max(np.abs(F_eval(F, x + e * 1j) - F_eval(F, x - e * 1j))) for e in (1e-2, 1e-4, 1e-6)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 1e-5


@pytest.mark.parametrize("name", ["bend", "zigzag"])
def test_jacobian_fd(name, extensions, rng):
    F = extensions[name]
    z = rng.uniform(-4, 4, 300) + 1j * rng.choice([-1, 1], 300) * np.exp(rng.uniform(-3, 1.5, 300))
    J = F_jacobian(F, z)
    h = 1e-5 * np.abs(z.imag)
    dx = (F_eval(F, z + h) - F_eval(F, z - h)) / (2 * h)
    dy = (F_eval(F, z + 1j * h) - F_eval(F, z - 1j * h)) / (2 * h)
    fd = np.stack([np.stack([dx.real, dy.real], -1), np.stack([dx.imag, dy.imag], -1)], -2)
    err = np.max(np.abs(fd - J), axis=(-2, -1)) / np.max(np.abs(J), axis=(-2, -1))
    assert np.max(err) < 1e-4


def test_images_sides_and_injectivity(extensions, rng):
    F = extensions["zigzag"]
    z = rng.uniform(-4, 4, 400) + 1j * rng.choice([-1, 1], 400) * np.exp(rng.uniform(-3, 1.5, 400))
    w = F_eval(F, z)
    assert np.all(cv.side_of(F.curve, w) == np.sign(z.imag))
    d = np.abs(w[:, None] - w[None, :]) + np.eye(w.size)
    assert np.min(d) > 0


@pytest.mark.parametrize("name", ["identity", "affine", "bend", "zigzag"])
def test_lip_bounds(name, extensions, rng):
    F = extensions[name]
    z = rng.uniform(-6, 6, 500) + 1j * rng.choice([-1, 1], 500) * np.exp(rng.uniform(-5, 2, 500))
    assert lip1_check(F, z)["pass"]
    assert lip2_check(F, z)["pass"]


def test_diagnostics_consistency(extensions):
    F = extensions["bend"]
    d = F_diagnostics(F, np.array([1j, -1 - 2j]))
    assert np.allclose(d.norm_DF, np.linalg.norm(d.DF, 2, axis=(-2, -1)))
    assert np.allclose(d.norm_DF_inv, np.linalg.norm(np.linalg.inv(d.DF), 2, axis=(-2, -1)))


def test_naturality():
    ident = cv.identity_curve()
    assert linear_conjugation_check(ident, 2.0, 0.0, 2.0, 0.0)["max"] < 1e-12
    bend = cv.bend_curve()
    assert linear_conjugation_check(bend, 1.0, 1.0, 1.0, 0.0)["max"] < 1e-5
    assert linear_conjugation_check(bend, 1.0, 0.0, 1j, 0.0)["max"] < 1e-5


def test_naturality_numeric_engine():
    assert linear_conjugation_check(cv.zigzag_curve(), 0.5, -0.2, 1 + 1j, 2.0)["max"] < 1e-5


def test_normalization_independence():
    assert normalization_check(cv.bend_curve(), (3.0, -1.0)) < 1e-5
    assert normalization_check(cv.zigzag_curve(), (-2.0, 5.0)) < 1e-5
