import math

import numpy as np
import pytest

from bilex.ba_ext import BoundaryReparam, ba_extend, ba_inverse, ba_jacobian, psi_eval, spectral_norm
from bilex.errors import DomainError


IDENT = BoundaryReparam.from_callable(lambda u: u)
AFFINE = BoundaryReparam.from_callable(lambda u: 2 * u + 3)
POWER = BoundaryReparam.from_callable(lambda u: np.sign(u) * np.abs(u) ** 1.5)


def test_psi_eval(bend_phi):
    b = BoundaryReparam.from_map(bend_phi)
    assert psi_eval(b, -4.0) == pytest.approx(-8.0)
    assert psi_eval(b, 9.0) == pytest.approx(27.0)
    assert psi_eval(IDENT, 2.0) == 2.0


def test_psi_eval_matches_tables(zigzag_phi):
    b = BoundaryReparam.from_map(zigzag_phi)
    x = np.linspace(-10, 10, 301)
    assert np.allclose(psi_eval(b, x), b.psi(x), atol=1e-9)


def test_extend_closed_forms():
    assert ba_extend(IDENT, 1j) == pytest.approx(0.5j)
    assert ba_extend(IDENT, 3 - 2j + 4j) == pytest.approx(3 + 1j)
    assert ba_extend(AFFINE, 1 + 2j) == pytest.approx(5 + 2j)
    with pytest.raises(DomainError):
        ba_extend(IDENT, 1 - 1j)


def test_jacobian_closed_forms():
    j = ba_jacobian(IDENT, 0.7 + 1.3j)
    assert (j.alpha, j.beta) == pytest.approx((1.3, 1.3))
    assert (j.gamma, j.delta) == pytest.approx((0.65, 0.65))
    assert np.allclose(j.matrix, [[1, 0], [0, 0.5]])
    assert j.det == pytest.approx(0.5)
    assert j.norm == pytest.approx(1.0)
    assert j.norm_bound == pytest.approx(2.0)
    p = ba_jacobian(POWER, 1j)
    assert (p.alpha, p.beta, p.gamma, p.delta) == pytest.approx((1, 1, 0.6, 0.6))


def test_inverse_closed_forms():
    assert ba_inverse(IDENT, 1 + 0.5j) == pytest.approx(1 + 1j)
    assert ba_inverse(AFFINE, 3 + 2j) == pytest.approx(2j, abs=1e-12)


def _fd(b, z, rel_step=1e-5):
    h = rel_step * z.imag
    dx = (b.extend(z + h) - b.extend(z - h)) / (2 * h)
    dy = (b.extend(z + 1j * h) - b.extend(z - 1j * h)) / (2 * h)
    return np.stack([np.stack([dx.real, dy.real], -1), np.stack([dx.imag, dy.imag], -1)], -2)


@pytest.mark.parametrize("which", ["bend", "zigzag"])
def test_jacobian_finite_differences(which, bend_phi, zigzag_phi, rng):
    m = bend_phi if which == "bend" else zigzag_phi
    b = BoundaryReparam.from_map(m)
    z = rng.uniform(-4, 4, 1000) + 1j * np.exp(rng.uniform(-3, 1.5, 1000))
    J = b.jacobian(z).matrix
    err = np.max(np.abs(_fd(b, z) - J), axis=(-2, -1)) / np.max(np.abs(J), axis=(-2, -1))
    assert np.max(err) < 1e-5


def test_invariant_chain(zigzag_phi, rng):
    b = BoundaryReparam.from_map(zigzag_phi)
    z = rng.uniform(-4, 4, 2000) + 1j * np.exp(rng.uniform(-8, 2, 2000))
    j = b.jacobian(z)
    assert np.all(j.alpha > j.gamma) and np.all(j.gamma > 0)
    assert np.all(j.beta > j.delta) and np.all(j.delta > 0)
    assert np.all(j.norm <= j.norm_bound * (1 + 1e-12))
    assert np.all(j.inv_norm <= j.inv_norm_bound * (1 + 1e-12))
    assert np.allclose(j.det, np.linalg.det(j.matrix))
    assert np.all(b.extend(z).imag > 0)


def test_routes_agree(zigzag_phi, rng):
    fast = BoundaryReparam.from_map(zigzag_phi)
    slow = BoundaryReparam.from_callable(zigzag_phi.psi)
    z = rng.uniform(-3, 3, 60) + 1j * np.exp(rng.uniform(-12, 1, 60))
    a, b = np.array(fast.parts(z)), np.array(slow.parts(z))
    assert np.max(np.abs(a - b) / np.abs(b)) < 1e-6


def test_inverse_roundtrip(zigzag_phi, rng):
    b = BoundaryReparam.from_map(zigzag_phi)
    w = rng.uniform(-6, 6, 1000) + 1j * np.exp(rng.uniform(-6, 2, 1000))
    z = ba_inverse(b, w)
    assert np.all(z.imag > 0)
    assert np.max(np.abs(b.extend(z) - w)) <= 1e-10


def test_spectral_norm():
    m = np.array([[[3.0, 1.0], [-2.0, 0.5]], [[0.0, 2.0], [1.0, 0.0]]])
    assert np.allclose(spectral_norm(m), np.linalg.norm(m, 2, axis=(-2, -1)))


def test_bilipschitz_samples(bend_phi, bend):
    b = BoundaryReparam.from_map(bend_phi)
    x = np.sort(np.random.default_rng(3).uniform(-6, 6, 400))
    a, c = x[:-1], x[1:]
    chord = np.abs(bend_phi.boundary(a) - bend_phi.boundary(c))
    dpsi = b.psi(c) - b.psi(a)
    assert np.all(bend.lip_lower * dpsi <= chord * (1 + 1e-12))
    assert np.all(chord <= bend.lip_upper * dpsi * (1 + 1e-12))
    assert math.isfinite(float(np.sum(dpsi)))
