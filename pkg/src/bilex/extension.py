"""The full-plane extension F = Phi o Psi^{-1}, glued along the real line.

The upper half-plane is mapped onto the domain to the left of the curve.
Below the line we reflect: with ``g = conj o f`` (the mirror curve) and its
upper construction ``G``, ``F(z) = conj(G(conj z))`` for ``im z < 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import curve as cv
from .ba_ext import BoundaryReparam, spectral_norm
from .conformal import ConformalHalfPlaneMap, build_phi
from .errors import BilexError, DomainError

EXPANSION_FACTOR = 2000.0
COMPRESSION_FACTOR = 120.0

_FLIP = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class HalfPlaneTriple:
    """Phi, psi/Psi for one half-plane, built on the curve that Phi sees."""
    curve: cv.PolylineEmbedding
    phi: ConformalHalfPlaneMap
    reparam: BoundaryReparam

    def evaluate(self, w):
        """F, zeta = Psi^{-1}(w), Phi'(zeta) and DPsi(zeta) for w in the upper half-plane."""
        zeta = np.atleast_1d(self.reparam.inverse(w))
        jac = self.reparam.jacobian(zeta)
        return self.phi.phi(zeta), zeta, self.phi.dphi(zeta), jac


@dataclass(frozen=True)
class ExtensionMap:
    curve: cv.PolylineEmbedding
    upper: HalfPlaneTriple
    lower: HalfPlaneTriple
    normalization: tuple | None = None
    info: dict = field(default_factory=dict)

    @property
    def Lp_bound(self) -> float:
        return EXPANSION_FACTOR * self.curve.lip_upper

    @property
    def lp_bound(self) -> float:
        return self.curve.lip_lower / COMPRESSION_FACTOR

    def __call__(self, z):
        return F_eval(self, z)

    def jacobian(self, z):
        return F_jacobian(self, z)


def _triple(c, engine, normalization):
    m = build_phi(c, "upper", engine=engine, normalization=normalization)
    return HalfPlaneTriple(c, m, BoundaryReparam.from_map(m))


def _check_orientation(t: HalfPlaneTriple):
    # the image of i must lie on the left of the curve, i.e. the boundary
    # tangent and the inward normal form a positive frame
    side = cv.side_of(t.curve, t.phi.phi(np.array([1j])))
    if not np.all(side > 0):
        raise BilexError(f"conformal map of {t.curve.name!r} lands on the wrong side")


def build_extension(c: cv.PolylineEmbedding, engine: str = "auto", normalization=None) -> ExtensionMap:
    if not cv.is_simple(c):
        raise DomainError("curve is not simple")
    up = _triple(c, engine, normalization)
    lo = _triple(cv.mirror(c), engine, normalization)
    _check_orientation(up)
    _check_orientation(lo)
    return ExtensionMap(c, up, lo, normalization,
                        {"upper": up.phi.describe(), "lower": lo.phi.describe()})


def _split(z):
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    return z.shape, flat, flat.imag > 0, flat.imag < 0


def F_eval(F: ExtensionMap, z):
    shape, flat, up, lo = _split(z)
    out = np.empty(flat.size, dtype=complex)
    real = ~(up | lo)
    if np.any(real):
        out[real] = F.curve(flat[real].real)
    if np.any(up):
        out[up] = F.upper.evaluate(flat[up])[0]
    if np.any(lo):
        out[lo] = np.conj(F.lower.evaluate(np.conj(flat[lo]))[0])
    out = out.reshape(shape)
    return out[()] if out.ndim == 0 else out


def _similarity(a):
    m = np.empty(a.shape + (2, 2))
    m[..., 0, 0] = a.real
    m[..., 0, 1] = -a.imag
    m[..., 1, 0] = a.imag
    m[..., 1, 1] = a.real
    return m


@dataclass(frozen=True)
class FDiagnostics:
    """Pointwise data for the distortion bounds at points off the real line."""
    z: np.ndarray
    F: np.ndarray
    zeta: np.ndarray
    dphi_abs: np.ndarray
    norm_dpsi: np.ndarray
    norm_dpsi_inv: np.ndarray
    DF: np.ndarray

    @property
    def norm_DF(self):
        return spectral_norm(self.DF)

    @property
    def norm_DF_inv(self):
        det = self.DF[..., 0, 0] * self.DF[..., 1, 1] - self.DF[..., 0, 1] * self.DF[..., 1, 0]
        return self.norm_DF / np.abs(det)


def F_diagnostics(F: ExtensionMap, z) -> FDiagnostics:
    shape, flat, up, lo = _split(z)
    if np.any(~(up | lo)):
        raise DomainError("Jacobian of F is only defined off the real line")
    n = flat.size
    vals = np.empty(n, dtype=complex)
    zeta = np.empty(n, dtype=complex)
    dphi = np.empty(n)
    nd = np.empty(n)
    ndi = np.empty(n)
    DF = np.empty((n, 2, 2))
    for mask, triple, flip in ((up, F.upper, False), (lo, F.lower, True)):
        if not np.any(mask):
            continue
        w = np.conj(flat[mask]) if flip else flat[mask]
        v, zt, dp, jac = triple.evaluate(w)
        mat = jac.matrix
        det = jac.det
        inv = np.empty_like(mat)
        inv[:, 0, 0] = mat[:, 1, 1] / det
        inv[:, 1, 1] = mat[:, 0, 0] / det
        inv[:, 0, 1] = -mat[:, 0, 1] / det
        inv[:, 1, 0] = -mat[:, 1, 0] / det
        dfm = _similarity(dp) @ inv
        if flip:
            dfm = _FLIP @ dfm @ _FLIP
            v = np.conj(v)
            zt = np.conj(zt)
        vals[mask] = v
        zeta[mask] = zt
        dphi[mask] = np.abs(dp)
        nd[mask] = jac.norm
        ndi[mask] = jac.inv_norm
        DF[mask] = dfm
    return FDiagnostics(flat.reshape(shape), vals.reshape(shape), zeta.reshape(shape),
                        dphi.reshape(shape), nd.reshape(shape), ndi.reshape(shape),
                        DF.reshape(shape + (2, 2)))


def F_jacobian(F: ExtensionMap, z):
    """DF(z) = C(Phi'(zeta)) DPsi(zeta)^{-1} as (..., 2, 2) real matrices."""
    d = F_diagnostics(F, z)
    return d.DF


def lip1_check(F: ExtensionMap, z) -> dict:
    d = F_diagnostics(F, z)
    nd, ndi = d.norm_DF, d.norm_DF_inv
    up, lo = F.Lp_bound, 1.0 / F.lp_bound
    return {"max_norm_DF": float(np.max(nd)), "max_norm_DF_inv": float(np.max(ndi)),
            "bound_DF": up, "bound_DF_inv": lo,
            "margin_DF": float(up / np.max(nd)), "margin_DF_inv": float(lo / np.max(ndi)),
            "pass": bool(np.max(nd) <= up and np.max(ndi) <= lo)}


def lip2_check(F: ExtensionMap, z) -> dict:
    """(l/120)|DPsi| <= |Phi'| <= 2000L / |DPsi^{-1}| at zeta = Psi^{-1}(z)."""
    d = F_diagnostics(F, z)
    lower = F.lp_bound * d.norm_dpsi
    upper = F.Lp_bound / d.norm_dpsi_inv
    left = float(np.min(d.dphi_abs / lower))
    right = float(np.min(upper / d.dphi_abs))
    return {"margin_lower": left, "margin_upper": right, "pass": bool(left >= 1 and right >= 1)}


def _test_grid():
    xs = np.linspace(-3, 3, 7)
    ys = np.array([-2.0, -0.5, -0.1, 0.1, 0.5, 2.0])
    xg, yg = np.meshgrid(xs, ys)
    return (xg + 1j * yg).ravel()


def linear_conjugation_check(c: cv.PolylineEmbedding, r: float, s: float, rp: complex, sp: complex,
                             z=None) -> dict:
    """Deviation of the extension from naturality under affine changes of variable.

    Compares Ext(f o eta) with F o eta for ``eta(z) = r z + s`` and
    Ext(eta' o f) with eta' o F for ``eta'(w) = rp w + sp``.  Deviations are
    scaled by ``1 + |value|``.
    """
    if not r > 0:
        raise DomainError("eta must be increasing on the line (r > 0)")
    if rp == 0:
        raise DomainError("eta' must be invertible")
    z = _test_grid() if z is None else np.asarray(z, dtype=complex)
    F = build_extension(c)
    pre = build_extension(cv.precompose(c, r, s))
    post = build_extension(cv.postcompose(c, rp, sp))
    ref_pre = F_eval(F, r * z + s)
    ref_post = rp * F_eval(F, z) + sp
    dev_pre = float(np.max(np.abs(F_eval(pre, z) - ref_pre) / (1 + np.abs(ref_pre))))
    dev_post = float(np.max(np.abs(F_eval(post, z) - ref_post) / (1 + np.abs(ref_post))))
    return {"pre": dev_pre, "post": dev_post, "max": max(dev_pre, dev_post)}


def normalization_check(c: cv.PolylineEmbedding, normalization, z=None) -> float:
    """Max scaled change of F when the conformal maps are normalized differently."""
    z = _test_grid() if z is None else np.asarray(z, dtype=complex)
    a = F_eval(build_extension(c), z)
    b = F_eval(build_extension(c, normalization=normalization), z)
    return float(np.max(np.abs(a - b) / (1 + np.abs(a))))
