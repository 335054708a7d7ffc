"""Beurling-Ahlfors extension of an increasing homeomorphism psi of the line.

    Psi(x + iy) = 1/2 int_{-1}^{1} psi(x + t y) (1 + i sgn t) dt

Everything is expressed through five numbers at (x, y): ``psi(x)`` and

    alpha = psi(x+y) - psi(x)          gamma = int_0^1 (psi(x+y) - psi(x+ty)) dt
    beta  = psi(x) - psi(x-y)          delta = int_{-1}^0 (psi(x+ty) - psi(x-y)) dt

so that ``Re Psi = psi(x) + (alpha - beta - gamma + delta) / 2``,
``Im Psi = (alpha + beta - gamma - delta) / 2`` and

    DPsi = 1/(2y) [[alpha + beta, gamma - delta],
                   [alpha - beta, gamma + delta]].

Three evaluation routes compute them:

* window: when [x-y, x+y] stays clear of the prevertices, all four are
  Gauss-Legendre integrals of ``psi'`` against ``1, |s|`` (no cancellation);
* antiderivative: differences of ``psi`` and of its antiderivative, taken
  relative to the nearest prevertex;
* quadrature: adaptive Gauss-Legendre of the defining integrals, for a
  plain callable ``psi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InversionError
from .quadrature import adaptive_gauss_legendre, gauss_legendre_01

WINDOW_NODES = 16
# window route is used when y <= WINDOW_FRACTION * distance to the nearest prevertex
WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class BAJacobian:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    y: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        a, b, g, d, y = np.broadcast_arrays(self.alpha, self.beta, self.gamma, self.delta, self.y)
        m = np.empty(a.shape + (2, 2))
        m[..., 0, 0] = a + b
        m[..., 0, 1] = g - d
        m[..., 1, 0] = a - b
        m[..., 1, 1] = g + d
        return m / (2 * y)[..., None, None]

    @property
    def det(self):
        return (self.alpha * self.delta + self.beta * self.gamma) / (2 * self.y ** 2)

    @property
    def norm(self):
        return spectral_norm(self.matrix)

    @property
    def inv_norm(self):
        return self.norm / np.abs(self.det)

    @property
    def norm_bound(self):
        """(alpha + beta) / y, an upper bound for the operator norm."""
        return (self.alpha + self.beta) / self.y

    @property
    def inv_norm_bound(self):
        """2y / min(gamma, delta), an upper bound for the inverse's norm."""
        return 2 * self.y / np.minimum(self.gamma, self.delta)


def spectral_norm(m):
    """Largest singular value of (..., 2, 2) real matrices."""
    m = np.asarray(m, dtype=float)
    fro2 = np.sum(m * m, axis=(-2, -1))
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


class BoundaryReparam:
    """psi together with the machinery for Psi, DPsi and the inverse of Psi.

    Build one with :meth:`from_map` (psi = f^{-1} o phi of a conformal map)
    or :meth:`from_callable` (any increasing function).
    """

    def __init__(self, psi, dpsi=None, psi_inv=None, phi_map=None, name="psi"):
        self._psi = psi
        self._dpsi = dpsi
        self._psi_inv = psi_inv
        self.phi_map = phi_map
        self.curve = getattr(phi_map, "curve", None)
        self.name = name

    @classmethod
    def from_map(cls, m):
        return _MapReparam(m)

    @classmethod
    def from_callable(cls, psi, dpsi=None, psi_inv=None, name="psi"):
        return cls(psi, dpsi, psi_inv, name=name)

    # -- psi ------------------------------------------------------------
    def psi(self, x):
        return self._psi(np.asarray(x, dtype=float))

    def psi_inv(self, t):
        if self._psi_inv is not None:
            return self._psi_inv(np.asarray(t, dtype=float))
        return _invert_increasing(self.psi, np.asarray(t, dtype=float))

    # -- the five numbers ------------------------------------------------
    def parts(self, z):
        """(psi(x), alpha, beta, gamma, delta) at z = x + iy, each of z's shape."""
        z = _check_upper(z)
        x, y = z.real.ravel(), z.imag.ravel()
        out = self._parts_quadrature(x, y)
        return tuple(p.reshape(z.shape) for p in out)

    def _parts_quadrature(self, x, y, rtol=1e-12):
        n = x.size
        psi0 = self.psi(x)
        psim = self.psi(x - y)
        psip = self.psi(x + y)
        ip = np.empty(n)
        im = np.empty(n)
        for k in range(n):
            xk, yk = float(x[k]), float(y[k])
            f = lambda t: self.psi(xk + t * yk)  # noqa: E731
            ip[k] = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=rtol)
            im[k] = adaptive_gauss_legendre(f, -1.0, 0.0, rtol=rtol)
        return psi0, psip - psi0, psi0 - psim, psip - ip, im - psim

    # -- extension and Jacobian -----------------------------------------
    def extend(self, z):
        psi0, a, b, g, d = self.parts(z)
        return psi0 + 0.5 * (a - b - g + d) + 0.5j * (a + b - g - d)

    def jacobian(self, z) -> BAJacobian:
        z = _check_upper(z)
        _, a, b, g, d = self.parts(z)
        return BAJacobian(a, b, g, d, z.imag)

    def extend_with_jacobian(self, z):
        z = _check_upper(z)
        psi0, a, b, g, d = self.parts(z)
        val = psi0 + 0.5 * (a - b - g + d) + 0.5j * (a + b - g - d)
        return val, BAJacobian(a, b, g, d, z.imag)

    def initial_guess(self, w):
        u, v = w.real, w.imag
        x0 = self.psi_inv(u)
        y0 = 0.5 * (self.psi_inv(u + 2 * v) - self.psi_inv(u - 2 * v))
        return x0 + 1j * np.maximum(y0, 1e-300)

    def inverse(self, w, tol=1e-10, max_iter=50):
        """Damped Newton solve of Psi(z) = w for w in the upper half-plane."""
        w = _check_upper(w)
        shape = w.shape
        target = w.ravel()
        floor = np.maximum(tol, 64 * np.finfo(float).eps * (1 + np.abs(target)))
        z = self.initial_guess(target)
        z, ok, res = self._newton(target, z, floor, max_iter)
        if not np.all(ok):
            # fallback: multi-start on a coarse grid around the first guess
            for dx, fy in [(None, None), (0, 4.0), (0, 0.25), (-1, 1.0), (1, 1.0), (0, 16.0), (0, 1 / 16)]:
                bad = ~ok
                if not np.any(bad):
                    break
                if dx is None:
                    z0 = target[bad].copy()     # the plain start z0 = w
                else:
                    z0 = self.initial_guess(target[bad])
                    z0 = z0.real + dx * z0.imag + 1j * z0.imag * fy
                zb, okb, resb = self._newton(target[bad], z0, floor[bad], max_iter)
                z[bad] = np.where(okb, zb, z[bad])
                res[bad] = np.where(okb, resb, res[bad])
                ok[bad] = okb
        if not np.all(ok):
            i = int(np.argmax(~ok))
            raise InversionError(
                f"Newton inversion failed for {int(np.sum(~ok))} point(s); "
                f"e.g. w={target[i]:.6g}, residual {res[i]:.3e}",
                trace={"w": target[~ok][:10].tolist(), "residual": res[~ok][:10].tolist()})
        out = z.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def _newton(self, target, z, floor, max_iter):
        z = z.copy()
        val, jac = self.extend_with_jacobian(z)
        mat = jac.matrix
        res = np.abs(val - target)
        ok = res <= floor
        stalled = np.zeros(z.size, dtype=bool)
        for _ in range(max_iter):
            idx = np.flatnonzero(~ok & ~stalled)
            if idx.size == 0:
                break
            r = val[idx] - target[idx]
            m = mat[idx]
            det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
            dx = (m[:, 1, 1] * r.real - m[:, 0, 1] * r.imag) / det
            dy = (m[:, 0, 0] * r.imag - m[:, 1, 0] * r.real) / det
            step = -(dx + 1j * dy)
            lam = np.ones(idx.size)
            pending = np.ones(idx.size, dtype=bool)
            for _ in range(40):
                p = np.flatnonzero(pending)
                if p.size == 0:
                    break
                cand = z[idx[p]] + lam[p] * step[p]
                trial = np.full(p.size, np.inf)
                inside = cand.imag > 0
                if np.any(inside):
                    trial[inside] = np.abs(self.extend(cand[inside]) - target[idx[p][inside]])
                acc = trial < res[idx[p]]
                z[idx[p[acc]]] = cand[acc]
                pending[p[acc]] = False
                lam[p[~acc]] *= 0.5
            stalled[idx[pending]] = True
            moved = idx[~pending]
            if moved.size:
                v, jc = self.extend_with_jacobian(z[moved])
                val[moved] = v
                mat[moved] = jc.matrix
                res[moved] = np.abs(v - target[moved])
                ok[moved] = res[moved] <= floor[moved]
        return z, ok, res


class _MapReparam(BoundaryReparam):
    """psi = f^{-1} o phi for a conformal map exposing psi tables."""

    def __init__(self, m):
        super().__init__(m.psi, m.dpsi, m.psi_inv, phi_map=m, name=f"psi[{m.curve.name}]")
        self.m = m
        self.xk = np.asarray(m.prevertices, dtype=float)
        self._wx, self._ww = gauss_legendre_01(WINDOW_NODES)

    def _parts_window(self, x, y):
        s, w = self._wx, self._ww
        dp_plus = self.m.dpsi(x[:, None] + y[:, None] * s[None, :])
        dp_minus = self.m.dpsi(x[:, None] - y[:, None] * s[None, :])
        a = y * (dp_plus @ w)
        b = y * (dp_minus @ w)
        g = y * (dp_plus @ (w * s))
        d = y * (dp_minus @ (w * s))
        return self.m.psi(x), a, b, g, d

    def _parts_antiderivative(self, x, y):
        xs = self.xk
        k0 = np.argmin(np.abs(x[:, None] - xs[None, :]), axis=1)
        pts = np.stack([x - y, x, x + y])
        # everything relative to the prevertex nearest x, so that the
        # differences below never see the (large) values t_k and P_k
        rel_psi, rel_ant = self.m.psi_relative(pts, np.broadcast_to(k0, pts.shape))
        psim, psi0, psip = rel_psi
        antm, ant0, antp = rel_ant
        tk = _knot_params(self.m)[k0]
        A = antp - ant0     # int_x^{x+y} psi - t_k y
        Bm = ant0 - antm    # int_{x-y}^x psi - t_k y
        alpha = psip - psi0
        beta = psi0 - psim
        gamma = psip - A / y
        delta = Bm / y - psim
        return tk + psi0, alpha, beta, gamma, delta

    def parts(self, z):
        z = _check_upper(z)
        shape = z.shape
        x, y = z.real.ravel(), z.imag.ravel()
        dist = np.min(np.abs(x[:, None] - self.xk[None, :]), axis=1)
        win = y <= WINDOW_FRACTION * dist
        out = [np.empty(x.size) for _ in range(5)]
        if np.any(win):
            for o, v in zip(out, self._parts_window(x[win], y[win])):
                o[win] = v
        if np.any(~win):
            for o, v in zip(out, self._parts_antiderivative(x[~win], y[~win])):
                o[~win] = v
        return tuple(o.reshape(shape) for o in out)


def _knot_params(m):
    if getattr(m, "halfplane", "upper") == "lower":
        raise DomainError("Beurling-Ahlfors extension needs an orientation-preserving trace")
    return np.atleast_1d(m.curve.params)


def _invert_increasing(fun, target, iters=200):
    target = np.asarray(target, dtype=float)
    lo = -np.ones(target.shape)
    hi = np.ones(target.shape)
    for _ in range(200):
        grow_lo = fun(lo) > target
        grow_hi = fun(hi) < target
        if not (np.any(grow_lo) or np.any(grow_hi)):
            break
        lo = np.where(grow_lo, 2 * lo, lo)
        hi = np.where(grow_hi, 2 * hi, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fun(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 4e-16 * (1 + np.abs(mid))):
            break
    return 0.5 * (lo + hi)


def _check_upper(z):
    z = np.asarray(z, dtype=complex)
    if np.any(~(z.imag > 0)):
        raise DomainError("point(s) not in the open upper half-plane")
    return z


# ----------------------------------------------------------------------
# operation-style entry points

def psi_eval(b: BoundaryReparam, x, tol=1e-8):
    """psi(x) as f^{-1}(phi(x)): boundary trace followed by projection onto the curve."""
    if b.phi_map is None:
        return b.psi(x)
    from .curve import project_inverse
    return project_inverse(b.phi_map.curve, b.phi_map.boundary(x), tol)


def ba_extend(b: BoundaryReparam, z):
    return b.extend(z)


def ba_jacobian(b: BoundaryReparam, z) -> BAJacobian:
    return b.jacobian(z)


def ba_inverse(b: BoundaryReparam, w, tol=1e-10):
    return b.inverse(w, tol)
