"""Gauss rules on [0, 1] and a small adaptive Gauss-Legendre integrator."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

from .errors import QuadratureError

EPS = np.finfo(float).eps


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int):
    x, w = special.roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi_01(n: int, beta: float):
    """Nodes/weights for  int_0^1 s**beta g(s) ds,  beta > -1."""
    if abs(beta) < 1e-15:
        return gauss_legendre_01(n)
    x, w = special.roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 2.0 ** (-beta - 1.0)


def adaptive_gauss_legendre(f, a: float, b: float, rtol: float = 1e-8, atol: float = 0.0,
                            order: int = 10, max_depth: int = 40):
    """Integrate a vectorised ``f`` over [a, b] by recursive bisection.

    A panel is accepted when the order-``order`` rule on the panel agrees with
    the sum over its two halves.  Complex-valued ``f`` is allowed.
    """
    x, w = gauss_legendre_01(order)

    def rule(lo, hi):
        return (hi - lo) * np.dot(w, f(lo + (hi - lo) * x))

    whole = rule(a, b)
    scale = abs(whole)
    stack = [(a, b, whole, 0)]
    total = 0.0
    while stack:
        lo, hi, est, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = rule(lo, mid), rule(mid, hi)
        refined = left + right
        scale = max(scale, abs(refined))
        tol = max(rtol * scale, atol) * (hi - lo) / (b - a)
        # errors at rounding level cannot be reduced further by bisection
        if abs(refined - est) <= max(tol, 64 * EPS * scale):
            total += refined
            continue
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive quadrature failed on [{lo:.6g}, {hi:.6g}] (error {abs(refined - est):.2e})")
        stack.append((lo, mid, left, depth + 1))
        stack.append((mid, hi, right, depth + 1))
    return total
