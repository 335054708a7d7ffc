import json
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bilex import curve as cv
from bilex.audit import GridSpec, halfplane_harmonic_measure
from bilex.ba_ext import BoundaryReparam, spectral_norm
from bilex.extension import build_extension, lip1_check

finite = st.floats(-5, 5, allow_nan=False)
angles = st.floats(-0.9 * math.pi, 0.9 * math.pi).filter(lambda a: abs(a) > 1e-3)
uppers = st.tuples(st.floats(-5, 5), st.floats(1e-3, 5)).map(lambda p: complex(*p))


@settings(max_examples=40, deadline=None)
@given(angles, st.floats(0.2, 5))
def test_wedge_extension_bounds(angle, speed):
    F = build_extension(cv.wedge_curve(angle, speed))
    z = np.array([1j, -2 + 0.1j, 3 - 0.5j, 0.01 - 0.01j, 4 + 4j])
    assert lip1_check(F, z)["pass"]


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10), finite, uppers)
def test_affine_reparam_inverse(a, b, w):
    bp = BoundaryReparam.from_callable(lambda u: a * u + b)
    z = bp.inverse(w)
    assert abs(bp.extend(z) - w) <= 1e-9 * (1 + abs(w))


@given(st.lists(finite, min_size=4, max_size=4))
def test_spectral_norm_matches_svd(v):
    m = np.array(v).reshape(2, 2)
    assert math.isclose(float(spectral_norm(m)), np.linalg.norm(m, 2), rel_tol=1e-9, abs_tol=1e-12)


@given(uppers, finite, st.floats(0, 5))
def test_harmonic_measure_additive(z, a, length):
    left = halfplane_harmonic_measure(z, [(-math.inf, a)])
    mid = halfplane_harmonic_measure(z, [(a, a + length)])
    right = halfplane_harmonic_measure(z, [(a + length, math.inf)])
    assert math.isclose(left + mid + right, 1.0, abs_tol=1e-12)


@given(st.lists(st.tuples(st.floats(0.1, 3), st.floats(-3, 3)), min_size=1, max_size=5))
def test_curve_json_roundtrip(steps):
    # x-monotone polylines are simple; the steps give the knot images
    w = np.cumsum([complex(a, b) for a, b in steps])
    t = np.cumsum([abs(complex(a, b)) for a, b in steps])
    c = cv.polyline(t, w, 1.0, 1.0)
    back = cv.curve_from_dict(json.loads(json.dumps(c.to_dict())))
    assert np.array_equal(back.params, c.params) and np.array_equal(back.images, c.images)
    assert cv.is_simple(back)


@given(st.floats(-5, 0), st.floats(0.1, 2), st.integers(1, 5))
def test_grid_parse(x0, dx, n):
    g = GridSpec.parse(f"{x0!r}:{x0 + n * dx!r}:{dx!r},0.5:1.5:0.5")
    xs, ys = g.axes()
    assert len(ys) == 3 and abs(len(xs) - (n + 1)) <= 1
