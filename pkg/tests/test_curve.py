import json
import math

import numpy as np
import pytest

from bilex import curve as cv
from bilex.errors import InvalidCurveError, OffCurveError


def test_eval_examples(bend):
    assert cv.eval_curve(cv.identity_curve(), 3.5) == 3.5
    assert cv.eval_curve(bend, -2.0) == pytest.approx(-2j)
    assert cv.eval_curve(bend, 3.0) == pytest.approx(3.0)


def test_constants(bend):
    assert cv.identity_curve().lip_upper == 1.0
    assert cv.identity_curve().lip_lower == pytest.approx(1.0)
    assert bend.lip_upper == 1.0
    assert bend.lip_lower == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    scaled = cv.postcompose(bend, 2.0, 0.0)
    assert scaled.lip_upper == pytest.approx(2 * bend.lip_upper)


def test_right_angle_wedge_against_sampling():
    for s in (0.5, 1.0, 3.0):
        c = cv.wedge_curve(math.pi / 2, s)
        assert c.lip_lower == pytest.approx(s / math.sqrt(2), rel=1e-12)
        assert cv.lip_lower_sampled(c) >= c.lip_lower * (1 - 1e-12)
        assert cv.lip_lower_sampled(c) <= c.lip_lower * 1.01


def test_lower_constant_cross_check(zigzag):
    assert cv.compute_lip_lower(zigzag, resolution=800) == pytest.approx(zigzag.lip_lower)
    assert zigzag.lip_lower == pytest.approx(1.0)
    assert zigzag.lip_upper == pytest.approx(math.sqrt(2))


def test_project_inverse(bend):
    assert cv.project_inverse(bend, -2j) == pytest.approx(-2.0)
    assert cv.project_inverse(cv.identity_curve(), 7.0) == pytest.approx(7.0)
    assert cv.project_inverse(bend, 0.5) == pytest.approx(0.5)
    with pytest.raises(OffCurveError):
        cv.project_inverse(bend, 1 + 1j)


def test_simplicity():
    assert cv.is_simple(cv.bend_curve())
    assert cv.is_simple(cv.identity_curve())
    with pytest.raises(InvalidCurveError):
        cv.polyline([0, 1, 2], [0, 1 + 1j, 1 - 1j], -1, 1)
    with pytest.raises(InvalidCurveError):
        cv.polyline([0, 1, 2, 3], [0, 2, 1 - 1j, 1 + 1j], 1, 1j)


def test_fold_back_rejected():
    with pytest.raises(InvalidCurveError):
        cv.polyline([0.0, 1.0], [0.0, 1.0], 1.0, -1.0)


def test_bad_input():
    with pytest.raises(InvalidCurveError):
        cv.polyline([0, 0], [0, 1])
    with pytest.raises(InvalidCurveError):
        cv.polyline([0, 1], [0, 0])
    with pytest.raises(InvalidCurveError):
        cv.polyline([0.0], [0.0], 0.0, 1.0)


def test_side_of(bend):
    assert cv.side_of(bend, np.array([-1 + 1j]))[0] == 1
    assert cv.side_of(bend, np.array([1 - 1j]))[0] == -1
    assert cv.side_of(bend, np.array([1 + 0j]))[0] == 0


def test_disk_parameters(bend):
    assert cv.param_set_in_disk(bend, 1.0) == [(-1.0, 1.0)]
    z = cv.zigzag_curve()
    iv = cv.param_set_in_disk(z, 0.5)
    t = np.linspace(-3, 3, 2001)
    inside = np.abs(z(t)) < 0.5
    assert np.all(cv.param_in_intervals(t[inside], iv))


def test_json_roundtrip(tmp_path, zigzag):
    p = tmp_path / "z.json"
    cv.dump_curve(zigzag, p)
    back = cv.load_curve(p)
    assert np.allclose(back.images, zigzag.images)
    assert back.lip_lower == pytest.approx(zigzag.lip_lower)


def test_json_validation(tmp_path):
    good = {"knots": [{"t": 0, "w": [0, 0]}], "tail_neg": [0, 1], "tail_pos": [1, 0]}
    assert cv.curve_from_dict(good).lip_lower == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(InvalidCurveError):
        cv.curve_from_dict({**good, "tail_pos": [2, 0]})
    with pytest.raises(InvalidCurveError):
        cv.curve_from_dict({**good, "lip_lower": 0.9})
    assert cv.curve_from_dict({**good, "lip_lower": 0.7071}).name == "curve"
    with pytest.raises(InvalidCurveError):
        cv.curve_from_dict({"knots": []})
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InvalidCurveError):
        cv.load_curve(p)


def test_transforms(bend):
    pre = cv.precompose(bend, 2.0, 1.0)
    t = np.linspace(-3, 3, 13)
    assert np.allclose(pre(t), bend(2 * t + 1))
    post = cv.postcompose(bend, 1j, 2.0)
    assert np.allclose(post(t), 1j * bend(t) + 2)
    ref = cv.refine(bend, [-1.0, 2.0])
    assert np.allclose(ref(t), bend(t))
    assert np.allclose(cv.mirror(bend)(t), np.conj(bend(t)))
    assert json.dumps(bend.to_dict())
