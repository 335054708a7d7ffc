"""Piecewise-linear bilipschitz embeddings of the real line.

A curve is stored as parameter knots ``t_0 < ... < t_n`` with images
``w_k = f(t_k)`` and two straight tails,

    f(t) = w_0 + v_minus * (t - t_0)   for t <= t_0,
    f(t) = w_n + v_plus  * (t - t_n)   for t >= t_n.

Internally the curve is split into ``n + 2`` affine *pieces*: piece 0 is the
negative tail, pieces ``1..n`` are the segments and piece ``n + 1`` is the
positive tail.  Piece ``i`` is ``a -> ref_point[i] + velocity[i] * (a - ref_param[i])``
restricted to ``[lo[i], hi[i]]``.

Tails are usually unit speed, which is the normalisation used by the curve
JSON format.  Non-unit tail speeds are accepted by the in-memory API because
they arise from conjugating a curve by a linear map; reparametrising such a
tail to unit speed would change ``f`` and hence its extension.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidCurveError, OffCurveError

# pieces closer than this are treated as intersecting
INTERSECTION_TOL = 1e-12
UNIT_TAIL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class PolylineEmbedding:
    params: np.ndarray
    images: np.ndarray
    tail_neg: complex
    tail_pos: complex
    name: str = "curve"
    lip_upper: float = field(init=False)
    lip_lower: float = field(init=False)

    def __post_init__(self):
        t = np.array(self.params, dtype=float).ravel()
        w = np.array(self.images, dtype=complex).ravel()
        if t.size == 0 or t.size != w.size:
            raise InvalidCurveError("need at least one knot and matching params/images")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(w))):
            raise InvalidCurveError("non-finite knot data")
        if np.any(np.diff(t) <= 0):
            raise InvalidCurveError("parameter knots must be strictly increasing")
        vm, vp = complex(self.tail_neg), complex(self.tail_pos)
        if not (abs(vm) > 0 and abs(vp) > 0) or not all(map(math.isfinite, (vm.real, vm.imag, vp.real, vp.imag))):
            raise InvalidCurveError("tail velocities must be finite and nonzero")
        if np.any(np.abs(np.diff(w)) == 0):
            raise InvalidCurveError("degenerate (zero length) segment")
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "params", t)
        object.__setattr__(self, "images", w)
        object.__setattr__(self, "tail_neg", vm)
        object.__setattr__(self, "tail_pos", vp)
        if not is_simple(self):
            raise InvalidCurveError(f"{self.name}: curve is not simple")
        object.__setattr__(self, "lip_upper", compute_lip_upper(self))
        object.__setattr__(self, "lip_lower", compute_lip_lower(self))

    # -- structure -----------------------------------------------------
    @property
    def n(self) -> int:
        """Number of finite segments."""
        return self.params.size - 1

    @property
    def velocities(self) -> np.ndarray:
        t, w = self.params, self.images
        return np.concatenate([[self.tail_neg], np.diff(w) / np.diff(t), [self.tail_pos]])

    @property
    def speeds(self) -> np.ndarray:
        return np.abs(self.velocities)

    @property
    def turning_angles(self) -> np.ndarray:
        """Signed turn at each knot, in (-pi, pi); positive means a left turn."""
        v = self.velocities
        return np.angle(v[1:] / v[:-1])

    def _pieces(self):
        t, w = self.params, self.images
        lo = np.concatenate([[-np.inf], t])
        hi = np.concatenate([t, [np.inf]])
        ref_param = np.concatenate([[t[0]], t])
        ref_point = np.concatenate([[w[0]], w])
        return lo, hi, ref_param, ref_point, self.velocities

    def _geometric_pieces(self):
        """(start, unit direction, length) of every piece as a point set."""
        w, v = self.images, self.velocities
        start = np.concatenate([[w[0]], w])
        direction = v / np.abs(v)
        direction[0] = -direction[0]
        length = np.concatenate([[np.inf], np.abs(np.diff(w)), [np.inf]])
        return start, direction, length

    def __call__(self, t):
        return eval_curve(self, t)

    def distance(self, points) -> np.ndarray:
        """Exact Euclidean distance from points to the curve."""
        return _nearest(self, points)[0]

    def side_of(self, points) -> np.ndarray:
        """+1 for points left of the curve (w.r.t. its orientation), -1 right, 0 on it."""
        return side_of(self, points)

    def to_dict(self) -> dict:
        return {
            "knots": [{"t": float(tk), "w": [float(wk.real), float(wk.imag)]}
                      for tk, wk in zip(self.params, self.images)],
            "tail_neg": [self.tail_neg.real, self.tail_neg.imag],
            "tail_pos": [self.tail_pos.real, self.tail_pos.imag],
        }

    def __repr__(self):
        return (f"PolylineEmbedding({self.name!r}, knots={self.n + 1}, "
                f"L={self.lip_upper:.6g}, l={self.lip_lower:.6g})")


# ----------------------------------------------------------------------
# evaluation and projection

def eval_curve(c: PolylineEmbedding, t):
    """Evaluate f at real parameter(s) ``t``."""
    t_arr = np.asarray(t, dtype=float)
    tk, wk = c.params, c.images
    out = np.interp(t_arr, tk, wk.real) + 1j * np.interp(t_arr, tk, wk.imag)
    out = np.where(t_arr < tk[0], wk[0] + c.tail_neg * (t_arr - tk[0]), out)
    out = np.where(t_arr > tk[-1], wk[-1] + c.tail_pos * (t_arr - tk[-1]), out)
    return out[()] if out.ndim == 0 else out


def _project_onto_pieces(c, q):
    """Distances (m, n+2), arclength positions along each piece."""
    start, direction, length = c._geometric_pieces()
    rel = q[:, None] - start[None, :]
    s = (rel * direction.conj()[None, :]).real
    s = np.clip(s, 0.0, length[None, :])
    d = np.abs(rel - s * direction[None, :])
    return d, s


def _nearest(c, points):
    q = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    d, s = _project_onto_pieces(c, q)
    idx = np.argmin(d, axis=1)
    rows = np.arange(q.size)
    dist = d[rows, idx]
    s_best = s[rows, idx]
    speeds = c.speeds
    t = c.params
    lo_param = np.concatenate([[t[0]], t])
    sign = np.where(idx == 0, -1.0, 1.0)
    par = lo_param[idx] + sign * s_best / speeds[idx]
    shape = np.shape(points)
    return dist.reshape(shape), par.reshape(shape), idx.reshape(shape)


def project_inverse(c: PolylineEmbedding, w, tol: float = 1e-9):
    """Parameter ``t`` with ``f(t)`` closest to ``w``; raises if ``w`` is off the curve."""
    dist, par, _ = _nearest(c, w)
    bad = np.asarray(dist) > tol
    if np.any(bad):
        worst = float(np.max(dist))
        raise OffCurveError(f"point at distance {worst:.3e} from the curve (tol {tol:.1e})")
    par = np.asarray(par, dtype=float)
    return par[()] if par.ndim == 0 else par


def side_of(c: PolylineEmbedding, points):
    q = np.atleast_1d(np.asarray(points, dtype=complex)).ravel()
    dist, _, idx = _nearest(c, q)
    start, direction, length = c._geometric_pieces()
    v = c.velocities
    out = np.zeros(q.size)
    for m in range(q.size):
        if dist[m] <= INTERSECTION_TOL:
            continue
        i = idx[m]
        rel = q[m] - start[i]
        s = (rel * np.conj(direction[i])).real
        at_start = s <= 0.0
        at_end = np.isfinite(length[i]) and s >= length[i]
        if not (at_start or at_end):
            sgn = np.sign((np.conj(v[i]) * rel).imag)
            out[m] = sgn
            continue
        # nearest point is a knot: test the left wedge at that knot
        if i == 0:
            k = 0
        elif at_start:
            k = i - 1
        else:
            k = i
        wk = c.images[k]
        d_in, d_out = v[k], v[k + 1]
        interior = math.pi - np.angle(d_out / d_in)
        ang = np.angle((q[m] - wk) / d_out) % (2 * math.pi)
        out[m] = 1.0 if 0.0 < ang < interior else -1.0
    return out.reshape(np.shape(points))


# ----------------------------------------------------------------------
# simplicity

def _point_piece_distance(q, start, direction, length):
    s = ((q - start) * np.conj(direction)).real
    s = min(max(s, 0.0), length)
    return abs(q - start - s * direction)


def _piece_distance(a, b):
    (p1, d1, l1), (p2, d2, l2) = a, b
    cross = (np.conj(d1) * d2).imag
    if abs(cross) > 1e-15:
        # solve p1 + d1 s = p2 + d2 r
        rel = p2 - p1
        s = (rel.real * d2.imag - rel.imag * d2.real) / cross
        r = (rel.real * d1.imag - rel.imag * d1.real) / cross
        if -1e-15 <= s <= l1 + 1e-15 and -1e-15 <= r <= l2 + 1e-15:
            return 0.0
    cands = [_point_piece_distance(p1, p2, d2, l2), _point_piece_distance(p2, p1, d1, l1)]
    if math.isfinite(l1):
        cands.append(_point_piece_distance(p1 + d1 * l1, p2, d2, l2))
    if math.isfinite(l2):
        cands.append(_point_piece_distance(p2 + d2 * l2, p1, d1, l1))
    return min(cands)


def is_simple(c: PolylineEmbedding) -> bool:
    """True iff no two pieces meet except adjacent pieces at their shared knot."""
    start, direction, length = c._geometric_pieces()
    pieces = list(zip(start, direction, length))
    v = c.velocities
    m = len(pieces)
    for i in range(m - 1):
        # adjacent pieces overlap only when the curve doubles back
        cross = (np.conj(v[i]) * v[i + 1]).imag
        dot = (np.conj(v[i]) * v[i + 1]).real
        if abs(cross) <= 1e-14 * abs(v[i]) * abs(v[i + 1]) and dot < 0:
            return False
        for j in range(i + 2, m):
            if _piece_distance(pieces[i], pieces[j]) <= INTERSECTION_TOL:
                return False
    return True


# ----------------------------------------------------------------------
# bilipschitz constants

def compute_lip_upper(c: PolylineEmbedding) -> float:
    """Exact expansion constant: the largest piece speed."""
    return float(np.max(c.speeds))


def _segment_origin_distance(u, v):
    """Distance from 0 to the segment [u, v] in the plane."""
    d = v - u
    n = abs(d)
    # below 1e-150 the segment is a point at double precision
    s = -(np.conj(d / n) * u).real / n if n > 1e-150 else 0.0
    s = min(max(s, 0.0), 1.0)
    return abs(u + s * d)


def _line_critical(A, B, d0, d1):
    """Critical parameter of |A + B s| / (d0 + d1 s) along a line, or None."""
    m = (np.conj(A) * B).real
    den = abs(B) ** 2 * d0 - m * d1
    num = m * d0 - d1 * abs(A) ** 2
    if abs(den) < 1e-300:
        return None
    return -num / den


def _pair_minimum(pi, pj):
    """min of |f(a) - f(b)| / (b - a) for a on piece i, b on piece j (i < j)."""
    lo_i, hi_i, ri, pti, u = pi
    lo_j, hi_j, rj, ptj, v = pj
    c = (pti - u * ri) - (ptj - v * rj)

    def ratio(a, b):
        return abs(c + u * a - v * b) / (b - a)

    vals = []
    shared = hi_i == lo_j
    if shared or (math.isinf(lo_i) and math.isinf(hi_j)):
        vals.append(_segment_origin_distance(u, v))
    if math.isinf(lo_i):
        vals.append(abs(u))
    if math.isinf(hi_j):
        vals.append(abs(v))

    def inside(x, lo, hi):
        return lo <= x <= hi

    def scan_edge(a0, b0, ea, eb, lo, hi):
        A = c + u * a0 - v * b0
        B = u * ea - v * eb
        d0, d1 = b0 - a0, eb - ea
        ss = [s for s in (lo, hi) if math.isfinite(s)]
        s_star = _line_critical(A, B, d0, d1)
        if s_star is not None and inside(s_star, lo, hi):
            ss.append(s_star)
        for s in ss:
            a, b = a0 + ea * s, b0 + eb * s
            if b - a > 0:
                vals.append(ratio(a, b))

    for a_fixed in (lo_i, hi_i):
        if math.isfinite(a_fixed):
            scan_edge(a_fixed, 0.0, 0.0, 1.0, lo_j, hi_j)
    for b_fixed in (lo_j, hi_j):
        if math.isfinite(b_fixed):
            scan_edge(0.0, b_fixed, 1.0, 0.0, lo_i, hi_i)

    # interior: the gradient condition along (1, 1) is linear in (a, b)
    duv = u - v
    ka = (np.conj(u) * duv).real
    kb = -(np.conj(v) * duv).real
    k0 = (np.conj(c) * duv).real
    if abs(duv) > 0 and max(abs(ka), abs(kb)) > 1e-290:
        if abs(kb) >= abs(ka):
            a0, b0, ea, eb = 0.0, -k0 / kb, 1.0, -ka / kb
        else:
            a0, b0, ea, eb = -k0 / ka, 0.0, -kb / ka, 1.0
        A = c + u * a0 - v * b0
        B = u * ea - v * eb
        s_star = _line_critical(A, B, b0 - a0, eb - ea)
        if s_star is not None:
            a, b = a0 + ea * s_star, b0 + eb * s_star
            if inside(a, lo_i, hi_i) and inside(b, lo_j, hi_j) and b - a > 0:
                vals.append(ratio(a, b))
    return min(vals)


def compute_lip_lower(c: PolylineEmbedding, resolution: int | None = None) -> float:
    """Exact compression constant by piecewise minimisation over piece pairs.

    With ``resolution`` set, a dense pair-sampling estimate is also computed
    and the two are required to agree to 1% (the sampled value can only be
    larger).
    """
    lo, hi, rp, pt, vel = c._pieces()
    pieces = list(zip(lo, hi, rp, pt, vel))
    best = float(np.min(np.abs(vel)))
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            best = min(best, _pair_minimum(pieces[i], pieces[j]))
    if best <= INTERSECTION_TOL:
        raise InvalidCurveError("compression constant is zero: curve is not simple")
    if resolution is not None:
        sampled = lip_lower_sampled(c, resolution)
        if sampled < best * (1 - 1e-9) or sampled > best * 1.01:
            raise InvalidCurveError(
                f"lower constant cross-check failed: exact {best:.6g}, sampled {sampled:.6g}")
    return float(best)


def lip_lower_sampled(c: PolylineEmbedding, resolution: int = 1500) -> float:
    """Brute-force inf of |f(a)-f(b)|/|a-b| over a symmetric parameter grid."""
    t = c.params
    mid = 0.5 * (t[0] + t[-1])
    half = 0.5 * (t[-1] - t[0]) + 1.0
    core = np.linspace(mid - 3 * half, mid + 3 * half, resolution)
    far = mid + np.concatenate([-np.geomspace(3 * half, 300 * half, resolution // 4),
                                np.geomspace(3 * half, 300 * half, resolution // 4)])
    a = np.unique(np.concatenate([core, far, t]))
    fa = eval_curve(c, a)
    best = np.inf
    for k in range(0, a.size, 256):
        blk = slice(k, k + 256)
        diff = np.abs(fa[blk, None] - fa[None, :])
        dt = np.abs(a[blk, None] - a[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dt > 0, diff / dt, np.inf)
        best = min(best, float(q.min()))
    return best


def sample_bilipschitz(c: PolylineEmbedding, a, b):
    """Difference quotients |f(a)-f(b)| / |a-b| for paired samples."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(eval_curve(c, a) - eval_curve(c, b)) / np.abs(a - b)


# ----------------------------------------------------------------------
# sets on the curve

def param_set_in_disk(c: PolylineEmbedding, rho: float, center: complex = 0.0, closed=True):
    """Parameter intervals where |f(t) - center| < rho, merged and sorted."""
    lo, hi, rp, pt, vel = c._pieces()
    out = []
    for l, h, r, p, u in zip(lo, hi, rp, pt, vel):
        # |p - center + u (a - r)|^2 = rho^2
        q0 = p - center - u * r
        A = abs(u) ** 2
        B = 2 * (np.conj(q0) * u).real
        C = abs(q0) ** 2 - rho ** 2
        disc = B * B - 4 * A * C
        if disc <= 0:
            continue
        sq = math.sqrt(disc)
        a1, a2 = (-B - sq) / (2 * A), (-B + sq) / (2 * A)
        a1, a2 = max(a1, l), min(a2, h)
        if a1 < a2:
            out.append([a1, a2])
    out.sort()
    merged = []
    for a1, a2 in out:
        if merged and a1 <= merged[-1][1] + 1e-14:
            merged[-1][1] = max(merged[-1][1], a2)
        else:
            merged.append([a1, a2])
    return [tuple(m) for m in merged]


def param_in_intervals(t, intervals) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    hit = np.zeros(t.shape, dtype=bool)
    for a, b in intervals:
        hit |= (t >= a) & (t <= b)
    return hit


# ----------------------------------------------------------------------
# construction helpers

def polyline(params, images, tail_neg=1.0, tail_pos=1.0, name="curve") -> PolylineEmbedding:
    return PolylineEmbedding(np.asarray(params, float), np.asarray(images, complex),
                             complex(tail_neg), complex(tail_pos), name=name)


def identity_curve() -> PolylineEmbedding:
    return polyline([0.0], [0.0], 1.0, 1.0, name="identity")


def bend_curve() -> PolylineEmbedding:
    """f(x) = x for x >= 0 and i x for x <= 0."""
    return polyline([0.0], [0.0], 1j, 1.0, name="bend")


def affine_curve(scale: complex = 2.0, shift: complex = 3.0) -> PolylineEmbedding:
    """f(x) = scale * x + shift."""
    return polyline([0.0], [shift], scale, scale, name="affine")


def zigzag_curve() -> PolylineEmbedding:
    """Four knots, three segments, horizontal unit-speed tails."""
    t = [-1.5, -0.5, 0.5, 1.5]
    w = [-1.5, -0.5 + 0.5j, 0.5 - 0.5j, 1.5]
    return polyline(t, w, 1.0, 1.0, name="zigzag")


def wedge_curve(angle: float, speed: float = 1.0) -> PolylineEmbedding:
    """Two rays meeting at 0 with the given turn, both traversed at ``speed``."""
    return polyline([0.0], [0.0], speed * np.exp(-1j * angle), speed, name="wedge")


def precompose(c: PolylineEmbedding, r: float, s: float) -> PolylineEmbedding:
    """The embedding t -> f(r t + s), r > 0."""
    if not r > 0:
        raise InvalidCurveError("precomposition needs r > 0")
    return polyline((c.params - s) / r, c.images, c.tail_neg * r, c.tail_pos * r,
                    name=f"{c.name}∘η")


def postcompose(c: PolylineEmbedding, a: complex, b: complex) -> PolylineEmbedding:
    """The embedding t -> a f(t) + b, a != 0."""
    if a == 0:
        raise InvalidCurveError("postcomposition needs a != 0")
    return polyline(c.params, a * c.images + b, a * c.tail_neg, a * c.tail_pos,
                    name=f"η∘{c.name}")


def refine(c: PolylineEmbedding, extra_params) -> PolylineEmbedding:
    """Same embedding with additional (collinear) knots inserted."""
    t = np.unique(np.concatenate([c.params, np.asarray(extra_params, float)]))
    return polyline(t, eval_curve(c, t), c.tail_neg, c.tail_pos, name=f"{c.name}+knots")


def mirror(c: PolylineEmbedding) -> PolylineEmbedding:
    """The embedding t -> conj(f(t)) tracing the reflected curve."""
    return polyline(c.params, np.conj(c.images), np.conj(c.tail_neg), np.conj(c.tail_pos),
                    name=f"{c.name}*")


# ----------------------------------------------------------------------
# JSON

def curve_from_dict(data: dict, name: str = "curve") -> PolylineEmbedding:
    try:
        knots = data["knots"]
        t = [float(k["t"]) for k in knots]
        w = [complex(float(k["w"][0]), float(k["w"][1])) for k in knots]
        vm = complex(float(data["tail_neg"][0]), float(data["tail_neg"][1]))
        vp = complex(float(data["tail_pos"][0]), float(data["tail_pos"][1]))
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise InvalidCurveError(f"malformed curve JSON: {exc}") from exc
    for label, v in (("tail_neg", vm), ("tail_pos", vp)):
        if abs(abs(v) - 1.0) > UNIT_TAIL_TOL:
            raise InvalidCurveError(f"{label} must be a unit vector (|v| = {abs(v):.12g})")
    c = polyline(t, w, vm, vp, name=data.get("name", name))
    supplied = data.get("lip_lower", data.get("l"))
    if supplied is not None:
        supplied = float(supplied)
        if abs(supplied - c.lip_lower) > 0.01 * c.lip_lower:
            raise InvalidCurveError(
                f"supplied lower constant {supplied:.6g} disagrees with computed {c.lip_lower:.6g}")
    return c


def load_curve(path) -> PolylineEmbedding:
    path = Path(path)
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidCurveError(f"{path}: {exc}") from exc
    return curve_from_dict(data, name=path.stem)


def dump_curve(c: PolylineEmbedding, path) -> None:
    with open(path, "w") as fh:
        json.dump(c.to_dict(), fh, indent=1)
