"""Checks of the quantitative statements on constructed maps.

Arcs of the boundary are handled as exact sub-polylines of the curve (the
boundary trace of every map is ``f o psi``), so distances and diameters are
computed in closed form; the unbounded arcs keep their rays.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import curve as cv
from .conformal import ExactSector, koebe_check
from .errors import DegenerateStartError, DomainError, UsageError
from .extension import ExtensionMap, F_diagnostics, F_eval

HARM1_LOWER = 1.0 / 120.0
HARM1_UPPER = 500.0
WALK_CHUNK = 8192
MAX_STEPS = 20000


# ----------------------------------------------------------------------
# sub-polylines

def subcurve_pieces(c: cv.PolylineEmbedding, a: float, b: float):
    """Geometric pieces (start, unit direction, length) of f([a, b]); a, b may be infinite."""
    if not a <= b:
        raise DomainError("empty parameter interval")
    lo, hi, _, _, vel = c._pieces()
    out = []
    for l, h, v in zip(lo, hi, vel):
        s0, s1 = max(l, a), min(h, b)
        if s0 > s1 or (s0 == s1 and out):
            continue
        u = v / abs(v)
        if math.isinf(s0):
            out.append((complex(cv.eval_curve(c, s1)), -u, math.inf))
        else:
            out.append((complex(cv.eval_curve(c, s0)), u, abs(v) * (s1 - s0)))
    return out


def subcurve_distance(p, q) -> float:
    return min(cv._piece_distance(x, y) for x in p for y in q)


def subcurve_diameter(c: cv.PolylineEmbedding, a: float, b: float) -> float:
    """Diameter of f([a, b]) for a bounded interval (attained at vertices)."""
    if not (math.isfinite(a) and math.isfinite(b)):
        return math.inf
    inner = c.params[(c.params > a) & (c.params < b)]
    pts = cv.eval_curve(c, np.concatenate([[a], inner, [b]]))
    return float(np.max(np.abs(pts[:, None] - pts[None, :])))


@dataclass(frozen=True)
class BoundaryArcs:
    """Gamma_1..Gamma_4 of the anchor z = x + iy, as parameter intervals of the curve."""
    curve: cv.PolylineEmbedding
    anchor: complex
    x_intervals: tuple
    t_intervals: tuple
    R: float

    def pieces(self, j):
        a, b = self.t_intervals[j - 1]
        return subcurve_pieces(self.curve, a, b)

    def diameter(self, j) -> float:
        return subcurve_diameter(self.curve, *self.t_intervals[j - 1])

    def distance(self, i, j) -> float:
        return subcurve_distance(self.pieces(i), self.pieces(j))

    def points(self, j, n=200):
        """A discretisation of arc j, truncated at |t| = R for the unbounded arcs."""
        a, b = self.t_intervals[j - 1]
        a, b = max(a, -self.R), min(b, self.R)
        t = np.union1d(np.linspace(a, b, n), self.curve.params[(self.curve.params > a) & (self.curve.params < b)])
        return cv.eval_curve(self.curve, t)


def boundary_arcs(m, c: cv.PolylineEmbedding, z, R=None) -> BoundaryArcs:
    z = complex(z)
    x, y = z.real, z.imag
    if not y > 0:
        raise DomainError("anchor must lie in the upper half-plane")
    xi = ((-math.inf, x - y), (x - y, x - y / 2), (x + y / 2, x + y), (x + y, math.inf))
    ends = np.array([x - y, x - y / 2, x + y / 2, x + y])
    t = np.atleast_1d(m.psi(ends)).astype(float)
    ti = ((-math.inf, t[0]), (t[0], t[1]), (t[2], t[3]), (t[3], math.inf))
    if R is None:
        R = float(max(np.max(np.abs(t)), np.max(np.abs(c.params)))) + 10.0
    return BoundaryArcs(c, z, xi, ti, float(R))


def lemma_harm1_check(m, c: cv.PolylineEmbedding, z):
    """Margins of  dist(G1, G4)/120 <= y|Phi'| <= 500 min(diam G2, diam G3)."""
    arcs = boundary_arcs(m, c, z)
    scale = complex(z).imag * abs(complex(np.atleast_1d(m.dphi(np.array([complex(z)])))[0]))
    d14 = arcs.distance(1, 4)
    dmin = min(arcs.diameter(2), arcs.diameter(3))
    left = math.inf if d14 == 0 else scale / (HARM1_LOWER * d14)
    right = HARM1_UPPER * dmin / scale
    return left, right, bool(left >= 1 and right >= 1)


def random_upper_points(n, seed, box=5.0, ymin=0.01):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-box, box, n)
    y = np.exp(rng.uniform(math.log(ymin), math.log(box), n))
    return x + 1j * y


def harm1_audit(m, c, n=1000, seed=0) -> dict:
    z = random_upper_points(n, seed)
    res = np.array([lemma_harm1_check(m, c, zz)[:2] for zz in z])
    return {"name": "harm1", "pass": bool(np.all(res >= 1)), "margin": float(np.min(res)),
            "details": {"points": n, "min_left": float(np.min(res[:, 0])), "min_right": float(np.min(res[:, 1]))}}


def koebe_audit(m, n=1000, seed=0) -> dict:
    z = random_upper_points(n, seed)
    lower, upper = koebe_check(m, z)
    margin = float(min(np.min(lower), np.min(1.0 / upper)))
    return {"name": "koebe", "pass": bool(margin >= 1), "margin": margin,
            "details": {"points": n, "min_lower": float(np.min(lower)), "max_upper": float(np.max(upper))}}


def chord_arc_audit(m, c, n=1000, seed=0) -> dict:
    """Sampled diam/dist consequences of the bilipschitz property of f along psi."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-5, 5, n)
    b = a + np.exp(rng.uniform(math.log(1e-3), math.log(5), n))
    pa, pb = m.psi(a), m.psi(b)
    dpsi = pb - pa
    worst_diam = worst_dist = worst_chord = math.inf
    L, l = c.lip_upper, c.lip_lower
    chord = np.abs(m.boundary(a) - m.boundary(b))
    worst_chord = float(min(np.min(chord / (l * dpsi)), np.min(L * dpsi / chord)))
    for ta, tb, d in zip(pa, pb, dpsi):
        worst_diam = min(worst_diam, L * d / subcurve_diameter(c, ta, tb))
        dd = subcurve_distance(subcurve_pieces(c, -math.inf, ta), subcurve_pieces(c, tb, math.inf))
        worst_dist = min(worst_dist, dd / (l * d))
    margin = min(worst_diam, worst_dist, worst_chord)
    # margins of exactly 1 are attained (e.g. straight pieces); allow rounding
    return {"name": "chord_arc", "pass": bool(margin >= 1 - 1e-9), "margin": float(margin),
            "details": {"pairs": n, "diam": float(worst_diam), "dist": float(worst_dist),
                        "chord": worst_chord}}


# ----------------------------------------------------------------------
# harmonic measure

@dataclass(frozen=True)
class HalfPlane:
    """The upper half-plane; boundary parameter = real part."""
    name: str = "halfplane"

    def distance(self, p):
        return p.imag

    def nearest_param(self, p):
        return p.real

    def contains(self, p):
        return np.asarray(p).imag > 0


@dataclass(frozen=True)
class CurveDomain:
    """The complementary domain of a curve on ``side`` (+1 left, -1 right)."""
    curve: cv.PolylineEmbedding
    side: int = 1

    @property
    def name(self):
        return f"{self.curve.name}[{'left' if self.side > 0 else 'right'}]"

    def distance(self, p):
        return cv._nearest(self.curve, p)[0]

    def nearest_param(self, p):
        return cv._nearest(self.curve, p)[1]

    def contains(self, p):
        return cv.side_of(self.curve, p) == self.side


def as_domain(domain):
    if domain is None or domain == "halfplane":
        return HalfPlane()
    if isinstance(domain, (HalfPlane, CurveDomain)):
        return domain
    if isinstance(domain, cv.PolylineEmbedding):
        return CurveDomain(domain, 1)
    if isinstance(domain, tuple) and len(domain) == 2:
        c, side = domain
        side = {"left": 1, "right": -1, "upper": 1, "lower": -1}.get(side, side)
        return CurveDomain(c, int(side))
    raise UsageError(f"unrecognised domain {domain!r}")


@dataclass(frozen=True)
class HarmonicMeasureEstimate:
    value: float
    stderr: float
    walks: int
    tol: float
    seed: int | None = None
    truncated: int = 0

    def brackets(self, exact, k=3.0) -> bool:
        return abs(self.value - exact) <= k * self.stderr


def _normalise_intervals(E):
    E = [tuple(map(float, e)) for e in ([E] if np.ndim(E) == 1 and len(E) == 2 and
                                        not isinstance(E[0], (tuple, list)) else E)]
    for a, b in E:
        if not a <= b:
            raise UsageError(f"bad interval ({a}, {b})")
    return E


def _walk_chunk(dom, zeta, eps, E, n, rng):
    p = np.full(n, zeta, dtype=complex)
    alive = np.arange(n)
    hits = np.zeros(n, dtype=bool)
    steps = 0
    while alive.size and steps < MAX_STEPS:
        q = p[alive]
        d = dom.distance(q)
        done = d <= eps
        if np.any(done):
            idx = alive[done]
            hits[idx] = cv.param_in_intervals(dom.nearest_param(q[done]), E)
            alive = alive[~done]
            q, d = q[~done], d[~done]
        theta = rng.uniform(0.0, 2 * math.pi, alive.size)
        p[alive] = q + d * np.exp(1j * theta)
        steps += 1
    if alive.size:
        # walks that wandered off are attributed to their nearest boundary point
        hits[alive] = cv.param_in_intervals(dom.nearest_param(p[alive]), E)
    return int(np.sum(hits)), int(alive.size)


def _workers():
    cap = os.environ.get("BILEX_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError("BILEX_THREADS must be an integer") from None
    return n


def harmonic_measure_mc(domain, zeta, E, walks: int = 100_000, seed: int = 0,
                        tol: float = 1e-4) -> HarmonicMeasureEstimate:
    """Walk-on-spheres estimate of the harmonic measure of the parameter set E."""
    dom = as_domain(domain)
    zeta = complex(zeta)
    E = _normalise_intervals(E)
    start = float(np.atleast_1d(dom.distance(np.array([zeta])))[0])
    if start <= 1e-12 * (1.0 + abs(zeta)):
        raise DegenerateStartError("start point lies in the absorption layer")
    if not bool(np.atleast_1d(dom.contains(np.array([zeta])))[0]):
        raise DomainError("start point is not in the domain")
    eps = tol * start
    sizes = [WALK_CHUNK] * (walks // WALK_CHUNK)
    if walks % WALK_CHUNK:
        sizes.append(walks % WALK_CHUNK)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(n, np.random.default_rng(s)) for n, s in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=_workers()) as ex:
        results = list(ex.map(lambda job: _walk_chunk(dom, zeta, eps, E, *job), jobs))
    hits = sum(r[0] for r in results)
    truncated = sum(r[1] for r in results)
    p = hits / walks
    return HarmonicMeasureEstimate(p, math.sqrt(max(p * (1 - p), 1.0 / walks) / walks), walks, tol,
                                   seed, truncated)


def halfplane_harmonic_measure(zeta, E) -> float:
    """Exact value: sum of subtended angles over pi."""
    zeta = complex(zeta)
    if not zeta.imag > 0:
        raise DomainError("zeta must lie in the upper half-plane")

    def ang(t):
        if t == -math.inf:
            return 0.0
        if t == math.inf:
            return math.pi
        return math.atan2(zeta.imag, zeta.real - t)

    return sum(ang(b) - ang(a) for a, b in _normalise_intervals(E)) / math.pi


def sector_phi_inv(m: ExactSector, w):
    u = (np.asarray(w, dtype=complex) - m.vertex) / m.edge
    arg = np.mod(np.angle(u), 2 * math.pi)
    a = m.exponent
    z = np.abs(u) ** (1 / a) * np.exp(1j * arg / a)
    return (z - m.s) / m.r


def sector_harmonic_measure(m: ExactSector, zeta, E) -> float:
    """Exact harmonic measure in a sector domain, pulled back to the half-plane."""
    pre = complex(sector_phi_inv(m, zeta))
    xs = []
    for a, b in _normalise_intervals(E):
        xa = a if math.isinf(a) else float(m.psi_inv(a))
        xb = b if math.isinf(b) else float(m.psi_inv(b))
        xs.append((xa, xb))
    return halfplane_harmonic_measure(pre, xs)


def bn_lower(zeta_abs, rho):
    return 2 / math.pi * math.asin((rho - zeta_abs) / (rho + zeta_abs))


def bn_upper(zeta_abs, rho):
    return 2 / math.pi * math.acos((zeta_abs - rho) / (zeta_abs + rho))


def bn_bounds_check(domain, zeta, rho: float, estimate, branch: str | None = None) -> dict:
    """Compare omega(zeta, dOmega within B(0, rho)) with the applicable projection bound.

    ``estimate`` is a HarmonicMeasureEstimate or an exact float.  ``branch``
    ("lower" for |zeta| < rho, "upper" for |zeta| > rho) defaults to the
    applicable one; asking for the other raises UsageError.
    """
    dom = as_domain(domain)
    zeta = complex(zeta)
    r = abs(zeta)
    if not rho > 0:
        raise UsageError("rho must be positive")
    if r == rho:
        raise UsageError("|zeta| = rho: neither bound applies")
    natural = "lower" if r < rho else "upper"
    if branch is None:
        branch = natural
    if branch != natural:
        raise UsageError(f"the {branch} bound needs |zeta| {'<' if branch == 'lower' else '>'} rho")
    if isinstance(dom, CurveDomain) and bool(np.atleast_1d(dom.contains(np.array([0j])))[0]):
        raise UsageError("the domain must not contain 0")
    if isinstance(estimate, HarmonicMeasureEstimate):
        value, err = estimate.value, estimate.stderr
    else:
        value, err = float(estimate), 0.0
    if branch == "lower":
        bound = bn_lower(r, rho)
        ok = value + 3 * err >= bound
        margin = (value + 3 * err) - bound
    else:
        bound = bn_upper(r, rho)
        ok = value - 3 * err <= bound
        margin = bound - (value - 3 * err)
    return {"name": f"BN[{branch}]", "pass": bool(ok), "margin": float(margin),
            "details": {"bound": bound, "value": value, "stderr": err, "zeta": [zeta.real, zeta.imag],
                        "rho": rho, "domain": dom.name}}


# ----------------------------------------------------------------------
# constants

def constants_check() -> list[dict]:
    s = math.sin(3 * math.pi / 8)
    c = math.cos(math.pi / 24)
    rows = [
        ("(1+sin3pi/8)/(1-sin3pi/8)", (1 + s) / (1 - s), "<=", 30.0),
        ("(1+cos pi/24)/(1-cos pi/24)", (1 + c) / (1 - c), "<", 250.0),
        ("(pi/4-pi/6)/pi", (math.pi / 4 - math.pi / 6) / math.pi, "==", 1 / 12),
        ("sqrt2*(1.1*sqrt5-2)", math.sqrt(2) * (1.1 * math.sqrt(5) - 2), "<", 0.7),
        ("1.1*sqrt5", 1.1 * math.sqrt(5), "==", 2.4597),
    ]
    out = []
    for name, value, rel, ref in rows:
        ok = {"<=": value <= ref, "<": value < ref, "==": abs(value - ref) <= 5e-5 * max(1, abs(ref))}[rel]
        out.append({"name": name, "value": value, "relation": rel, "reference": ref, "pass": bool(ok)})
    return out


# ----------------------------------------------------------------------
# distortion

@dataclass(frozen=True)
class GridSpec:
    x0: float
    x1: float
    dx: float
    y0: float
    y1: float
    dy: float

    def __post_init__(self):
        vals = (self.x0, self.x1, self.dx, self.y0, self.y1, self.dy)
        if not all(map(math.isfinite, vals)):
            raise UsageError("grid ranges must be finite")
        if not (self.dx > 0 and self.dy > 0):
            raise UsageError("grid steps must be positive")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise UsageError("grid ranges must be increasing")

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        try:
            xs, ys = text.split(",")
            vals = [float(v) for v in xs.split(":")] + [float(v) for v in ys.split(":")]
            if len(vals) != 6:
                raise ValueError
        except ValueError:
            raise UsageError(f"grid must look like 'x0:x1:dx,y0:y1:dy', got {text!r}") from None
        return cls(*vals)

    def axes(self):
        nx = int(math.floor((self.x1 - self.x0) / self.dx + 1e-9)) + 1
        ny = int(math.floor((self.y1 - self.y0) / self.dy + 1e-9)) + 1
        return self.x0 + self.dx * np.arange(nx), self.y0 + self.dy * np.arange(ny)

    def points(self):
        xs, ys = self.axes()
        xg, yg = np.meshgrid(xs, ys)
        return (xg + 1j * yg).ravel()


DEFAULT_GRID = GridSpec(-5.0, 5.0, 0.1, -5.0, 5.0, 0.1)


@dataclass
class DistortionReport:
    curve: str
    L: float
    l: float
    seed: int
    grid_points: int
    skipped: int
    pairs: int
    max_norm_DF: float
    max_norm_DF_inv: float
    sup_quotient: float
    inf_quotient: float
    Lp_bound: float
    inv_bound: float
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        d = asdict(self)
        return {"curve": self.curve, "seed": self.seed, "checks": self.checks,
                "constants": {"L": self.L, "l": self.l, "Lp_bound": self.Lp_bound,
                              "lp_bound": self.l / 120.0},
                "summary": {k: d[k] for k in ("grid_points", "skipped", "pairs", "max_norm_DF",
                                              "max_norm_DF_inv", "sup_quotient", "inf_quotient")},
                "pass": self.passed}


def sample_pairs(n, seed, box=5.0):
    """Random pairs: half near-coincident (separation 1e-3..1e-1), half at large."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(-box, box, n) + 1j * rng.uniform(-box, box, n)
    near = np.arange(n) < n // 2
    sep = np.where(near, np.exp(rng.uniform(math.log(1e-3), math.log(1e-1), n)),
                   np.exp(rng.uniform(math.log(1e-1), math.log(2 * box), n)))
    b = a + sep * np.exp(1j * rng.uniform(0, 2 * math.pi, n))
    return a, b


def distortion_audit(F: ExtensionMap, grid: GridSpec | None = None, pairs: int = 100_000,
                     seed: int = 0) -> DistortionReport:
    grid = DEFAULT_GRID if grid is None else grid
    z = grid.points()
    keep = np.abs(z.imag) >= 1e-6
    z = z[keep]
    diag = F_diagnostics(F, z)
    nd, ndi = diag.norm_DF, diag.norm_DF_inv
    Lp, inv_bound = F.Lp_bound, 1.0 / F.lp_bound
    a, b = sample_pairs(pairs, seed)
    pts = F_eval(F, np.concatenate([a, b]))
    q = np.abs(pts[:pairs] - pts[pairs:]) / np.abs(a - b)
    lower = F.lp_bound * diag.norm_dpsi
    upper = F.Lp_bound / diag.norm_dpsi_inv
    lip2_margin = float(min(np.min(diag.dphi_abs / lower), np.min(upper / diag.dphi_abs)))
    checks = [
        {"name": "lip1_DF", "pass": bool(np.max(nd) <= Lp), "margin": float(Lp / np.max(nd)),
         "details": {"max": float(np.max(nd)), "bound": Lp}},
        {"name": "lip1_DF_inv", "pass": bool(np.max(ndi) <= inv_bound), "margin": float(inv_bound / np.max(ndi)),
         "details": {"max": float(np.max(ndi)), "bound": inv_bound}},
        {"name": "lip2", "pass": bool(lip2_margin >= 1), "margin": lip2_margin, "details": {}},
        {"name": "pairs", "pass": bool(np.max(q) <= Lp and np.min(q) >= F.lp_bound),
         "margin": float(min(Lp / np.max(q), np.min(q) / F.lp_bound)),
         "details": {"sup": float(np.max(q)), "inf": float(np.min(q)),
                     "note": "sup is a lower estimate of L', inf an upper estimate of l'"}},
    ]
    return DistortionReport(F.curve.name, F.curve.lip_upper, F.curve.lip_lower, seed, int(z.size),
                            int(np.sum(~keep)), pairs, float(np.max(nd)), float(np.max(ndi)),
                            float(np.max(q)), float(np.min(q)), Lp, inv_bound, checks)


def example2_obstruction_check(F: ExtensionMap) -> dict:
    """F(i) must break one of the (1.1, 0.7) constraints used against the bend map."""
    w = complex(F_eval(F, 1j))
    r = 1.1 * math.sqrt(5)
    c1 = abs(w - 2) <= r
    c2 = abs(w + 2j) <= r
    d = float(F.curve.distance(np.array([w]))[0])
    c3 = d >= 0.7
    return {"name": "example2", "pass": bool(not (c1 and c2 and c3)),
            "margin": float(0.7 - d) if c1 and c2 else float(max(abs(w - 2), abs(w + 2j)) - r),
            "details": {"w": [w.real, w.imag], "abs_w_minus_2": abs(w - 2), "abs_w_plus_2i": abs(w + 2j),
                        "radius": r, "dist_to_curve": d,
                        "threshold": math.sqrt(2) * (r - 2)}}


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
