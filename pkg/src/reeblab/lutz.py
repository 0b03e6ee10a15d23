"""Curve calculus for Lutz contact forms ``h1(r) dx1 + h2(r) dx2`` on I x T^2.

A curve ``r -> (h1(r), h2(r))`` defines a contact form exactly when
``delta = h1*h2' - h2*h1'`` has a fixed sign. In polar form
``(h1, h2) = rho*(cos theta, sin theta)`` that quantity is ``rho**2 * theta'``,
so interpolation is done on (log rho, theta) where the sign condition
reduces to strict monotonicity of theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateFormError,
    DomainError,
    IncompatibleGermsError,
    InvalidSiteError,
    NotEllipticError,
    SewingError,
)
from .piecewise import PiecewiseCubic, merge_breaks

DEFAULT_MARGIN = 1e-6
COLLAR_WIDTH = 0.25
TWO_PI = 2.0 * math.pi
_DOMAIN_SLACK = 1e-12
_MAX_KNOTS = 1 << 14


@dataclass(frozen=True, eq=False)
class LutzCurve:
    """Plane curve ``(h1, h2)`` over an interval, with the required sign of delta."""

    h1: PiecewiseCubic
    h2: PiecewiseCubic
    orientation_sign: int
    smoothness_class: int = 1
    log: tuple = field(default=())

    def __post_init__(self):
        if self.orientation_sign not in (-1, 1):
            raise ValueError("orientation_sign must be +1 or -1")
        if self.smoothness_class < 1:
            raise ValueError("smoothness_class must be >= 1")
        if not np.array_equal(self.h1.breaks, self.h2.breaks):
            h1, h2 = merge_breaks(self.h1, self.h2)
            object.__setattr__(self, "h1", h1)
            object.__setattr__(self, "h2", h2)

    @property
    def interval(self) -> tuple[float, float]:
        return self.h1.interval

    @property
    def breaks(self) -> np.ndarray:
        return self.h1.breaks

    def jet(self, r):
        """Return ``(h1, h2, h1', h2')`` at r (scalar or array)."""
        return self.h1(r), self.h2(r), self.h1(r, 1), self.h2(r, 1)

    def second(self, r):
        return self.h1(r, 2), self.h2(r, 2)

    def contains(self, r) -> bool:
        a, b = self.interval
        r = np.asarray(r)
        return bool(np.all((r >= a - _DOMAIN_SLACK) & (r <= b + _DOMAIN_SLACK)))

    def restrict(self, a: float, b: float) -> "LutzCurve":
        return LutzCurve(self.h1.restrict(a, b), self.h2.restrict(a, b), self.orientation_sign,
                         self.smoothness_class, self.log)

    def with_log(self, *entries: dict) -> "LutzCurve":
        return LutzCurve(self.h1, self.h2, self.orientation_sign, self.smoothness_class, self.log + entries)

    def sample_radii(self, samples: int) -> np.ndarray:
        a, b = self.interval
        return np.linspace(a, b, samples)

    # constructors

    @classmethod
    def polynomial(cls, c1: Sequence[float], c2: Sequence[float], a: float, b: float,
                   orientation_sign: int, origin: float | None = None) -> "LutzCurve":
        """Single cubic piece; coefficients are in powers of ``r - origin``."""
        origin = a if origin is None else origin
        return cls(PiecewiseCubic.polynomial(c1, a, b, origin), PiecewiseCubic.polynomial(c2, a, b, origin),
                   orientation_sign)

    @classmethod
    def from_functions(cls, h1: Callable, h2: Callable, dh1: Callable, dh2: Callable, a: float, b: float,
                       orientation_sign: int, knots: int = 256) -> "LutzCurve":
        x = np.linspace(a, b, knots + 1)
        return cls(PiecewiseCubic.fit(h1, dh1, x), PiecewiseCubic.fit(h2, dh2, x), orientation_sign)

    # serialization

    def to_json(self) -> dict:
        pieces = []
        for p1, p2 in zip(self.h1.to_pieces(), self.h2.to_pieces()):
            pieces.append({"breaks": p1["breaks"], "coeffs_h1": p1["coeffs"], "coeffs_h2": p2["coeffs"]})
        return {
            "interval": list(self.interval),
            "pieces": pieces,
            "orientation_sign": self.orientation_sign,
            "smoothness_class": self.smoothness_class,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LutzCurve":
        pieces = doc["pieces"]
        curve = cls(
            PiecewiseCubic.from_pieces(pieces, "coeffs_h1"),
            PiecewiseCubic.from_pieces(pieces, "coeffs_h2"),
            int(doc["orientation_sign"]),
            int(doc.get("smoothness_class", 1)),
        )
        if "interval" in doc and not np.allclose(doc["interval"], curve.interval):
            raise ValueError("interval does not match piece breaks")
        return curve


@dataclass(frozen=True, eq=False)
class CollarGerm:
    """Prescribed jet of a curve on an end collar.

    ``side='left'`` means the collar is the left end of the curve to be built,
    so its outer endpoint is ``interval[0]`` and sewing continues from
    ``interval[1]``.
    """

    side: str
    curve: LutzCurve

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")

    @property
    def orientation_sign(self) -> int:
        return self.curve.orientation_sign

    @property
    def interval(self) -> tuple[float, float]:
        return self.curve.interval

    @property
    def endpoint(self) -> float:
        a, b = self.interval
        return a if self.side == "left" else b

    @property
    def inner(self) -> float:
        a, b = self.interval
        return b if self.side == "left" else a

    @property
    def values(self) -> tuple[float, float, float, float]:
        return tuple(float(v) for v in self.curve.jet(self.endpoint))

    def validate(self, samples: int = 257, margin: float = 0.0) -> None:
        r = self.curve.sample_radii(samples)
        d = delta(self.curve, r) * self.orientation_sign
        if np.min(d) <= margin:
            raise DegenerateFormError(f"germ delta loses its sign at r = {r[np.argmin(d)]:.6g}")

    @classmethod
    def from_jet(cls, side: str, jet: Sequence[float], orientation_sign: int,
                 endpoint: float | None = None, width: float = COLLAR_WIDTH) -> "CollarGerm":
        """Germ from Taylor data at the outer endpoint.

        ``jet`` is ``(h1, h2, h1', h2')`` optionally followed by
        ``(h1'', h2'', h1''', h2''')``.
        """
        jet = list(jet) + [0.0] * (8 - len(jet))
        if endpoint is None:
            endpoint = -1.0 if side == "left" else 1.0
        c1 = [jet[0], jet[2], jet[4] / 2.0, jet[6] / 6.0]
        c2 = [jet[1], jet[3], jet[5] / 2.0, jet[7] / 6.0]
        a, b = (endpoint, endpoint + width) if side == "left" else (endpoint - width, endpoint)
        return cls(side, LutzCurve.polynomial(c1, c2, a, b, orientation_sign, origin=endpoint))


@dataclass(frozen=True, eq=False)
class BottProfile:
    """Bott integral ``f(r)`` on a Lutz chart with its critical radii.

    ``critical_radii`` holds ``(r, s)`` pairs where ``s`` is the sign of ``f''(r)``.
    """

    f: PiecewiseCubic
    critical_radii: tuple = ()

    @classmethod
    def from_piecewise(cls, f: PiecewiseCubic) -> "BottProfile":
        return cls(f, tuple(find_critical_radii(f)))

    @classmethod
    def from_functions(cls, f: Callable, df: Callable, a: float, b: float, knots: int = 256) -> "BottProfile":
        return cls.from_piecewise(PiecewiseCubic.fit(f, df, np.linspace(a, b, knots + 1)))

    def validate(self, tol: float = 1e-9) -> None:
        found = find_critical_radii(self.f)
        if len(found) != len(self.critical_radii):
            raise ValueError(f"declared {len(self.critical_radii)} critical radii, found {len(found)}")
        for (r, s), (r2, s2) in zip(sorted(self.critical_radii), found):
            if abs(r - r2) > tol or s != s2:
                raise ValueError(f"critical radius {r} does not match the profile")

    def to_json(self) -> dict:
        return {"pieces": self.f.to_pieces(), "critical_radii": [[float(r), int(s)] for r, s in self.critical_radii]}

    @classmethod
    def from_json(cls, doc: dict) -> "BottProfile":
        return cls(PiecewiseCubic.from_pieces(doc["pieces"]), tuple((r, s) for r, s in doc["critical_radii"]))


def find_critical_radii(f: PiecewiseCubic, tol: float = 1e-13) -> list[tuple[float, int]]:
    """Zeros of f' (exact per-piece quadratic roots) with the sign of f''."""
    roots: list[float] = []
    for i in range(f.n_pieces):
        c = f.coeffs[i]
        lo, hi = f.breaks[i], f.breaks[i + 1]
        a, b, cc = 3.0 * c[3], 2.0 * c[2], c[1]
        width = hi - lo
        if abs(a) < 1e-300:
            ts = [] if abs(b) < 1e-300 else [-cc / b]
        else:
            disc = b * b - 4 * a * cc
            if disc < 0:
                ts = []
            else:
                sq = math.sqrt(disc)
                q = -0.5 * (b + math.copysign(sq, b))
                ts = [q / a] + ([cc / q] if q != 0 else [])
        for t in ts:
            if -tol * max(1, width) <= t <= width * (1 + tol):
                roots.append(lo + min(max(t, 0.0), width))
    roots.sort()
    out: list[tuple[float, int]] = []
    for r in roots:
        if out and abs(r - out[-1][0]) < 1e-10:
            continue
        s = f(r, 2)
        out.append((r, 0 if s == 0 else int(math.copysign(1, s))))
    return out


# pointwise operations


def _check_domain(curve: LutzCurve, r) -> None:
    if not curve.contains(r):
        a, b = curve.interval
        raise DomainError(f"radius outside [{a}, {b}]")


def delta(curve: LutzCurve, r):
    """``h1*h2' - h2*h1'`` at r."""
    _check_domain(curve, r)
    h1, h2, d1, d2 = curve.jet(r)
    return h1 * d2 - h2 * d1


def reeb_direction(curve: LutzCurve, r):
    """Reeb field coefficients on (d/dx1, d/dx2)."""
    _check_domain(curve, r)
    h1, h2, d1, d2 = curve.jet(r)
    dlt = h1 * d2 - h2 * d1
    if np.any(dlt == 0):
        raise DegenerateFormError("delta vanishes; the form is not contact here")
    return d2 / dlt, -d1 / dlt


def y_field(curve: LutzCurve, profile: BottProfile, r):
    """Tangential field Y with alpha(Y)=0 and i_Y d(alpha) = -df."""
    _check_domain(curve, r)
    h1, h2, d1, d2 = curve.jet(r)
    dlt = h1 * d2 - h2 * d1
    if np.any(dlt == 0):
        raise DegenerateFormError("delta vanishes; the form is not contact here")
    fp = profile.f(r, 1)
    return -h2 * fp / dlt, h1 * fp / dlt


@dataclass(frozen=True)
class ContactReport:
    samples: int
    margin: float
    orientation_sign: int
    min_abs_delta: float
    min_signed_delta: float
    worst_radius: float
    crossing: float | None
    passed: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def check_contact(curve: LutzCurve, samples: int = 2048, margin: float = DEFAULT_MARGIN) -> ContactReport:
    """Sample delta and compare ``sign*delta`` against the margin."""
    if samples < 2 or margin <= 0:
        raise ValueError("need samples >= 2 and margin > 0")
    r = curve.sample_radii(samples)
    d = delta(curve, r)
    signed = d * curve.orientation_sign
    k = int(np.argmin(signed))
    crossing = None
    bad = np.nonzero(signed <= 0)[0]
    if len(bad):
        j = int(bad[0])
        crossing = float(r[j]) if j == 0 else _bisect(lambda x: float(delta(curve, x)) * curve.orientation_sign,
                                                      float(r[j - 1]), float(r[j]))
    return ContactReport(
        samples=samples,
        margin=margin,
        orientation_sign=curve.orientation_sign,
        min_abs_delta=float(np.min(np.abs(d))),
        min_signed_delta=float(signed[k]),
        worst_radius=float(r[k]),
        crossing=crossing,
        passed=bool(signed[k] >= margin),
    )


def _bisect(fn: Callable[[float], float], lo: float, hi: float, iters: int = 80) -> float:
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def moser_eliminate(h0: Callable, h1, h2, r: float) -> tuple[float, float]:
    """Solve ``h1*c1 + h2*c2 = 0`` and ``h1'*c1 + h2'*c2 = h0(r)``.

    ``h1`` and ``h2`` may be PiecewiseCubic objects (exact derivatives) or
    plain callables (central differences).
    """
    v1, s1 = _value_slope(h1, r)
    v2, s2 = _value_slope(h2, r)
    det = v1 * s2 - v2 * s1
    if det == 0 or not math.isfinite(det):
        raise DegenerateFormError("singular system: delta = 0")
    rhs = float(h0(r))
    return -v2 * rhs / det, v1 * rhs / det


def _value_slope(fn, r: float, step: float = 1e-6) -> tuple[float, float]:
    if isinstance(fn, PiecewiseCubic):
        return fn(r), fn(r, 1)
    return float(fn(r)), (float(fn(r + step)) - float(fn(r - step))) / (2 * step)


# polar helpers


def _polar(h1, h2, d1, d2):
    rho = np.hypot(h1, h2)
    theta = np.arctan2(h2, h1)
    drho = (h1 * d1 + h2 * d2) / rho
    dtheta = (h1 * d2 - h2 * d1) / rho**2
    return rho, theta, drho, dtheta


def monotone_bridge(a: float, b: float, va: float, vb: float, sa: float, sb: float):
    """Increasing C^1 function on [a, b] with prescribed end values and slopes.

    The derivative is the positive blend ``sa*(1-u)^m + sb*u^m + 6c*u*(1-u)``
    with ``m`` chosen so that ``c > 0``; it is positive inside the interval, and a
    zero end slope gives a non-degenerate critical point there. Returns
    ``(F, F')`` as vectorized callables.
    """
    if not (sa >= 0 and sb >= 0 and vb > va and b > a):
        raise SewingError("monotone bridge needs non-negative slopes and an increasing rise")
    L, G = b - a, vb - va
    m = max(2, math.ceil(2.0 * L * (sa + sb) / G) - 1)
    c = G / L - (sa + sb) / (m + 1)

    def F(r):
        u = (np.asarray(r, dtype=float) - a) / L
        return va + L * (sa * (1 - (1 - u) ** (m + 1)) / (m + 1) + sb * u ** (m + 1) / (m + 1)
                         + c * (3 * u**2 - 2 * u**3))

    def dF(r):
        u = (np.asarray(r, dtype=float) - a) / L
        return sa * (1 - u) ** m + sb * u**m + 6 * c * u * (1 - u)

    return F, dF


def _cubic_hermite_callables(a: float, b: float, ya: float, yb: float, sa: float, sb: float):
    p = PiecewiseCubic.from_hermite([a, b], [ya, yb], [sa, sb])
    return (lambda r: p(r)), (lambda r: p(r, 1))


def _fit_until_signed(fx: Callable, a: float, b: float, sign: int, margin: float,
                      n0: int = 32, start=None, end=None) -> LutzCurve:
    """Hermite-fit a parametrized curve on [a, b] with knot doubling until sign*delta >= margin.

    ``fx(r)`` returns ``(h1, h2, h1', h2')`` arrays; ``start``/``end`` override the
    end jets so that joins are exact.
    """
    n = n0
    while n <= _MAX_KNOTS:
        x = np.linspace(a, b, n + 1)
        h1, h2, d1, d2 = (np.array(v, dtype=float) for v in fx(x))
        for pos, jet in ((0, start), (-1, end)):
            if jet is not None:
                h1[pos], h2[pos], d1[pos], d2[pos] = jet
        curve = LutzCurve(PiecewiseCubic.from_hermite(x, h1, d1), PiecewiseCubic.from_hermite(x, h2, d2), sign)
        dense = np.linspace(a, b, 8 * n + 1)
        if np.min(delta(curve, dense) * sign) >= margin:
            return curve
        n *= 2
    raise SewingError("could not resolve the interpolated curve within the knot budget")


def _join(parts: list[LutzCurve], sign: int) -> LutzCurve:
    h1 = PiecewiseCubic.concat([p.h1 for p in parts])
    h2 = PiecewiseCubic.concat([p.h2 for p in parts])
    return LutzCurve(h1, h2, sign)


def _parse_policy(policy) -> int:
    if policy is None or policy == "minimal":
        return 0
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        k = int(policy)
    elif isinstance(policy, str) and policy.startswith("extra_turns(") and policy.endswith(")"):
        k = int(policy[len("extra_turns("):-1])
    else:
        raise ValueError(f"unknown winding policy {policy!r}")
    if k < 0:
        raise ValueError("extra_turns must be >= 0")
    return k


def minimal_sweep(theta_a: float, theta_b: float, sign: int) -> float:
    """Smallest nonzero angle change from theta_a to theta_b in the direction of ``sign``."""
    d = (sign * (theta_b - theta_a)) % TWO_PI
    if d < 1e-12:
        d = TWO_PI
    return sign * d


def bridge(left: LutzCurve, right: LutzCurve, sweep: float | None = None, extra_turns: int = 0,
           margin: float = DEFAULT_MARGIN) -> tuple[LutzCurve, float]:
    """Connect two curve pieces through the gap between them.

    Returns the joined curve and the polar-angle sweep across the gap.
    """
    sign = left.orientation_sign
    a, b = left.interval[1], right.interval[0]
    if not b > a:
        raise SewingError("germs overlap; nothing to sew")
    ja = tuple(float(v) for v in left.jet(a))
    jb = tuple(float(v) for v in right.jet(b))
    rho_a, th_a, drho_a, dth_a = _polar(*ja)
    rho_b, th_b, drho_b, dth_b = _polar(*jb)
    if sign * dth_a <= 0 or sign * dth_b <= 0:
        raise SewingError("germ delta has the wrong sign at the sewing end")
    if sweep is None:
        sweep = minimal_sweep(th_a, th_b, sign) + sign * TWO_PI * extra_turns
    if sign * sweep <= 0:
        raise SewingError("requested sweep is not in the delta-compatible direction")
    # theta is built increasing in the sign-normalized angle sign*theta
    g, dg = monotone_bridge(a, b, sign * th_a, sign * th_a + sign * sweep, sign * dth_a, sign * dth_b)
    lr, dlr = _cubic_hermite_callables(a, b, math.log(rho_a), math.log(rho_b), drho_a / rho_a, drho_b / rho_b)

    def fx(r):
        th = sign * g(r)
        dth = sign * dg(r)
        rho = np.exp(lr(r))
        drho = rho * dlr(r)
        c, s = np.cos(th), np.sin(th)
        return rho * c, rho * s, drho * c - rho * dth * s, drho * s + rho * dth * c

    middle = _fit_until_signed(fx, a, b, sign, margin, start=ja, end=jb)
    return _join([left, middle, right], sign), float(sweep)


def sew(left: CollarGerm, right: CollarGerm, winding_policy="minimal",
        margin: float = DEFAULT_MARGIN) -> LutzCurve:
    """Extend two collar germs to one contact curve across the gap between them.

    ``winding_policy`` is ``"minimal"``, ``"extra_turns(k)"`` or an integer k.
    """
    if left.side != "left" or right.side != "right":
        raise ValueError("expected a left germ and a right germ")
    if left.orientation_sign != right.orientation_sign:
        raise IncompatibleGermsError("germs carry opposite orientation signs")
    k = _parse_policy(winding_policy)
    curve, sweep = bridge(left.curve, right.curve, extra_turns=k, margin=margin)
    return curve.with_log({"op": "sew", "policy": "minimal" if k == 0 else f"extra_turns({k})",
                           "gap": [left.inner, right.inner], "sweep": sweep})


def winding(curve: LutzCurve, samples: int = 2048) -> tuple[float, int]:
    """Polar-angle sweep of ``(h1, h2)`` by atan2 continuation, and completed turns."""
    r = np.union1d(curve.sample_radii(samples), np.linspace(*curve.interval, 16 * curve.h1.n_pieces + 1))
    h1, h2 = curve.h1(r), curve.h2(r)
    ang = np.unwrap(np.arctan2(h2, h1))
    sweep = float(ang[-1] - ang[0])
    return sweep, int(math.floor(abs(sweep) / TWO_PI + 1e-9))


TWIST_SWEEP = {"simple": math.pi, "full": TWO_PI}


def lutz_twist(curve: LutzCurve, r0: float, kind: str = "full", width: float | None = None,
               profile: BottProfile | None = None, margin: float = DEFAULT_MARGIN) -> LutzCurve:
    """Insert extra winding on the collar ``[r0 - width, r0 + width]``.

    The added sweep is ``sign*pi`` for a simple twist and ``sign*2*pi`` for a
    full one, where ``sign`` is the curve's orientation sign. A half turn
    cannot end on the original jet, so a simple twist negates the curve to the
    right of the collar: the plane field there is unchanged, but the form and
    its Reeb field change sign.
    """
    if kind not in TWIST_SWEEP:
        raise ValueError("kind must be 'simple' or 'full'")
    a, b = curve.interval
    if width is None:
        width = 0.1 * min(r0 - a, b - r0)
    lo, hi = r0 - width, r0 + width
    if not (a < lo and hi < b and width > 0):
        raise InvalidSiteError("twist collar must lie inside the curve interval")
    if profile is not None:
        for rc, _ in profile.critical_radii:
            if lo <= rc <= hi:
                raise InvalidSiteError(f"twist collar overlaps the critical radius {rc:.6g}")
    sign = curve.orientation_sign
    old_sweep, _ = winding(curve.restrict(lo, hi), samples=256)
    extra = sign * TWIST_SWEEP[kind]
    right = curve.restrict(hi, b)
    if kind == "simple":
        right = LutzCurve(right.h1.scaled(-1.0), right.h2.scaled(-1.0), sign)
    out, _ = bridge(curve.restrict(a, lo), right, sweep=old_sweep + extra, margin=margin)
    return LutzCurve(out.h1, out.h2, sign, curve.smoothness_class,
                     curve.log + ({"op": "lutz_twist", "r0": r0, "kind": kind, "width": width,
                                   "extra_sweep": extra, "convention": "simple=pi, full=2pi",
                                   "negated_from": hi if kind == "simple" else None},))


# elliptic normalization


def _smoothstep(x, lo: float, hi: float):
    u = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return u * u * (3 - 2 * u), np.where((u > 0) & (u < 1), 6 * u * (1 - u) / (hi - lo), 0.0)


def _path_min_delta(jet_old: Callable, jet_new: Callable, r: np.ndarray, sign: int, steps: int = 5) -> float:
    """Min of ``sign*delta`` along the straight-line path between two curves."""
    o = [np.asarray(v) for v in jet_old(r)]
    n = [np.asarray(v) for v in jet_new(r)]
    worst = math.inf
    for t in np.linspace(0.0, 1.0, steps):
        h1, h2, d1, d2 = ((1 - t) * x + t * y for x, y in zip(o, n))
        worst = min(worst, float(np.min(sign * (h1 * d2 - h2 * d1))))
    return worst


def normalize_elliptic_germ(curve: LutzCurve, h0: PiecewiseCubic | None = None,
                            samples: int = 1000) -> tuple[LutzCurve, list[dict]]:
    """Deform an elliptic germ on ``[0, delta]`` to ``(1, sign*r**2)`` near 0.

    The outer half of the interval is left untouched. Each step is logged
    with the minimum of ``sign*delta`` along its linear deformation path.
    """
    a, b = curve.interval
    if abs(a) > _DOMAIN_SLACK:
        raise DomainError("elliptic germ must start at r = 0")
    sign = curve.orientation_sign
    h1_0, h2_0 = curve.h1(0.0), curve.h2(0.0)
    if h1_0 <= 0:
        raise NotEllipticError(f"h1(0) = {h1_0:g} is not positive")
    if abs(h2_0) > 1e-12:
        raise NotEllipticError(f"h2(0) = {h2_0:g} must vanish at an elliptic orbit")
    probe = np.linspace(0.0, b, 201)
    if np.allclose(curve.h1(probe), 1.0, atol=1e-12, rtol=0) and \
            np.allclose(curve.h2(probe), sign * probe**2, atol=1e-12, rtol=0):
        return curve, [{"step": 0, "name": "identity"}]

    nonpos = probe[curve.h1(probe) <= 0]
    d1 = min(0.5 * b, 0.9 * (float(nonpos[0]) if len(nonpos) else b))
    d2 = 0.5 * d1
    r = np.linspace(b / samples, b, samples)
    log: list[dict] = []

    # step 1: the dr-component is damped to zero on [0, d1]
    psi, _ = _smoothstep(r, 0.5 * d1, d1)
    entry = {"step": 1, "name": "damp h0 by cutoff", "cutoff_zero_on": [0.0, 0.5 * d1], "cutoff_one_from": d1,
             "path_min_signed_delta": _path_min_delta(curve.jet, curve.jet, r, sign)}
    if h0 is not None:
        entry["max_damped_h0_near_orbit"] = float(np.max(np.abs(psi * h0(r))[r <= 0.5 * d1], initial=0.0))
    log.append(entry)

    # step 2: divide by chi > 0 with chi = h1 on [0, d2] and chi = 1 near d1
    def chi(x):
        w, dw = _smoothstep(x, d2, d1)
        h1, dh1 = curve.h1(x), curve.h1(x, 1)
        return (1 - w) * h1 + w, (1 - w) * dh1 + dw * (1 - h1)

    def jet2(x):
        h1, h2, dh1, dh2 = curve.jet(x)
        c, dc = chi(x)
        return h1 / c, h2 / c, (dh1 * c - h1 * dc) / c**2, (dh2 * c - h2 * dc) / c**2

    if np.min(chi(r)[0]) <= 0:
        raise NotEllipticError("h1 is not positive on the normalization collar")
    log.append({"step": 2, "name": "divide by chi", "chi_equals_h1_on": [0.0, d2], "chi_one_from": d1,
                "path_min_signed_delta": _path_min_delta(curve.jet, jet2, r, sign)})

    # step 3: on [0, d2] the curve is (1, k); interpolate k to sign*r^2 near 0
    def k(x):
        return jet2(x)[1], jet2(x)[3]

    db = 0.75 * d2
    kb, dkb = (float(v) for v in k(db))
    if sign * kb <= 0 or sign * dkb <= 0:
        raise NotEllipticError("the germ is not contact near its core")
    da = min(0.25 * d2, math.sqrt(sign * kb / 2.0))
    F, dF = monotone_bridge(da, db, da**2, sign * kb, 2 * da, sign * dkb)

    def h2star(x):
        x = np.asarray(x, dtype=float)
        inner, mid = x <= da, (x > da) & (x < db)
        kv, dkv = k(x)
        val = np.where(inner, sign * x**2, np.where(mid, sign * F(x), kv))
        der = np.where(inner, sign * 2 * x, np.where(mid, sign * dF(x), dkv))
        return val, der

    def jet3(x):
        h1, h2, dh1, dh2 = jet2(x)
        v, dv = h2star(x)
        near = np.asarray(x) <= d2
        return np.where(near, 1.0, h1), np.where(near, v, h2), np.where(near, 0.0, dh1), np.where(near, dv, dh2)

    log.append({"step": 3, "name": "interpolate h2 to r^2", "model_on": [0.0, da], "original_from": db,
                "path_min_signed_delta": _path_min_delta(jet2, jet3, r, sign)})

    core = LutzCurve.polynomial([1.0], [0.0, 0.0, float(sign)], 0.0, da, sign)
    mid = _fit_until_signed(jet3, da, d1, sign, 1e-14, start=tuple(float(v) for v in jet3(da)),
                            end=tuple(float(v) for v in curve.jet(d1)))
    outer = curve.restrict(d1, b)
    out = _join([core, mid, outer], sign)
    log.append({"step": 4, "name": "result", "model_radius": da, "unchanged_from": d1})
    return out.with_log({"op": "normalize_elliptic_germ", "model_radius": da, "unchanged_from": d1}), log


# orbit creation


@dataclass(frozen=True, eq=False)
class OrbitPairFunction:
    """Bott function ``f*(r, x1) = f(r) - A*(1 - q)^3`` on the ball ``q < 1``.

    ``q = ((r - r0)^2 + x1^2) / eps^2`` with x1 taken mod 2*pi.
    """

    profile: BottProfile
    r0: float
    eps: float
    amplitude: float
    new_critical_points: tuple = ()

    def _parts(self, r, x1):
        r = np.asarray(r, dtype=float)
        x = (np.asarray(x1, dtype=float) + math.pi) % TWO_PI - math.pi
        ur, ux = (r - self.r0) / self.eps, x / self.eps
        q = ur**2 + ux**2
        w = np.where(q < 1, 1 - q, 0.0)
        return r, ur, ux, w

    def __call__(self, r, x1):
        r, ur, ux, w = self._parts(r, x1)
        return self.profile.f(r) - self.amplitude * w**3

    def gradient(self, r, x1):
        r, ur, ux, w = self._parts(r, x1)
        k = 6 * self.amplitude / self.eps * w**2
        return self.profile.f(r, 1) + k * ur, k * ux

    def hessian(self, r, x1) -> np.ndarray:
        r, ur, ux, w = self._parts(r, x1)
        k = 6 * self.amplitude / self.eps**2 * w
        frr = self.profile.f(r, 2) + k * (w - 4 * ur**2)
        fxx = k * (w - 4 * ux**2)
        frx = -4 * k * ur * ux
        return np.array([[frr, frx], [frx, fxx]])

    def lift(self, r, x1):
        return self.profile.f(np.asarray(r, dtype=float))


def create_orbit_pair(curve: LutzCurve, profile: BottProfile, r0: float, eps: float,
                      margin: float = DEFAULT_MARGIN) -> tuple[LutzCurve, OrbitPairFunction]:
    """Add one elliptic and one hyperbolic orbit near the regular level ``r0``.

    On ``[r0 - eps, r0 + eps]`` the curve becomes ``(-sign*(r - r0), 1)`` so the
    Reeb field is ``d/dx2`` there; the new Bott function depends on ``(r, x1)``
    and equals ``f(r)`` outside the eps-ball around ``(r0, 0)``.
    """
    a, b = curve.interval
    sign = curve.orientation_sign
    slope = float(profile.f(r0, 1))
    if abs(slope) < 1e-12:
        raise InvalidSiteError(f"r0 = {r0:g} is a critical radius")
    for rc, _ in profile.critical_radii:
        if abs(rc - r0) <= eps:
            raise InvalidSiteError("eps reaches a critical radius")
    if not (a < r0 - 2 * eps and r0 + 2 * eps < b and eps > 0):
        raise InvalidSiteError("the modification collar must lie inside the chart")
    segment = LutzCurve.polynomial([0.0, -float(sign)], [1.0], r0 - eps, r0 + eps, sign, origin=r0)
    left, _ = bridge(curve.restrict(a, r0 - 2 * eps), segment, margin=margin)
    joined, _ = bridge(left, curve.restrict(r0 + 2 * eps, b), margin=margin)
    joined = joined.with_log({"op": "create_orbit_pair", "r0": r0, "eps": eps})

    amp = abs(slope) * eps
    fstar = OrbitPairFunction(profile, r0, eps, amp)
    crit = _orbit_pair_critical_points(fstar)
    if len(crit) != 2 or sorted(c[2] for c in crit) != ["elliptic", "hyperbolic"]:
        raise InvalidSiteError("eps is too large for the local variation of f'")
    return joined, OrbitPairFunction(profile, r0, eps, amp, tuple(crit))


def _orbit_pair_critical_points(fs: OrbitPairFunction, n: int = 4001) -> list[tuple[float, float, str]]:
    # on the ball the x1-gradient vanishes only on x1 = 0
    def g(r):
        return fs.gradient(r, 0.0)[0]

    rs = np.linspace(fs.r0 - fs.eps, fs.r0 + fs.eps, n)
    vals = g(rs)
    out = []
    for i in range(n - 1):
        if vals[i] == 0 or vals[i] * vals[i + 1] < 0:
            root = _bisect(lambda x: float(g(x)), float(rs[i]), float(rs[i + 1]))
            ev = np.linalg.eigvalsh(fs.hessian(root, 0.0))
            kind = "elliptic" if np.all(ev > 0) or np.all(ev < 0) else "hyperbolic"
            out.append((root, 0.0, kind))
    return out


# reference curves


def alpha_a_curve(a: float = 0.05, b: float = 1.0) -> LutzCurve:
    """``(1, r^2)``: the solid-torus form away from its core (delta = 2r > 0)."""
    return LutzCurve.polynomial([1.0], [0.0, 0.0, 1.0], a, b, +1, origin=0.0)


def beta_curve(n: int = 1, knots: int = 512) -> LutzCurve:
    """``(cos 2 pi n z, -sin 2 pi n z)`` over one period, delta = -2 pi n."""
    w = TWO_PI * n
    return LutzCurve.from_functions(lambda z: np.cos(w * z), lambda z: -np.sin(w * z),
                                    lambda z: -w * np.sin(w * z), lambda z: -w * np.cos(w * z),
                                    0.0, 1.0, -1, knots=knots * n)
