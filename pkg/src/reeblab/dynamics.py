"""Reeb-flow integration and numerical checks of the integrability identities.

Models live in an ambient coordinate space of dimension 3 (charts) or 4
(hypersurfaces).  A model exposes the contact form, its Reeb field, a Bott
function and an oriented basis of the tangent space; everything else here is
computed from those callables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .blocks import _signs, fd_hessian
from .errors import DomainError, PreconditionError
from .lutz import BottProfile, LutzCurve, delta, find_critical_radii

FD_STEP = 1e-4
DEFAULT_STEP = 1e-3
MAX_DENOMINATOR = 10_000


# finite differences


def jacobian(fn: Callable, p: np.ndarray, h: float = FD_STEP, richardson: bool = True) -> np.ndarray:
    """``J[i, j] = d fn_i / d p_j`` by central differences, optionally Richardson-extrapolated."""
    p = np.asarray(p, dtype=float)

    def central(step):
        cols = []
        for j in range(len(p)):
            e = np.zeros_like(p)
            e[j] = step
            cols.append((np.asarray(fn(p + e)) - np.asarray(fn(p - e))) / (2 * step))
        return np.array(cols).T

    if not richardson:
        return central(h)
    return (4 * central(h / 2) - central(h)) / 3


def gradient(fn: Callable, p: np.ndarray, h: float = FD_STEP, richardson: bool = True) -> np.ndarray:
    return jacobian(lambda q: np.atleast_1d(fn(q)), p, h, richardson)[0]


def exterior_derivative(alpha: Callable, p: np.ndarray, h: float = FD_STEP, richardson: bool = True) -> np.ndarray:
    """Matrix ``W[i, j] = d alpha(e_i, e_j)`` of the exterior derivative of a 1-form."""
    J = jacobian(alpha, p, h, richardson)
    return J.T - J


def directional(fn: Callable, p: np.ndarray, v: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    return (np.asarray(fn(p + h * v)) - np.asarray(fn(p - h * v))) / (2 * h)


# model interface


class FieldModel:
    """Base class for chart and hypersurface models.

    Subclasses set ``name`` and ``dim`` and implement ``alpha``, ``reeb``, ``f``
    and ``sample``.  The defaults fall back to finite differences.
    """

    name = "model"
    dim = 3
    orientation_sign = 1
    chart = "global"

    def alpha(self, p):
        raise NotImplementedError

    def reeb(self, p):
        raise NotImplementedError

    def f(self, p):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def dalpha(self, p) -> np.ndarray:
        return exterior_derivative(self.alpha, p)

    def df(self, p) -> np.ndarray:
        return gradient(self.f, p)

    def tangent_basis(self, p) -> np.ndarray:
        return np.eye(self.dim)

    def in_domain(self, p) -> bool:
        return True

    def y_field(self, p) -> np.ndarray:
        return solve_y(self, p)

    theta_field = None

    def params(self) -> dict:
        return {}

    def critical_components(self, h: float = FD_STEP, margin: float = 1e-6) -> list:
        return []


def _tangent_data(model: FieldModel, p, dalpha: np.ndarray | None = None):
    E = model.tangent_basis(p)
    W = E.T @ (model.dalpha(p) if dalpha is None else dalpha) @ E
    a = E.T @ np.asarray(model.alpha(p), dtype=float)
    return E, W, a


def solve_y(model: FieldModel, p) -> np.ndarray:
    """Section Y of the contact planes with ``i_Y d alpha = -df + df(R) alpha``."""
    E, W, a = _tangent_data(model, p)
    g = E.T @ model.df(p)
    r = np.linalg.lstsq(E, np.asarray(model.reeb(p), dtype=float), rcond=None)[0]
    rhs = -g + float(g @ r) * a
    # W w = rhs, with the antisymmetry convention W[i, j] = d alpha(e_i, e_j)
    A = np.vstack([W.T, a])
    w = np.linalg.lstsq(A, np.append(rhs, 0.0), rcond=None)[0]
    return E @ w


def reeb_from_form(model: FieldModel, p, dalpha: np.ndarray, alpha_val: np.ndarray) -> np.ndarray:
    """Kernel of ``d alpha`` on the tangent space, normalized by ``alpha(R) = 1``."""
    E = model.tangent_basis(p)
    W = E.T @ dalpha @ E
    a = E.T @ alpha_val
    A = np.vstack([W, a])
    w = np.linalg.lstsq(A, np.array([0.0, 0.0, 0.0, 1.0]), rcond=None)[0]
    return E @ w


def volume(model: FieldModel, p, dalpha: np.ndarray | None = None) -> float:
    """``(alpha ^ d alpha)(e1, e2, e3)`` on the oriented tangent basis."""
    _, W, a = _tangent_data(model, p, dalpha)
    return float(a[0] * W[1, 2] + a[1] * W[2, 0] + a[2] * W[0, 1])


@dataclass
class VectorFieldSample:
    position: tuple
    reeb: tuple
    y: tuple | None
    alpha_r: float
    alpha_y: float | None
    f: float
    volume: float

    def to_json(self) -> dict:
        return {"position": list(self.position), "R": list(self.reeb),
                "Y": None if self.y is None else list(self.y), "alpha_R": self.alpha_r,
                "alpha_Y": self.alpha_y, "f": self.f, "volume": self.volume}


def field_sample(model: FieldModel, p) -> VectorFieldSample:
    p = np.asarray(p, dtype=float)
    R = np.asarray(model.reeb(p), dtype=float)
    a = np.asarray(model.alpha(p), dtype=float)
    try:
        Y = np.asarray(model.y_field(p), dtype=float)
        ay = float(a @ Y)
    except (DomainError, ZeroDivisionError):
        Y, ay = None, None
    return VectorFieldSample((model.chart, *map(float, p)), tuple(map(float, R)),
                             None if Y is None else tuple(map(float, Y)),
                             float(a @ R), ay, float(model.f(p)), volume(model, p))


# identities


def _points(model: FieldModel, samples: int, seed: int | None, points=None) -> np.ndarray:
    if points is not None:
        return np.atleast_2d(np.asarray(points, dtype=float))
    return model.sample(np.random.default_rng(seed), samples)


def identity_residuals(model: FieldModel, samples: int = 1000, seed: int | None = 0, points=None,
                       h: float = FD_STEP) -> dict:
    """Max residuals of ``alpha(R) = 1``, ``i_R d alpha = 0`` and the volume sign.

    ``i_R d alpha`` always uses a Richardson finite-difference ``d alpha`` so it
    is an independent check of any analytic Reeb field.
    """
    pts = _points(model, samples, seed, points)
    ar = ir = 0.0
    vmin = np.inf
    tangency = 0.0
    for p in pts:
        R = np.asarray(model.reeb(p), dtype=float)
        a = np.asarray(model.alpha(p), dtype=float)
        W = exterior_derivative(model.alpha, p, h)
        E = model.tangent_basis(p)
        ar = max(ar, abs(float(a @ R) - 1.0))
        ir = max(ir, float(np.max(np.abs(E.T @ W @ R))))
        coeff, res, *_ = np.linalg.lstsq(E, R, rcond=None)
        tangency = max(tangency, float(np.linalg.norm(E @ coeff - R)))
        vmin = min(vmin, model.orientation_sign * volume(model, p, W))
    return {"alpha_R_minus_1": ar, "i_R_dalpha": ir, "min_signed_volume": float(vmin),
            "reeb_tangency": tangency, "samples": len(pts)}


def bott_residual(model: FieldModel, samples: int = 1000, seed: int | None = 0, points=None) -> float:
    """``max |df(R)|`` over random samples."""
    pts = _points(model, samples, seed, points)
    return max(abs(float(np.asarray(model.df(p)) @ np.asarray(model.reeb(p)))) for p in pts)


def commutator(model: FieldModel, p, h: float = FD_STEP) -> np.ndarray:
    """``[R, Y] = DY.R - DR.Y`` by directional central differences."""
    p = np.asarray(p, dtype=float)
    R = np.asarray(model.reeb(p), dtype=float)
    Y = np.asarray(model.y_field(p), dtype=float)
    return directional(model.y_field, p, R, h) - directional(model.reeb, p, Y, h)


def commutator_residual(model: FieldModel, samples: int = 200, seed: int | None = 0, h: float = FD_STEP,
                        points=None, critical_tol: float = 1e-8) -> dict:
    """Max ``||[R, Y]||``; samples where ``df`` vanishes are skipped and counted."""
    pts = _points(model, samples, seed, points)
    worst, skipped = 0.0, 0
    for p in pts:
        if np.linalg.norm(model.df(p)) < critical_tol:
            skipped += 1
            continue
        worst = max(worst, float(np.linalg.norm(commutator(model, p, h))))
    return {"max_norm": worst, "skipped": skipped, "samples": len(pts)}


# integration


@dataclass
class Trajectory:
    chart: str
    times: np.ndarray
    states: np.ndarray
    f_values: np.ndarray
    step: float
    method: str = "rk4"
    boundary: bool = False
    dtype: str = "float64"

    @property
    def drift(self) -> float:
        return float(np.max(np.abs(self.f_values - self.f_values[0])))

    def to_csv_rows(self) -> list[list[float]]:
        return [[float(t), *map(float, x), float(fv)] for t, x, fv in zip(self.times, self.states, self.f_values)]


def integrate_reeb(model: FieldModel, x0, T: float, step: float = DEFAULT_STEP, dtype=np.float64,
                   record_every: int = 1) -> Trajectory:
    """Fixed-step RK4 along the Reeb field.

    The run stops early, with ``boundary`` set, if a step leaves the model's
    domain.  ``dtype=np.longdouble`` runs the same scheme in extended precision.
    """
    x = np.asarray(x0, dtype=dtype)
    if not model.in_domain(x):
        raise DomainError(f"initial point {list(map(float, x))} is outside the {model.name} domain")
    h = dtype(step)
    n = int(round(T / step))
    times, states, fvals = [0.0], [x.copy()], [model.f(x)]
    boundary = False
    F = model.reeb
    for k in range(1, n + 1):
        k1 = F(x)
        k2 = F(x + h / 2 * k1)
        k3 = F(x + h / 2 * k2)
        k4 = F(x + h * k3)
        nxt = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not model.in_domain(nxt):
            boundary = True
            break
        x = nxt
        if k % record_every == 0 or k == n:
            times.append(k * step)
            states.append(x.copy())
            fvals.append(model.f(x))
    return Trajectory(model.chart, np.array(times), np.array(states), np.array(fvals, dtype=dtype), step,
                      boundary=boundary, dtype=np.dtype(dtype).name)


def convergence_ratio(model: FieldModel, x0, T: float, step: float = DEFAULT_STEP, dtype=np.longdouble) -> dict:
    """Drift at ``step`` and ``step/2``; a fourth-order scheme should gain about 16x."""
    coarse = integrate_reeb(model, x0, T, step, dtype, record_every=10)
    fine = integrate_reeb(model, x0, T, step / 2, dtype, record_every=20)
    d1, d2 = coarse.drift, fine.drift
    ratio = float("inf") if d2 == 0 else d1 / d2
    return {"drift": d1, "drift_half": d2, "ratio": ratio, "exact": d1 == 0 and d2 == 0,
            "boundary": coarse.boundary or fine.boundary}


# level sets


@dataclass(frozen=True)
class RegularTorus:
    radius: float
    direction: tuple  # Reeb direction (R1, R2) on the torus
    closed: bool
    period_class: tuple | None  # primitive (p, q) when the orbits close
    note: str = ""

    def to_json(self) -> dict:
        return {"type": "RegularTorus", "radius": self.radius, "direction": list(self.direction),
                "closed": self.closed, "period_class": None if self.period_class is None else list(self.period_class),
                "note": self.note}


@dataclass(frozen=True)
class CriticalTorus:
    radius: float
    second_derivative: float

    def to_json(self) -> dict:
        return {"type": "CriticalTorus", "radius": self.radius, "f_rr": self.second_derivative}


def rational_direction(v1: float, v2: float, max_denominator: int = MAX_DENOMINATOR,
                       tol: float = 1e-12) -> tuple[int, int] | None:
    """Primitive integer vector parallel to (v1, v2), or None at this resolution."""
    if abs(v1) >= abs(v2):
        q = Fraction(v2 / v1).limit_denominator(max_denominator)
        if abs(float(q) - v2 / v1) > tol:
            return None
        a, b = q.denominator, q.numerator
        s = 1 if v1 > 0 else -1
    else:
        q = Fraction(v1 / v2).limit_denominator(max_denominator)
        if abs(float(q) - v1 / v2) > tol:
            return None
        a, b = q.numerator, q.denominator
        s = 1 if v2 > 0 else -1
    return s * a, s * b


def classify_level(curve: LutzCurve, profile: BottProfile, r: float, tol: float = 1e-10,
                   max_denominator: int = MAX_DENOMINATOR) -> RegularTorus | CriticalTorus:
    """Type of the torus ``{r}`` together with its Reeb rotation data."""
    lo, hi = curve.interval
    if not lo < r < hi:
        raise DomainError(f"radius {r} is not interior to [{lo}, {hi}]")
    if abs(r) < 1e-14:
        raise DomainError("the chart centre is an orbit, not a torus; use the census")
    fr = profile.f(r, 1)
    if abs(fr) <= tol:
        return CriticalTorus(float(r), float(profile.f(r, 2)))
    d = delta(curve, r)
    R1, R2 = curve.h2(r, 1) / d, -curve.h1(r, 1) / d
    pq = rational_direction(R1, R2, max_denominator)
    if pq is None:
        return RegularTorus(float(r), (float(R1), float(R2)), False, None, "no closure found at resolution")
    return RegularTorus(float(r), (float(R1), float(R2)), True, pq, "foliated by closed orbits")


def critical_levels(profile: BottProfile) -> list[CriticalTorus]:
    return [CriticalTorus(float(r), float(profile.f(r, 2))) for r, _ in find_critical_radii(profile.f)]


# Hessians and rescaling


@dataclass(frozen=True)
class HessianReport:
    eigenvalues: tuple
    signature: tuple
    kind: str
    matrix: tuple

    def to_json(self) -> dict:
        return {"eigenvalues": list(self.eigenvalues), "signature": list(self.signature), "kind": self.kind,
                "matrix": [list(r) for r in self.matrix]}


def hessian_signature(transverse: Callable[[float, float], float], h: float = FD_STEP,
                      margin: float = 1e-6) -> HessianReport:
    """Finite-difference Hessian of a transverse slice ``g(u, v)`` at ``(0, 0)``."""
    H = fd_hessian(transverse, 0.0, 0.0, h)
    ev = np.linalg.eigvalsh(H)
    sig = _signs(ev, margin)
    kind = "elliptic" if len(set(sig)) == 1 else "hyperbolic"
    return HessianReport(tuple(float(v) for v in ev), sig, kind, tuple(tuple(map(float, r)) for r in H))


def rescale_check(model: FieldModel, samples: int = 200, seed: int | None = 0, points=None,
                  u_tol: float = 1e-8) -> float:
    """Residual ``max |df(R')|`` for the Reeb field of ``alpha' = (f/u) alpha``.

    ``u = alpha(theta)`` for the model's symmetry field ``theta``; the new
    Reeb field is found numerically from a finite-difference ``d alpha'``.
    """
    if model.theta_field is None:
        raise PreconditionError(f"{model.name} exposes no symmetry field")
    pts = _points(model, samples, seed, points)
    worst = 0.0
    for p in pts:
        u = float(np.asarray(model.alpha(p)) @ np.asarray(model.theta_field(p)))
        if abs(u) < u_tol:
            raise PreconditionError(f"alpha(theta) vanishes at {list(map(float, p))}")

        def scaled(q):
            th = np.asarray(model.theta_field(q))
            a = np.asarray(model.alpha(q), dtype=float)
            return model.f(q) / float(a @ th) * a

        W = exterior_derivative(scaled, p)
        Rp = reeb_from_form(model, p, W, scaled(p))
        worst = max(worst, abs(float(model.df(p) @ Rp)))
    return worst


# Lutz charts as models


class LutzChartModel(FieldModel):
    """``h1(r) dx1 + h2(r) dx2`` on ``[a, b] x T^2`` with Bott function ``f(r)``.

    Coordinates are ``(r, x1, x2)``; the tangent basis is ordered
    ``(x1, r, x2)`` so that the volume equals the signed determinant.
    """

    dim = 3

    def __init__(self, curve: LutzCurve, profile: BottProfile, name: str = "lutz_chart"):
        self.curve = curve
        self.profile = profile
        self.name = name
        self.chart = name
        self.orientation_sign = curve.orientation_sign

    def alpha(self, p):
        r = p[0]
        return np.array([0.0, self.curve.h1(r), self.curve.h2(r)])

    def dalpha(self, p):
        r = p[0]
        W = np.zeros((3, 3))
        W[0, 1], W[0, 2] = self.curve.h1(r, 1), self.curve.h2(r, 1)
        return W - W.T

    def reeb(self, p):
        r = p[0]
        d = delta(self.curve, r)
        return np.array([0.0, self.curve.h2(r, 1) / d, -self.curve.h1(r, 1) / d])

    def y_field(self, p):
        r = p[0]
        d = delta(self.curve, r)
        fr = self.profile.f(r, 1)
        return np.array([0.0, -self.curve.h2(r) * fr / d, self.curve.h1(r) * fr / d])

    def f(self, p):
        return self.profile.f(p[0])

    def df(self, p):
        return np.array([self.profile.f(p[0], 1), 0.0, 0.0])

    def tangent_basis(self, p):
        return np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])

    def in_domain(self, p):
        lo, hi = self.curve.interval
        return lo <= float(p[0]) <= hi

    def sample(self, rng, n):
        lo, hi = self.curve.interval
        pad = 1e-3 * (hi - lo)
        r = rng.uniform(lo + pad, hi - pad, n)
        return np.column_stack([r, rng.uniform(0, 1, n), rng.uniform(0, 1, n)])
