"""Explicit models with closed-form contact forms, Reeb fields and Bott functions.

Each model is rebuilt from a small parameter dictionary; nothing numeric is
stored.  ``build(name, **params)`` and ``from_json`` go through the registry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .blocks import CriticalComponent, _signs, fd_hessian
from .dynamics import FieldModel, hessian_signature
from .errors import ConfigError, ModelInvalidError
from .lutz import LutzCurve

TWO_PI = 2.0 * math.pi


def oriented_complement(n: np.ndarray) -> np.ndarray:
    """Orthonormal basis ``E`` of ``n^perp`` in R^4 with ``det[n, E] > 0``."""
    n = np.asarray(n, dtype=float)
    nh = n / np.linalg.norm(n)
    Q, _ = np.linalg.qr(np.column_stack([nh, np.eye(4)]))
    E = Q[:, 1:4].copy()
    if np.linalg.det(np.column_stack([nh, E])) < 0:
        E[:, 2] *= -1
    return E


# S^3


I_OP = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
J_OP = np.array([[0, 0, -1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
K_OP = I_OP @ J_OP


def hopf_map(p) -> np.ndarray:
    """``(z1, z2) -> (2 Re z1 conj(z2), 2 Im z1 conj(z2), |z1|^2 - |z2|^2)`` in real coordinates."""
    x1, y1, x2, y2 = p
    return np.array([2 * (x1 * x2 + y1 * y2), 2 * (y1 * x2 - x1 * y2), x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2])


def hopf_jacobian(p) -> np.ndarray:
    x1, y1, x2, y2 = p
    return 2 * np.array([[x2, y2, x1, y1], [-y2, x2, y1, -x1], [x1, y1, -x2, -y2]])


@dataclass(frozen=True)
class S3Frames:
    quaternionic: np.ndarray  # rows alpha_I, alpha_J, alpha_K as covectors on R^4
    invariant: np.ndarray  # rows alpha_1, alpha_2, alpha_3
    sum_residual: float
    gram_residual: float
    frame_det: float
    wedge_residual: float


def s3_frames(p, psi: Callable | None = None) -> S3Frames:
    """Both coframes at a point of the unit sphere and their pointwise checks.

    ``psi`` maps a point to the three coefficients ``psi_i``; the default
    ``psi_i = x_i`` gives the frame whose weighted sum is the connection form.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-9:
        raise ModelInvalidError("point is not on the unit sphere")
    # alpha_X(v) = -<p, X v>
    quat = np.array([-(X.T @ p) for X in (I_OP, J_OP, K_OP)])
    alpha = quat[0]
    x = hopf_map(p)
    dx = hopf_jacobian(p)
    ps = x if psi is None else np.asarray(psi(p), dtype=float)
    inv = ps[:, None] * alpha[None, :] + dx
    E = oriented_complement(p)
    sum_res = float(np.max(np.abs((x @ inv - alpha) @ E)))
    restricted = quat @ E
    gram = float(np.max(np.abs(restricted @ restricted.T - np.eye(3))))
    M = inv @ E
    det = float(np.linalg.det(M))
    # alpha ^ i_psi(dx1 dx2 dx3) on (e1, e2, e3)
    a = alpha @ E
    D = dx @ E

    def beta(i, j):
        return float(np.linalg.det(np.column_stack([ps, D[:, i], D[:, j]])))

    wedge = a[0] * beta(1, 2) - a[1] * beta(0, 2) + a[2] * beta(0, 1)
    return S3Frames(quat, inv, sum_res, gram, det, abs(det - wedge))


class S3Model(FieldModel):
    """Unit sphere in C^2 with the connection form and ``f = c + x3 o hopf``."""

    name = "s3"
    dim = 4
    chart = "s3"

    def __init__(self, offset: float = 2.0):
        self.offset = float(offset)

    def params(self):
        return {"offset": self.offset}

    def alpha(self, p):
        x1, y1, x2, y2 = p
        return np.array([-y1, x1, -y2, x2])

    def dalpha(self, p):
        return 2.0 * np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)

    def reeb(self, p):
        x1, y1, x2, y2 = p
        return np.array([-y1, x1, -y2, x2])

    theta_field = reeb

    def f(self, p):
        x1, y1, x2, y2 = p
        return self.offset + x1 * x1 + y1 * y1 - x2 * x2 - y2 * y2

    def df(self, p):
        x1, y1, x2, y2 = p
        return 2.0 * np.array([x1, y1, -x2, -y2])

    def tangent_basis(self, p):
        return oriented_complement(p)

    def in_domain(self, p):
        return abs(float(np.linalg.norm(np.asarray(p, dtype=float))) - 1.0) < 1e-6

    def sample(self, rng, n):
        g = rng.standard_normal((n, 4))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def critical_components(self, h: float = 1e-4, margin: float = 1e-6) -> list[CriticalComponent]:
        out = []
        # z2 = 0 circle (max) and z1 = 0 circle (min); transverse chart is the other factor
        for label, sign in (("z2=0", 1.0), ("z1=0", -1.0)):
            def g(u, v, sign=sign):
                s = math.sqrt(1.0 - u * u - v * v)
                p = np.array([s, 0.0, u, v]) if sign > 0 else np.array([u, v, s, 0.0])
                return self.f(p)

            rep = hessian_signature(g, h, margin)
            kind = "EllipticOrbit" if rep.kind == "elliptic" else "HyperbolicOrbit"
            out.append(CriticalComponent(kind, {"orbit": label}, rep.signature, rep.eigenvalues))
        return out


# T^3


@dataclass(frozen=True)
class CircleProfile:
    """``offset + cos(2 pi m z + phase)`` on the circle ``R/Z``."""

    m: int = 1
    phase: float = 0.0
    offset: float = 0.0

    def __call__(self, z, nu: int = 0):
        w = TWO_PI * self.m
        arg = w * z + self.phase
        if nu == 0:
            return self.offset + np.cos(arg)
        # derivatives of cos cycle through -sin, -cos, sin, cos
        return w**nu * (np.cos(arg), -np.sin(arg), -np.cos(arg), np.sin(arg))[nu % 4]

    def critical_points(self) -> list[tuple[float, int]]:
        if self.m < 1:
            raise ModelInvalidError("constant profile is not Morse")
        out = []
        for k in range(2 * self.m):
            z = ((k * math.pi - self.phase) / (TWO_PI * self.m)) % 1.0
            out.append((z, int(np.sign(self(z, 2)))))
        return sorted(out)


class T3Model(FieldModel):
    """``cos(2 pi n z) dx - sin(2 pi n z) dy`` on ``T^3 = R^3/Z^3`` with ``f = f(z)``."""

    dim = 3

    def __init__(self, n: int = 1, profile: CircleProfile | None = None):
        if int(n) < 1:
            raise ModelInvalidError("n must be a positive integer")
        self.n = int(n)
        self.profile = profile or CircleProfile()
        self.profile.critical_points()
        self.name = f"t3(n={self.n})"
        self.chart = "t3"

    def params(self):
        pr = self.profile
        return {"n": self.n, "m": pr.m, "phase": pr.phase, "offset": pr.offset}

    def alpha(self, p):
        w = TWO_PI * self.n * p[2]
        return np.array([np.cos(w), -np.sin(w), 0.0 * w])

    def dalpha(self, p):
        w = TWO_PI * self.n * p[2]
        k = TWO_PI * self.n
        W = np.zeros((3, 3))
        W[2, 0] = -k * np.sin(w)
        W[2, 1] = -k * np.cos(w)
        return W - W.T

    def reeb(self, p):
        w = TWO_PI * self.n * p[2]
        return np.array([np.cos(w), -np.sin(w), 0.0 * w], dtype=np.result_type(p, float))

    theta_field = reeb

    def f(self, p):
        return self.profile(p[2])

    def df(self, p):
        return np.array([0.0, 0.0, self.profile(p[2], 1)])

    def sample(self, rng, n):
        return rng.uniform(0.0, 1.0, (n, 3))

    def as_lutz_curve(self) -> LutzCurve:
        from .lutz import beta_curve

        return beta_curve(self.n)

    def critical_components(self, h: float = 1e-4, margin: float = 1e-6) -> list[CriticalComponent]:
        out = []
        for z, s in self.profile.critical_points():
            f2 = (self.profile(z + h) - 2 * self.profile(z) + self.profile(z - h)) / h**2
            sig = _signs(np.array([f2]), margin)
            out.append(CriticalComponent("CriticalTorus", {"z": float(z)}, sig, (float(f2),)))
        return out


# the connected-sum handle


def _bisect_vec(fn: Callable, lo: np.ndarray, hi: np.ndarray, tol: float) -> np.ndarray:
    flo = fn(lo)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        left = np.sign(fm) == np.sign(flo)
        lo = np.where(left, mid, lo)
        flo = np.where(left, fm, flo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


class HandleModel(FieldModel):
    """Hypersurface ``{h(x^2 + y^2 + z^2, t) = 0}`` in R^4 with ``alpha = i_Y omega``.

    ``omega = dx^dy + dz^dt`` and ``Y = x/2 d_x + y/2 d_y + 2z d_z - t d_t``.
    The default profile is ``h = rho - rho0 - t^2/(1 - t^2)``.
    """

    dim = 4
    chart = "handle"

    def __init__(self, rho0: float = 1.0, h: Callable | None = None, t_max: float = 0.8,
                 t_domain: float = 0.95, root_tol: float = 1e-13, fd_step: float = 1e-5):
        self.rho0 = float(rho0)
        self.t_max = float(t_max)
        self.t_domain = float(t_domain)
        self.root_tol = float(root_tol)
        self.custom = h is not None
        self.name = "handle"
        if h is None:
            r0 = self.rho0
            self._h = lambda rho, t: rho - r0 - t * t / (1 - t * t)
            self._h_rho = lambda rho, t: 1.0 + 0.0 * rho
            self._h_t = lambda rho, t: -2 * t / (1 - t * t) ** 2
        else:
            e = fd_step
            self._h = h
            self._h_rho = lambda rho, t: (h(rho + e, t) - h(rho - e, t)) / (2 * e)
            self._h_t = lambda rho, t: (h(rho, t + e) - h(rho, t - e)) / (2 * e)
        self.validate()

    def params(self):
        if self.custom:
            raise ConfigError("custom handle profiles cannot be serialized")
        return {"rho0": self.rho0, "t_max": self.t_max, "root_tol": self.root_tol}

    # profile and surface

    def h(self, rho, t):
        return self._h(rho, t)

    def radius_squared(self, t, tol: float | None = None) -> np.ndarray:
        """``rho(t)`` solving ``h(rho, t) = 0`` by bisection."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo = np.zeros_like(t)
        hi = np.full_like(t, max(1.0, 2 * self.rho0))
        for _ in range(60):
            bad = np.sign(self._h(hi, t)) == np.sign(self._h(lo, t))
            if not bad.any():
                break
            hi = np.where(bad, 2 * hi, hi)
        else:
            raise ModelInvalidError("no sign change of h along the rho axis")
        return _bisect_vec(lambda r: self._h(r, t), lo, hi, self.root_tol if tol is None else tol)

    def point(self, u: np.ndarray, t: float, tol: float | None = None) -> np.ndarray:
        """Surface point on the ray through the unit vector ``u`` in xyz-space at height ``t``."""
        s = math.sqrt(float(self.radius_squared(t, tol)[0]))
        return np.array([s * u[0], s * u[1], s * u[2], t])

    def H(self, p):
        x, y, z, t = p
        return self._h(x * x + y * y + z * z, t)

    def grad_H(self, p):
        x, y, z, t = p
        rho = x * x + y * y + z * z
        hr = self._h_rho(rho, t)
        return np.array([2 * x * hr, 2 * y * hr, 2 * z * hr, self._h_t(rho, t)])

    def liouville(self, p):
        x, y, z, t = p
        return np.array([0.5 * x, 0.5 * y, 2 * z, -t])

    def dH_Y(self, p) -> float:
        x, y, z, t = p
        rho = x * x + y * y + z * z
        return self._h_rho(rho, t) * (x * x + y * y + 4 * z * z) - t * self._h_t(rho, t)

    def hamiltonian_field(self, p):
        x, y, z, t = p
        rho = x * x + y * y + z * z
        hr = self._h_rho(rho, t)
        return np.array([-2 * y * hr, 2 * x * hr, -self._h_t(rho, t), 2 * z * hr])

    def validate(self, n: int = 401) -> None:
        t = np.linspace(-self.t_max, self.t_max, n)
        rho = self.radius_squared(t)
        trans = rho * self._h_rho(rho, t) - t * self._h_t(rho, t)
        if np.min(trans) <= 0:
            i = int(np.argmin(trans))
            raise ModelInvalidError(f"rho h_rho - t h_t = {trans[i]:.3g} <= 0 at t = {t[i]:.3g}")
        e = 1e-4
        r0 = float(self.radius_squared(0.0)[0])
        htt = (self._h(r0, e) - 2 * self._h(r0, 0.0) + self._h(r0, -e)) / e**2
        if htt >= 0:
            raise ModelInvalidError(f"h_tt = {htt:.3g} at the rho-axis crossing; need a convex neck")

    # FieldModel interface

    def alpha(self, p):
        x, y, z, t = p
        return np.array([-0.5 * y, 0.5 * x, t, 2 * z])

    def dalpha(self, p):
        W = np.zeros((4, 4))
        W[0, 1] = W[2, 3] = 1.0
        return W - W.T

    def reeb(self, p):
        x, y, z, t = p
        rho = x * x + y * y + z * z
        hr = self._h_rho(rho, t)
        ht = self._h_t(rho, t)
        d = hr * (x * x + y * y + 4 * z * z) - t * ht
        return np.array([-2 * y * hr, 2 * x * hr, -ht, 2 * z * hr]) / d

    def f(self, p):
        return p[0] * p[0] + p[1] * p[1]

    def df(self, p):
        return np.array([2 * p[0], 2 * p[1], 0.0, 0.0])

    def tangent_basis(self, p):
        return oriented_complement(self.grad_H(p))

    def in_domain(self, p):
        t = float(p[3])
        return abs(t) < self.t_domain and bool(np.all(np.isfinite(np.asarray(p, dtype=float))))

    def sample(self, rng, n):
        t = rng.uniform(-self.t_max, self.t_max, n)
        u = rng.standard_normal((n, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        s = np.sqrt(self.radius_squared(t))
        return np.column_stack([s[:, None] * u, t])

    def min_dH_Y(self, samples: int = 10_000, seed: int | None = 0) -> float:
        pts = self.sample(np.random.default_rng(seed), samples)
        return float(min(self.dH_Y(p) for p in pts))

    # critical set

    def belt_transverse(self, t_star: float = 0.0, tol: float | None = None) -> Callable:
        """``f(z, t) = rho(t) - z^2`` in the chart ``(phi, z, t)`` near the belt orbit."""
        def g(z, t):
            return float(self.radius_squared(t_star + t, tol)[0]) - z * z

        return g

    def arc_transverse(self, sign: int, t0: float = 0.0, tol: float | None = None) -> Callable:
        """``f`` in the chart ``(x, y)`` transverse to an arc, with ``z`` found on the surface."""
        rho = float(self.radius_squared(t0, tol)[0])

        def g(u, v):
            z = sign * math.sqrt(rho - u * u - v * v)
            p = np.array([u, v, z, t0])
            return self.f(p)

        return g

    def census(self, tol: float | None = None, n: int = 400, h: float = 1e-4,
               margin: float = 1e-6) -> list[CriticalComponent]:
        """Arcs ``{x = y = 0}`` and belt orbits ``{z = 0, rho'(t) = 0}`` with their Hessians."""
        tol = self.root_tol if tol is None else tol
        t = np.linspace(-self.t_max, self.t_max, n)
        rho = self.radius_squared(t, tol)
        out = []
        if np.all(rho > 0):
            for sign, label in ((1, "arc+"), (-1, "arc-")):
                rep = hessian_signature(self.arc_transverse(sign, 0.0, tol), h, margin)
                kind = "EllipticOrbit" if rep.kind == "elliptic" else "HyperbolicOrbit"
                out.append(CriticalComponent(kind, {"component": label, "t_range": [float(t[0]), float(t[-1])]},
                                             rep.signature, rep.eigenvalues))
        e = 1e-4
        drho = (self.radius_squared(t + e, tol) - self.radius_squared(t - e, tol)) / (2 * e)
        for i in np.nonzero(np.sign(drho[:-1]) != np.sign(drho[1:]))[0]:
            lo, hi = float(t[i]), float(t[i + 1])
            dr = lambda s: float(self.radius_squared(s + e, tol)[0] - self.radius_squared(s - e, tol)[0])
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if np.sign(dr(mid)) == np.sign(dr(lo)):
                    lo = mid
                else:
                    hi = mid
            ts = round(0.5 * (lo + hi), 9) + 0.0
            if any(c.location.get("t") == ts for c in out):
                continue
            rep = hessian_signature(self.belt_transverse(ts, tol), h, margin)
            kind = "EllipticOrbit" if rep.kind == "elliptic" else "HyperbolicOrbit"
            out.append(CriticalComponent(kind, {"component": "belt", "t": ts,
                                                "radius": round(math.sqrt(float(self.radius_squared(ts, tol)[0])), 9)},
                                         rep.signature, rep.eigenvalues))
        return out

    def critical_components(self, h: float = 1e-4, margin: float = 1e-6):
        return self.census(h=h, margin=margin)


# Klein bottle neighbourhood


def smootherstep(x):
    """C^2 step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * x * (x * (6 * x - 15) + 10)


def d_smootherstep(x):
    inside = (x > 0) & (x < 1)
    x = np.clip(x, 0.0, 1.0)
    return np.where(inside, 30 * x * x * (x - 1) ** 2, 0.0)


def default_bump(eps: float) -> tuple[Callable, Callable]:
    """Even bump equal to ``eps^2`` on ``[-eps, eps]`` and zero outside ``[-2 eps, 2 eps]``."""
    def chi(r):
        return eps * eps * (1.0 - smootherstep((np.abs(r) - eps) / eps))

    def dchi(r):
        return -eps * np.sign(r) * d_smootherstep((np.abs(r) - eps) / eps)

    return chi, dchi


class KleinModel(FieldModel):
    """``dt + r d theta`` on ``[0, 1] x [-1, 1] x S^1`` with ``(1, r, theta) ~ (0, -r, -theta)``.

    ``f = r^2`` has the Klein bottle ``{r = 0}`` as critical set; the perturbed
    ``f = r^2 + chi(r) cos(theta)`` keeps only the fibres through ``theta = 0, pi``.
    """

    dim = 3
    chart = "klein"

    def __init__(self, eps: float = 0.1, perturbed: bool = True, chi: Callable | None = None,
                 dchi: Callable | None = None):
        if not 0 < eps < 0.25:
            raise ModelInvalidError("need 0 < eps < 1/4")
        self.eps = float(eps)
        self.perturbed = bool(perturbed)
        self.custom = chi is not None
        if chi is None:
            chi, dchi = default_bump(self.eps)
        elif dchi is None:
            dchi = lambda r: (chi(r + 1e-6) - chi(r - 1e-6)) / 2e-6
        self.chi, self.dchi = chi, dchi
        self.name = f"klein(eps={self.eps:g}, perturbed={self.perturbed})"
        self.validate()

    def params(self):
        if self.custom:
            raise ConfigError("custom bump functions cannot be serialized")
        return {"eps": self.eps, "perturbed": self.perturbed}

    def validate(self, n: int = 4001) -> None:
        r = np.linspace(0.0, 1.0, n)
        odd = np.max(np.abs(self.chi(r) - self.chi(-r)))
        if odd > 1e-14:
            raise ModelInvalidError(f"bump is not even (max |chi(r) - chi(-r)| = {odd:.3g}); "
                                    "f would not be defined on the quotient")
        shoulder = r[(r > self.eps) & (r < 2 * self.eps)]
        if shoulder.size and np.max(np.abs(self.dchi(shoulder)) - 2 * shoulder) >= 0:
            raise ModelInvalidError("|chi'| >= |2r| on the shoulders creates spurious critical points")

    def f(self, p):
        r, th = p[1], p[2]
        if not self.perturbed:
            return r * r
        return r * r + self.chi(r) * np.cos(th)

    def df(self, p):
        r, th = p[1], p[2]
        if not self.perturbed:
            return np.array([0.0, 2 * r, 0.0])
        return np.array([0.0, 2 * r + self.dchi(r) * np.cos(th), -self.chi(r) * np.sin(th)])

    def alpha(self, p):
        return np.array([1.0 + 0.0 * p[0], 0.0 * p[0], p[1]])

    def dalpha(self, p):
        W = np.zeros((3, 3))
        W[1, 2], W[2, 1] = 1.0, -1.0
        return W

    def reeb(self, p):
        return np.array([1.0 + 0.0 * p[0], 0.0 * p[0], 0.0 * p[0]])

    def sample(self, rng, n):
        return np.column_stack([rng.uniform(0, 1, n), rng.uniform(-0.95, 0.95, n), rng.uniform(0, TWO_PI, n)])

    def identify(self, p):
        """Representative at ``t - 1`` of a point at ``t``: ``(t, r, theta) -> (t - 1, -r, -theta)``."""
        return np.array([p[0] - 1.0, -p[1], -p[2]])

    def quotient_residual(self, n: int = 64) -> float:
        """Max disagreement of f, alpha and R between identified boundary points."""
        D = np.diag([1.0, -1.0, -1.0])
        worst = 0.0
        for r in np.linspace(-0.9, 0.9, n):
            for th in np.linspace(0, TWO_PI, n, endpoint=False):
                p = np.array([1.0, r, th])
                q = self.identify(p)
                worst = max(worst, abs(self.f(p) - self.f(q)),
                            float(np.max(np.abs(self.alpha(q) @ D - self.alpha(p)))),
                            float(np.max(np.abs(D @ self.reeb(p) - self.reeb(q)))))
        return worst

    def rank_drop(self, n: int = 256, h: float = 1e-4) -> dict:
        """Gradient and Hessian rank of f on the grid ``r = 0``."""
        grads, ranks = [], []
        for th in np.linspace(0, TWO_PI, n, endpoint=False):
            p = np.array([0.5, 0.0, th])
            grads.append(float(np.linalg.norm(self.df(p))))
            H = fd_hessian(lambda u, v: self.f(np.array([0.5, u, th + v])), 0.0, 0.0, h)
            ranks.append(int(np.sum(np.abs(np.linalg.eigvalsh(H)) > 1e-6)))
        return {"max_grad": max(grads), "all_critical": max(grads) < 1e-12, "hessian_ranks": sorted(set(ranks)),
                "points": n}

    def critical_fibers(self, n: int = 24, h: float = 1e-4, margin: float = 1e-6) -> list[CriticalComponent]:
        """Isolated critical fibres found by Newton from grid seeds, deduplicated."""
        found: list[tuple[float, float]] = []
        for r0 in np.linspace(-0.3, 0.3, n // 2 + 1):
            for th0 in np.linspace(0, TWO_PI, n, endpoint=False):
                x = np.array([r0, th0])
                for _ in range(40):
                    g = self.df(np.array([0.0, x[0], x[1]]))[1:]
                    H = fd_hessian(lambda u, v: self.f(np.array([0.0, u, v])), x[0], x[1], h)
                    if abs(np.linalg.det(H)) < 1e-14:
                        break
                    x = x - np.linalg.solve(H, g)
                    if abs(x[0]) > 1:
                        break
                g = self.df(np.array([0.0, x[0], x[1]]))[1:]
                if abs(x[0]) <= 1 and np.linalg.norm(g) < 1e-10:
                    th = float(x[1] % TWO_PI)
                    if TWO_PI - th < 1e-9:
                        th = 0.0
                    if not any(abs(x[0] - a) < 1e-7 and abs(th - b) < 1e-7 for a, b in found):
                        found.append((float(x[0]), th))
        out = []
        for r, th in sorted(found, key=lambda c: c[1]):
            rep = hessian_signature(lambda u, v: self.f(np.array([0.0, r + u, th + v])), h, margin)
            kind = "EllipticOrbit" if rep.kind == "elliptic" else "HyperbolicOrbit"
            loc = {"r": round(r, 12) + 0.0, "theta": round(th, 12), "hessian_matrix": [list(m) for m in rep.matrix]}
            out.append(CriticalComponent(kind, loc, rep.signature, rep.eigenvalues))
        return out

    def critical_components(self, h: float = 1e-4, margin: float = 1e-6):
        if not self.perturbed:
            rd = self.rank_drop(h=h)
            if rd["all_critical"]:
                return [CriticalComponent("KleinBottle", {"r": 0.0}, ("+",), (2.0,))]
        return self.critical_fibers(h=h, margin=margin)


# open book of Sigma_g x S^1


class OpenBookModel(FieldModel):
    """Collar chart ``(t, r, phi)`` of the mapping torus with ``alpha = dt + rho(r) d phi``.

    The two boundary collars carry ``psi_pm(r, phi) = (r, phi pm chi(r))`` and
    the return time ``tau = tau0 pm int_{-1}^r rho chi'``.  ``annulus=True``
    gives the page with trivial monodromy (``chi = 0``).
    """

    dim = 3
    chart = "openbook-collar"

    def __init__(self, g: int = 1, tau0: float = 10.0, rho0: float = 1.0, rho1: float = 0.5,
                 annulus: bool = False, twist: tuple[float, float] = (-0.9, -0.1)):
        if int(g) < 0:
            raise ModelInvalidError("genus must be non-negative")
        if rho1 <= 0 or rho0 <= 0:
            raise ModelInvalidError("rho must be positive with rho' > 0")
        self.g = int(g)
        self.tau0 = float(tau0)
        self.rho0, self.rho1 = float(rho0), float(rho1)
        self.annulus = bool(annulus)
        self.twist = (float(twist[0]), float(twist[1]))
        self.name = f"openbook(g={self.g})" if not annulus else "openbook(annulus)"
        a, b = self.twist
        self._step = np.array([0, 0, 0, 0, 35, -84, 70, -20.0])
        # rho(r) * chi'(r) dr on [a, b] as a polynomial in x = (r - a)/(b - a)
        w = b - a
        rho_x = np.array([self.rho0 + self.rho1 * (a + 1), self.rho1 * w])
        self._integrand = -TWO_PI * P.polymul(rho_x, P.polyder(self._step))
        self._antider = P.polyint(self._integrand)
        for side in (1, -1):
            lo = float(np.min(self.tau(np.linspace(-1, 0, 2001), side)))
            if lo <= 0:
                raise ModelInvalidError(f"tau reaches {lo:.3g} <= 0 on the {'+' if side > 0 else '-'} collar; "
                                        "increase tau0")

    def params(self):
        return {"g": self.g, "tau0": self.tau0, "rho0": self.rho0, "rho1": self.rho1,
                "annulus": self.annulus, "twist": list(self.twist)}

    def rho(self, r, nu: int = 0):
        if nu == 0:
            return self.rho0 + self.rho1 * (r + 1)
        return self.rho1 + 0.0 * r if nu == 1 else 0.0 * r

    def chi(self, r, nu: int = 0):
        r = np.asarray(r, dtype=float)
        if self.annulus:
            return 0.0 * r
        a, b = self.twist
        w = b - a
        x = (r - a) / w
        c = P.polyder(self._step, nu) if nu else self._step
        v = P.polyval(x, c) / w**nu
        inside = (r > a) & (r < b)
        if nu == 0:
            return TWO_PI * (1 - np.where(r <= a, 0.0, np.where(r >= b, 1.0, v)))
        return -TWO_PI * np.where(inside, v, 0.0)

    def tau(self, r, side: int = 1):
        """Return time on the collar of the ``side`` boundary, in closed form."""
        r = np.asarray(r, dtype=float)
        if self.annulus:
            return self.tau0 + 0.0 * r
        a, b = self.twist
        x = np.clip((r - a) / (b - a), 0.0, 1.0)
        return self.tau0 + side * P.polyval(x, self._antider)

    def psi(self, p, side: int = 1):
        """Monodromy on collar coordinates ``(r, phi)``."""
        r, phi = p
        return np.array([r, phi + side * self.chi(r)])

    def exactness_residual(self, n: int = 200, step: float | None = 1e-3, side: int = 1,
                           richardson: bool = True) -> float:
        """Max of ``|psi^* lambda - lambda - d tau|`` over an ``n x n`` collar grid.

        ``psi^* lambda`` uses the finite-difference Jacobian of ``psi`` and
        ``d tau`` the same stencil on the closed-form ``tau``.  ``step=None``
        ties the stencil to the grid spacing.
        """
        rs = np.linspace(-1.0, 0.0, n + 2)[1:-1]
        phis = np.linspace(0.0, TWO_PI, n, endpoint=False)
        hr = 1.0 / (n + 1) if step is None else step
        R, PH = np.meshgrid(rs, phis, indexing="ij")

        def d_central(fn, x, e):
            return (fn(x + e) - fn(x - e)) / (2 * e)

        def d(fn, x):
            if not richardson:
                return d_central(fn, x, hr)
            return (4 * d_central(fn, x, hr / 2) - d_central(fn, x, hr)) / 3

        # Jacobian of psi: d(phi')/dr; d(phi')/dphi = 1; r' = r
        dphi_dr = d(lambda r: side * self.chi(r), R)
        lam_at_psi = self.rho(R)  # lambda = rho(r) dphi, r is preserved
        pull_r = lam_at_psi * dphi_dr
        pull_phi = lam_at_psi * 1.0
        dtau_r = d(lambda r: self.tau(r, side), R)
        dtau_phi = np.zeros_like(PH)
        res_r = pull_r - 0.0 - dtau_r
        res_phi = pull_phi - self.rho(R) - dtau_phi
        worst = float(max(np.max(np.abs(res_r)), np.max(np.abs(res_phi))))
        return worst

    def page_morse(self) -> list[int]:
        """Morse indices on the page: one minimum and ``2g + 1`` saddles (``1`` saddle for the annulus)."""
        return [0, 1] if self.annulus else [0] + [1] * (2 * self.g + 1)

    def bindings(self) -> list[int]:
        """Signed fibre classes of the two binding orbits."""
        return [1, -1]

    def critical_components(self, h: float = 1e-4, margin: float = 1e-6) -> list[CriticalComponent]:
        """Page critical points times the circle, plus the two binding orbits (from the page data, not the chart)."""
        out = []
        for k, idx in enumerate(self.page_morse()):
            sig = {0: ("+", "+"), 1: ("+", "-")}[idx]
            kind = "EllipticOrbit" if idx == 0 else "HyperbolicOrbit"
            out.append(CriticalComponent(kind, {"chart": "page", "point": k, "morse_index": idx}, sig))
        for k, b in enumerate(self.bindings()):
            out.append(CriticalComponent("EllipticOrbit", {"chart": "binding", "binding": k, "fibre_class": b},
                                         ("+", "+")))
        return out

    def binding_germ(self, width: float = 0.5) -> LutzCurve:
        return LutzCurve.polynomial([2.0], [0.0, 0.0, 1.0], 1e-3, width, +1, origin=0.0)

    def manifold(self) -> str:
        return "S1xS2" if self.annulus or self.g == 0 else f"Sigma_{self.g}xS1"

    # collar chart as a FieldModel

    def alpha(self, p):
        return np.array([1.0 + 0.0 * p[0], 0.0 * p[0], self.rho(p[1])])

    def dalpha(self, p):
        W = np.zeros((3, 3))
        W[1, 2] = self.rho(p[1], 1)
        return W - W.T

    def reeb(self, p):
        return np.array([1.0 + 0.0 * p[0], 0.0 * p[0], 0.0 * p[0]])

    def f(self, p):
        return (p[1] + 1.0) ** 2

    def df(self, p):
        return np.array([0.0, 2 * (p[1] + 1.0), 0.0])

    def sample(self, rng, n):
        return np.column_stack([rng.uniform(0, self.tau0, n), rng.uniform(-0.99, -0.01, n),
                                rng.uniform(0, TWO_PI, n)])


# registry


def t3_model(n: int = 1, m: int = 1, phase: float = 0.0, offset: float = 0.0) -> T3Model:
    return T3Model(n, CircleProfile(int(m), float(phase), float(offset)))


def handle_model(rho0: float = 1.0, t_max: float = 0.8, root_tol: float = 1e-13,
                 h: Callable | None = None) -> HandleModel:
    return HandleModel(rho0=rho0, h=h, t_max=t_max, root_tol=root_tol)


def klein_model(eps: float = 0.1, perturbed: bool = True, chi: Callable | None = None,
                dchi: Callable | None = None) -> KleinModel:
    return KleinModel(eps, perturbed, chi, dchi)


def openbook_model(g: int = 1, tau0: float = 10.0, rho0: float = 1.0, rho1: float = 0.5,
                   annulus: bool = False, twist=(-0.9, -0.1)) -> OpenBookModel:
    return OpenBookModel(g, tau0, rho0, rho1, annulus, tuple(twist))


def s3_model(offset: float = 2.0) -> S3Model:
    return S3Model(offset)


CATALOG: dict[str, tuple[Callable, str]] = {
    "s3": (s3_model, "unit sphere, connection form, f = c + height of the Hopf image"),
    "t3": (t3_model, "T^3 with cos(2 pi n z) dx - sin(2 pi n z) dy and f(z)"),
    "handle": (handle_model, "connected-sum handle {h(x^2+y^2+z^2, t) = 0} in R^4"),
    "klein": (klein_model, "neighbourhood of a Klein bottle, optionally perturbed"),
    "openbook": (openbook_model, "collar chart of the Sigma_g x S^1 open book"),
}


def catalog_list() -> list[dict]:
    return [{"name": k, "description": v[1]} for k, v in CATALOG.items()]


def build(name: str, **params) -> FieldModel:
    if name not in CATALOG:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    try:
        return CATALOG[name][0](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


def model_to_json(name: str, model: FieldModel) -> dict:
    return {"schema": "reeblab.model/1", "model": name, "params": model.params()}


def model_from_json(doc: dict) -> FieldModel:
    if doc.get("schema") != "reeblab.model/1" or "model" not in doc:
        raise ConfigError("not a reeblab.model/1 document")
    params = dict(doc.get("params", {}))
    return build(doc["model"], **params)
