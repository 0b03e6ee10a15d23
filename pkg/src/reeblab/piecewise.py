"""C^1 piecewise-cubic functions of one variable in local power form."""
from __future__ import annotations

from math import comb
from typing import Callable

import numpy as np

ArrayLike = float | np.ndarray


class PiecewiseCubic:
    """Piecewise cubic on ``breaks[0] <= r <= breaks[-1]``.

    Piece ``i`` is ``c0 + c1*t + c2*t**2 + c3*t**3`` with ``t = r - breaks[i]``.
    Evaluation outside the breaks extrapolates the end pieces; range checks
    belong to the callers that own a domain.
    """

    __slots__ = ("breaks", "coeffs")

    def __init__(self, breaks, coeffs):
        b = np.asarray(breaks, dtype=float)
        c = np.asarray(coeffs, dtype=float).reshape(-1, 4)
        if b.ndim != 1 or len(b) != len(c) + 1:
            raise ValueError("need len(breaks) == number of pieces + 1")
        if np.any(np.diff(b) <= 0):
            raise ValueError("breaks must be strictly increasing")
        b.setflags(write=False)
        c.setflags(write=False)
        self.breaks = b
        self.coeffs = c

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.breaks[0]), float(self.breaks[-1])

    @property
    def n_pieces(self) -> int:
        return len(self.coeffs)

    def __call__(self, r: ArrayLike, nu: int = 0) -> ArrayLike:
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(np.asarray(r, dtype=float))
        idx = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, self.n_pieces - 1)
        t = r - self.breaks[idx]
        c = self.coeffs[idx]
        if nu == 0:
            out = c[:, 0] + t * (c[:, 1] + t * (c[:, 2] + t * c[:, 3]))
        elif nu == 1:
            out = c[:, 1] + t * (2.0 * c[:, 2] + 3.0 * t * c[:, 3])
        elif nu == 2:
            out = 2.0 * c[:, 2] + 6.0 * t * c[:, 3]
        elif nu == 3:
            out = 6.0 * c[:, 3]
        else:
            out = np.zeros_like(t)
        return float(out[0]) if scalar else out

    # constructors

    @classmethod
    def polynomial(cls, coeffs, a: float, b: float, origin: float | None = None) -> "PiecewiseCubic":
        """Single piece on [a, b] for ``sum coeffs[k] (r - origin)**k`` (origin defaults to a)."""
        c = np.zeros(4)
        c[: len(coeffs)] = coeffs
        if origin is not None and origin != a:
            c = _taylor_shift(c, a - origin)
        return cls([a, b], [c])

    @classmethod
    def from_hermite(cls, x, y, dy) -> "PiecewiseCubic":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dy = np.asarray(dy, dtype=float)
        h = np.diff(x)
        slope = np.diff(y) / h
        c = np.empty((len(h), 4))
        c[:, 0] = y[:-1]
        c[:, 1] = dy[:-1]
        c[:, 2] = (3.0 * slope - 2.0 * dy[:-1] - dy[1:]) / h
        c[:, 3] = (dy[:-1] + dy[1:] - 2.0 * slope) / h**2
        return cls(x, c)

    @classmethod
    def fit(cls, f: Callable, df: Callable, knots) -> "PiecewiseCubic":
        """Hermite interpolant of ``f`` with exact derivative samples at ``knots``."""
        knots = np.asarray(knots, dtype=float)
        return cls.from_hermite(knots, f(knots), df(knots))

    @classmethod
    def concat(cls, parts: list["PiecewiseCubic"], tol: float = 1e-12) -> "PiecewiseCubic":
        breaks = [parts[0].breaks]
        coeffs = [parts[0].coeffs]
        for prev, nxt in zip(parts, parts[1:]):
            if abs(prev.breaks[-1] - nxt.breaks[0]) > tol:
                raise ValueError("pieces are not contiguous")
            breaks.append(nxt.breaks[1:])
            coeffs.append(nxt.coeffs)
        return cls(np.concatenate(breaks), np.vstack(coeffs))

    # transforms

    def restrict(self, a: float, b: float) -> "PiecewiseCubic":
        """Same function on the sub-interval [a, b], with breaks at a and b."""
        lo, hi = self.interval
        if a < lo - 1e-12 or b > hi + 1e-12 or b <= a:
            raise ValueError(f"[{a}, {b}] is not inside [{lo}, {hi}]")
        inner = self.breaks[(self.breaks > a) & (self.breaks < b)]
        new_breaks = np.concatenate([[a], inner, [b]])
        idx = np.clip(np.searchsorted(self.breaks, new_breaks[:-1], side="right") - 1, 0, self.n_pieces - 1)
        coeffs = [_taylor_shift(self.coeffs[i], s - self.breaks[i]) for i, s in zip(idx, new_breaks[:-1])]
        return PiecewiseCubic(new_breaks, coeffs)

    def affine_reparam(self, scale: float, shift: float) -> "PiecewiseCubic":
        """``g(r) = self(scale*r + shift)``; a negative scale reverses orientation."""
        lo, hi = self.interval
        if scale > 0:
            new_breaks = (self.breaks - shift) / scale
            coeffs = [c * scale ** np.arange(4) for c in self.coeffs]
            return PiecewiseCubic(new_breaks, coeffs)
        # reversed: piece i in old coordinates runs from its right end
        new_breaks = ((self.breaks - shift) / scale)[::-1]
        coeffs = []
        for i in range(self.n_pieces - 1, -1, -1):
            width = self.breaks[i + 1] - self.breaks[i]
            c = _taylor_shift(self.coeffs[i], width)
            coeffs.append(c * scale ** np.arange(4))
        return PiecewiseCubic(new_breaks, coeffs)

    def combine(self, other: "PiecewiseCubic", a: float, b: float) -> "PiecewiseCubic":
        """Linear combination ``a*self + b*other`` (breaks must agree)."""
        if not np.array_equal(self.breaks, other.breaks):
            raise ValueError("breaks differ")
        return PiecewiseCubic(self.breaks, a * self.coeffs + b * other.coeffs)

    def scaled(self, k: float) -> "PiecewiseCubic":
        return PiecewiseCubic(self.breaks, k * self.coeffs)

    # serialization

    def to_pieces(self) -> list[dict]:
        return [
            {"breaks": [float(self.breaks[i]), float(self.breaks[i + 1])], "coeffs": [float(v) for v in self.coeffs[i]]}
            for i in range(self.n_pieces)
        ]

    @classmethod
    def from_pieces(cls, pieces: list[dict], key: str = "coeffs") -> "PiecewiseCubic":
        breaks = [pieces[0]["breaks"][0]] + [p["breaks"][1] for p in pieces]
        return cls(breaks, [p[key] for p in pieces])

    def __repr__(self) -> str:
        lo, hi = self.interval
        return f"PiecewiseCubic([{lo:g}, {hi:g}], pieces={self.n_pieces})"


def _taylor_shift(c: np.ndarray, d: float) -> np.ndarray:
    """Coefficients of p(t + d) given those of p(t)."""
    out = np.zeros(4)
    for k in range(4):
        for j in range(k, 4):
            out[k] += c[j] * comb(j, k) * d ** (j - k)
    return out


def merge_breaks(f: PiecewiseCubic, g: PiecewiseCubic) -> tuple[PiecewiseCubic, PiecewiseCubic]:
    """Re-express two functions on the same interval over a common break set."""
    if f.interval != g.interval:
        raise ValueError("intervals differ")
    breaks = np.union1d(f.breaks, g.breaks)
    return _rebreak(f, breaks), _rebreak(g, breaks)


def _rebreak(f: PiecewiseCubic, breaks: np.ndarray) -> PiecewiseCubic:
    if np.array_equal(f.breaks, breaks):
        return f
    idx = np.clip(np.searchsorted(f.breaks, breaks[:-1], side="right") - 1, 0, f.n_pieces - 1)
    coeffs = [_taylor_shift(f.coeffs[i], s - f.breaks[i]) for i, s in zip(idx, breaks[:-1])]
    return PiecewiseCubic(breaks, coeffs)
