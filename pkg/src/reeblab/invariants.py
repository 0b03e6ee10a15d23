"""Homotopy-invariant bookkeeping: degree, Hopf invariant, d3, Euler classes and SL(n, Z) moves.

Integer work uses Python ints throughout, so every determinant and product is
exact.  ``d3`` lives in ``Z + 1/2`` and is stored as the odd integer ``2*d3``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import GcdError, InconsistentRecordError, ParityError, PreconditionError, ResolutionError


# degree of maps S^2 -> S^2


def _frame(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent pair ``(e1, e2)`` at unit vectors ``v`` with ``det[v, e1, e2] = 1``."""
    a = np.where(np.abs(v[..., :1]) < 0.9, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    e1 = a - np.sum(a * v, axis=-1, keepdims=True) * v
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(v, e1)
    return e1, e2


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = math.pi * (1 + 5**0.5) * i
    r = np.sqrt(1 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _chart(seed, E1, E2, u):
    p = seed + u[:, :1] * E1 + u[:, 1:] * E2
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def signed_preimages(fmap: Callable, q: np.ndarray, seeds: int = 2000, newton: int = 40,
                     fd: float = 1e-7, tol: float = 1e-11, regular: float = 1e-8) -> list[tuple[np.ndarray, int]]:
    """Preimages of ``q`` with local degree signs, by vectorized Newton from a sphere grid.

    ``fmap`` must accept an ``(N, 3)`` array of unit vectors.  Raises
    ``ResolutionError`` if ``q`` is not a regular value at the resolution used.
    """
    q = q / np.linalg.norm(q)
    t1, t2 = _frame(q[None, :])
    t1, t2 = t1[0], t2[0]
    S = fibonacci_sphere(seeds)
    E1, E2 = _frame(S)
    u = np.zeros((seeds, 2))

    def G(uu):
        y = fmap(_chart(S, E1, E2, uu))
        return np.column_stack([y @ t1, y @ t2]), y @ q

    def J(uu):
        cols = []
        for k in range(2):
            e = np.zeros_like(uu)
            e[:, k] = fd
            cols.append((G(uu + e)[0] - G(uu - e)[0]) / (2 * fd))
        return np.stack(cols, axis=2)  # (N, 2 equations, 2 unknowns)

    alive = np.ones(seeds, dtype=bool)
    for _ in range(newton):
        g, _ = G(u)
        Jm = J(u)
        det = Jm[:, 0, 0] * Jm[:, 1, 1] - Jm[:, 0, 1] * Jm[:, 1, 0]
        ok = alive & (np.abs(det) > 1e-14)
        inv = np.zeros_like(Jm)
        inv[ok, 0, 0] = Jm[ok, 1, 1] / det[ok]
        inv[ok, 1, 1] = Jm[ok, 0, 0] / det[ok]
        inv[ok, 0, 1] = -Jm[ok, 0, 1] / det[ok]
        inv[ok, 1, 0] = -Jm[ok, 1, 0] / det[ok]
        step = np.einsum("nij,nj->ni", inv, g)
        step = np.where(ok[:, None], step, 0.0)
        norm = np.linalg.norm(step, axis=1, keepdims=True)
        u = u - step * np.minimum(1.0, 0.5 / np.maximum(norm, 1e-300))
        alive = ok & (np.linalg.norm(u, axis=1) < 1.5)
    g, cosq = G(u)
    conv = alive & (np.linalg.norm(g, axis=1) < tol) & (cosq > 0)
    pts = _chart(S, E1, E2, u)[conv]
    Jm = J(u)[conv]
    dets = Jm[:, 0, 0] * Jm[:, 1, 1] - Jm[:, 0, 1] * Jm[:, 1, 0]
    out: list[tuple[np.ndarray, int]] = []
    for p, d in zip(pts, dets):
        if any(np.linalg.norm(p - x) < 1e-6 for x, _ in out):
            continue
        if abs(d) < regular:
            raise ResolutionError("sampled value is not regular")
        out.append((p, 1 if d > 0 else -1))
    return out


def degree(fmap: Callable, trials: int = 10, seed: int | None = 0, seeds: int = 2000) -> int:
    """Degree of a smooth map of the unit sphere, cross-checked at three regular values."""
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(trials):
        q = rng.standard_normal(3)
        try:
            pre = signed_preimages(fmap, q, seeds)
        except ResolutionError:
            continue
        counts.append(sum(s for _, s in pre))
        if len(counts) == 3:
            break
    if len(counts) < 3:
        raise ResolutionError(f"found only {len(counts)} regular values in {trials} trials")
    if len(set(counts)) != 1:
        raise ResolutionError(f"signed counts disagree across regular values: {counts}")
    return int(counts[0])


def stereo_inverse(z: np.ndarray) -> np.ndarray:
    """Complex plane to the unit sphere, projecting from the north pole."""
    d = 1 + np.abs(z) ** 2
    return np.column_stack([2 * z.real / d, 2 * z.imag / d, (np.abs(z) ** 2 - 1) / d])


def stereo(p: np.ndarray) -> np.ndarray:
    return (p[:, 0] + 1j * p[:, 1]) / (1 - p[:, 2])


def power_map(n: int) -> Callable:
    """``z -> z^n`` on the Riemann sphere, with ``conj(z)^|n|`` for negative ``n``."""
    def fmap(p):
        p = np.atleast_2d(p)
        north = p[:, 2] > 1 - 1e-12
        z = stereo(np.where(north[:, None], np.array([0.0, 0.0, -1.0]), p))
        w = z**n if n >= 0 else np.conj(z) ** (-n)
        out = stereo_inverse(w)
        if n == 0:
            out = np.tile(stereo_inverse(np.array([1.0 + 0j])), (len(p), 1))
        out[north] = np.array([0.0, 0.0, 1.0]) if n != 0 else out[north]
        return out

    return fmap


def hopf_s1(deg: int) -> int:
    """Hopf invariant of an S^1-invariant map whose base map has degree ``deg``."""
    return int(deg) ** 2


# H, H', d3 records


@dataclass(frozen=True)
class InvariantRecord:
    H: int | None = None
    H_prime: int | None = None
    d3_twice: int | None = None
    euler: tuple = ()
    basis: tuple = ()
    history: tuple = ()

    @property
    def d3(self) -> Fraction | None:
        return None if self.d3_twice is None else Fraction(self.d3_twice, 2)

    def with_event(self, op: str, **params) -> "InvariantRecord":
        return replace(self, history=self.history + ((op, dict(params)),))

    def to_json(self) -> dict:
        return {"H": self.H, "H_prime": self.H_prime,
                "d3": None if self.d3_twice is None else str(Fraction(self.d3_twice, 2)),
                "euler": list(self.euler), "basis": list(self.basis),
                "history": [{"op": op, "params": p} for op, p in self.history]}

    @classmethod
    def from_json(cls, doc: dict) -> "InvariantRecord":
        d3 = doc.get("d3")
        d3_twice = None
        if d3 is not None:
            v = Fraction(str(d3))
            if v.denominator not in (1, 2) or (2 * v).denominator != 1:
                raise InconsistentRecordError(f"d3 = {d3} is not a half-integer")
            d3_twice = int(2 * v)
        return cls(doc.get("H"), doc.get("H_prime"), d3_twice, tuple(doc.get("euler", ())),
                   tuple(doc.get("basis", ())),
                   tuple((h["op"], h.get("params", {})) for h in doc.get("history", ())))


def convert(rec: InvariantRecord) -> InvariantRecord:
    """Fill ``H``, ``H'`` and ``d3`` from whichever are known, checking consistency."""
    cands = []
    if rec.H_prime is not None:
        cands.append(("H_prime", int(rec.H_prime)))
    if rec.H is not None:
        cands.append(("H", int(rec.H) - 1))
    if rec.d3_twice is not None:
        if rec.d3_twice % 2 == 0:
            raise InconsistentRecordError("d3 must lie in Z + 1/2")
        cands.append(("d3", (-rec.d3_twice - 1) // 2))
    if not cands:
        raise InconsistentRecordError("record has none of H, H', d3")
    values = {v for _, v in cands}
    if len(values) > 1:
        raise InconsistentRecordError("inconsistent invariants: " + ", ".join(f"{k} gives H' = {v}" for k, v in cands))
    hp = values.pop()
    return replace(rec, H=hp + 1, H_prime=hp, d3_twice=-2 * hp - 1).with_event("convert")


def connected_sum(a: InvariantRecord, b: InvariantRecord) -> InvariantRecord:
    """H' adds and ``d3`` shifts by one half; the two rules are cross-checked."""
    a, b = convert(a), convert(b)
    hp = a.H_prime + b.H_prime
    d3_twice = a.d3_twice + b.d3_twice + 1
    if d3_twice != -2 * hp - 1:
        raise InconsistentRecordError("d3 and H' connected-sum rules disagree")
    hist = (("connected_sum", {"left": a.to_json()["history"], "right": b.to_json()["history"]}),)
    return InvariantRecord(hp + 1, hp, d3_twice, history=hist)


def xi_k(k: int) -> InvariantRecord:
    """Record of the S^1-invariant structure from Lutz twists along ``k`` Hopf fibres."""
    return convert(InvariantRecord(H_prime=k * (k - 2))).with_event("lutz_twists_on_hopf_fibres", k=k)


@dataclass(frozen=True)
class HPrimeRealization:
    target: int
    ks: tuple
    full_twist_alternative: bool

    @property
    def total(self) -> int:
        return sum(k * (k - 2) for k in self.ks)

    def to_json(self) -> dict:
        return {"target": self.target, "ks": list(self.ks), "sum": self.total,
                "full_twist_alternative": self.full_twist_alternative}


def realize_hprime(n: int, kmax: int = 8) -> HPrimeRealization:
    """Smallest multiset of ``k`` with ``sum k(k-2) = n`` (breadth-first over sums).

    ``k = 0`` and ``k = 2`` contribute nothing and are not used.  For ``n = 0``
    the flag records the alternative: a full Lutz twist on the standard sphere.
    """
    gens = [k for k in range(kmax + 1) if k * (k - 2) != 0]
    vals = {k: k * (k - 2) for k in gens}
    lo = min(n, 0) - max(vals.values())
    hi = max(n, 0) + max(vals.values())
    layer: dict[int, tuple] = {0: ()}
    for _ in range(abs(n) + 4):
        nxt: dict[int, tuple] = {}
        for s, ks in layer.items():
            for k in gens:
                t = s + vals[k]
                if lo <= t <= hi:
                    cand = tuple(sorted(ks + (k,)))
                    if t not in nxt or cand < nxt[t]:
                        nxt[t] = cand
        if n in nxt:
            return HPrimeRealization(n, nxt[n], n == 0)
        layer = nxt
    raise ResolutionError(f"no realization of {n} found")


# SL(n, Z)


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """``(g, x, y)`` with ``a x + b y = g = gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def matmul(A, B) -> list[list[int]]:
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def matvec(A, v) -> list[int]:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def det_exact(A) -> int:
    """Bareiss fraction-free elimination; exact for integer matrices."""
    M = [list(map(int, r)) for r in A]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def bezout_block(a: int, b: int) -> tuple[list[list[int]], list[list[int]], int]:
    """2x2 block of determinant 1 sending ``(a, b)`` to ``(0, gcd(a, b))``, with its inverse."""
    g, d, mc = egcd(a, b)  # a*d + b*mc = g, so a*d - b*c = g with c = -mc
    c = -mc
    if g == 0:
        return identity(2), identity(2), 0
    block = [[b // g, -a // g], [d, -c]]
    inv = [[-c, a // g], [-d, b // g]]
    return block, inv, g


@dataclass(frozen=True)
class UnimodularWitness:
    n: int
    matrix: tuple
    inverse: tuple
    input: tuple
    target: tuple

    def verify(self) -> bool:
        A = [list(r) for r in self.matrix]
        return (det_exact(A) == 1 and tuple(matvec(A, self.input)) == self.target
                and matmul(A, [list(r) for r in self.inverse]) == identity(self.n))

    def to_json(self) -> dict:
        return {"n": self.n, "matrix": [list(r) for r in self.matrix], "inverse": [list(r) for r in self.inverse],
                "input": list(self.input), "target": list(self.target), "det": det_exact(self.matrix)}


def _gcd_all(v) -> int:
    g = 0
    for x in v:
        g = math.gcd(g, int(x))
    return g


def primitive_reduce(v: Sequence[int]) -> UnimodularWitness:
    """Matrix in SL(n, Z) sending a primitive ``v`` to ``(0, ..., 0, 1)``.

    Applies the 2x2 Bezout block to coordinates ``(i, i+1)`` for
    ``i = 0, ..., n-2``; each step moves the running gcd one slot right.
    """
    v = [int(x) for x in v]
    n = len(v)
    if n < 2:
        raise PreconditionError("need n >= 2")
    g = _gcd_all(v)
    if g != 1:
        raise GcdError(g)
    A, Ainv, w = identity(n), identity(n), list(v)
    for i in range(n - 1):
        block, inv, _ = bezout_block(w[i], w[i + 1])
        B, Binv = identity(n), identity(n)
        for r in range(2):
            for c in range(2):
                B[i + r][i + c] = block[r][c]
                Binv[i + r][i + c] = inv[r][c]
        A = matmul(B, A)
        Ainv = matmul(Ainv, Binv)
        w = matvec(B, w)
    target = tuple([0] * (n - 1) + [1])
    if tuple(w) != target:
        raise ResolutionError(f"reduction ended at {w}")  # unreachable for primitive input
    return UnimodularWitness(n, tuple(map(tuple, A)), tuple(map(tuple, Ainv)), tuple(v), target)


def lift_to_sl3(a: int, b: int, c: int) -> dict:
    """3x3 integer matrix sending ``(gcd(a, b), c, 0)`` to ``(a, b, c)``.

    The layout with third column ``(b', a', 0)`` has determinant -1; negating
    that column gives the SL(3, Z) element returned as ``matrix``.
    """
    g, x, y = egcd(a, -b)  # a*x - b*y = g with a' = x, b' = y
    if g == 0:
        raise GcdError(0)
    ap, bp = x, y
    raw = [[a // g, 0, bp], [b // g, 0, ap], [0, 1, 0]]
    fixed = [[a // g, 0, -bp], [b // g, 0, -ap], [0, 1, 0]]
    return {"raw": raw, "raw_det": det_exact(raw), "matrix": fixed, "det": det_exact(fixed),
            "source": [g, c, 0], "image": matvec(fixed, [g, c, 0])}


# Euler classes


@dataclass(frozen=True)
class EulerClass:
    vector: tuple
    basis: tuple

    def to_json(self) -> dict:
        return {"vector": list(self.vector), "basis": list(self.basis)}


_SIGN = {"elliptic": 1, "ellipticorbit": 1, "hyperbolic": -1, "hyperbolicorbit": -1, 0: 1, 2: 1, 1: -1}


def _critical_sign(entry) -> int:
    key = entry.lower() if isinstance(entry, str) else entry
    if hasattr(entry, "type"):
        key = entry.type.lower()
    if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
        key = int(key)
    if key not in _SIGN:
        raise PreconditionError(f"unclassified critical entry {entry!r}")
    return _SIGN[key]


def euler_from_morse(page: Sequence, bindings: Sequence[int] = (1, -1), fiber: Sequence[int] = (1,),
                     basis: Sequence[str] = ("PD[S1]",)) -> EulerClass:
    """Euler class as a multiple of the fibre class from signed critical-orbit counts.

    Page entries are Morse indices, ``"elliptic"``/``"hyperbolic"`` labels or
    census components; every page orbit is a positive fibre.  Binding orbits
    are elliptic and contribute their signed fibre class.
    """
    total = sum(_critical_sign(e) for e in page) + sum(int(b) for b in bindings)
    return EulerClass(tuple(total * int(f) for f in fiber), tuple(basis))


def twist_update(euler: EulerClass, orbit_class: Sequence[int], kind: str = "simple") -> EulerClass:
    """Raw Lutz-twist rule: a simple twist along class ``c`` adds ``-2c``; a full twist adds nothing."""
    if kind == "full":
        return euler
    if kind != "simple":
        raise PreconditionError(f"unknown twist kind {kind!r}")
    return EulerClass(tuple(e - 2 * int(c) for e, c in zip(euler.vector, orbit_class)), euler.basis)


@dataclass(frozen=True)
class EulerPlan:
    target: tuple
    k: int
    primitive: tuple
    witness: UnimodularWitness
    diffeomorphism: tuple  # M in SL(3, Z) with M (0, 0, -2k) = target
    full_twist_marker: bool

    def verify(self) -> bool:
        M = [list(r) for r in self.diffeomorphism]
        ok = self.witness.verify() and det_exact(M) == 1
        ok &= tuple(2 * self.k * x for x in self.primitive) == self.target
        ok &= tuple(matvec(M, [0] * (len(self.target) - 1) + [-2 * self.k])) == self.target
        return bool(ok)

    def to_json(self) -> dict:
        return {"target": list(self.target), "k": self.k, "primitive": list(self.primitive),
                "witness": self.witness.to_json(), "diffeomorphism": [list(r) for r in self.diffeomorphism],
                "claimed_euler_after_twists": [0] * (len(self.target) - 1) + [-2 * self.k],
                "full_twist_marker": self.full_twist_marker, "verified": self.verify()}


def realize_even_euler(target: Sequence[int]) -> EulerPlan:
    """Twist count and SL(n, Z) move realising an even class as ``-2k PD[S1]`` pulled back."""
    t = tuple(int(x) for x in target)
    odd = [x for x in t if x % 2]
    if odd:
        raise ParityError(f"Euler class {list(t)} must be even, since its mod 2 reduction is w2 = 0")
    n = len(t)
    if all(x == 0 for x in t):
        wit = primitive_reduce([0] * (n - 1) + [1])
        return EulerPlan(t, 0, tuple([0] * n), wit, tuple(map(tuple, identity(n))), True)
    g = _gcd_all(t)
    k = g // 2
    prim = tuple(x // g for x in t)
    wit = primitive_reduce(prim)
    # M e_n = -prim: M = A^{-1} D with D = diag(-1, 1, ..., 1, -1)
    D = identity(n)
    D[0][0] = -1
    D[n - 1][n - 1] = -1
    M = matmul([list(r) for r in wit.inverse], D)
    return EulerPlan(t, k, prim, wit, tuple(map(tuple, M)), False)
