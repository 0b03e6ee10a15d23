"""Solid-torus (A) and pants x S^1 (B) blocks, torus gluing, and the critical census.

Every block boundary carries a collar germ in the block collar coordinate
``s in [-1, 0]`` with the boundary torus at ``s = 0``. Gluing inserts
``[-1, 1] x T^2``: the near block fills ``r in [-1, -1 + eps]`` through
``s = (r + 1 - eps)/eps``, the far block fills ``r in [1 - eps, 1]`` through
``s = -(r - 1 + eps)/eps`` followed by the torus map ``y = A x``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AreaFormObstructionError,
    AssemblyError,
    DegeneracyError,
    EdgeError,
    IncompatibleGermsError,
)
from .lutz import (
    DEFAULT_MARGIN,
    BottProfile,
    CollarGerm,
    LutzCurve,
    bridge,
    check_contact,
    find_critical_radii,
    monotone_bridge,
    sew,
)
from .piecewise import PiecewiseCubic

EPS = 0.25
A_CORE = 0.05
A_COLLAR = 0.25  # radius on the A-block collar is 1 + A_COLLAR*s
LEVEL_GAP = 1.0


@dataclass(frozen=True)
class MorsePoint:
    index: int
    label: str = ""

    @property
    def kind(self) -> str:
        return "hyperbolic" if self.index == 1 else "elliptic"


@dataclass(frozen=True, eq=False)
class BlockSpec:
    """A building block with boundary germs and Bott data.

    ``directions[i]`` is the sign of ``df/ds`` at boundary i, i.e. whether the
    Bott function increases towards that boundary.
    """

    kind: str
    boundaries: tuple  # LutzCurve per boundary on s in [-1, 0]
    directions: tuple
    bott_sign: int = 1
    core_curve: LutzCurve | None = None
    rho: tuple = ()
    morse: tuple = ()
    params: dict = field(default_factory=dict)

    @property
    def n_boundaries(self) -> int:
        return len(self.boundaries)

    @property
    def orientation_sign(self) -> int:
        return self.boundaries[0].orientation_sign

    def boundary_profile(self, i: int) -> PiecewiseCubic:
        """Bott function on collar i as a polynomial in s (before block normalization)."""
        if self.kind == "A":
            c = [1.0, 2 * A_COLLAR, A_COLLAR**2]  # (1 + A_COLLAR*s)^2
        else:
            c = [1.0, A_COLLAR]
        return PiecewiseCubic.polynomial([self.directions[i] * v for v in c], -1.0, 0.0, origin=0.0)


def _as_germ_curve(germ) -> LutzCurve:
    curve = germ.curve if isinstance(germ, CollarGerm) else germ
    a, b = curve.interval
    if abs(a + 1) > 1e-12 or abs(b) > 1e-12:
        raise ValueError("block boundary germs live on the collar s in [-1, 0]")
    return curve


def default_a_germ() -> LutzCurve:
    """``(1, (1 + A_COLLAR*s)^2)``: the form dtheta + rho^2 dphi on the A collar."""
    return LutzCurve.polynomial([1.0], [1.0, 2 * A_COLLAR, A_COLLAR**2], -1.0, 0.0, +1, origin=0.0)


def make_block_a(bott_sign: int = 1, boundary_germ=None, margin: float = DEFAULT_MARGIN) -> BlockSpec:
    """Solid torus with core form ``dtheta + rho^2 dphi`` and Bott function ``c + bott_sign*rho^2``."""
    if bott_sign not in (-1, 1):
        raise ValueError("bott_sign must be +1 or -1")
    core = LutzCurve.polynomial([1.0], [0.0, 0.0, 1.0], A_CORE, 0.25, +1, origin=0.0)
    if boundary_germ is None:
        germ = default_a_germ()
        interior = LutzCurve.polynomial([1.0], [0.0, 0.0, 1.0], A_CORE, 1.0, +1, origin=0.0)
    else:
        germ = _as_germ_curve(boundary_germ)
        if germ.orientation_sign != core.orientation_sign:
            raise IncompatibleGermsError("A-block germs must have the orientation sign of dtheta + rho^2 dphi")
        CollarGerm("right", germ).validate()
        outer = LutzCurve(germ.h1.affine_reparam(1 / A_COLLAR, -1 / A_COLLAR),
                          germ.h2.affine_reparam(1 / A_COLLAR, -1 / A_COLLAR), germ.orientation_sign)
        interior, _ = bridge(core, outer, margin=margin)
    params = {"bott_sign": bott_sign}
    if boundary_germ is not None:
        params["germ"] = germ.to_json()
    return BlockSpec("A", (germ,), (bott_sign,), bott_sign=bott_sign, core_curve=interior, params=params)


def _rho_pair(rho) -> tuple[float, float]:
    if isinstance(rho, (int, float)):
        return float(rho), 1.0
    v, k = rho
    return float(v), float(k)


def make_block_b(rho1, rho2, rho3, morse_data=None) -> BlockSpec:
    """Pants x S^1 with ``alpha = dtheta + rho_i(s) dphi_i`` on the collars.

    ``rho_i`` is ``rho_i(0)`` or a pair ``(rho_i(0), rho_i')`` describing a linear
    collar function. ``morse_data`` is ``{"critical_points": [{"index": k}, ...],
    "directions": [d1, d2, d3]}``; the default is the carrot-pants height
    function, one saddle with the waist on top.
    """
    rhos = tuple(_rho_pair(r) for r in (rho1, rho2, rho3))
    if any(k <= 0 for _, k in rhos):
        raise ValueError("collar functions must be strictly increasing")
    total = sum(2 * math.pi * v for v, _ in rhos)
    if total <= 0:
        raise AreaFormObstructionError(f"boundary integral 2*pi*sum(rho_i(0)) = {total:.6g} is not positive")
    morse_data = morse_data or {"critical_points": [{"index": 1}], "directions": [1, -1, -1]}
    points = tuple(MorsePoint(int(p["index"]), p.get("label", "")) for p in morse_data["critical_points"])
    dirs = tuple(int(d) for d in morse_data.get("directions", [1, -1, -1]))
    if len(dirs) != 3 or any(d not in (-1, 1) for d in dirs):
        raise ValueError("need three boundary directions in {-1, +1}")
    if any(p.index not in (0, 1, 2) for p in points):
        raise ValueError("Morse indices on a surface are 0, 1 or 2")
    if sum((-1) ** p.index for p in points) != -1:
        raise ValueError("index sum must equal the Euler characteristic of the pants, -1")
    if all(d == 1 for d in dirs) and not any(p.index == 0 for p in points) or \
            all(d == -1 for d in dirs) and not any(p.index == 2 for p in points):
        raise ValueError("a page function increasing towards every boundary needs a minimum (and dually)")
    germs = tuple(LutzCurve.polynomial([1.0], [v, k], -1.0, 0.0, +1, origin=0.0) for v, k in rhos)
    return BlockSpec("B", germs, dirs, rho=rhos, morse=points,
                     params={"rho": [list(r) for r in rhos],
                             "morse": {"critical_points": [{"index": p.index} for p in points],
                                       "directions": list(dirs)}})


# graph


@dataclass(frozen=True)
class GluingEdge:
    near: tuple  # (block id, boundary index)
    far: tuple
    matrix: tuple  # ((a, b), (c, d)) exact integers
    critical_torus: bool = False

    @property
    def determinant(self) -> int:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    def validate(self) -> None:
        if any(not isinstance(v, (int, np.integer)) or isinstance(v, bool) for row in self.matrix for v in row):
            raise EdgeError("gluing matrix entries must be integers")
        if self.determinant != -1:
            raise EdgeError(f"gluing matrix has determinant {self.determinant}, expected -1")


@dataclass(frozen=True, eq=False)
class BlockGraph:
    blocks: dict  # id -> BlockSpec
    edges: tuple

    def validate(self) -> None:
        used: dict = {}
        for k, e in enumerate(self.edges):
            e.validate()
            for end in (e.near, e.far):
                bid, i = end
                if bid not in self.blocks:
                    raise EdgeError(f"edge {k} references unknown block {bid!r}")
                if not 0 <= i < self.blocks[bid].n_boundaries:
                    raise EdgeError(f"edge {k}: block {bid!r} has no boundary {i}")
                if end in used:
                    raise EdgeError(f"boundary {end} is glued twice (edges {used[end]} and {k})")
                used[end] = k
        free = [(b, i) for b, spec in self.blocks.items() for i in range(spec.n_boundaries) if (b, i) not in used]
        if free:
            raise EdgeError(f"unpaired boundaries: {free}")

    @classmethod
    def from_json(cls, doc: dict) -> "BlockGraph":
        blocks = {}
        for b in doc["blocks"]:
            p = b.get("params", {})
            if b["kind"] == "A":
                germ = LutzCurve.from_json(p["germ"]) if "germ" in p else None
                blocks[b["id"]] = make_block_a(int(p.get("bott_sign", 1)), germ)
            elif b["kind"] == "B":
                rho = p.get("rho", [[1.0, 1.0]] * 3)
                blocks[b["id"]] = make_block_b(*[tuple(r) if isinstance(r, list) else r for r in rho],
                                               morse_data=p.get("morse"))
            else:
                raise ValueError(f"unknown block kind {b['kind']!r}")
        edges = tuple(
            GluingEdge((e["from"]["block"], int(e["from"]["bdry"])), (e["to"]["block"], int(e["to"]["bdry"])),
                       tuple(tuple(int(v) if float(v).is_integer() else v for v in row) for row in e["matrix"]),
                       bool(e.get("critical_torus", False)))
            for e in doc["edges"]
        )
        return cls(blocks, edges)

    def to_json(self) -> dict:
        return {
            "blocks": [{"id": k, "kind": b.kind, "params": b.params} for k, b in self.blocks.items()],
            "edges": [{"from": {"block": e.near[0], "bdry": e.near[1]}, "to": {"block": e.far[0], "bdry": e.far[1]},
                       "matrix": [list(r) for r in e.matrix], "critical_torus": e.critical_torus}
                      for e in self.edges],
        }


def near_germ(curve: LutzCurve, eps: float = EPS) -> CollarGerm:
    """Pull a block collar germ into ``r in [-1, -1 + eps]``."""
    scale, shift = 1 / eps, (1 - eps) / eps
    return CollarGerm("left", LutzCurve(curve.h1.affine_reparam(scale, shift),
                                        curve.h2.affine_reparam(scale, shift), curve.orientation_sign))


def far_germ(curve: LutzCurve, matrix, eps: float = EPS) -> CollarGerm:
    """Pull a block collar germ into ``r in [1 - eps, 1]`` and through ``y = A x``.

    The coefficients become ``(h1, h2) . A``; the r-reversal and ``det A = -1``
    each flip the sign of delta, so the orientation sign is kept.
    """
    scale, shift = -1 / eps, (1 - eps) / eps
    g1, g2 = curve.h1.affine_reparam(scale, shift), curve.h2.affine_reparam(scale, shift)
    (a, b), (c, d) = matrix
    h1 = g1.combine(g2, float(a), float(c))
    h2 = g1.combine(g2, float(b), float(d))
    det = a * d - b * c
    return CollarGerm("right", LutzCurve(h1, h2, curve.orientation_sign * int(np.sign(-det))))


@dataclass(frozen=True, eq=False)
class CollarChart:
    edge_index: int
    curve: LutzCurve
    profile: BottProfile
    critical_torus: bool


@dataclass(frozen=True, eq=False)
class AssembledManifold:
    graph: BlockGraph
    block_sign: dict  # id -> +-1 multiplier of the block's Bott function
    block_offset: dict  # id -> additive constant
    collars: tuple

    def block_function(self, bid) -> "callable":
        spec = self.graph.blocks[bid]
        s, c = self.block_sign[bid], self.block_offset[bid]
        if spec.kind != "A":
            raise ValueError("only A blocks have an explicit interior function")
        return lambda x, y: c + s * spec.bott_sign * (np.asarray(x) ** 2 + np.asarray(y) ** 2)

    def to_json(self) -> dict:
        blocks = []
        for bid, spec in self.graph.blocks.items():
            entry = {"id": bid, "kind": spec.kind, "params": spec.params,
                     "bott_multiplier": self.block_sign[bid], "bott_offset": self.block_offset[bid]}
            if spec.kind == "A":
                entry["interior_curve"] = spec.core_curve.to_json()
            blocks.append(entry)
        return {
            "schema": "reeblab.atlas/1",
            "graph": self.graph.to_json(),
            "blocks": blocks,
            "collars": [{"edge": c.edge_index, "critical_torus": c.critical_torus, "curve": c.curve.to_json(),
                         "profile": c.profile.to_json()} for c in self.collars],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AssembledManifold":
        graph = BlockGraph.from_json(doc["graph"])
        sign = {b["id"]: int(b["bott_multiplier"]) for b in doc["blocks"]}
        offset = {b["id"]: float(b["bott_offset"]) for b in doc["blocks"]}
        collars = tuple(CollarChart(int(c["edge"]), LutzCurve.from_json(c["curve"]),
                                    BottProfile.from_json(c["profile"]), bool(c["critical_torus"]))
                        for c in doc["collars"])
        return cls(graph, sign, offset, collars)


def _solve_bott_signs(graph: BlockGraph) -> dict:
    """Choose a sign per block so every edge is monotone or has one critical torus, as flagged."""
    adj: dict = {b: [] for b in graph.blocks}
    for e in graph.edges:
        dp = graph.blocks[e.near[0]].directions[e.near[1]]
        dq = graph.blocks[e.far[0]].directions[e.far[1]]
        # s_p*dp*s_q*dq must be -1 for a monotone collar, +1 for a critical torus
        rel = (1 if e.critical_torus else -1) * dp * dq
        adj[e.near[0]].append((e.far[0], rel))
        adj[e.far[0]].append((e.near[0], rel))
    sign: dict = {}
    for root in graph.blocks:
        if root in sign:
            continue
        sign[root] = 1
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v, rel in adj[u]:
                want = sign[u] * rel
                if v not in sign:
                    sign[v] = want
                    queue.append(v)
                elif sign[v] != want:
                    raise AssemblyError("critical-torus flags are inconsistent around a cycle of the block graph")
    return sign


def _solve_offsets(graph: BlockGraph, sign: dict) -> dict:
    """Offsets making every monotone collar rise by at least LEVEL_GAP (longest paths)."""
    ids = list(graph.blocks)
    cons = []  # c[v] >= c[u] + w
    for e in graph.edges:
        if e.critical_torus:
            continue
        (p, i), (q, j) = e.near, e.far
        up = sign[p] * graph.blocks[p].directions[i]
        vp = sign[p] * graph.blocks[p].directions[i]  # boundary value offset from c_p
        vq = sign[q] * graph.blocks[q].directions[j]
        if up > 0:
            cons.append((p, q, vp - vq + LEVEL_GAP))
        else:
            cons.append((q, p, vq - vp + LEVEL_GAP))
    c = {b: 0.0 for b in ids}
    for _ in range(len(ids) + 1):
        changed = False
        for u, v, w in cons:
            if c[v] < c[u] + w - 1e-12:
                c[v] = c[u] + w
                changed = True
        if not changed:
            return c
    raise AssemblyError("Bott levels cannot increase around a cycle; flag a critical torus on one of its edges")


def _collar_profile(fp: PiecewiseCubic, fq: PiecewiseCubic, critical: bool, eps: float = EPS) -> BottProfile:
    """Bott function on [-1, 1]: block germs on the collars, bridged through the middle."""
    a, b = -1 + eps, 1 - eps
    va, sa = fp(a), fp(a, 1)
    vb, sb = fq(b), fq(b, 1)
    if not critical:
        up = 1.0 if sa > 0 else -1.0
        if up * sb <= 0 or up * (vb - va) <= 0:
            raise AssemblyError("collar levels are not monotone")
        F, dF = monotone_bridge(a, b, up * va, up * vb, up * sa, up * sb)
        middle = PiecewiseCubic.fit(lambda r: up * F(r), lambda r: up * dF(r), np.linspace(a, b, 129))
    else:
        # one interior extremum at r = 0
        up = 1.0 if sa > 0 else -1.0
        if up * sb >= 0:
            raise AssemblyError("critical-torus collar needs opposite end slopes")
        peak = up * max(up * va, up * vb) + up * LEVEL_GAP
        F1, dF1 = monotone_bridge(a, 0.0, up * va, up * peak, up * sa, 0.0)
        F2, dF2 = monotone_bridge(0.0, b, -up * peak, -up * vb, 0.0, -up * sb)
        left = PiecewiseCubic.fit(lambda r: up * F1(r), lambda r: up * dF1(r), np.linspace(a, 0.0, 65))
        right = PiecewiseCubic.fit(lambda r: -up * F2(r), lambda r: -up * dF2(r), np.linspace(0.0, b, 65))
        middle = PiecewiseCubic.concat([left, right])
    f = PiecewiseCubic.concat([fp, middle, fq])
    return BottProfile.from_piecewise(f)


def glue(graph: BlockGraph, margin: float = DEFAULT_MARGIN, eps: float = EPS) -> AssembledManifold:
    """Insert a sewn collar ``[-1, 1] x T^2`` for every edge and extend the Bott function."""
    graph.validate()
    sign = _solve_bott_signs(graph)
    offset = _solve_offsets(graph, sign)
    collars = []
    for k, e in enumerate(graph.edges):
        (p, i), (q, j) = e.near, e.far
        bp, bq = graph.blocks[p], graph.blocks[q]
        left = near_germ(bp.boundaries[i], eps)
        right = far_germ(bq.boundaries[j], e.matrix, eps)
        if left.orientation_sign != right.orientation_sign:
            raise EdgeError(f"edge {k}: orientation signs clash after pullback")
        curve = sew(left, right, "minimal", margin=margin)
        fp = bp.boundary_profile(i).scaled(sign[p])
        fp = PiecewiseCubic(fp.breaks, fp.coeffs + np.array([offset[p], 0, 0, 0]))
        fq = bq.boundary_profile(j).scaled(sign[q])
        fq = PiecewiseCubic(fq.breaks, fq.coeffs + np.array([offset[q], 0, 0, 0]))
        fp = fp.affine_reparam(1 / eps, (1 - eps) / eps)
        fq = fq.affine_reparam(-1 / eps, (1 - eps) / eps)
        profile = _collar_profile(fp, fq, e.critical_torus, eps)
        collars.append(CollarChart(k, curve, profile, e.critical_torus))
    return AssembledManifold(graph, sign, offset, tuple(collars))


# bundle gluing


@dataclass(frozen=True, eq=False)
class BundlePullback:
    germ: CollarGerm
    euler: int
    needs_h1_zero: bool


def bundle_glue_pullback(e: int, rho=(-0.5, 1.0), width: float = EPS) -> BundlePullback:
    """Germ ``(1, rho(r) - e)`` on the disc collar ``r in [1 - width, 1]``.

    ``rho`` is ``(rho(1), rho')`` with ``rho' > 0`` and ``rho(1) < 0``. With the
    fibre first, delta = rho' > 0. When ``rho(1) - e <= 0`` no filling of the form
    ``dtheta + h2 dphi`` exists and the filling curve has to pass through h1 = 0.
    """
    v, k = _rho_pair(rho)
    if k <= 0:
        raise ValueError("rho must be increasing on the collar")
    germ = CollarGerm("right", LutzCurve.polynomial([1.0], [v - e, k], 1.0 - width, 1.0, +1, origin=1.0))
    return BundlePullback(germ, int(e), bool(v - e <= 0))


def fill_bundle(pb: BundlePullback, margin: float = DEFAULT_MARGIN) -> LutzCurve:
    """Extend the pullback germ over the disc: core ``(1, r^2)`` or ``(-1, -r^2)``."""
    s = -1.0 if pb.needs_h1_zero else 1.0
    core = LutzCurve.polynomial([s], [0.0, 0.0, s], A_CORE, 0.25, +1, origin=0.0)
    out, _ = bridge(core, pb.germ.curve, margin=margin)
    return out


# census


@dataclass(frozen=True)
class CriticalComponent:
    type: str  # EllipticOrbit | HyperbolicOrbit | CriticalTorus | KleinBottle
    location: dict
    signature: tuple
    hessian: tuple = ()

    def to_json(self) -> dict:
        return {"type": self.type, "location": self.location, "signature": list(self.signature),
                "hessian": [float(v) for v in self.hessian]}


def _signs(vals, margin: float) -> tuple:
    if np.min(np.abs(vals)) < margin:
        raise DegeneracyError(f"transverse Hessian eigenvalue {np.min(np.abs(vals)):.3g} below margin {margin:g}")
    return tuple("+" if v > 0 else "-" for v in sorted(vals, reverse=True))


def fd_hessian(fn, x: float, y: float, h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of a function of two variables."""
    fxx = (fn(x + h, y) - 2 * fn(x, y) + fn(x - h, y)) / h**2
    fyy = (fn(x, y + h) - 2 * fn(x, y) + fn(x, y - h)) / h**2
    fxy = (fn(x + h, y + h) - fn(x + h, y - h) - fn(x - h, y + h) + fn(x - h, y - h)) / (4 * h * h)
    return np.array([[fxx, fxy], [fxy, fyy]], dtype=float)


def critical_census(assembled: AssembledManifold, h: float = 1e-4, margin: float = 1e-6) -> list[CriticalComponent]:
    """Classify every critical component of the assembled Bott function."""
    out: list[CriticalComponent] = []
    for bid, spec in assembled.graph.blocks.items():
        if spec.kind == "A":
            H = fd_hessian(assembled.block_function(bid), 0.0, 0.0, h)
            ev = np.linalg.eigvalsh(H)
            sig = _signs(ev, margin)
            kind = "EllipticOrbit" if len(set(sig)) == 1 else "HyperbolicOrbit"
            out.append(CriticalComponent(kind, {"block": bid, "chart": "core", "radius": 0.0}, sig, tuple(ev)))
        else:
            for n, p in enumerate(spec.morse):
                sig = {0: ("+", "+"), 1: ("+", "-"), 2: ("-", "-")}[p.index]
                if assembled.block_sign[bid] < 0:
                    sig = tuple("-" if v == "+" else "+" for v in sig)[::-1]
                kind = "HyperbolicOrbit" if p.index == 1 else "EllipticOrbit"
                out.append(CriticalComponent(kind, {"block": bid, "chart": "page", "point": n,
                                                    "morse_index": p.index}, sig))
    for c in assembled.collars:
        for r, _ in find_critical_radii(c.profile.f):
            f2 = (c.profile.f(r + h) - 2 * c.profile.f(r) + c.profile.f(r - h)) / h**2
            sig = _signs(np.array([f2]), margin)
            out.append(CriticalComponent("CriticalTorus", {"edge": c.edge_index, "radius": float(r)}, sig, (f2,)))
    return out


def census_counts(components: list[CriticalComponent]) -> dict:
    counts = {"EllipticOrbit": 0, "HyperbolicOrbit": 0, "CriticalTorus": 0, "KleinBottle": 0}
    for c in components:
        counts[c.type] += 1
    return counts


def check_atlas(assembled: AssembledManifold, samples: int = 2048, margin: float = DEFAULT_MARGIN) -> list[dict]:
    """Contact check of every chart curve in the atlas."""
    rows = []
    for bid, spec in assembled.graph.blocks.items():
        if spec.kind == "A":
            rep = check_contact(spec.core_curve, samples, margin)
            rows.append({"chart": f"block:{bid}", "min_signed_delta": rep.min_signed_delta, "pass": rep.passed})
    for c in assembled.collars:
        rep = check_contact(c.curve, samples, margin)
        rows.append({"chart": f"collar:{c.edge_index}", "min_signed_delta": rep.min_signed_delta, "pass": rep.passed})
    return rows
