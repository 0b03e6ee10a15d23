"""Machine-readable verification reports and the runners that fill them."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import blocks, dynamics, invariants, lutz
from .errors import ConfigError, ReeblabError

SCHEMA = "reeblab.report/1"

# default tolerances per check family
TOL_EXACT = 1e-10  # analytic identities evaluated in floating point
TOL_FD = 1e-6  # identities that go through finite differences
TOL_JET = 1e-9
TOL_DRIFT = 1e-8
TOL_EXACTNESS = 1e-9


def canonical(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical(config).encode()).hexdigest()[:16]


def _plain(obj):
    """Recursively convert numpy scalars, tuples and non-finite floats into JSON values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


_OPS = {"<=": lambda v, t: v <= t, ">=": lambda v, t: v >= t, "==": lambda v, t: v == t,
        ">": lambda v, t: v > t, "<": lambda v, t: v < t}


@dataclass
class VerificationReport:
    command: str
    subject: dict  # kind, id, config, config_hash
    environment: dict  # seed, samples, step
    checks: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def add(self, name: str, value, tolerance, comparison: str = "<=", kind: str = "residual") -> bool:
        """Record ``value <comparison> tolerance``; returns whether it passed."""
        v = float(value) if kind == "residual" else value
        ok = bool(not (isinstance(v, float) and math.isnan(v)) and _OPS[comparison](v, tolerance))
        self.checks.append({"name": name, "kind": kind, "value": v, "tolerance": tolerance,
                            "comparison": comparison, "pass": ok})
        return ok

    def add_error(self, name: str, exc: Exception) -> None:
        self.checks.append({"name": name, "kind": "error", "value": type(exc).__name__, "tolerance": None,
                            "comparison": "no error", "pass": False, "message": str(exc)})

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        return _plain({"schema": SCHEMA, "command": self.command, "subject": self.subject,
                       "environment": self.environment, "checks": self.checks, "details": self.details,
                       "overall": "pass" if self.passed else "fail"})

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"


def new_report(command: str, kind: str, ident: str, config: dict, seed: int | None = None,
               samples: int | None = None, step: float | None = None) -> VerificationReport:
    config = _plain(config)
    subject = {"kind": kind, "id": ident, "config": config,
               "config_hash": config_hash({"command": command, "config": config, "seed": seed,
                                           "samples": samples, "step": step})}
    return VerificationReport(command, subject, {"seed": seed, "samples": samples, "step": step})


# curves and sewing


def verify_curve(rep: VerificationReport, curve: lutz.LutzCurve, samples: int, margin: float, label: str = "") -> None:
    c = lutz.check_contact(curve, samples, margin)
    rep.add(f"{label}min_signed_delta", c.min_signed_delta, margin, ">=")
    if c.crossing is not None:
        rep.details[f"{label}delta_crossing"] = c.crossing


def jet_mismatch(curve: lutz.LutzCurve, germ: lutz.CollarGerm, samples: int = 33) -> float:
    """Max difference of value and first derivative between the sewn curve and a germ on its collar."""
    r = germ.curve.sample_radii(samples)
    a = np.array(curve.jet(r))
    b = np.array(germ.curve.jet(r))
    return float(np.max(np.abs(a - b)))


def sew_report(rep: VerificationReport, left: lutz.CollarGerm, right: lutz.CollarGerm, policy, samples: int,
               margin: float) -> lutz.LutzCurve:
    curve = lutz.sew(left, right, policy, margin=margin)
    verify_curve(rep, curve, samples, margin)
    rep.add("left_jet_mismatch", jet_mismatch(curve, left), TOL_JET)
    rep.add("right_jet_mismatch", jet_mismatch(curve, right), TOL_JET)
    sweep, turns = lutz.winding(curve)
    rep.details["winding"] = {"sweep": sweep, "turns": turns}
    return curve


# atlases


def census_details(components) -> dict:
    return {"counts": blocks.census_counts(components), "components": [c.to_json() for c in components]}


def check_expected_counts(rep: VerificationReport, counts: dict, expected: dict | None) -> None:
    for k, v in sorted((expected or {}).items()):
        rep.add(f"census.{k}", counts.get(k, 0), int(v), "==", kind="count")


def atlas_report(rep: VerificationReport, atlas: blocks.AssembledManifold, samples: int, margin: float,
                 step: float, expected: dict | None = None) -> None:
    for row in blocks.check_atlas(atlas, samples, margin):
        rep.add(f"{row['chart']}.min_signed_delta", row["min_signed_delta"], margin, ">=")
    comps = blocks.critical_census(atlas, h=step, margin=margin)
    rep.details["census"] = census_details(comps)
    check_expected_counts(rep, rep.details["census"]["counts"], expected)


# models


def _census_of_model(model, step: float, margin: float):
    return model.critical_components(h=step, margin=margin)


def model_report(rep: VerificationReport, model: dynamics.FieldModel, samples: int, seed: int, step: float,
                 margin: float, tol: float | None = None, expected: dict | None = None) -> None:
    """Identity, Bott, commutator and rescaling residuals plus model-specific checks."""
    t_exact = TOL_EXACT if tol is None else tol
    t_fd = TOL_FD if tol is None else tol
    ir = dynamics.identity_residuals(model, samples, seed, h=step)
    rep.add("alpha(R) - 1", ir["alpha_R_minus_1"], t_exact)
    rep.add("i_R dalpha", ir["i_R_dalpha"], t_fd)
    rep.add("reeb_tangency", ir["reeb_tangency"], t_exact)
    rep.add("min_signed_volume", ir["min_signed_volume"], margin, ">=")
    rep.add("df(R)", dynamics.bott_residual(model, samples, seed), t_exact)
    cr = dynamics.commutator_residual(model, min(samples, 200), seed, h=step)
    rep.add("[R, Y]", cr["max_norm"], t_fd)
    rep.details["commutator_skipped_critical"] = cr["skipped"]
    if model.theta_field is not None:
        pts = model.sample(np.random.default_rng(seed), min(samples, 200))
        pts = [p for p in pts if abs(float(model.f(p))) > 1e-3]
        if pts:
            rep.add("df(R') after rescaling", dynamics.rescale_check(model, points=pts), t_fd)
        rep.details["rescale_points"] = len(pts)
    extra = _MODEL_CHECKS.get(model.chart)
    if extra is not None:
        extra(rep, model, samples, seed, step, margin, tol)
    comps = _census_of_model(model, step, margin)
    rep.details["census"] = census_details(comps)
    check_expected_counts(rep, rep.details["census"]["counts"], expected)


def _t3_checks(rep, model, samples, seed, step, margin, tol):
    # independent critical-point oracle: sign changes of f' on a fine grid
    z = np.linspace(0.0, 1.0, 20001)
    d = model.profile(z, 1)
    scan = int(np.count_nonzero(np.sign(d[:-1]) != np.sign(d[1:])))
    found = len(model.critical_components(h=step, margin=margin))
    rep.add("critical tori vs f' sign changes", found, scan, "==", kind="count")


def _handle_checks(rep, model, samples, seed, step, margin, tol):
    rep.add("min dH(Y)", model.min_dH_Y(samples, seed), 0.0, ">")


def _klein_checks(rep, model, samples, seed, step, margin, tol):
    rep.add("quotient identification residual", model.quotient_residual(), TOL_EXACT if tol is None else tol)


def _openbook_checks(rep, model, samples, seed, step, margin, tol):
    rep.add("monodromy exactness residual", model.exactness_residual(200), TOL_EXACTNESS if tol is None else tol)
    e = invariants.euler_from_morse(model.page_morse(), model.bindings())
    rep.add("euler coefficient", e.vector[0], -2 * model.g, "==", kind="count")


_MODEL_CHECKS = {
    "t3": _t3_checks,
    "handle": _handle_checks,
    "klein": _klein_checks,
    "openbook-collar": _openbook_checks,
}


def flow_report(rep: VerificationReport, model: dynamics.FieldModel, x0, T: float, step: float,
                tol: float | None = None, convergence: bool = False) -> dynamics.Trajectory:
    traj = dynamics.integrate_reeb(model, x0, T, step)
    rep.add("|f(x(t)) - f(x(0))|", traj.drift, TOL_DRIFT if tol is None else tol)
    rep.details["trajectory"] = {"points": len(traj.times), "t_end": float(traj.times[-1]),
                                 "boundary": traj.boundary, "x0": [float(v) for v in x0]}
    if convergence:
        c = dynamics.convergence_ratio(model, x0, T, step)
        rep.details["convergence"] = c
        if not c["exact"]:
            rep.add("drift ratio at half step", c["ratio"], 8.0, ">=")
    return traj


# invariants


def record_report(rep: VerificationReport, rec: invariants.InvariantRecord) -> invariants.InvariantRecord:
    out = invariants.convert(rec)
    rep.add("H - H' - 1", out.H - out.H_prime - 1, 0, "==", kind="count")
    rep.add("2 d3 + 2 H' + 1", out.d3_twice + 2 * out.H_prime + 1, 0, "==", kind="count")
    rep.details["record"] = out.to_json()
    return out


def reduce_report(rep: VerificationReport, v: list[int]) -> invariants.UnimodularWitness:
    w = invariants.primitive_reduce(v)
    rep.add("det(A)", invariants.det_exact(w.matrix), 1, "==", kind="count")
    e_n = [0] * (len(v) - 1) + [1]
    rep.add("entries of A v - e_n that are nonzero", sum(a != b for a, b in zip(invariants.matvec(w.matrix, v), e_n)),
            0, "==", kind="count")
    rep.add("entries of A A^-1 - I that are nonzero",
            sum(x != y for ra, rb in zip(invariants.matmul(w.matrix, w.inverse), invariants.identity(len(v)))
                for x, y in zip(ra, rb)), 0, "==", kind="count")
    rep.details["witness"] = w.to_json()
    return w


def euler_report(rep: VerificationReport, target: list[int]) -> invariants.EulerPlan:
    plan = invariants.realize_even_euler(target)
    rep.add("witness verified", int(plan.verify()), 1, "==", kind="count")
    rep.details["plan"] = plan.to_json()
    return plan


def guarded(rep: VerificationReport, name: str, fn, *args, **kwargs):
    """Run ``fn``; a library error becomes a failing check instead of propagating."""
    try:
        return fn(*args, **kwargs)
    except ReeblabError as exc:
        if isinstance(exc, ConfigError):
            raise
        rep.add_error(name, exc)
        return None


__all__ = ["VerificationReport", "new_report", "config_hash", "canonical", "verify_curve", "sew_report",
           "atlas_report", "model_report", "flow_report", "record_report", "reduce_report", "euler_report",
           "guarded"]
