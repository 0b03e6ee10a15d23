"""``reeblab`` command line: build models and atlases, run checks, write JSON reports.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import blocks, catalog, dynamics, invariants, lutz, reports, schema
from .dynamics import DEFAULT_STEP, FD_STEP, LutzChartModel
from .errors import ConfigError, ReeblabError
from .lutz import DEFAULT_MARGIN

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--samples", type=int, default=None, help="sample count for randomized checks")
    p.add_argument("--tol", type=float, default=None, help="override residual tolerances")
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="nondegeneracy margin")
    p.add_argument("--seed", type=int, default=None, help="PRNG seed (falls back to $REEBLAB_SEED, then 0)")
    p.add_argument("--step", type=float, default=None, help="integration or finite-difference step")
    p.add_argument("-o", "--output", default=None, help="report path (stdout when omitted)")
    p.add_argument("--expect", default=None, help="expected census counts, e.g. EllipticOrbit=2,CriticalTorus=1")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="reeblab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-chart", parents=[common], help="contact check of one Lutz curve")
    p.add_argument("target", help="curve JSON, 'alpha_a' or 'beta' (with --n)")
    p.add_argument("--n", type=int, default=1)

    p = sub.add_parser("sew", parents=[common], help="sew two collar germs into one contact curve")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--policy", default="minimal", help="'minimal' or 'extra_turns(k)'")
    p.add_argument("--emit", default=None, help="write the sewn curve JSON here")

    p = sub.add_parser("assemble", parents=[common], help="glue a block graph into an atlas")
    p.add_argument("graph")
    p.add_argument("--emit", default=None, help="write the atlas JSON here")

    p = sub.add_parser("census", parents=[common], help="critical components of an atlas or catalog model")
    p.add_argument("target")

    p = sub.add_parser("flow", parents=[common], help="integrate the Reeb field and track f")
    p.add_argument("target")
    p.add_argument("--x0", default=None, help="comma-separated start point")
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--emit", default=None, help="write the trajectory CSV here")
    p.add_argument("--record-every", type=int, default=100)
    p.add_argument("--convergence", action="store_true", help="also compare drift at half the step")

    p = sub.add_parser("verify", parents=[common], help="all residual checks for a model, atlas or curve")
    p.add_argument("target")

    p = sub.add_parser("invariants", parents=[common], help="complete and check an H / H' / d3 record")
    p.add_argument("record")

    p = sub.add_parser("reduce", parents=[common], help="unimodular matrix sending a primitive vector to e_n")
    p.add_argument("--vector", required=True)

    p = sub.add_parser("realize-euler", parents=[common], help="plan realizing an even Euler class")
    p.add_argument("--target", required=True)

    p = sub.add_parser("catalog", parents=[common], help="list or build catalog models")
    p.add_argument("action", choices=["list", "build"])
    p.add_argument("name", nargs="?")
    return ap


# helpers


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("REEBLAB_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"REEBLAB_SEED must be an integer, got {env!r}") from None


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _extra_params(extra: list[str]) -> dict:
    """``--key value`` or ``--key=value`` pairs left over by argparse become model parameters."""
    out: dict = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            val = extra[i + 1]
            i += 2
        else:
            raise ConfigError(f"parameter {tok} needs a value")
        out[key.replace("-", "_")] = _value(val)
    return out


def _expect(args, doc: dict | None = None) -> dict | None:
    exp = dict((doc or {}).get("expect", {}))
    if args.expect:
        for item in args.expect.split(","):
            if "=" not in item:
                raise ConfigError(f"--expect: expected Name=count, got {item!r}")
            k, v = item.split("=", 1)
            if k not in ("EllipticOrbit", "HyperbolicOrbit", "CriticalTorus", "KleinBottle"):
                raise ConfigError(f"--expect: unknown component type {k!r}")
            try:
                exp[k] = int(v)
            except ValueError:
                raise ConfigError(f"--expect: count for {k} must be an integer") from None
    return exp or None


def _germ(doc: dict) -> lutz.CollarGerm:
    schema.check_germ(doc)
    if "curve" in doc:
        return lutz.CollarGerm(doc["side"], lutz.LutzCurve.from_json(doc["curve"]))
    return lutz.CollarGerm.from_jet(doc["side"], doc["jet"], int(doc["orientation_sign"]), doc.get("endpoint"))


def _curve(doc: dict) -> lutz.LutzCurve:
    d = schema.check_curve(doc)
    d.raise_if_any("curve")
    try:
        return lutz.LutzCurve.from_json(doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid curve document: {exc}") from None


def _graph(doc: dict) -> blocks.BlockGraph:
    schema.check_graph(doc)
    try:
        return blocks.BlockGraph.from_json(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid block graph document: {exc}") from None


def _atlas(doc: dict) -> blocks.AssembledManifold:
    schema.check_atlas(doc)
    try:
        return blocks.AssembledManifold.from_json(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid atlas document: {exc}") from None


def _resolve(target: str, params: dict):
    """Classify a target as ``('model', name, model)``, ``('atlas', ...)``, ``('graph', ...)`` or ``('curve', ...)``."""
    if target in catalog.CATALOG:
        return "model", target, catalog.build(target, **params), {"model": target, "params": params}
    path = Path(target)
    if not path.exists():
        raise ConfigError(f"{target!r} is neither a catalog model ({', '.join(catalog.CATALOG)}) nor a file")
    doc = schema.load_json(path)
    if doc.get("schema") == "reeblab.model/1":
        model = catalog.model_from_json(doc)
        return "model", doc["model"], model, doc
    if doc.get("schema") == "reeblab.atlas/1":
        return "atlas", path.name, _atlas(doc), doc
    if "blocks" in doc and "edges" in doc:
        return "graph", path.name, _graph(doc), doc
    if "pieces" in doc:
        return "curve", path.name, _curve(doc), doc
    raise ConfigError(f"{target}: unrecognised document (expected a model, atlas, block graph or curve)")


def _write(text: str, dest: str | None) -> None:
    if dest is None:
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def _dump(obj) -> str:
    return json.dumps(reports._plain(obj), sort_keys=True, indent=2) + "\n"


def _start_point(model, seed: int) -> np.ndarray:
    if hasattr(model, "point"):
        # handle: a point on the belt orbit, which stays in the domain for all time
        return model.point(np.array([1.0, 0.0, 0.0]), 0.0)
    return model.sample(np.random.default_rng(seed), 1)[0]


# subcommands


def cmd_verify_chart(args, params):
    samples = args.samples or 2048
    if args.target == "alpha_a":
        curve, cfg = lutz.alpha_a_curve(), {"curve": "alpha_a"}
    elif args.target == "beta":
        curve, cfg = lutz.beta_curve(args.n), {"curve": "beta", "n": args.n}
    else:
        doc = schema.load_json(args.target)
        curve, cfg = _curve(doc), doc
    rep = reports.new_report("verify-chart", "curve", args.target, cfg, None, samples, None)
    reports.verify_curve(rep, curve, samples, args.margin)
    return rep


def cmd_sew(args, params):
    samples = args.samples or 2048
    ldoc, rdoc = schema.load_json(args.left), schema.load_json(args.right)
    left, right = _germ(ldoc), _germ(rdoc)
    rep = reports.new_report("sew", "curve", f"{Path(args.left).name}+{Path(args.right).name}",
                             {"left": ldoc, "right": rdoc, "policy": args.policy, "margin": args.margin},
                             None, samples, None)
    curve = reports.guarded(rep, "sew", reports.sew_report, rep, left, right, args.policy, samples, args.margin)
    if curve is not None and args.emit:
        _write(_dump(curve.to_json()), args.emit)
    return rep


def cmd_assemble(args, params):
    samples = args.samples or 2048
    step = args.step or FD_STEP
    doc = schema.load_json(args.graph)
    graph = _graph(doc)
    rep = reports.new_report("assemble", "atlas", Path(args.graph).name, {"graph": doc, "margin": args.margin},
                             None, samples, step)
    atlas = reports.guarded(rep, "glue", blocks.glue, graph, args.margin)
    if atlas is not None:
        reports.guarded(rep, "census", reports.atlas_report, rep, atlas, samples, args.margin, step, _expect(args, doc))
        if args.emit:
            _write(_dump(atlas.to_json()), args.emit)
    return rep


def cmd_census(args, params):
    step = args.step or FD_STEP
    kind, ident, obj, cfg = _resolve(args.target, params)
    rep = reports.new_report("census", kind, ident, cfg, None, None, step)
    if kind == "graph":
        obj = reports.guarded(rep, "glue", blocks.glue, obj, args.margin)
    if kind in ("graph", "atlas") and obj is not None:
        comps = reports.guarded(rep, "census", blocks.critical_census, obj, step, args.margin)
    elif kind == "model":
        comps = reports.guarded(rep, "census", obj.critical_components, h=step, margin=args.margin)
    elif kind == "curve":
        raise ConfigError("census needs a model, atlas or block graph; a bare curve has no Bott function")
    else:
        comps = None
    if comps is not None:
        rep.details["census"] = reports.census_details(comps)
        counts = rep.details["census"]["counts"]
        rep.add("critical components found", sum(counts.values()), 1, ">=", kind="count")
        reports.check_expected_counts(rep, counts, _expect(args, cfg if kind != "model" else None))
    return rep


def cmd_flow(args, params):
    seed = _seed(args)
    step = args.step or DEFAULT_STEP
    kind, ident, model, cfg = _resolve(args.target, params)
    if kind != "model":
        raise ConfigError("flow needs a catalog model or a reeblab.model/1 document")
    if args.x0 is not None:
        x0 = np.array(schema.parse_float_vector(args.x0, "x0"))
        if len(x0) != model.dim:
            raise ConfigError(f"--x0 needs {model.dim} coordinates for {ident}")
    else:
        x0 = _start_point(model, seed)
    rep = reports.new_report("flow", "model", ident, {**cfg, "x0": list(map(float, x0)), "T": args.T},
                             seed, None, step)
    traj = reports.guarded(rep, "integrate", reports.flow_report, rep, model, x0, args.T, step, args.tol,
                           args.convergence)
    if traj is not None and args.emit:
        coords = [f"x{i}" for i in range(model.dim)]
        rows = traj.to_csv_rows()
        keep = [r for k, r in enumerate(rows) if k % max(1, args.record_every) == 0 or k == len(rows) - 1]
        with open(args.emit, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *coords, "f"])
            w.writerows([[repr(v) for v in r] for r in keep])
    return rep


def cmd_verify(args, params):
    seed = _seed(args)
    step = args.step or FD_STEP
    kind, ident, obj, cfg = _resolve(args.target, params)
    if kind == "model":
        samples = args.samples or 1000
        rep = reports.new_report("verify", "model", ident, cfg, seed, samples, step)
        reports.guarded(rep, "model checks", reports.model_report, rep, obj, samples, seed, step, args.margin,
                        args.tol, _expect(args))
    elif kind in ("atlas", "graph"):
        samples = args.samples or 2048
        rep = reports.new_report("verify", "atlas", ident, cfg, seed, samples, step)
        atlas = obj if kind == "atlas" else reports.guarded(rep, "glue", blocks.glue, obj, args.margin)
        if atlas is not None:
            reports.guarded(rep, "atlas checks", reports.atlas_report, rep, atlas, samples, args.margin, step,
                            _expect(args, cfg))
    else:
        samples = args.samples or 2048
        rep = reports.new_report("verify", "curve", ident, cfg, seed, samples, step)
        reports.verify_curve(rep, obj, samples, args.margin)
        chart = LutzChartModel(obj, lutz.BottProfile.from_functions(lambda r: r, lambda r: 1.0 + 0 * r,
                                                                    *obj.interval))
        # the curve is only C^1 across piece breaks, where a difference stencil loses an order
        pts = chart.sample(np.random.default_rng(seed), min(samples, 500))
        gap = np.min(np.abs(pts[:, :1] - obj.breaks[None, :]), axis=1)
        pts = pts[gap > 4 * step]
        rep.details["identity_points"] = int(len(pts))
        ir = reports.guarded(rep, "chart identities", dynamics.identity_residuals, chart, points=pts, h=step)
        if ir is not None:
            rep.add("alpha(R) - 1", ir["alpha_R_minus_1"], reports.TOL_EXACT if args.tol is None else args.tol)
            rep.add("i_R dalpha", ir["i_R_dalpha"], reports.TOL_FD if args.tol is None else args.tol)
    return rep


def cmd_invariants(args, params):
    doc = schema.load_json(args.record)
    schema.check_record(doc)
    try:
        rec = invariants.InvariantRecord.from_json(doc)
    except ReeblabError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid invariant record: {exc}") from None
    rep = reports.new_report("invariants", "record", Path(args.record).name, doc)
    reports.guarded(rep, "convert", reports.record_report, rep, rec)
    return rep


def cmd_reduce(args, params):
    v = schema.parse_int_vector(args.vector, "vector")
    rep = reports.new_report("reduce", "vector", args.vector, {"vector": v})
    reports.guarded(rep, "primitive_reduce", reports.reduce_report, rep, v)
    return rep


def cmd_realize_euler(args, params):
    v = schema.parse_int_vector(args.target, "target")
    rep = reports.new_report("realize-euler", "euler", args.target, {"target": v})
    reports.guarded(rep, "realize_even_euler", reports.euler_report, rep, v)
    return rep


def cmd_catalog(args, params):
    if args.action == "list":
        _write(_dump(catalog.catalog_list()), args.output)
        return None
    if not args.name:
        raise ConfigError("catalog build needs a model name")
    model = catalog.build(args.name, **params)
    _write(_dump(catalog.model_to_json(args.name, model)), args.output)
    return None


COMMANDS = {
    "verify-chart": cmd_verify_chart, "sew": cmd_sew, "assemble": cmd_assemble, "census": cmd_census,
    "flow": cmd_flow, "verify": cmd_verify, "invariants": cmd_invariants, "reduce": cmd_reduce,
    "realize-euler": cmd_realize_euler, "catalog": cmd_catalog,
}
_TAKES_PARAMS = {"verify-chart", "census", "flow", "verify", "catalog"}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if extra and args.command not in _TAKES_PARAMS:
            raise ConfigError(f"unrecognized arguments: {' '.join(extra)}")
        params = _extra_params(extra)
        rep = COMMANDS[args.command](args, params)
    except ConfigError as exc:
        print(f"reeblab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReeblabError as exc:
        print(f"reeblab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if rep is None:
        return EXIT_OK
    _write(rep.dumps(), args.output)
    if not rep.passed:
        failed = [c["name"] for c in rep.checks if not c["pass"]]
        print(f"reeblab: {len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
