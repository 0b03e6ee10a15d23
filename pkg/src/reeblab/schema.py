"""Shape checks for JSON input documents, reported as ConfigError diagnostics."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) or (isinstance(v, float) and v.is_integer())


class Diagnostics:
    def __init__(self):
        self.problems: list[str] = []

    def need(self, cond: bool, path: str, msg: str) -> bool:
        if not cond:
            self.problems.append(f"{path}: {msg}")
        return cond

    def raise_if_any(self, what: str) -> None:
        if self.problems:
            raise ConfigError(f"invalid {what} document:\n  " + "\n  ".join(self.problems))


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def check_curve(doc, path: str = "$", d: Diagnostics | None = None) -> Diagnostics:
    d = d or Diagnostics()
    if not d.need(isinstance(doc, dict), path, "expected an object"):
        return d
    d.need(doc.get("orientation_sign") in (1, -1), f"{path}.orientation_sign", "must be 1 or -1")
    pieces = doc.get("pieces")
    if d.need(isinstance(pieces, list) and len(pieces) > 0, f"{path}.pieces", "expected a non-empty list"):
        for i, p in enumerate(pieces):
            q = f"{path}.pieces[{i}]"
            if not d.need(isinstance(p, dict), q, "expected an object"):
                continue
            br = p.get("breaks")
            d.need(isinstance(br, list) and len(br) == 2 and all(map(_is_num, br)) and br[0] < br[1],
                   f"{q}.breaks", "expected [a, b] with a < b")
            for key in ("coeffs_h1", "coeffs_h2"):
                c = p.get(key)
                d.need(isinstance(c, list) and len(c) == 4 and all(map(_is_num, c)), f"{q}.{key}",
                       "expected 4 numbers")
    return d


def check_germ(doc, path: str = "$") -> None:
    d = Diagnostics()
    if d.need(isinstance(doc, dict), path, "expected an object"):
        d.need(doc.get("side") in ("left", "right"), f"{path}.side", "must be 'left' or 'right'")
        if "curve" in doc:
            check_curve(doc["curve"], f"{path}.curve", d)
        else:
            jet = doc.get("jet")
            d.need(isinstance(jet, list) and len(jet) in (4, 8) and all(map(_is_num, jet)), f"{path}.jet",
                   "expected 4 or 8 numbers (h1, h2, h1', h2', ...)")
            d.need(doc.get("orientation_sign") in (1, -1), f"{path}.orientation_sign", "must be 1 or -1")
            if "endpoint" in doc:
                d.need(_is_num(doc["endpoint"]), f"{path}.endpoint", "expected a number")
    d.raise_if_any("germ")


def check_graph(doc, path: str = "$") -> None:
    d = Diagnostics()
    blocks = doc.get("blocks") if isinstance(doc, dict) else None
    ids = set()
    if d.need(isinstance(blocks, list) and blocks, f"{path}.blocks", "expected a non-empty list"):
        for i, b in enumerate(blocks):
            q = f"{path}.blocks[{i}]"
            if not d.need(isinstance(b, dict), q, "expected an object"):
                continue
            d.need(isinstance(b.get("id"), (str, int)), f"{q}.id", "expected a string or integer id")
            ids.add(b.get("id"))
            d.need(b.get("kind") in ("A", "B"), f"{q}.kind", "must be 'A' or 'B'")
            d.need(isinstance(b.get("params", {}), dict), f"{q}.params", "expected an object")
    edges = doc.get("edges") if isinstance(doc, dict) else None
    if d.need(isinstance(edges, list), f"{path}.edges", "expected a list"):
        for i, e in enumerate(edges):
            q = f"{path}.edges[{i}]"
            if not d.need(isinstance(e, dict), q, "expected an object"):
                continue
            for end in ("from", "to"):
                x = e.get(end)
                if d.need(isinstance(x, dict) and "block" in x and _is_int(x.get("bdry")), f"{q}.{end}",
                          "expected {block, bdry}"):
                    d.need(x["block"] in ids, f"{q}.{end}.block", f"unknown block {x['block']!r}")
            m = e.get("matrix")
            d.need(isinstance(m, list) and len(m) == 2 and all(isinstance(r, list) and len(r) == 2
                                                               and all(map(_is_int, r)) for r in m),
                   f"{q}.matrix", "expected a 2x2 integer array")
            if "critical_torus" in e:
                d.need(isinstance(e["critical_torus"], bool), f"{q}.critical_torus", "expected a boolean")
    d.raise_if_any("block graph")


def check_atlas(doc) -> None:
    d = Diagnostics()
    d.need(doc.get("schema") == "reeblab.atlas/1", "$.schema", "expected 'reeblab.atlas/1'")
    d.need(isinstance(doc.get("graph"), dict), "$.graph", "expected an object")
    d.need(isinstance(doc.get("blocks"), list), "$.blocks", "expected a list")
    collars = doc.get("collars")
    if d.need(isinstance(collars, list), "$.collars", "expected a list"):
        for i, c in enumerate(collars):
            if d.need(isinstance(c, dict), f"$.collars[{i}]", "expected an object"):
                check_curve(c.get("curve"), f"$.collars[{i}].curve", d)
    d.raise_if_any("atlas")
    check_graph(doc["graph"], "$.graph")


def check_record(doc) -> None:
    d = Diagnostics()
    d.need(any(doc.get(k) is not None for k in ("H", "H_prime", "d3")), "$",
           "need at least one of H, H_prime, d3")
    for k in ("H", "H_prime"):
        if doc.get(k) is not None:
            d.need(_is_int(doc[k]), f"$.{k}", "expected an integer")
    if doc.get("d3") is not None:
        d.need(isinstance(doc["d3"], (str, int, float)) and not isinstance(doc["d3"], bool), "$.d3",
               "expected a number or a fraction string such as '-1/2'")
    d.raise_if_any("invariant record")


def parse_int_vector(text: str, name: str) -> list[int]:
    try:
        v = [int(s) for s in text.replace(" ", "").split(",") if s != ""]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated integers, got {text!r}") from None
    if not v:
        raise ConfigError(f"--{name}: empty vector")
    return v


def parse_float_vector(text: str, name: str) -> list[float]:
    try:
        return [float(s) for s in text.replace(" ", "").split(",") if s != ""]
    except ValueError:
        raise ConfigError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
