import json
from pathlib import Path

import pytest

from reeblab.cli import run

DATA = Path(__file__).parent / "data"


def report(path) -> dict:
    return json.loads(Path(path).read_text())


def test_verify_chart_alpha_a(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify-chart", "alpha_a", "-o", str(out)]) == 0
    rep = report(out)
    assert rep["overall"] == "pass" and rep["schema"] == "reeblab.report/1"
    assert rep["environment"]["samples"] == 2048


def test_verify_t3_passes_every_check(tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", "t3", "--n", "1", "--samples", "200", "-o", str(out)]) == 0
    rep = report(out)
    assert rep["subject"]["config"] == {"model": "t3", "params": {"n": 1}}
    assert all(c["pass"] for c in rep["checks"])
    # every numeric check carries its tolerance
    assert all(c["tolerance"] is not None for c in rep["checks"])


def test_reduce_non_primitive_exits_1(tmp_path):
    out = tmp_path / "r.json"
    assert run(["reduce", "--vector", "4,6", "-o", str(out)]) == 1
    rep = report(out)
    assert rep["overall"] == "fail" and rep["checks"][0]["value"] == "GcdError"


def test_reduce_primitive(tmp_path):
    out = tmp_path / "r.json"
    assert run(["reduce", "--vector", "3,5,7", "-o", str(out)]) == 0
    w = report(out)["details"]["witness"]
    assert w["det"] == 1 and w["target"] == [0, 0, 1]


def test_malformed_inputs_exit_2(tmp_path, capsys):
    assert run(["reduce", "--vector", "4,x"]) == 2
    assert run(["verify", "no-such-model"]) == 2
    assert run(["frobnicate"]) == 2
    bad = tmp_path / "g.json"
    bad.write_text(json.dumps({"blocks": [{"id": "A", "kind": "Q"}], "edges": []}))
    assert run(["assemble", str(bad)]) == 2
    assert "$.blocks[0].kind" in capsys.readouterr().err
    bad.write_text("{not json")
    assert run(["assemble", str(bad)]) == 2
    assert run(["verify", "t3", "--n"]) == 2
    assert run(["verify", "t3", "--bogus", "1"]) == 2


def test_env_seed_fallback_and_byte_stability(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["verify", "s3", "--samples", "50", "--seed", "9", "-o", str(a)]) == 0
    monkeypatch.setenv("REEBLAB_SEED", "9")
    assert run(["verify", "s3", "--samples", "50", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert report(a)["environment"]["seed"] == 9
    monkeypatch.setenv("REEBLAB_SEED", "nine")
    assert run(["verify", "s3", "--samples", "50"]) == 2


def test_different_seed_changes_config_hash(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["verify", "s3", "--samples", "20", "--seed", "1", "-o", str(a)])
    run(["verify", "s3", "--samples", "20", "--seed", "2", "-o", str(b)])
    assert report(a)["subject"]["config_hash"] != report(b)["subject"]["config_hash"]


def test_assemble_census_verify_roundtrip(tmp_path):
    atlas = tmp_path / "atlas.json"
    out = tmp_path / "r.json"
    assert run(["assemble", str(DATA / "two_a_blocks.json"), "--emit", str(atlas), "-o", str(out)]) == 0
    rep = report(out)
    assert rep["details"]["census"]["counts"]["EllipticOrbit"] == 2
    assert run(["census", str(atlas), "--expect", "EllipticOrbit=2", "-o", str(out)]) == 0
    assert run(["census", str(atlas), "--expect", "EllipticOrbit=3", "-o", str(out)]) == 1
    assert run(["verify", str(atlas), "-o", str(out)]) == 0


def test_sew_and_verify_curve(tmp_path):
    curve = tmp_path / "c.json"
    out = tmp_path / "r.json"
    assert run(["sew", str(DATA / "left_germ.json"), str(DATA / "right_germ.json"), "--emit", str(curve),
                "-o", str(out)]) == 0
    names = {c["name"] for c in report(out)["checks"]}
    assert {"min_signed_delta", "left_jet_mismatch", "right_jet_mismatch"} <= names
    assert run(["verify-chart", str(curve), "-o", str(out)]) == 0
    assert run(["verify", str(curve), "-o", str(out)]) == 0


def test_sew_incompatible_germs_exit_1(tmp_path):
    right = tmp_path / "r.json"
    right.write_text(json.dumps({"side": "right", "jet": [1, 0, 0, -1], "orientation_sign": -1}))
    assert run(["sew", str(DATA / "left_germ.json"), str(right), "-o", str(tmp_path / "o.json")]) == 1


def test_flow_writes_csv(tmp_path):
    csv = tmp_path / "t.csv"
    out = tmp_path / "r.json"
    assert run(["flow", "t3", "--n", "2", "--T", "1", "--step", "0.01", "--record-every", "10",
                "--emit", str(csv), "-o", str(out)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "t,x0,x1,x2,f"
    assert len(lines) == 12
    assert report(out)["checks"][0]["value"] == 0.0


def test_flow_bad_start_point(tmp_path):
    assert run(["flow", "handle", "--x0", "1,0,0"]) == 2
    assert run(["flow", "handle", "--x0", "1,0,0,0.99", "-o", str(tmp_path / "r.json")]) == 1


def test_invariants_record(tmp_path):
    out = tmp_path / "r.json"
    assert run(["invariants", str(DATA / "record.json"), "-o", str(out)]) == 0
    assert report(out)["details"]["record"]["d3"] == "-7/2"
    assert run(["invariants", str(DATA / "bad_record.json"), "-o", str(out)]) == 1
    empty = tmp_path / "e.json"
    empty.write_text("{}")
    assert run(["invariants", str(empty)]) == 2


def test_realize_euler(tmp_path):
    out = tmp_path / "r.json"
    assert run(["realize-euler", "--target", "4,6,8", "-o", str(out)]) == 0
    plan = report(out)["details"]["plan"]
    assert plan["k"] == 1 and plan["verified"]
    assert run(["realize-euler", "--target", "3,6", "-o", str(out)]) == 1
    assert "must be even" in report(out)["checks"][0]["message"]


def test_catalog_list_and_build(tmp_path, capsys):
    assert run(["catalog", "list"]) == 0
    names = [m["name"] for m in json.loads(capsys.readouterr().out)]
    assert names == ["s3", "t3", "handle", "klein", "openbook"]
    model = tmp_path / "m.json"
    assert run(["catalog", "build", "t3", "--n", "2", "-o", str(model)]) == 0
    assert report(model)["params"]["n"] == 2
    assert run(["catalog", "build", "handle", "--rho0", "1.0", "-o", str(model)]) == 0
    out = tmp_path / "r.json"
    assert run(["verify", str(model), "--samples", "100", "-o", str(out)]) == 0
    assert run(["catalog", "build", "klein", "--eps", "0.1", "--perturbed", "false", "-o", str(model)]) == 0
    assert run(["catalog", "build"]) == 2
    assert run(["catalog", "build", "t3", "--n", "0"]) == 1


@pytest.mark.parametrize("model", ["s3", "handle", "klein", "openbook"])
def test_verify_catalog_models(model, tmp_path):
    out = tmp_path / "r.json"
    assert run(["verify", model, "--samples", "100", "-o", str(out)]) == 0
