import json

import pytest

from fedosov.cli import main, spec_from_dict

FLAT = {"schema": "fedosov-problem/1", "chart": {"dim": 1, "potential": "flat"},
        "truncation": {"lambda_order": 2, "jet_order": 6}, "kappa": 1,
        "tasks": [{"op": "star", "f": "z", "g": "zbar"},
                  {"op": "star", "f": 1, "g": [{"z": [2], "zbar": [1], "c": "3/2"}]}]}

FS = {"chart": {"dim": 1, "potential": "fubini_study"},
      "truncation": {"lambda_order": 2, "jet_order": 8}, "kappa": "1",
      "omega": [{"lambda": 1, "u": 0, "v": 1, "coeff": {"re": 0, "im": 1}}],
      "bundle": {"rank": 1, "kind": "holomorphic",
                 "fibre_metric": [[[{"c": 1}, {"z": [1], "zbar": [1], "c": 1}]]]},
      "tasks": [{"op": "star", "f": "z", "g": "zbar"},
                {"op": "metric", "s": ["z"], "s2": ["1"]},
                {"op": "morita_left", "f": "zbar", "s": "z"}]}


def write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, [json.loads(x) for x in out.splitlines()], err


def test_flat_star_of_coordinates(tmp_path, capsys):
    code, recs, _ = run(["star", "--spec", write(tmp_path, FLAT)], capsys)
    assert code == 0
    lam = recs[0]["lambda"]
    assert lam["0"]["terms"] == [{"c": "1", "z": [1], "zbar": [1]}]
    assert lam["1"]["terms"] == [{"c": "2", "z": [0], "zbar": [0]}]
    assert lam["2"] == {"terms": [], "trusted_order": "exact"}
    assert recs[1]["lambda"]["0"]["terms"] == [{"c": "3/2", "z": [2], "zbar": [1]}]


def test_powers_above_cap_are_null(tmp_path, capsys):
    obj = dict(FLAT, truncation={"lambda_order": 2, "jet_order": 6, "total_degree_cap": 3})
    code, recs, _ = run(["star", "--spec", write(tmp_path, obj)], capsys)
    assert code == 0
    lam = recs[0]["lambda"]
    assert lam["1"]["terms"] == [{"c": "2", "z": [0], "zbar": [0]}]
    assert lam["2"] is None


def test_bundle_tasks_run(tmp_path, capsys):
    code, recs, _ = run(["star", "--spec", write(tmp_path, FS)], capsys)
    assert code == 0
    assert [r["op"] for r in recs] == ["star", "metric", "morita_left"]
    assert recs[2]["kind"] == "section"


def test_output_is_byte_stable(tmp_path):
    spec = write(tmp_path, FS)
    outs = []
    for i in range(2):
        target = tmp_path / f"out{i}.jsonl"
        assert main(["star", "--spec", spec, "--output", str(target)]) == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.parametrize("obj", [FLAT, FS])
def test_spec_round_trip(obj):
    spec = spec_from_dict(obj)
    again = spec_from_dict(json.loads(spec.dumps()))
    assert again.to_dict() == spec.to_dict()


def test_dump_r_flat_is_empty(tmp_path, capsys):
    code, recs, _ = run(["dump-r", "--spec", write(tmp_path, FLAT)], capsys)
    assert code == 0
    assert recs == []


def test_dump_r_fubini_study(tmp_path, capsys):
    obj = {"chart": {"dim": 1, "potential": "fubini_study"},
           "truncation": {"lambda_order": 2, "jet_order": 8}, "kappa": 1, "tasks": []}
    code, recs, _ = run(["dump-r", "--spec", write(tmp_path, obj)], capsys)
    assert code == 0
    assert recs
    assert min(r["total_degree"] for r in recs) == 3
    degrees = [r["total_degree"] for r in recs]
    assert degrees == sorted(degrees)
    for r in recs:
        holo = any(r["y"]) or any(f < 1 for f in r["forms"])
        anti = any(r["ybar"]) or any(f >= 1 for f in r["forms"])
        assert holo and anti, r["key"]


def test_type_20_omega_rejected(tmp_path, capsys):
    obj = {"chart": {"dim": 2, "potential": "flat"},
           "truncation": {"lambda_order": 2, "jet_order": 6}, "kappa": 1,
           "omega": [{"lambda": 1, "u": 0, "v": 1, "coeff": 1}], "tasks": []}
    code, recs, err = run(["star", "--spec", write(tmp_path, obj)], capsys)
    assert code == 2
    assert recs == []
    assert "NonTypeOneOne" in err or "type (1,1)" in err


def test_low_jet_order_rejected(tmp_path, capsys):
    obj = {"chart": {"dim": 1, "potential": "fubini_study"},
           "truncation": {"lambda_order": 3, "jet_order": 5}, "kappa": 1, "tasks": []}
    code, _, err = run(["star", "--spec", write(tmp_path, obj)], capsys)
    assert code == 2
    assert "JetOrderExhausted" in err


def test_missing_file(tmp_path, capsys):
    code, _, err = run(["star", "--spec", str(tmp_path / "nope.json")], capsys)
    assert code == 2
    assert err


def test_malformed_spec_reports_paths(tmp_path, capsys):
    obj = {"chart": {"dim": 0, "potential": "flat"}, "truncation": {"lambda_order": -1},
           "tasks": [{"op": "bogus"}]}
    code, _, err = run(["star", "--spec", write(tmp_path, obj)], capsys)
    assert code == 2
    diags = [json.loads(x) for x in err.splitlines()]
    assert all(d["error"] == "spec" and d["path"] for d in diags)


def test_verify_exit_codes(tmp_path, capsys):
    spec = write(tmp_path, FLAT)
    code, recs, _ = run(["verify", "--spec", spec, "--suite", "graded,geometry"], capsys)
    assert code == 0
    assert recs and all(r["status"] == "pass" for r in recs)
    code, _, _ = run(["verify", "--spec", spec, "--suite", "nonsense"], capsys)
    assert code == 2


def test_verify_sabotage_fails(tmp_path, capsys):
    obj = {"chart": {"dim": 1, "potential": "fubini_study"},
           "truncation": {"lambda_order": 2, "jet_order": 8}, "kappa": 1, "tasks": []}
    spec = write(tmp_path, obj)
    code, recs, _ = run(["verify", "--spec", spec, "--suite", "geometry",
                         "--debug-sabotage-christoffel"], capsys)
    assert code == 1
    failed = {r["id"] for r in recs if r["status"] == "fail"}
    assert "laplace-R" in failed
