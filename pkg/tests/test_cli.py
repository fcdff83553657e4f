"""Command-line behaviour: reports, round-trips, exit codes, determinism."""

from __future__ import annotations

import json

import pytest

from pearl_floer.cli import main
from pearl_floer.fileformat import dumps_datum, load_datum, save_datum
from pearl_floer.floer import FloerDatum, Generator
from pearl_floer.sphere import sphere_datum


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_sphere_reports_indices_and_actions(capsys):
    code, out, _ = run(
        capsys, "analyze", "--model", "sphere", "--dim", "3", "--resolution", "32"
    )
    assert code == 0
    assert "double points: 1" in out
    assert "index 4" in out
    assert "index -1" in out
    assert "note:" in out


def test_analyze_json_payload(capsys):
    code, out, _ = run(
        capsys,
        "analyze",
        "--model",
        "sphere",
        "--dim",
        "2",
        "--resolution",
        "32",
        "--format",
        "json",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["ambient_dim"] == 2
    records = payload["double_points"][0]["records"]
    assert [r["index"] for r in records] == [3, -1]
    assert records[0]["action"] == pytest.approx(1.0, abs=1e-8)
    assert payload["frame_probe"]["max_angle_deviation"] < 1e-9
    gen_ids = [g["id"] for g in payload["datum"]["generators"]]
    assert gen_ids == ["dp0ab", "dp0ba", "max", "min"]


def test_analyze_output_is_deterministic(capsys):
    args = ("analyze", "--model", "figure_eight", "--resolution", "64")
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_analyze_circle_exits_one(capsys):
    code, _, err = run(capsys, "analyze", "--model", "circle")
    assert code == 1
    assert "not exact" in err


def test_analyze_unknown_model_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["analyze", "--model", "torus"])
    assert info.value.code == 2


def test_analyze_fixed_dimension_mismatch(capsys):
    code, _, err = run(capsys, "analyze", "--model", "circle", "--dim", "2")
    assert code == 2
    assert "fixed ambient dimension" in err


def test_analyze_require_strong(capsys):
    code, out, _ = run(
        capsys,
        "analyze",
        "--model",
        "sphere",
        "--dim",
        "3",
        "--resolution",
        "32",
        "--require-strong",
    )
    assert code == 0
    assert "positivity (strong): ok" in out
    # the curve's positive pair sits in degree 2, below the strong threshold 3
    code, out, _ = run(
        capsys,
        "analyze",
        "--model",
        "figure_eight",
        "--resolution",
        "64",
        "--require-strong",
    )
    assert code == 1
    assert "positivity (strong): FAILED" in out


def test_analyze_export_writes_datum(capsys, tmp_path):
    target = tmp_path / "eight.fld"
    code, out, _ = run(
        capsys,
        "analyze",
        "--model",
        "figure_eight",
        "--resolution",
        "64",
        "--export",
        str(target),
    )
    assert code == 0
    datum = load_datum(target)
    assert sorted(g.id for g in datum.generators) == ["dp0ab", "dp0ba"]


def test_export_then_homology_round_trip(capsys, tmp_path):
    path = tmp_path / "s3.fld"
    code, out, _ = run(capsys, "export", "--model", "sphere", "--dim", "3", str(path))
    assert code == 0
    assert "note:" in out
    code, out, _ = run(capsys, "homology", str(path), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["ranks"] == {"-1": 0, "0": 0, "3": 0, "4": 0}
    assert payload["total_rank"] == 0


def test_homology_rejects_invalid_datum(capsys, tmp_path):
    bad = FloerDatum(
        ambient_dim=2,
        generators=(
            Generator("p", "pair", 3, action=1.0, partner="p"),
        ),
        differential=(),
    )
    path = tmp_path / "bad.fld"
    path.write_text(dumps_datum(bad), encoding="utf-8")
    code, _, err = run(capsys, "homology", str(path))
    assert code == 1
    assert "validation failed" in err


def test_homology_rejects_wrong_version(capsys, tmp_path):
    path = tmp_path / "v2.fld"
    data = json.loads(dumps_datum(sphere_datum(2)))
    data["version"] = 2
    path.write_text(json.dumps(data), encoding="utf-8")
    code, _, err = run(capsys, "homology", str(path))
    assert code == 2
    assert "unsupported format version" in err


def test_homology_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "homology", str(tmp_path / "none.fld"))
    assert code == 2
    assert "cannot read" in err


def test_spectral_pages_and_inequality(capsys, tmp_path):
    path = tmp_path / "s3.fld"
    save_datum(sphere_datum(3), path)
    code, out, _ = run(capsys, "spectral", str(path), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["rank_inequality"] == {
        "card_R": 2,
        "sum_betti": 2,
        "sum_HF": 0,
        "holds": True,
    }
    assert payload["e_infinity"] == {}
    assert len(payload["pages"][1]) == 4


def test_audit_reports_totals_and_exclusions(capsys, tmp_path):
    path = tmp_path / "pattern.json"
    path.write_text(
        json.dumps(
            [
                {"type": "strip", "ind_u": 1, "jumps": 1},
                {"type": "ghost", "ind_pq": 3},
            ]
        ),
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "audit", str(path), "--dim", "4")
    assert code == 0
    assert "total drop: >= 5" in out
    assert "excluded from differential counts: yes" in out
    assert "excluded from square counts: yes" in out


def test_audit_rejects_inconsistent_pattern(capsys, tmp_path):
    path = tmp_path / "pattern.json"
    path.write_text(json.dumps([{"type": "ghost", "ind_pq": 1}]), encoding="utf-8")
    code, _, err = run(capsys, "audit", str(path), "--dim", "4")
    assert code == 1
    assert "error:" in err


def test_verify_map_identity_is_quasi_iso(capsys, tmp_path):
    path = tmp_path / "s2.fld"
    save_datum(sphere_datum(2), path)
    mapping = tmp_path / "id.json"
    mapping.write_text(
        json.dumps(
            [{"from": g.id, "to": g.id} for g in sphere_datum(2).generators]
        ),
        encoding="utf-8",
    )
    code, out, _ = run(capsys, "verify-map", str(path), str(path), str(mapping))
    assert code == 0
    assert "chain map: yes" in out
    assert "quasi-isomorphism: yes" in out


def test_verify_map_zero_map_answer_is_a_report(capsys, tmp_path):
    datum = FloerDatum(
        ambient_dim=2,
        generators=(Generator("a", "crit", 0), Generator("b", "crit", 2)),
        differential=(),
    )
    path = tmp_path / "pair.fld"
    path.write_text(dumps_datum(datum), encoding="utf-8")
    mapping = tmp_path / "zero.json"
    mapping.write_text("[]", encoding="utf-8")
    code, out, _ = run(capsys, "verify-map", str(path), str(path), str(mapping))
    assert code == 0
    assert "chain map: yes" in out
    assert "quasi-isomorphism: no" in out


def test_verify_map_degree_violation_reported_not_fatal(capsys, tmp_path):
    path = tmp_path / "s2.fld"
    save_datum(sphere_datum(2), path)
    mapping = tmp_path / "skew.json"
    mapping.write_text(json.dumps([{"from": "min", "to": "max"}]), encoding="utf-8")
    code, out, _ = run(capsys, "verify-map", str(path), str(path), str(mapping))
    assert code == 0
    assert "chain map: no" in out
    assert "reason:" in out


def test_verify_map_unknown_generator(capsys, tmp_path):
    path = tmp_path / "s2.fld"
    save_datum(sphere_datum(2), path)
    mapping = tmp_path / "ghost.json"
    mapping.write_text(json.dumps([{"from": "zzz", "to": "min"}]), encoding="utf-8")
    code, _, err = run(capsys, "verify-map", str(path), str(path), str(mapping))
    assert code == 2
    assert "not a generator" in err
