"""End-to-end checks of the command-line front end, run in process."""

import json
import math

import pytest

from cavity_teleport.cli import main


def run_csv(path):
    """Split an output file into (header, data_rows, comment_lines)."""
    lines = path.read_text(encoding="utf-8").splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    data = [ln.split(",") for ln in lines if ln and not ln.startswith("#")]
    return data[0], data[1:], comments


def comment_value(comments, key):
    for ln in comments:
        name, _, value = ln.lstrip("# ").partition("=")
        if name == key:
            return value
    raise KeyError(key)


def test_table_schema_and_totals(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["table", "--out", str(out), "--theta", "1.1"]) == 0
    header, rows, comments = run_csv(out)
    assert header == ["fock", "atom2_outcome", "verdict", "p_asymptotic", "p_exact", "delta"]
    assert len(rows) == 5
    assert [(r[0], r[1]) for r in rows] == [
        ("2", "g"),
        ("1", "e"),
        ("1", "g"),
        ("0", "g"),
        ("0", "e"),
    ]
    assert {r[2] for r in rows} == {"successful-pending-positions", "unsuccessful"}
    assert float(comment_value(comments, "total_asymptotic")) == pytest.approx(1.0, abs=1e-12)
    assert float(comment_value(comments, "total_exact")) == pytest.approx(1.0, abs=1e-12)
    assert float(comment_value(comments, "success_asymptotic")) == pytest.approx(0.5, abs=1e-12)
    assert sum(float(r[3]) for r in rows) == pytest.approx(1.0, abs=1e-12)


def test_table_to_stdout(capsys):
    assert main(["table"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("fock,atom2_outcome,verdict")
    assert "# failure_exact=" in captured.out


def test_sample_schema_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    argv = ["sample", "--seed", "99", "--shots", "40", "--eps-tau1", "10"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    header, rows, comments = run_csv(out1)
    assert header == [
        "run_index",
        "seed",
        "fock",
        "atom2_outcome",
        "x1_sigma",
        "x2_sigma",
        "verdict",
        "fidelity_to_alpha",
    ]
    assert len(rows) == 40
    assert [r[0] for r in rows] == [str(i) for i in range(40)]
    for row in rows:
        assert row[2] in {"0", "1", "2"}
        assert row[3] in {"e", "g"}
        assert row[6] in {"success", "success-after-correction", "failure"}
        fid = float(row[7])  # 'nan' must round-trip
        assert math.isnan(fid) or 0.0 <= fid <= 1.0
        if row[6] == "failure":
            assert math.isnan(fid) and math.isnan(float(row[4]))
    assert comment_value(comments, "n_runs") == "40"
    n_success = int(comment_value(comments, "n_success"))
    assert n_success == sum(1 for r in rows if r[6] != "failure")
    assert float(comment_value(comments, "mean_corrected_fidelity")) > 0.9


def test_sample_seed_changes_output(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["sample", "--shots", "30", "--out", str(out1)]) == 0
    assert main(["sample", "--shots", "30", "--seed", "7", "--out", str(out2)]) == 0
    assert out1.read_bytes() != out2.read_bytes()


def test_fidelity_map_schema(tmp_path):
    out = tmp_path / "map.csv"
    assert main(["fidelity-map", "--grid-points", "21", "--grid-span", "6", "--out", str(out)]) == 0
    header, rows, _ = run_csv(out)
    assert header == ["x1_sigma", "x2_sigma", "f_alpha_lb", "f_alphaprime_lb", "degenerate_flag"]
    assert len(rows) == 21 * 21
    degenerate = [r for r in rows if r[4] == "1"]
    regular = [r for r in rows if r[4] == "0"]
    assert len(degenerate) + len(regular) == len(rows)
    # the exact x1 = 0 row cannot separate the branches
    assert degenerate and all(float(r[0]) == 0.0 for r in degenerate)
    assert all(r[2] == "" and r[3] == "" for r in degenerate)
    for row in regular:
        for col in (2, 3):
            value = float(row[col])
            assert 0.0 <= value <= 1.0
    # row-major ordering: x1 in the outer loop
    assert float(rows[0][0]) == -6.0 and float(rows[0][1]) == -6.0
    assert float(rows[20][0]) == -6.0 and float(rows[20][1]) == 6.0


def test_fidelity_map_zero_time_all_degenerate(tmp_path):
    out = tmp_path / "map.csv"
    argv = ["fidelity-map", "--eps-tau1", "0", "--grid-points", "5", "--grid-span", "2"]
    assert main(argv + ["--out", str(out)]) == 0
    _, rows, _ = run_csv(out)
    assert all(r[4] == "1" for r in rows)


def test_config_applies_and_flag_wins(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": 0.0, "eps_tau1": 5.0}), encoding="utf-8")
    out = tmp_path / "t.csv"

    assert main(["table", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows, _ = run_csv(out)
    assert float(rows[0][3]) == 0.25  # two-photon row at theta = 0
    assert float(rows[3][3]) == 0.0  # flipped ground row vanishes

    assert main(["table", "--config", str(cfg), "--theta", repr(math.pi), "--out", str(out)]) == 0
    _, rows, _ = run_csv(out)
    assert float(rows[0][3]) == 0.0
    assert float(rows[3][3]) == 0.5


def test_config_shots_used_by_default(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"shots": 7, "seed": 3}), encoding="utf-8")
    out = tmp_path / "s.csv"
    assert main(["sample", "--config", str(cfg), "--out", str(out)]) == 0
    _, rows, comments = run_csv(out)
    assert len(rows) == 7
    assert comment_value(comments, "n_runs") == "7"


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"sigma": 1e-6}', encoding="utf-8")
    assert main(["table", "--config", str(cfg)]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_config_rejects_non_numbers(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"theta": true}', encoding="utf-8")
    assert main(["table", "--config", str(cfg)]) == 1
    assert "must be a number" in capsys.readouterr().err


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json", encoding="utf-8")
    assert main(["table", "--config", str(cfg)]) == 1
    assert "not valid JSON" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["table", "--config", str(tmp_path / "nope.json")]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_unwritable_out_is_io_error(tmp_path, capsys):
    bad = tmp_path / "no_such_dir" / "out.csv"
    assert main(["table", "--out", str(bad)]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_bad_angle_rejected(capsys):
    assert main(["table", "--theta", "9"]) == 1
    assert "error:" in capsys.readouterr().err


def test_negative_time_rejected(capsys):
    assert main(["table", "--eps-tau1", "-1"]) == 1
    assert "non-negative" in capsys.readouterr().err


def test_unknown_flag_rejected(capsys):
    assert main(["table", "--bogus"]) == 1
    capsys.readouterr()


def test_nonpositive_shots_rejected(capsys):
    assert main(["sample", "--shots", "0"]) == 1
    assert "--shots must be positive" in capsys.readouterr().err


def test_verify_short_list(tmp_path):
    out = tmp_path / "report.txt"
    assert main(["verify", "--eps-tau-list", "1", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    report = {}
    for ln in lines:
        key, _, value = ln.rpartition("=")
        report[key] = float(value)
    assert "eps_tau=1.plus.density_l2_rel" in report
    assert "eps_tau=1.minus.centroid_err_sigma" in report
    assert "eps_tau=1.overlap_abs_err" in report
    assert "eps_tau=1.convergence_order" in report
    assert all(math.isfinite(v) for v in report.values())


def test_verify_small_grid_fails(capsys):
    assert main(["verify", "--eps-tau-list", "10", "--grid-span", "5"]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "grid" in err


def test_verify_bad_list(capsys):
    assert main(["verify", "--eps-tau-list", "a,b"]) == 1
    assert main(["verify", "--eps-tau-list", ","]) == 1
    capsys.readouterr()
