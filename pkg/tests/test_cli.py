import json
import math
import shutil
import subprocess
from pathlib import Path

import pytest

from rabipat import cli, errata
from rabipat.hilbert import HilbertConfig
from rabipat.models import ParametricJCParams, build_squeezed_frame
from rabipat.phases import g_critical
from rabipat.spectra import diagonalize

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DQ = 200.0 / math.cosh(2.0 * math.sqrt(2.0))


def _run(tmp_path, command, cfg, *extra, name="out.csv"):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    out = tmp_path / name
    code = cli.main([command, "--config", str(cfg_path), "--out", str(out), *extra])
    return code, out


def _rows(out):
    return cli.read_csv(out.read_text())


ANISO = {"omega0": 1.0, "Omega": 100.0, "xi1": 0.1, "xi2": 0.0}


def test_spectrum_free_ladder(tmp_path):
    cfg = {"model": "anisotropic", "params": {"omega0": 1.0, "Omega": 10.0, "xi1": 0.0, "xi2": 0.0}, "levels": 3}
    code, out = _run(tmp_path, "spectrum", cfg)
    assert code == cli.EXIT_OK
    comments, header, (row,) = _rows(out)
    assert [row["E0"], row["E1"], row["E2"]] == [-5.0, -4.0, -3.0]
    assert [row["n0"], row["n1"], row["n2"]] == [0.0, 1.0, 2.0]
    assert row["converged"] is True
    assert comments[0].startswith("rabipat ")
    assert any(c.startswith("config_sha256: ") for c in comments)


def test_spectrum_near_zero_gap_at_critical_anisotropy(tmp_path):
    code, out = _run(tmp_path, "spectrum", json.loads((CONFIGS / "spectrum_critical.json").read_text()))
    assert code == cli.EXIT_OK
    (row,) = _rows(out)[2]
    # k = k_c puts the generic model at its transition; the gap is far below w0
    assert row["gap"] < 0.1
    assert row["xi_c"] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "cfg",
    [
        "{not json",
        '["a list"]',
        {"model": "anisotropic", "params": ANISO, "colour": "blue"},
        {"model": "anisotropic", "params": {**ANISO, "Omega": -1.0}},
        {"model": "anisotropic", "params": {"omega0": 1.0}},
        {"model": "parametric-jc", "params": {"delta_c": 1.0, "delta_q": 2.0}},
        {"model": "anisotropic", "params": ANISO, "ordering": "minus_plus"},
        {"model": "nope", "params": ANISO},
    ],
)
def test_config_errors_exit_2_and_write_nothing(tmp_path, cfg, capsys):
    code, out = _run(tmp_path, "spectrum", cfg)
    assert code == cli.EXIT_CONFIG
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["", "   \n", "{}"])
def test_empty_config_prints_usage(tmp_path, text, capsys):
    code, out = _run(tmp_path, "validate", text)
    assert code == cli.EXIT_CONFIG
    assert not out.exists()
    assert "usage: rabipat" in capsys.readouterr().err


def test_bad_command_line_is_usage_error(tmp_path, capsys):
    assert cli.main(["spectrum"]) == cli.EXIT_CONFIG
    assert cli.main(["transmogrify", "--config", "x", "--out", "y"]) == cli.EXIT_CONFIG
    assert "usage: rabipat" in capsys.readouterr().err


def test_convergence_failure_exit_3_with_flag(tmp_path):
    cfg = {
        "model": "anisotropic",
        "params": {"omega0": 1.0, "Omega": 100.0, "xi1": 6.0, "xi2": 6.0},
        "cutoff": {"N_start": 4, "N_max": 8},
    }
    code, out = _run(tmp_path, "spectrum", cfg)
    assert code == cli.EXIT_CONVERGENCE
    (row,) = _rows(out)[2]
    assert row["converged"] is False
    assert row["cutoff_used"] == 8


def test_literal_assembly_exit_4_and_ledger(tmp_path, capsys):
    code, out = _run(tmp_path, "validate", json.loads((CONFIGS / "validate_literal.json").read_text()))
    assert code == cli.EXIT_INVARIANT
    printed = capsys.readouterr().out
    assert "FAIL reconstruction/literal" in printed
    assert "[ledger: pattern-assembly]" in printed
    assert "pattern-assembly | variant:" in printed
    comments, _, rows = _rows(out)
    assert rows[0]["passed"] is False and rows[0]["ledger"] == "pattern-assembly"
    assert any("pattern-assembly" in c for c in comments)
    assert "seed: 0" in comments


def test_validate_seed_changes_draws(tmp_path):
    cfg = {"suites": ["reconstruction"], "draws": 5}
    a = _rows(_run(tmp_path, "validate", cfg, "--seed", "1", name="a.csv")[1])[2][0]["observed"]
    b = _rows(_run(tmp_path, "validate", cfg, "--seed", "2", name="b.csv")[1])[2][0]["observed"]
    c = _rows(_run(tmp_path, "validate", cfg, "--seed", "1", name="c.csv")[1])[2][0]["observed"]
    assert a == c
    assert a != b


def test_patterns_rows_and_sums(tmp_path):
    cfg = {"params": ANISO, "axis": {"name": "k_over_kc", "start": 0.0, "stop": 1.2, "num": 7}}
    code, out = _run(tmp_path, "patterns", cfg)
    assert code == cli.EXIT_OK
    _, header, rows = _rows(out)
    for col in ("E0_lambda1", "n3_lambda3", "c", "label_perm", "label_ambiguous", "d2E0_lambda1", "xi1", "xi2"):
        assert col in header
    for row in rows:
        for i in range(4):
            s = row[f"E{i}_lambda1"] + row[f"E{i}_lambda2"] + row[f"E{i}_lambda3"]
            assert abs(s - row[f"E{i}"] - row["c"]) < 1e-9 * (abs(row[f"E{i}"]) + 1)
    assert rows[0]["d2E0"] is not None and math.isnan(rows[0]["d2E0"])


def test_patterns_k_list(tmp_path):
    cfg = {
        "params": {"omega0": 1.0, "Omega": 100.0, "xi1": 1.0, "xi2": 0.0},
        "axis": {"name": "xi1_over_xi1c", "start": 0.5, "stop": 0.6, "num": 2},
        "k": [0.5, 1.5],
        "d2": False,
    }
    code, out = _run(tmp_path, "patterns", cfg)
    assert code == cli.EXIT_OK
    _, header, rows = _rows(out)
    assert [r["k"] for r in rows] == [0.5, 0.5, 1.5, 1.5]
    assert "d2E0" not in header
    for r in rows:
        assert r["xi2"] == pytest.approx(r["k"] * r["xi1"], rel=1e-15)


def test_patterns_rejects_k_with_k_over_kc(tmp_path):
    cfg = {"params": ANISO, "axis": {"name": "k_over_kc", "start": 0.0, "stop": 1.0, "num": 2}, "k": 0.5}
    assert _run(tmp_path, "patterns", cfg)[0] == cli.EXIT_CONFIG


def test_single_cell_phase_diagram_equals_spectrum_gap(tmp_path):
    params = {"delta_c": 1.0, "delta_q": DQ, "r": 0.5}
    pd = {"params": params, "axes": [{"name": "g", "start": 0.3, "stop": 0.3, "num": 1}], "fixed_cutoff": 64}
    sp = {"model": "squeezed-frame", "params": {**params, "g": 0.3}, "fixed_cutoff": 64, "levels": 2}
    code_a, out_a = _run(tmp_path, "phase-diagram", pd, name="a.csv")
    code_b, out_b = _run(tmp_path, "spectrum", sp, name="b.csv")
    assert code_a == code_b == cli.EXIT_OK
    (row_a,) = _rows(out_a)[2]
    (row_b,) = _rows(out_b)[2]
    assert row_a["gap"] == row_b["gap"]
    assert row_a["log10_gap"] == math.log10(row_a["gap"])


def test_phase_diagram_gap_collapse_at_sqrt2(tmp_path):
    p = ParametricJCParams.from_r(1.0, DQ, 0.0, math.sqrt(2.0))
    g0 = g_critical(p)
    cfg = {
        "params": {"delta_c": 1.0, "delta_q": DQ, "r": math.sqrt(2.0)},
        "axes": [{"name": "g", "start": 0.5 * g0, "stop": 1.5 * g0, "num": 3}],
        "cutoff": {"N_max": 1024},
    }
    code, out = _run(tmp_path, "phase-diagram", cfg)
    assert code == cli.EXIT_OK
    rows = _rows(out)[2]
    assert rows[0]["gap"] > 0.1
    assert rows[2]["gap"] < 1e-6
    assert {"g", "r", "gap", "log10_gap", "converged"} <= set(rows[0])


def test_phase_diagram_weak_coupling_without_drive(tmp_path):
    cfg = {
        "params": {"delta_c": 1.0, "delta_q": DQ, "r": 0.0},
        "axes": [{"name": "g", "start": 0.0, "stop": 0.5, "num": 3}],
    }
    code, out = _run(tmp_path, "phase-diagram", cfg)
    assert code == cli.EXIT_OK
    assert min(r["gap"] for r in _rows(out)[2]) > 0.5


def test_analytic_columns(tmp_path):
    cfg = {
        "params": {"delta_c": 1.0, "delta_q": DQ, "r": math.sqrt(2.0)},
        "coupling": {"start": 0.5, "stop": 1.5, "num": 11},
    }
    code, out = _run(tmp_path, "analytic", cfg)
    assert code == cli.EXIT_OK
    comments, header, rows = _rows(out)
    crit = rows[5]
    assert crit["g_over_g0"] == 1.0 and crit["regime"] == "critical"
    assert crit["eps_np"] == 0.0 and crit["eps_sp"] == 0.0
    assert all(r["N_c"] == 0.0 for r in rows[:6])
    nc = [r["N_c"] for r in rows[5:]]
    assert all(b > a for a, b in zip(nc, nc[1:]))
    for r in rows:
        assert r["E_G_offset_subtracted"] == pytest.approx(r["E_G"] - r["E_G_offset"], abs=1e-12)
        assert r["alpha0_minus"] == -r["alpha0"] or r["alpha0"] == 0.0
    keys = {e.key for e in errata.entries_for("analytic")}
    assert {c.split(" | ")[0].removeprefix("ledger: ") for c in comments if c.startswith("ledger: ")} == keys


def test_csv_round_trip_is_byte_identical(tmp_path):
    cfg = {"params": ANISO, "axis": {"name": "k_over_kc", "start": 0.0, "stop": 1.2, "num": 5}}
    _, out = _run(tmp_path, "patterns", cfg)
    text = out.read_text()
    assert cli.reemit(text) == text
    assert cli.reemit(cli.reemit(text)) == text


def test_cell_formatting():
    text = cli.format_csv(["c"], ["a", "b", "c", "d", "e"], [{"a": 0.1, "b": True, "c": None, "d": "x", "e": 3}])
    assert text == "# c\na,b,c,d,e\n0.10000000000000001,true,,x,3\n"
    _, _, (row,) = cli.read_csv(text)
    assert row == {"a": 0.1, "b": True, "c": None, "d": "x", "e": 3}


def test_output_is_deterministic_across_threads(tmp_path, monkeypatch):
    cfg = {"params": ANISO, "axis": {"name": "k_over_kc", "start": 0.0, "stop": 1.2, "num": 6}}
    _, a = _run(tmp_path, "patterns", cfg, name="a.csv")
    _, b = _run(tmp_path, "patterns", cfg, "--threads", "3", name="b.csv")
    monkeypatch.setenv("RABIPAT_THREADS", "2")
    _, c = _run(tmp_path, "patterns", cfg, name="c.csv")
    assert a.read_text() == b.read_text() == c.read_text()


def test_bad_threads_env_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("RABIPAT_THREADS", "many")
    code, out = _run(tmp_path, "spectrum", {"model": "anisotropic", "params": ANISO})
    assert code == cli.EXIT_CONFIG and not out.exists()


def test_config_hash_is_canonical():
    assert cli.config_hash({"a": 1, "b": [1, 2]}) == cli.config_hash({"b": [1, 2], "a": 1})
    assert cli.config_hash({"a": 1}) != cli.config_hash({"a": 2})


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.name)
def test_shipped_configs_pass_schema(path):
    cfg = json.loads(path.read_text())
    command = {
        "spectrum": "spectrum",
        "patterns": "patterns",
        "phase": "phase-diagram",
        "analytic": "analytic",
        "validate": "validate",
    }[path.stem.split("_")[0]]
    assert callable(cli._prepare(command, cfg, 0))


@pytest.mark.skipif(shutil.which("rabipat") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "anisotropic", "params": ANISO, "levels": 2}))
    out = tmp_path / "o.csv"
    proc = subprocess.run(["rabipat", "spectrum", "--config", str(cfg), "--out", str(out)], capture_output=True)
    assert proc.returncode == 0
    assert out.read_text().startswith("# rabipat ")


def test_squeezed_frame_spectrum_matches_library(tmp_path):
    params = {"delta_c": 1.0, "delta_q": 5.0, "g": 0.4, "r": 0.3}
    code, out = _run(tmp_path, "spectrum", {"model": "squeezed-frame", "params": params, "fixed_cutoff": 40})
    assert code == cli.EXIT_OK
    (row,) = _rows(out)[2]
    ref = diagonalize(build_squeezed_frame(ParametricJCParams(**params), HilbertConfig(40)), 4)
    assert row["E0"] == float(ref.eigenvalues[0])
