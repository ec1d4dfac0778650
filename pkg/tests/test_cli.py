"""CLI tests: subcommands, file formats, determinism, exit codes."""

import json
import math

import numpy as np
import pytest

from wqed_mobile.cli import main


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh]
    return header, rows


def test_scatter_writes_json(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    rc = main(["scatter", "--ki", str(math.pi / 3), "--pi", str(math.pi / 2),
               "--Jp", "0.1", "--Omega", "0.5", "--Delta", "0"])
    assert rc == 0
    meta = json.loads((tmp_path / "scatter.json").read_text())
    assert meta["result"]["T"] == pytest.approx(0.799, abs=1e-3)
    assert meta["params"]["Jp"] == 0.1
    assert meta["version"]
    assert "T = 0.799416" in capsys.readouterr().out


def test_map_transmission_csv_schema_and_determinism(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    args = ["map-transmission", "--Jp", "0.1", "--Omega", "0.5",
            "--nk", "11", "--np", "13"]
    assert main(args + ["--out", "a"]) == 0
    assert main(args + ["--out", "b"]) == 0
    blob_a = (tmp_path / "a.csv").read_bytes()
    blob_b = (tmp_path / "b.csv").read_bytes()
    assert blob_a == blob_b
    assert b"\r" not in blob_a
    header, rows = _read_csv(tmp_path / "a.csv")
    assert header == ["k_i", "p_i", "t_re", "t_im", "r_re", "r_im",
                      "T", "R", "p_f2", "k_f2", "dE_qb", "degenerate"]
    assert len(rows) == 11 * 13
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["grid"] == {"nk": 11, "np": 13}


def test_map_recoil_alias(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["map-recoil", "--Jp", "0.1", "--Omega", "0.5",
                 "--nk", "5", "--np", "5"]) == 0
    header, rows = _read_csv(tmp_path / "map-recoil.csv")
    assert "dE_qb" in header
    assert len(rows) == 25


def test_bound_energies(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["bound-energies", "--Jp", "0.5", "--Omega", "1",
                 "--Delta", "0", "--nK", "16", "--L", "64"]) == 0
    header, rows = _read_csv(tmp_path / "bound-energies.csv")
    assert header == ["K", "E_minus", "E_plus", "band_min", "band_max"]
    assert len(rows) == 16
    for row in rows:
        e_minus, e_plus = float(row[1]), float(row[2])
        b_min, b_max = float(row[3]), float(row[4])
        assert e_minus < b_min < b_max < e_plus
    meta = json.loads((tmp_path / "bound-energies.json").read_text())
    assert "flatness" in meta


def test_bound_wavefunction(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["bound-wavefunction", "--K", "1.0471975512", "--Jp", "0.5",
                 "--Omega", "1", "--branch", "minus", "--xmax", "20",
                 "--L", "512"]) == 0
    header, rows = _read_csv(tmp_path / "bound-wavefunction.csv")
    assert header == ["x", "f_re", "f_im", "abs_f", "phase"]
    assert len(rows) == 41
    meta = json.loads((tmp_path / "bound-wavefunction.json").read_text())
    assert meta["photon_density"] > 0
    assert meta["loc_length"] > 0


def test_emit_fixed_k(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["emit-fixed-k", "--K", "0", "--Jp", "0.5", "--Omega", "0.2",
                 "--Delta", "0", "--L", "128", "--tmax", "30", "--nt", "31"]) == 0
    h_pe, rows_pe = _read_csv(tmp_path / "emit-fixed-k_pe.csv")
    assert h_pe == ["t", "P_e_total"]
    assert len(rows_pe) == 31
    assert float(rows_pe[0][1]) == pytest.approx(1.0, abs=1e-12)
    h_np, rows_np = _read_csv(tmp_path / "emit-fixed-k_np.csv")
    assert h_np == ["p", "N_p"]
    assert len(rows_np) == 128
    meta = json.loads((tmp_path / "emit-fixed-k.json").read_text())
    assert meta["markov_rate"] == pytest.approx(0.08 / math.sqrt(8.0), rel=1e-9)
    assert meta["predicted_p_plus"] is not None


def test_emit_localized(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["emit-localized", "--Jp", "0.5", "--Omega", "0.2",
                 "--Delta", "0", "--L", "64", "--tmax", "10", "--nt", "6",
                 "--snapshot", "5", "--snapshot", "10"]) == 0
    h_pe, rows_pe = _read_csv(tmp_path / "emit-localized_pe.csv")
    assert h_pe == ["t", "P_e_total"]
    for snap in ("5", "10"):
        header, rows = _read_csv(tmp_path / f"emit-localized_x_t{snap}.csv")
        assert header == ["x", "N", "P_g", "P_e"]
        assert len(rows) == 64
        n_sum = sum(float(r[1]) for r in rows)
        pg_sum = sum(float(r[2]) for r in rows)
        pe_sum = sum(float(r[3]) for r in rows)
        assert abs(n_sum - pg_sum) < 1e-9
        assert abs(pe_sum + pg_sum - 1.0) < 1e-9


def test_emit_localized_thread_count_does_not_change_bytes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    base = ["emit-localized", "--Jp", "0.3", "--Omega", "0.4", "--L", "64",
            "--tmax", "8", "--nt", "3"]
    assert main(base + ["--threads", "1", "--out", "one"]) == 0
    assert main(base + ["--threads", "2", "--out", "two"]) == 0
    assert (tmp_path / "one_pe.csv").read_bytes() == (tmp_path / "two_pe.csv").read_bytes()
    assert (tmp_path / "one_x_t8.csv").read_bytes() == (tmp_path / "two_x_t8.csv").read_bytes()


def test_windows_command(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["windows", "--Jp", "0.5", "--Delta", "3", "--Omega", "0.2"]) == 0
    meta = json.loads((tmp_path / "windows.json").read_text())
    assert meta["regime"] == "selective"
    assert meta["w_plus"] == pytest.approx(math.acos(5.0 - math.sqrt(21.0)), abs=1e-6)
    assert meta["jc_plus"] == 0.25
    header, rows = _read_csv(tmp_path / "windows.csv")
    assert header == ["K_lo", "K_hi"]
    assert len(rows) == 1


def test_invalid_parameters_exit_2(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    rc = main(["windows", "--Jp", "0.5", "--L", "63"])
    assert rc == 2
    assert "L must be an even integer" in capsys.readouterr().err
    rc = main(["scatter", "--ki", "0.5", "--pi", "0.5", "--Omega", "-1"])
    assert rc == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    # Omega = 0 with the level inside the band: no bound state exists.
    rc = main(["bound-wavefunction", "--K", "0", "--Omega", "0",
               "--Delta", "0", "--Jp", "0.2", "--L", "64"])
    assert rc == 3
    assert "numerical failure" in capsys.readouterr().err


def test_threads_env_cap(monkeypatch):
    from wqed_mobile.dynamics import resolve_threads
    monkeypatch.setenv("WQED_THREADS", "1")
    assert resolve_threads(8) == 1
    monkeypatch.delenv("WQED_THREADS")
    assert resolve_threads(3) == 3


def test_selfcheck(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert main(["selfcheck"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "FAIL" not in out
