"""End-to-end CLI: solve/rates/verify, config files, exit codes."""

import json

import pytest

from holder_vi.cli import main, parse_echo

TRACE_HEADER = ("k,i_k,H_k,gamma_k,step_norm,F_evals_cum,J_evals_cum,"
                "subproblems_cum,gap_point,gap_avg,wall_ns")


def solve_args(outdir, *extra):
    return ["solve", "--problem", "power:d=3,nu=1,r=1", "--method", "nu-ren",
            "--H", "auto", "--K", "10", "--out", str(outdir), *extra]


def read_trace(path):
    comments, rows = [], []
    for ln in path.read_text().splitlines():
        (comments if ln.startswith("#") else rows).append(ln)
    return comments, rows


def strip_wall(rows):
    return [",".join(r.split(",")[:-1]) for r in rows]


# -------------------------------------------------------------------- solve

def test_solve_writes_trace_and_summary(tmp_path):
    assert main(solve_args(tmp_path)) == 0
    comments, rows = read_trace(tmp_path / "trace.csv")
    assert rows[0] == TRACE_HEADER
    assert len(rows) == 11
    assert comments[0] == "# [problem]"
    payload = json.loads((tmp_path / "summary.json").read_text())
    assert payload["problem"] == "power:d=3,nu=1.0,r=1.0"
    assert payload["method"] == "nu-ren"
    assert payload["K"] == 10
    assert payload["iterations"] == 10
    assert payload["backend"] in ("numba", "numpy")
    assert payload["final_gap"] >= 0.0
    assert set(payload["counters"]) == {"F_evals", "J_evals", "subproblems"}
    assert set(payload["bound_checks"]) == {"C_nu", "H_bound", "oracle_budget",
                                            "universal_cap"}


def test_solve_is_deterministic_up_to_wall_time(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(solve_args(a)) == 0
    assert main(solve_args(b)) == 0
    ca, ra = read_trace(a / "trace.csv")
    cb, rb = read_trace(b / "trace.csv")
    assert ca == cb  # echo carries no output path
    assert strip_wall(ra) == strip_wall(rb)


def test_echo_round_trip_reproduces_the_run(tmp_path):
    first = tmp_path / "first"
    assert main(solve_args(first)) == 0
    comments, _ = read_trace(first / "trace.csv")
    ini = tmp_path / "replay.ini"
    ini.write_text("\n".join(c[2:] for c in comments) + "\n")

    second = tmp_path / "second"
    assert main(["solve", "--config", str(ini), "--out", str(second)]) == 0
    _, ra = read_trace(first / "trace.csv")
    _, rb = read_trace(second / "trace.csv")
    assert strip_wall(ra) == strip_wall(rb)


def test_parse_echo_recovers_resolved_settings(tmp_path):
    assert main(solve_args(tmp_path)) == 0
    echo = parse_echo(tmp_path / "trace.csv")
    assert echo["problem"] == "power:d=3,nu=1.0,r=1.0"
    assert echo["solver"]["method"] == "nu-ren"
    assert echo["solver"]["K"] == 10
    assert echo["solver"]["H"] == pytest.approx(2.0, rel=1e-9)
    assert echo["solver"]["step"] is None  # unset keys echo as empty


def test_cli_flag_overrides_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[problem]\nfamily = power\nd = 3\n"
                   "[solver]\nmethod = nu-ren\nH = auto\nK = 5\n")
    out = tmp_path / "out"
    assert main(["solve", "--config", str(ini), "--K", "7",
                 "--out", str(out)]) == 0
    payload = json.loads((out / "summary.json").read_text())
    assert payload["K"] == 7


def test_output_dir_from_config_file(tmp_path):
    out = tmp_path / "from-file"
    ini = tmp_path / "run.ini"
    ini.write_text("[problem]\nfamily = power\n"
                   "[solver]\nmethod = extragradient\nK = 4\n"
                   f"[output]\ndir = {out}\n")
    assert main(["solve", "--config", str(ini)]) == 0
    assert (out / "trace.csv").exists()


def test_universal_run_reports_early_exit(tmp_path):
    assert main(["solve", "--problem", "power:d=3", "--method", "uren",
                 "--H0", "1", "--K", "50", "--eps", "1e-4",
                 "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "summary.json").read_text())
    assert payload["method"] == "uren"
    if payload["early_exit"] is not None:
        assert payload["early_exit"]["gap"] <= 1e-4


# --------------------------------------------------------------- exit codes

def test_unknown_problem_family_is_config_error(tmp_path, capsys):
    rc = main(["solve", "--problem", "cubic", "--method", "nu-ren",
               "--H", "1", "--out", str(tmp_path)])
    assert rc == 3
    assert "cubic" in capsys.readouterr().err


def test_missing_required_constant_is_config_error(tmp_path, capsys):
    rc = main(["solve", "--problem", "power:d=3", "--method", "nu-ren",
               "--out", str(tmp_path)])
    assert rc == 3
    assert "H" in capsys.readouterr().err


def test_nonpositive_k_is_config_error(tmp_path):
    assert main(solve_args(tmp_path, "--K", "0")) == 3


def test_missing_method_is_config_error(tmp_path):
    assert main(["solve", "--problem", "power:d=3", "--out", str(tmp_path)]) == 3


def test_unknown_config_keys_are_hard_errors(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[solver]\nmethod = nu-ren\nHH = 1\n")
    assert main(["solve", "--config", str(ini)]) == 3
    assert "HH" in capsys.readouterr().err

    ini.write_text("[plotting]\nstyle = dark\n")
    assert main(["solve", "--config", str(ini)]) == 3
    assert "plotting" in capsys.readouterr().err


def test_exhausted_line_search_is_solver_error(tmp_path, capsys):
    # nu = 0 operator forced through the nu = 1 criterion from a tiny H0
    rc = main(["solve", "--problem", "piecewise:d=3", "--method", "nu-aren",
               "--nu", "1", "--H0", "1e-6", "--max-doublings", "3",
               "--K", "5", "--out", str(tmp_path)])
    assert rc == 2
    assert "doublings" in capsys.readouterr().err


def test_usage_errors_exit_with_config_code():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--method", "not-a-method"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 3


# -------------------------------------------------------------------- rates

def test_rates_selftest_known_exponent(capsys):
    assert main(["rates", "--selftest", "powerlaw:-1.5"]) == 0
    assert "ok" in capsys.readouterr().out
    assert main(["rates", "--selftest", "quadratic:2"]) == 3


def test_rates_sweep_writes_slope_files(tmp_path):
    rc = main(["rates", "--problem", "power:d=3,nu=1,r=1", "--method",
               "nu-ren", "--H", "auto", "--grid", "8,12,16,24,32",
               "--out", str(tmp_path)])
    assert rc == 0
    payload = json.loads((tmp_path / "rates.json").read_text())
    assert payload["passed"] is True
    assert payload["slope"] <= payload["target"] + payload["tolerance"]
    assert payload["grid"] == [8, 12, 16, 24, 32]
    rows = (tmp_path / "rates.csv").read_text().splitlines()
    assert "K,gap_avg" in rows


def test_rates_grid_validation(tmp_path):
    rc = main(["rates", "--problem", "power:d=3", "--method", "nu-ren",
               "--H", "auto", "--grid", "8,4,16,32", "--out", str(tmp_path)])
    assert rc == 3
    rc = main(["rates", "--problem", "power:d=3", "--method", "nu-ren",
               "--H", "auto", "--grid", "8,16", "--out", str(tmp_path)])
    assert rc == 3


def test_rates_thread_cap_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("HOLDER_VI_THREADS", "many")
    rc = main(["rates", "--problem", "power:d=3", "--method", "nu-ren",
               "--H", "auto", "--grid", "8,12,16,24", "--out", str(tmp_path)])
    assert rc == 3


# ------------------------------------------------------------------- verify

def test_verify_single_group_passes(capsys):
    assert main(["verify", "--only", "geometry"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_verify_negative_control_fails(capsys):
    rc = main(["verify", "--only", "remainder", "--scale-declared-h", "0.5"])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_verify_rejects_unknown_group():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--only", "everything"])
    assert exc.value.code == 3
