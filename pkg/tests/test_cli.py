import json
import subprocess
import sys

import pytest

from orthounity import cli
from orthounity.cache import cache_store
from orthounity.exact import exact_coefficients


def run(capsys, *argv):
    code = cli.main(["-q", *argv] if argv and argv[0].startswith("-") else [*argv[:1], "-q", *argv[1:]])
    out, err = capsys.readouterr()
    return code, out, err


def test_coeffs_exact(capsys):
    code, out, _ = run(capsys, "coeffs", "--engine", "exact", "--n-max", "5")
    assert code == 0
    assert out.splitlines()[1:] == ["0 1", "1 -3/2", "2 5/24", "3 77/720", "4 277/4480", "5 140173/3628800"]


def test_coeffs_csv_is_native(capsys):
    code, out, _ = run(capsys, "coeffs", "--engine", "exact", "--n-max", "2", "--format", "csv")
    assert out == "n,numerator,denominator\n0,1,1\n1,-3,2\n2,5,24\n"
    code, out, _ = run(capsys, "coeffs", "--n-max", "1", "--format", "csv")
    assert out.splitlines()[0] == "n,midpoint_hex,radius_hex,precision_bits"


def test_sums_json(capsys):
    code, out, _ = run(capsys, "sums", "--n-max", "100", "--index", "100", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["engine"] == "ball" and data["precision_bits"] == 128
    assert data["rows"][0]["n"] == 100 and data["rows"][0]["mid"].startswith("0.0018882")


def test_norms_reports_K(capsys):
    code, out, _ = run(capsys, "norms", "--n-max", "300", "--index", "300")
    assert code == 0 and "# K_lower:" in out and "# K_upper:" in out


def test_verify_exact_suites(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "inequalities", "--n-max", "200", "--engine", "exact")
    assert code == 0 and out.splitlines()[1] == "inequalities: pass"
    code, out, _ = run(capsys, "verify", "--suite", "all", "--n-max", "40", "--engine", "exact", "--format", "json")
    data = json.loads(out)
    assert code == 0 and set(data["suites"]) == {"inequalities", "two-adic", "integrality", "oracles"}


def test_verify_ball(capsys):
    code, out, _ = run(capsys, "verify", "--n-max", "500")
    assert code == 0


def test_exact_only_suite_rejects_ball(capsys):
    code, _, err = run(capsys, "verify", "--suite", "two-adic", "--n-max", "10")
    assert code == cli.EXIT_USAGE and "exact" in err


def test_signs(capsys):
    code, out, _ = run(capsys, "signs", "--n-max", "100")
    assert code == 0 and out.splitlines()[0] == "0 1 26"
    code, out, _ = run(capsys, "signs", "--n-max", "100", "--format", "json")
    assert json.loads(out)["new_sign_starts"] == [1, 2, 27]


def test_delta(capsys):
    code, out, _ = run(capsys, "delta", "--n-max", "2000", "--n", "1000")
    assert code == 0 and "n=1000" in out and "envelope slope" in out


def test_series_commands(capsys):
    for argv in (
        ("identities", "--n-max", "2000", "--r", "0", "1"),
        ("functional", "--n-max", "300"),
        ("integral", "--n-max", "300", "--t", "0.5", "--quad-order", "24"),
        ("dirichlet", "--n-max", "500"),
    ):
        code, out, _ = run(capsys, *argv)
        assert code == 0, (argv, out)


def test_series_json_schema(capsys):
    code, out, _ = run(capsys, "functional", "--n-max", "200", "--t", "0.5", "--format", "json")
    check = json.loads(out)["checks"][0]
    assert {"kind", "params", "value", "radius", "tail_bound", "verdict"} <= check.keys()


def test_failure_exit_code(capsys):
    # N = 5 truncation leaves a residual far above 1e-12
    code, out, _ = run(capsys, "functional", "--n-max", "5", "--t", "0.9", "--tolerance", "1e-12")
    assert code == cli.EXIT_FAIL and "fail" in out


def test_identities_report_decay_on_failure(capsys):
    code, out, _ = run(capsys, "identities", "--n-max", "400", "--tolerance", "1e-12", "--r", "0")
    assert code == cli.EXIT_FAIL and "measured residual decay" in out


def test_dirichlet_domain_error(capsys):
    code, _, _ = run(capsys, "dirichlet", "--n-max", "10", "--s", "-0.5")
    assert code == cli.EXIT_USAGE


def test_cross_validate(capsys):
    code, out, _ = run(capsys, "cross-validate", "--n-max", "300", "--exact-n-max", "200")
    assert code == 0 and "pass" in out


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["nonsense"])
    assert info.value.code == cli.EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        cli.main(["coeffs", "--tolerance", "0"])
    assert info.value.code == cli.EXIT_USAGE
    code, _, err = run(capsys, "coeffs", "--engine", "exact", "--n-max", "2001")
    assert code == cli.EXIT_USAGE and "--force" in err


def test_precision_exhausted_exit(capsys):
    code, _, _ = run(capsys, "coeffs", "--n-max", "3000", "--precision", "64", "--max-precision", "64")
    assert code == cli.EXIT_UNAVAILABLE


def test_cache_round_trip_and_corruption(capsys, tmp_path):
    path = tmp_path / "c.csv"
    first = run(capsys, "coeffs", "--n-max", "50", "--cache", str(path))
    second = run(capsys, "coeffs", "--n-max", "50", "--cache", str(path))
    assert path.exists() and first[1] == second[1]
    path.write_text(path.read_text()[:-30])
    code, _, err = run(capsys, "coeffs", "--n-max", "50", "--cache", str(path))
    assert code == cli.EXIT_DATAERR and "checksum" in err


def test_exact_cache_promoted_for_ball_command(capsys, tmp_path):
    path = tmp_path / "e.csv"
    cache_store(path, exact_coefficients(20))
    code, out, _ = run(capsys, "coeffs", "--n-max", "20", "--cache", str(path), "--index", "1")
    assert code == 0 and out.splitlines()[0].startswith("# engine=ball")
    assert out.splitlines()[1] == "1 -1.5000000000000000000 +/- 0.000e+00"


def test_cache_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("ORTHOUNITY_CACHE_DIR", str(tmp_path))
    run(capsys, "coeffs", "--engine", "exact", "--n-max", "7")
    assert (tmp_path / "exact-7.csv").exists()


def test_determinism_and_stream_separation():
    argv = [sys.executable, "-m", "orthounity.cli", "sums", "--n-max", "200", "--index", "100"]
    a = subprocess.run(argv, capture_output=True, text=True, check=True)
    b = subprocess.run(argv, capture_output=True, text=True, check=True)
    assert a.stdout == b.stdout
    assert "computing" in a.stderr and "computing" not in a.stdout
