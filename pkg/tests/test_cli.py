import csv
import io
import json
import subprocess
import sys
from math import pi

import numpy as np
import pytest

import mdsspec.acceptance as acceptance
import mdsspec.empirical as empirical
import mdsspec.spectra as spectra
from mdsspec import cli
from mdsspec.errors import NumericError
from mdsspec.spectra import EigvalRecord


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_rp2_alternates(capsys):
    code, out, _ = run(capsys, "spectrum", "--space", "RP2", "--kmax", "12")
    assert code == 0
    vals = [float(r["eigenvalue"]) for r in rows(out)]
    assert len(vals) == 6 and list(np.sign(vals)) == [1, -1, 1, -1, 1, -1]


def test_spectrum_torus_union(capsys):
    code, out, _ = run(capsys, "spectrum", "--space", "S1 x S1", "--kmax", "20", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["zero_kernel_infinite"] and obj["signature"]["zero"] == "infinite"
    assert len(obj["records"]) == 40
    assert {r["factor_tag"] for r in obj["records"]} == {"0:S1", "1:S1"}


def test_spectrum_rp1_closed_form(capsys):
    code, out, _ = run(capsys, "spectrum", "--space", "RP1", "--kmax", "10")
    for r in rows(out):
        j = int(r["degree"]) // 2
        assert abs(float(r["eigenvalue"]) - (-1) ** (j + 1) / (4 * j * j)) <= 1e-9


def test_cache_is_bit_identical(capsys, tmp_path, monkeypatch):
    args = ("spectrum", "--space", "S2 x RP3", "--kmax", "30", "--cache-dir", str(tmp_path))
    _, fresh, _ = run(capsys, *args)
    assert len(list(tmp_path.glob("spectrum-*.json"))) == 1

    def boom(*a, **k):
        raise AssertionError("cache miss")

    monkeypatch.setattr(spectra, "build_spectrum", boom)
    _, cached, _ = run(capsys, *args)
    assert cached == fresh


def test_cache_env_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.CACHE_ENV, str(tmp_path))
    run(capsys, "spectrum", "--space", "S3", "--kmax", "5")
    assert len(list(tmp_path.glob("*.json"))) == 1


def test_cache_key_distinguishes_inputs():
    from mdsspec.spaces import Sphere

    keys = {
        cli.cache_key(Sphere(2), 10, None, "auto"),
        cli.cache_key(Sphere(2), 11, None, "auto"),
        cli.cache_key(Sphere(2), 10, 400, "auto"),
        cli.cache_key(Sphere(3), 10, None, "auto"),
    }
    assert len(keys) == 4


def test_output_file_and_determinism(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert cli.main(["empirical", "--space", "S2", "--n", "300", "--seed", "9", "--output", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_empirical_needs_seed(capsys):
    code, _, err = run(capsys, "empirical", "--space", "RP2", "--n", "100")
    assert code == 2 and "--seed" in err


def test_empirical_circle_grid(capsys):
    code, out, _ = run(capsys, "empirical", "--space", "T1", "--grid", "--n", "400", "--top", "6")
    errs = [float(r["rel_error"]) for r in rows(out)]
    assert code == 0 and len(errs) == 6 and max(errs) <= 0.01


def test_empirical_rp2(capsys):
    code, out, _ = run(
        capsys, "empirical", "--space", "RP2", "--n", "1500", "--seed", "0", "--kmax", "20", "--top", "100",
        "--format", "json",
    )
    obj = json.loads(out)
    pos = [m for m in obj["matches"] if m["analytic_value"] > 0]
    neg = [m for m in obj["matches"] if m["analytic_value"] < 0]
    assert code == 0 and len(pos) >= 3 and len(neg) >= 3
    assert obj["seed"] == 0 and obj["normalization"] == "per_sample"


def test_empirical_torus_reports_kernel(capsys):
    code, out, _ = run(capsys, "empirical", "--space", "T2", "--grid", "--n", "900", "--format", "json")
    assert code == 0 and json.loads(out)["near_zero_fraction"] >= 0.5


def test_empirical_grid_errors(capsys):
    assert run(capsys, "empirical", "--space", "T2", "--grid", "--n", "901")[0] == 2
    assert run(capsys, "empirical", "--space", "S2", "--grid", "--n", "100")[0] == 2
    assert run(capsys, "empirical", "--space", "S1", "--n", "6000", "--seed", "1")[0] == 2


def test_reconstruct_s2(capsys):
    code, out, _ = run(capsys, "reconstruct", "--space", "S2", "--pair-angle", "1.0", "--kmax", "200")
    last = rows(out)[-1]
    assert code == 0 and int(last["K"]) == 200
    assert abs(float(last["S_K"]) - 1.0) <= 0.01


def test_reconstruct_rp3_divergence(capsys):
    code, out, err = run(capsys, "reconstruct", "--space", "RP3", "--cos", "0", "--kmax", "100000", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and obj["mode"] == "embedded_positive_only"
    assert obj["divergence"]["law"] == "logarithmic" and "logarithmic" in err


def test_reconstruct_snowflake(capsys):
    code, out, err = run(capsys, "reconstruct", "--space", "S1", "--snowflake", "--format", "json")
    obj = json.loads(out)
    assert code == 0 and abs(obj["alpha"] - 0.5) <= 0.005
    assert obj["rows"][0]["S"] == 0


def test_reconstruct_usage(capsys):
    assert run(capsys, "reconstruct", "--space", "S2")[0] == 2
    assert run(capsys, "reconstruct", "--space", "S2", "--cos", "2.0")[0] == 2
    assert run(capsys, "reconstruct", "--space", "S2", "--snowflake")[0] == 2


@pytest.mark.parametrize(
    "argv",
    [[], ["spectrum"], ["spectrum", "--space", "Q2"], ["spectrum", "--space", "S2", "--kmax", "1"],
     ["spectrum", "--space", "S2", "--kmax", "abc"]],
)
def test_usage_errors(capsys, argv):
    assert cli.main(argv) == 2


def test_numeric_error_exit_code(capsys, monkeypatch):
    def bad(*a, **k):
        raise NumericError("residual too large")

    monkeypatch.setattr(empirical, "empirical_spectrum", bad)
    code, _, err = run(capsys, "empirical", "--space", "S2", "--n", "50", "--seed", "1")
    assert code == 3 and "numeric" in err


def test_accept_only(capsys):
    code, out, err = run(capsys, "accept", "--only", "recurrence")
    obj = json.loads(out)
    assert code == 0 and obj["passed"] and [c["name"] for c in obj["criteria"]] == ["recurrence"]
    assert "[PASS] recurrence" in err


def test_accept_wrong_sign_injection(capsys, monkeypatch):
    real = acceptance.projective_eigenvalue

    def flipped(n, two_k, quad_order=None):
        r = real(n, two_k, quad_order)
        return EigvalRecord(r.degree, -r.value, r.multiplicity, r.provenance, r.factor, r.error)

    monkeypatch.setattr(acceptance, "projective_eigenvalue", flipped)
    code, out, _ = run(capsys, "accept", "--only", "rp2_signs,closed_form")
    obj = json.loads(out)
    assert code == 1 and obj["failed"] == ["rp2_signs"]


def test_accept_unknown(capsys):
    assert run(capsys, "accept", "--only", "nope")[0] == 2


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "mdsspec.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
