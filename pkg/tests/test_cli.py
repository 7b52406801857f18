import csv
import io
import json
import math
import os
import subprocess
import sys

import pytest

from deformcavity.cli import EXIT_ERROR, EXIT_GATE, EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, main
from deformcavity.spectrum import reference_path

PEAR1 = ["--shape", "pear", "--param", "C2=0.119", "--param", "C3=0.095", "--param", "C4=0.002"]
SUPEREGG17 = ["--shape", "superegg", "--param", "n=1.7"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#")))


def test_coeffs(capsys):
    code, out, _ = run(capsys, "coeffs", "--shape", "sphere", "--amax", "8")
    assert code == EXIT_OK
    assert "# residual=0" in out and all(float(r["C_a"]) == 0.0 for r in rows(out))
    code, out, _ = run(capsys, "coeffs", *PEAR1, "--amax", "10")
    assert sum(1 for r in rows(out) if float(r["C_a"]) != 0.0) == 3
    code, out, _ = run(capsys, "coeffs", *SUPEREGG17, "--format", "json")
    doc = json.loads(out)
    even = [c["abs_C_a"] for c in doc["coefficients"] if c["a"] % 2 == 0]
    assert even[0] > even[4] > even[9] > even[-1]
    assert doc["R0"] > 0 and doc["residual"] < 1e-2


def test_coeffs_long_format(capsys):
    code, out, _ = run(capsys, "coeffs", *SUPEREGG17, "--amax", "40", "--long")
    assert code == EXIT_OK
    data = rows(out)
    sizes = sorted({int(r["a_max"]) for r in data})
    assert sizes == [10, 20, 30, 40]
    res = {int(r["a_max"]): float(r["residual"]) for r in data}
    assert res[10] > res[20] > res[40]


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--shape", "oblate", "--levels", "17")
    assert code == EXIT_OK
    data = rows(out)
    assert len(data) == 17 and float(data[0]["total"]) == pytest.approx(10.060, abs=2e-3)
    code, out, _ = run(capsys, "spectrum", "--shape", "stadium", "--param", "R=1", "--param", "d=0.25",
                       "--bc", "neumann", "--levels", "16", "--format", "json")
    assert json.loads(out)["levels"][0]["total"] == pytest.approx(3.345, abs=2e-3)
    code, out, _ = run(capsys, "spectrum", "--shape", "sphere", "--levels", "4", "--format", "pretty")
    lines = out.splitlines()
    assert lines[1].split()[7] == "9.870"
    assert lines[2].split()[7] == lines[3].split()[7] == lines[4].split()[7]


def test_spectrum_is_deterministic(capsys, tmp_path):
    args = ["spectrum", *PEAR1, "--bc", "neumann", "--levels", "16"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_compare(capsys):
    ref = str(reference_path("superegg_2.5", "dirichlet"))
    code, out, _ = run(capsys, "compare", "--shape", "superegg", "--param", "n=2.5", "--reference", ref)
    assert code == EXIT_OK
    data = rows(out)
    assert float(data[-2]["percent_error"]) == pytest.approx(0.063, abs=0.01)
    assert float(data[12]["percent_error"]) == pytest.approx(0.063, abs=0.01)
    code, _, err = run(capsys, "compare", "--shape", "superegg", "--param", "n=2.5", "--gate", "0.01")
    assert code == EXIT_GATE and "gate failed" in err


def test_compare_self(capsys):
    ref = str(reference_path("stadium", "neumann"))
    code, out, _ = run(capsys, "compare", "--shape", "stadium", "--param", "R=1", "--param", "d=0.25",
                       "--bc", "neumann", "--computed", ref, "--reference", ref, "--column", "Ps", "--gate", "1e-9")
    assert code == EXIT_OK
    assert all(float(r["percent_error"]) == 0.0 for r in rows(out))


def test_compare_pear_gate(capsys):
    code, out, _ = run(capsys, "compare", *PEAR1, "--bc", "neumann", "--gate", "5", "--format", "json")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert sum(r["flagged"] for r in doc["rows"]) == 2
    assert doc["max_error"] < 5


def test_compare_length_mismatch(capsys, tmp_path):
    short = tmp_path / "short.csv"
    short.write_text("n,l,abs_m,Ps,Ns\n1,0,0,9.0,9.0\n")
    code, _, err = run(capsys, "compare", "--shape", "sphere", "--reference", str(short), "--computed",
                       str(reference_path("stadium", "neumann")))
    assert code == EXIT_ERROR and "length mismatch" in err
    code, _, err = run(capsys, "compare", "--shape", "sphere")
    assert code == EXIT_USAGE and "--reference" in err


def test_wavefunction_sphere_ray(capsys):
    code, out, _ = run(capsys, "wavefunction", "--shape", "sphere", "--mode", "1,0,0", "--order", "0",
                       "--radii", "0:1:11", "--theta", "0.5")
    assert code == EXIT_OK
    data = rows(out)
    N = math.sqrt(2) / abs(math.sin(math.pi) / math.pi**2 - math.cos(math.pi) / math.pi)
    for r in data[1:]:
        x = math.pi * float(r["r"])
        assert float(r["re_psi"]) == pytest.approx(N * math.sin(x) / x / math.sqrt(4 * math.pi), abs=1e-12)
    assert abs(float(data[-1]["re_psi"])) < 1e-14
    assert data[-1]["boundary_residual"] != "" and data[0]["boundary_residual"] == ""


def test_wavefunction_boundary_column(capsys):
    code, out, _ = run(capsys, "wavefunction", *SUPEREGG17, "--mode", "1,0,0", "--order", "1",
                       "--boundary", "--theta", "0:pi:33")
    assert code == EXIT_OK
    assert all(float(r["boundary_residual"]) < 1e-8 for r in rows(out))
    code, out, _ = run(capsys, "wavefunction", *SUPEREGG17, "--bc", "neumann", "--mode", "2,1,1",
                       "--order", "1", "--boundary", "--phi", "0,1.3", "--format", "json")
    assert all(s["boundary_residual"] < 1e-8 for s in json.loads(out)["samples"])


def test_wavefunction_errors(capsys):
    code, _, err = run(capsys, "wavefunction", "--shape", "sphere", "--order", "3")
    assert code == EXIT_USAGE
    code, out, err = run(capsys, "wavefunction", *SUPEREGG17, "--mode", "1,1,0", "--order", "2",
                         "--radii", "0.5", "--theta", "1")
    assert code == EXIT_PARTIAL and "partial" in err and len(rows(out)) == 1
    code, _, err = run(capsys, "wavefunction", "--shape", "sphere", "--radii", "2")
    assert code == EXIT_USAGE
    code, _, err = run(capsys, "wavefunction", "--shape", "sphere", "--mode", "1,2")
    assert code == EXIT_USAGE


def test_diagnostics(capsys):
    code, out, _ = run(capsys, "diagnostics", "--shape", "sphere", "--mode", "1,1,0", "--format", "json")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert max(doc["equation_residuals"]) < 1e-10 and max(doc["boundary_residuals"]) < 1e-10
    code, out, _ = run(capsys, "diagnostics", *SUPEREGG17, "--format", "json")
    doc = json.loads(out)
    assert doc["route_delta2"] < 1e-6 and max(doc["equation_residuals"]) < 1e-6
    code, out, _ = run(capsys, "diagnostics", *PEAR1, "--bc", "neumann", "--format", "pretty")
    assert "NearResonance(p=3" in out


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("shape = stadium\nR = 1\nd = 0.25\nbc = neumann\nlevels = 3\nformat = json\n")
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg))
    doc = json.loads(out)
    assert doc["bc"] == "neumann" and len(doc["levels"]) == 3
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg), "--bc", "dirichlet", "--format", "csv")
    data = rows(out)
    assert len(data) == 3 and float(data[0]["total"]) == pytest.approx(8.857, abs=2e-3)
    code, _, err = run(capsys, "spectrum", "--config", str(tmp_path / "none.cfg"))
    assert code == EXIT_USAGE


def test_usage_errors(capsys):
    assert run(capsys, "spectrum", "--shape", "blob")[0] == EXIT_USAGE
    assert run(capsys, "spectrum", "--shape", "superegg", "--param", "n=-1")[0] == EXIT_USAGE
    assert run(capsys, "spectrum", "--shape", "sphere", "--levels", "0")[0] == EXIT_USAGE
    assert run(capsys, "spectrum", "--shape", "sphere", "--param", "radius")[0] == EXIT_USAGE
    assert run(capsys, "spectrum")[0] == EXIT_USAGE
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    code, _, err = run(capsys, "spectrum", "--shape", "sphere", "--levels", "9", "--nmax", "1", "--lmax", "8")
    assert code == EXIT_ERROR and "enlarge" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "deformcavity", "spectrum", "--shape", "sphere", "--levels", "1"],
                         capture_output=True, text=True, env=dict(os.environ))
    assert res.returncode == 0
    assert res.stdout.splitlines()[1].startswith("1,1,0,0,9.86960440108936")
