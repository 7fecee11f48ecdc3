import csv
import io
import json

import pytest

from nvneumann import cli

DISK = [{"kind": "circle", "center": [0, 0], "radius": 1}]
FAST = {"N": 64, "M_r": 24, "M_t": 48, "K": 8}


@pytest.fixture
def write(tmp_path):
    def _write(cfg, name="cfg.json"):
        p = tmp_path / name
        p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
        return str(p)
    return _write


def quadratic(**extra):
    cfg = {"domain": DISK, "f": {"f0": 1}, "g": {"mu0": 0.5}, "discretization": dict(FAST),
           "outputs": {"probes": [[0, 0], [0.5, 0.2], [3, 0]]}}
    cfg.update(extra)
    return cfg


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestSolve:
    def test_ok(self, write, tmp_path, capsys):
        out = tmp_path / "u.csv"
        code = cli.main(["solve", write(quadratic(outputs={"probes": [[0, 0], [3, 0]], "csv": str(out)}))])
        assert code == cli.EXIT_OK
        rows = read_csv(out.read_text())
        assert float(rows[0]["u"]) == pytest.approx(-0.125, abs=1e-3)
        assert rows[1]["component"] == "-1" and rows[1]["u"] == "nan"
        report = capsys.readouterr().out
        assert "residual max" in report and "constant[0]" in report

    def test_incompatible(self, write, capsys):
        assert cli.main(["solve", write(quadratic(g={"mu0": 1}))]) == cli.EXIT_INCOMPATIBLE
        assert "3.14159265358979" in capsys.readouterr().out

    def test_malformed_json(self, write, capsys):
        assert cli.main(["solve", write('{"domain": [\n  {"kind": "circle",, }]}')]) == cli.EXIT_CONFIG
        assert "line 2 column" in capsys.readouterr().out

    @pytest.mark.parametrize("patch", [
        {"bogus": 1},
        {"normalization": "mean"},
        {"f": {"f0": "x +"}},
        {"f": {"f3": 1}},
        {"discretization": {"N": 64, "K": 40}},
        {"domain": DISK + [{"kind": "circle", "center": [0.5, 0], "radius": 1}]},
        {"domain": [{"kind": "square"}]},
    ])
    def test_invalid_config(self, write, patch, capsys):
        assert cli.main(["solve", write(quadratic(**patch))]) == cli.EXIT_CONFIG
        assert "invalid config" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert cli.main(["solve", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG

    def test_non_converged(self, write):
        cfg = quadratic(tolerances={"residual": 1e-300})
        assert cli.main(["solve", write(cfg)]) == cli.EXIT_NONCONVERGED

    def test_deterministic_csv(self, write, tmp_path):
        outs = []
        for i in range(2):
            p = tmp_path / f"u{i}.csv"
            cli.main(["solve", write(quadratic(outputs={"probes": [[0, 0], [0.3, -0.4]], "csv": str(p)}))])
            outs.append(p.read_bytes())
        assert outs[0] == outs[1]

    def test_report_round_trip(self, write, capsys):
        cli.main(["solve", write(quadratic())])
        report = capsys.readouterr().out
        body = report.split("resolved config:\n", 1)[1]
        resolved = json.JSONDecoder().raw_decode(body)[0]
        assert resolved["discretization"] == FAST
        assert resolved["normalization"] == "zero-mean"
        assert cli.resolve(resolved) == resolved
        cli.main(["solve", write(resolved, "again.json")])
        assert capsys.readouterr().out == report


class TestCheckCompat:
    def test_compatible(self, write, capsys):
        assert cli.main(["check-compat", write(quadratic())]) == cli.EXIT_OK
        assert capsys.readouterr().out.strip().endswith("compatible")

    def test_incompatible(self, write):
        assert cli.main(["check-compat", write(quadratic(g={"mu0": 1}))]) == cli.EXIT_INCOMPATIBLE

    def test_tol_scale(self, write):
        # defect π passes once tolerances are scaled past π / (1e-6 · 2π)
        assert cli.main(["--tol-scale", "1e6", "check-compat", write(quadratic(g={"mu0": 1}))]) == cli.EXIT_OK


class TestConverge:
    def test_radial_sweep(self, write, capsys):
        cfg = quadratic(oracle="quadratic", discretization={"K": 8})
        assert cli.main(["converge", write(cfg), "--sweep", "N=64,128,256"]) == cli.EXIT_OK
        rows = read_csv(capsys.readouterr().out.split("monotone")[0])
        errs = [float(r["max_probe_error"]) for r in rows]
        assert [int(r["resolution"]) for r in rows] == [64, 128, 256]
        assert cli.is_monotone(errs) and errs[-1] <= 1e-3

    def test_fourier_sweep(self, write, capsys):
        cfg = {"domain": DISK, "g": {"mu1": "cos(theta)"}, "oracle": "dipole-transpose", "discretization": {"N": 128}}
        assert cli.main(["converge", write(cfg), "--sweep", "K=4,8,16"]) == cli.EXIT_OK
        rows = read_csv(capsys.readouterr().out.split("monotone")[0])
        assert float(rows[1]["max_probe_error"]) <= 1e-4

    def test_no_oracle(self, write):
        assert cli.main(["converge", write(quadratic()), "--sweep", "N=64"]) == cli.EXIT_NO_ORACLE

    @pytest.mark.parametrize("sweep", ["M=4", "N=", "K=a,b"])
    def test_bad_sweep(self, write, sweep):
        assert cli.main(["converge", write(quadratic(oracle="quadratic")), "--sweep", sweep]) == cli.EXIT_CONFIG

    def test_monotone_floor(self):
        assert cli.is_monotone([1e-3, 1e-14, 3e-14])
        assert not cli.is_monotone([1e-3, 1e-2])


class TestVerify:
    def test_fresh_build(self, capsys):
        assert cli.main(["--threads", "1", "verify"]) == cli.EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert sum(1 for ln in lines if ln.rstrip().endswith("PASS")) >= 40

    def test_fault(self, capsys):
        assert cli.main(["verify", "--inject-fault", "kprime_sign"]) == cli.EXIT_VERIFY
        out = capsys.readouterr().out
        assert "jump.kprime_row_sum" in out.split("failed:")[1]

    def test_filter(self, capsys):
        assert cli.main(["verify", "--filter", "steklov"]) == cli.EXIT_OK
        rows = [ln for ln in capsys.readouterr().out.splitlines() if ln.rstrip().endswith("PASS")]
        assert rows and all(ln.startswith("steklov.") for ln in rows)

    def test_unknown_fault(self):
        assert cli.main(["verify", "--inject-fault", "gremlins"]) == cli.EXIT_CONFIG

    def test_bad_tol_scale(self):
        assert cli.main(["--tol-scale", "0", "verify"]) == cli.EXIT_CONFIG
