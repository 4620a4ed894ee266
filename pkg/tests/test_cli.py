"""Integration tests for the command-line interface and its exit codes."""

import json

import numpy as np
import pytest

from ggmcodec import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture()
def codec_files(tmp_path):
    rng = np.random.default_rng(5)
    n = 3000
    syms = np.rint(rng.laplace(0, 3.0, n)).astype(int)
    sym_path = tmp_path / "symbols.txt"
    sym_path.write_text("".join(f"{s}\n" for s in syms))
    params_path = tmp_path / "params.csv"
    params_path.write_text("beta,alpha,mu\n" + "1.0,3.0,0.0\n" * n)
    grid_path = tmp_path / "grid.bin"
    assert run("build-grid", "--beta-samples", 5, "--alpha-samples", 24,
               "--grid-out", grid_path) == 0
    return sym_path, params_path, grid_path


class TestCodecCommands:
    def test_encode_decode_round_trip(self, codec_files, tmp_path):
        sym_path, params_path, grid_path = codec_files
        bits = tmp_path / "bits.bin"
        report = tmp_path / "report.json"
        assert run("encode", "--grid", grid_path, "--params-file", params_path,
                   "--symbols", sym_path, "--out", bits, "--report", report) == 0
        out = tmp_path / "decoded.txt"
        assert run("decode", "--grid", grid_path, "--params-file", params_path,
                   "--bits", bits, "--out", out) == 0
        assert out.read_bytes() == sym_path.read_bytes()
        rep = json.loads(report.read_text())
        assert rep["actual_bits"] <= rep["estimated_bits"] * 1.01 + 64 * 8

    def test_decode_with_wrong_grid_exits_5(self, codec_files, tmp_path):
        sym_path, params_path, grid_path = codec_files
        bits = tmp_path / "bits.bin"
        assert run("encode", "--grid", grid_path, "--params-file", params_path,
                   "--symbols", sym_path, "--out", bits) == 0
        other = tmp_path / "other.bin"
        assert run("build-grid", "--beta-samples", 4, "--alpha-samples", 24,
                   "--grid-out", other) == 0
        assert run("decode", "--grid", other, "--params-file", params_path,
                   "--bits", bits, "--out", tmp_path / "x.txt") == 5

    def test_truncated_bitstream_exits_5(self, codec_files, tmp_path):
        sym_path, params_path, grid_path = codec_files
        bits = tmp_path / "bits.bin"
        run("encode", "--grid", grid_path, "--params-file", params_path,
            "--symbols", sym_path, "--out", bits)
        blob = bits.read_bytes()
        bits.write_bytes(blob[: len(blob) - 11])
        assert run("decode", "--grid", grid_path, "--params-file", params_path,
                   "--bits", bits, "--out", tmp_path / "x.txt") == 5

    def test_missing_file_exits_3(self, codec_files, tmp_path):
        _, params_path, grid_path = codec_files
        assert run("encode", "--grid", grid_path, "--params-file", params_path,
                   "--symbols", tmp_path / "nope.txt", "--out", tmp_path / "o") == 3

    def test_bad_params_header_exits_2(self, codec_files, tmp_path):
        sym_path, _, grid_path = codec_files
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        assert run("encode", "--grid", grid_path, "--params-file", bad,
                   "--symbols", sym_path, "--out", tmp_path / "o") == 2

    def test_unparseable_params_value_exits_2(self, codec_files, tmp_path):
        sym_path, _, grid_path = codec_files
        bad = tmp_path / "bad.csv"
        bad.write_text("beta,alpha,mu\nnot_a_number,1.0,0.0\n")
        assert run("encode", "--grid", grid_path, "--params-file", bad,
                   "--symbols", sym_path, "--out", tmp_path / "o") == 2

    def test_deterministic_bitstream_bytes(self, codec_files, tmp_path):
        sym_path, params_path, grid_path = codec_files
        b1, b2 = tmp_path / "b1.bin", tmp_path / "b2.bin"
        run("encode", "--grid", grid_path, "--params-file", params_path,
            "--symbols", sym_path, "--out", b1)
        run("encode", "--grid", grid_path, "--params-file", params_path,
            "--symbols", sym_path, "--out", b2)
        assert b1.read_bytes() == b2.read_bytes()


class TestExitCodes:
    def test_numeric_failure_exits_4(self, tmp_path, monkeypatch):
        from ggmcodec.errors import NumericError

        def boom(args):
            raise NumericError("quadrature stalled", achieved=1e-3)

        monkeypatch.setattr(cli, "cmd_bound_curve", boom)
        assert run("bound-curve", "-o", tmp_path / "b.csv") == 4


class TestBoundCurve:
    def test_values_and_monotonicity(self, tmp_path):
        out = tmp_path / "bounds.csv"
        # 36 knots over [0.5, 4] puts a knot exactly at the unit shape
        assert run("bound-curve", "--knots", 36, "-o", out) == 0
        rows = [ln.split(",") for ln in out.read_text().strip().splitlines()[1:]]
        betas = [float(r[0]) for r in rows]
        vals = [float(r[1]) for r in rows]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert vals[betas.index(1.0)] == pytest.approx(0.043429, abs=1e-4)

    def test_bad_range_exits_2(self, tmp_path):
        assert run("bound-curve", "--beta-range", 0.1, 4.0,
                   "-o", tmp_path / "b.csv") == 2


class TestMismatchGrid:
    def test_structure_and_signs(self, tmp_path):
        out = tmp_path / "mm.csv"
        assert run("mismatch-grid", "--beta-count", 6, "--beta-range", 0.5, 2.0,
                   "--alpha-count", 6, "--alpha-range", 0.02, 10.0, "-o", out) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "beta,alpha,mu,noisy_bits,rounded_bits,delta,clipped"
        assert len(lines) == 1 + 6 * 6 * 2
        neg_offset = []
        for ln in lines[1:]:
            beta, alpha, mu, noisy, rounded, delta, clipped = ln.split(",")
            if float(mu) == 0.0:
                # shapes up to the Gaussian keep the noisy rate on top
                assert float(delta) >= -1e-6
            assert float(delta) <= 1.0
            if float(mu) == 0.5 and float(alpha) <= 0.02:
                neg_offset.append(float(delta))
        assert neg_offset and all(d < 0 for d in neg_offset)

    def test_single_cell_grid(self, tmp_path):
        out = tmp_path / "one.csv"
        assert run("mismatch-grid", "--beta-count", 1, "--beta-range", 2.0, 2.0,
                   "--alpha-count", 1, "--alpha-range", 1.0, 1.0,
                   "--mus", 0.0, "-o", out) == 0
        assert len(out.read_text().strip().splitlines()) == 2


class TestFitCommand:
    def test_mle_mode(self, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "samples.txt"
        np.savetxt(path, rng.standard_normal(100_000))
        out = tmp_path / "fit.json"
        assert run("fit", "--samples", path, "--mode", "mle", "-o", out) == 0
        data = json.loads(out.read_text())
        assert 1.9 <= data["beta"] <= 2.1

    def test_grid_mode_csv(self, tmp_path):
        rng = np.random.default_rng(3)
        path = tmp_path / "samples.txt"
        np.savetxt(path, np.rint(rng.standard_normal(5000) * 2))
        out, grid_csv = tmp_path / "fit.json", tmp_path / "grid.csv"
        assert run("fit", "--samples", path, "--mode", "grid",
                   "--beta-count", 2, "--beta-range", 1.0, 2.0,
                   "--alpha-count", 2, "--alpha-range", 1.0, 5.0,
                   "--grid-csv", grid_csv, "-o", out) == 0
        assert len(grid_csv.read_text().strip().splitlines()) == 5

    def test_empty_samples_exits_2(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        assert run("fit", "--samples", path, "-o", tmp_path / "o.json") == 2


class TestRdSim:
    def test_small_run_outputs(self, tmp_path):
        curves, summary = tmp_path / "c.csv", tmp_path / "s.json"
        assert run("rd-sim", "--source", "X1", "--samples", 50_000, "--steps", 6,
                   "--step-range", 0.3, 5.0, "--seed", 4,
                   "-o", curves, "--summary", summary) == 0
        data = json.loads(summary.read_text())
        assert data["schema_version"] == 1
        assert abs(data["bd_rate_percent"]) < 5.0
        lines = curves.read_text().strip().splitlines()
        assert lines[0] == "model,rate,mse,quality"
        assert sum(ln.startswith("gm,") for ln in lines) >= 4

    def test_rerun_is_byte_identical(self, tmp_path):
        args = ["rd-sim", "--source", "X2", "--samples", 20_000, "--steps", 5,
                "--step-range", 0.3, 4.0, "--seed", 9]
        run(*args, "-o", tmp_path / "c1.csv", "--summary", tmp_path / "s1.json")
        run(*args, "-o", tmp_path / "c2.csv", "--summary", tmp_path / "s2.json")
        assert (tmp_path / "c1.csv").read_bytes() == (tmp_path / "c2.csv").read_bytes()
        assert (tmp_path / "s1.json").read_bytes() == (tmp_path / "s2.json").read_bytes()

    def test_custom_source_file(self, tmp_path):
        spec = tmp_path / "src.json"
        spec.write_text(json.dumps(
            {"base_cov": [[2.0, 0.5], [0.5, 1.0]], "components": [[1.0, 1.0]]}
        ))
        assert run("rd-sim", "--source", spec, "--samples", 20_000, "--steps", 4,
                   "--step-range", 0.5, 3.0,
                   "-o", tmp_path / "c.csv", "--summary", tmp_path / "s.json") == 0

    def test_missing_source_file_exits_3(self, tmp_path):
        assert run("rd-sim", "--source", tmp_path / "missing.json",
                   "-o", tmp_path / "c.csv", "--summary", tmp_path / "s.json") == 3
