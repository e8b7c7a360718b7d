import json

import pytest

from parashear.cli import main


def run(args):
    return main([str(a) for a in args])


def read_report(outdir):
    with open(outdir / "report.json") as fh:
        return json.load(fh)


class TestChainBasisCommands:
    def test_chain_basis(self, tmp_path):
        out = tmp_path / "cb"
        assert run(["chain-basis", "--algebra", "sl3", "--out", out,
                    "--no-figures"]) == 0
        rep = read_report(out)
        assert rep["gr_invariant"] == 13
        assert rep["lengths"] == [5, 3]
        assert rep["chain_basis"]["residuals"]["bracket"] < 1e-10

    def test_gr(self, tmp_path):
        out = tmp_path / "gr"
        assert run(["gr", "--algebra", "sl2sl2", "--out", out, "--no-figures"]) == 0
        rep = read_report(out)
        assert rep["gr_invariant"] == 6
        assert "chain_basis" not in rep

    def test_file_defined_algebra(self, tmp_path):
        from parashear import liealg
        payload = {
            "generator": liealg.matrix_to_json(liealg.sl3_regular_nilpotent()),
            "basis": [liealg.matrix_to_json(m) for m in liealg.sl3_basis()],
        }
        algebra = tmp_path / "algebra.json"
        algebra.write_text(json.dumps(payload))
        out = tmp_path / "file_alg"
        assert run(["gr", "--algebra", f"file:{algebra}", "--out", out,
                    "--no-figures"]) == 0
        assert read_report(out)["gr_invariant"] == 13


class TestCqVerify:
    def test_passes(self, tmp_path):
        out = tmp_path / "cq"
        assert run(["cq-verify", "--algebra", "sl2sl2", "--epsilon", 0.1,
                    "--N", 100, "--samples", 100, "--out", out]) == 0
        rep = read_report(out)
        assert rep["pass"] is True
        assert all(w["fraction"] == 1.0 for w in rep["windows"])
        assert rep["windows"][-1]["shift"] == -1.0
        assert (out / "windows.csv").exists()
        assert (out / "windows.png").exists()

    def test_missing_epsilon_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["cq-verify", "--out", tmp_path / "x"])
        assert exc.value.code == 2

    def test_no_qualifying_chain_exits_1(self, tmp_path):
        out = tmp_path / "sl2"
        assert run(["cq-verify", "--algebra", "sl2", "--epsilon", 0.1,
                    "--out", out, "--no-figures"]) == 1
        rep = read_report(out)
        assert rep["pass"] is False
        assert rep["error"]["kind"] == "NoQualifyingChain"


class TestHoroShear:
    def test_geodesic_case(self, tmp_path):
        out = tmp_path / "horo"
        assert run(["horo-shear", "--b", 1e-4, "--epsilon", 0.1,
                    "--t-max", 5000, "--samples", 200, "--out", out]) == 0
        rep = read_report(out)
        assert rep["residuals"]["max_D_comp"] < 1e-2
        assert rep["residuals"]["max_D_raw"] >= 0.5
        assert rep["extra"]["witness"]["M"] > 0
        assert (out / "divergence.csv").exists()
        assert (out / "divergence.png").exists()
        header = (out / "divergence.csv").read_text().splitlines()[0]
        assert header == "t,D_raw,D_comp,f"


class TestSigmaModel:
    def test_default(self, tmp_path):
        out = tmp_path / "sigma"
        assert run(["sigma-model", "--a", 1e-3, "--epsilon", 0.1,
                    "--out", out, "--no-figures"]) == 0
        rep = read_report(out)
        assert rep["extra"]["axioms"]["scaling"] < 1e-9
        assert rep["residuals"]["terminal_shift"] == pytest.approx(1.0, abs=1e-9)


class TestHeisShear:
    def test_small_run(self, tmp_path):
        out = tmp_path / "heis"
        assert run(["heis-shear", "--dy", 1e-4, "--epsilon", 0.3,
                    "--samples", 200, "--out", out]) == 0
        rep = read_report(out)
        assert rep["pass"] is True
        assert abs(rep["residuals"]["terminal_shift"]) >= rep["inputs"]["q"] / 2
        for name in ("shear.csv", "shear.png", "windows.csv", "windows.png"):
            assert (out / name).exists()

    def test_constant_roof_fails(self, tmp_path):
        roof_file = tmp_path / "roof.txt"
        roof_file.write_text("0 0 1.0 0.0\n")
        out = tmp_path / "const"
        assert run(["heis-shear", "--roof", roof_file, "--dy", 1e-4,
                    "--epsilon", 0.3, "--out", out, "--no-figures"]) == 1
        rep = read_report(out)
        assert rep["error"]["kind"] == "NotFound"
        assert "constant" in rep["error"]["message"]


class TestCf:
    def test_golden(self, tmp_path):
        out = tmp_path / "cf"
        assert run(["cf", "--alpha", "golden", "--depth", 15, "--out", out]) == 0
        rep = read_report(out)
        assert rep["partial_quotients"] == [1] * 15
        assert rep["bounded_type_at"]["1"] is True
        assert (out / "denominators.csv").exists()
        assert (out / "denominators.png").exists()


class TestConfigAndDeterminism:
    def test_config_file_with_override(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text("[cq-verify]\nepsilon = 0.1\nN = 50\nsamples = 80\n")
        out1 = tmp_path / "c1"
        assert run(["cq-verify", "--config", cfg, "--out", out1,
                    "--no-figures"]) == 0
        rep = read_report(out1)
        assert rep["inputs"]["epsilon"] == 0.1
        assert rep["inputs"]["n_param"] == 50
        out2 = tmp_path / "c2"
        assert run(["cq-verify", "--config", cfg, "--epsilon", 0.2,
                    "--out", out2, "--no-figures"]) == 0
        assert read_report(out2)["inputs"]["epsilon"] == 0.2

    def test_witness_dispatch(self, tmp_path):
        cfg = tmp_path / "w.ini"
        cfg.write_text("[witness]\nexperiment = sigma-model\na = 1e-3\n"
                       "epsilon = 0.1\n")
        out = tmp_path / "w"
        assert run(["witness", "--config", cfg, "--out", out,
                    "--no-figures"]) == 0
        assert read_report(out)["experiment"] == "sigma-witness"

    def test_witness_requires_config(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            run(["witness", "--out", tmp_path / "nope"])
        assert exc.value.code == 2

    def test_byte_identical_reports(self, tmp_path):
        out = tmp_path / "det"
        args = ["cq-verify", "--algebra", "sl2sl2", "--epsilon", 0.1,
                "--N", 100, "--samples", 60, "--seed", 7, "--out", out,
                "--no-figures"]
        assert run(args) == 0
        first = (out / "report.json").read_bytes()
        assert run(args) == 0
        assert (out / "report.json").read_bytes() == first


def test_emit_plot_data_validates_columns(tmp_path):
    from parashear.reporting import emit_plot_data
    with pytest.raises(ValueError):
        emit_plot_data({}, tmp_path / "no.csv")
    with pytest.raises(ValueError):
        emit_plot_data({"a": [1.0, 2.0], "b": [1.0]}, tmp_path / "bad.csv")
    emit_plot_data({"a": [1.0, 2.0], "b": [3.0, 4.5]}, tmp_path / "ok.csv")
    assert (tmp_path / "ok.csv").read_text().splitlines() == [
        "a,b", "1.0,3.0", "2.0,4.5"]


def test_extended_precision_env_toggle(monkeypatch, tmp_path):
    # the 64-bit accumulation mode stays within coarse tolerance of extended
    import parashear.skewflow as sk
    ss = sk.SkewShift("golden", 0.0)
    f = sk.default_roof()
    s_ext = sk.birkhoff_sum(ss, f, 5000, 0.1, 0.2)
    monkeypatch.setenv("PARASHEAR_PRECISION", "64")
    s_64 = sk.birkhoff_sum(ss, f, 5000, 0.1, 0.2)
    assert s_64 == pytest.approx(s_ext, abs=1e-8)
