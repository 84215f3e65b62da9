"""Configuration, pipeline orchestration, studies, slope fitting, exit codes."""

import numpy as np
import pytest

from isomesh.cli import (
    ConfigError,
    NonPositiveValue,
    PipelineConfig,
    convergence_study,
    fit_slope,
    format_report,
    load_config,
    main,
    run_pipeline,
)


class TestFitSlope:
    def test_two_point_exact(self):
        assert fit_slope([(8, 1 / 64), (16, 1 / 256)]) == pytest.approx(-2.0, abs=1e-12)

    def test_constant(self):
        assert fit_slope([(8, 3.0), (16, 3.0), (32, 3.0)]) == pytest.approx(0.0)

    def test_synthetic_exact_quadratic(self):
        pairs = [(n, float(n) ** -2) for n in (8, 16, 32, 64)]
        assert fit_slope(pairs) == pytest.approx(-2.0, abs=1e-12)

    def test_noisy_first_order(self):
        rng = np.random.default_rng(0)
        pairs = [(n, (1 + 0.01 * rng.uniform(-1, 1)) / n) for n in (8, 16, 32, 64)]
        assert abs(fit_slope(pairs) + 1.0) <= 0.05

    def test_nonpositive(self):
        with pytest.raises(NonPositiveValue):
            fit_slope([(8, 1.0), (16, 0.0)])
        with pytest.raises(NonPositiveValue):
            fit_slope([(8, 1.0), (16, -2.0)])

    def test_too_few(self):
        with pytest.raises(ValueError):
            fit_slope([(8, 1.0)])


class TestConfig:
    def test_defaults(self):
        cfg = load_config()
        assert cfg.spec == "clifford"
        assert cfg.n == 16
        assert cfg.tol == 1e-10
        assert cfg.n_list == (8, 16, 32, 64)

    def test_file_and_overrides(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# comment\n[pipeline]\nspec = flat-plane\nn = 4\ntol = 1e-8\n"
            "embedding_check = true\nn_list = 4,8,16\n"
        )
        cfg = load_config(str(path), {"n": 8})
        assert cfg.spec == "flat-plane"
        assert cfg.n == 8
        assert cfg.tol == 1e-8
        assert cfg.embedding_check is True
        assert cfg.n_list == (4, 8, 16)

    def test_zero_tol_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("tol = 0\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("subdivisions = 8\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("tol\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_config("/nonexistent/path.cfg")

    def test_bad_values(self, tmp_path):
        for text in ("n = four\n", "embedding_check = maybe\n", "gamma = 1,2,3\n"):
            path = tmp_path / "bad.cfg"
            path.write_text(text)
            with pytest.raises(ConfigError):
                load_config(str(path))

    def test_unknown_spec_is_config_error(self):
        cfg = PipelineConfig(spec="moebius")
        with pytest.raises(ConfigError):
            run_pipeline(cfg, n=4)


class TestRunPipeline:
    def test_flat_plane_exact(self):
        cfg = PipelineConfig(spec="flat-plane", embedding_check=True)
        res = run_pipeline(cfg, n=4)
        r = res.report
        assert r["solve_iterations"] == 0
        assert r["apex_offset_max"] <= 1e-12
        assert r["pl_c0"] <= 1e-12
        assert r["pl_c1"] <= 1e-12
        assert r["isotropy"] == "pass"
        assert r["immersion"] == "pass"
        assert r["embedding"] == "pass"

    def test_report_keys_and_cross_identity(self):
        cfg = PipelineConfig(spec="product:figure8,circle")
        res = run_pipeline(cfg, n=8)
        r = res.report
        for key in ("mu_c0", "mu_c1w", "mu_holder", "correction_c0",
                    "tri_c0", "pl_c0", "pl_c1", "interp_c0"):
            assert key in r
        # Two code paths, one quantity: mu_c0 * N^-2 vs max |liouville|.
        assert abs(r["mu_c0"] / 64.0 - r["liouville_max"]) <= 1e-12
        assert r["embedding"] == "skipped"


class TestStudy:
    def test_requires_three_entries(self):
        cfg = PipelineConfig(spec="flat-plane", n_list=(4, 8))
        with pytest.raises(ConfigError):
            convergence_study(cfg)
        cfg = PipelineConfig(spec="flat-plane", n_list=(8, 4, 16))
        with pytest.raises(ConfigError):
            convergence_study(cfg)

    def test_figure8_study_rows_and_slopes(self):
        cfg = PipelineConfig(spec="product:figure8,circle", n_list=(4, 8, 16))
        result = convergence_study(cfg)
        assert len(result.rows) == 3
        assert all(row.error is None for row in result.rows)
        assert result.slopes["mu_c0"] is not None
        lines = result.table.strip().split("\n")
        assert lines[0].startswith("n,mu_c0,")
        assert sum(1 for line in lines if line.startswith("# slope")) == 7

    def test_flat_plane_study_has_na_slopes(self):
        # On the identity chart every norm column is exactly zero: slopes are
        # reported as NA rather than fabricated.
        cfg = PipelineConfig(spec="flat-plane", rotation=0.0, n_list=(4, 8, 16))
        result = convergence_study(cfg)
        assert all(v is None for v in result.slopes.values())
        assert "# slope mu_c0 = NA" in result.table

    def test_determinism(self):
        cfg = PipelineConfig(spec="product:figure8,circle", n_list=(4, 8, 16))
        a = convergence_study(cfg).table
        b = convergence_study(cfg).table
        assert a == b

    def test_failure_markers(self):
        cfg = PipelineConfig(spec="product:figure8,circle", n_list=(4, 8, 16),
                             max_iter=0)
        result = convergence_study(cfg)
        assert all(row.error is not None for row in result.rows)
        assert "failed: MaxIterExceeded" in result.table

    def test_timings_column_optional(self):
        cfg = PipelineConfig(spec="flat-plane", n_list=(4, 8, 16), timings=True)
        result = convergence_study(cfg)
        assert result.table.split("\n")[0].endswith(
            "t_sample,t_solve,t_refine,t_build,t_verify"
        )


class TestMain:
    def test_sample_subcommand(self, capsys):
        assert main(["sample", "--spec", "clifford", "--n", "8"]) == 0
        out = capsys.readouterr().out
        assert "mu_c0 = " in out
        assert "facets = 65" in out

    def test_solve_and_verify(self, capsys):
        assert main(["solve", "--spec", "product:figure8,circle", "--n", "8"]) == 0
        assert main(["verify", "--spec", "product:figure8,circle", "--n", "8"]) == 0
        out = capsys.readouterr().out
        assert "immersion = pass" in out

    def test_verify_clifford(self, capsys):
        assert main(["verify", "--spec", "clifford", "--n", "16"]) == 0
        out = capsys.readouterr().out
        assert "isotropy = pass" in out
        assert "immersion = pass" in out

    def test_export_writes_files(self, tmp_path, capsys):
        out = tmp_path / "mesh.symmesh"
        code = main(
            ["export", "--spec", "flat-plane", "--n", "2", "--out", str(out)]
        )
        assert code == 0
        assert out.exists()
        assert (tmp_path / "mesh.symmesh.report").exists()

    def test_export_requires_out(self, capsys):
        assert main(["export", "--spec", "flat-plane", "--n", "2"]) == 2

    def test_config_error_exit_code(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("tol = 0\n")
        assert main(["sample", "--config", str(path)]) == 2

    def test_solver_failure_exit_code(self, tmp_path):
        path = tmp_path / "hard.cfg"
        path.write_text("spec = product:figure8,circle\nn = 8\nmax_iter = 0\n")
        assert main(["solve", "--config", str(path)]) == 3

    def test_certification_failure_exit_code(self, tmp_path):
        # The figure-eight torus self-intersects: embedding check fails.
        assert (
            main(
                [
                    "verify",
                    "--spec",
                    "product:figure8,circle",
                    "--n",
                    "8",
                    "--embedding-check",
                ]
            )
            == 4
        )

    def test_study_to_file_deterministic(self, tmp_path):
        cfg = tmp_path / "study.cfg"
        cfg.write_text("spec = product:figure8,circle\nn_list = 4,8,16\n")
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert main(["study", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["study", "--config", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_report_format_stable(self):
        text = format_report({"a": 1.0, "b": "pass", "c": 3})
        assert text == "a = 1\nb = pass\nc = 3\n"
