"""Configuration, orchestration, manifests, and tabular output."""

import csv
import io
import math

import pytest

from eprbsim import (
    CoincidenceMode,
    ConfigError,
    EmptyEnsembleError,
    ExperimentConfig,
    RunManifest,
    run_bound_audit,
    run_chsh_experiment,
    run_correlation_sweep,
)
from eprbsim.runner import (
    BOUNDS_COLUMNS,
    CHSH_COLUMNS,
    SWEEP_COLUMNS,
    bounds_table_rows,
    chsh_table_rows,
    rows_to_csv,
    rows_to_table,
    sweep_table_rows,
)


def small_config(**overrides) -> ExperimentConfig:
    base = dict(
        alpha_grid_deg=(0.0, 45.0, 90.0),
        tau=0.01,
        window=0.01,
        n_events=50_000,
        seed=11,
        workers=1,
        audit_alpha_deg=(0.0, 90.0),
        audit_tau=(0.05,),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestExperimentConfig:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"n_events": 0},
            {"tau": 0.0},
            {"tau": 1.5},
            {"window": 0.0},
            {"workers": 0},
            {"seed": -1},
            {"d_exponent": -1.0},
            {"settings_deg": (0.0, 90.0, 45.0)},
            {"alpha_grid_deg": ()},
            {"alpha_grid_deg": (0.0, math.inf)},
            {"audit_tau": (0.0,)},
        ],
    )
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ConfigError):
            small_config(**overrides)

    def test_dict_roundtrip(self):
        config = small_config()
        assert ExperimentConfig.from_dict(config.to_dict()) == config

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            ExperimentConfig.from_dict({"taus": 0.1})

    def test_from_dict_parses_mode_string(self):
        config = ExperimentConfig.from_dict({"coincidence_mode": "continuous"})
        assert config.coincidence_mode is CoincidenceMode.CONTINUOUS


class TestCorrelationSweep:
    def test_equal_settings_row_is_exact(self):
        result = run_correlation_sweep(small_config())
        row = result.rows[0]
        assert row.alpha_deg == 0.0
        assert row.stats.e_conditional == -1.0
        assert row.reference == -1.0
        assert not row.flagged

    def test_reference_column_is_minus_cosine(self):
        result = run_correlation_sweep(small_config())
        for row in result.rows:
            assert row.reference == pytest.approx(
                -math.cos(math.radians(row.alpha_deg)), abs=1e-15
            )

    def test_zero_coincidence_row_flagged_not_fatal(self):
        config = small_config(
            tau=1e-6, window=1e-6, n_events=100_000, alpha_grid_deg=(90.0, 0.0)
        )
        result = run_correlation_sweep(config)
        starved = result.rows[0]
        assert starved.stats.n_coincident == 0
        assert starved.flagged
        assert starved.stats.e_conditional is None
        # the run continued past the starved angle
        assert result.rows[1].stats.e_conditional == -1.0

    def test_manifest_rows_mirror_stats(self):
        result = run_correlation_sweep(small_config())
        rows = result.manifest.results["rows"]
        assert len(rows) == 3
        assert rows[0]["e_conditional"] == -1.0
        assert {"gamma_hat", "stderr_gamma", "stderr_e", "flagged"} <= rows[0].keys()


class TestChshExperiment:
    def test_same_seed_reproduces_bit_identically(self):
        config = small_config(n_events=100_000)
        r1 = run_chsh_experiment(config)
        r2 = run_chsh_experiment(config)
        assert r1.manifest.reproducible_json() == r2.manifest.reproducible_json()
        assert r1.manifest.digest() == r2.manifest.digest()

    def test_worker_count_never_changes_results(self):
        solo = run_chsh_experiment(small_config(n_events=1_200_000, workers=1))
        pooled = run_chsh_experiment(small_config(n_events=1_200_000, workers=2))
        assert solo.manifest.reproducible_json() == pooled.manifest.reproducible_json()

    def test_empty_ensemble_names_the_pair(self):
        config = small_config(tau=1e-8, window=1e-8, n_events=300)
        with pytest.raises(EmptyEnsembleError, match="pair a[cd]"):
            run_chsh_experiment(config)

    def test_report_fields_consistent(self):
        result = run_chsh_experiment(small_config(n_events=400_000))
        report = result.report
        assert report.gamma_min == min(report.gammas)
        assert report.modified_bound == pytest.approx(6.0 / report.gamma_min - 4.0)
        assert report.violates_chsh == (report.chsh_lhs > 2.0)
        payload = result.manifest.results["report"]
        assert payload["chsh_lhs"] == report.chsh_lhs
        assert payload["violates_modified"] == report.violates_modified


class TestBoundAudit:
    def test_requires_same_bin_mode(self):
        with pytest.raises(ConfigError, match="same-bin"):
            run_bound_audit(small_config(coincidence_mode=CoincidenceMode.CONTINUOUS))

    def test_reports_cover_grid(self):
        config = small_config(n_events=200_000)
        result = run_bound_audit(config)
        assert len(result.reports) == 2  # one tau, two angles
        rows = result.manifest.results["rows"]
        assert {r["alpha_deg"] for r in rows} == {0.0, 90.0}
        for row in rows:
            assert row["satisfied"] is True
            assert row["quad_rel_tol"] in (1e-6, 1e-8)
            assert row["stderr_gamma"] is not None


class TestManifest:
    def test_json_roundtrip_identity(self):
        result = run_correlation_sweep(small_config())
        manifest = result.manifest
        assert RunManifest.from_json(manifest.to_json()) == manifest

    def test_reproducible_json_excludes_workers(self):
        config1 = small_config(workers=1)
        config2 = small_config(workers=2)
        m1 = run_correlation_sweep(config1).manifest
        m2 = run_correlation_sweep(config2).manifest
        assert m1.reproducible_json() == m2.reproducible_json()
        assert m1.workers != m2.workers

    def test_digest_is_stable_hex(self):
        manifest = run_correlation_sweep(small_config()).manifest
        digest = manifest.digest()
        assert len(digest) == 64
        assert digest == manifest.digest()


class TestTabularOutput:
    def test_sweep_csv_parses_back(self):
        result = run_correlation_sweep(small_config())
        text = rows_to_csv(sweep_table_rows(result), SWEEP_COLUMNS)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 3
        assert rows[0]["alpha_deg"] == "0.0"
        assert rows[0]["e_conditional"] == "-1.0"
        assert float(rows[1]["stderr_gamma"]) > 0.0

    def test_csv_empty_cell_for_undefined_correlation(self):
        config = small_config(tau=1e-7, window=1e-7, n_events=200, alpha_grid_deg=(45.0,))
        result = run_correlation_sweep(config)
        text = rows_to_csv(sweep_table_rows(result), SWEEP_COLUMNS)
        row = next(csv.DictReader(io.StringIO(text)))
        assert row["e_conditional"] == ""
        assert row["flagged"] == "true"

    def test_chsh_rows_include_settings(self):
        result = run_chsh_experiment(small_config(n_events=100_000))
        rows = chsh_table_rows(result)
        assert [r["pair"] for r in rows] == ["ac", "ad", "bc", "bd"]
        text = rows_to_csv(rows, CHSH_COLUMNS)
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert parsed[0]["setting_2_deg"] == "45.0"

    def test_bounds_table_renders(self):
        result = run_bound_audit(small_config(n_events=100_000))
        table = rows_to_table(bounds_table_rows(result), BOUNDS_COLUMNS)
        lines = table.strip().splitlines()
        assert lines[0].split()[:2] == ["alpha_deg", "tau"]
        assert len(lines) == 2 + len(result.reports)
