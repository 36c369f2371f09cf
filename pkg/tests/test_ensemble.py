import json

import numpy as np
import pytest
from scipy import stats as sps

from vadg.config import RunConfig
from vadg.ensemble import (EnsembleError, EnsembleSeries, chi_square_gaussian_test, common_grid,
                           ensemble_stats, hermite_align, pooled_histogram, run_ensemble, run_seed,
                           series_from_manifest, standardize, windowed_chi_square, write_stats_csv)


class TestSeeds:
    def test_xor_rule(self):
        assert [run_seed(5, r) for r in range(4)] == [5, 4, 7, 6]
        assert run_seed(0, 9) == 9


class TestAlignment:
    def test_reproduces_linear_and_monotone(self):
        t = np.array([0.0, 0.3, 1.0, 1.4, 2.0])
        lin = (t, 2 * t - 1)
        step = (t, np.array([0.0, 0.0, 1.0, 1.0, 1.0]))
        grid = np.linspace(0, 2, 41)
        out = hermite_align([lin, step], grid)
        np.testing.assert_allclose(out[0], 2 * grid - 1, atol=1e-13)
        # no overshoot on monotone data
        assert out[1].min() >= 0 and out[1].max() <= 1
        assert np.all(np.diff(out[1]) >= -1e-15)

    def test_drops_nan_and_checks_span(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        y = np.array([np.nan, 1.0, 2.0, 3.0])
        np.testing.assert_allclose(hermite_align([(t, y)], [1.0, 2.5]), [[1.0, 2.5]])
        with pytest.raises(ValueError, match="span"):
            hermite_align([(t, y)], [0.5, 1.0])
        with pytest.raises(ValueError):
            hermite_align([(t, y)], [2.0, 1.0])

    def test_common_grid(self):
        a = (np.arange(0, 5.01, 0.5), np.ones(11))
        b = (np.arange(0.2, 4.01, 0.2), np.ones(20))
        g = common_grid([a, b])
        assert g[0] == 0.2 and g[-1] == 4.0
        np.testing.assert_allclose(np.diff(g), 0.475, atol=0.03)
        np.testing.assert_allclose(common_grid([a, b], dt=0.1)[:2], [0.2, 0.3])


class TestStatistics:
    def test_moments_match_scipy(self):
        rng = np.random.default_rng(0)
        a = rng.gamma(2.0, size=(50, 7))
        s = ensemble_stats(a)
        np.testing.assert_allclose(s["mean"], a.mean(axis=0))
        np.testing.assert_allclose(s["std"], a.std(axis=0, ddof=1))
        np.testing.assert_allclose(s["skew"], sps.skew(a, axis=0, bias=True))
        np.testing.assert_allclose(s["kurt"], sps.kurtosis(a, axis=0, fisher=False, bias=True))
        np.testing.assert_allclose(s["excess_kurt"], s["kurt"] - 3)

    def test_degenerate_and_small_ensembles(self):
        a = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
        s = ensemble_stats(a)
        assert s["degenerate"].tolist() == [True, False]
        assert np.isnan(s["skew"][0]) and np.isnan(s["kurt"]).all()
        z = standardize(a, s)
        assert np.isnan(z[:, 0]).all()
        np.testing.assert_allclose(z[:, 1], [-1, 0, 1])

    def test_chi_square_matches_scipy(self):
        z = np.random.default_rng(1).standard_normal(200)
        res = chi_square_gaussian_test(z, n_bins=8)
        edges = sps.norm.ppf(np.linspace(0, 1, 9))
        obs = np.histogram(z, edges)[0]
        ref = sps.chisquare(obs)
        np.testing.assert_allclose(res.statistic, ref.statistic)
        np.testing.assert_allclose(res.p_value, ref.pvalue)
        assert res.n_bins == 8

    def test_chi_square_detects_non_normal(self):
        z = np.random.default_rng(2).uniform(-3, 3, 500)
        assert chi_square_gaussian_test(z).reject

    def test_chi_square_bin_reduction(self):
        z = np.random.default_rng(3).standard_normal(25)
        assert chi_square_gaussian_test(z, n_bins=10).n_bins == 5
        with pytest.raises(ValueError):
            chi_square_gaussian_test(z[:10])

    def test_windowed(self):
        z = np.random.default_rng(4).standard_normal((10, 30))
        chi2, p, rej = windowed_chi_square(z, window=5)
        assert np.isnan(chi2[:4]).all() and np.isfinite(chi2[4:]).all()
        ref = chi_square_gaussian_test(z[:, 10:15])
        np.testing.assert_allclose(chi2[14], ref.statistic)
        assert rej.shape == (2, 30)
        assert not (rej[1] & ~rej[0]).any()

    def test_pooled_histogram(self):
        z = np.random.default_rng(5).standard_normal((4, 50))
        grid = np.arange(50.0)
        edges, counts, expected = pooled_histogram(z, grid, 10, 19, n_bins=4)
        assert counts.sum() == 40 and expected == 10.0
        assert edges[0] == -np.inf and edges[-1] == np.inf and edges[2] == 0.0


def _fake_runner(cfg, run_dir):
    rng = np.random.default_rng(cfg.seed)
    t = np.linspace(0, 1, 21)
    return t, 1e-3 * rng.standard_normal(21)


class TestRunEnsemble:
    def test_pipeline_and_manifest(self, tmp_path):
        cfg = RunConfig(t_end=1.0)
        ens = run_ensemble(cfg, 6, base_seed=3, out_dir=str(tmp_path), workers=2, runner=_fake_runner)
        assert ens.seeds == [3, 2, 1, 0, 7, 6]
        assert ens.aligned.shape == (6, 21)
        np.testing.assert_allclose(ens.aligned[0], _fake_runner(cfg.replace(seed=3), None)[1], atol=1e-15)
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert all(r["status"] == "complete" for r in man["runs"])
        again = series_from_manifest(tmp_path / "manifest.json")
        np.testing.assert_allclose(again.aligned, ens.aligned)
        write_stats_csv(tmp_path / "stats.csv", ens, window=5, n_bins=4)
        head = (tmp_path / "stats.csv").read_text().splitlines()
        assert head[0].startswith("t,mean,std,skew,kurt,chi2,p,reject05,reject01")
        assert len(head) == 22

    def test_failure_is_recorded(self, tmp_path):
        def runner(cfg, run_dir):
            if cfg.seed == 1:
                raise RuntimeError("boom")
            return _fake_runner(cfg, run_dir)

        with pytest.raises(EnsembleError) as exc:
            run_ensemble(RunConfig(), 3, 0, str(tmp_path), runner=runner)
        assert exc.value.index == 1
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert man["runs"][1]["status"].startswith("failed")
        with pytest.raises(EnsembleError):
            series_from_manifest(tmp_path / "manifest.json")

    def test_needs_two_runs(self, tmp_path):
        with pytest.raises(ValueError):
            run_ensemble(RunConfig(), 1, 0, str(tmp_path), runner=_fake_runner)

    def test_from_series(self):
        t = np.linspace(0, 1, 11)
        ens = EnsembleSeries.from_series([(t, t), (t, 2 * t), (t, 3 * t)])
        assert ens.n_runs == 3
        np.testing.assert_allclose(ens.stats["mean"], 2 * ens.grid)
