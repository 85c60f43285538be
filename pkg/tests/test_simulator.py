import json
import math
import pathlib
import sys

import numpy as np
import pytest

from onebit_doa import ChannelParams, ExperimentSpec, SystemConfig, aggregate, match_estimates, run_trial
from onebit_doa import simulator
from onebit_doa.gamp import GampConfig
from onebit_doa.oracles import brute_force_matching
from onebit_doa.simulator import (
    CSV_COLUMNS,
    TrialResult,
    noise_var_from_snr,
    read_rows_csv,
    run_experiment,
    snr_from_noise_var,
    trial_rng,
)

from conftest import REF_ALPHAS, REF_THETAS

GOLDEN = pathlib.Path(__file__).parent / "golden"
sys.path.insert(0, str(GOLDEN))
from make_golden import golden_trial, to_json  # noqa: E402


def _small_spec(**kw):
    cfg = SystemConfig(M=24, N_t=1, L=(2,), N_p=8, noise_var=0.1, N=4, seed=5)
    params = ChannelParams([-20.0, 35.0], [1.0 + 0.2j, -0.4 + 0.9j])
    base = dict(cfg=cfg, params=params, trials=3, gamp=GampConfig(t_max=30))
    base.update(kw)
    return ExperimentSpec(**base)


class TestMatching:
    def test_identity_up_to_permutation(self):
        pairs, rmse = match_estimates([20.005, -40.0, 20.0], REF_THETAS)
        assert rmse == 0.0
        assert pairs == [(1, 0), (2, 1), (0, 2)]

    def test_close_pair(self):
        pairs, rmse = match_estimates([19.9, 20.1], [20.0, 20.005])
        assert pairs == [(0, 0), (1, 1)]
        assert rmse == pytest.approx(math.sqrt((0.1**2 + 0.095**2) / 2), rel=1e-12)

    def test_against_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            nh, nt = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            th = rng.uniform(-60, 60, nh)
            tt = rng.uniform(-60, 60, nt)
            pairs, rmse = match_estimates(th, tt)
            brmse = brute_force_matching(th, tt)
            assert rmse == pytest.approx(brmse, rel=1e-12, abs=1e-12)

    def test_missed_and_empty(self):
        _, rmse = match_estimates([10.0], [10.0, 30.0])
        assert rmse == pytest.approx(math.sqrt(25 / 2))
        pairs, rmse = match_estimates([], [1.0, 2.0])
        assert pairs == [] and rmse == 5.0

    def test_surplus_ignored(self):
        _, rmse = match_estimates([10.0, 30.0, 77.0], [10.0, 30.0])
        assert rmse == 0.0


class TestSnr:
    def test_round_trip(self, ref_cfg):
        for snr in (0, 15, 40):
            assert snr_from_noise_var(noise_var_from_snr(snr, ref_cfg), ref_cfg) == pytest.approx(snr)

    def test_reference_value(self, ref_cfg):
        assert noise_var_from_snr(15, ref_cfg) == pytest.approx(3 / 10**1.5)


class TestAggregate:
    def _res(self, sq, order=2, nmse=0.1, conv=True):
        return TrialResult(sweep_value=1.0, trial_index=0, theta_true=np.zeros(2), sq_err_sum=sq,
                           model_order_detected=order, nmse_D=nmse, nmse_H=nmse, converged=conv,
                           matched_rmse_theta=math.sqrt(sq / 2))

    def test_single(self):
        r = self._res(0.02)
        row = aggregate([r])
        assert row["rmse_theta_deg"] == pytest.approx(r.matched_rmse_theta)
        assert row["nmse_D_db"] == pytest.approx(-10.0)
        assert row["detect_rate"] == 1.0 and row["trials"] == 1

    def test_pooled(self):
        a, b = 0.02, 0.08  # per-trial mean squared errors
        row = aggregate([self._res(2 * a), self._res(2 * b, order=1, conv=False)])
        assert row["rmse_theta_deg"] == pytest.approx(math.sqrt((a + b) / 2))
        assert row["detect_rate"] == 0.5 and row["conv_rate"] == 0.5

    def test_flat_recomputation(self):
        rng = np.random.default_rng(8)
        results, errs = [], []
        for i in range(100):
            e = rng.exponential(0.01, 2)
            errs.extend(e)
            results.append(self._res(e.sum(), nmse=float(rng.uniform(0.01, 1))))
        row = aggregate(results)
        assert row["rmse_theta_deg"] == pytest.approx(math.sqrt(np.mean(errs)), rel=1e-12)
        lin = np.mean([r.nmse_D for r in results])
        assert row["nmse_D_db"] == pytest.approx(10 * np.log10(lin), rel=1e-12)


class TestRunTrial:
    def test_golden(self):
        want = json.loads((GOLDEN / "nominal_trial.json").read_text())
        got = to_json(golden_trial())
        assert got["model_order_detected"] == want["model_order_detected"] == 3
        assert got["column_indices"] == want["column_indices"]
        assert got["iterations"] == want["iterations"]
        for k in ("theta_hat", "D_hat_re", "D_hat_im"):
            np.testing.assert_allclose(got[k], want[k], rtol=1e-9, atol=1e-12)
        for k in ("matched_rmse_theta", "nmse_D", "nmse_H"):
            assert got[k] == pytest.approx(want[k], rel=1e-8)

    def test_deterministic(self):
        spec = _small_spec()
        a, b = run_trial(spec, 0, 1), run_trial(spec, 0, 1)
        np.testing.assert_array_equal(a.theta_hat, b.theta_hat)
        np.testing.assert_array_equal(a.x_hat, b.x_hat)
        assert a.nmse_D == b.nmse_D
        c = run_trial(spec, 0, 2)
        assert not np.array_equal(a.x_hat, c.x_hat)

    def test_noiseless_bypass(self, ref_params):
        cfg = SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=0.0, N=8, seed=2024)
        r = run_trial(ExperimentSpec(cfg=cfg, params=ref_params, quantize=False))
        assert r.error is None and r.model_order_detected == 3
        du = np.abs(np.sin(np.deg2rad(r.theta_hat)) - np.sin(np.deg2rad(REF_THETAS)))
        assert np.all(du <= 1e-8)
        assert r.nmse_D <= 1e-10

    def test_failure_is_data(self, monkeypatch):
        def boom(*a, **k):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(simulator, "estimate_all_doas", boom)
        r = run_trial(_small_spec())
        assert "synthetic failure" in r.error
        assert r.matched_rmse_theta == 5.0 and r.nmse_D == 1.0

    def test_random_channels_flag(self):
        spec = _small_spec(random_channels=True)
        a, b = run_trial(spec, 0, 0), run_trial(spec, 0, 1)
        assert not np.array_equal(a.theta_true, b.theta_true)
        np.testing.assert_array_equal(run_trial(spec, 0, 0).theta_true, a.theta_true)

    def test_trace_kept(self):
        r = run_trial(_small_spec(), keep_trace=True)
        assert len(r.trace) == r.iterations and "lambda" in r.trace[0]


def test_rng_streams_distinct():
    draws = {trial_rng(1, "snr_db", p, t).integers(2**62) for p in range(5) for t in range(20)}
    assert len(draws) == 100
    assert trial_rng(1, "M", 0, 0).integers(2**62) != trial_rng(1, "snr_db", 0, 0).integers(2**62)


class TestExperiment:
    def test_sweep_rows_and_csv(self, tmp_path):
        spec = _small_spec(sweep_axis="snr_db", sweep_values=(0, 10, 20), trials=2)
        path = tmp_path / "out.csv"
        rows = run_experiment(spec, [path])
        assert len(rows) == 3
        text = path.read_text()
        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        back = read_rows_csv(path)
        assert [r["sweep_value"] for r in back] == [0.0, 10.0, 20.0]
        assert back[1]["rmse_theta_deg"] == rows[1]["rmse_theta_deg"]

    def test_m_sweep_configs(self):
        spec = _small_spec(sweep_axis="M", sweep_values=(8, 16), fixed_snr_db=15.0)
        assert [spec.point_config(i).M for i in range(2)] == [8, 16]
        assert spec.point_config(0).noise_var == pytest.approx(noise_var_from_snr(15.0, spec.cfg))

    def test_single_trial_reproduces_run_trial(self):
        spec = _small_spec(trials=1)
        row = run_experiment(spec)[0]
        r = run_trial(spec, 0, 0)
        assert row["rmse_theta_deg"] == pytest.approx(r.matched_rmse_theta, rel=1e-15)
        assert row["nmse_D_db"] == r.nmse_D_db

    def test_parallel_matches_serial(self, tmp_path):
        spec = _small_spec(sweep_axis="snr_db", sweep_values=(5, 25), trials=4)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(spec, [a], workers=1)
        run_experiment(spec, [b], workers=3)
        assert a.read_bytes() == b.read_bytes()

    def test_io_error_names_path(self, tmp_path):
        bad = tmp_path / "missing" / "x.csv"
        with pytest.raises(OSError, match="missing"):
            run_experiment(_small_spec(trials=1), [bad])

    @pytest.mark.parametrize("kw", [dict(trials=0), dict(sweep_axis="bogus", sweep_values=(1,)),
                                    dict(sweep_axis="M", sweep_values=())])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            _small_spec(**kw)


@pytest.mark.slow
def test_rmse_non_increasing_in_M(ref_params):
    """Over M in {30, 60, 90, 120} at 15 dB the RMSE never rises by more than
    twice the Monte Carlo standard error of the difference."""
    cfg = SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=1.0, N=8, seed=2024)
    spec = ExperimentSpec(cfg=cfg, params=ref_params, sweep_axis="M", sweep_values=(30, 60, 90, 120),
                          fixed_snr_db=15.0, trials=50)
    groups = simulator.run_trials(spec)
    rmse, se = [], []
    for g in groups:
        per = np.array([r.sq_err_sum / r.theta_true.size for r in g])
        m = per.mean()
        rmse.append(math.sqrt(m))
        se.append(per.std(ddof=1) / math.sqrt(per.size) / (2 * math.sqrt(m)))  # delta method
    for i in range(3):
        assert rmse[i + 1] <= rmse[i] + 2 * math.hypot(se[i], se[i + 1]), (rmse, se)
