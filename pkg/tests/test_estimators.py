import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lowdepth_qmc import estimators as est
from lowdepth_qmc.estimators import (
    MeasurementRecord,
    RecordEntry,
    Schedule,
    build_exp_schedule,
    build_kp_schedule,
    canonical_qae,
    classical_fit,
    classical_mc,
    fisher_bound,
    kp_estimate,
    mle_fit,
    mle_qae,
    parallel_split_estimate,
    run_schedule,
)
from lowdepth_qmc.oracle import OracleSpec, discretize_lognormal, european_call, split_market_oracle
from lowdepth_qmc.qae import NOISELESS, NoiseModel, derive_seed, p_one, theta_from_amplitude

A = 0.3
ORACLE = OracleSpec.direct(A)


def independent_calls(schedule):
    return sum(e.shots * (2 * e.depth + 1) for e in schedule.entries)


def expected_record(a, schedule, noise=NOISELESS):
    theta = theta_from_amplitude(a)
    return MeasurementRecord(tuple(
        RecordEntry(e.depth, e.shots, int(round(e.shots * p_one(theta, e.depth, noise))))
        for e in schedule.entries
    ))


class TestExpSchedule:
    def test_k0(self):
        assert build_exp_schedule(0).depths == [0]

    def test_k3(self):
        assert build_exp_schedule(3).depths == [0, 1, 2, 4]

    def test_k10_total(self):
        # 1 + sum_{j<10} (2^{j+1} + 1) = 2057
        s = build_exp_schedule(10, 100)
        assert s.total_calls == 100 * (1 + sum(2 ** (j + 1) + 1 for j in range(10)))
        assert s.total_calls == 205_700

    def test_negative(self):
        with pytest.raises(ValueError):
            build_exp_schedule(-1)


class TestKPSchedule:
    def test_beta_one_is_classical(self):
        s = build_kp_schedule(1e-2, 1.0)
        assert set(s.depths) == {0}
        assert s.total_calls >= 10**4

    def test_full_depth(self):
        s = build_kp_schedule(1e-3, 0.0)
        assert s.max_depth == 1000 and s.max_serial_calls == 2001

    def test_two_thirds(self):
        s = build_kp_schedule(1e-3, 2 / 3)
        assert s.max_depth == 10 and s.max_serial_calls == 21

    @settings(max_examples=100, deadline=None)
    @given(
        log_inv_eps=st.floats(0.5, 4.0),
        beta=st.floats(0.0, 1.0),
        spr=st.integers(1, 200),
    )
    def test_call_and_depth_bounds(self, log_inv_eps, beta, spr):
        eps = 10.0**-log_inv_eps
        s = build_kp_schedule(eps, beta, spr)
        cap = est.kp_depth_cap(eps, beta)
        target = (1 / eps) ** (1 + beta)
        assert s.max_depth <= cap
        assert target * (1 - 1e-9) <= s.total_calls <= target + spr * (2 * cap + 1)
        assert s.total_calls == independent_calls(s)

    @pytest.mark.parametrize("eps,beta", [(0.5, 0.3), (0.0, 0.3), (0.1, -0.1), (0.1, 1.1)])
    def test_domain(self, eps, beta):
        with pytest.raises(ValueError):
            build_kp_schedule(eps, beta)

    def test_auto_round_size_in_range(self):
        for eps in (10**-1.5, 1e-2, 1e-3):
            for beta in (0, 1 / 3, 2 / 3, 1):
                assert 20 <= est.kp_shots_per_round(eps, beta) <= 100


class TestRunSchedule:
    def test_zero_amplitude(self):
        rec = run_schedule(OracleSpec.direct(0.0), build_exp_schedule(6), NOISELESS, 1)
        assert all(e.hits == 0 for e in rec.entries)

    def test_depolarized(self):
        rec = run_schedule(ORACLE, build_exp_schedule(5, 20_000), NoiseModel(1.0), 1)
        for e in rec.entries:
            assert abs(e.hits / e.shots - 0.5) < 0.015

    def test_reproducible_and_executor_independent(self):
        s = build_exp_schedule(8)
        a = run_schedule(ORACLE, s, NoiseModel(0.01), 42)
        b = run_schedule(ORACLE, s, NoiseModel(0.01), 42)
        with ThreadPoolExecutor(4) as pool:
            c = run_schedule(ORACLE, s, NoiseModel(0.01), 42, executor=pool)
        assert a == b == c
        assert run_schedule(ORACLE, s, NoiseModel(0.01), 43) != a

    def test_record_csv_round_trip(self):
        rec = run_schedule(ORACLE, build_exp_schedule(4), NOISELESS, 3)
        assert MeasurementRecord.from_csv(rec.to_csv()) == rec
        assert rec.total_calls == build_exp_schedule(4).total_calls


class TestMLEFit:
    def test_all_hits(self):
        rec = MeasurementRecord((RecordEntry(0, 50, 50),))
        assert mle_fit(rec) == pytest.approx(math.pi / 2)

    @settings(max_examples=100, deadline=None)
    @given(shots=st.integers(1, 10_000), frac=st.floats(0, 1))
    def test_depth_zero_is_sample_mean(self, shots, frac):
        hits = int(round(frac * shots))
        rec = MeasurementRecord((RecordEntry(0, shots, hits),))
        assert math.sin(mle_fit(rec)) ** 2 == pytest.approx(hits / shots, abs=1e-4)

    def test_expected_counts_recover_amplitude(self):
        # rounding hits to integers moves the optimum by about 1/shots; 1e4 shots keeps it below 1e-4
        rec = expected_record(A, build_exp_schedule(6, 10_000))
        assert math.sin(mle_fit(rec)) ** 2 == pytest.approx(A, abs=1e-4)

    def test_expected_counts_with_noise(self):
        noise = NoiseModel(0.005)
        rec = expected_record(A, build_exp_schedule(7), noise)
        assert math.sin(mle_fit(rec, noise)) ** 2 == pytest.approx(A, abs=1e-3)

    def test_matches_likelihood_maximum_on_dense_grid(self):
        rec = run_schedule(ORACLE, build_exp_schedule(5), NOISELESS, 9)
        grid = np.linspace(0, math.pi / 2, 200_001)
        best = grid[np.argmax(est.log_likelihood(grid, rec))]
        theta = mle_fit(rec)
        assert est.log_likelihood(theta, rec) >= est.log_likelihood(best, rec) - 1e-9


class TestClassical:
    def test_zero(self):
        r = classical_mc(OracleSpec.direct(0.0), 1000, 1)
        assert r.a_hat == 0.0

    def test_one(self):
        r = classical_mc(OracleSpec.direct(1.0), 1000, 1)
        assert (r.a_hat, r.ci_low, r.ci_high) == (1.0, 1.0, 1.0)

    def test_accounting(self):
        r = classical_mc(ORACLE, 1234, 5)
        assert r.total_oracle_calls == 1234 and r.max_serial_depth == 1
        assert r.ci_low <= r.a_hat <= r.ci_high
        assert r.half_width == pytest.approx(est.Z99 * math.sqrt(r.a_hat * (1 - r.a_hat) / 1234))

    def test_equals_mle_on_depth_zero(self):
        s = Schedule.of([(0, 5000)])
        assert mle_qae(ORACLE, s, NOISELESS, 7).a_hat == pytest.approx(classical_mc(ORACLE, 5000, 7).a_hat, abs=1e-12)


class TestCanonical:
    def test_exact_phase(self):
        assert canonical_qae(OracleSpec.direct(0.5), 2, 1, 0).a_hat == pytest.approx(0.5, abs=1e-15)

    def test_zero(self):
        assert canonical_qae(OracleSpec.direct(0.0), 8, 5, 0).a_hat == 0.0

    def test_accounting(self):
        r = canonical_qae(ORACLE, 6, 3, 0)
        assert r.max_serial_depth == 2 * 63 + 1
        assert r.total_oracle_calls == 3 * 127
        assert r.ci_low <= r.a_hat <= r.ci_high

    @pytest.mark.parametrize("m_bits", [0, 15])
    def test_size_error(self, m_bits):
        with pytest.raises(ValueError):
            canonical_qae(ORACLE, m_bits, 1, 0)


class TestKP:
    def test_beta_one_matches_classical_budget(self):
        r = kp_estimate(ORACLE, 1e-2, 1.0, NOISELESS, 1)
        assert r.max_serial_depth == 1
        assert 10**4 <= r.total_oracle_calls <= 10**4 + 100

    def test_two_thirds(self):
        r = kp_estimate(ORACLE, 1e-3, 2 / 3, NOISELESS, 1)
        assert r.max_serial_depth == 21
        assert 10**5 <= r.total_oracle_calls <= 1.05e5
        assert r.method == "kp"

    def test_beta_one_reduction_on_shared_record(self):
        s = build_kp_schedule(1e-2, 1.0)
        rec = run_schedule(ORACLE, s, NOISELESS, 11)
        assert math.sin(mle_fit(rec)) ** 2 == pytest.approx(classical_fit(rec), abs=1e-12)

    def test_depth_bound(self):
        for beta in (0, 1 / 3, 2 / 3, 1):
            r = kp_estimate(ORACLE, 10**-2.5, beta, NOISELESS, 2)
            assert r.max_serial_depth <= 2 * math.ceil((10**2.5) ** (1 - beta)) + 1


class TestFisher:
    def test_bernoulli(self):
        s = Schedule.of([(0, 400)])
        assert fisher_bound(s, theta_from_amplitude(A), NOISELESS) == pytest.approx(math.sqrt(A * (1 - A) / 400))

    def test_no_information(self):
        assert fisher_bound(build_exp_schedule(4), 0.5, NoiseModel(1.0)) == math.inf

    def test_crlb_sanity(self):
        theta = theta_from_amplitude(A)
        for k in (2, 4, 6, 8):
            s = build_exp_schedule(k)
            errs = [mle_qae(ORACLE, s, NOISELESS, derive_seed(100, k, i)).a_hat - A for i in range(50)]
            rmse = math.sqrt(np.mean(np.square(errs)))
            bound = fisher_bound(s, theta)
            assert 0.8 * bound <= rmse <= 4 * bound, (k, rmse, bound)


def test_call_accounting_every_estimator():
    s = build_exp_schedule(5, 37)
    assert mle_qae(ORACLE, s, NOISELESS, 1).total_oracle_calls == independent_calls(s)
    assert mle_qae(ORACLE, s, NOISELESS, 1).max_serial_depth == 33
    r = kp_estimate(ORACLE, 1e-2, 1 / 3, NOISELESS, 1)
    assert r.total_oracle_calls == independent_calls(build_kp_schedule(1e-2, 1 / 3, est.kp_shots_per_round(1e-2, 1 / 3)))


def test_reports_are_pure_functions_of_seed():
    for f in (
        lambda s: classical_mc(ORACLE, 500, s),
        lambda s: canonical_qae(ORACLE, 6, 5, s),
        lambda s: mle_qae(ORACLE, build_exp_schedule(5), NoiseModel(0.01), s),
        lambda s: kp_estimate(ORACLE, 1e-2, 1 / 3, NOISELESS, s),
    ):
        assert f(17) == f(17)


class TestParallelSplit:
    def test_single_bucket_is_mle(self):
        eps = 2**-6
        split = parallel_split_estimate([ORACLE], [1.0], eps, 5)
        direct = mle_qae(ORACLE, build_exp_schedule(6), NOISELESS, derive_seed(5, 0))
        assert split.a_hat == direct.a_hat
        assert split.total_oracle_calls == direct.total_oracle_calls

    def test_zero_buckets(self):
        r = parallel_split_estimate([OracleSpec.direct(0.0)] * 4, [0.25] * 4, 1e-2, 1)
        assert r.a_hat == 0.0

    def test_errors(self):
        with pytest.raises(ValueError):
            parallel_split_estimate([ORACLE, ORACLE], [1.0], 1e-2, 1)
        with pytest.raises(ValueError):
            parallel_split_estimate([ORACLE, ORACLE], [0.7, 0.7], 1e-2, 1)

    @pytest.mark.slow
    def test_sixteen_buckets_versus_unsplit(self):
        model = discretize_lognormal(100, 0, 0.2, 1, 10)
        oracle = OracleSpec.market(model, european_call(100, model))
        buckets, weights = split_market_oracle(oracle, 16)
        eps = 2**-10
        seeds = range(40)
        split = [parallel_split_estimate(buckets, weights, eps, s) for s in seeds]
        # unsplit run at a matched call budget: K = 10 with 4x the rounds
        unsplit = [mle_qae(oracle, build_exp_schedule(10, 400), NOISELESS, s) for s in seeds]
        truth = oracle.value

        def rmse(reports):
            return math.sqrt(np.mean([(r.value - truth) ** 2 for r in reports]))

        calls_split = split[0].total_oracle_calls
        calls_unsplit = unsplit[0].total_oracle_calls
        assert abs(calls_split / calls_unsplit - 1) < 0.05
        assert rmse(split) <= 1.5 * rmse(unsplit)
        assert 3 <= unsplit[0].max_serial_depth / split[0].max_serial_depth <= 5
