"""Closed-form cross-checks: peak-derivative identity, FSK projections, TWR."""
import numpy as np
import pytest

from toasim.attack import MaskSpec, apply_mask
from toasim.sigproc import Signal
from toasim.theory import (DerivationReport, PulseFamily,
                           advance_prediction_study, random_perturbation_pair,
                           tof_twr, verify_fsk_complex_mask_flip,
                           verify_fsk_real_mask,
                           verify_peak_derivative_identity)


def gaussian_burst(rate=40e6, n=2048, sigma=1.5e-6):
    t = (np.arange(n) - n / 2) / rate
    return Signal(np.exp(-t * t / (2.0 * sigma**2)), rate)


class TestPeakDerivativeIdentity:
    def test_zero_perturbation_passes_on_the_floor(self):
        x = gaussian_burst()
        rep = verify_peak_derivative_identity(x, x.with_samples(np.zeros(len(x))))
        assert rep.passed
        assert rep.rhs == 0.0

    def test_pure_scaling_has_no_first_order_shift(self):
        x = gaussian_burst()
        rep = verify_peak_derivative_identity(x, x.with_samples(1e-3 * x.samples))
        assert rep.passed
        # amplitude change alone leaves the peak in place: both sides ~ 0
        assert abs(rep.lhs) < 1e-12
        assert abs(rep.rhs) < 1e-12

    def test_leading_half_mask_agrees_within_a_percent(self):
        x = gaussian_burst()
        masked = apply_mask(x, MaskSpec(kind="truncation",
                                        period_s=len(x) / x.rate, duty=0.5))
        rep = verify_peak_derivative_identity(
            x, x.with_samples(masked.samples - x.samples))
        assert rep.passed
        assert rep.rel_err < 0.01
        # keeping the leading half drags the peak-power slope negative
        assert rep.lhs < 0 and rep.rhs < 0

    @pytest.mark.parametrize("seed", range(12))
    def test_random_perturbation_families(self, seed):
        x, dx = random_perturbation_pair(seed)
        assert verify_peak_derivative_identity(x, dx).passed

    def test_coarse_fd_step_rejected(self):
        x = gaussian_burst()
        with pytest.raises(ValueError, match="quarter sample"):
            verify_peak_derivative_identity(x, x.with_samples(np.zeros(len(x))),
                                            fd_step=1.0 / x.rate)

    def test_report_fields(self):
        rep = DerivationReport(1.0, 1.001, 0.001, 0.001, True)
        assert rep.passed and rep.abs_err == pytest.approx(rep.rel_err, rel=0.01)


class TestFskRealMask:
    @pytest.mark.parametrize("seed", range(8))
    def test_square_mask_projection_vanishes(self, seed):
        rep = verify_fsk_real_mask(seed, np.r_[np.ones(4), np.zeros(4)])
        assert rep.passed
        assert rep.rhs == 0.0

    def test_constant_mask(self):
        rep = verify_fsk_real_mask(0, [1.0])
        assert rep.passed

    def test_arbitrary_real_profile(self):
        rng = np.random.default_rng(11)
        rep = verify_fsk_real_mask(5, rng.uniform(0, 1, 16))
        assert rep.passed

    def test_complex_mask_rejected(self):
        with pytest.raises(ValueError, match="real mask"):
            verify_fsk_real_mask(0, np.array([1.0, 1j]))


class TestFskComplexMaskFlip:
    MASK = np.exp(0.25j * np.sin(2 * np.pi * np.arange(8) / 8))

    def test_conjugate_trajectory_flips_the_sign(self):
        v1, v2 = verify_fsk_complex_mask_flip(3, self.MASK)
        assert v1 != 0.0
        assert v2 == pytest.approx(-v1, rel=1e-12)

    def test_real_mask_projects_to_nothing(self):
        v1, v2 = verify_fsk_complex_mask_flip(3, np.ones(8))
        scale = abs(verify_fsk_complex_mask_flip(3, self.MASK)[0])
        assert abs(v1) < 1e-12 * max(scale, 1.0)
        assert abs(v2) < 1e-12 * max(scale, 1.0)

    def test_ensemble_mean_is_unbiased(self):
        # over random bit sequences the projection has zero mean: no fixed
        # complex mask advances the typical packet of either polarity
        vals = [verify_fsk_complex_mask_flip(s, self.MASK)[0]
                for s in range(1000)]
        mean = np.mean(vals)
        se = np.std(vals) / np.sqrt(len(vals))
        assert abs(mean) <= 3 * se


class TestTofTwr:
    def test_plain_exchange(self):
        assert tof_twr(1000e-9, 900e-9) == pytest.approx(50e-9, rel=1e-12)

    def test_clock_drift_inflates_the_estimate(self):
        got = tof_twr(1000e-9, 900e-9, drift=1e-5)
        assert got == pytest.approx(50.0045e-9, rel=1e-9)

    def test_zero_flight_time(self):
        assert tof_twr(900e-9, 900e-9) == 0.0

    def test_reply_longer_than_round_trip_rejected(self):
        with pytest.raises(ValueError, match="negative flight"):
            tof_twr(900e-9, 1000e-9)
        with pytest.raises(ValueError, match="nonnegative"):
            tof_twr(-1e-9, 0.0)

    def test_linear_in_round_trip(self):
        base = tof_twr(1e-6, 0.5e-6)
        assert tof_twr(1e-6 + 2e-9, 0.5e-6) - base == pytest.approx(
            1e-9, rel=1e-9)

    def test_drift_sensitivity_is_half_the_reply_time(self):
        h = 1e-9
        fd = (tof_twr(1e-6, 900e-9, h) - tof_twr(1e-6, 900e-9, 0.0)) / h
        assert fd == pytest.approx(900e-9 / 2, rel=1e-6)


class TestAdvancePredictionStudy:
    def test_zero_delta_row(self):
        # the shifted copy is an FFT round trip, so only round-off survives
        rows = advance_prediction_study(PulseFamily(), [0.0])
        assert abs(rows[0]["predicted_s"]) < 1e-18
        assert abs(rows[0]["measured_s"]) < 1e-18

    def test_ten_nanoseconds_predicted_closely(self):
        rows = advance_prediction_study(PulseFamily(), [10e-9])
        row = rows[0]
        assert row["measured_s"] == pytest.approx(10e-9, rel=0.02)
        assert row["predicted_s"] == pytest.approx(10e-9, rel=0.2)
        assert row["rel_err"] < 0.2

    def test_first_order_error_grows_with_delta(self):
        deltas = [1e-9, 5e-9, 10e-9, 20e-9, 50e-9, 80e-9]
        rows = advance_prediction_study(PulseFamily(), deltas)
        errs = [row["rel_err"] for row in rows]
        assert errs == sorted(errs)
        assert errs[-1] < 0.05

    def test_negative_delta_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            advance_prediction_study(PulseFamily(), [-1e-9])

    def test_short_duration_rejected(self):
        with pytest.raises(ValueError, match="support"):
            PulseFamily(sigma_s=1e-6, duration_s=4e-6).build()


class TestRandomPerturbationPair:
    def test_deterministic(self):
        xa, da = random_perturbation_pair(4)
        xb, db = random_perturbation_pair(4)
        np.testing.assert_array_equal(xa.samples, xb.samples)
        np.testing.assert_array_equal(da.samples, db.samples)

    def test_seeds_differ(self):
        xa, _ = random_perturbation_pair(1)
        xb, _ = random_perturbation_pair(2)
        assert not np.array_equal(xa.samples, xb.samples)

    def test_pair_is_aligned_and_nontrivial(self):
        for seed in range(6):
            x, dx = random_perturbation_pair(seed)
            assert len(x) == len(dx) and x.rate == dx.rate
            assert np.linalg.norm(dx.samples) > 0
