import math

import numpy as np
import pytest

from mmct.capacity_outage import (
    OutageCurve,
    RateTargets,
    Scheme,
    capacity_bounds,
    outage_closed_mmct_h,
    outage_closed_nr,
    outage_curves,
    outage_numeric,
    outage_thresholds,
    rate_mmct,
    rate_nr,
    theta_grid,
)
from mmct.errors import ValidationError


def default_targets(m_antennas=64):
    # fair split at the reference configuration: rates (12, 0.6, 12)
    return RateTargets.fair_split(
        nr_rate=12.0, rbs_per_layer=20, shared_haptic_rbs=2, layers=2, tx_antennas=m_antennas
    )


class TestRates:
    def test_rate_nr_values(self):
        assert rate_nr(1.0, 1.0) == pytest.approx(2.0)
        assert rate_nr(63.0, 63.0) == pytest.approx(12.0)
        assert rate_nr(3.0, 0.0) == pytest.approx(2.0)

    def test_rate_nr_validation(self):
        with pytest.raises(ValidationError):
            rate_nr(-1.0, -2.0)
        with pytest.raises(ValidationError):
            rate_nr(1.0, 2.0)

    def test_rate_mmct_degenerate_splits(self):
        r_h, r_v = rate_mmct(5.0, 2.0, 20, 0)
        assert r_h == 0.0
        assert r_v == pytest.approx(rate_nr(5.0, 2.0))
        r_h, r_v = rate_mmct(5.0, 2.0, 20, 20)
        assert r_h == pytest.approx(math.log2(6.0))
        assert r_v == pytest.approx(math.log2(3.0))

    def test_rate_mmct_hand_value(self):
        r_h, r_v = rate_mmct(63.0, 63.0, 20, 2)
        assert r_h == pytest.approx(0.6)
        assert r_v == pytest.approx(11.4)

    def test_rate_conservation_identity(self):
        rng = np.random.default_rng(0)
        lam = rng.exponential(50.0, size=(100_000, 2))
        l1 = lam.max(axis=1)
        l2 = lam.min(axis=1)
        r_h, r_v = rate_mmct(l1, l2, 20, 2)
        assert np.max(np.abs(r_h + r_v - rate_nr(l1, l2))) <= 1e-12


class TestCapacityBounds:
    def test_independent_limit(self):
        c_nr, _, _ = capacity_bounds(math.pi / 2, 64, 63.0 / 64, 20, 2)
        assert c_nr == pytest.approx(12.0)

    def test_fully_correlated_limit(self):
        c_nr, _, _ = capacity_bounds(0.0, 64, 31.5 / 64, 20, 2)
        assert c_nr == pytest.approx(6.0)

    def test_haptic_share_value(self):
        _, c_h, _ = capacity_bounds(0.0, 64, 63.0 / 64, 20, 2)
        assert c_h == pytest.approx(0.1 * math.log2(127.0))

    def test_split_adds_up(self):
        theta = np.linspace(-1.5, math.pi / 2, 101)
        c_nr, c_h, c_v = capacity_bounds(theta, 64, 0.3, 20, 2)
        assert np.allclose(c_h + c_v, c_nr)

    def test_symmetry_in_theta(self):
        a = capacity_bounds(0.7, 64, 0.5, 20, 2)
        b = capacity_bounds(-0.7, 64, 0.5, 20, 2)
        assert np.allclose(a, b)

    def test_haptic_capacity_grows_with_shared_rbs(self):
        values = [capacity_bounds(0.4, 64, 0.5, 20, b1)[1] for b1 in range(0, 21)]
        assert np.all(np.diff(values) > 0)

    def test_theta_range_validation(self):
        with pytest.raises(ValidationError):
            capacity_bounds(math.pi, 64, 0.5, 20, 2)
        with pytest.raises(ValidationError):
            capacity_bounds(-math.pi / 2, 64, 0.5, 20, 2)

    def test_positive_snr_required(self):
        with pytest.raises(ValidationError):
            capacity_bounds(0.1, 64, 0.0, 20, 2)


class TestOutageNumeric:
    def test_full_and_zero_outage_cases(self):
        targets = default_targets()
        assert outage_numeric(Scheme.MMCT_H, targets, 20.0 / 64, 10_000) == 1.0
        assert outage_numeric(Scheme.MMCT_H, targets, 100.0 / 64, 10_000) == 0.0
        assert outage_numeric(Scheme.NR, targets, 30.0 / 64, 10_000) == 1.0
        assert outage_numeric(Scheme.NR, targets, 3000.0 / 64, 10_000) == 0.0

    def test_haptic_spot_value_against_closed_form(self):
        targets = default_targets()
        p = outage_numeric("mmct_h", targets, 42.0 / 64, 1_000_000)
        assert p == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_unknown_scheme(self):
        with pytest.raises(ValidationError):
            outage_numeric("other", default_targets(), 0.5, 10_000)

    def test_small_grid_rejected(self):
        with pytest.raises(ValidationError):
            outage_numeric(Scheme.NR, default_targets(), 0.5, 100)

    def test_grid_covers_half_open_interval(self):
        grid = theta_grid(1000)
        assert grid[0] > -math.pi / 2
        assert grid[-1] == pytest.approx(math.pi / 2)


class TestClosedForms:
    def test_nr_thresholds(self):
        th = outage_thresholds(default_targets())
        assert th["nr_zero_db"] == pytest.approx(10 * math.log10(4095 / 2), abs=1e-9)
        assert th["nr_full_db"] == pytest.approx(10 * math.log10(63), abs=1e-9)
        assert th["mmct_h_zero_db"] == pytest.approx(10 * math.log10(63), abs=1e-9)

    def test_haptic_cases(self):
        targets = default_targets()
        assert outage_closed_mmct_h(targets, 31.0 / 64) == 1.0
        assert outage_closed_mmct_h(targets, 64.0 / 64) == 0.0
        assert outage_closed_mmct_h(targets, 42.0 / 64) == pytest.approx(1 / 3, abs=1e-12)
        # boundary continuity
        assert outage_closed_mmct_h(targets, 31.5 / 64) == pytest.approx(1.0)
        assert outage_closed_mmct_h(targets, 63.0 / 64) == pytest.approx(0.0, abs=1e-7)

    def test_nr_cases(self):
        targets = default_targets()
        assert outage_closed_nr(targets, 50.0 / 64) == 1.0
        assert outage_closed_nr(targets, 2100.0 / 64) == 0.0
        # boundary continuity
        assert outage_closed_nr(targets, 63.0 / 64) == pytest.approx(1.0, abs=1e-4)
        assert outage_closed_nr(targets, 2047.5 / 64) == pytest.approx(0.0, abs=1e-7)

    def test_closed_matches_numeric_within_grid_error(self):
        targets = default_targets()
        m = 20_000
        for db in np.linspace(5.0, 35.0, 31):
            snr = 10 ** (db / 10) / targets.tx_antennas
            gap_h = abs(
                outage_closed_mmct_h(targets, snr)
                - outage_numeric(Scheme.MMCT_H, targets, snr, m)
            )
            gap_nr = abs(
                outage_closed_nr(targets, snr)
                - outage_numeric(Scheme.NR, targets, snr, m)
            )
            assert gap_h <= 2.0 / m
            assert gap_nr <= 2.0 / m

    def test_monotone_in_snr(self):
        targets = default_targets()
        snrs = 10 ** (np.linspace(0, 36, 145) / 10) / targets.tx_antennas
        for fn in (outage_closed_nr, outage_closed_mmct_h):
            vals = fn(targets, snrs)
            assert np.all(np.diff(vals) <= 1e-12)

    def test_positive_snr_required(self):
        with pytest.raises(ValidationError):
            outage_closed_nr(default_targets(), 0.0)
        with pytest.raises(ValidationError):
            outage_closed_mmct_h(default_targets(), -1.0)


class TestCurves:
    def test_curve_lineup_and_ordering(self):
        targets = default_targets()
        grid = np.arange(0.0, 36.5, 1.0)
        curves = outage_curves(targets, grid, m=20_000)
        kinds = [(c.scheme, c.method) for c in curves]
        assert kinds == [
            (Scheme.NR, "numeric"),
            (Scheme.MMCT_H, "closed"),
            (Scheme.MMCT_H, "numeric"),
            (Scheme.MMCT_V, "numeric"),
        ]
        by_kind = dict(zip(kinds, curves))
        nr = by_kind[(Scheme.NR, "numeric")].p_out
        vid = by_kind[(Scheme.MMCT_V, "numeric")].p_out
        assert np.all(vid >= nr)
        closed = by_kind[(Scheme.MMCT_H, "closed")].p_out
        numeric = by_kind[(Scheme.MMCT_H, "numeric")].p_out
        assert np.max(np.abs(closed - numeric)) <= 2.0 / 20_000

    def test_curve_validation(self):
        with pytest.raises(ValidationError):
            OutageCurve(Scheme.NR, "numeric", np.array([0.0, 1.0]), np.array([0.2, 0.4]))
        with pytest.raises(ValidationError):
            OutageCurve(Scheme.NR, "numeric", np.array([0.0, 1.0]), np.array([1.2, 0.4]))

    def test_empty_grid_rejected(self):
        with pytest.raises(ValidationError):
            outage_curves(default_targets(), np.array([]), m=10_000)


class TestRateTargets:
    def test_fair_split_reference_values(self):
        targets = default_targets()
        assert targets.haptic_rate == pytest.approx(0.6)
        assert targets.video_rate == 12.0
        assert targets.haptic_rb_fraction == pytest.approx(0.1)

    def test_positive_rates_required(self):
        with pytest.raises(ValidationError):
            RateTargets(
                nr_rate=12.0, haptic_rate=0.0, video_rate=12.0,
                rbs_per_layer=20, shared_haptic_rbs=2, layers=2, tx_antennas=64,
            )

    def test_shared_rbs_bounds(self):
        with pytest.raises(ValidationError):
            RateTargets(
                nr_rate=12.0, haptic_rate=0.6, video_rate=12.0,
                rbs_per_layer=20, shared_haptic_rbs=0, layers=2, tx_antennas=64,
            )
