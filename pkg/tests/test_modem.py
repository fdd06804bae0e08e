import numpy as np
import pytest

from mmct import modem
from mmct.errors import FramingError, ValidationError


class TestConstellation:
    def test_qpsk_corner(self):
        syms = modem.modulate(np.array([0, 0]), 2)
        assert syms[0] == pytest.approx((1 + 1j) / np.sqrt(2))

    def test_qpsk_full_table(self):
        table = {
            (0, 0): (1 + 1j), (0, 1): (1 - 1j), (1, 0): (-1 + 1j), (1, 1): (-1 - 1j),
        }
        for bits, point in table.items():
            got = modem.modulate(np.array(bits), 2)[0]
            assert got == pytest.approx(point / np.sqrt(2))

    def test_exact_unit_energy_all_orders(self):
        for order in modem.SUPPORTED_ORDERS:
            pts = modem.constellation(order)
            assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_monte_carlo_energy_256qam(self):
        rng = np.random.default_rng(0)
        bits = rng.integers(0, 2, size=8 * 1_000_000).astype(np.uint8)
        syms = modem.modulate(bits, 8)
        assert np.mean(np.abs(syms) ** 2) == pytest.approx(1.0, abs=1e-2)

    def test_gray_property_neighbor_levels_differ_in_one_bit(self):
        for order in modem.SUPPORTED_ORDERS:
            pts = modem.constellation(order)
            uniq = np.unique(np.round(pts.real, 12))
            step = uniq[1] - uniq[0] if uniq.size > 1 else 0
            for idx_a in range(pts.size):
                for idx_b in range(idx_a + 1, pts.size):
                    a, b = pts[idx_a], pts[idx_b]
                    if abs(a - b) < step * 1.0001 and abs(a - b) > 0:
                        assert bin(idx_a ^ idx_b).count("1") == 1

    def test_unknown_order(self):
        with pytest.raises(ValidationError):
            modem.modulate(np.zeros(10), 10)


class TestRoundTrip:
    @pytest.mark.parametrize("order", modem.SUPPORTED_ORDERS)
    def test_hard_decision_inverts_clean_modulation(self, order):
        rng = np.random.default_rng(order)
        bits = rng.integers(0, 2, size=480 * order).astype(np.uint8)
        back = modem.demodulate_hard(modem.modulate(bits, order), order)
        assert np.array_equal(bits, back)

    def test_framing_error(self):
        with pytest.raises(FramingError):
            modem.modulate(np.zeros(7, dtype=np.uint8), 4)


class TestLlrs:
    def _brute_force_llrs(self, symbols, order, noise_var):
        """Independent oracle: max-log over the full constellation."""
        pts = modem.constellation(order)
        idx = np.arange(pts.size)
        out = np.empty((symbols.size, order))
        for n, y in enumerate(symbols):
            d2 = np.abs(y - pts) ** 2
            for pos in range(order):
                bit = (idx >> (order - 1 - pos)) & 1
                d0 = d2[bit == 0].min()
                d1 = d2[bit == 1].min()
                out[n, pos] = (d1 - d0) / noise_var
        return out.reshape(-1)

    @pytest.mark.parametrize("order", modem.SUPPORTED_ORDERS)
    def test_matches_full_constellation_maxlog(self, order):
        rng = np.random.default_rng(order + 1)
        bits = rng.integers(0, 2, size=40 * order).astype(np.uint8)
        noisy = modem.modulate(bits, order) + 0.1 * (
            rng.normal(size=40) + 1j * rng.normal(size=40)
        )
        got = modem.llrs_maxlog(noisy, order, 0.02)
        want = self._brute_force_llrs(noisy, order, 0.02)
        assert np.allclose(got, want, atol=1e-12)

    @pytest.mark.parametrize("order", modem.SUPPORTED_ORDERS)
    def test_high_snr_signs_recover_bits(self, order):
        rng = np.random.default_rng(order + 2)
        bits = rng.integers(0, 2, size=120 * order).astype(np.uint8)
        llrs = modem.llrs_maxlog(modem.modulate(bits, order), order, 1e-8)
        assert np.array_equal((llrs < 0).astype(np.uint8), bits)

    def test_per_symbol_noise_variance(self):
        bits = np.array([0, 0, 1, 1], dtype=np.uint8)
        syms = modem.modulate(bits, 2)
        llrs = modem.llrs_maxlog(syms, 2, np.array([0.1, 0.4]))
        # 4x the noise variance scales the second symbol's llrs by 1/4
        assert abs(llrs[0]) == pytest.approx(4 * abs(llrs[2]), abs=1e-12)
        assert llrs[0] > 0 > llrs[2]

    def test_positive_noise_required(self):
        with pytest.raises(ValidationError):
            modem.llrs_maxlog(np.array([1 + 1j]), 2, 0.0)
