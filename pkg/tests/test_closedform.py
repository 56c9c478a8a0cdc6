import math

import numpy as np
import pytest

from statecomm.closedform import (
    BSC_WZ_DISCREPANCY_NOTE,
    BscParams,
    GaussianParams,
    bsc_causal_curve,
    bsc_cd_causal,
    bsc_cd_strictly_causal,
    bsc_dstar,
    bsc_sc_curve,
    bsc_wz_rate,
    bsc_wz_rate_raw,
    flat_curve,
    gaussian_cd_strictly_causal,
    gaussian_dstar,
    gaussian_sc_curve,
    gaussian_wz_distortion_rate,
    injective_capacity,
)
from statecomm.errors import InjectivityError, ValidationError
from statecomm.probcore import (
    binary_convolution,
    binary_entropy,
    channel_from_map,
    gaussian_capacity_fn,
)

H = binary_entropy


class TestGaussianDstar:
    def test_unit_params(self):
        g = GaussianParams(1, 1, 1)
        assert gaussian_dstar(g, "strictly-causal") == pytest.approx(1 / 3, abs=1e-15)
        assert gaussian_dstar(g, "causal") == pytest.approx(0.2, abs=1e-15)
        assert gaussian_dstar(g, "oblivious") == pytest.approx(0.5, abs=1e-15)

    def test_zero_power_collapses_to_oblivious(self):
        g = GaussianParams(0, 1, 1)
        assert gaussian_dstar(g, "strictly-causal") == gaussian_dstar(g, "oblivious")

    def test_zero_noise(self):
        assert gaussian_dstar(GaussianParams(1, 1, 0), "strictly-causal") == 0.0

    def test_invalid(self):
        with pytest.raises(ValidationError):
            GaussianParams(-1, 1, 1)
        with pytest.raises(ValidationError):
            gaussian_dstar(GaussianParams(1, 1, 1), "psychic")


class TestGaussianCurve:
    def test_three_pieces(self):
        g = GaussianParams(1, 1, 1)
        assert gaussian_cd_strictly_causal(g, 1 / 3) == pytest.approx(0.0, abs=1e-12)
        assert gaussian_cd_strictly_causal(g, 0.5) == pytest.approx(
            0.2924812503605781, abs=1e-12
        )
        # middle piece: C((3 * 0.4 - 1)/1) = C(0.2) = 0.5 log2(1.2)
        assert gaussian_cd_strictly_causal(g, 0.4) == pytest.approx(
            0.5 * math.log2(1.2), abs=1e-12
        )
        assert gaussian_cd_strictly_causal(g, 0.1) == 0.0

    def test_boundary_continuity(self):
        # the middle-piece formula, evaluated exactly at each boundary,
        # matches the adjoining piece's value
        rng = np.random.default_rng(0)
        for _ in range(50):
            p, q, n = rng.uniform(0.1, 5.0, size=3)
            g = GaussianParams(p, q, n)
            d_low = gaussian_dstar(g, "strictly-causal")
            d_high = gaussian_dstar(g, "oblivious")
            middle = lambda d: gaussian_capacity_fn(
                max(0.0, ((p + q + n) * d - q * n) / (q * n))
            )
            assert abs(middle(d_low) - 0.0) < 1e-12
            assert abs(middle(d_high) - gaussian_capacity_fn(p / (q + n))) < 1e-12
            assert gaussian_cd_strictly_causal(g, d_low) == pytest.approx(0.0, abs=1e-12)
            assert gaussian_cd_strictly_causal(g, d_high) == pytest.approx(
                gaussian_capacity_fn(p / (q + n)), abs=1e-12
            )

    def test_nondecreasing_on_grid(self):
        g = GaussianParams(2.0, 0.7, 1.3)
        grid = np.linspace(0, 3 * gaussian_dstar(g, "oblivious"), 1000)
        vals = [gaussian_cd_strictly_causal(g, d) for d in grid]
        assert np.all(np.diff(vals) >= -1e-15)

    def test_zero_noise_unbounded(self):
        assert gaussian_cd_strictly_causal(GaussianParams(1, 1, 0), 0.5) == math.inf


class TestGaussianWz:
    def test_zero_rate(self):
        assert gaussian_wz_distortion_rate(1, 1, 0) == pytest.approx(0.5)

    def test_half_bit(self):
        assert gaussian_wz_distortion_rate(1, 1, 0.5) == pytest.approx(0.25, abs=1e-15)

    def test_identity_with_capacity(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p, q, n = rng.uniform(0.05, 8.0, size=3)
            r = gaussian_capacity_fn(p / (q + n))
            lhs = gaussian_wz_distortion_rate(q, n, r)
            assert lhs == pytest.approx(q * n / (p + q + n), abs=1e-12)

    def test_negative_rate(self):
        with pytest.raises(ValidationError):
            gaussian_wz_distortion_rate(1, 1, -0.1)


class TestBscWz:
    def test_alpha_zero_branch_is_raw_negative(self):
        b = BscParams(0.25, 0.25)
        raw = bsc_wz_rate_raw(b, 0.3)
        assert raw == pytest.approx(H(0.25) - H(0.375), abs=1e-12)
        assert raw < 0
        assert bsc_wz_rate(b, 0.3) == 0.0

    def test_zero_distortion(self):
        b = BscParams(0.2, 0.3)
        expected = H(0.2) - H(binary_convolution(0.2, 0.3)) + H(0.3)
        assert bsc_wz_rate_raw(b, 0.0) == pytest.approx(expected, abs=1e-12)

    def test_degenerate_state(self):
        assert bsc_wz_rate_raw(BscParams(0.3, 0.0), 0.1) == pytest.approx(0.0, abs=1e-12)


class TestBscCurves:
    def test_noiseless(self):
        b = BscParams(0.0, 0.25)
        for d in (0.0, 0.1, 0.5):
            assert bsc_cd_strictly_causal(b, d) == pytest.approx(1 - H(0.25), abs=1e-9)

    def test_saturation(self):
        b = BscParams(0.25, 0.25)
        assert bsc_cd_strictly_causal(b, 0.3) == pytest.approx(1 - H(0.375), abs=1e-12)

    def test_pure_noise(self):
        assert bsc_cd_strictly_causal(BscParams(0.5, 0.2), 0.1) == 0.0

    def test_causal_formula(self):
        b = BscParams(0.1, 0.25)
        assert bsc_cd_causal(b, 0.1) == pytest.approx(1 - H(0.25), abs=1e-12)

    def test_causal_saturation(self):
        b = BscParams(0.25, 0.25)
        assert bsc_cd_causal(b, 0.25) == pytest.approx(1 - H(0.25), abs=1e-12)
        assert bsc_cd_causal(b, 0.4) == pytest.approx(1 - H(0.25), abs=1e-12)

    def test_causal_noiseless(self):
        assert bsc_cd_causal(BscParams(0.0, 0.3), 0.0) == pytest.approx(1 - H(0.3), abs=1e-12)

    def test_branches_meet_at_q(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            b = BscParams(rng.uniform(0, 0.5), rng.uniform(0.01, 0.5))
            assert bsc_cd_causal(b, b.q) == pytest.approx(1 - H(b.p), abs=1e-12)

    def test_knowledge_ordering(self):
        # strictly causal <= causal <= 1 - H(p), everywhere
        rng = np.random.default_rng(6)
        for _ in range(50):
            b = BscParams(rng.uniform(0, 0.5), rng.uniform(0, 0.5))
            d = rng.uniform(0, 0.6)
            sc = bsc_cd_strictly_causal(b, d)
            c = bsc_cd_causal(b, d)
            assert sc <= c + 1e-9
            assert c <= 1 - H(b.p) + 1e-12

    def test_clamped_path_capped(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            b = BscParams(rng.uniform(0, 0.5), rng.uniform(0, 0.5))
            d = rng.uniform(0, 0.6)
            assert bsc_cd_strictly_causal(b, d) <= 1 - H(binary_convolution(b.p, b.q)) + 1e-9

    def test_discrepancy_note_names_solver_as_arbiter(self):
        assert "arbiter" in BSC_WZ_DISCREPANCY_NOTE
        assert "solve_cd_curve" in BSC_WZ_DISCREPANCY_NOTE


class TestBscDstar:
    def test_extreme_cases(self):
        assert bsc_dstar(BscParams(0.0, 0.25), "strictly-causal") == 0.0
        assert bsc_dstar(BscParams(0.25, 0.0), "strictly-causal") == 0.0
        assert bsc_dstar(BscParams(0.5, 0.25), "strictly-causal") == pytest.approx(0.25)
        assert bsc_dstar(BscParams(0.25, 0.5), "strictly-causal") == pytest.approx(0.25)

    def test_causal_intercept_solves_formula(self):
        b = BscParams(0.1, 0.25)
        d = bsc_dstar(b, "causal")
        assert 1 - H(b.p) - H(b.q) + H(d) == pytest.approx(0.0, abs=1e-9)


class TestInjectiveCapacity:
    def test_xor_channel(self):
        ymap = np.array([[0, 1], [1, 0]])
        ch = channel_from_map(ymap, [0.75, 0.25])
        assert injective_capacity(ch, ymap) == pytest.approx(1 - H(0.25), abs=1e-9)

    def test_pair_channel(self):
        ymap = np.array([[0, 1], [2, 3]])
        ch = channel_from_map(ymap, [0.6, 0.4])
        assert injective_capacity(ch, ymap) == pytest.approx(1.0, abs=1e-9)

    def test_state_only_channel_capacity_zero(self):
        ymap = np.array([[0, 1], [0, 1]])  # y = s, injective in s, ignores x
        ch = channel_from_map(ymap, [0.7, 0.3])
        assert injective_capacity(ch, ymap) == pytest.approx(0.0, abs=1e-9)

    def test_injectivity_violation_named(self):
        ymap = np.array([[0, 0], [1, 0]])  # x=0 collides s=0, s=1
        ch = channel_from_map(ymap, [0.5, 0.5], card_y=2)
        with pytest.raises(InjectivityError) as err:
            injective_capacity(ch, ymap)
        assert "x=0" in str(err.value)


class TestCurveArtifacts:
    def test_gaussian_curve_shape(self):
        curve = gaussian_sc_curve(GaussianParams(1, 1, 1))
        assert curve.ds[0] == pytest.approx(1 / 3, abs=1e-12)
        assert curve.value_at(0.6) == pytest.approx(0.2924812503605781, abs=1e-12)

    def test_bsc_curves_valid(self):
        bsc_sc_curve(BscParams(0.25, 0.25))
        bsc_causal_curve(BscParams(0.1, 0.25))
        flat_curve(0.5, 0.3)
