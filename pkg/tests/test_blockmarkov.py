import numpy as np
import pytest

from statecomm.blockmarkov import (
    BlockCodebook,
    CodeRates,
    TypicalityParams,
    _choose,
    build_codebook,
    is_typical,
    simulate,
)
from statecomm.errors import CodebookMemoryError, ValidationError
from statecomm.estimator import DistortionTable
from statecomm.presets import sim_preset, state_identity_design
from statecomm.probcore import (
    JointPmf,
    SimplexVector,
    StochasticTable,
    bsc_channel,
)
from statecomm.cdsolve import JointDesign, evaluate_design

HAMMING = DistortionTable.hamming(2)


class TestTypicalityParams:
    def test_ordering_enforced(self):
        with pytest.raises(ValidationError):
            TypicalityParams(0.1, 0.2)
        with pytest.raises(ValidationError):
            TypicalityParams(0.2, 0.0)


class TestCodeRates:
    def test_description_at_least_bin(self):
        with pytest.raises(ValidationError):
            CodeRates(0.0, 0.5, 0.4)


class TestIsTypical:
    def test_exact_type_sequence(self):
        joint = JointPmf((2,), np.array([0.5, 0.5]))
        seq = np.array([0, 1] * 5)
        assert is_typical((seq,), joint, 0.01)

    def test_zero_probability_symbol_forbidden(self):
        joint = JointPmf((2,), np.array([1.0, 0.0]))
        assert not is_typical((np.array([0, 0, 1, 0]),), joint, 0.5)
        assert is_typical((np.zeros(4, dtype=int),), joint, 0.5)

    def test_worked_slack_example(self):
        # n=10 Bern(1/2) with 4 ones: deviation 0.1 vs eps * 0.5
        joint = JointPmf((2,), np.array([0.5, 0.5]))
        seq = np.array([1, 1, 1, 1, 0, 0, 0, 0, 0, 0])
        assert is_typical((seq,), joint, 0.25)
        assert not is_typical((seq,), joint, 0.1)

    def test_joint_tuple(self):
        joint = JointPmf((2, 2), np.array([[0.5, 0.0], [0.0, 0.5]]))
        a = np.array([0, 1, 0, 1])
        assert is_typical((a, a), joint, 0.1)
        assert not is_typical((a, 1 - a), joint, 0.9)

    def test_length_mismatch(self):
        joint = JointPmf((2, 2), np.full((2, 2), 0.25))
        with pytest.raises(ValidationError):
            is_typical((np.zeros(3, dtype=int), np.zeros(4, dtype=int)), joint, 0.1)


def small_channel_design():
    ch = bsc_channel(0.1, 0.3)
    return ch, state_identity_design(ch)


class TestBlockCodebook:
    def test_zero_rates_single_words(self):
        ch, des = small_channel_design()
        cb = build_codebook(ch, des, 8, CodeRates(0, 0, 0), seed=1)
        assert cb.num_m == cb.num_l == cb.num_k == 1
        assert cb.x_words.shape == (1, 1, 8)
        assert cb.u_panel(0, 0).shape == (1, 8)

    def test_deterministic_across_runs_and_access_order(self):
        ch, des = small_channel_design()
        cb1 = build_codebook(ch, des, 10, CodeRates(0.2, 0.3, 0.8), seed=5)
        cb2 = build_codebook(ch, des, 10, CodeRates(0.2, 0.3, 0.8), seed=5)
        assert np.array_equal(cb1.x_words, cb2.x_words)
        # access panels in different orders; contents must not depend on it
        a = cb1.u_panel(1, 0).copy()
        cb1.u_panel(0, 1)
        cb2.u_panel(0, 1)
        cb2.u_panel(1, 1)
        assert np.array_equal(a, cb2.u_panel(1, 0))

    def test_bins_equal_and_aligned(self):
        ch, des = small_channel_design()
        cb = build_codebook(ch, des, 10, CodeRates(0.0, 0.3, 0.8), seed=2)
        assert cb.num_k == cb.num_l * cb.bin_size
        assert cb.bin_of(0) == 0
        assert cb.bin_of(cb.num_k - 1) == cb.num_l - 1

    def test_effective_rates_are_post_rounding(self):
        ch, des = small_channel_design()
        cb = build_codebook(ch, des, 10, CodeRates(0.0, 0.3, 0.8), seed=2)
        assert cb.effective_rates.R_s == pytest.approx(np.log2(cb.num_l) / 10)
        assert cb.effective_rates.R_s_tilde == pytest.approx(np.log2(cb.num_k) / 10)

    def test_memory_cap_names_requirement(self):
        ch, des = small_channel_design()
        with pytest.raises(CodebookMemoryError) as err:
            build_codebook(ch, des, 24, CodeRates(0.0, 0.2, 1.0), seed=0, memory_cap=1000)
        assert "1000" in str(err.value)

    def test_x_word_frequencies_concentrate(self):
        ch = bsc_channel(0.1, 0.3)
        des = JointDesign(
            SimplexVector(np.array([0.25, 0.75])),
            StochasticTable(np.full((4, 2), 0.5)),
            2,
        )
        cb = build_codebook(ch, des, 50, CodeRates(0.1, 0.12, 0.12), seed=3)
        symbols = cb.x_words.ravel()
        n = symbols.size
        ones = symbols.sum()
        sigma = np.sqrt(n * 0.75 * 0.25)
        assert abs(ones - 0.75 * n) <= 3 * sigma


class RecordingRng:
    """Fake generator recording integer draws (tie-break observability)."""

    def __init__(self, value=0):
        self.calls = []
        self.value = value

    def integers(self, n):
        self.calls.append(int(n))
        return self.value


class TestChooseRule:
    def test_unique_hit_consumes_no_randomness(self):
        rng = RecordingRng()
        idx, kind = _choose(np.array([False, True, False]), 3, rng)
        assert (idx, kind) == (1, "unique")
        assert rng.calls == []

    def test_tie_uniform_among_hits(self):
        rng = RecordingRng(value=1)
        idx, kind = _choose(np.array([True, False, True, True]), 4, rng)
        assert kind == "tie"
        assert rng.calls == [3]  # uniform over the 3 hits
        assert idx == 2  # second hit

    def test_fallback_uniform_over_range(self):
        rng = RecordingRng(value=7)
        idx, kind = _choose(np.zeros(10, dtype=bool), 10, rng)
        assert kind == "fallback"
        assert rng.calls == [10]
        assert idx == 7

    def test_offset_applies(self):
        rng = RecordingRng(value=0)
        idx, kind = _choose(np.array([False, True]), 2, rng, offset=40)
        assert idx == 41


def run_preset(name, **overrides):
    bundle = sim_preset(name)
    bundle.update(overrides)
    return simulate(
        bundle["channel"],
        bundle["design"],
        bundle["distortion"],
        bundle["n"],
        bundle["b"],
        bundle["rates"],
        bundle["typ"],
        bundle["trials"],
        bundle.get("seed", 0),
    )


class TestSimulate:
    def test_deterministic(self):
        r1 = run_preset("noiseless-xor", trials=4, b=4, seed=9)
        r2 = run_preset("noiseless-xor", trials=4, b=4, seed=9)
        assert r1.to_json_text() == r2.to_json_text()
        r3 = run_preset("noiseless-xor", trials=4, b=4, seed=10)
        assert r1.to_json_text() != r3.to_json_text()

    def test_noiseless_zero_distortion_on_decoded_blocks(self):
        rep = run_preset("noiseless-xor", trials=10, seed=3)
        assert rep.decoded_blocks > 0
        assert rep.distortion_decoded == 0.0

    def test_event_counts_bounded(self):
        rep = run_preset("noiseless-xor", trials=4, b=4, seed=9)
        assert rep.e1_count <= rep.state_blocks
        assert 0 <= rep.message_error_rate <= 1

    def test_block_count_validation(self):
        ch, des = small_channel_design()
        with pytest.raises(ValidationError):
            simulate(ch, des, HAMMING, 8, 1, CodeRates(0, 0, 0), TypicalityParams(), 2, 0)

    def test_typical_average_bound_on_decoded_blocks(self):
        # noisy description: p(u|x, s) flips s with prob 0.1; decoded blocks
        # obey the (1 + eps) * E d typical-average bound
        ch = bsc_channel(0.0, 0.3)
        rows = np.array([[0.9, 0.1], [0.1, 0.9], [0.9, 0.1], [0.1, 0.9]])
        des = JointDesign(SimplexVector.uniform(2), StochasticTable(rows), 2)
        _, ed = evaluate_design(ch, HAMMING, des, "strictly-causal")
        typ = TypicalityParams(0.5, 0.35)
        rep = simulate(ch, des, HAMMING, 16, 8, CodeRates(0.0, 0.1, 1.0), typ, 20, 5)
        if rep.decoded_blocks:
            assert rep.distortion_decoded <= (1 + typ.epsilon) * ed + 1e-12

    def test_monotone_degradation_in_noise(self):
        # more channel noise never lowers mean E2+E3 over matched seeds
        rates = CodeRates(0.0, 0.2, 0.7)
        typ = TypicalityParams(0.6, 0.4)
        totals = []
        for p in (0.03, 0.25):
            ch = bsc_channel(p, 0.2)
            des = state_identity_design(ch)
            rep = simulate(ch, des, HAMMING, 12, 5, rates, typ, 25, seed=0)
            totals.append(rep.e2_count + rep.e3_count)
        assert totals[1] >= totals[0]

    def test_overdriven_rates_break_bin_decoding(self):
        rep = run_preset("overdriven-bsc", trials=10, seed=1)
        assert rep.e2_count >= 0.9 * rep.state_blocks
