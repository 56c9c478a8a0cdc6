"""Monte Carlo simulation of the block Markov achievability scheme.

Each block carries a compressed description of the previous block's state
sequence: the encoder covers the state block with a u-codeword (robust
typicality at slack eps'), transmits only the codeword's bin index inside
the next block's x-word, and the decoder recovers first the (message, bin)
pair from the channel output, then the u-codeword within the bin using the
received block as side information (slack eps > eps').  Tie-breaking and
fallback follow the scheme exactly: a unique typical index is taken, ties
resolve uniformly at random, and when nothing is typical an index is drawn
uniformly from the full range (encoder and both decoder steps alike, with
occurrences recorded).

Desk-scale blocklengths are far from the asymptotic regime; the simulator
is built for trend checks, not absolute rates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CodebookMemoryError, ValidationError
from .estimator import DistortionTable, optimal_estimator
from .probcore import STRICTLY_CAUSAL, JointPmf, StateChannel, assemble_joint

#: Cap on simultaneously materialized codeword symbols (x table plus one
#: u panel).  u-codewords are generated lazily per (message, bin) pair from
#: derived substreams, so the dominant cost is one panel at a time; a dense
#: u table would rule out useful blocklengths at description rates above
#: the state entropy.
DEFAULT_MEMORY_CAP = 2**26


@dataclass(frozen=True)
class TypicalityParams:
    """Robust-typicality slacks: encoder covering at eps', decoding at eps."""

    epsilon: float = 0.2
    epsilon_prime: float = 0.1

    def __post_init__(self):
        if not 0 < self.epsilon_prime < self.epsilon:
            raise ValidationError(
                f"need 0 < epsilon_prime < epsilon, got eps'={self.epsilon_prime}, "
                f"eps={self.epsilon}"
            )


@dataclass(frozen=True)
class CodeRates:
    """Message rate R, bin-index rate R_s, description rate R_s_tilde >= R_s."""

    R: float = 0.0
    R_s: float = 0.0
    R_s_tilde: float = 0.0

    def __post_init__(self):
        if self.R < 0 or self.R_s < 0:
            raise ValidationError("rates must be nonnegative")
        if self.R_s_tilde < self.R_s:
            raise ValidationError(
                f"R_s_tilde={self.R_s_tilde} must be >= R_s={self.R_s}"
            )


def is_typical(sequences, joint: JointPmf, epsilon: float) -> bool:
    """Robust joint typicality of a tuple of aligned n-sequences.

    True iff every cell's empirical frequency is within epsilon times the
    cell probability of it; tuples with zero probability must not occur.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    if len(seqs) != joint.n_axes:
        raise ValidationError(
            f"{len(seqs)} sequences for a joint with {joint.n_axes} axes"
        )
    n = seqs[0].shape[0]
    if any(s.shape != (n,) for s in seqs):
        raise ValidationError("sequences must be 1-d and of equal length")
    for s, card in zip(seqs, joint.dims):
        if s.min(initial=0) < 0 or s.max(initial=0) >= card:
            raise ValidationError("sequence symbol outside its alphabet")
    flat = np.zeros(n, dtype=np.int64)
    for s, card in zip(seqs, joint.dims):
        flat = flat * card + s
    counts = np.bincount(flat, minlength=int(np.prod(joint.dims)))
    p = joint.probs.ravel()
    lo = n * p * (1.0 - epsilon)
    hi = n * p * (1.0 + epsilon)
    return bool(np.all((counts >= lo - 1e-12) & (counts <= hi + 1e-12)))


def _batch_typical(cands, fixed_index, joint_flat_cells, n_fixed_cells, epsilon):
    """Typicality mask for many candidate rows against fixed companions.

    ``cands``: (K, n) candidate symbol rows; ``fixed_index``: (n,) combined
    index of the fixed sequences; ``joint_flat_cells``: probabilities laid
    out fixed-major, candidate-minor.
    """
    k, n = cands.shape
    card_c = joint_flat_cells.shape[0] // n_fixed_cells
    counts = np.zeros((k, n_fixed_cells * card_c), dtype=np.int32)
    rows = np.arange(k)
    base = fixed_index * card_c
    for i in range(n):
        counts[rows, base[i] + cands[:, i]] += 1
    p = joint_flat_cells
    lo = n * p * (1.0 - epsilon) - 1e-12
    hi = n * p * (1.0 + epsilon) + 1e-12
    return np.all((counts >= lo[None, :]) & (counts <= hi[None, :]), axis=1)


def _combined_index(seqs, cards):
    flat = np.zeros(len(seqs[0]), dtype=np.int64)
    for s, card in zip(seqs, cards):
        flat = flat * card + s
    return flat


def _sample_iid(rng, cum, size):
    """i.i.d. symbols from the cumulative pmf ``cum`` (1-d)."""
    r = rng.random(size)
    return (r[..., None] > cum[(None,) * r.ndim]).sum(axis=-1)


def _sample_per_position(rng, cum_rows):
    """One symbol per position i from the cumulative row cum_rows[i]."""
    r = rng.random(cum_rows.shape[0])
    return (r[:, None] > cum_rows).sum(axis=-1)


def _sample_panel(rng, cum_by_symbol, conditioner, n_rows):
    """n_rows sequences, position i drawn from cum_by_symbol[conditioner[i]].

    The uniforms are drawn as one (n_rows, n) block before transformation,
    so the panel is a pure function of the generator state.
    """
    n = conditioner.shape[0]
    r = rng.random((n_rows, n))
    out = np.empty((n_rows, n), dtype=np.int64)
    for sym in np.unique(conditioner):
        cols = conditioner == sym
        out[:, cols] = (r[:, cols, None] > cum_by_symbol[sym]).sum(axis=-1)
    return out


class BlockCodebook:
    """Random codebook for one block: x-words dense, u-words lazy.

    x-words are indexed (message m, bin l) and drawn i.i.d. from p(x);
    the u-codebook for a given (m, l) is one panel of num_k rows drawn
    conditionally i.i.d. from p(u|x) given that x-word, generated on
    demand from a substream keyed by (seed, m, l) so any access order
    yields identical words.  Bin l covers rows [l*bin_size, (l+1)*bin_size).
    """

    def __init__(self, channel, design, n, rates, seed, memory_cap=DEFAULT_MEMORY_CAP):
        if n < 1:
            raise ValidationError("blocklength n must be >= 1")
        self.n = int(n)
        self.num_m = max(1, round(2.0 ** (n * rates.R)))
        self.num_l = max(1, round(2.0 ** (n * rates.R_s)))
        # bins are kept exactly equal: num_k is derived as num_l * bin_size
        self.bin_size = max(1, round(2.0 ** (n * (rates.R_s_tilde - rates.R_s))))
        self.num_k = self.num_l * self.bin_size
        required = self.num_m * self.num_l * self.n + self.num_k * self.n
        if required > memory_cap:
            raise CodebookMemoryError(
                f"codebook needs {required} materialized codeword symbols "
                f"(x table {self.num_m}x{self.num_l}x{n} plus one u panel "
                f"{self.num_k}x{n}), cap is {memory_cap}"
            )
        self.effective_rates = CodeRates(
            math.log2(self.num_m) / n,
            math.log2(self.num_l) / n,
            math.log2(self.num_k) / n,
        )
        self._seed_key = seed if isinstance(seed, tuple) else (seed,)
        px = design.input_pmf.probs
        t = design.test_channel.rows.reshape(
            channel.card_x, channel.card_s, design.card_u
        )
        p_u_given_x = np.einsum("s,xsu->xu", channel.state_pmf.probs, t)
        self._cum_px = np.cumsum(px)
        self._cum_u_given_x = np.cumsum(p_u_given_x, axis=1)
        rng = np.random.default_rng(np.random.SeedSequence(self._seed_key + (0,)))
        self.x_words = _sample_iid(rng, self._cum_px, (self.num_m, self.num_l, self.n))
        self._panel_cache = {}

    def u_panel(self, m, l):
        """All num_k u-words conditioned on x_words[m, l]; cached briefly."""
        key = (int(m), int(l))
        if key in self._panel_cache:
            return self._panel_cache[key]
        rng = np.random.default_rng(
            np.random.SeedSequence(self._seed_key + (1, key[0], key[1]))
        )
        panel = _sample_panel(rng, self._cum_u_given_x, self.x_words[key], self.num_k)
        if len(self._panel_cache) >= 2:
            self._panel_cache.pop(next(iter(self._panel_cache)))
        self._panel_cache[key] = panel
        return panel

    def u_word(self, k, m, l):
        return self.u_panel(m, l)[int(k)]

    def bin_of(self, k):
        return int(k) // self.bin_size


def build_codebook(
    channel, design, n, rates, seed, memory_cap=DEFAULT_MEMORY_CAP
) -> BlockCodebook:
    """Construct one block's codebook; deterministic for a given seed."""
    return BlockCodebook(channel, design, n, rates, seed, memory_cap)


def _choose(mask, total, rng, offset=0):
    """Unique-index selection with uniform tie-break and uniform fallback.

    Returns (index, kind) with kind in {"unique", "tie", "fallback"};
    index is offset into the caller's global numbering.
    """
    hits = np.flatnonzero(mask)
    if hits.size == 1:
        return offset + int(hits[0]), "unique"
    if hits.size > 1:
        return offset + int(hits[rng.integers(hits.size)]), "tie"
    return offset + int(rng.integers(total)), "fallback"


@dataclass(frozen=True)
class SimReport:
    """Aggregated outcome of a block Markov simulation run."""

    empirical_distortion: float
    distortion_decoded: float
    decoded_blocks: int
    message_error_rate: float
    e1_count: int
    e2_count: int
    e3_count: int
    state_blocks: int  # reconstruction opportunities: trials * (b - 1)
    message_blocks: int  # message opportunities: trials * b
    encoder_tie_count: int
    encoder_fallback_count: int
    decoder_tie_counts: tuple  # (step1, step2)
    decoder_fallback_counts: tuple  # (step1, step2)
    params: dict

    def __post_init__(self):
        for name in ("e1_count", "e2_count", "e3_count"):
            if getattr(self, name) > self.state_blocks:
                raise ValidationError(f"{name} exceeds the number of counted blocks")
        for name in ("empirical_distortion", "message_error_rate"):
            v = getattr(self, name)
            if v < 0:
                raise ValidationError(f"{name} must be nonnegative")

    @property
    def e1_rate(self):
        return self.e1_count / self.state_blocks

    @property
    def e2_rate(self):
        return self.e2_count / self.state_blocks

    @property
    def e3_rate(self):
        return self.e3_count / self.state_blocks

    def to_json_obj(self, manifest_name=None) -> dict:
        return {
            "schema": "statecomm.simreport.v1",
            "manifest": manifest_name,
            "empirical_distortion": self.empirical_distortion,
            "distortion_decoded": self.distortion_decoded,
            "decoded_blocks": self.decoded_blocks,
            "message_error_rate": self.message_error_rate,
            "event_counts": {
                "E1": self.e1_count,
                "E2": self.e2_count,
                "E3": self.e3_count,
            },
            "event_rates": {
                "E1": self.e1_rate,
                "E2": self.e2_rate,
                "E3": self.e3_rate,
            },
            "state_blocks": self.state_blocks,
            "message_blocks": self.message_blocks,
            "encoder": {
                "tie_count": self.encoder_tie_count,
                "fallback_count": self.encoder_fallback_count,
            },
            "decoder": {
                "tie_counts": list(self.decoder_tie_counts),
                "fallback_counts": list(self.decoder_fallback_counts),
            },
            "params": self.params,
        }

    def to_json_text(self, manifest_name=None) -> str:
        return json.dumps(self.to_json_obj(manifest_name), indent=2) + "\n"

    CSV_HEADER = (
        "n,b,trials,seed,distortion,distortion_decoded,message_error_rate,"
        "e1_rate,e2_rate,e3_rate"
    )

    def to_csv_row(self) -> str:
        p = self.params
        return ",".join(
            [
                str(p["n"]),
                str(p["b"]),
                str(p["trials"]),
                str(p["seed"]),
                format(self.empirical_distortion, ".12g"),
                format(self.distortion_decoded, ".12g"),
                format(self.message_error_rate, ".12g"),
                format(self.e1_rate, ".12g"),
                format(self.e2_rate, ".12g"),
                format(self.e3_rate, ".12g"),
            ]
        )


def simulate(
    channel: StateChannel,
    design,
    d: DistortionTable,
    n: int,
    b: int,
    rates: CodeRates,
    typ: TypicalityParams,
    trials: int,
    seed: int,
    memory_cap: int = DEFAULT_MEMORY_CAP,
) -> SimReport:
    """Run the block Markov scheme end to end and account per-block events.

    Per trial: fresh codebooks for each of the b blocks, i.i.d. state,
    covering, transmission, two-stage decoding, reconstruction through the
    design's estimator.  Distortion is averaged over blocks 1..b-1 of each
    trial (the last block's description is never transmitted);
    ``distortion_decoded`` restricts to blocks no error event touched
    (E1 absent and all indices recovered), where the typical-average bound
    d <= (1 + eps) E d applies.  E1 counts full-tuple atypicality with the
    true indices; encoder covering failures are reported separately.
    Deterministic for fixed inputs and seed.
    """
    if b < 2:
        raise ValidationError("need at least 2 blocks (the last one is never described)")
    if trials < 1:
        raise ValidationError("trials must be >= 1")

    joint = assemble_joint(channel, design, STRICTLY_CAUSAL)  # (U, X, S, Y)
    est = design.est
    if est is None:
        est = optimal_estimator(joint, 2, d)
    # typicality references, all laid out fixed-major / candidate-minor
    jp = joint.probs
    cover_cells = np.transpose(jp.sum(axis=3), (1, 2, 0)).ravel()  # (x, s) x u
    step1_joint = JointPmf(
        (channel.card_x, channel.card_y), jp.sum(axis=(0, 2))
    )
    step2_cells = np.transpose(jp.sum(axis=2), (1, 2, 0)).ravel()  # (x, y) x u
    e1_joint = JointPmf(
        (channel.card_x, channel.card_s, design.card_u, channel.card_y),
        np.transpose(jp, (1, 2, 0, 3)),
    )
    cum_ps = np.cumsum(channel.state_pmf.probs)
    cum_w = np.cumsum(channel.kernel, axis=2)  # (X, S, Y)

    dist_sum = 0.0
    dist_blocks = 0
    dist_dec_sum = 0.0
    dist_dec_blocks = 0
    msg_errors = 0
    e1 = e2 = e3 = 0
    enc_tie = enc_fb = 0
    dec_tie = [0, 0]
    dec_fb = [0, 0]
    probe = None

    for t in range(trials):
        books = [
            build_codebook(channel, design, n, rates, (seed, 2, t, j), memory_cap)
            for j in range(b)
        ]
        cb0 = books[0]
        num_m, num_l, num_k = cb0.num_m, cb0.num_l, cb0.num_k
        bin_size = cb0.bin_size
        if probe is None:
            probe = cb0
        rng = np.random.default_rng(np.random.SeedSequence((seed, 3, t)))

        # ---- encoder pass
        blocks = []
        l_prev = 0
        for j in range(b):
            m = int(rng.integers(num_m))
            xw = books[j].x_words[m, l_prev]
            sblk = _sample_iid(rng, cum_ps, (n,))
            yblk = _sample_per_position(rng, cum_w[xw, sblk])
            panel = books[j].u_panel(m, l_prev)
            fixed = _combined_index((xw, sblk), (channel.card_x, channel.card_s))
            mask = _batch_typical(
                panel, fixed, cover_cells, channel.card_x * channel.card_s,
                typ.epsilon_prime,
            )
            k, kind = _choose(mask, num_k, rng)
            if kind == "tie":
                enc_tie += 1
            elif kind == "fallback":
                enc_fb += 1
            blocks.append(
                {"m": m, "l_prev": l_prev, "s": sblk, "x": xw, "y": yblk, "k": k,
                 "l": k // bin_size, "cover_ok": kind != "fallback"}
            )
            l_prev = k // bin_size

        # ---- E1 accounting (true indices, full tuple, decoder slack)
        e1_flags = []
        for j in range(b - 1):
            blk = blocks[j]
            u_true = books[j].u_word(blk["k"], blk["m"], blk["l_prev"])
            bad = not is_typical(
                (blk["x"], blk["s"], u_true, blk["y"]), e1_joint, typ.epsilon
            )
            e1_flags.append(bad)
            if bad:
                e1 += 1

        # ---- decoder pass, step 1: (m, l_prev) per block
        m_hat = np.zeros(b, dtype=np.int64)
        l_hat = np.zeros(b, dtype=np.int64)  # l_hat[j] = decoded bin of block j
        for j in range(b):
            blk = blocks[j]
            if j == 0:
                cands = books[j].x_words[:, 0, :]  # l_0 = 0 by convention
                fixed = blk["y"]
                mask = _batch_typical(
                    cands, fixed, np.transpose(step1_joint.probs, (1, 0)).ravel(),
                    channel.card_y, typ.epsilon,
                )
                choice, kind = _choose(mask, num_m, rng)
                m_hat[0] = choice
                lp = 0
            else:
                cands = books[j].x_words.reshape(num_m * num_l, n)
                mask = _batch_typical(
                    cands, blk["y"], np.transpose(step1_joint.probs, (1, 0)).ravel(),
                    channel.card_y, typ.epsilon,
                )
                choice, kind = _choose(mask, num_m * num_l, rng)
                m_hat[j], lp = divmod(choice, num_l)
                l_hat[j - 1] = lp
            if kind == "tie":
                dec_tie[0] += 1
            elif kind == "fallback":
                dec_fb[0] += 1
            if m_hat[j] != blk["m"]:
                msg_errors += 1
        for j in range(b - 1):
            if l_hat[j] != blocks[j]["l"]:
                e2 += 1

        # ---- decoder pass, step 2 + reconstruction for blocks 0..b-2
        for j in range(b - 1):
            blk = blocks[j]
            lp_hat = l_hat[j - 1] if j > 0 else 0
            panel = books[j].u_panel(m_hat[j], lp_hat)
            x_hat = books[j].x_words[m_hat[j], lp_hat]
            lo = int(l_hat[j]) * bin_size
            cands = panel[lo : lo + bin_size]
            fixed = _combined_index((x_hat, blk["y"]), (channel.card_x, channel.card_y))
            mask = _batch_typical(
                cands, fixed, step2_cells, channel.card_x * channel.card_y, typ.epsilon
            )
            k_hat, kind = _choose(mask, bin_size, rng, offset=lo)
            if kind == "tie":
                dec_tie[1] += 1
            elif kind == "fallback":
                dec_fb[1] += 1
            if k_hat != blk["k"]:
                e3 += 1
            u_hat = panel[k_hat]
            s_hat = est.choice[u_hat, x_hat, blk["y"]]
            block_dist = float(d.d[blk["s"], s_hat].mean())
            dist_sum += block_dist
            dist_blocks += 1
            # a block counts as decoded when no error event touched it
            decoded = (
                not e1_flags[j]
                and lp_hat == blk["l_prev"]
                and l_hat[j] == blk["l"]
                and k_hat == blk["k"]
            )
            if decoded:
                dist_dec_sum += block_dist
                dist_dec_blocks += 1

    params = {
        "n": n,
        "b": b,
        "trials": trials,
        "seed": seed,
        "rates": {"R": rates.R, "R_s": rates.R_s, "R_s_tilde": rates.R_s_tilde},
        "effective_rates": {
            "R": probe.effective_rates.R,
            "R_s": probe.effective_rates.R_s,
            "R_s_tilde": probe.effective_rates.R_s_tilde,
        },
        "codebook": {
            "num_m": probe.num_m,
            "num_l": probe.num_l,
            "num_k": probe.num_k,
            "bin_size": probe.bin_size,
        },
        "epsilon": typ.epsilon,
        "epsilon_prime": typ.epsilon_prime,
    }
    return SimReport(
        empirical_distortion=dist_sum / dist_blocks,
        distortion_decoded=(dist_dec_sum / dist_dec_blocks) if dist_dec_blocks else float("nan"),
        decoded_blocks=dist_dec_blocks,
        message_error_rate=msg_errors / (trials * b),
        e1_count=e1,
        e2_count=e2,
        e3_count=e3,
        state_blocks=trials * (b - 1),
        message_blocks=trials * b,
        encoder_tie_count=enc_tie,
        encoder_fallback_count=enc_fb,
        decoder_tie_counts=(dec_tie[0], dec_tie[1]),
        decoder_fallback_counts=(dec_fb[0], dec_fb[1]),
        params=params,
    )
