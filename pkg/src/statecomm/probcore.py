"""Finite-probability primitives over small alphabets.

Alphabets are index sets ``[0, card)``; every distribution is a dense
float64 table.  Inputs that fail normalization by more than ``SIMPLEX_TOL``
are rejected, never renormalized, so construction bugs surface early.
All logarithms are base 2 (bits).

Channel text format
-------------------
A :class:`StateChannel` serializes to a plain-text key/value format::

    card_x 2
    card_s 2
    card_y 2
    state_pmf 0.8 0.2
    transition
    0.97 0.03
    0.03 0.97
    0.03 0.97
    0.97 0.03

``state_pmf`` holds ``card_s`` whitespace-separated reals.  ``transition``
is followed by exactly ``card_x * card_s`` rows of ``card_y`` reals, one
row per ``(x, s)`` pair in x-major, s-minor order.  Blank lines and lines
starting with ``#`` are ignored.  See :func:`parse_channel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

SIMPLEX_TOL = 1e-9

_LN2 = math.log(2.0)

# Axis orders of the joints built by assemble_joint, by encoder knowledge mode.
STRICTLY_CAUSAL = "strictly-causal"
CAUSAL = "causal"
NONCAUSAL = "noncausal"

SC_AXES = ("u", "x", "s", "y")
C_AXES = ("u", "v", "x", "s", "y")
NC_AXES = ("u", "x", "s", "y")


def _as_prob_array(values, name, ndim):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValidationError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValidationError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise ValidationError(f"{name} contains negative entries")
    return arr


@dataclass(frozen=True, eq=False)
class SimplexVector:
    """A pmf over a finite alphabet: nonnegative entries summing to 1."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _as_prob_array(self.probs, "probs", ndim=1)
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"probs sum to {total}, not 1 within {SIMPLEX_TOL}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    def __len__(self):
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, card: int) -> "SimplexVector":
        return cls(np.full(card, 1.0 / card))

    @classmethod
    def bernoulli(cls, q: float) -> "SimplexVector":
        if not 0.0 <= q <= 1.0:
            raise ValidationError(f"bernoulli parameter {q} outside [0, 1]")
        return cls(np.array([1.0 - q, q]))


@dataclass(frozen=True, eq=False)
class StochasticTable:
    """A family of pmfs, one row per conditioning tuple."""

    rows: np.ndarray

    def __post_init__(self):
        arr = _as_prob_array(self.rows, "rows", ndim=2)
        sums = arr.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > SIMPLEX_TOL)
        if bad.size:
            raise ValidationError(
                f"row {bad[0]} sums to {sums[bad[0]]}, not 1 within {SIMPLEX_TOL}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "rows", arr)

    @property
    def n_rows(self):
        return self.rows.shape[0]

    @property
    def n_cols(self):
        return self.rows.shape[1]


@dataclass(frozen=True, eq=False)
class StateChannel:
    """A DMC with DM state: p(s) on [0, card_s), p(y|x, s) as a row table.

    ``transition`` rows are ordered x-major, s-minor: row ``x * card_s + s``.
    """

    card_x: int
    card_s: int
    card_y: int
    state_pmf: SimplexVector
    transition: StochasticTable

    def __post_init__(self):
        for name in ("card_x", "card_s", "card_y"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
        if len(self.state_pmf) != self.card_s:
            raise ValidationError(
                f"state_pmf has length {len(self.state_pmf)}, expected card_s={self.card_s}"
            )
        if self.transition.n_rows != self.card_x * self.card_s:
            raise ValidationError(
                f"transition has {self.transition.n_rows} rows, "
                f"expected card_x*card_s={self.card_x * self.card_s}"
            )
        if self.transition.n_cols != self.card_y:
            raise ValidationError(
                f"transition rows have length {self.transition.n_cols}, "
                f"expected card_y={self.card_y}"
            )

    @property
    def kernel(self) -> np.ndarray:
        """p(y|x, s) reshaped to (card_x, card_s, card_y)."""
        return self.transition.rows.reshape(self.card_x, self.card_s, self.card_y)

    def marginal_kernel(self) -> np.ndarray:
        """p(y|x) with the state averaged out: shape (card_x, card_y)."""
        return np.einsum("s,xsy->xy", self.state_pmf.probs, self.kernel)


@dataclass(frozen=True, eq=False)
class JointPmf:
    """A dense joint pmf over a tuple of finite alphabets."""

    dims: tuple
    probs: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        arr = _as_prob_array(self.probs, "probs", ndim=len(dims))
        if arr.shape != dims:
            raise ValidationError(f"probs shape {arr.shape} does not match dims {dims}")
        total = float(arr.sum())
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"joint sums to {total}, not 1 within {SIMPLEX_TOL}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "probs", arr)

    @property
    def n_axes(self):
        return len(self.dims)

    def marginal(self, axes) -> "JointPmf":
        """Marginal over the given axes, kept in their original order."""
        axes = _check_axes(axes, self.n_axes, "axes")
        drop = tuple(i for i in range(self.n_axes) if i not in axes)
        arr = self.probs.sum(axis=drop) if drop else self.probs
        return JointPmf(tuple(self.dims[i] for i in sorted(axes)), arr)


def _check_axes(axes, n_axes, name):
    axes = tuple(int(a) for a in axes)
    if len(set(axes)) != len(axes):
        raise ValidationError(f"{name} contains duplicates: {axes}")
    for a in axes:
        if not 0 <= a < n_axes:
            raise ValidationError(f"{name} index {a} out of range for {n_axes} axes")
    return set(axes)


def entropy_bits(arr: np.ndarray) -> float:
    """H of an arbitrary nonnegative table (0 log 0 := 0), no validation."""
    a = np.asarray(arr, dtype=np.float64)
    pos = a[a > 0]
    return float(-(pos * np.log(pos)).sum() / _LN2)


def entropy(p) -> float:
    """Shannon entropy in bits of a pmf (SimplexVector or array-like)."""
    if not isinstance(p, SimplexVector):
        p = SimplexVector(np.asarray(p, dtype=np.float64))
    return entropy_bits(p.probs)


def binary_entropy(p: float) -> float:
    """H(p) in bits for a Bernoulli(p) variable."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary_entropy argument {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


def binary_convolution(a: float, b: float) -> float:
    """a * b in the Bernoulli sense: P(A xor B = 1) for independent inputs."""
    for name, v in (("a", a), ("b", b)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"binary_convolution argument {name}={v} outside [0, 1]")
    return a * (1.0 - b) + b * (1.0 - a)


def gaussian_capacity_fn(x: float) -> float:
    """(1/2) log2(1 + x), the AWGN capacity at SNR x."""
    if x < 0:
        raise ValidationError(f"gaussian_capacity_fn argument {x} is negative")
    return 0.5 * math.log2(1.0 + x)


def mutual_information(joint: JointPmf, group_a, group_b) -> float:
    """I(A; B) in bits between two disjoint axis groups of a joint pmf."""
    a = _check_axes(group_a, joint.n_axes, "group_a")
    b = _check_axes(group_b, joint.n_axes, "group_b")
    if a & b:
        raise ValidationError(f"axis groups overlap: {sorted(a & b)}")
    if not a or not b:
        raise ValidationError("axis groups must be nonempty")
    h_a = entropy_bits(joint.marginal(a).probs)
    h_b = entropy_bits(joint.marginal(b).probs)
    h_ab = entropy_bits(joint.marginal(a | b).probs)
    return h_a + h_b - h_ab


def assemble_joint(channel: StateChannel, design, mode: str) -> JointPmf:
    """Build the single-letter joint law induced by a design on a channel.

    Modes and axis orders:

    * ``strictly-causal`` -> (U, X, S, Y): p(x) p(s) p(u|x,s) p(y|x,s)
    * ``causal``          -> (U, V, X, S, Y): p(v) p(s) p(u|v,s) 1{x=x(v,s)} p(y|x,s)
    * ``noncausal``       -> (U, X, S, Y): p(s) p(u|s) 1{x=x(u,s)} p(y|x,s)

    The design object must match the mode (see cdsolve's design types).
    """
    ps = channel.state_pmf.probs
    w = channel.kernel
    if mode == STRICTLY_CAUSAL:
        px = design.input_pmf.probs
        if len(px) != channel.card_x:
            raise ValidationError("design input_pmf length does not match card_x")
        t = _test_channel_3d(design, (channel.card_x, channel.card_s), "x,s")
        # (u,x,s,y)
        probs = (
            t.transpose(2, 0, 1)[:, :, :, None]
            * px[None, :, None, None]
            * ps[None, None, :, None]
            * w[None, :, :, :]
        )
        dims = (design.card_u, channel.card_x, channel.card_s, channel.card_y)
    elif mode == CAUSAL:
        pv = design.strategy_pmf.probs
        card_v = len(pv)
        t = _test_channel_3d(design, (card_v, channel.card_s), "v,s")
        imap = _input_map(design, (card_v, channel.card_s), channel.card_x)
        sel = np.zeros((card_v, channel.card_x, channel.card_s))
        for v in range(card_v):
            for s in range(channel.card_s):
                sel[v, imap[v, s], s] = 1.0
        # (u,v,x,s,y)
        probs = (
            t.transpose(2, 0, 1)[:, :, None, :, None]
            * pv[None, :, None, None, None]
            * ps[None, None, None, :, None]
            * sel[None, :, :, :, None]
            * w[None, None, :, :, :]
        )
        dims = (design.card_u, card_v, channel.card_x, channel.card_s, channel.card_y)
    elif mode == NONCAUSAL:
        t = design.test_channel.rows  # (s, u)
        if t.shape[0] != channel.card_s:
            raise ValidationError("noncausal test_channel must have one row per state")
        card_u = t.shape[1]
        imap = _input_map(design, (card_u, channel.card_s), channel.card_x)
        sel = np.zeros((card_u, channel.card_x, channel.card_s))
        for u in range(card_u):
            for s in range(channel.card_s):
                sel[u, imap[u, s], s] = 1.0
        # (u,x,s,y)
        probs = (
            t.T[:, None, :, None]
            * ps[None, None, :, None]
            * sel[:, :, :, None]
            * w[None, :, :, :]
        )
        dims = (card_u, channel.card_x, channel.card_s, channel.card_y)
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    return JointPmf(dims, probs)


def _test_channel_3d(design, cond_shape, label):
    rows = design.test_channel.rows
    expected = cond_shape[0] * cond_shape[1]
    if rows.shape[0] != expected:
        raise ValidationError(
            f"test_channel has {rows.shape[0]} rows, expected {expected} (one per ({label}))"
        )
    if rows.shape[1] != design.card_u:
        raise ValidationError(
            f"test_channel rows have length {rows.shape[1]}, expected card_u={design.card_u}"
        )
    return rows.reshape(cond_shape[0], cond_shape[1], design.card_u)


def _input_map(design, shape, card_x):
    imap = np.asarray(design.input_map, dtype=np.int64)
    if imap.shape != shape:
        raise ValidationError(f"input_map shape {imap.shape}, expected {shape}")
    if imap.min() < 0 or imap.max() >= card_x:
        raise ValidationError(f"input_map values must lie in [0, {card_x})")
    return imap


def bsc_channel(p: float, q: float) -> StateChannel:
    """Binary channel Y = X xor S xor Z with S ~ Bern(q), Z ~ Bern(p)."""
    if not 0.0 <= p <= 1.0 or not 0.0 <= q <= 1.0:
        raise ValidationError(f"bsc parameters p={p}, q={q} must lie in [0, 1]")
    rows = np.zeros((4, 2))
    for x in range(2):
        for s in range(2):
            rows[x * 2 + s, (x + s) % 2] = 1.0 - p
            rows[x * 2 + s, (x + s + 1) % 2] = p
    return StateChannel(2, 2, 2, SimplexVector.bernoulli(q), StochasticTable(rows))


def channel_from_map(y_map, state_pmf, card_y=None) -> StateChannel:
    """Deterministic channel Y = y(X, S); y_map has shape (card_x, card_s)."""
    ymap = np.asarray(y_map, dtype=np.int64)
    if ymap.ndim != 2:
        raise ValidationError("y_map must be 2-dimensional (card_x, card_s)")
    if not isinstance(state_pmf, SimplexVector):
        state_pmf = SimplexVector(np.asarray(state_pmf, dtype=np.float64))
    card_x, card_s = ymap.shape
    if len(state_pmf) != card_s:
        raise ValidationError("state_pmf length does not match y_map's state axis")
    if card_y is None:
        card_y = int(ymap.max()) + 1
    if ymap.min() < 0 or ymap.max() >= card_y:
        raise ValidationError(f"y_map values must lie in [0, {card_y})")
    rows = np.zeros((card_x * card_s, card_y))
    for x in range(card_x):
        for s in range(card_s):
            rows[x * card_s + s, ymap[x, s]] = 1.0
    return StateChannel(card_x, card_s, card_y, state_pmf, StochasticTable(rows))


# ---------------------------------------------------------------------------
# Plain-text channel serialization
# ---------------------------------------------------------------------------


def serialize_channel(channel: StateChannel) -> str:
    lines = [
        f"card_x {channel.card_x}",
        f"card_s {channel.card_s}",
        f"card_y {channel.card_y}",
        "state_pmf " + " ".join(_fmt(v) for v in channel.state_pmf.probs),
        "transition",
    ]
    for row in channel.transition.rows:
        lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def parse_channel(text: str) -> StateChannel:
    """Parse the key/value channel format; raises ParseError with line numbers."""
    fields = {}
    transition_rows = []
    in_transition = False
    transition_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if in_transition:
            try:
                transition_rows.append([float(v) for v in line.split()])
            except ValueError:
                raise ParseError(f"bad transition row {line!r}", line=lineno)
            continue
        key, _, rest = line.partition(" ")
        if key == "transition":
            in_transition = True
            transition_line = lineno
            continue
        if key in ("card_x", "card_s", "card_y"):
            try:
                fields[key] = int(rest.strip())
            except ValueError:
                raise ParseError(f"{key} must be an integer, got {rest.strip()!r}", line=lineno)
        elif key == "state_pmf":
            try:
                fields[key] = [float(v) for v in rest.split()]
            except ValueError:
                raise ParseError(f"bad state_pmf {rest!r}", line=lineno)
        else:
            raise ParseError(f"unknown field {key!r}", line=lineno)
    for key in ("card_x", "card_s", "card_y", "state_pmf"):
        if key not in fields:
            raise ParseError(f"missing field {key!r}")
    if not in_transition:
        raise ParseError("missing transition block")
    expected_rows = fields["card_x"] * fields["card_s"]
    if len(transition_rows) != expected_rows:
        raise ParseError(
            f"expected {expected_rows} transition rows, found {len(transition_rows)}",
            line=transition_line,
        )
    widths = {len(r) for r in transition_rows}
    if widths != {fields["card_y"]}:
        raise ParseError(
            f"transition rows must have card_y={fields['card_y']} entries, found widths {sorted(widths)}",
            line=transition_line,
        )
    try:
        return StateChannel(
            fields["card_x"],
            fields["card_s"],
            fields["card_y"],
            SimplexVector(np.array(fields["state_pmf"])),
            StochasticTable(np.array(transition_rows)),
        )
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc
