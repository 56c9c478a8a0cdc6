"""Numerical capacity-distortion solving for channels with state.

The constrained problem max{rate : E d <= D} is swept as a Lagrangian
family max(rate - lambda * distortion) over lambda >= 0; because the true
tradeoff curve is nondecreasing and concave, the upper concave envelope
of all sweep outcomes recovers it.  Each Lagrangian subproblem is
non-convex in the distributions jointly, so it is attacked by multistart
alternating maximization: the estimator update is an exact argmin, the
distribution update is gradient ascent on softmax-parameterized simplex
rows with step halving.  Every solver output is an achievable lower
bound; multistart with derived per-restart generators keeps runs
deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .curves import CdCurve, upper_envelope
from .errors import ExpansionTooLargeError, ParseError, ValidationError
from .estimator import DistortionTable, EstimatorTable, expected_distortion
from .probcore import (
    CAUSAL,
    NONCAUSAL,
    STRICTLY_CAUSAL,
    JointPmf,
    SimplexVector,
    StateChannel,
    StochasticTable,
    assemble_joint,
    entropy_bits,
    mutual_information,
)
from .simplexopt import maximize_over_pmf, simplex_grid, softmax, softmax_chain

_LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Design types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointDesign:
    """Candidate solution for strictly causal communication.

    ``test_channel`` has one row per (x, s) pair (x-major) over U;
    ``est`` maps (u, x, y) to a reconstruction and may be None, in which
    case evaluation uses the optimal estimator for the induced joint.
    """

    input_pmf: SimplexVector
    test_channel: StochasticTable
    card_u: int
    est: EstimatorTable | None = None

    def __post_init__(self):
        card_x = len(self.input_pmf)
        rows = self.test_channel.n_rows
        if rows % card_x != 0:
            raise ValidationError(
                f"test_channel rows ({rows}) not a multiple of card_x ({card_x})"
            )
        card_s = rows // card_x
        if self.test_channel.n_cols != self.card_u:
            raise ValidationError("test_channel width does not match card_u")
        if self.card_u > card_s + 2:
            raise ValidationError(
                f"card_u={self.card_u} exceeds the sufficient bound card_s+2={card_s + 2}"
            )

    @property
    def card_x(self):
        return len(self.input_pmf)

    @property
    def card_s(self):
        return self.test_channel.n_rows // self.card_x


@dataclass(frozen=True, eq=False)
class CausalDesign:
    """Candidate solution for causal communication.

    V indexes Shannon strategies: ``input_map[v, s]`` is the channel input
    used when the strategy is v and the current state is s; ``est`` maps
    (u, v, y) to a reconstruction.
    """

    strategy_pmf: SimplexVector
    test_channel: StochasticTable
    input_map: np.ndarray
    card_u: int
    est: EstimatorTable | None = None

    def __post_init__(self):
        imap = np.asarray(self.input_map, dtype=np.int64)
        card_v = len(self.strategy_pmf)
        if imap.ndim != 2 or imap.shape[0] != card_v:
            raise ValidationError(
                f"input_map must have shape (card_v, card_s), got {imap.shape}"
            )
        card_s = imap.shape[1]
        if self.test_channel.n_rows != card_v * card_s:
            raise ValidationError("test_channel must have one row per (v, s) pair")
        if self.test_channel.n_cols != self.card_u:
            raise ValidationError("test_channel width does not match card_u")
        if self.card_u > card_s + 2:
            raise ValidationError(
                f"card_u={self.card_u} exceeds the sufficient bound card_s+2={card_s + 2}"
            )
        object.__setattr__(self, "input_map", imap)

    @property
    def card_v(self):
        return len(self.strategy_pmf)

    @property
    def card_s(self):
        return self.input_map.shape[1]


@dataclass(frozen=True, eq=False)
class NoncausalDesign:
    """Candidate for the noncausal achievable bound: p(u|s), x(u, s), est(u, y)."""

    test_channel: StochasticTable  # one row per state s, over U
    input_map: np.ndarray  # (card_u, card_s)
    card_u: int
    est: EstimatorTable | None = None

    def __post_init__(self):
        imap = np.asarray(self.input_map, dtype=np.int64)
        if self.test_channel.n_cols != self.card_u:
            raise ValidationError("test_channel width does not match card_u")
        if imap.ndim != 2 or imap.shape != (self.card_u, self.test_channel.n_rows):
            raise ValidationError(
                f"input_map must have shape (card_u, card_s), got {imap.shape}"
            )
        object.__setattr__(self, "input_map", imap)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the Lagrangian sweep solver.

    ``lambda_grid`` overrides the arithmetic grid arange(0, lambda_max,
    lambda_step); ``card_u`` defaults to the sufficient bound card_s + 2.
    """

    multistart: int = 50
    max_iters: int = 400
    tol: float = 1e-9
    patience: int = 25
    lambda_max: float = 6.0
    lambda_step: float = 0.25
    lambda_grid: tuple | None = None
    seed: int = 0
    card_u: int | None = None
    expansion_cap: int = 4096
    dstar_tol: float = 1e-6
    step0: float = 1.0

    def __post_init__(self):
        if self.multistart < 1:
            raise ValidationError("multistart must be >= 1")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.lambda_step <= 0 or self.lambda_max < 0:
            raise ValidationError("lambda grid parameters must be positive")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid or any(v < 0 for v in grid):
                raise ValidationError("lambda_grid must be nonempty and nonnegative")
            object.__setattr__(self, "lambda_grid", grid)

    def resolved_lambda_grid(self):
        if self.lambda_grid is not None:
            return np.asarray(self.lambda_grid, dtype=np.float64)
        n = int(round(self.lambda_max / self.lambda_step)) + 1
        return np.linspace(0.0, self.lambda_step * (n - 1), n)

    _INT_KEYS = ("multistart", "max_iters", "seed", "card_u", "expansion_cap")
    _FLOAT_KEYS = ("tol", "lambda_max", "lambda_step", "dstar_tol", "step0", "patience")

    @classmethod
    def from_mapping(cls, mapping, base=None):
        opts = base or cls()
        updates = {}
        for key, raw in mapping.items():
            if key in cls._INT_KEYS:
                updates[key] = int(raw)
            elif key == "patience":
                updates[key] = int(raw)
            elif key in cls._FLOAT_KEYS:
                updates[key] = float(raw)
            elif key == "lambda_grid":
                if isinstance(raw, str):
                    raw = [v for v in raw.replace(",", " ").split()]
                updates[key] = tuple(float(v) for v in raw)
            else:
                raise ValidationError(f"unknown solver option {key!r}")
        return replace(opts, **updates)

    @classmethod
    def from_text(cls, text, base=None):
        """Parse 'key value' lines ('#' comments and blanks ignored)."""
        mapping = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            if not rest.strip():
                raise ParseError(f"option {key!r} has no value", line=lineno)
            mapping[key] = rest.strip()
        return cls.from_mapping(mapping, base=base)


class LosslessReport(NamedTuple):
    delta_star: float
    h_s: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class TradeoffRegion:
    """Upper-right staircase boundary of the (R, Delta) tradeoff region."""

    vertices: tuple  # of (R, Delta) pairs, Delta ascending
    h_s: float

    def __post_init__(self):
        verts = tuple((float(r), float(dl)) for r, dl in self.vertices)
        for r, dl in verts:
            if r < -1e-12 or dl < -1e-12 or dl > self.h_s + 1e-9:
                raise ValidationError(f"vertex (R={r}, Delta={dl}) outside bounds")
        object.__setattr__(self, "vertices", verts)

    @property
    def r_axis_intercept(self):
        return max(r for r, _ in self.vertices)

    @property
    def delta_axis_intercept(self):
        return max(dl for _, dl in self.vertices)


# ---------------------------------------------------------------------------
# Design evaluation
# ---------------------------------------------------------------------------


def evaluate_design(channel, d, design, mode):
    """Rate and distortion of one design: the mode's information objective
    on the assembled joint, and the expected distortion of the design's
    estimator (optimal estimator if the design carries none).

    No clamping: rates of poor designs can be negative.
    """
    joint = assemble_joint(channel, design, mode)
    if mode == STRICTLY_CAUSAL:
        rate = mutual_information(joint, (0, 1), (3,)) - mutual_information(joint, (0, 1), (2,))
        sub = joint  # axes (U, X, S, Y); estimator conditions on (U, X, Y)
        z_axis = 2
    elif mode == CAUSAL:
        _check_causal_bounds(channel, design)
        rate = mutual_information(joint, (0, 1), (4,)) - mutual_information(joint, (0, 1), (3,))
        sub = joint.marginal((0, 1, 3, 4))  # (U, V, S, Y)
        z_axis = 2
    elif mode == NONCAUSAL:
        rate = mutual_information(joint, (0,), (3,)) - mutual_information(joint, (0,), (2,))
        sub = joint.marginal((0, 2, 3))  # (U, S, Y)
        z_axis = 1
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    est = design.est
    if est is None:
        from .estimator import optimal_estimator

        est = optimal_estimator(sub, z_axis, d)
    dist = expected_distortion(sub, z_axis, est, d)
    return rate, dist


def _check_causal_bounds(channel, design):
    bound = min((channel.card_x - 1) * channel.card_s + 1, channel.card_y) + 1
    if design.card_v > bound:
        raise ValidationError(
            f"card_v={design.card_v} exceeds the sufficient bound {bound} for this channel"
        )


# ---------------------------------------------------------------------------
# Shannon strategy expansion
# ---------------------------------------------------------------------------


def strategy_map(card_x, card_s):
    """x_v(s) for all card_x**card_s strategies; shape (V, S).

    v encodes the tuple (x_v(0), ..., x_v(card_s - 1)) in base card_x with
    s = 0 as the most significant digit.
    """
    card_v = card_x**card_s
    vmap = np.empty((card_v, card_s), dtype=np.int64)
    for s in range(card_s):
        divisor = card_x ** (card_s - 1 - s)
        vmap[:, s] = (np.arange(card_v) // divisor) % card_x
    return vmap


def shannon_expand(channel: StateChannel, cap: int = 4096) -> StateChannel:
    """Channel whose inputs are the maps s -> x (Shannon strategies)."""
    card_v = channel.card_x**channel.card_s
    if card_v > cap:
        raise ExpansionTooLargeError(
            f"expansion too large: {channel.card_x}**{channel.card_s} = {card_v} "
            f"strategies exceed the cap {cap}"
        )
    vmap = strategy_map(channel.card_x, channel.card_s)
    kernel = channel.kernel
    rows = np.empty((card_v * channel.card_s, channel.card_y))
    for v in range(card_v):
        for s in range(channel.card_s):
            rows[v * channel.card_s + s] = kernel[vmap[v, s], s]
    return StateChannel(
        card_v, channel.card_s, channel.card_y, channel.state_pmf, StochasticTable(rows)
    )


# ---------------------------------------------------------------------------
# Lagrangian subproblem: maximize rate - lambda * distortion
# ---------------------------------------------------------------------------


class _ScLagrangian:
    """Strictly-causal-shaped subproblem on a (possibly expanded) channel.

    Parameters are theta = [theta_px (X), theta_T (X*S*U)], mapped through
    row-wise softmax to p(x) and p(u|x, s).  The estimator is re-optimized
    inside every objective evaluation (an exact inner argmin), so the
    objective is the pointwise max over estimators and its gradient at the
    current estimator is exact.
    """

    def __init__(self, channel, dtable, card_u, lam):
        self.ps = channel.state_pmf.probs
        self.w = channel.kernel  # (X, S, Y)
        self.d = dtable.d  # (S, Shat)
        self.card_x = channel.card_x
        self.card_s = channel.card_s
        self.card_y = channel.card_y
        self.card_u = card_u
        self.lam = lam
        self.n_params = self.card_x + self.card_x * self.card_s * card_u

    def unpack(self, theta):
        px = softmax(theta[: self.card_x])
        t = softmax(theta[self.card_x :].reshape(self.card_x, self.card_s, self.card_u))
        return px, t

    def joint(self, px, t):
        # (U, X, S, Y)
        return (
            t.transpose(2, 0, 1)[:, :, :, None]
            * px[None, :, None, None]
            * self.ps[None, None, :, None]
            * self.w[None, :, :, :]
        )

    def rate_and_distortion(self, j):
        muxy = j.sum(axis=2)
        my = muxy.sum(axis=(0, 1))
        muxs = j.sum(axis=3)
        rate = (
            entropy_bits(my)
            + entropy_bits(muxs)
            - entropy_bits(muxy)
            - entropy_bits(self.ps)
        )
        costs = np.moveaxis(j, 2, 3) @ self.d  # (U, X, Y, Shat)
        dist = float(costs.min(axis=-1).sum())
        return rate, dist

    def objective(self, theta):
        px, t = self.unpack(theta)
        rate, dist = self.rate_and_distortion(self.joint(px, t))
        return rate - self.lam * dist

    def objective_and_grad(self, theta):
        px, t = self.unpack(theta)
        j = self.joint(px, t)
        muxy = j.sum(axis=2)
        my = muxy.sum(axis=(0, 1))
        muxs = j.sum(axis=3)
        rate = (
            entropy_bits(my)
            + entropy_bits(muxs)
            - entropy_bits(muxy)
            - entropy_bits(self.ps)
        )
        m = np.moveaxis(j, 2, 3)  # (U, X, Y, S)
        costs = m @ self.d
        est = np.argmin(costs, axis=-1)  # (U, X, Y)
        dist = float(np.take_along_axis(costs, est[..., None], axis=-1).sum())
        value = rate - self.lam * dist

        with np.errstate(divide="ignore"):
            log_muxy = _safe_log(muxy)
            log_my = _safe_log(my)
            log_muxs = _safe_log(muxs)
            log_ps = _safe_log(self.ps)
        g = (
            log_muxy[:, :, None, :]
            - log_my[None, None, None, :]
            - log_muxs[:, :, :, None]
            + log_ps[None, None, :, None]
        ) / _LN2
        acost = np.moveaxis(self.d.T[est], 3, 2)  # (U, X, S, Y)
        g = g - self.lam * acost
        g = np.where(j > 0, g, 0.0)

        grad_px = np.einsum("s,xsu,xsy,uxsy->x", self.ps, t, self.w, g)
        grad_t = np.einsum("x,s,xsy,uxsy->xsu", px, self.ps, self.w, g)
        gtheta = np.concatenate(
            [softmax_chain(px, grad_px), softmax_chain(t, grad_t).ravel()]
        )
        return value, gtheta


def _safe_log(arr):
    return np.where(arr > 0, np.log(np.maximum(arr, 1e-300)), 0.0)


def _ascend_lagrangian(problem, theta0, opts):
    """Monotone ascent with step halving; returns (theta, value, converged)."""
    theta = theta0.copy()
    value, grad = problem.objective_and_grad(theta)
    step = opts.step0
    history = [value]
    for _ in range(opts.max_iters):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-9 * (1.0 + abs(value)):
            return theta, value, True
        improved = False
        trial = step
        for _ in range(45):
            cand = theta + trial * grad
            cand_val = problem.objective(cand)
            if cand_val > value:
                improved = True
                break
            trial *= 0.5
        if not improved:
            return theta, value, True
        theta = cand
        value, grad = problem.objective_and_grad(theta)
        step = min(trial * 1.3, 1e3)
        history.append(value)
        if len(history) > opts.patience and value - history[-opts.patience - 1] < opts.tol:
            return theta, value, True
    return theta, value, False


def _solve_sc_outcomes(channel, dtable, opts, mode_label):
    """Run the full sweep; returns per-outcome arrays (dist, rate, lam, conv)."""
    card_u = opts.card_u if opts.card_u is not None else channel.card_s + 2
    grid = opts.resolved_lambda_grid()
    dists, rates, lams, convs = [], [], [], []
    for li, lam in enumerate(grid):
        problem = _ScLagrangian(channel, dtable, card_u, float(lam))
        for r in range(opts.multistart):
            rng = np.random.default_rng(np.random.SeedSequence((opts.seed, li, r)))
            if r == 0:
                theta0 = np.zeros(problem.n_params)
            else:
                theta0 = rng.normal(0.0, 1.5, problem.n_params)
            theta, _, converged = _ascend_lagrangian(problem, theta0, opts)
            px, t = problem.unpack(theta)
            rate, dist = problem.rate_and_distortion(problem.joint(px, t))
            dists.append(dist)
            rates.append(rate)
            lams.append(float(lam))
            convs.append(converged)
    return np.array(dists), np.array(rates), np.array(lams), np.array(convs)


def solve_cd_curve(channel, d, mode, opts=None) -> CdCurve:
    """Achievable capacity-distortion curve via the Lagrangian sweep.

    Causal mode expands the channel over Shannon strategies first and
    solves the induced strictly causal problem.  The returned curve is the
    upper concave envelope of every sweep outcome; metadata records the
    options, seed and how many restarts hit the iteration cap.
    """
    opts = opts or SolverOptions()
    if mode == CAUSAL:
        work = shannon_expand(channel, opts.expansion_cap)
    elif mode == STRICTLY_CAUSAL:
        work = channel
    else:
        raise ValidationError(f"solve_cd_curve supports strictly-causal/causal, not {mode!r}")
    if d.card_s != channel.card_s:
        raise ValidationError("distortion table does not match the channel's state alphabet")
    dists, rates, lams, convs = _solve_sc_outcomes(work, d, opts, mode)
    meta = {
        "mode": mode,
        "seed": opts.seed,
        "multistart": opts.multistart,
        "max_iters": opts.max_iters,
        "lambda_grid": [float(v) for v in opts.resolved_lambda_grid()],
        "card_u": opts.card_u if opts.card_u is not None else work.card_s + 2,
        "unconverged_restarts": int((~convs).sum()),
        "source": "solver",
    }
    restarts = np.full(len(dists), opts.multistart, dtype=np.int64)
    return upper_envelope(dists, rates, lams, restarts, meta)


def solve_dstar(channel, d, mode, opts=None) -> float:
    """Minimum distortion with nonnegative rate: the curve's D-intercept."""
    opts = opts or SolverOptions()
    curve = solve_cd_curve(channel, d, mode, opts)
    return curve.d_intercept(opts.dstar_tol)


# ---------------------------------------------------------------------------
# Lossless feasibility, uncertainty reduction, rate-Delta region
# ---------------------------------------------------------------------------


def _ixsy_terms(channel):
    ps = channel.state_pmf.probs
    kernel = channel.kernel
    mk = channel.marginal_kernel()  # p(y|x)
    h_y_given_xs = -np.einsum(
        "s,xsy->x", ps, np.where(kernel > 0, kernel * np.log(np.maximum(kernel, 1e-300)), 0.0)
    ) / _LN2
    return ps, mk, h_y_given_xs


def lossless_feasible(channel: StateChannel) -> LosslessReport:
    """Whether the state can be conveyed losslessly: H(S) < Delta*.

    Delta* = max over p(x), X independent of S, of I(X, S; Y) — a concave
    objective, maximized by ascent from uniform plus a grid refinement.
    """
    ps, mk, h_y_given_xs = _ixsy_terms(channel)

    def objective(px):
        return entropy_bits(px @ mk) - float(px @ h_y_given_xs)

    _, delta_star = maximize_over_pmf(objective, channel.card_x)
    h_s = entropy_bits(ps)
    return LosslessReport(delta_star, h_s, h_s < delta_star)


def uncertainty_reduction_rate(channel: StateChannel) -> float:
    """min(H(S), Delta*): the best possible state list-decoding exponent."""
    report = lossless_feasible(channel)
    return min(report.h_s, report.delta_star)


def rate_delta_region(channel: StateChannel, grid: float = 0.02) -> TradeoffRegion:
    """Staircase boundary of the (R, Delta) region at the given resolution.

    For each p(x) on a simplex grid of step ``grid`` the region contributes
    {R <= I(X;Y), Delta <= H(S), R + Delta <= I(X,S;Y)}; the boundary of
    the union is sampled on a Delta grid of the same resolution.
    """
    ps, mk, h_y_given_xs = _ixsy_terms(channel)
    h_s = entropy_bits(ps)
    h_y_given_x = -np.einsum(
        "xy->x", np.where(mk > 0, mk * np.log(np.maximum(mk, 1e-300)), 0.0)
    ) / _LN2
    ixy, ixsy = [], []
    for px in simplex_grid(channel.card_x, grid):
        h_y = entropy_bits(px @ mk)
        ixy.append(h_y - float(px @ h_y_given_x))
        ixsy.append(h_y - float(px @ h_y_given_xs))
    ixy = np.array(ixy)
    ixsy = np.array(ixsy)
    delta_max = min(h_s, float(ixsy.max()))
    n_delta = max(int(round(1.0 / grid)) + 1, 2)
    vertices = []
    for delta in np.linspace(0.0, delta_max, n_delta):
        r = np.minimum(ixy, ixsy - delta)
        feasible = ixsy >= delta - 1e-12
        if not feasible.any():
            continue
        best = float(np.maximum(r[feasible], 0.0).max())
        vertices.append((best, float(delta)))
    return TradeoffRegion(tuple(vertices), h_s)


# ---------------------------------------------------------------------------
# Unconstrained capacity (Blahut-Arimoto), used as a reference bound
# ---------------------------------------------------------------------------


def arimoto_capacity(pyx, max_iters=2000, tol=1e-12):
    """Capacity in bits of a plain DMC p(y|x) via Blahut-Arimoto."""
    pyx = np.asarray(pyx, dtype=np.float64)
    card_x = pyx.shape[0]
    px = np.full(card_x, 1.0 / card_x)
    log_pyx = _safe_log(pyx)
    for _ in range(max_iters):
        py = px @ pyx
        log_py = _safe_log(py)
        dkl = (pyx * (log_pyx - log_py[None, :])).sum(axis=1)
        new = px * np.exp(dkl)
        new /= new.sum()
        if np.abs(new - px).max() < tol:
            px = new
            break
        px = new
    py = px @ pyx
    log_py = _safe_log(py)
    cap = float((px[:, None] * pyx * (log_pyx - log_py[None, :])).sum() / _LN2)
    return cap, px


def unconstrained_capacity(channel: StateChannel, mode: str) -> float:
    """max I(X;Y) (strictly causal) or max I(V;Y) on the expanded channel."""
    if mode == STRICTLY_CAUSAL:
        cap, _ = arimoto_capacity(channel.marginal_kernel())
    elif mode == CAUSAL:
        cap, _ = arimoto_capacity(shannon_expand(channel).marginal_kernel())
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    return cap


# ---------------------------------------------------------------------------
# Noncausal achievable lower bound
# ---------------------------------------------------------------------------


class _NcLagrangian:
    """Noncausal subproblem: parameters p(u|s) plus a discrete map x(u, s).

    X is a function of (U, S), so the information objective and the
    estimator live entirely on (U, S, Y) with kernel w[x(u,s), s, y].
    """

    def __init__(self, channel, dtable, card_u, lam, imap):
        self.ps = channel.state_pmf.probs
        self.w = channel.kernel
        self.d = dtable.d
        self.card_u = card_u
        self.card_s = channel.card_s
        self.card_x = channel.card_x
        self.lam = lam
        self.imap = imap  # (U, S)

    def kernel_us(self):
        # (U, S, Y)
        return self.w[self.imap, np.arange(self.card_s)[None, :], :]

    def unpack(self, theta):
        return softmax(theta.reshape(self.card_s, self.card_u))

    def joint(self, t):
        # (U, S, Y)
        return t.T[:, :, None] * self.ps[None, :, None] * self.kernel_us()

    def rate_and_distortion(self, j):
        muy = j.sum(axis=1)
        my = muy.sum(axis=0)
        mus = j.sum(axis=2)
        rate = entropy_bits(my) + entropy_bits(mus) - entropy_bits(muy) - entropy_bits(self.ps)
        costs = np.moveaxis(j, 1, 2) @ self.d  # (U, Y, Shat)
        dist = float(costs.min(axis=-1).sum())
        return rate, dist

    def objective(self, theta):
        rate, dist = self.rate_and_distortion(self.joint(self.unpack(theta)))
        return rate - self.lam * dist

    def objective_and_grad(self, theta):
        t = self.unpack(theta)
        j = self.joint(t)
        muy = j.sum(axis=1)
        my = muy.sum(axis=0)
        mus = j.sum(axis=2)
        rate = entropy_bits(my) + entropy_bits(mus) - entropy_bits(muy) - entropy_bits(self.ps)
        m = np.moveaxis(j, 1, 2)  # (U, Y, S)
        costs = m @ self.d
        est = np.argmin(costs, axis=-1)  # (U, Y)
        dist = float(np.take_along_axis(costs, est[..., None], axis=-1).sum())
        value = rate - self.lam * dist
        g = (
            _safe_log(muy)[:, None, :]
            - _safe_log(my)[None, None, :]
            - _safe_log(mus)[:, :, None]
            + _safe_log(self.ps)[None, :, None]
        ) / _LN2
        acost = np.moveaxis(self.d.T[est], 2, 1)  # (U, S, Y)
        g = np.where(j > 0, g - self.lam * acost, 0.0)
        grad_t = np.einsum("s,usy,usy->su", self.ps, self.kernel_us(), g)
        return value, softmax_chain(t, grad_t).ravel()


def noncausal_lower_bound(channel, d, D, card_u, opts=None) -> float:
    """Achievable lower bound on noncausal capacity at distortion budget D.

    Maximizes I(U;Y) - I(U;S) over p(u|s), input maps x(u, s) and
    estimators with E d <= D, by the same multistart Lagrangian sweep;
    the map is improved by greedy coordinate sweeps between ascent rounds.
    This is a lower bound only, and may be loose for small card_u (no
    cardinality bound is known for this expression).

    Returns -inf if no sampled design meets the budget.
    """
    opts = opts or SolverOptions()
    if card_u < 1:
        raise ValidationError("card_u must be >= 1")
    if D < 0:
        raise ValidationError("distortion budget must be nonnegative")
    grid = opts.resolved_lambda_grid()
    dists, rates = [], []
    for li, lam in enumerate(grid):
        for r in range(opts.multistart):
            rng = np.random.default_rng(np.random.SeedSequence((opts.seed, li, r, 7)))
            imap = rng.integers(0, channel.card_x, size=(card_u, channel.card_s))
            theta = np.zeros(channel.card_s * card_u) if r == 0 else rng.normal(
                0.0, 1.5, channel.card_s * card_u
            )
            problem = _NcLagrangian(channel, d, card_u, float(lam), imap)
            for _ in range(4):
                theta, value, _ = _ascend_lagrangian(problem, theta, opts)
                if not _improve_map(problem, theta):
                    break
            rate, dist = problem.rate_and_distortion(problem.joint(problem.unpack(theta)))
            dists.append(dist)
            rates.append(rate)
    dists = np.array(dists)
    rates = np.array(rates)
    envelope = upper_envelope(
        dists, rates, np.zeros(len(dists)), np.zeros(len(dists), dtype=np.int64)
    )
    return envelope.value_at(D)


def _improve_map(problem, theta):
    """One greedy sweep over x(u, s) entries; True if the map changed."""
    changed = False
    base = problem.objective(theta)
    for u in range(problem.card_u):
        for s in range(problem.card_s):
            best_x, best_val = problem.imap[u, s], base
            for x in range(problem.card_x):
                if x == problem.imap[u, s]:
                    continue
                problem.imap[u, s] = x
                val = problem.objective(theta)
                if val > best_val + 1e-15:
                    best_x, best_val = x, val
            problem.imap[u, s] = best_x
            if best_val > base + 1e-15:
                base = best_val
                changed = True
    return changed
