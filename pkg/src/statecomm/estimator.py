"""Decoder-side state estimation: optimal reconstruction tables.

The decoder sees a tuple of observed variables and must output a
reconstruction minimizing expected distortion.  The optimum is a
deterministic per-tuple argmin of the conditional expected distortion;
ties break toward the smallest reconstruction index so outputs are
reproducible, and zero-probability tuples get index 0 by convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .probcore import JointPmf


@dataclass(frozen=True, eq=False)
class DistortionTable:
    """d(s, s_hat) >= 0; every source symbol has some zero-distortion output."""

    d: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.d, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(f"distortion table must be 2-dimensional, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValidationError("distortion entries must be finite and nonnegative")
        if not np.all((arr == 0).any(axis=1)):
            bad = int(np.flatnonzero(~(arr == 0).any(axis=1))[0])
            raise ValidationError(f"source symbol {bad} has no zero-distortion reconstruction")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "d", arr)

    @property
    def card_s(self):
        return self.d.shape[0]

    @property
    def card_shat(self):
        return self.d.shape[1]

    @classmethod
    def hamming(cls, card: int) -> "DistortionTable":
        return cls(1.0 - np.eye(card))


@dataclass(frozen=True, eq=False)
class EstimatorTable:
    """A total map from conditioning tuple to reconstruction index.

    ``choice[v0, v1, ...]`` is the reconstruction for conditioning tuple
    ``(v0, v1, ...)``; the tuple order matches the joint's non-source axes.
    """

    choice: np.ndarray
    card_shat: int

    def __post_init__(self):
        arr = np.asarray(self.choice, dtype=np.int64)
        if arr.min(initial=0) < 0 or arr.max(initial=0) >= self.card_shat:
            raise ValidationError(f"choices must lie in [0, {self.card_shat})")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "choice", arr)


def optimal_estimator(joint: JointPmf, z_axis: int, d: DistortionTable) -> EstimatorTable:
    """Best deterministic estimator of axis ``z_axis`` from all other axes.

    For every conditioning tuple v with positive probability the returned
    choice attains ``argmin over s_hat of sum_z p(z|v) d(z, s_hat)``.
    """
    costs = _conditional_costs(joint, z_axis, d)
    return EstimatorTable(np.argmin(costs, axis=-1), d.card_shat)


def expected_distortion(
    joint: JointPmf, z_axis: int, est: EstimatorTable, d: DistortionTable
) -> float:
    """E d(Z, est(V)) under the joint, with V the non-z axes in order."""
    z_axis = _check_z_axis(joint, z_axis, d)
    m = np.moveaxis(joint.probs, z_axis, -1)  # (cond..., Z)
    if est.choice.shape != m.shape[:-1]:
        raise ValidationError(
            f"estimator shape {est.choice.shape} does not match conditioning shape {m.shape[:-1]}"
        )
    if est.card_shat != d.card_shat:
        raise ValidationError("estimator and distortion table disagree on reconstruction count")
    picked = d.d.T[est.choice]  # (cond..., Z)
    return float((m * picked).sum())


def optimal_expected_distortion(joint: JointPmf, z_axis: int, d: DistortionTable) -> float:
    """Expected distortion of the optimal estimator, without materializing it."""
    costs = _conditional_costs(joint, z_axis, d)
    return float(costs.min(axis=-1).sum())


def _conditional_costs(joint, z_axis, d):
    z_axis = _check_z_axis(joint, z_axis, d)
    m = np.moveaxis(joint.probs, z_axis, -1)  # (cond..., Z)
    return m @ d.d  # (cond..., Shat); unnormalized conditional costs


def _check_z_axis(joint, z_axis, d):
    z_axis = int(z_axis)
    if not 0 <= z_axis < joint.n_axes:
        raise ValidationError(f"z_axis {z_axis} out of range for {joint.n_axes} axes")
    if joint.dims[z_axis] != d.card_s:
        raise ValidationError(
            f"distortion table has {d.card_s} source symbols, joint axis has {joint.dims[z_axis]}"
        )
    return z_axis
