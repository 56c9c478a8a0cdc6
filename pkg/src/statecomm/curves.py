"""Capacity-distortion curves: container, envelope construction, export.

A curve is a list of (distortion, rate) vertices sorted by distortion.
Every constructed curve is checked for the two structural obligations:
rates nondecreasing in D and concavity (each interior vertex on or above
the chord of its neighbors), both with 1e-9 slack.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

CURVE_TOL = 1e-9
CSV_HEADER = "D,C,lambda,restarts_used"


@dataclass(frozen=True, eq=False)
class CdCurve:
    """A capacity-distortion tradeoff curve with per-point provenance.

    ``lambdas[i]`` is the Lagrange multiplier that produced point i (NaN
    for closed-form curves), ``restarts[i]`` the restart budget used.
    """

    ds: np.ndarray
    cs: np.ndarray
    lambdas: np.ndarray
    restarts: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ds = np.asarray(self.ds, dtype=np.float64)
        cs = np.asarray(self.cs, dtype=np.float64)
        lam = np.asarray(self.lambdas, dtype=np.float64)
        res = np.asarray(self.restarts, dtype=np.int64)
        if not (ds.shape == cs.shape == lam.shape == res.shape) or ds.ndim != 1:
            raise ValidationError("curve arrays must be 1-d and of equal length")
        if ds.size == 0:
            raise ValidationError("curve must contain at least one point")
        if np.any(np.diff(ds) < 0):
            raise ValidationError("curve points must be sorted by D")
        if np.any(np.diff(cs) < -CURVE_TOL):
            raise ValidationError("curve rates must be nondecreasing in D")
        _check_concave(ds, cs)
        for name, arr in (("ds", ds), ("cs", cs), ("lambdas", lam), ("restarts", res)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.ds.size

    @property
    def points(self):
        return list(zip(self.ds.tolist(), self.cs.tolist()))

    def value_at(self, d: float) -> float:
        """Piecewise-linear rate at distortion d.

        Flat extension to the right of the last vertex; -inf to the left
        of the first (no design with that little distortion was found).
        """
        if d < self.ds[0] - CURVE_TOL:
            return float("-inf")
        return float(np.interp(d, self.ds, self.cs))

    def d_intercept(self, tol: float = 1e-6) -> float:
        """Smallest D on the curve with rate >= -tol (the D* point)."""
        cs, ds = self.cs, self.ds
        if cs[0] >= -tol:
            return float(ds[0])
        above = np.flatnonzero(cs >= -tol)
        if above.size == 0:
            raise ValidationError("curve never reaches nonnegative rate")
        i = int(above[0])
        d0, d1, c0, c1 = ds[i - 1], ds[i], cs[i - 1], cs[i]
        if c1 == c0:
            return float(d1)
        return float(d0 + (0.0 - c0) * (d1 - d0) / (c1 - c0))

    def sample(self, n: int):
        """(D, C) sampled at n evenly spaced distortions across the span."""
        grid = np.linspace(self.ds[0], self.ds[-1], n)
        return grid, np.interp(grid, self.ds, self.cs)

    def to_csv_text(self, manifest_name: str | None = None) -> str:
        lines = []
        if manifest_name is not None:
            lines.append(f"# manifest: {manifest_name}")
        lines.append(CSV_HEADER)
        for d, c, lam, r in zip(self.ds, self.cs, self.lambdas, self.restarts):
            lines.append(f"{_g(d)},{_g(c)},{_g(lam)},{int(r)}")
        return "\n".join(lines) + "\n"

    def to_json_obj(self, manifest_name: str | None = None) -> dict:
        return {
            "schema": "statecomm.cdcurve.v1",
            "manifest": manifest_name,
            "metadata": self.metadata,
            "points": [
                {"D": float(d), "C": float(c), "lambda": _json_num(lam), "restarts_used": int(r)}
                for d, c, lam, r in zip(self.ds, self.cs, self.lambdas, self.restarts)
            ],
        }

    def to_json_text(self, manifest_name: str | None = None) -> str:
        return json.dumps(self.to_json_obj(manifest_name), indent=2) + "\n"


def _g(v: float) -> str:
    return format(float(v), ".12g")


def _json_num(v: float):
    v = float(v)
    return "nan" if np.isnan(v) else v


def _check_concave(ds, cs):
    for i in range(1, len(ds) - 1):
        d0, d1, d2 = ds[i - 1], ds[i], ds[i + 1]
        if d2 == d0:
            continue
        chord = cs[i - 1] + (cs[i + 1] - cs[i - 1]) * (d1 - d0) / (d2 - d0)
        if cs[i] < chord - CURVE_TOL:
            raise ValidationError(
                f"curve not concave at D={d1}: rate {cs[i]} below chord {chord}"
            )


def upper_envelope(ds, cs, lambdas, restarts, metadata=None) -> CdCurve:
    """Nondecreasing concave majorant of a set of achievable (D, C) points.

    A design achieving (D, C) also meets every looser distortion budget,
    and time-sharing achieves convex combinations, so the frontier is the
    upper convex hull of the point set up to its rate peak, extended flat
    to the largest observed distortion.
    """
    ds = np.asarray(ds, dtype=np.float64)
    cs = np.asarray(cs, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    restarts = np.asarray(restarts, dtype=np.int64)
    if ds.size == 0:
        raise ValidationError("cannot build an envelope from zero points")
    order = np.lexsort((-cs, ds))
    pts = [(ds[i], cs[i], lambdas[i], restarts[i]) for i in order]
    # keep only the best rate per distortion, clustering near-identical D
    dedup = []
    scale = max(abs(pts[0][0]), abs(pts[-1][0]), 1.0)
    for p in pts:
        if dedup and p[0] - dedup[-1][0] <= 1e-11 * scale:
            continue
        dedup.append(p)
    hull = []
    for p in dedup:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    # truncate after the rate peak and extend flat to the max distortion seen
    peak = max(range(len(hull)), key=lambda i: hull[i][1])
    verts = hull[: peak + 1]
    d_max = dedup[-1][0]
    if d_max > verts[-1][0] + 1e-15:
        verts.append((d_max, verts[-1][1], verts[-1][2], verts[-1][3]))
    return CdCurve(
        np.array([v[0] for v in verts]),
        np.array([v[1] for v in verts]),
        np.array([v[2] for v in verts]),
        np.array([v[3] for v in verts]),
        dict(metadata or {}),
    )


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
