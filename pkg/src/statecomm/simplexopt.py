"""Small-scale maximization over probability simplices.

Rows are parameterized through a softmax so iterates stay strictly inside
the simplex; steps are plain gradient ascent with halving on objective
decrease.  Alphabets here are tiny, so finite-difference gradients and
dense grid scans are affordable and keep callers simple.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ValidationError


def softmax(theta: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the last axis."""
    t = theta - theta.max(axis=-1, keepdims=True)
    e = np.exp(t)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_chain(p: np.ndarray, grad_p: np.ndarray) -> np.ndarray:
    """Pull a gradient in pmf space back through the softmax, row-wise."""
    inner = (p * grad_p).sum(axis=-1, keepdims=True)
    return p * (grad_p - inner)


def simplex_grid(card: int, step: float):
    """All pmfs on [0, card) whose entries are multiples of ``step``."""
    k = round(1.0 / step)
    if abs(k * step - 1.0) > 1e-12:
        raise ValidationError(f"grid step {step} must divide 1 exactly")
    for counts in _compositions(k, card):
        yield np.asarray(counts, dtype=np.float64) / k


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def ascend(objective, theta0, *, max_iters=300, tol=1e-9, patience=25, step0=1.0):
    """Maximize ``objective(theta)`` by monotone gradient ascent.

    The gradient is finite-difference in theta space.  Convergence is
    declared when the objective improves by less than ``tol`` over
    ``patience`` consecutive iterations.  Returns (theta, value, converged).
    """
    theta = np.asarray(theta0, dtype=np.float64).copy()
    value = objective(theta)
    step = step0
    history = [value]
    h = 1e-6
    for _ in range(max_iters):
        grad = np.empty_like(theta)
        flat = theta.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            gflat[i] = (objective(theta) - value) / h
            flat[i] = old
        norm = np.linalg.norm(gflat)
        if norm == 0:
            break
        improved = False
        trial_step = step
        for _ in range(40):
            cand = theta + trial_step * grad
            cand_val = objective(cand)
            if cand_val > value:
                theta, value = cand, cand_val
                step = trial_step * 1.5
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            break
        history.append(value)
        if len(history) > patience and value - history[-patience - 1] < tol:
            return theta, value, True
    return theta, value, len(history) > 1


def maximize_over_pmf(fn, card, *, grid_step=0.05, max_iters=300):
    """Maximize a scalar function of a single pmf.

    Runs softmax ascent from the uniform pmf, refines with a coarse grid
    scan, then ascends again from the best grid point.  Intended for
    concave objectives (channel capacity style), where this is exact up
    to solver tolerance.  Returns (pmf, value).
    """
    if card == 1:
        p = np.array([1.0])
        return p, fn(p)

    def obj(theta):
        return fn(softmax(theta))

    theta, best_val, _ = ascend(obj, np.zeros(card), max_iters=max_iters)
    best_p = softmax(theta)
    if grid_step is not None and card <= 4:
        for p in simplex_grid(card, grid_step):
            v = fn(p)
            if v > best_val:
                best_val, best_p = v, p
        # polish from the best grid point (nudged inside the simplex)
        start = np.log(np.maximum(best_p, 1e-12))
        theta, val, _ = ascend(obj, start, max_iters=max_iters)
        if val > best_val:
            best_val, best_p = val, softmax(theta)
    return best_p, best_val
