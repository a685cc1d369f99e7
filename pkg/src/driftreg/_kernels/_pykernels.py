"""Pure-Python (numpy) implementations of the per-sample update loops.

These mirror the compiled kernels operation for operation; they are the
fallback selected at import when the extension is unavailable, and the
reference the extension is tested against. All functions update ``w``
(and ``p``) in place and return 0 on success, 1 when a non-finite weight
is produced.
"""
from __future__ import annotations

import numpy as np

PENALTY_NONE = 0
PENALTY_L1 = 1
PENALTY_L2 = 2

PA_UNCLIPPED = 0
PA_CLIPPED = 1
PA_SOFT = 2


def gd_pass(xb, y, w, eta, lam, penalty):
    """One in-order pass of per-sample squared-loss gradient steps.

    Rows of ``xb`` are bias-augmented. The gradient convention is
    d/dw 0.5*(w.x - y)^2 = (w.x - y) x. The bias weight is never
    regularized; ``lam == 0`` takes the exact unregularized path.
    """
    n = xb.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):
        return _gd_pass_inner(xb, y, w, eta, lam, penalty, n)


def _gd_pass_inner(xb, y, w, eta, lam, penalty, n):
    if lam == 0.0 or penalty == PENALTY_NONE:
        for i in range(n):
            row = xb[i]
            err = float(row @ w) - y[i]
            w -= eta * err * row
    elif penalty == PENALTY_L2:
        for i in range(n):
            row = xb[i]
            err = float(row @ w) - y[i]
            grad = err * row
            grad[1:] += lam * w[1:]
            w -= eta * grad
    elif penalty == PENALTY_L1:
        for i in range(n):
            row = xb[i]
            err = float(row @ w) - y[i]
            grad = err * row
            grad[1:] += lam * np.sign(w[1:])
            w -= eta * grad
    else:
        raise ValueError(f"unknown penalty code {penalty}")
    return 0 if np.all(np.isfinite(w)) else 1


def pa_pass(xb, y, w, c, eps, variant):
    """One in-order pass of passive-aggressive updates.

    Loss is the eps-insensitive residual max(0, |w.x - y| - eps); zero
    loss leaves the weights untouched. The step size is the loss over the
    squared row norm, clipped at ``c`` for the clipped variant or softened
    by 1/(2c) in the denominator for the soft variant.
    """
    n = xb.shape[0]
    for i in range(n):
        row = xb[i]
        err = y[i] - float(row @ w)
        loss = abs(err) - eps
        if loss <= 0.0:
            continue
        sq = float(row @ row)
        if variant == PA_UNCLIPPED:
            tau = loss / sq
        elif variant == PA_CLIPPED:
            tau = min(c, loss / sq)
        elif variant == PA_SOFT:
            tau = loss / (sq + 1.0 / (2.0 * c))
        else:
            raise ValueError(f"unknown passive-aggressive variant {variant}")
        if err < 0.0:
            tau = -tau
        w += tau * row
    return 0 if np.all(np.isfinite(w)) else 1


def rls_pass(xb, y, w, p, lam):
    """One in-order pass of recursive least squares with forgetting.

    ``p`` is the inverse-correlation matrix, resymmetrized after every row
    to damp round-off drift. Returns (status, max_asymmetry) where the
    second value is the largest absolute asymmetry observed before
    resymmetrization.
    """
    n = xb.shape[0]
    max_asym = 0.0
    for i in range(n):
        row = xb[i]
        pv = p @ row
        denom = lam + float(row @ pv)
        gain = pv / denom
        err = y[i] - float(row @ w)
        w += gain * err
        p -= np.outer(gain, pv)
        p /= lam
        asym = float(np.max(np.abs(p - p.T)))
        if asym > max_asym:
            max_asym = asym
        p += p.T
        p *= 0.5
    status = 0 if np.all(np.isfinite(w)) and np.all(np.isfinite(p)) else 1
    return status, max_asym
