"""Minimal dense linear algebra for the stream learners.

Everything here operates on plain float64 numpy arrays. The solvers are
deliberately small: a normal-equations least-squares solve with a damped
fallback for rank-deficient batches, a minimum-norm particular solution
for 2-equation systems, and vector normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Condition estimate of X'X above which the damped solve takes over.
CONDITION_LIMIT = 1e12


class LinalgError(ValueError):
    """Contract violation: bad shapes or non-finite input."""


class ZeroVectorError(LinalgError):
    """Normalization of a (near-)zero vector."""


class DegenerateSystemError(LinalgError):
    """The two equations handed to the min-norm solver are dependent."""


@dataclass(frozen=True)
class LeastSquaresFit:
    """Solution of min ||Xw - y||, with a flag when damping was applied."""

    weights: np.ndarray
    damped: bool


def as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise LinalgError(f"expected a 2-d matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise LinalgError("matrix contains non-finite entries")
    return x


def as_vector(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < 1:
        raise LinalgError(f"expected a 1-d vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise LinalgError("vector contains non-finite entries")
    return y


def solve_least_squares(x, y) -> LeastSquaresFit:
    """Least-squares weights for ``X w = y`` via the normal equations.

    The caller supplies the bias column. Well-conditioned systems go
    through a Cholesky solve of X'X; singular or badly conditioned ones
    (condition estimate beyond ``CONDITION_LIMIT``) fall back to the
    Tikhonov-damped solve (X'X + eps*I) w = X'y with
    eps = 1e-8 * trace(X'X) / D, and the result is flagged as damped.
    """
    xm = as_matrix(x)
    yv = as_vector(y)
    if xm.shape[0] != yv.shape[0]:
        raise LinalgError(
            f"row mismatch: X has {xm.shape[0]} rows, y has {yv.shape[0]}"
        )
    gram = xm.T @ xm
    rhs = xm.T @ yv
    cond = np.linalg.cond(gram)
    if np.isfinite(cond) and cond <= CONDITION_LIMIT:
        try:
            weights = cho_solve(cho_factor(gram, lower=True), rhs)
            return LeastSquaresFit(weights=weights, damped=False)
        except np.linalg.LinAlgError:
            pass
        except ValueError:
            pass
    return LeastSquaresFit(weights=_damped_solve(gram, rhs), damped=True)


def _damped_solve(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    d = gram.shape[0]
    eps = 1e-8 * float(np.trace(gram)) / d
    if eps <= 0.0:
        eps = 1e-12
    damped = gram + eps * np.eye(d)
    try:
        return cho_solve(cho_factor(damped, lower=True), rhs)
    except (np.linalg.LinAlgError, ValueError):
        # Last resort for pathologically scaled input.
        return np.linalg.solve(damped + 1e-12 * np.eye(d), rhs)


def min_norm_solution(a, b) -> np.ndarray:
    """Minimum-Euclidean-norm x with A x = b for a 2 x D system, D >= 2.

    Computed as A'(AA')^{-1} b with the 2x2 Gram system solved in closed
    form, so the result is deterministic. Dependent rows raise
    DegenerateSystemError.
    """
    am = as_matrix(a)
    bv = as_vector(b)
    if am.shape[0] != 2 or bv.shape[0] != 2:
        raise LinalgError("min_norm_solution expects a 2-row system")
    if am.shape[1] < 2:
        raise LinalgError("min_norm_solution expects at least 2 unknowns")
    g00 = float(am[0] @ am[0])
    g01 = float(am[0] @ am[1])
    g11 = float(am[1] @ am[1])
    det = g00 * g11 - g01 * g01
    row_norm_product = math.sqrt(g00) * math.sqrt(g11)
    if det <= 1e-12 * row_norm_product:
        raise DegenerateSystemError("rows are linearly dependent")
    z0 = (g11 * bv[0] - g01 * bv[1]) / det
    z1 = (g00 * bv[1] - g01 * bv[0]) / det
    return am[0] * z0 + am[1] * z1


def normalize(v) -> np.ndarray:
    """v / ||v||_2; raises ZeroVectorError when ||v|| <= 1e-12."""
    vv = as_vector(v)
    norm = float(np.linalg.norm(vv))
    if norm <= 1e-12:
        raise ZeroVectorError("cannot normalize a near-zero vector")
    return vv / norm
