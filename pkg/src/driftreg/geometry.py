"""Geometry of regression hyperplanes in joint feature-target space.

A fitted linear model ``y = b + w . x`` is treated as the hyperplane
``b + w . x - y = 0`` in the (M+1)-dimensional space whose axes are the
M features plus the target. Its normal is the fixed-orientation vector
``(w, -1)``; keeping -1 on the target axis means the normals of any two
regression surfaces start in the same half-space, which makes blending
them well-defined without a sign-alignment pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .linalg import DegenerateSystemError, min_norm_solution, normalize

COINCIDE_TOL = 1e-9
PARALLEL_TOL = 1e-9
VERTICAL_TOL = 1e-9


class GeometryError(ValueError):
    """Contract violation in a hyperplane operation."""


class VerticalHyperplaneError(GeometryError):
    """The surface has no target-axis component and is not a function of x."""


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Regression model ``y = intercept + coeffs . x``."""

    intercept: float
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))
        if coeffs.ndim != 1 or coeffs.shape[0] < 1:
            raise GeometryError("coeffs must be a 1-d vector of length >= 1")
        if not (np.isfinite(self.intercept) and np.all(np.isfinite(coeffs))):
            raise GeometryError("hyperplane parameters must be finite")
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def num_features(self) -> int:
        return self.coeffs.shape[0]

    def predict(self, x) -> np.ndarray:
        xm = np.asarray(x, dtype=np.float64)
        return self.intercept + xm @ self.coeffs

    def point_on(self, features=None) -> np.ndarray:
        """A joint-space point on the surface (features default to zero)."""
        if features is None:
            features = np.zeros(self.num_features)
        features = np.asarray(features, dtype=np.float64)
        return np.append(features, self.intercept + features @ self.coeffs)


class IntersectKind(Enum):
    POINT = "point"
    COINCIDENT = "coincident"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class IntersectOutcome:
    kind: IntersectKind
    point: np.ndarray | None = field(default=None)


def norm_vector(h: Hyperplane) -> np.ndarray:
    """Normal (w1, ..., wM, -1) of the surface in joint space."""
    return np.append(h.coeffs, -1.0)


def augmented_vector(h: Hyperplane) -> np.ndarray:
    """Full equation coefficients (w0, w1, ..., wM, -1)."""
    return np.concatenate(([h.intercept], h.coeffs, [-1.0]))


def _check_same_dim(h1: Hyperplane, h2: Hyperplane) -> None:
    if h1.num_features != h2.num_features:
        raise GeometryError(
            f"feature-count mismatch: {h1.num_features} vs {h2.num_features}"
        )


def coincide(h1: Hyperplane, h2: Hyperplane, rel_tol: float = COINCIDE_TOL) -> bool:
    """True iff both full equations describe the same point set.

    The augmented coefficient vectors (intercept included) are unit
    normalized, sign aligned, and compared entrywise. Proportional slopes
    with different intercepts are therefore *not* coincident.
    """
    _check_same_dim(h1, h2)
    a1 = normalize(augmented_vector(h1))
    a2 = normalize(augmented_vector(h2))
    if float(a1 @ a2) < 0.0:
        a2 = -a2
    return float(np.max(np.abs(a1 - a2))) <= rel_tol


def _directions_parallel(h1: Hyperplane, h2: Hyperplane) -> bool:
    d1 = normalize(norm_vector(h1))
    d2 = normalize(norm_vector(h2))
    if float(d1 @ d2) < 0.0:
        d2 = -d2
    return float(np.max(np.abs(d1 - d2))) <= PARALLEL_TOL


def intersect(h1: Hyperplane, h2: Hyperplane) -> IntersectOutcome:
    """Where two regression surfaces meet.

    Returns Coincident / Parallel variants for the degenerate layouts;
    otherwise a single point on the (M-1)-dimensional intersection, chosen
    as the minimum-norm solution of the joint 2 x (M+1) system so the
    result is deterministic and basis independent.
    """
    _check_same_dim(h1, h2)
    if coincide(h1, h2):
        return IntersectOutcome(IntersectKind.COINCIDENT)
    if _directions_parallel(h1, h2):
        return IntersectOutcome(IntersectKind.PARALLEL)
    system = np.vstack([norm_vector(h1), norm_vector(h2)])
    rhs = np.array([-h1.intercept, -h2.intercept])
    try:
        point = min_norm_solution(system, rhs)
    except DegenerateSystemError:
        # Numerically indistinguishable from parallel.
        return IntersectOutcome(IntersectKind.PARALLEL)
    return IntersectOutcome(IntersectKind.POINT, point)


def weighted_midpoint(h1: Hyperplane, h2: Hyperplane, alpha: float) -> np.ndarray:
    """Blend point between two parallel surfaces.

    Uses the canonical intercept points (all features zero): returns
    (1-alpha) * P1 + alpha * P2, so alpha = 0.5 is the exact midpoint and
    larger alpha moves toward h2. Any common feature coordinate would
    yield the same redefined hyperplane, since parallel surfaces differ
    only in offset.
    """
    _check_same_dim(h1, h2)
    if not 0.0 < alpha <= 1.0:
        raise GeometryError("alpha must lie in (0, 1]")
    if not _directions_parallel(h1, h2):
        raise GeometryError("weighted_midpoint requires parallel hyperplanes")
    point = np.zeros(h1.num_features + 1)
    point[-1] = (1.0 - alpha) * h1.intercept + alpha * h2.intercept
    return point


def from_normal_and_point(n, point) -> Hyperplane:
    """Rebuild the regression model from a normal and an on-surface point.

    Solving n . (q - p) = 0 for the target coordinate gives
    coeffs[i] = -n[i] / n[-1] and intercept = p_target - coeffs . p_features.
    A normal with (near-)zero target component cannot be written as a
    function of x and raises VerticalHyperplaneError.
    """
    nv = np.asarray(n, dtype=np.float64)
    pv = np.asarray(point, dtype=np.float64)
    if nv.ndim != 1 or nv.shape[0] < 2:
        raise GeometryError("normal must have length >= 2")
    if pv.shape != nv.shape:
        raise GeometryError("point and normal must have equal length")
    target_component = float(nv[-1])
    if abs(target_component) <= VERTICAL_TOL * float(np.linalg.norm(nv)):
        raise VerticalHyperplaneError(
            "normal has no target-axis component; surface is vertical"
        )
    coeffs = -nv[:-1] / target_component
    intercept = float(pv[-1]) - float(coeffs @ pv[:-1])
    return Hyperplane(intercept=intercept, coeffs=coeffs)
