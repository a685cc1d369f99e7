"""Online regression by exponentially weighted blending of hyperplane normals.

The learner keeps one base hyperplane. Each mini-batch is fitted with a
damped least-squares solve, both surfaces' unit normals are blended as

    v_avg = (1 - alpha) * v_base + alpha * v_inc

and the base model is redefined as the hyperplane with normal ``v_avg``
through the intersection point of the two surfaces (or through a weighted
midpoint when they are parallel). With alpha = 1 the step reduces to
replacing the base with the incremental fit; small alpha barely moves it.
``v_avg`` is intentionally not renormalized: the redefined hyperplane is
scale invariant in its normal, and the raw blend is what the adaptive
variant reuses when it re-adjusts a step.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import geometry
from .geometry import Hyperplane, IntersectKind, VerticalHyperplaneError
from .linalg import LinalgError, as_matrix, as_vector, normalize, solve_least_squares

SCHEMA_VERSION = 1


class StepOutcome(Enum):
    UPDATED = "updated"
    SKIPPED_COINCIDENT = "skipped_coincident"
    SKIPPED_DEGENERATE = "skipped_degenerate"
    PARALLEL_MIDPOINT = "parallel_midpoint"


@dataclass(frozen=True)
class StepTrace:
    """Short-lived record of one update step.

    ``v_base`` / ``v_inc`` are the unit normals that entered the blend;
    ``v_avg`` and ``p_int`` are None when the step was skipped. The trace
    is returned to the caller and never retained by the model.
    """

    outcome: StepOutcome
    v_base: np.ndarray
    v_inc: np.ndarray
    inc_model: Hyperplane
    v_avg: np.ndarray | None = None
    p_int: np.ndarray | None = None


def blend_normals(v_base: np.ndarray, v_inc: np.ndarray, alpha: float) -> np.ndarray:
    """The weighted-average combination rule for two normals."""
    return (1.0 - alpha) * v_base + alpha * v_inc


def suggested_base_rows(
    num_features: int, train_size: int | None = None, fraction: float = 0.1
) -> int:
    """Rows to spend on the initial base fit.

    With a known training size the base takes a fraction of it (default a
    tenth); for unbounded streams, where no size exists, fall back to ten
    rows per feature.
    """
    if train_size is None:
        return 10 * num_features
    return max(1, int(round(fraction * train_size)))


def fit_hyperplane(x, y) -> Hyperplane:
    """Least-squares hyperplane of one mini-batch (bias column added here)."""
    xm = as_matrix(x)
    yv = as_vector(y)
    xb = np.column_stack([np.ones(xm.shape[0]), xm])
    fit = solve_least_squares(xb, yv)
    return Hyperplane(intercept=float(fit.weights[0]), coeffs=fit.weights[1:])


class AveragingRegressor:
    """Single-writer online learner; one instance per training stream."""

    def __init__(self, num_features: int, alpha: float = 0.5):
        if num_features < 1:
            raise ValueError("num_features must be >= 1")
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        self.num_features = int(num_features)
        self.alpha = float(alpha)
        self.updates_applied = 0
        self._base: Hyperplane | None = None

    @property
    def initialized(self) -> bool:
        return self._base is not None

    @property
    def base(self) -> Hyperplane:
        if self._base is None:
            raise RuntimeError("model is not initialized; call init_base first")
        return self._base

    def _check_batch(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        xm = as_matrix(x)
        yv = as_vector(y)
        if xm.shape[1] != self.num_features:
            raise LinalgError(
                f"batch has {xm.shape[1]} features, model expects {self.num_features}"
            )
        if xm.shape[0] != yv.shape[0]:
            raise LinalgError("feature rows and targets differ in length")
        return xm, yv

    def init_base(self, x, y) -> None:
        """Fit the base hyperplane on the first mini-batch."""
        if self.initialized:
            raise RuntimeError("base model already initialized")
        xm, yv = self._check_batch(x, y)
        self._base = fit_hyperplane(xm, yv)

    def partial_fit(self, x, y) -> StepTrace:
        """Consume one mini-batch and return the full step trace."""
        base = self.base
        xm, yv = self._check_batch(x, y)
        inc = fit_hyperplane(xm, yv)
        v_base = normalize(geometry.norm_vector(base))
        v_inc = normalize(geometry.norm_vector(inc))

        crossing = geometry.intersect(base, inc)
        if crossing.kind is IntersectKind.COINCIDENT:
            return StepTrace(StepOutcome.SKIPPED_COINCIDENT, v_base, v_inc, inc)
        if crossing.kind is IntersectKind.PARALLEL:
            p_int = geometry.weighted_midpoint(base, inc, self.alpha)
            outcome = StepOutcome.PARALLEL_MIDPOINT
        else:
            p_int = crossing.point
            outcome = StepOutcome.UPDATED

        v_avg = blend_normals(v_base, v_inc, self.alpha)
        try:
            new_base = geometry.from_normal_and_point(v_avg, p_int)
        except VerticalHyperplaneError:
            return StepTrace(
                StepOutcome.SKIPPED_DEGENERATE, v_base, v_inc, inc, v_avg, p_int
            )
        self._base = new_base
        self.updates_applied += 1
        return StepTrace(outcome, v_base, v_inc, inc, v_avg, p_int)

    def readjust(self, normal: np.ndarray, point: np.ndarray) -> None:
        """Redefine the base through ``point`` with a replacement normal.

        Used by the adaptive variant to re-run the current step's blend
        with an inferred weighting factor; the step's intersection point
        is kept.
        """
        self._base = geometry.from_normal_and_point(normal, point)

    def predict(self, x) -> np.ndarray:
        xm = as_matrix(x)
        if xm.shape[1] != self.num_features:
            raise LinalgError(
                f"batch has {xm.shape[1]} features, model expects {self.num_features}"
            )
        return self.base.predict(xm)

    def weights(self) -> tuple[float, np.ndarray]:
        base = self.base
        return base.intercept, base.coeffs.copy()

    def persistent_scalar_count(self) -> int:
        """Float scalars retained across steps: M+1 weights plus alpha."""
        return self.num_features + 2

    def to_json(self) -> str:
        base = self.base
        doc = {
            "schema_version": SCHEMA_VERSION,
            "num_features": self.num_features,
            "alpha": self.alpha,
            "intercept": base.intercept,
            "coeffs": base.coeffs.tolist(),
            "updates_applied": self.updates_applied,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, payload: str) -> "AveragingRegressor":
        doc = json.loads(payload)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {doc.get('schema_version')}")
        model = cls(num_features=doc["num_features"], alpha=doc["alpha"])
        model._base = Hyperplane(
            intercept=doc["intercept"], coeffs=np.asarray(doc["coeffs"])
        )
        model.updates_applied = int(doc["updates_applied"])
        return model
