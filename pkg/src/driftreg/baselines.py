"""Classic online regressors behind a single mini-batch interface.

Every learner starts from all-zero weights, consumes mini-batches through
``observe`` (per-sample learners iterate the rows internally, in order),
predicts with ``predict``, and exposes ``weights()``. A non-finite weight
raises DivergenceError so the harness can record the cell as diverged
instead of crashing.

Strict-streaming learners retain nothing between ``observe`` calls. The
gradient-descent family is single-pass too at this level; re-streaming
retained data for multi-epoch protocols is the harness's job (see
ReplayBuffer and the runner).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .linalg import LinalgError, as_matrix, as_vector, solve_least_squares

SCHEMA_VERSION = 1

RLS_ASYMMETRY_WARN = 1e-6


class DivergenceError(RuntimeError):
    """A learner produced non-finite weights."""


class ReplayMode(Enum):
    STRICT_STREAMING = "strict_streaming"
    REPLAY = "replay"


class ReplayBuffer:
    """Holds the seen stream for multi-epoch learners.

    In strict-streaming mode nothing is retained and replaying yields an
    empty dataset; the memory cost of a strict learner is therefore its
    weight state alone, regardless of stream length.
    """

    def __init__(self, mode: ReplayMode):
        self.mode = mode
        self._x_parts: list[np.ndarray] = []
        self._y_parts: list[np.ndarray] = []

    def add(self, x: np.ndarray, y: np.ndarray) -> None:
        if self.mode is ReplayMode.STRICT_STREAMING:
            return
        self._x_parts.append(np.array(x, dtype=np.float64))
        self._y_parts.append(np.array(y, dtype=np.float64))

    def __len__(self) -> int:
        return sum(part.shape[0] for part in self._y_parts)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._y_parts:
            return np.empty((0, 0)), np.empty(0)
        return np.vstack(self._x_parts), np.concatenate(self._y_parts)


class OnlineRegressor:
    """Shared state and plumbing for the baseline learners."""

    name = "online"
    strict_streaming = True

    def __init__(self, num_features: int):
        if num_features < 1:
            raise ValueError("num_features must be >= 1")
        self.num_features = int(num_features)
        # Bias-augmented weight vector, w[0] is the intercept.
        self.w = np.zeros(num_features + 1)
        self.samples_seen = 0

    def _batch(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        xm = as_matrix(x)
        yv = as_vector(y)
        if xm.shape[1] != self.num_features:
            raise LinalgError(
                f"batch has {xm.shape[1]} features, model expects {self.num_features}"
            )
        if xm.shape[0] != yv.shape[0]:
            raise LinalgError("feature rows and targets differ in length")
        xb = np.ascontiguousarray(
            np.column_stack([np.ones(xm.shape[0]), xm])
        )
        return xb, np.ascontiguousarray(yv)

    def observe(self, x, y) -> None:
        raise NotImplementedError

    def predict(self, x) -> np.ndarray:
        xm = as_matrix(x)
        return self.w[0] + xm @ self.w[1:]

    def weights(self) -> tuple[float, np.ndarray]:
        return float(self.w[0]), self.w[1:].copy()

    def state_scalar_count(self) -> int:
        return self.w.size

    def hyperparameters(self) -> dict:
        return {}

    def _raise_divergence(self) -> None:
        raise DivergenceError(f"{self.name} produced non-finite weights")

    def snapshot_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "algorithm": self.name,
            "hyperparameters": self.hyperparameters(),
            "num_features": self.num_features,
            "intercept": float(self.w[0]),
            "coeffs": self.w[1:].tolist(),
            "samples_seen": self.samples_seen,
        }
        return json.dumps(doc, sort_keys=True)


class _GradientDescentBase(OnlineRegressor):
    penalty = _kernels.PENALTY_NONE
    lam = 0.0

    def __init__(self, num_features: int, eta: float = 0.01):
        super().__init__(num_features)
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.eta = float(eta)

    def observe(self, x, y) -> None:
        xb, yv = self._batch(x, y)
        status = _kernels.gd_pass(xb, yv, self.w, self.eta, self.lam, self.penalty)
        self.samples_seen += yv.shape[0]
        if status:
            self._raise_divergence()

    def hyperparameters(self) -> dict:
        return {"eta": self.eta}


class SgdRegressor(_GradientDescentBase):
    """Per-sample squared-loss gradient descent; harness may replay epochs."""

    name = "sgd"
    strict_streaming = False


class LmsRegressor(_GradientDescentBase):
    """Same update rule as SGD but contractually single-pass streaming."""

    name = "lms"
    strict_streaming = True


class MbgdRegressor(OnlineRegressor):
    """Mini-batch gradient descent: one averaged-gradient step per batch."""

    name = "mbgd"
    strict_streaming = False

    def __init__(self, num_features: int, eta: float = 0.01):
        super().__init__(num_features)
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.eta = float(eta)

    def observe(self, x, y) -> None:
        xb, yv = self._batch(x, y)
        k = yv.shape[0]
        grad = xb.T @ (xb @ self.w - yv) / k
        self.w -= self.eta * grad
        self.samples_seen += k
        if not np.all(np.isfinite(self.w)):
            self._raise_divergence()

    def hyperparameters(self) -> dict:
        return {"eta": self.eta}


class RidgeRegressor(_GradientDescentBase):
    """SGD with an L2 penalty folded into each step; bias unregularized."""

    name = "ridge"
    strict_streaming = False
    penalty = _kernels.PENALTY_L2

    def __init__(self, num_features: int, eta: float = 0.01, lam: float = 0.1):
        super().__init__(num_features, eta)
        if lam < 0.0:
            raise ValueError("lam must be non-negative")
        self.lam = float(lam)

    def hyperparameters(self) -> dict:
        return {"eta": self.eta, "lam": self.lam}


class LassoRegressor(_GradientDescentBase):
    """SGD with an L1 subgradient penalty (sign(0) = 0); bias unregularized."""

    name = "lasso"
    strict_streaming = False
    penalty = _kernels.PENALTY_L1

    def __init__(self, num_features: int, eta: float = 0.01, lam: float = 0.1):
        super().__init__(num_features, eta)
        if lam < 0.0:
            raise ValueError("lam must be non-negative")
        self.lam = float(lam)

    def hyperparameters(self) -> dict:
        return {"eta": self.eta, "lam": self.lam}


class RlsRegressor(OnlineRegressor):
    """Exponentially weighted recursive least squares.

    With lam = 1 and a large initial gain (small delta) the recursion
    reproduces batch least squares on everything seen so far.
    """

    name = "rls"
    strict_streaming = True

    def __init__(self, num_features: int, lam: float = 0.99, delta: float = 0.01):
        super().__init__(num_features)
        if not 0.0 < lam <= 1.0:
            raise ValueError("lam must lie in (0, 1]")
        if delta <= 0.0:
            raise ValueError("delta must be positive")
        self.lam = float(lam)
        self.delta = float(delta)
        self.p = np.eye(num_features + 1) / self.delta

    def observe(self, x, y) -> None:
        xb, yv = self._batch(x, y)
        status, max_asym = _kernels.rls_pass(xb, yv, self.w, self.p, self.lam)
        self.samples_seen += yv.shape[0]
        if max_asym > RLS_ASYMMETRY_WARN:
            warnings.warn(
                f"rls inverse-correlation matrix lost symmetry ({max_asym:.2e}); "
                "resymmetrized",
                RuntimeWarning,
                stacklevel=2,
            )
        if status:
            self._raise_divergence()

    def state_scalar_count(self) -> int:
        return self.w.size + self.p.size

    def hyperparameters(self) -> dict:
        return {"lam": self.lam, "delta": self.delta}


class PaRegressor(OnlineRegressor):
    """Passive-aggressive regression with the eps-insensitive loss."""

    name = "pa"
    strict_streaming = True

    VARIANTS = {
        "pa": _kernels.PA_UNCLIPPED,
        "pa1": _kernels.PA_CLIPPED,
        "pa2": _kernels.PA_SOFT,
    }

    def __init__(
        self,
        num_features: int,
        c: float = 0.01,
        eps: float = 0.01,
        variant: str = "pa",
    ):
        super().__init__(num_features)
        if c <= 0.0:
            raise ValueError("c must be positive")
        if eps < 0.0:
            raise ValueError("eps must be non-negative")
        if variant not in self.VARIANTS:
            raise ValueError(f"variant must be one of {sorted(self.VARIANTS)}")
        self.c = float(c)
        self.eps = float(eps)
        self.variant = variant
        self.name = variant

    def observe(self, x, y) -> None:
        xb, yv = self._batch(x, y)
        status = _kernels.pa_pass(
            xb, yv, self.w, self.c, self.eps, self.VARIANTS[self.variant]
        )
        self.samples_seen += yv.shape[0]
        if status:
            self._raise_divergence()

    def hyperparameters(self) -> dict:
        return {"c": self.c, "eps": self.eps, "variant": self.variant}


class BatchRegressor(OnlineRegressor):
    """Offline least squares over everything seen; the benchmark reference."""

    name = "batch"
    strict_streaming = False

    def __init__(self, num_features: int):
        super().__init__(num_features)
        self._buffer = ReplayBuffer(ReplayMode.REPLAY)
        self._fitted = False

    def observe(self, x, y) -> None:
        xm = as_matrix(x)
        yv = as_vector(y)
        self._buffer.add(xm, yv)
        self.samples_seen += yv.shape[0]
        self._fitted = False

    def finalize(self) -> None:
        xm, yv = self._buffer.arrays()
        if yv.size == 0:
            raise RuntimeError("batch model has seen no data")
        xb = np.column_stack([np.ones(xm.shape[0]), xm])
        self.w = solve_least_squares(xb, yv).weights
        self._fitted = True

    def predict(self, x) -> np.ndarray:
        if not self._fitted and len(self._buffer) > 0:
            self.finalize()
        return super().predict(x)


@dataclass(frozen=True)
class AlgorithmInfo:
    name: str
    factory: object
    strict_streaming: bool
    defaults: dict = field(default_factory=dict)


def _pa_factory(variant: str):
    def build(num_features: int, c: float = 0.01, eps: float = 0.01):
        return PaRegressor(num_features, c=c, eps=eps, variant=variant)

    return build


# "pa3" is accepted as a harness name and maps onto the soft variant.
BASELINE_ALGORITHMS: dict[str, AlgorithmInfo] = {
    "sgd": AlgorithmInfo("sgd", SgdRegressor, False, {"eta": 0.01}),
    "mbgd": AlgorithmInfo("mbgd", MbgdRegressor, False, {"eta": 0.01}),
    "lms": AlgorithmInfo("lms", LmsRegressor, True, {"eta": 0.01}),
    "rls": AlgorithmInfo("rls", RlsRegressor, True, {"lam": 0.99, "delta": 0.01}),
    "ridge": AlgorithmInfo("ridge", RidgeRegressor, False, {"eta": 0.01, "lam": 0.1}),
    "lasso": AlgorithmInfo("lasso", LassoRegressor, False, {"eta": 0.01, "lam": 0.1}),
    "pa": AlgorithmInfo("pa", _pa_factory("pa"), True, {"c": 0.01, "eps": 0.01}),
    "pa1": AlgorithmInfo("pa1", _pa_factory("pa1"), True, {"c": 0.01, "eps": 0.01}),
    "pa2": AlgorithmInfo("pa2", _pa_factory("pa2"), True, {"c": 0.01, "eps": 0.01}),
    "pa3": AlgorithmInfo("pa3", _pa_factory("pa2"), True, {"c": 0.01, "eps": 0.01}),
    "batch": AlgorithmInfo("batch", BatchRegressor, False, {}),
}
