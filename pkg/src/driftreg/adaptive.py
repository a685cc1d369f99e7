"""Drift-adaptive wrapper around the averaging learner.

After every mini-batch step the updated model is scored on the batch it
just consumed, and the score is appended to a bounded FIFO of KPI bags.
All entries but the newest form the baseline statistics; a dynamic
threshold ``tau = z * sigma`` around the baseline mean decides whether the
newest score marks a drift. On detection the step is re-run with a
weighting factor read off a scale map built from the drift magnitude, the
offending KPI entry is dropped, and the re-adjusted model's score takes
its place. The persistent weighting factor never changes; the inferred
one applies to the triggering step only.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .averaging import AveragingRegressor, StepOutcome, StepTrace, blend_normals
from .metrics import evaluate

WINDOW_LOWER_BOUND = 11
WINDOW_UPPER_BOUND = 31
WINDOW_DELTA = 0.05
SCALE_MAP_REGIONS = 10

# Scale-map anchors. Time-based adaptation escalates from the default
# weighting toward full replacement; confidence-based adaptation mirrors
# this and retreats toward a near-frozen model.
TIME_ALPHA_FLOOR = 0.5
CONFIDENCE_ALPHA_CEILING = 0.5
CONFIDENCE_ALPHA_MIN = 0.005


class WarmUpError(RuntimeError):
    """The window does not yet hold enough entries for baseline statistics."""


class AdaptationMode(Enum):
    TIME_BASED = "time_based"
    CONFIDENCE_BASED = "confidence_based"


class Severity(Enum):
    NONE = "none"
    INCREMENTAL = "incremental"
    ABRUPT = "abrupt"


# KPI direction registry: True when larger values are better.
KPI_HIGHER_IS_BETTER = {"r2": True, "mse": False}


def window_capacity(n_recent: int, k: int, delta: float = WINDOW_DELTA) -> int:
    """Window size (n_recent / k) * delta, rounded half up, clamped to [11, 31]."""
    if k < 1 or n_recent < k:
        raise ValueError("need n_recent >= k >= 1")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    raw = (n_recent / k) * delta
    rounded = math.floor(raw + 0.5)
    return max(WINDOW_LOWER_BOUND, min(WINDOW_UPPER_BOUND, rounded))


@dataclass(frozen=True)
class KpiBag:
    r2: float
    mse: float
    batch_index: int
    r2_defined: bool = True

    def value(self, selector: str) -> float:
        if selector not in KPI_HIGHER_IS_BETTER:
            raise ValueError(f"unknown KPI selector {selector!r}")
        return getattr(self, selector)


class KpiWindow:
    """Bounded FIFO of per-batch KPI bags; the newest entry is transient."""

    def __init__(self, capacity: int):
        if not WINDOW_LOWER_BOUND <= capacity <= WINDOW_UPPER_BOUND:
            raise ValueError(
                f"capacity must lie in [{WINDOW_LOWER_BOUND}, {WINDOW_UPPER_BOUND}]"
            )
        self.capacity = int(capacity)
        self._entries: deque[KpiBag] = deque(maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def full(self) -> bool:
        return len(self._entries) == self.capacity

    def append(self, bag: KpiBag) -> None:
        self._entries.append(bag)

    def remove_current(self) -> KpiBag:
        return self._entries.pop()

    def current(self) -> KpiBag:
        return self._entries[-1]

    def baseline(self) -> list[KpiBag]:
        """All entries except the newest."""
        return list(self._entries)[:-1]


def compute_kpis(model, x, y, batch_index: int = 0) -> KpiBag:
    """Score a fitted model on the batch it just consumed.

    An undefined coefficient of determination (fewer than two samples or
    zero target variance) is recorded as a flagged 0.
    """
    report = evaluate(y, model.predict(x))
    return KpiBag(
        r2=report.r2,
        mse=report.mse,
        batch_index=batch_index,
        r2_defined=report.r2_defined,
    )


@dataclass(frozen=True)
class BandStats:
    mu: float
    sigma: float
    tau: float
    low: float
    high: float


def band_stats(values, z: float) -> BandStats:
    """Mean, population std, and the z-sigma band of baseline KPI values."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size < 1:
        raise ValueError("band_stats needs at least one value")
    mu = float(arr.mean())
    sigma = float(arr.std())
    tau = z * sigma
    return BandStats(mu=mu, sigma=sigma, tau=tau, low=mu - tau, high=mu + tau)


def measure(window: KpiWindow, z: float, selector: str = "r2") -> BandStats:
    """Baseline band of a window; the newest entry is excluded because it
    is the measurement under test."""
    if len(window) < WINDOW_LOWER_BOUND:
        raise WarmUpError(
            f"window holds {len(window)} entries; needs {WINDOW_LOWER_BOUND}"
        )
    return band_stats([bag.value(selector) for bag in window.baseline()], z)


def drift_magnitude(mu: float, current: float) -> float:
    """Baseline mean minus current KPI; the sign carries the direction."""
    return mu - current


def detect_drift(
    mu: float, current: float, tau: float, higher_is_better: bool = True
) -> bool:
    """One-sided detection: only degradation beyond the band is drift.

    Improvement is never treated as drift; correcting for it would undo
    good updates.
    """
    if tau < 0.0:
        raise ValueError("tau must be non-negative")
    if higher_is_better:
        return current < mu - tau
    return current > mu + tau


def classify_severity(
    mu: float, current: float, tau: float, higher_is_better: bool = True
) -> Severity:
    """Minor degradation inside the band is incremental; beyond it, abrupt."""
    dm = drift_magnitude(mu, current)
    mag = dm if higher_is_better else -dm
    if mag <= 0.0:
        return Severity.NONE
    if mag > tau:
        return Severity.ABRUPT
    return Severity.INCREMENTAL


class ScaleMap:
    """Equal-width KPI regions between the baseline mean and the band limit.

    Region index 0 sits at the mean, region ``regions`` at the limit, and
    one overflow region lies beyond it for abrupt deviations. Each index
    maps to a weighting factor: time-based maps escalate linearly from the
    floor to 1, confidence-based maps descend from the ceiling to the
    minimum. Deeper degradation therefore never yields a milder response.
    """

    def __init__(
        self,
        mu: float,
        low: float,
        high: float,
        mode: AdaptationMode = AdaptationMode.TIME_BASED,
        higher_is_better: bool = True,
        regions: int = SCALE_MAP_REGIONS,
    ):
        if not low <= mu <= high:
            raise ValueError("need low <= mu <= high")
        if regions < 1:
            raise ValueError("regions must be >= 1")
        self.mu = float(mu)
        self.low = float(low)
        self.high = float(high)
        self.mode = mode
        self.higher_is_better = bool(higher_is_better)
        self.regions = int(regions)
        self.band_width = self.mu - self.low if higher_is_better else self.high - self.mu

    def region_of(self, dm: float) -> int:
        """Region index for a drift magnitude; regions+1 marks overflow."""
        mag = dm if self.higher_is_better else -dm
        if mag <= 0.0:
            return 0
        if self.band_width <= 0.0 or mag > self.band_width:
            return self.regions + 1
        width = self.band_width / self.regions
        region = math.ceil(mag / width - 1e-12)
        return min(max(region, 1), self.regions)

    def alpha_for_region(self, region: int) -> float:
        overflow = region > self.regions
        frac = 1.0 if overflow else region / self.regions
        if self.mode is AdaptationMode.TIME_BASED:
            return TIME_ALPHA_FLOOR + frac * (1.0 - TIME_ALPHA_FLOOR)
        return CONFIDENCE_ALPHA_CEILING - frac * (
            CONFIDENCE_ALPHA_CEILING - CONFIDENCE_ALPHA_MIN
        )

    def alpha_for(self, dm: float) -> float:
        return self.alpha_for_region(self.region_of(dm))


def define_scale_map(
    mu: float,
    low: float,
    high: float,
    mode: AdaptationMode = AdaptationMode.TIME_BASED,
    higher_is_better: bool = True,
) -> ScaleMap:
    return ScaleMap(mu, low, high, mode=mode, higher_is_better=higher_is_better)


def tune_alpha(scale_map: ScaleMap, dm: float) -> float:
    """Weighting factor for the region the drift magnitude falls into."""
    return scale_map.alpha_for(dm)


@dataclass(frozen=True)
class DriftAssessment:
    """One detection verdict, emitted per post-warm-up step."""

    batch_index: int
    kpi: float
    mu: float
    sigma: float
    tau: float
    low: float
    high: float
    dm: float
    drift_detected: bool
    severity: Severity
    alpha_applied: float | None = None

    def to_record(self) -> dict:
        return {
            "batch_index": self.batch_index,
            "kpi": self.kpi,
            "mu": self.mu,
            "sigma": self.sigma,
            "tau": self.tau,
            "low": self.low,
            "high": self.high,
            "dm": self.dm,
            "severity": self.severity.value,
            "alpha_applied": self.alpha_applied,
        }


class AdaptiveAveragingRegressor:
    """Averaging learner plus drift detection and per-step re-weighting."""

    def __init__(
        self,
        num_features: int,
        alpha: float = 0.5,
        z: float = 2.0,
        capacity: int = WINDOW_LOWER_BOUND,
        kpi_selector: str = "r2",
        mode: AdaptationMode = AdaptationMode.TIME_BASED,
    ):
        if z <= 0.0:
            raise ValueError("z must be positive")
        if kpi_selector not in KPI_HIGHER_IS_BETTER:
            raise ValueError(f"unknown KPI selector {kpi_selector!r}")
        self.inner = AveragingRegressor(num_features=num_features, alpha=alpha)
        self.window = KpiWindow(capacity)
        self.z = float(z)
        self.kpi_selector = kpi_selector
        self.mode = mode
        self.batches_seen = 0

    @property
    def num_features(self) -> int:
        return self.inner.num_features

    @property
    def initialized(self) -> bool:
        return self.inner.initialized

    def init_base(self, x, y) -> None:
        self.inner.init_base(x, y)

    def predict(self, x) -> np.ndarray:
        return self.inner.predict(x)

    def weights(self) -> tuple[float, np.ndarray]:
        return self.inner.weights()

    def _score_batch(self, x, y, batch_index: int) -> KpiBag:
        return compute_kpis(self.inner, x, y, batch_index)

    def partial_fit(self, x, y) -> tuple[StepTrace, DriftAssessment | None]:
        """One adaptive step; returns the step trace and, once the window
        is full, the drift assessment for this batch."""
        trace = self.inner.partial_fit(x, y)
        batch_index = self.batches_seen
        self.batches_seen += 1
        bag = self._score_batch(x, y, batch_index)
        self.window.append(bag)

        skipped = trace.outcome in (
            StepOutcome.SKIPPED_COINCIDENT,
            StepOutcome.SKIPPED_DEGENERATE,
        )
        if skipped or not self.window.full:
            return trace, None

        higher_is_better = KPI_HIGHER_IS_BETTER[self.kpi_selector]
        band = measure(self.window, self.z, self.kpi_selector)
        current = bag.value(self.kpi_selector)
        dm = drift_magnitude(band.mu, current)
        detected = detect_drift(band.mu, current, band.tau, higher_is_better)
        severity = classify_severity(band.mu, current, band.tau, higher_is_better)
        alpha_applied = None
        if detected:
            self.window.remove_current()
            scale_map = define_scale_map(
                band.mu, band.low, band.high, self.mode, higher_is_better
            )
            alpha_applied = tune_alpha(scale_map, dm)
            v_avg = blend_normals(trace.v_base, trace.v_inc, alpha_applied)
            self.inner.readjust(v_avg, trace.p_int)
            self.window.append(self._score_batch(x, y, batch_index))
        assessment = DriftAssessment(
            batch_index=batch_index,
            kpi=current,
            mu=band.mu,
            sigma=band.sigma,
            tau=band.tau,
            low=band.low,
            high=band.high,
            dm=dm,
            drift_detected=detected,
            severity=severity,
            alpha_applied=alpha_applied,
        )
        return trace, assessment

    def persistent_scalar_count(self) -> int:
        """Float scalars kept across steps: weights, alpha, and two KPIs
        per window entry. Bounded configuration constants are excluded."""
        return self.inner.persistent_scalar_count() + 2 * len(self.window)
