"""Estimators that compare simulated count trains with the analytic predictions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, UsageError
from .montecarlo import EventTrain

__all__ = [
    "RateEstimate",
    "coincidence_rate",
    "cross_correlation",
    "empirical_rate",
    "ks_statistic",
    "median_gap",
    "pooled_rate",
    "shuffled_coincidence_rate",
]

LOW_COUNT = 10


@dataclass(frozen=True)
class RateEstimate:
    """A count rate with its Poisson standard error.

    ``low_count`` is set when fewer than ten events back the estimate.
    """

    rate: float
    std_error: float
    n_events: int

    def __post_init__(self):
        if self.rate < 0 or self.std_error < 0 or self.n_events < 0:
            raise DomainError("rate, std_error and n_events must be non-negative")

    @property
    def low_count(self) -> bool:
        return self.n_events < LOW_COUNT

    def to_json(self) -> str:
        return record(self.rate, self.std_error, self.n_events)


def record(estimate: float, std_error: float | None, n: int) -> str:
    """One-line JSON record of an estimator's output."""
    return json.dumps({"estimate": estimate, "std_error": std_error, "n": int(n)})


def empirical_rate(train: EventTrain) -> RateEstimate:
    """Counts per unit time over the whole horizon.

    The standard error ``sqrt(n) / horizon`` treats the count as Poisson.
    For renewal trains with inverse Gaussian gaps the true spread differs by
    the factor ``sqrt(var / mean**2)`` of the gap law; that correction is
    deliberately left out.
    """
    if not train.horizon > 0:
        raise DomainError("train horizon must be > 0")
    n = len(train)
    return RateEstimate(n / train.horizon, math.sqrt(n) / train.horizon, n)


def pooled_rate(trains: Sequence[EventTrain], horizon: float | None = None) -> RateEstimate:
    """Rate of several independent trains pooled, optionally truncated at ``horizon``."""
    if not trains:
        raise UsageError("need at least one train")
    h = horizon if horizon is not None else trains[0].horizon
    if any(tr.horizon < h for tr in trains):
        raise UsageError("cannot pool beyond a train's horizon")
    n = sum(tr.count_in(0.0, math.nextafter(h, math.inf)) for tr in trains)
    exposure = h * len(trains)
    return RateEstimate(n / exposure, math.sqrt(n) / exposure, n)


def ks_statistic(samples, cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance between sorted ``samples`` and ``cdf``."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise UsageError("samples must be a non-empty 1-d sequence")
    if np.any(np.diff(x) < 0):
        raise UsageError("samples must be sorted ascending")
    n = len(x)
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - f)), np.max(np.abs((i - 1) / n - f))))


def _check_pair(a: EventTrain, b: EventTrain, window: float) -> None:
    if not window > 0:
        raise DomainError("window must be > 0")
    if not math.isclose(a.horizon, b.horizon, rel_tol=1e-12):
        raise UsageError(f"trains have different horizons ({a.horizon} vs {b.horizon})")


def _count_pairs(ta: np.ndarray, tb: np.ndarray, delay: float, window: float) -> int:
    # earliest-first greedy; each event is used at most once
    half = 0.5 * window
    j = 0
    count = 0
    nb = len(tb)
    # compare one rounded difference so swapping trains and negating delay is exact
    for t in ta:
        while j < nb and (tb[j] - t) - delay < -half:
            j += 1
        if j == nb:
            break
        if (tb[j] - t) - delay <= half:
            count += 1
            j += 1
    return count


def coincidence_rate(a: EventTrain, b: EventTrain, delay: float, window: float) -> RateEstimate:
    """Rate of pairs with ``|t_b - t_a - delay| <= window / 2``.

    Pairs are formed greedily, earliest first, and no event joins two pairs,
    the way a hardware coincidence counter behaves.
    """
    _check_pair(a, b, window)
    n = _count_pairs(a.timestamps, b.timestamps, delay, window)
    return RateEstimate(n / a.horizon, math.sqrt(n) / a.horizon, n)


def _shuffle_gaps(train: EventTrain, rng: np.random.Generator) -> np.ndarray:
    gaps = train.gaps()
    ts = np.cumsum(rng.permutation(gaps))
    return ts[ts <= train.horizon]


def shuffled_coincidence_rate(
    a: EventTrain,
    b: EventTrain,
    delay: float,
    window: float,
    seed: int = 0,
    n_shuffles: int = 8,
) -> RateEstimate:
    """Coincidence rate expected if ``b`` were independent of ``a``.

    ``b``'s inter-count gaps are randomly permuted, which keeps its rate and
    gap law but destroys any alignment with ``a``; the result is averaged
    over ``n_shuffles`` surrogates.
    """
    _check_pair(a, b, window)
    rng = np.random.default_rng(seed)
    counts = [
        _count_pairs(a.timestamps, _shuffle_gaps(b, rng), delay, window) for _ in range(n_shuffles)
    ]
    mean = float(np.mean(counts))
    return RateEstimate(mean / a.horizon, math.sqrt(mean / n_shuffles) / a.horizon, round(mean))


def cross_correlation(path_a, path_b, delay: float, step: float = 1.0) -> float:
    """Time average of ``I_a(t) * I_b(t + delay)`` for paths sampled every ``step``.

    ``delay`` is rounded to the nearest whole number of samples.
    """
    a = np.asarray(path_a, dtype=float)
    b = np.asarray(path_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("paths must be 1-d and sampled on the same grid")
    lag = int(round(delay / step))
    n = len(a) - abs(lag)
    if n < 10:
        raise UsageError(f"overlap of {max(n, 0)} samples is shorter than 10")
    if lag >= 0:
        return float(np.mean(a[: len(a) - lag] * b[lag:]))
    return float(np.mean(a[-lag:] * b[: len(b) + lag]))


def median_gap(trains: Sequence[EventTrain]) -> float:
    """Kaplan-Meier median of the count intervals of one or more trains.

    The open interval between a train's last count and its horizon is a
    right-censored observation. Dropping it would bias the median low,
    because long intervals are the ones most likely to be cut off.
    """
    times = []
    observed = []
    for tr in trains:
        if tr.dead_time:
            raise UsageError("median_gap assumes zero dead time")
        gaps = tr.gaps()
        times.append(gaps)
        observed.append(np.ones(len(gaps), dtype=bool))
        last = tr.timestamps[-1] if len(tr) else 0.0
        if tr.horizon > last:
            times.append([tr.horizon - last])
            observed.append([False])
    t = np.concatenate(times)
    d = np.concatenate(observed)
    if not d.any():
        raise UsageError("no completed intervals")
    # events before censorings at tied times
    order = np.lexsort((~d, t))
    t, d = t[order], d[order]
    at_risk = len(t) - np.arange(len(t))
    surv = np.cumprod(np.where(d, 1.0 - 1.0 / at_risk, 1.0))
    below = np.nonzero(surv <= 0.5)[0]
    if len(below) == 0:
        return math.inf
    return float(t[below[0]])
