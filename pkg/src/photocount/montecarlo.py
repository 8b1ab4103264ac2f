"""Monte Carlo simulation of threshold detectors driven by signal plus white noise.

Between counts the detector integrates

    dE = A * I_s(t) dt + A * sigma dW,      E = 0 right after a count,

and fires the first time ``E`` reaches the threshold. Paths are advanced
with exact Gaussian increments of the integrated signal; a step that ends
below the threshold still counts as a crossing with the Brownian-bridge
probability ``exp(-2 (E_m - E_k)(E_m - E_k+1) / (A**2 sigma**2 dt))``, so
coarse steps do not miss excursions.

Randomness is counter-based (see ``_philox``): the normal and uniform used
in step ``k`` of trajectory ``j`` depend only on ``(seed, stream, j, k)``.
For a detector, trajectory ``j`` is the interval leading to count ``j``.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from numba import njit, prange

from ._philox import DOMAIN_DETECTOR, DOMAIN_FPT, MAX_STEPS, MAX_TRAJECTORIES, normal_uniform_pair
from .analytic_fpt import FptLaw
from .core_model import (
    DetectorParams,
    ModulatedPair,
    PairPath,
    SignalModel,
    cumulative_knots,
    realize_pair,
)
from .errors import DomainError, UsageError

__all__ = [
    "CoincidenceRun",
    "EventTrain",
    "RunConfig",
    "sample_fpt",
    "simulate_coincidence",
    "simulate_detector",
]

_MAX_SEED = 2**64

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe; workqueue is always available
    numba.config.THREADING_LAYER = "workqueue"


def _apply_thread_cap() -> None:
    cap = os.environ.get("FPT_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


@dataclass(frozen=True)
class RunConfig:
    """Seed, Euler step and time horizon of a simulation run."""

    seed: int
    step: float
    horizon: float

    def __post_init__(self):
        if not 0 <= self.seed < _MAX_SEED:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.step > 0:
            raise DomainError("step must be > 0")
        if not self.horizon > 0:
            raise DomainError("horizon must be > 0")
        if self.step > self.horizon / 10:
            raise DomainError("step must be <= horizon / 10")
        if self.horizon / self.step >= MAX_STEPS:
            raise DomainError("horizon / step exceeds the 32-bit step counter")


@dataclass(frozen=True)
class EventTrain:
    """Detection times of one detector on ``[0, horizon]``."""

    timestamps: np.ndarray
    horizon: float
    dead_time: float = 0.0

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        object.__setattr__(self, "timestamps", ts)
        if ts.ndim != 1:
            raise DomainError("timestamps must be one-dimensional")
        if len(ts) and (ts[0] < 0 or ts[-1] > self.horizon):
            raise DomainError("timestamps must lie in [0, horizon]")
        gaps = np.diff(ts)
        if np.any(gaps <= 0):
            raise DomainError("timestamps must be strictly increasing")
        if np.any(gaps < self.dead_time * (1 - 1e-12)):
            raise DomainError("consecutive counts closer than the dead time")

    def __len__(self) -> int:
        return len(self.timestamps)

    def gaps(self) -> np.ndarray:
        """Intervals between counts, the first one measured from ``t = 0``."""
        return np.diff(self.timestamps, prepend=0.0)

    def count_in(self, t0: float, t1: float) -> int:
        """Number of counts in ``[t0, t1)``."""
        lo, hi = np.searchsorted(self.timestamps, [t0, t1], side="left")
        return int(hi - lo)


@njit(cache=True, inline="always")
def _cum(knot_t, knot_c, t, idx):
    # piecewise-linear cumulative integral, last slope extended past the final knot
    last = len(knot_t) - 2
    while idx < last and knot_t[idx + 1] <= t:
        idx += 1
    slope = (knot_c[idx + 1] - knot_c[idx]) / (knot_t[idx + 1] - knot_t[idx])
    return knot_c[idx] + slope * (t - knot_t[idx]), idx


@njit(cache=True)
def _locate(knot_t, t):
    idx = np.searchsorted(knot_t, t, side="right") - 1
    return min(max(idx, 0), len(knot_t) - 2)


@njit(cache=True)
def _passage(seed, domain, traj, t_start, t_stop, threshold, sigma, scale, dt, knot_t, knot_c):
    """First time after ``t_start`` the accumulator reaches ``threshold``; inf if not by ``t_stop``."""
    e = 0.0
    t = t_start
    idx = _locate(knot_t, t)
    c, idx = _cum(knot_t, knot_c, t, idx)
    k = 0
    s2 = sigma * sigma
    z_next = 0.0
    u_next = 0.0
    while t < t_stop:
        t_next = min(t_start + (k + 1) * dt, t_stop)
        h = t_next - t
        c_next, idx = _cum(knot_t, knot_c, t_next, idx)
        if k & 1:
            z, u = z_next, u_next
        else:
            z, z_next, u, u_next = normal_uniform_pair(seed, domain, traj, k >> 1)
        x = e + scale * (c_next - c) + sigma * np.sqrt(h) * z
        if x >= threshold:
            tc = t + h * (threshold - e) / (x - e)
            return max(tc, np.nextafter(t, np.inf))
        bridge = 2.0 * (threshold - e) * (threshold - x) / (s2 * h)
        # uniforms are never below 2**-33 > exp(-23), so larger exponents cannot fire
        if bridge < 23.0 and u < np.exp(-bridge):
            return t + 0.5 * h
        e = x
        t = t_next
        c = c_next
        k += 1
    return np.inf


@njit(cache=True, parallel=True)
def _sample_many(seed, n, t_stop, threshold, sigma, dt, knot_t, knot_c):
    out = np.empty(n)
    for j in prange(n):
        out[j] = _passage(seed, DOMAIN_FPT, j, 0.0, t_stop, threshold, sigma, 1.0, dt, knot_t, knot_c)
    return out


@njit(cache=True)
def _train(seed, domain, horizon, threshold, sigma, scale, dt, dead_time, knot_t, knot_c):
    out = np.empty(1024)
    n = 0
    t = 0.0
    while t < horizon:
        tc = _passage(seed, domain, n, t, horizon, threshold, sigma, scale, dt, knot_t, knot_c)
        if tc > horizon:
            break
        if n == len(out):
            grown = np.empty(2 * n)
            grown[:n] = out
            out = grown
        out[n] = tc
        n += 1
        t = tc + dead_time
    return out[:n].copy()


def sample_fpt(law: FptLaw, cfg: RunConfig, n: int) -> np.ndarray:
    """Draw ``n`` first-passage times of ``law``.

    Samples that have not crossed by ``cfg.horizon`` are returned as
    ``inf``. Output depends only on ``(cfg.seed, cfg.step, cfg.horizon, n)``
    and the law, not on the number of worker threads.
    """
    if not 1 <= n < MAX_TRAJECTORIES:
        raise DomainError("n must be >= 1 and fit the 32-bit trajectory counter")
    _apply_thread_cap()
    return _sample_many(
        np.uint64(cfg.seed),
        int(n),
        float(cfg.horizon),
        float(law.threshold),
        float(law.noise_scale),
        float(cfg.step),
        np.array([0.0, 1.0]),
        np.array([0.0, float(law.drift)]),
    )


def _run_detector(knots, p: DetectorParams, cfg: RunConfig, stream: int) -> EventTrain:
    knot_t, knot_c = knots
    ts = _train(
        np.uint64(cfg.seed),
        DOMAIN_DETECTOR + stream,
        float(cfg.horizon),
        float(p.threshold_energy),
        float(p.area * p.noise_scale),
        float(p.area),
        float(cfg.step),
        float(p.dead_time),
        np.ascontiguousarray(knot_t, dtype=float),
        np.ascontiguousarray(knot_c, dtype=float),
    )
    return EventTrain(ts, cfg.horizon, p.dead_time)


def simulate_detector(
    m: SignalModel, p: DetectorParams, cfg: RunConfig, stream: int = 0, member: int = 0
) -> EventTrain:
    """Count train of one detector exposed to signal ``m`` over ``[0, cfg.horizon]``.

    ``stream`` selects an independent noise stream for the same seed.
    A modulated pair is realised from ``cfg.seed`` and ``member`` picks
    which beam this detector sees.
    """
    if stream < 0:
        raise DomainError("stream must be >= 0")
    if isinstance(m, ModulatedPair):
        knots = realize_pair(m, cfg.seed, cfg.horizon).knots(member)
    else:
        knots = cumulative_knots(m)
    return _run_detector(knots, p, cfg, stream)


@dataclass(frozen=True)
class CoincidenceRun:
    """Both count trains of a two-detector run plus the intensity paths that drove them."""

    first: EventTrain
    second: EventTrain
    path: PairPath = field(repr=False)
    valid: bool = True
    warnings: tuple[str, ...] = ()

    def __iter__(self):
        return iter((self.first, self.second))


def simulate_coincidence(
    m: ModulatedPair,
    p1: DetectorParams,
    p2: DetectorParams,
    cfg: RunConfig,
    shared_noise: bool = False,
) -> CoincidenceRun:
    """Two detectors watching the two beams of one correlated pair.

    The detectors get independent zeropoint noise streams unless
    ``shared_noise`` is set. The simple rate picture only holds when the
    signal correlation time is at least the mean interval between counts;
    when it is not, the run is still performed and flagged ``valid=False``.
    """
    if not isinstance(m, ModulatedPair):
        raise UsageError("coincidence runs need a ModulatedPair signal")
    notes = []
    for name, p in (("first", p1), ("second", p2)):
        mean_interval = math.inf if m.mean == 0 else p.threshold_energy / (p.area * m.mean)
        if m.relaxation_time < mean_interval:
            notes.append(
                f"{name} detector: relaxation_time {m.relaxation_time} shorter than "
                f"mean count interval {mean_interval:.3g}"
            )
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    path = realize_pair(m, cfg.seed, cfg.horizon)
    first = _run_detector(path.knots(0), p1, cfg, 0)
    second = _run_detector(path.knots(1), p2, cfg, 0 if shared_noise else 1)
    return CoincidenceRun(first, second, path, not notes, tuple(notes))
