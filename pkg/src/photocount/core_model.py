"""Physical parameters, the radiation spectrum and signal intensity models.

Units are natural throughout (hbar = c = k_B = 1). Intensities are always
the part of the beam's Poynting component *above* the vacuum background;
the zeropoint white noise enters only through ``DetectorParams.noise_scale``
when a detector is simulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit

from ._philox import DOMAIN_SIGNAL, normal_uniform
from .errors import DomainError, UsageError

__all__ = [
    "Constant",
    "DetectorParams",
    "ModulatedPair",
    "PairPath",
    "Piecewise",
    "SignalModel",
    "SpectrumQuery",
    "cumulative_knots",
    "integrated_signal",
    "planck_density",
    "realize_pair",
    "signal_from_json",
    "signal_intensity",
    "signal_to_json",
]


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


@dataclass(frozen=True)
class DetectorParams:
    """Physical identity of a threshold photodetector.

    Parameters
    ----------
    threshold_energy : float
        Accumulated energy at which the detector fires.
    noise_scale : float
        Strength of the zeropoint white noise, in energy per root time.
    area : float
        Entrance area. The accumulated energy is ``area`` times the
        integrated intensity.
    dead_time : float
        Inactive interval after each count.
    """

    threshold_energy: float
    noise_scale: float
    area: float = 1.0
    dead_time: float = 0.0

    def __post_init__(self):
        _require(self.threshold_energy > 0, "threshold_energy must be > 0")
        _require(self.noise_scale > 0, "noise_scale must be > 0")
        _require(self.area > 0, "area must be > 0")
        _require(self.dead_time >= 0, "dead_time must be >= 0")


@dataclass(frozen=True)
class Constant:
    intensity: float

    def __post_init__(self):
        _require(self.intensity >= 0, "intensity must be >= 0")


@dataclass(frozen=True)
class Piecewise:
    """Piecewise-constant intensity, right-continuous at each breakpoint.

    ``levels[0]`` applies before ``breakpoints[0]``, ``levels[i]`` on
    ``[breakpoints[i-1], breakpoints[i])`` and ``levels[-1]`` afterwards.
    """

    breakpoints: tuple[float, ...]
    levels: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        _require(
            len(self.levels) == len(self.breakpoints) + 1,
            "piecewise model needs exactly one more level than breakpoints",
        )
        _require(all(v >= 0 for v in self.levels), "levels must be >= 0")
        _require(
            all(b1 > b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:])),
            "breakpoints must be strictly increasing",
        )


@dataclass(frozen=True)
class ModulatedPair:
    """Two intensities fluctuating slowly around a common mean.

    Each member is ``max(0, mean + amplitude * Z)`` where ``Z`` is a
    stationary unit-variance Ornstein-Uhlenbeck process with correlation
    time ``relaxation_time``. The members' driving processes have
    equal-time correlation ``cross_correlation``, so before clamping

        cov(I1(t), I2(t + s)) = cross_correlation * amplitude**2 * exp(-|s| / relaxation_time)

    Paths are realised on the grid ``k * grid_step`` and held constant in
    between; ``grid_step`` defaults to ``relaxation_time / 50``.
    """

    mean: float
    relaxation_time: float
    amplitude: float
    cross_correlation: float
    grid_step: float | None = None

    def __post_init__(self):
        _require(self.mean >= 0, "mean must be >= 0")
        _require(self.relaxation_time > 0, "relaxation_time must be > 0")
        _require(self.amplitude >= 0, "amplitude must be >= 0")
        _require(-1 <= self.cross_correlation <= 1, "cross_correlation must lie in [-1, 1]")
        if self.grid_step is None:
            object.__setattr__(self, "grid_step", self.relaxation_time / 50.0)
        _require(self.grid_step > 0, "grid_step must be > 0")


SignalModel = Union[Constant, Piecewise, ModulatedPair]


@dataclass(frozen=True)
class SpectrumQuery:
    angular_frequency: float
    temperature: float
    include_zpf: bool = True

    def __post_init__(self):
        _require(self.angular_frequency > 0, "angular_frequency must be > 0")
        _require(self.temperature >= 0, "temperature must be >= 0")


def planck_density(q: SpectrumQuery) -> float:
    """Spectral energy density of black-body radiation, optionally with the vacuum term.

    ``w**2 / pi**2 * (w / (exp(w / T) - 1) + w / 2)`` in natural units; the
    second term is included only when ``q.include_zpf`` is set.
    """
    w, temp = q.angular_frequency, q.temperature
    if temp == 0:
        thermal = 0.0
    else:
        x = w / temp
        # e^-x / (1 - e^-x) never overflows
        thermal = w * math.exp(-x) / -math.expm1(-x)
    zpf = 0.5 * w if q.include_zpf else 0.0
    return w * w / math.pi**2 * (thermal + zpf)


def _check_deterministic(m: SignalModel) -> None:
    if isinstance(m, ModulatedPair):
        raise UsageError(
            "modulated pair is stochastic; realise it with realize_pair and integrate the path"
        )


def cumulative_knots(m: SignalModel) -> tuple[np.ndarray, np.ndarray]:
    """Knots of the piecewise-linear map ``t -> integral_0^t I(s) ds``.

    Beyond the last knot the map continues with the slope of the final
    segment, so two knots suffice for a constant signal.
    """
    _check_deterministic(m)
    if isinstance(m, Constant):
        return np.array([0.0, 1.0]), np.array([0.0, m.intensity])
    breaks = [b for b in m.breakpoints if b > 0]
    levels = list(m.levels[len(m.levels) - len(breaks) - 1:])
    times = np.array([0.0, *breaks, (breaks[-1] if breaks else 0.0) + 1.0])
    values = np.concatenate([[0.0], np.cumsum(np.diff(times) * np.array(levels))])
    return times, values


def integrated_signal(m: SignalModel, t0: float, t1: float) -> float:
    """Exact integral of a deterministic intensity over ``[t0, t1]``."""
    _check_deterministic(m)
    if not 0 <= t0 <= t1:
        raise DomainError(f"need 0 <= t0 <= t1, got t0={t0}, t1={t1}")
    if isinstance(m, Constant):
        return m.intensity * (t1 - t0)
    # sum level * overlap directly; no cancellation between large cumulative values
    edges = (-math.inf, *m.breakpoints, math.inf)
    total = 0.0
    for level, lo, hi in zip(m.levels, edges, edges[1:]):
        overlap = min(hi, t1) - max(lo, t0)
        if overlap > 0:
            total += level * overlap
    return total


@dataclass(frozen=True)
class PairPath:
    """Realised intensities of a modulated pair on a uniform grid."""

    times: np.ndarray
    first: np.ndarray
    second: np.ndarray
    model: ModulatedPair = field(repr=False)

    @property
    def step(self) -> float:
        return self.model.grid_step

    def member(self, index: int) -> np.ndarray:
        if index not in (0, 1):
            raise UsageError("pair member index must be 0 or 1")
        return self.first if index == 0 else self.second

    def knots(self, index: int) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative-integral knots of one member (held constant between grid points)."""
        values = self.member(index)
        cum = np.concatenate([[0.0], np.cumsum(values * self.step)])
        times = np.arange(len(cum)) * self.step
        return times, cum


@njit(cache=True)
def _ou_pair(seed, n, a, rho, mean, amplitude):
    first = np.empty(n)
    second = np.empty(n)
    b = np.sqrt(1.0 - a * a)
    c = np.sqrt(max(0.0, 1.0 - rho * rho))
    z = 0.0
    w = 0.0
    for k in range(n):
        dz, _ = normal_uniform(seed, DOMAIN_SIGNAL, 0, k)
        dw, _ = normal_uniform(seed, DOMAIN_SIGNAL, 1, k)
        if k == 0:
            z = dz
            w = dw
        else:
            z = a * z + b * dz
            w = a * w + b * dw
        first[k] = max(0.0, mean + amplitude * z)
        second[k] = max(0.0, mean + amplitude * (rho * z + c * w))
    return first, second


def realize_pair(m: ModulatedPair, seed: int, horizon: float) -> PairPath:
    """Reproducible realisation of both members on ``[0, horizon]``."""
    if not isinstance(m, ModulatedPair):
        raise UsageError("realize_pair needs a ModulatedPair model")
    if horizon < 0:
        raise DomainError("horizon must be >= 0")
    n = int(math.floor(horizon / m.grid_step)) + 2
    a = math.exp(-m.grid_step / m.relaxation_time)
    first, second = _ou_pair(
        np.uint64(seed), n, a, float(m.cross_correlation), float(m.mean), float(m.amplitude)
    )
    return PairPath(np.arange(n) * m.grid_step, first, second, m)


def signal_intensity(
    m: SignalModel, t: float, noise_seed: int | None = None, member: int = 0
) -> float:
    """Signal intensity at time ``t``.

    For a modulated pair, ``noise_seed`` selects the realisation and
    ``member`` picks which of the two beams to read.
    """
    if t < 0:
        raise DomainError(f"time must be >= 0, got {t}")
    if isinstance(m, ModulatedPair):
        if noise_seed is None:
            raise UsageError("a modulated pair needs noise_seed")
        path = realize_pair(m, noise_seed, t)
        return float(path.member(member)[int(t // m.grid_step)])
    if noise_seed is not None:
        raise UsageError("noise_seed only applies to stochastic signal models")
    if isinstance(m, Constant):
        return m.intensity
    idx = int(np.searchsorted(m.breakpoints, t, side="right"))
    return m.levels[idx]


def signal_to_json(m: SignalModel) -> dict:
    if isinstance(m, Constant):
        return {"kind": "constant", "intensity": m.intensity}
    if isinstance(m, Piecewise):
        return {"kind": "piecewise", "breakpoints": list(m.breakpoints), "levels": list(m.levels)}
    return {
        "kind": "modulated_pair",
        "mean": m.mean,
        "relaxation_time": m.relaxation_time,
        "amplitude": m.amplitude,
        "cross_correlation": m.cross_correlation,
        "grid_step": m.grid_step,
    }


_KINDS = {"constant": Constant, "piecewise": Piecewise, "modulated_pair": ModulatedPair}


def signal_from_json(obj: dict) -> SignalModel:
    """Inverse of :func:`signal_to_json`. Unknown kinds or fields raise ``DomainError``."""
    obj = dict(obj)
    kind = obj.pop("kind", None)
    if kind not in _KINDS:
        raise DomainError(f"unknown signal kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        return _KINDS[kind](**obj)
    except TypeError as exc:
        raise DomainError(f"bad fields for {kind} signal: {exc}") from None
