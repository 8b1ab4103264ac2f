"""Closed forms for Brownian motion with constant drift absorbed at a threshold.

The accumulated energy after a count is ``E(t) = drift * t + noise_scale * W(t)``
started at zero; the next count happens when it first reaches
``threshold``. Its first-passage law is inverse Gaussian with mean
``threshold / drift`` and shape ``threshold**2 / noise_scale**2``.

All functions accept scalar or array times and return the same shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .core_model import DetectorParams
from .errors import DomainError, InfiniteMeanError

__all__ = [
    "FptLaw",
    "cdf",
    "mean_fpt",
    "median_fpt",
    "pdf",
    "rate",
    "survival",
    "transition_density",
    "variance_fpt",
]


@dataclass(frozen=True)
class FptLaw:
    """First-passage problem with threshold, drift and noise scale (unit area)."""

    threshold: float
    drift: float
    noise_scale: float

    def __post_init__(self):
        if not self.threshold > 0:
            raise DomainError("threshold must be > 0")
        if not self.noise_scale > 0:
            raise DomainError("noise_scale must be > 0")
        if not self.drift >= 0:
            raise DomainError("drift must be >= 0")

    @classmethod
    def from_detector(cls, params: DetectorParams, intensity: float) -> FptLaw:
        """Law for a detector of area ``A`` under constant intensity.

        The accumulated energy is ``A`` times the integrated intensity, so
        both the drift and the noise amplitude scale with ``A``.
        """
        return cls(
            params.threshold_energy,
            params.area * intensity,
            params.area * params.noise_scale,
        )


def _scalar_or_array(x: np.ndarray):
    return float(x) if x.ndim == 0 else x


def transition_density(law: FptLaw, E, t):
    """Density of the surviving accumulated energy at ``E`` after time ``t``.

    Method of images: a free drifting Gaussian minus its mirror image about
    the threshold. Written as ``free * (1 - exp(2 E_m (E - E_m) / (sigma**2 t)))``,
    which is the same expression with the image cancellation made exact at
    ``E = E_m``.
    """
    E = np.asarray(E, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("transition density needs t > 0")
    if np.any(E > law.threshold):
        raise DomainError("energy beyond the absorbing threshold")
    s2t = law.noise_scale**2 * t
    free = np.exp(-((E - law.drift * t) ** 2) / (2 * s2t)) / np.sqrt(2 * np.pi * s2t)
    image = -np.expm1(2 * law.threshold * (E - law.threshold) / s2t)
    return _scalar_or_array(free * image)


def cdf(law: FptLaw, t):
    """Probability that the threshold has been reached by time ``t``.

    The image term ``exp(2 E_m I_s / sigma**2) * erfc(b)`` is evaluated as
    ``erfcx(b) * exp(-a**2)``, which is the same number without the
    overflowing exponential.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("cdf needs t >= 0")
    out = np.zeros_like(t)
    out[np.isinf(t)] = 1.0
    pos = (t > 0) & np.isfinite(t)
    tp = t[pos]
    root = law.noise_scale * np.sqrt(2 * tp)
    a = (law.threshold - law.drift * tp) / root
    if law.drift == 0:
        out[pos] = special.erfc(a)
    else:
        b = (law.threshold + law.drift * tp) / root
        out[pos] = 0.5 * special.erfc(a) + 0.5 * special.erfcx(b) * np.exp(-a * a)
    return _scalar_or_array(np.minimum(out, 1.0))


def survival(law: FptLaw, t):
    """``1 - cdf``, computed without cancellation for small probabilities."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("survival needs t >= 0")
    out = np.ones_like(t)
    out[np.isinf(t)] = 0.0
    pos = (t > 0) & np.isfinite(t)
    tp = t[pos]
    root = law.noise_scale * np.sqrt(2 * tp)
    a = (law.threshold - law.drift * tp) / root
    b = (law.threshold + law.drift * tp) / root
    # 1 - erfc(a)/2 = erfc(-a)/2
    out[pos] = 0.5 * special.erfc(-a) - 0.5 * special.erfcx(b) * np.exp(-a * a)
    return _scalar_or_array(np.maximum(out, 0.0))


def pdf(law: FptLaw, t):
    """First-passage density (inverse Gaussian)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("pdf needs t > 0")
    s2 = law.noise_scale**2
    dens = law.threshold / np.sqrt(2 * np.pi * s2 * t**3) * np.exp(
        -((law.threshold - law.drift * t) ** 2) / (2 * s2 * t)
    )
    return _scalar_or_array(dens)


def mean_fpt(law: FptLaw) -> float:
    """Mean time between counts, ``threshold / drift``; independent of the noise."""
    if law.drift == 0:
        raise InfiniteMeanError("zero drift: the first-passage time has no finite mean")
    return law.threshold / law.drift


def variance_fpt(law: FptLaw) -> float:
    if law.drift == 0:
        raise InfiniteMeanError("zero drift: the first-passage time has no finite moments")
    return law.threshold * law.noise_scale**2 / law.drift**3


def rate(law: FptLaw) -> float:
    """Steady counting rate ``drift / threshold``; zero without signal."""
    return law.drift / law.threshold


def median_fpt(law: FptLaw) -> float:
    """Time at which the cdf reaches one half (bracketed root find, rtol 1e-10)."""
    # drift only speeds passage up, so the zero-drift scale is an upper start
    hi = (law.threshold / law.noise_scale) ** 2
    if law.drift > 0:
        hi = min(hi, law.threshold / law.drift)
    while cdf(law, hi) < 0.5:
        hi *= 2.0
    lo = hi
    while cdf(law, lo) >= 0.5:
        lo *= 0.5
    root = optimize.brentq(
        lambda s: cdf(law, s) - 0.5, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=500
    )
    return float(root)

