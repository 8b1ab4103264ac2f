"""Finite-difference solution of the drift-diffusion equation with an absorbing threshold.

    d rho / dt = (sigma**2 / 2) d2 rho / dE2 - I_s d rho / dE,   rho(E_m, t) = 0

Crank-Nicolson in time, central differences in energy, started from a
single-node spike of unit mass at ``E = 0``. The first two steps are
replaced by four backward-Euler half steps (Rannacher start-up) so the
spike's high-frequency content is damped instead of ringing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .analytic_fpt import FptLaw
from .errors import ConfigurationError, DomainError

__all__ = ["PdeGrid", "PdeSolution", "numeric_cdf", "solve"]

# Rannacher start-up: this many backward-Euler half steps replace the first CN steps
_STARTUP_HALF_STEPS = 4
_CLIP_TOL = 1e-12


def required_e_min(law: FptLaw, t_max: float) -> float:
    """Lower truncation far enough below zero that leakage is negligible."""
    return -(law.drift * t_max + 8.0 * law.noise_scale * math.sqrt(t_max))


@dataclass(frozen=True)
class PdeGrid:
    """Uniform energy grid ``e_min .. e_max`` with ``n_cells`` cells and time step ``dt``."""

    e_min: float
    e_max: float
    n_cells: int
    dt: float
    t_max: float

    def __post_init__(self):
        if not self.e_min < 0 < self.e_max:
            raise DomainError("need e_min < 0 < e_max")
        if self.n_cells < 16:
            raise DomainError("n_cells must be >= 16")
        if not self.dt > 0:
            raise DomainError("dt must be > 0")
        if not self.t_max >= self.dt:
            raise DomainError("t_max must be >= dt")

    @classmethod
    def for_law(cls, law: FptLaw, n_cells: int, dt: float, t_max: float) -> PdeGrid:
        """Grid ending at the threshold, long enough below zero, with ``E = 0`` on a node.

        The spacing is stretched slightly so that the threshold is an
        integer number of cells above zero; this keeps the initial spike
        exactly at the origin.
        """
        span = law.threshold - required_e_min(law, t_max)
        above = max(1, math.floor(n_cells * law.threshold / span))
        h = law.threshold / above
        return cls(law.threshold - n_cells * h, law.threshold, n_cells, dt, t_max)

    @property
    def spacing(self) -> float:
        return (self.e_max - self.e_min) / self.n_cells

    @property
    def energies(self) -> np.ndarray:
        return np.linspace(self.e_min, self.e_max, self.n_cells + 1)

    @property
    def n_steps(self) -> int:
        return math.ceil(self.t_max / self.dt - 1e-9)


@dataclass(frozen=True)
class PdeSolution:
    """Density snapshots and absorbed probability of one solve.

    ``densities[k]`` is the density on ``grid.energies`` at ``times[k]``.
    ``absorbed`` holds the absorbed probability after every time step
    (``step_times``), not just at the stored snapshots.
    """

    grid: PdeGrid
    law: FptLaw
    times: np.ndarray
    densities: np.ndarray
    step_times: np.ndarray
    absorbed: np.ndarray
    min_density: float

    def mass(self, row: int) -> float:
        return float(np.trapezoid(self.densities[row], dx=self.grid.spacing))

    def density_at(self, t: float) -> np.ndarray:
        """Stored density row closest to ``t``."""
        return self.densities[int(np.argmin(np.abs(self.times - t)))]


def _operator_bands(law: FptLaw, h: float) -> tuple[float, float, float]:
    diff = 0.5 * law.noise_scale**2 / h**2
    adv = law.drift / (2.0 * h)
    # coefficients of rho[j-1], rho[j], rho[j+1] in L rho
    return diff + adv, -2.0 * diff, diff - adv


def _banded(lower: float, diag: float, upper: float, n: int, scale: float) -> np.ndarray:
    # solve_banded layout of I - scale * L
    ab = np.empty((3, n))
    ab[0] = -scale * upper
    ab[1] = 1.0 - scale * diag
    ab[2] = -scale * lower
    return ab


def solve(law: FptLaw, grid: PdeGrid, store_every: int | None = None) -> PdeSolution:
    """Evolve the unit spike at ``E = 0`` up to ``grid.t_max``.

    Parameters
    ----------
    law : FptLaw
    grid : PdeGrid
        Must end at the law's threshold and reach at least
        ``required_e_min(law, grid.t_max)`` below zero.
    store_every : int, optional
        Keep a density snapshot every this many steps (default: about 500
        snapshots in total). The absorbed probability is kept at every step.

    Raises
    ------
    ConfigurationError
        If the grid does not fit the law or the cell Peclet number
        ``I_s * dE / sigma**2`` exceeds 2.
    """
    h = grid.spacing
    if not math.isclose(grid.e_max, law.threshold, rel_tol=1e-12):
        raise ConfigurationError(f"grid e_max={grid.e_max} must equal the threshold {law.threshold}")
    if grid.e_min > required_e_min(law, grid.t_max) + 1e-12:
        raise ConfigurationError(
            f"e_min={grid.e_min} too close to zero; need <= {required_e_min(law, grid.t_max)}"
        )
    peclet = law.drift * h / law.noise_scale**2
    if peclet > 2:
        raise ConfigurationError(
            f"cell Peclet number {peclet:.3g} > 2 at n_cells={grid.n_cells} (dE={h:.3g}); refine the grid"
        )

    n_int = grid.n_cells - 1
    lower, diag, upper = _operator_bands(law, h)
    rho = np.zeros(n_int)
    origin = int(round(-grid.e_min / h)) - 1
    rho[origin] = 1.0 / h

    n_steps = grid.n_steps
    if store_every is None:
        store_every = max(1, n_steps // 500)
    times = [0.0]
    rows = [np.concatenate([[0.0], rho, [0.0]])]
    step_times = np.arange(n_steps + 1) * grid.dt
    absorbed = np.zeros(n_steps + 1)
    min_density = 0.0

    half = 0.5 * grid.dt
    # backward Euler over dt/2 and the CN left side share the matrix I - dt/2 L
    lhs = _banded(lower, diag, upper, n_int, half)

    def apply_rhs(v: np.ndarray) -> np.ndarray:
        out = v + half * diag * v
        out[1:] += half * lower * v[:-1]
        out[:-1] += half * upper * v[1:]
        return out

    startup_steps = _STARTUP_HALF_STEPS // 2
    for k in range(1, n_steps + 1):
        if k <= startup_steps:
            for _ in range(2):
                rho = solve_banded((1, 1), lhs, rho, check_finite=False)
        else:
            rho = solve_banded((1, 1), lhs, apply_rhs(rho), check_finite=False)
        min_density = min(min_density, float(rho.min()))
        absorbed[k] = 1.0 - h * rho.sum()
        if k % store_every == 0 or k == n_steps:
            row = np.concatenate([[0.0], rho, [0.0]])
            row[(row < 0) & (row >= -_CLIP_TOL)] = 0.0
            rows.append(row)
            times.append(k * grid.dt)

    return PdeSolution(
        grid=grid,
        law=law,
        times=np.array(times),
        densities=np.array(rows),
        step_times=step_times,
        absorbed=absorbed,
        min_density=min_density,
    )


def numeric_cdf(sol: PdeSolution, t: float) -> float:
    """First-passage cdf from the solver: one minus the surviving mass at ``t``.

    Linear interpolation between time steps.
    """
    if not 0 <= t <= sol.step_times[-1] + 1e-12:
        raise DomainError(f"t={t} outside the solved horizon [0, {sol.step_times[-1]}]")
    return float(np.interp(t, sol.step_times, sol.absorbed))
