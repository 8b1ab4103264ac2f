"""Acceptance checks for the detector model.

Each check runs one end-to-end criterion and returns a :class:`CheckResult`.
``run_all`` executes them in order; ``quick=True`` shrinks every sample
size by about an order of magnitude for a smoke run. Quick mode scales the
statistical tolerances with the sample size and is not an acceptance run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import analytic_fpt as af
from .analytic_fpt import FptLaw
from .core_model import (
    Constant,
    DetectorParams,
    ModulatedPair,
    Piecewise,
    SpectrumQuery,
    planck_density,
)
from .fokker_planck import PdeGrid, numeric_cdf, solve
from .montecarlo import RunConfig, sample_fpt, simulate_coincidence, simulate_detector
from .stats import (
    coincidence_rate,
    empirical_rate,
    ks_statistic,
    median_gap,
    pooled_rate,
    shuffled_coincidence_rate,
)

SEED = 20240601
RATE_LAWS = [(1.0, 1.0, 1.0), (1.0, 2.0, 1.0), (2.0, 1.0, 0.5), (1.0, 1.0, 5.0)]


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.name} ({self.seconds:.1f}s): {self.detail}"


def _fpt_step(law: FptLaw) -> float:
    # resolve the fastest passages: sigma * sqrt(dt) at most 5% of the threshold
    return min(1e-3, 2.5e-3 * (law.threshold / law.noise_scale) ** 2)


def check_rate_law(quick: bool = False) -> CheckResult:
    horizon = 1e3 if quick else 1e4
    parts = []
    ok = True
    estimates = {}
    for k, (em, i_s, sigma) in enumerate(RATE_LAWS):
        train = simulate_detector(
            Constant(i_s), DetectorParams(em, sigma), RunConfig(SEED + k, 1e-3, horizon)
        )
        est = empirical_rate(train)
        estimates[(em, i_s, sigma)] = est
        target = i_s / em
        z = (est.rate - target) / est.std_error
        ok &= abs(z) < 3
        # informational only: renewal count spread is sqrt(CV^2) times the Poisson one
        cv = math.sqrt(af.variance_fpt(FptLaw(em, i_s, sigma))) / af.mean_fpt(FptLaw(em, i_s, sigma))
        parts.append(
            f"({em:g},{i_s:g},{sigma:g}) R={est.rate:.4f} vs {target:g} z={z:+.2f} (renewal z={z / cv:+.2f})"
        )
    lo, hi = estimates[(1.0, 1.0, 1.0)], estimates[(1.0, 1.0, 5.0)]
    z = (lo.rate - hi.rate) / math.hypot(lo.std_error, hi.std_error)
    ok &= abs(z) < 3
    parts.append(f"sigma 1 vs 5 z={z:+.2f}")
    return CheckResult(1, "rate law R = I_s/E_m", ok, "; ".join(parts))


def check_zpf_subtraction(quick: bool = False) -> CheckResult:
    horizons = [1e2, 1e3, 1e4]
    replicas = 25 if quick else 250
    p = DetectorParams(1.0, 1.0)
    cfg = RunConfig(SEED + 10, 1e-2, horizons[-1])
    trains = [simulate_detector(Constant(0.0), p, cfg, stream=r) for r in range(replicas)]
    rates = [pooled_rate(trains, h).rate for h in horizons]
    decreasing = all(b < a for a, b in zip(rates, rates[1:]))
    small = rates[-1] < 0.05
    med = median_gap(trains)
    target = af.median_fpt(FptLaw(1.0, 0.0, 1.0))
    rel = abs(med - target) / target
    tol = 0.05 * (math.sqrt(10) if quick else 1.0)
    ok = decreasing and small and rel < tol
    detail = (
        "rates " + ", ".join(f"H={h:g}:{r:.4f}" for h, r in zip(horizons, rates))
        + f"; median gap {med:.4f} vs {target:.4f} ({rel:.1%}, {sum(map(len, trains))} counts)"
    )
    return CheckResult(2, "ZPF subtraction at zero signal", ok, detail)


def check_distribution(quick: bool = False) -> CheckResult:
    n = 1000 if quick else 10_000
    crit = 1.63 / math.sqrt(n)
    parts = []
    ok = True
    for k, (em, i_s, sigma) in enumerate(RATE_LAWS):
        law = FptLaw(em, i_s, sigma)
        x = np.sort(sample_fpt(law, RunConfig(SEED + 20 + k, _fpt_step(law), 1e3), n))
        d = ks_statistic(x, lambda s: af.cdf(law, s))
        ok &= d < crit
        parts.append(f"({em:g},{i_s:g},{sigma:g}) D={d:.4f}")
    return CheckResult(3, "first-passage law (KS)", ok, "; ".join(parts) + f"; critical {crit:.4f}")


def variance_by_quadrature(law: FptLaw) -> tuple[float, float]:
    """Mean and variance of the first-passage time from the density alone."""
    f = lambda t, p: t**p * af.pdf(law, t)
    m1 = integrate.quad(f, 0, np.inf, args=(1,), epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    m2 = integrate.quad(f, 0, np.inf, args=(2,), epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return m1, m2 - m1 * m1


def check_moments(quick: bool = False) -> CheckResult:
    n = 10_000 if quick else 100_000
    widen = math.sqrt(100_000 / n)
    law = FptLaw(1.0, 1.0, 1.0)
    x = sample_fpt(law, RunConfig(SEED + 30, 1e-3, 1e3), n)
    mean, var = float(x.mean()), float(x.var(ddof=1))
    q_mean, q_var = variance_by_quadrature(law)
    ok = abs(mean - q_mean) <= 0.01 * widen and abs(var - q_var) <= 0.03 * widen
    detail = f"mean {mean:.4f} (target {q_mean:.4f}), variance {var:.4f} (quadrature {q_var:.4f}), n={n}"
    return CheckResult(4, "mean and variance of passage time", ok, detail)


def _pde_error(law: FptLaw, n_cells: int, dt: float) -> tuple[float, object]:
    sol = solve(law, PdeGrid.for_law(law, n_cells, dt, 5.0))
    ts = np.linspace(0.1, 5.0, 491)
    err = max(abs(numeric_cdf(sol, t) - af.cdf(law, t)) for t in ts)
    return err, sol


def check_pde_triangle(quick: bool = False) -> CheckResult:
    law = FptLaw(1.0, 1.0, 1.0)
    n_ref, dt_ref = (1024, 2e-3) if quick else (2048, 1e-3)
    err_ref, _ = _pde_error(law, n_ref, dt_ref)
    err_half, _ = _pde_error(law, n_ref // 2, 2 * dt_ref)
    ratio = err_half / err_ref
    ok = err_ref < 1e-3 and ratio >= 3
    detail = f"max|P_pde - P| = {err_ref:.2e} at ({n_ref}, {dt_ref:g}); halved resolution {err_half:.2e} (x{ratio:.2f})"
    return CheckResult(5, "PDE vs closed form", ok, detail)


def check_normalisation(quick: bool = False) -> CheckResult:
    worst_quad = 0.0
    boundary_exact = True
    for law in (FptLaw(1, 1, 1), FptLaw(1, 0, 1), FptLaw(2, 1, 0.5), FptLaw(1, 2, 3)):
        for t in (0.05, 0.5, 1.0, 3.0, 10.0):
            # split at the drifting peak so quad does not miss it
            peak = min(law.drift * t, law.threshold)
            f = lambda e: af.transition_density(law, e, t)
            left = integrate.quad(f, -np.inf, peak, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
            right = integrate.quad(f, peak, law.threshold, epsabs=1e-14, epsrel=1e-13, limit=400)[0]
            worst_quad = max(worst_quad, abs(left + right + af.cdf(law, t) - 1))
            boundary_exact &= af.transition_density(law, law.threshold, t) == 0.0
    law = FptLaw(1, 1, 1)
    n_cells, dt = (512, 4e-3) if quick else (2048, 1e-3)
    sol = solve(law, PdeGrid.for_law(law, n_cells, dt, 5.0), store_every=1)
    masses = np.trapezoid(sol.densities, dx=sol.grid.spacing, axis=1)
    worst_pde = float(np.max(np.abs(masses + sol.absorbed - 1)))
    barrier_zero = bool(np.all(sol.densities[:, -1] == 0.0))
    ok = worst_quad < 1e-8 and worst_pde < 1e-6 and boundary_exact and barrier_zero
    detail = (
        f"analytic |int rho + P - 1| <= {worst_quad:.1e}; PDE per step <= {worst_pde:.1e}; "
        f"rho(E_m)=0 analytic {boundary_exact}, PDE barrier column zero {barrier_zero}"
    )
    return CheckResult(6, "normalisation and absorbing boundary", ok, detail)


def check_time_varying(quick: bool = False) -> CheckResult:
    m = Piecewise([50.0], [1.0, 3.0])
    train = simulate_detector(m, DetectorParams(1.0, 0.1), RunConfig(SEED + 60, 1e-3, 100.0))
    first = train.count_in(0.0, 50.0)
    second = len(train) - first
    ok = abs(first - 50) <= 5 and abs(second - 150) <= 15
    return CheckResult(7, "time-varying signal", ok, f"counts {first} in [0,50) (50), {second} in [50,100] (150)")


def check_coincidence(quick: bool = False) -> CheckResult:
    horizon = 1e4 if quick else 5e4
    window = 0.1
    tol = 0.10 * (math.sqrt(5) if quick else 1.0)
    p = DetectorParams(1.0, 1.0)
    parts = []
    ok = True
    for k, rho in enumerate((0.0, 0.8)):
        # relaxation time 20 = 20 mean gaps
        m = ModulatedPair(mean=1.0, relaxation_time=20.0, amplitude=0.5, cross_correlation=rho)
        run = simulate_coincidence(m, p, p, RunConfig(SEED + 80 + k, 1e-3, horizon))
        a, b = run
        measured = coincidence_rate(a, b, 0.0, window).rate / shuffled_coincidence_rate(
            a, b, 0.0, window, seed=SEED + k
        ).rate
        i1, i2 = run.path.first, run.path.second
        predicted = float(np.mean(i1 * i2) / (np.mean(i1) * np.mean(i2)))
        rel = abs(measured / predicted - 1)
        ok &= rel < tol and run.valid
        parts.append(f"rho={rho}: ratio {measured:.4f} vs <I1I2>/<I1><I2> {predicted:.4f} ({rel:.1%})")
    return CheckResult(8, "coincidence proportional to <I1 I2>", ok, "; ".join(parts))


def check_planck(quick: bool = False) -> CheckResult:
    # machine precision for a difference: a few ulp of the larger operand
    worst = 0.0
    for w in (0.1, 1.0, 10.0):
        for temp in (0.0, 1.0, 10.0):
            with_zpf = planck_density(SpectrumQuery(w, temp, True))
            without = planck_density(SpectrumQuery(w, temp, False))
            ulps = abs(with_zpf - without - w**3 / (2 * math.pi**2)) / np.spacing(with_zpf)
            worst = max(worst, ulps)
    w, temp = 1e-4, 1.0
    rj = w * w * temp / math.pi**2
    rj_err = abs(planck_density(SpectrumQuery(w, temp, False)) / rj - 1)
    ok = worst <= 4 and rj_err < 1e-3
    return CheckResult(
        9, "Planck spectrum", ok, f"ZPF term error {worst:.0f} ulp; Rayleigh-Jeans ratio err {rj_err:.1e}"
    )


CHECKS: list[Callable[[bool], CheckResult]] = [
    check_rate_law,
    check_zpf_subtraction,
    check_distribution,
    check_moments,
    check_pde_triangle,
    check_normalisation,
    check_time_varying,
    check_coincidence,
    check_planck,
]


def timed(check: Callable[[bool], CheckResult], quick: bool = False) -> CheckResult:
    start = time.perf_counter()
    res = check(quick)
    return CheckResult(res.number, res.name, res.passed, res.detail, time.perf_counter() - start)


def run_all(quick: bool = False, echo: Callable[[str], None] | None = None) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        res = timed(check, quick)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
