"""Threshold photodetection driven by signal plus zeropoint noise.

A detector integrates incoming energy, is kicked by white vacuum noise, and
fires when the accumulated energy first reaches a threshold. The package
provides the closed-form first-passage law, a finite-difference solver for
the same problem, a Monte Carlo simulator for count trains (including two
detectors on correlated beams) and the estimators that compare them.
"""

from .analytic_fpt import (
    FptLaw,
    cdf,
    mean_fpt,
    median_fpt,
    pdf,
    rate,
    survival,
    transition_density,
    variance_fpt,
)
from .core_model import (
    Constant,
    DetectorParams,
    ModulatedPair,
    PairPath,
    Piecewise,
    SignalModel,
    SpectrumQuery,
    cumulative_knots,
    integrated_signal,
    planck_density,
    realize_pair,
    signal_from_json,
    signal_intensity,
    signal_to_json,
)
from .errors import ConfigurationError, DomainError, InfiniteMeanError, UsageError
from .fokker_planck import PdeGrid, PdeSolution, numeric_cdf, solve
from .montecarlo import (
    CoincidenceRun,
    EventTrain,
    RunConfig,
    sample_fpt,
    simulate_coincidence,
    simulate_detector,
)
from .stats import (
    RateEstimate,
    coincidence_rate,
    cross_correlation,
    empirical_rate,
    ks_statistic,
    median_gap,
    pooled_rate,
    shuffled_coincidence_rate,
)

__version__ = "0.1.0"
