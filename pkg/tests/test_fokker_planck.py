import numpy as np
import pytest

from photocount import ConfigurationError, DomainError, FptLaw, PdeGrid, numeric_cdf, solve
from photocount import analytic_fpt as af
from photocount.fokker_planck import required_e_min


@pytest.fixture(scope="module")
def reference():
    law = FptLaw(1.0, 1.0, 1.0)
    return solve(law, PdeGrid.for_law(law, 2048, 1e-3, 5.0), store_every=100)


def test_grid_invariants():
    with pytest.raises(DomainError):
        PdeGrid(0.5, 1.0, 64, 1e-3, 1.0)
    with pytest.raises(DomainError):
        PdeGrid(-1.0, 1.0, 8, 1e-3, 1.0)
    with pytest.raises(DomainError):
        PdeGrid(-1.0, 1.0, 64, 0.0, 1.0)
    with pytest.raises(DomainError):
        PdeGrid(-1.0, 1.0, 64, 1e-2, 1e-3)


def test_grid_puts_origin_on_node():
    law = FptLaw(1.0, 1.0, 1.0)
    g = PdeGrid.for_law(law, 2048, 1e-3, 5.0)
    assert g.e_max == 1.0 and g.e_min <= required_e_min(law, 5.0)
    k = -g.e_min / g.spacing
    assert k == pytest.approx(round(k), abs=1e-9)


def test_density_matches_images(reference):
    row = np.argmin(np.abs(reference.times - 1.0))
    assert reference.times[row] == pytest.approx(1.0)
    exact = af.transition_density(reference.law, reference.grid.energies, 1.0)
    assert np.max(np.abs(reference.densities[row] - exact)) < 1e-3


def test_start(reference):
    assert reference.mass(0) == pytest.approx(1.0, abs=1e-12)
    assert numeric_cdf(reference, 0.0) == 0.0
    assert reference.absorbed[1] < 1e-6


def test_barrier_column_zero(reference):
    assert np.all(reference.densities[:, -1] == 0.0)


def test_non_negative(reference):
    assert reference.densities.min() >= 0.0
    assert reference.min_density >= -1e-12


def test_conservation_every_stored_row(reference):
    idx = np.searchsorted(reference.step_times, reference.times - 1e-12)
    for row, k in enumerate(idx):
        assert abs(reference.mass(row) + reference.absorbed[k] - 1.0) < 1e-6


def test_cdf_triangle(reference):
    ts = np.linspace(0.1, 5.0, 99)
    err = max(abs(numeric_cdf(reference, t) - af.cdf(reference.law, t)) for t in ts)
    assert err < 1e-3


def test_cdf_at_one(reference):
    assert numeric_cdf(reference, 1.0) == pytest.approx(af.cdf(reference.law, 1.0), abs=1e-3)


def test_cdf_monotone(reference):
    assert np.all(np.diff(reference.absorbed) >= -1e-8)


def test_strong_drift_absorbs_everything():
    law = FptLaw(1.0, 2.0, 1.0)
    sol = solve(law, PdeGrid.for_law(law, 1024, 2e-3, 10.0))
    assert abs(numeric_cdf(sol, 10.0) - 1.0) < 1e-4


def test_out_of_horizon(reference):
    with pytest.raises(DomainError):
        numeric_cdf(reference, 5.5)
    with pytest.raises(DomainError):
        numeric_cdf(reference, -0.1)


def test_convergence_order():
    law = FptLaw(1.0, 1.0, 1.0)
    ts = np.linspace(0.1, 2.0, 39)

    def error(n, dt):
        sol = solve(law, PdeGrid.for_law(law, n, dt, 2.0))
        return max(abs(numeric_cdf(sol, t) - af.cdf(law, t)) for t in ts)

    coarse, fine = error(256, 8e-3), error(512, 4e-3)
    assert coarse / fine >= 3


def test_peclet_guard():
    law = FptLaw(1.0, 1.0, 0.05)
    with pytest.raises(ConfigurationError, match="n_cells=64"):
        solve(law, PdeGrid.for_law(law, 64, 1e-2, 1.0))


def test_grid_must_end_at_threshold():
    law = FptLaw(1.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        solve(law, PdeGrid(-30.0, 2.0, 512, 1e-2, 1.0))


def test_grid_must_reach_far_enough_down():
    law = FptLaw(1.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        solve(law, PdeGrid(-2.0, 1.0, 512, 1e-2, 5.0))


def test_zero_drift():
    law = FptLaw(1.0, 0.0, 1.0)
    sol = solve(law, PdeGrid.for_law(law, 1024, 2e-3, 3.0))
    assert numeric_cdf(sol, 3.0) == pytest.approx(af.cdf(law, 3.0), abs=1e-3)
