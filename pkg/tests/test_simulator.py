import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from catwitness import simulator
from catwitness.simulator import (
    EnvelopeError,
    HomodyneSampler,
    PhaseSchedule,
    QuadratureRecords,
    fold_phase,
    sample_batches,
    sample_records,
)
from catwitness.states import fock_density_matrix, quadrature_pdf

import quadrature as q


def single_phase(theta, count):
    return PhaseSchedule([theta], [count])


@pytest.mark.parametrize("theta, x, expected", [
    (3 * np.pi / 2, 1.0, (np.pi / 2, -1.0)),
    (0.3, -2.0, (0.3, -2.0)),
    (np.pi, 0.5, (0.0, -0.5)),
    (-0.5, 1.0, (np.pi - 0.5, -1.0)),
])
def test_fold_phase_examples(theta, x, expected):
    assert fold_phase(theta, x) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-50, 50), st.floats(-10, 10))
def test_fold_phase_properties(theta, x):
    t, y = fold_phase(theta, x)
    assert 0.0 <= t < np.pi
    assert abs(y) == abs(x)
    assert fold_phase(t, y) == (t, y)
    # folding respects x_{theta + pi} = -x_theta
    t2, y2 = fold_phase(theta + np.pi, -x)
    assert t2 == pytest.approx(t, abs=1e-12) or abs(abs(t2 - t) - np.pi) < 1e-12


def test_records_validation():
    with pytest.raises(ValueError):
        QuadratureRecords([0.1, 0.2], [1.0])
    with pytest.raises(ValueError):
        QuadratureRecords([0.1], [np.nan])
    r = QuadratureRecords([0.1], [1.0]) + QuadratureRecords([0.2, 4.0], [2.0, 3.0])
    assert len(r) == 3
    np.testing.assert_allclose(r.folded().xprime, [1.0, 2.0, -3.0])


class TestPhaseSchedule:
    def test_uniform(self):
        s = PhaseSchedule.uniform(1003, 10)
        assert s.total == 1003
        assert set(np.unique(s.counts)) == {100, 101}
        np.testing.assert_allclose(s.theta, np.arange(10) * np.pi / 10)
        np.testing.assert_allclose(s.widths, np.pi / 10)

    def test_validation(self):
        with pytest.raises(ValueError):
            PhaseSchedule([0.0, 4.0], [1, 1])
        with pytest.raises(ValueError):
            PhaseSchedule([0.0, 1.0], [0, 0])
        with pytest.raises(ValueError):
            PhaseSchedule([0.5, 0.5], [1, 1])
        with pytest.raises(ValueError):
            PhaseSchedule.uniform(0)

    @given(st.lists(st.floats(0.0, 10.0), min_size=2, max_size=40), st.integers(1, 10**6))
    def test_from_masses_total_and_density(self, masses, total):
        masses = np.array(masses)
        if masses.sum() <= 0:
            return
        theta = np.arange(masses.size) * np.pi / masses.size
        s = PhaseSchedule.from_masses(theta, masses, total)
        assert s.total == total
        # largest remainder never misses a quota by one sample or more
        assert np.all(np.abs(s.counts - total * masses / masses.sum()) < 1)
        assert np.sum(s.density() * s.widths) == pytest.approx(total, rel=1e-9)

    def test_nonuniform_cells(self):
        s = PhaseSchedule([0.0, 0.5, 2.0], [1, 1, 1])
        np.testing.assert_allclose(s.widths, [(0.5 + np.pi - 2.0) / 2, 1.0, (1.5 + np.pi - 2.0) / 2])
        assert s.widths.sum() == pytest.approx(np.pi)

    def test_weight_lookup(self):
        s = PhaseSchedule.from_masses(np.arange(4) * np.pi / 4, [1, 2, 3, 4], 1000)
        w = s.weight_lookup(np.array([0.0, np.pi / 4, np.pi - 1e-12]))
        dens = s.density()
        np.testing.assert_allclose(w, [1000 / (np.pi * dens[0]), 1000 / (np.pi * dens[1]), 1000 / (np.pi * dens[0])])
        with pytest.raises(ValueError, match="not part of the schedule"):
            s.weight_lookup(np.array([0.3]))
        z = PhaseSchedule([0.0, 1.0], [0, 5], kind="density")
        with pytest.raises(ValueError, match="zero"):
            z.weight_lookup(np.array([0.0]))


def test_vacuum_variance():
    recs = sample_records(fock_density_matrix(0), PhaseSchedule.uniform(100_000), 1.0, seed=3)
    assert np.var(recs.xprime) == pytest.approx(0.5, abs=0.01)


def test_odd_cat_goodness_of_fit():
    rho = q.state("odd-cat")
    x = sample_records(rho, single_phase(np.pi / 2, 50_000), 1.0, seed=5).xprime
    edges = np.concatenate([[-np.inf], np.linspace(-3.5, 3.5, 36), [np.inf]])
    grid = np.linspace(-12, 12, 24001)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(grid) * (quadrature_pdf(rho, np.pi / 2, 1.0, grid)[1:]
                                                                 + quadrature_pdf(rho, np.pi / 2, 1.0, grid)[:-1]))])
    probs = np.diff(np.interp(edges, grid, cdf, left=0.0, right=1.0))
    observed = np.histogram(x, edges)[0]
    assert stats.chisquare(observed, probs / probs.sum() * x.size).pvalue > 1e-3


@pytest.mark.parametrize("name", ["vacuum", "odd-cat", "cat-phi-pi/2", "squeezed-photon", "squeezed-thermal"])
@pytest.mark.parametrize("eta", [1.0, 0.8])
def test_first_two_moments(name, eta):
    rho = q.state(name)
    sampler = HomodyneSampler(rho)
    for k, theta in enumerate((0.0, np.pi / 4, np.pi / 2)):
        x = sample_records(rho, single_phase(theta, 100_000), eta, seed=10 + k, sampler=sampler).xprime
        m, v = rho.quadrature_moments(theta)
        mean, var = np.sqrt(eta) * m, eta * v + (1 - eta) / 2
        se_mean = np.sqrt(var / x.size)
        se_var = np.sqrt((np.mean((x - x.mean()) ** 4) - np.var(x) ** 2) / x.size)
        assert abs(x.mean() - mean) < 4 * se_mean
        assert abs(np.var(x, ddof=1) - var) < 4 * se_var


def test_determinism_and_schedule_fidelity():
    rho = q.state("odd-cat")
    sched = PhaseSchedule.from_masses(np.arange(7) * np.pi / 7, [1, 3, 2, 5, 1, 1, 4], 5000)
    a = sample_records(rho, sched, 0.8, seed=42)
    b = sample_records(rho, sched, 0.8, seed=42)
    assert np.array_equal(a.theta, b.theta) and np.array_equal(a.xprime, b.xprime)
    c = sample_records(rho, sched, 0.8, seed=43)
    assert not np.array_equal(a.xprime, c.xprime)
    counts = {t: n for t, n in zip(*np.unique(a.theta, return_counts=True))}
    assert [counts.get(t, 0) for t in sched.theta] == list(sched.counts)


def test_batches_are_independent_streams():
    rho = q.state("vacuum")
    batches = sample_batches(rho, PhaseSchedule.uniform(200, 4), 1.0, seed=1, n_batches=3)
    assert len(batches) == 3
    assert all(len(b) == 200 for b in batches)
    assert not np.array_equal(batches[0].xprime, batches[1].xprime)


def test_squeezed_quadrature_envelope():
    # strongly squeezed quadratures of a Fock-truncated state have tails set by
    # the cutoff, not by the quadrature variance; the sampler must cope
    rho = q.state("squeezed-thermal")
    x = sample_records(rho, single_phase(np.pi / 2, 20_000), 1.0, seed=9).xprime
    assert np.var(x) == pytest.approx(rho.quadrature_moments(np.pi / 2)[1], rel=0.05)


def test_envelope_failure(monkeypatch):
    monkeypatch.setattr(simulator, "MIN_ACCEPTANCE", 0.999)
    with pytest.raises(EnvelopeError, match="acceptance rate"):
        sample_records(q.state("odd-cat"), single_phase(0.0, 10), 1.0, seed=0)


def test_eta_domain():
    with pytest.raises(ValueError):
        sample_records(q.state("vacuum"), single_phase(0.0, 10), 1.5, seed=0)
