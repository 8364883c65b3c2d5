import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from catwitness.estimator import estimate
from catwitness.kernels import SqueezedFockKernel, pattern_f0, squeezed_frame
from catwitness.scheduler import (
    UnderpopulatedBinError,
    VarianceProfile,
    empirical_variance_profile,
    optimal_density,
    optimal_schedule,
    predicted_variances,
    squeezed_thermal_density,
    squeezed_thermal_schedule,
)
from catwitness.simulator import HomodyneSampler, PhaseSchedule, sample_batches, sample_records
from catwitness.states import SqueezedThermalSpec, quadrature_pdf, squeezed_thermal_density_matrix

import quadrature as q


def inverse_a4_profile(r, n=4096):
    grid = np.arange(n) * np.pi / n
    return VarianceProfile(grid, squeezed_frame(grid, r, 1.0).a ** -4)


def test_profile_validation():
    with pytest.raises(ValueError):
        VarianceProfile([0.0, 1.0], [1.0, -0.1])
    with pytest.raises(ValueError):
        VarianceProfile([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        VarianceProfile([0.0, 3.2], [1.0, 1.0])


def test_profile_interpolation_is_periodic_and_floored():
    p = VarianceProfile([0.0, np.pi / 2], [1.0, 3.0])
    assert p(np.pi / 4) == pytest.approx(2.0)
    assert p(3 * np.pi / 4) == pytest.approx(2.0)
    assert np.all(p(np.linspace(0, np.pi, 50)) >= 0)


def test_flat_profile_gives_uniform_schedule():
    p = VarianceProfile(np.arange(30) * np.pi / 30, np.full(30, 2.5))
    s = optimal_schedule(p, 3000)
    assert s.kind == "density"
    assert np.all(s.counts == 100)
    np.testing.assert_allclose(s.density(), 3000 / np.pi)
    v_min, v_c = predicted_variances(p, 3000)
    assert v_min == pytest.approx(v_c, rel=1e-14)


def test_zero_profile_is_degenerate():
    with pytest.raises(ValueError, match="zero"):
        optimal_schedule(VarianceProfile([0.0, 1.0], [0.0, 0.0]), 100)


@pytest.mark.parametrize("r", [0.3, 0.5, 0.9])
def test_inverse_a4_profile(r):
    p = inverse_a4_profile(r)
    m = optimal_density(p, 1e4)
    th = np.linspace(0, np.pi, 13, endpoint=False)
    a = squeezed_frame(th, r, 1.0).a
    # normalization comes from the 512-point refinement of the profile
    np.testing.assert_allclose(m(th), 1e4 / (np.pi * a**2), rtol=1e-5)
    assert m(np.pi / 2) / m(0.0) == pytest.approx(np.exp(4 * r), rel=1e-6)
    v_min, v_c = predicted_variances(p, 1e4)
    assert v_c / v_min == pytest.approx(np.cosh(2 * r), rel=1e-5)
    # the minimum is (phase average of a^-2)^2 / M = 1 / M
    assert v_min == pytest.approx(1e-4, rel=1e-5)


@settings(max_examples=100)
@given(st.lists(st.floats(0.0, 100.0), min_size=2, max_size=30))
def test_cauchy_schwarz(vf):
    vf = np.array(vf)
    if not np.any(vf > 0):
        return
    p = VarianceProfile(np.arange(vf.size) * np.pi / vf.size, vf)
    v_min, v_c = predicted_variances(p, 100)
    assert v_min <= v_c * (1 + 1e-12)


@settings(max_examples=50)
@given(st.lists(st.floats(0.01, 100.0), min_size=2, max_size=30), st.floats(1e-6, 1e6))
def test_schedule_invariant_under_rescaling(vf, c):
    vf = np.array(vf)
    grid = np.arange(vf.size) * np.pi / vf.size
    a = optimal_schedule(VarianceProfile(grid, vf), 5000)
    b = optimal_schedule(VarianceProfile(grid, c * vf), 5000)
    assert np.array_equal(a.counts, b.counts)


class TestSqueezedThermalSchedule:
    def test_unsqueezed_is_uniform(self):
        s = squeezed_thermal_schedule(0.0, 6400)
        assert np.all(s.counts == 100)

    def test_density_ratio(self):
        assert squeezed_thermal_density(np.pi / 2, 0.6, 1.0) / squeezed_thermal_density(0.0, 0.6, 1.0) == \
            pytest.approx(np.exp(2.4), rel=1e-12)

    @pytest.mark.parametrize("r", [0.3, 0.6, 1.5])
    def test_density_integrates_to_total(self, r):
        # the periodic trapezoid rule converges spectrally for this integrand
        th = np.arange(4096) * np.pi / 4096
        assert np.pi * np.mean(squeezed_thermal_density(th, r, 1e4)) == pytest.approx(1e4, rel=1e-9)

    @pytest.mark.parametrize("r", [0.3, -0.6, 1.5])
    def test_cell_masses(self, r):
        s = squeezed_thermal_schedule(r, 10**6, 16)
        assert s.total == 10**6
        # masses are the increments of vartheta, so counts track m(theta) * width
        th = np.linspace(-np.pi / 32, np.pi / 32, 2001)
        for t, n in zip(s.theta, s.counts):
            expected = 1e6 / np.pi * trapezoid(squeezed_frame(t + th, r, 1.0).a ** -2, t + th)
            assert n == pytest.approx(expected, abs=1.0 + 1e-6 * expected)


def test_vacuum_profile_is_flat():
    recs = sample_records(q.state("vacuum"), PhaseSchedule.uniform(20_000, 20), 1.0, seed=2)
    p = empirical_variance_profile(recs, lambda x, th: pattern_f0(x), 20)
    assert p.vf.max() / p.vf.min() < 1.3


def test_underpopulated_bin():
    recs = sample_records(q.state("vacuum"), PhaseSchedule([0.0, 1.0], [100, 10]), 1.0, seed=2)
    with pytest.raises(UnderpopulatedBinError, match="bin 1 "):
        empirical_variance_profile(recs, lambda x, th: pattern_f0(x), 20)


def test_empirical_profile_matches_quadrature():
    r = 0.6
    rho = q.state("squeezed-thermal")
    bins = 16
    recs = sample_records(rho, PhaseSchedule.uniform(16 * 4000, bins), 1.0, seed=12)
    kernel = SqueezedFockKernel(0, r, 1.0)
    p = empirical_variance_profile(recs, kernel, bins)
    x, w = np.polynomial.legendre.leggauss(801)
    x, w = 12 * x, 12 * w
    exact = np.empty(bins)
    sigma = np.empty(bins)
    for b, th in enumerate(p.grid):
        pdf = quadrature_pdf(rho, th, 1.0, x)
        f = kernel(x, th)
        m1, m2, m3, m4 = (np.sum(w * pdf * f**k) for k in (1, 2, 3, 4))
        exact[b] = m2 - m1**2
        mu4 = m4 - 4 * m3 * m1 + 6 * m2 * m1**2 - 3 * m1**4
        sigma[b] = np.sqrt((mu4 - exact[b] ** 2) / 4000)
    assert np.all(np.abs(p.vf - exact) < 4 * sigma)
    # shape: the phase-invariant thermal core makes V_f exactly V_n / a^4
    inv_a4 = squeezed_frame(p.grid, r, 1.0).a ** -4
    np.testing.assert_allclose(exact / inv_a4, (exact / inv_a4)[0], rtol=1e-8)
    vn = np.sum(p.vf * inv_a4 / sigma**2) / np.sum(inv_a4**2 / sigma**2)
    assert np.all(np.abs(p.vf - vn * inv_a4) < 4 * sigma)


@pytest.mark.parametrize("r, cutoff", [(0.3, 64), (0.6, 64), (0.9, 100)])
def test_variance_reduction_end_to_end(r, cutoff):
    rho = squeezed_thermal_density_matrix(SqueezedThermalSpec.thermal(r, 0.2), cutoff)
    kernel = SqueezedFockKernel(0, r, 1.0)
    sampler = HomodyneSampler(rho)
    m, n = 1000, 2000
    spread = {}
    for name, sched, seed in [("uniform", PhaseSchedule.uniform(m, 32), 1),
                              ("optimal", squeezed_thermal_schedule(r, m, 32), 2)]:
        vals = [estimate(kernel, b, sched).value for b in sample_batches(rho, sched, 1.0, seed, n, sampler)]
        spread[name] = np.var(vals, ddof=1)
    assert spread["uniform"] / spread["optimal"] == pytest.approx(np.cosh(2 * r), rel=0.15)
