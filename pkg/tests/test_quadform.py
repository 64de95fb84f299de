import math
import warnings

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import sample_spectral
from uvjitter import JitterSpec, PowerDensity, QuadraticModel, SpectralForm
from uvjitter.errors import InputError, PointMassDistribution
from uvjitter.numerics import make_rng
from uvjitter.quadform import (cumulants, decompose, fit_gamma_series,
                               moments_from_cumulants, sample_power)


def model_from(gmat, shift=np.zeros(4), f0=1.0):
    gmat = np.asarray(gmat, dtype=float)
    shift = np.asarray(shift, dtype=float)
    e = -float(shift @ gmat @ shift)
    return QuadraticModel(f0, -2 * gmat @ shift, gmat, shift, e)


def l1_on_grid(f, g, lo, hi, n=200_001):
    x = np.linspace(lo, hi, n)
    return float(np.trapezoid(np.abs(f(x) - g(x)), x))


class TestDecompose:
    def test_central_one_dimensional(self):
        sigma = 0.3
        form = decompose(model_from(np.diag([1 / sigma**2, 0, 0, 0])),
                         JitterSpec(sigma=(sigma, 0.1, 0.1, 0.1)))
        assert form.neg == ()
        assert len(form.pos) == 1
        lam, d = form.pos[0]
        assert lam == pytest.approx(1.0) and d == pytest.approx(0.0, abs=1e-30)

    def test_indefinite_split(self):
        form = decompose(model_from(np.diag([1.0, -1.0, 0, 0])), JitterSpec.isotropic(1.0))
        assert form.pos == ((1.0, 0.0),) and form.neg == ((1.0, 0.0),)

    def test_point_mass(self, baseline_model):
        with pytest.raises(PointMassDistribution) as info:
            decompose(baseline_model, JitterSpec())
        assert info.value.value == pytest.approx(baseline_model.f0, rel=1e-12)
        dens = PowerDensity.from_model(baseline_model, JitterSpec())
        assert dens.is_point_mass
        assert dens.cdf(baseline_model.f0 * (1 - 1e-9)) == 0.0
        assert dens.cdf(baseline_model.f0 * (1 + 1e-9)) == 1.0

    def test_zero_sigma_coordinate_collapses(self, baseline_model):
        spec = JitterSpec(sigma=(0.03, 0.0, 0.03, 0.03))
        form = decompose(baseline_model, spec)
        rng = make_rng(4)
        x = sample_power(baseline_model, spec, rng, 200_000)
        assert abs(x.mean() - form.mean) < 4 * math.sqrt(form.variance / x.size)
        assert len(form.pos) + len(form.neg) == 3

    def test_cumulants_match_direct_samples(self, baseline_model):
        spec = JitterSpec.isotropic(0.04)
        form = decompose(baseline_model, spec)
        x = sample_power(baseline_model, spec, make_rng(5), 100_000)
        n = x.size
        k1 = form.mean
        k2 = form.variance
        k3 = cumulants(form.pos, 3) - cumulants(form.neg, 3)
        assert abs(x.mean() - k1) < 3 * math.sqrt(k2 / n)
        c = x - x.mean()
        se2 = math.sqrt(np.var(c**2) / n)
        assert abs(np.mean(c**2) - k2) < 3 * se2
        se3 = math.sqrt(np.var(c**3) / n)
        assert abs(np.mean(c**3) - k3) < 3 * se3


class TestCumulantsMoments:
    def test_central_chi2(self):
        assert [cumulants([(1.0, 0.0)], s) for s in (1, 2, 3)] == [1, 2, 8]

    def test_noncentral_mean(self):
        assert cumulants([(1.0, 4.0)], 1) == 5.0

    def test_invalid_order(self):
        with pytest.raises(InputError):
            cumulants([(1.0, 0.0)], 0)

    def test_random_part_against_samples(self):
        rng = make_rng(9)
        part = [(rng.uniform(0.2, 2), rng.uniform(0, 3)) for _ in range(3)]
        x = sample_spectral(SpectralForm(tuple(part), (), 0.0), 1_000_000, rng)
        stats_ = [x.mean(), x.var(), stats.moment(x, 3)]
        c = x - x.mean()
        ses = [x.std() / 1000, math.sqrt(np.var(c**2) / x.size), math.sqrt(np.var(c**3) / x.size)]
        for s, (est, se) in enumerate(zip(stats_, ses), 1):
            assert abs(est - cumulants(part, s)) < 3 * se

    def test_constant(self):
        np.testing.assert_allclose(moments_from_cumulants([2.0, 0, 0, 0]), [2, 4, 8, 16])

    def test_gaussian(self):
        np.testing.assert_allclose(moments_from_cumulants([0, 1.0, 0, 0]), [0, 1, 0, 3])

    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=8))
    def test_bell_polynomial_oracle(self, kappa):
        syms = sympy.symbols(f"k1:{len(kappa) + 1}")
        subs = dict(zip(syms, [sympy.Rational(k) for k in kappa]))
        expected = []
        for n in range(1, len(kappa) + 1):
            bell = sum(sympy.bell(n, j, syms[: n - j + 1]) for j in range(1, n + 1))
            expected.append(float(bell.subs(subs)))
        np.testing.assert_allclose(moments_from_cumulants(kappa), expected, rtol=1e-10, atol=1e-10)


class TestGammaSeries:
    def test_reproduces_exact_gamma(self):
        # chi2_1 with scale 3 is exactly Gamma(1/2, 6)
        gs = fit_gamma_series([(3.0, 0.0)], 6)
        assert gs.alpha == pytest.approx(0.5) and gs.beta == pytest.approx(6.0)
        assert gs.coeffs[0] == pytest.approx(1.0, abs=1e-8)
        assert max(abs(c) * gs.beta**i for i, c in enumerate(gs.coeffs) if i) < 1e-8

    def test_chi2_density(self):
        gs = fit_gamma_series([(1.0, 0.0)], 6)
        assert l1_on_grid(gs.pdf, lambda x: stats.chi2.pdf(x, 1), 0.01, 20) < 0.02

    def test_default_degree(self):
        assert fit_gamma_series([(1.0, 2.0)]).q == 6

    @given(st.lists(st.tuples(st.floats(0.1, 3), st.floats(0, 20)), min_size=1, max_size=4))
    def test_moments_and_mass(self, part):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            gs = fit_gamma_series(part, 6)
        lo, hi = gs.support()
        x = np.linspace(lo, hi, 400_001)
        if gs.alpha < 1:
            x = x[1:]
        pdf = gs.pdf(x)
        mass = np.trapezoid(pdf, x)
        # a uniform grid cannot integrate the singularity at zero when alpha < 1
        if gs.alpha >= 1:
            assert mass == pytest.approx(1, abs=1e-4)
            mean = np.trapezoid(x * pdf, x)
            assert mean == pytest.approx(cumulants(part, 1), rel=1e-4)
        # truncated series dip below zero on lopsided mixes; the clamp removes at most ~0.1%
        assert -np.trapezoid(np.minimum(pdf, 0), x) < 1e-2

    def test_huge_shape_is_stable(self):
        gs = fit_gamma_series([(1e-3, 1e8)], 6)
        assert gs.alpha == pytest.approx(1e10 / 400, rel=1e-6)
        lo, hi = gs.support()
        x = np.linspace(lo, hi, 200_001)
        assert np.trapezoid(gs.pdf(x), x) == pytest.approx(1, abs=1e-6)

    def test_degree_reduced_when_ill_conditioned(self, monkeypatch):
        import uvjitter.quadform as qf
        monkeypatch.setattr(qf, "COND_LIMIT", 10.0)
        with pytest.warns(RuntimeWarning, match="lowering series degree"):
            gs = fit_gamma_series([(1.0, 3.0)], 6)
        assert gs.q < 6

    def test_input_errors(self):
        with pytest.raises(InputError):
            fit_gamma_series([], 6)
        with pytest.raises(InputError):
            fit_gamma_series([(1.0, 0.0)], 1)


class TestPowerDensity:
    @pytest.fixture(scope="class")
    @staticmethod
    def symmetric():
        return PowerDensity.from_spectral(SpectralForm(((1.0, 0.0),), ((1.0, 0.0),), 0.0))

    def test_seam_continuity(self, baseline_model):
        dens = PowerDensity.from_model(baseline_model, JitterSpec.isotropic(0.04))
        assert dens.conv_h1(0.0) == pytest.approx(dens.conv_h2(0.0), rel=1e-12)

    def test_symmetric_difference(self, symmetric):
        for x in (0.1, 0.5, 1.0, 3.0, 7.0):
            assert symmetric.conv_h1(x) == pytest.approx(symmetric.conv_h2(-x), rel=1e-6)
        # chi2_1 - chi2_1 is half the difference of two standard normals squared: density
        # K0(|x|/2) / (2 pi)
        from scipy.special import k0
        for x in (0.3, 1.0, 4.0):
            assert symmetric.pdf(x) == pytest.approx(k0(x / 2) / (2 * math.pi), rel=1e-6)

    def test_half_line_contracts(self, symmetric):
        with pytest.raises(InputError):
            symmetric.conv_h1(-1.0)
        with pytest.raises(InputError):
            symmetric.conv_h2(1.0)

    def test_one_sided_bypasses_convolution(self):
        dens = PowerDensity.from_spectral(SpectralForm(((2.0, 1.0),), (), 5.0))
        assert dens.neg_series is None
        assert dens.pdf(7.5) == pytest.approx(float(dens.pos_series.pdf(2.5)), rel=1e-15)
        assert dens.pdf(4.9) == 0.0

    @pytest.mark.parametrize("sigma", [0.02, 0.04, 0.07])
    def test_mass(self, baseline_model, sigma):
        dens = PowerDensity.from_model(baseline_model, JitterSpec.isotropic(sigma))
        assert dens.total_mass() == pytest.approx(1, abs=1e-3)

    def test_cdf_monotone_and_bounded(self, baseline_model):
        dens = PowerDensity.from_model(baseline_model, JitterSpec.isotropic(0.04))
        lo, hi = dens.support()
        c = dens.cdf(np.linspace(lo - 1e-12, hi + 1e-12, 41))
        assert np.all(np.diff(c) >= 0) and c[0] == 0 and c[-1] == pytest.approx(1, abs=1e-3)

    def test_clamp_flag(self, baseline_model):
        dens = PowerDensity.from_model(baseline_model, JitterSpec.isotropic(0.07))
        lo, hi = dens.support()
        x = np.linspace(lo, hi, 400)
        raw = dens.pdf(x, clamp=False)
        assert np.all(dens.pdf(x) >= 0)
        assert raw.min() >= -1e-3 * raw.max()

    def test_against_histogram(self, baseline_model):
        spec = JitterSpec.isotropic(0.02)
        dens = PowerDensity.from_model(baseline_model, spec)
        x = sample_power(baseline_model, spec, make_rng(6), 100_000)
        edges = np.linspace(x.min(), x.max(), 201)
        h, _ = np.histogram(x, edges, density=True)
        centers = 0.5 * (edges[1:] + edges[:-1])
        assert np.sum(np.abs(dens.pdf(centers) - h)) * (edges[1] - edges[0]) < 0.05

    def test_sample_backends_agree(self, baseline_model):
        spec = JitterSpec.isotropic(0.04)
        a = sample_power(baseline_model, spec, make_rng(1), 1000, backend="numba")
        b = sample_power(baseline_model, spec, make_rng(1), 1000, backend="numpy")
        np.testing.assert_allclose(a, b, rtol=1e-13)
        assert isinstance(sample_power(baseline_model, spec, make_rng(1)), float)
