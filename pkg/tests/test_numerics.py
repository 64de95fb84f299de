import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from uvjitter.errors import InputError, QuadratureWarning, SingularMatrixError
from uvjitter.numerics import (QuadratureSpec, block_seeds, det4, integrate_adaptive, jacobi_eigen,
                               make_rng, sample_gaussian, sample_poisson, sample_poisson_array,
                               solve4)


def cofactor_det(a):
    """Laplace expansion along the first row."""
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    return sum((-1) ** j * a[0, j] * cofactor_det(np.delete(np.delete(a, 0, 0), j, 1))
               for j in range(n))


def cramer_solve(a, b):
    d = cofactor_det(a)
    out = np.empty(4)
    for i in range(4):
        ai = a.copy()
        ai[:, i] = b
        out[i] = cofactor_det(ai) / d
    return out


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestJacobi:
    def test_identity(self):
        vals, vecs = jacobi_eigen(np.eye(4))
        np.testing.assert_allclose(vals, 1.0)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(4), atol=1e-15)

    def test_diagonal(self):
        vals, vecs = jacobi_eigen(np.diag([3.0, -1.0, 2.0, 0.0]))
        np.testing.assert_allclose(vals, [3, 2, 0, -1])
        np.testing.assert_allclose(np.linalg.norm(vecs, axis=0), 1.0)

    @given(arrays(float, (4, 4), elements=finite))
    def test_reconstruction(self, m):
        m = m + m.T
        vals, vecs = jacobi_eigen(m)
        scale = max(np.linalg.norm(m), 1.0)
        assert np.abs(vecs @ np.diag(vals) @ vecs.T - m).max() <= 1e-10 * scale
        assert np.abs(vecs.T @ vecs - np.eye(4)).max() < 1e-12
        assert abs(vals.sum() - np.trace(m)) < 1e-12 * scale
        assert np.all(np.diff(vals) <= 0)

    def test_matches_lapack(self):
        rng = make_rng(11)
        for _ in range(100):
            a = rng.standard_normal((4, 4))
            a = a + a.T
            np.testing.assert_allclose(jacobi_eigen(a).values, np.linalg.eigvalsh(a)[::-1],
                                       atol=1e-12)

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            jacobi_eigen(np.full((4, 4), np.nan))
        with pytest.raises(InputError):
            jacobi_eigen(np.arange(16.0).reshape(4, 4))


class TestSolveDet:
    def test_examples(self):
        np.testing.assert_allclose(solve4(np.eye(4), [1, 2, 3, 4]), [1, 2, 3, 4])
        np.testing.assert_allclose(solve4(np.diag([2.0, 4, 5, 10]), [2, 4, 5, 10]), 1.0)
        assert det4(np.eye(4)) == pytest.approx(1.0)
        assert det4(np.diag([1.0, 2, 3, 4])) == pytest.approx(24.0)

    def test_against_cofactor_oracle(self):
        rng = make_rng(12)
        for _ in range(1000):
            a = rng.standard_normal((4, 4)) + 3 * np.eye(4)
            b = rng.standard_normal(4)
            x = solve4(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * (np.linalg.norm(a) * np.linalg.norm(x)
                                                         + np.linalg.norm(b))
            np.testing.assert_allclose(x, cramer_solve(a, b), rtol=1e-9, atol=1e-12)
            assert det4(a) == pytest.approx(cofactor_det(a), rel=1e-12)

    def test_singular(self):
        a = np.ones((4, 4))
        with pytest.raises(SingularMatrixError) as info:
            solve4(a, np.ones(4))
        assert abs(info.value.det) < 1e-10


class TestQuadrature:
    def test_constant_and_exponential(self):
        assert integrate_adaptive(lambda x: np.ones_like(x), 0, 1) == pytest.approx(1, abs=1e-15)
        val = integrate_adaptive(np.exp, -50.0, 0.0)
        assert val == pytest.approx(1 - math.exp(-50), rel=1e-8)
        assert integrate_adaptive(lambda x: np.exp(-x), 0, 50) == pytest.approx(1, abs=1e-8)

    def test_gamma_mass_over_truncated_support(self):
        a, scale = 2.5, 3.0
        lo, hi = stats.gamma.ppf([1e-14, 1 - 1e-14], a, scale=scale)
        val = integrate_adaptive(lambda x: stats.gamma.pdf(x, a, scale=scale), lo, hi)
        assert val == pytest.approx(1, abs=1e-8)

    def test_endpoint_singularity_and_breakpoints(self):
        val = integrate_adaptive(lambda x: 1 / np.sqrt(x), 0, 1, QuadratureSpec(rel_tol=1e-10))
        assert val == pytest.approx(2, rel=1e-8)
        val = integrate_adaptive(np.abs, -1, 2, points=[0.0])
        assert val == pytest.approx(2.5, rel=1e-14)

    def test_vector_valued(self):
        val = integrate_adaptive(lambda x: np.stack([x, x * x], axis=1), 0, 1)
        np.testing.assert_allclose(val, [0.5, 1 / 3], rtol=1e-12)

    @given(st.lists(finite, min_size=4, max_size=4), st.lists(finite, min_size=4, max_size=4),
           finite, finite)
    def test_linear(self, p, q, alpha, beta):
        fp = np.polynomial.Polynomial(p)
        fq = np.polynomial.Polynomial(q)
        lhs = integrate_adaptive(lambda x: alpha * fp(x) + beta * fq(x), -1, 2)
        rhs = alpha * integrate_adaptive(fp, -1, 2) + beta * integrate_adaptive(fq, -1, 2)
        assert abs(lhs - rhs) <= 1e-8 * (abs(alpha) + abs(beta) + 1) * 200

    def test_warns_when_budget_exhausted(self):
        spec = QuadratureSpec(rel_tol=1e-15, max_subdivisions=3)
        with pytest.warns(QuadratureWarning):
            res = integrate_adaptive(lambda x: np.sin(50 * x) ** 2, 0, 10, spec, full_output=True)
        assert not res.converged and res.error > 0

    def test_input_errors(self):
        with pytest.raises(InputError):
            integrate_adaptive(lambda x: x, 1, 0)
        with pytest.raises(InputError):
            integrate_adaptive(lambda x: np.full_like(x, np.nan), 0, 1)


class TestSampling:
    def test_gaussian_degenerate(self):
        assert sample_gaussian(1.5, 0.0, make_rng(0)) == 1.5
        with pytest.raises(InputError):
            sample_gaussian(0, -1, make_rng(0))

    def test_poisson_zero_and_errors(self):
        rng = make_rng(0)
        assert all(sample_poisson(0.0, rng) == 0 for _ in range(100))
        with pytest.raises(InputError):
            sample_poisson(-1.0, rng)

    @pytest.mark.parametrize("lam", [4.2, 75.0])
    def test_poisson_mean(self, lam):
        x = sample_poisson_array(np.full(1_000_000, lam), make_rng(5))
        assert abs(x.mean() - lam) < 3 * math.sqrt(lam / x.size)

    @pytest.mark.parametrize("lam", [0.3, 4.2, 29.9, 30.0, 120.0])
    def test_poisson_law(self, lam):
        rng = make_rng(6)
        x = sample_poisson_array(np.full(200_000, lam), rng)
        scalar = np.array([sample_poisson(lam, rng) for _ in range(20_000)])
        for draws in (x, scalar):
            ks = np.arange(draws.max() + 1)
            expected = stats.poisson.pmf(ks, lam) * draws.size
            observed = np.bincount(draws, minlength=ks.size)
            keep = expected > 20
            chi2 = np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep])
            assert stats.chi2.sf(chi2, keep.sum() - 1) > 1e-4

    def test_streams_reproducible(self):
        a = make_rng(2**63 + 5, worker=3).random(10)
        b = make_rng(2**63 + 5, worker=3).random(10)
        c = make_rng(2**63 + 5, worker=4).random(10)
        assert np.array_equal(a, b) and not np.array_equal(a, c)
        assert block_seeds(9, 4) == block_seeds(9, 4)
        assert len(set(block_seeds(9, 64))) == 64
