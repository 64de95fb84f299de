"""Distribution of received power under the quadratic jitter model.

With Gaussian offsets the quadratic model is ``E_r = Q1 - Q2 + eps`` where
``Q1`` and ``Q2`` are positive combinations of independent noncentral
chi-square(1) variables.  Each part is approximated by a gamma density times
a degree-q polynomial whose coefficients reproduce the first q raw moments;
the density of ``E_r`` is the convolution of the two fitted densities.

The polynomial correction is solved and evaluated in the standardised
variable ``t = (x - mean) / sd`` of its gamma base.  That spans the same
polynomials as the raw ``x**i`` basis, so the density is unchanged, but the
moment system stays well conditioned even when the shape parameter is huge
(tiny jitter, large noncentrality).
"""

import math
import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln

from .errors import InputError, PointMassDistribution
from .kernels import ftpd_batch
from .numerics import QuadratureSpec, integrate_adaptive, jacobi_eigen

EIG_DROP_TOL = 1e-10
ENVELOPE_DROP = math.log(1e14)
COND_LIMIT = 1e12
DEFAULT_Q = 6


# --- spectral decomposition ---------------------------------------------------

@dataclass(frozen=True)
class SpectralForm:
    """``Q = sum_pos l chi2_1(d) - sum_neg |l| chi2_1(d)``; the power is ``Q + eps``."""

    pos: tuple
    neg: tuple
    eps: float
    dropped_mean: float = 0.0

    @property
    def mean(self):
        return (self.eps + sum(l * (1 + d) for l, d in self.pos)
                - sum(l * (1 + d) for l, d in self.neg))

    @property
    def variance(self):
        return sum(2 * l * l * (1 + 2 * d) for l, d in self.pos + self.neg)


def decompose(model, spec):
    """Split the quadratic model under Gaussian jitter into chi-square terms.

    Offsets are zero-mean (means are folded into the model's base point), so
    ``beta = a - shift`` has mean ``-shift`` and covariance ``diag(sigma)^2``.
    Eigenvalues of ``S G S`` below ``1e-10`` of the largest are dropped and
    their mean folded into the shift.  Raises :class:`PointMassDistribution`
    when nothing random is left.
    """
    sigma = spec.sigma_array
    mu = -np.asarray(model.shift, dtype=float)
    gmat = np.asarray(model.gmat, dtype=float)
    s = np.diag(sigma)
    m = s @ gmat @ s
    const = float(mu @ gmat @ mu)

    if not np.any(m):
        raise PointMassDistribution(model.eps + const)

    values, vectors = jacobi_eigen(m)
    b = vectors.T @ (s @ gmat @ mu)
    cutoff = EIG_DROP_TOL * np.max(np.abs(values))
    pos = []
    neg = []
    dropped = 0.0
    for lam, bi in zip(values, b):
        if abs(lam) <= cutoff:
            dropped += lam
            continue
        c = bi / lam
        const -= lam * c * c
        term = (abs(float(lam)), float(c * c))
        (pos if lam > 0 else neg).append(term)

    if not pos and not neg:
        raise PointMassDistribution(model.eps + const + dropped)
    dropped_mean = const + dropped
    return SpectralForm(tuple(pos), tuple(neg), float(model.eps + dropped_mean), float(dropped_mean))


# --- cumulants and moments ----------------------------------------------------

def cumulants(part, s):
    """``s``-th cumulant of ``sum l_i chi2_1(d_i)``."""
    if s < 1:
        raise InputError("cumulant order must be >= 1")
    return 2.0 ** (s - 1) * math.factorial(s - 1) * sum(l ** s * (1 + s * d) for l, d in part)


def moments_from_cumulants(kappa):
    """Raw moments ``mu'_1..mu'_s`` from cumulants ``kappa_1..kappa_s``."""
    kappa = [float(k) for k in kappa]
    mom = [1.0]
    for n in range(1, len(kappa) + 1):
        mom.append(sum(comb(n - 1, i) * kappa[n - 1 - i] * mom[i] for i in range(n)))
    return mom[1:]


def _gamma_std_moments(alpha, order):
    """Moments of ``(Y - alpha)/sqrt(alpha)`` with ``Y ~ Gamma(alpha, 1)``, orders 0..order."""
    kap = [0.0, 1.0] + [math.factorial(n - 1) * alpha ** (1 - n / 2) for n in range(3, order + 1)]
    return [1.0] + moments_from_cumulants(kap[:order])


# --- gamma-polynomial series --------------------------------------------------

def _stirling_remainder(alpha):
    if alpha < 10.0:
        return gammaln(alpha) - ((alpha - 0.5) * math.log(alpha) - alpha + 0.5 * math.log(2 * math.pi))
    a2 = alpha * alpha
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * a2)) / a2) / a2) / alpha


@dataclass(frozen=True)
class GammaSeries:
    """Gamma(shape ``alpha``, scale ``beta``) base times a degree-``q`` polynomial.

    ``coeffs`` are the raw-power coefficients ``m_i`` of ``sum m_i x**i``;
    ``std_coeffs`` the same polynomial in the standardised variable, which is
    what evaluation uses.
    """

    alpha: float
    beta: float
    coeffs: tuple
    q: int
    std_coeffs: tuple = field(repr=False, default=())

    @property
    def mean(self):
        return self.alpha * self.beta

    @property
    def sd(self):
        return math.sqrt(self.alpha) * self.beta

    def base_logpdf(self, x):
        """Log of the gamma base density, stable for very large shapes."""
        x = np.asarray(x, dtype=float)
        a = self.alpha
        out = np.full(x.shape, -np.inf)
        pos = x > 0
        ratio = x[pos] / (a * self.beta)
        u = ratio - 1.0
        # log1p loses u entirely once x is below ~1e-16 of the mean
        l1p = np.where(ratio < 0.5, np.log(ratio), np.log1p(np.maximum(u, -0.5)))
        out[pos] = (a * (l1p - u) - l1p - 0.5 * math.log(2 * math.pi * a)
                    - _stirling_remainder(a) - math.log(self.beta))
        return out

    def pdf(self, x):
        """Series density (unclamped, may dip slightly below zero in the tails)."""
        x = np.asarray(x, dtype=float)
        t = (x / self.beta - self.alpha) / math.sqrt(self.alpha)
        poly = np.polynomial.polynomial.polyval(t, self.std_coeffs)
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(self.base_logpdf(x)) * poly
        return np.where(x > 0, out, 0.0)

    def support(self):
        """Interval where the gamma envelope stays above 1e-14 of its peak."""
        a = self.alpha
        if a > 1.0:
            k = ENVELOPE_DROP / (a - 1.0)
            g = lambda u: u - math.log1p(u) - k
            hi = 1.0
            while g(hi) < 0:
                hi *= 2.0
            u_hi = brentq(g, 0.0, hi, xtol=1e-14, rtol=1e-12)
            edge = -1.0 + 2.0 ** -52
            u_lo = brentq(g, edge, 0.0, xtol=1e-16, rtol=1e-12) if g(edge) > 0 else -1.0
            mode = (a - 1.0) * self.beta
            return max(0.0, mode * (1.0 + u_lo)), mode * (1.0 + u_hi)
        # no interior peak: measure the drop from the mean instead
        g = lambda y: (a - 1.0) * math.log(y / a) - (y - a) + ENVELOPE_DROP
        hi = 2.0 * a + 1.0
        while g(hi) > 0:
            hi *= 2.0
        return 0.0, brentq(g, a, hi, rtol=1e-12) * self.beta


def fit_gamma_series(part, q=DEFAULT_Q):
    """Moment-matched gamma-polynomial density for ``sum l_i chi2_1(d_i)``.

    If the moment system is too ill-conditioned (condition number above
    1e12) the degree is lowered one step at a time, with a warning, down to 2.
    """
    part = tuple(part)
    if not part:
        raise InputError("cannot fit an empty chi-square combination")
    if q < 2:
        raise InputError("series degree q must be >= 2")
    kap = [cumulants(part, s) for s in range(1, q + 1)]
    mean, var = kap[0], kap[1]
    alpha = mean * mean / var
    beta = var / mean
    sd = math.sqrt(var)

    # target moments of the standardised variable
    std_kap = [0.0, 1.0] + [kap[n - 1] / sd ** n for n in range(3, q + 1)]
    target = [1.0] + moments_from_cumulants(std_kap)
    base = _gamma_std_moments(alpha, 2 * q)

    while True:
        hank = np.array([[base[s + k] for k in range(q + 1)] for s in range(q + 1)])
        cond = np.linalg.cond(hank)
        if cond <= COND_LIMIT or q <= 2:
            break
        warnings.warn(f"moment system condition {cond:.2e}; lowering series degree to {q - 1}",
                      RuntimeWarning, stacklevel=2)
        q -= 1
    std = np.linalg.solve(hank, np.array(target[: q + 1]))

    # raw-power coefficients of the same polynomial
    ra = math.sqrt(alpha)
    coeffs = [
        sum(std[k] * comb(k, i) * (-ra) ** (k - i) for k in range(i, q + 1)) / (beta * ra) ** i
        for i in range(q + 1)
    ]
    return GammaSeries(alpha, beta, tuple(coeffs), q, tuple(float(c) for c in std))


# --- density of the received power --------------------------------------------

@dataclass(frozen=True)
class PowerDensity:
    pos_series: GammaSeries = None
    neg_series: GammaSeries = None
    eps: float = 0.0
    quadrature: QuadratureSpec = QuadratureSpec()
    point_mass: float = None
    form: SpectralForm = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_spectral(cls, form, q=DEFAULT_Q, quadrature=None):
        quadrature = quadrature or QuadratureSpec()
        pos = fit_gamma_series(form.pos, q) if form.pos else None
        neg = fit_gamma_series(form.neg, q) if form.neg else None
        return cls(pos, neg, form.eps, quadrature, None, form)

    @classmethod
    def from_model(cls, model, spec, q=DEFAULT_Q, quadrature=None):
        try:
            form = decompose(model, spec)
        except PointMassDistribution as pm:
            return cls(eps=model.eps, quadrature=quadrature or QuadratureSpec(), point_mass=pm.value)
        return cls.from_spectral(form, q, quadrature)

    @property
    def is_point_mass(self):
        return self.point_mass is not None

    @property
    def mean(self):
        return self.point_mass if self.is_point_mass else self.form.mean

    @property
    def variance(self):
        return 0.0 if self.is_point_mass else self.form.variance

    def support(self):
        if self.is_point_mass:
            return self.point_mass, self.point_mass
        l1, u1 = self.pos_series.support() if self.pos_series else (0.0, 0.0)
        l2, u2 = self.neg_series.support() if self.neg_series else (0.0, 0.0)
        return self.eps + l1 - u2, self.eps + u1 - l2

    # convolution pieces, x = E_r - eps
    def _conv(self, x, lower):
        g1, g2 = self.pos_series, self.neg_series
        l1, u1 = g1.support()
        l2, u2 = g2.support()
        lo = max(lower, l2, l1 - x)
        hi = min(u2, u1 - x)
        if not hi > lo:
            return 0.0
        scale = 1.0 / (g1.sd * g2.sd)
        spec = QuadratureSpec(self.quadrature.rel_tol, self.quadrature.abs_tol * scale,
                              self.quadrature.max_subdivisions)
        return integrate_adaptive(lambda y: g1.pdf(x + y) * g2.pdf(y), lo, hi, spec, initial=4)

    def conv_h1(self, x):
        """Density of ``Q1 - Q2`` at ``x >= 0``."""
        if x < 0:
            raise InputError("h1 is defined for x >= 0")
        return self._conv(x, 0.0)

    def conv_h2(self, x):
        """Density of ``Q1 - Q2`` at ``x <= 0``."""
        if x > 0:
            raise InputError("h2 is defined for x <= 0")
        return self._conv(x, -x)

    def _raw_pdf(self, e):
        key = float(e)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        x = key - self.eps
        if self.pos_series is not None and self.neg_series is not None:
            val = self.conv_h1(x) if x > 0 else self.conv_h2(x)
        elif self.pos_series is not None:
            val = float(self.pos_series.pdf(x)) if x > 0 else 0.0
        else:
            val = float(self.neg_series.pdf(-x)) if x < 0 else 0.0
        if len(self._cache) < 200_000:
            self._cache[key] = val
        return val

    def pdf(self, e, clamp=True):
        """Density of received power (W^-1).

        Small negative excursions of the polynomial correction are clipped to
        zero unless ``clamp=False``.
        """
        if self.is_point_mass:
            raise InputError("deterministic power has no density; use cdf or expect")
        e = np.asarray(e, dtype=float)
        vals = np.array([self._raw_pdf(v) for v in e.ravel()]).reshape(e.shape)
        if clamp:
            vals = np.maximum(vals, 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def breakpoints(self):
        lo, hi = self.support()
        mean = self.mean
        sd = math.sqrt(self.variance)
        pts = {self.eps}
        for k in (-6, -3, -1.5, 0, 1.5, 3, 6):
            pts.add(mean + k * sd)
        return sorted(p for p in pts if lo < p < hi)

    def expect(self, func, rel_tol=None, abs_tol=1e-18):
        """``E[func(E_r)]`` for a vectorised ``func`` (may return one column per output)."""
        if self.is_point_mass:
            return np.asarray(func(np.array([self.point_mass])), dtype=float)[0]
        lo, hi = self.support()
        spec = QuadratureSpec(rel_tol or self.quadrature.rel_tol, abs_tol,
                              self.quadrature.max_subdivisions)

        def integrand(e):
            w = self.pdf(e)
            vals = np.asarray(func(e), dtype=float)
            return vals * (w[:, None] if vals.ndim == 2 else w)

        return integrate_adaptive(integrand, lo, hi, spec, points=self.breakpoints(), initial=2)

    def total_mass(self):
        return float(self.expect(np.ones_like))

    def cdf(self, e):
        """``P(E_r <= e)`` by integrating the clamped density from the lower support edge."""
        e = np.asarray(e, dtype=float)
        flat = e.ravel()
        if self.is_point_mass:
            out = (flat >= self.point_mass).astype(float)
            return float(out[0]) if e.ndim == 0 else out.reshape(e.shape)
        lo, hi = self.support()
        order = np.argsort(flat)
        pts = self.breakpoints()
        out = np.empty(flat.size)
        acc = 0.0
        prev = lo
        spec = QuadratureSpec(self.quadrature.rel_tol, 1e-15, self.quadrature.max_subdivisions)
        for idx in order:
            target = min(max(flat[idx], lo), hi)
            if target > prev:
                inner = [p for p in pts if prev < p < target]
                acc += integrate_adaptive(self.pdf, prev, target, spec, points=inner)
                prev = target
            out[idx] = acc
        return float(out[0]) if e.ndim == 0 else out.reshape(e.shape)


def sample_power(model, spec, rng, size=None, backend=None):
    """Draw received power from the quadratic model itself (exact FTPD law)."""
    n = 1 if size is None else int(size)
    offsets = rng.standard_normal((n, 4)) * spec.sigma_array
    vals = ftpd_batch(offsets, model.shift, model.gmat, model.eps, backend=backend)
    return float(vals[0]) if size is None else vals
