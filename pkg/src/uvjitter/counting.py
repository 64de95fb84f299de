"""Photon counting and on-off keying error probability.

A "1" pulse yields Poisson(lambda_s + lambda_b) counts, a "0" pulse
Poisson(lambda_b).  The receiver decides "1" when the count exceeds the
threshold ``n_th``.  With pointing jitter ``lambda_s`` is itself random
through the received power, so the "1" count is a Poisson mixture.

Poisson tails use the regularised incomplete gamma function,
``P(N <= k; lam) = Q(k + 1, lam)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .errors import InputError

PLANCK = 6.62607015e-34
LIGHT_SPEED = 2.99792458e8


@dataclass(frozen=True)
class DetectorParams:
    """Photon-counting receiver.

    Parameters
    ----------
    eta_f, eta_p : float
        Filter and photodetector efficiencies.
    wavelength_m : float
        Optical wavelength (m).
    t_p : float
        Pulse (bit slot) duration (s).
    n_n : float
        Background count rate (1/s).
    """

    eta_f: float = 0.2
    eta_p: float = 0.3
    wavelength_m: float = 260e-9
    t_p: float = 1.0 / 96e3
    n_n: float = 14500.0

    def __post_init__(self):
        for name in ("eta_f", "eta_p"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InputError(f"{name} must lie in (0, 1], got {v}")
        if not self.wavelength_m > 0:
            raise InputError("wavelength_m must be > 0")
        if not self.t_p > 0:
            raise InputError("t_p must be > 0")
        if not self.n_n >= 0:
            raise InputError("n_n must be >= 0")

    @classmethod
    def from_data_rate(cls, rate_bps, **kw):
        """One pulse per bit slot, ``t_p = 1 / rate``."""
        if not rate_bps > 0:
            raise InputError("data rate must be > 0")
        return cls(t_p=1.0 / rate_bps, **kw)

    @property
    def photons_per_joule(self):
        return self.eta_f * self.eta_p * self.wavelength_m / (PLANCK * LIGHT_SPEED)

    @property
    def photons_per_watt(self):
        """Mean signal counts per pulse per watt of received power."""
        return self.photons_per_joule * self.t_p

    @property
    def lambda_b(self):
        return self.n_n * self.t_p


@dataclass(frozen=True)
class LinkBudget:
    lambda_s: float
    lambda_b: float

    def __post_init__(self):
        if not (self.lambda_s >= 0 and self.lambda_b >= 0):
            raise InputError("photon means must be >= 0")


def lambda_s(e_r, d):
    """Mean signal photons per pulse; negative power is clamped to zero."""
    e = np.maximum(np.asarray(e_r, dtype=float), 0.0) * d.photons_per_watt
    return float(e) if e.ndim == 0 else e


def pmf_poisson(n, lam):
    """``exp(-lam) lam**n / n!`` evaluated in log space."""
    n = np.asarray(n)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0) or np.any(n < 0):
        raise InputError("Poisson pmf needs lam >= 0 and n >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = n * np.log(lam) - lam - gammaln(n + 1.0)
    out = np.where(lam == 0, (n == 0).astype(float), np.exp(logp))
    return float(out) if out.ndim == 0 else out


def poisson_cdf(k, lam):
    """``P(N <= k)``; zero for ``k < 0``."""
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.where(k < 0, 0.0, gammaincc(np.maximum(k, 0) + 1.0, lam))
    return float(out) if out.ndim == 0 else out


def poisson_sf(k, lam):
    """``P(N > k)``; one for ``k < 0``."""
    k = np.asarray(k, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.where(k < 0, 1.0, gammainc(np.maximum(k, 0) + 1.0, lam))
    return float(out) if out.ndim == 0 else out


def _signal_means(density, d, lam_b):
    def total(e):
        return lambda_s(e, d) + lam_b
    return total


def pmf_jitter(n, density, d, lam_b):
    """Count distribution of a "1" pulse averaged over the jittered power."""
    ns = np.atleast_1d(np.asarray(n))
    if np.any(ns < 0):
        raise InputError("photon counts must be >= 0")
    total = _signal_means(density, d, lam_b)
    vals = density.expect(lambda e: pmf_poisson(ns[None, :], total(e)[:, None]))
    vals = np.atleast_1d(vals)
    return float(vals[0]) if np.ndim(n) == 0 else vals


def cdf_jitter(k, density, d, lam_b):
    """``P(N <= k)`` for a "1" pulse under jitter; zero for ``k < 0``."""
    ks = np.atleast_1d(np.asarray(k))
    total = _signal_means(density, d, lam_b)
    vals = np.atleast_1d(density.expect(lambda e: poisson_cdf(ks[None, :], total(e)[:, None])))
    return float(vals[0]) if np.ndim(k) == 0 else vals


def threshold_range(lam_s_max, lam_b):
    """Candidate thresholds ``floor(lam_b) .. floor(lam_s_max + lam_b) + 1``.

    The Poisson likelihood ratio is increasing in the count, so with equal
    priors the optimal threshold lies below the "1" mean and at or above
    ``floor(lam_b)``.
    """
    lo = int(math.floor(lam_b))
    hi = int(math.floor(lam_s_max + lam_b)) + 1
    return np.arange(lo, hi + 1)


def _search(miss, ks, lam_b, p1):
    """Minimise ``p1 * miss(k) + (1 - p1) * sf(k, lam_b)`` over thresholds.

    ``ks`` is the equal-prior bracket. For other priors the bracket is widened
    one step at a time: below it the error is at least ``(1 - p1) * sf(k)``,
    above it at least ``p1 * miss(k)``, and both bounds grow outward, so the
    walk stops once the bound passes the best error seen.
    """
    ks = np.asarray(ks)
    err = p1 * miss(ks) + (1 - p1) * poisson_sf(ks, lam_b)
    i = int(np.argmin(err))
    best, k_best = float(err[i]), int(ks[i])
    if p1 != 0.5:
        k = int(ks[0]) - 1
        while k >= -1 and (1 - p1) * poisson_sf(k, lam_b) < best:
            e = p1 * float(np.atleast_1d(miss(np.array([k])))[0]) + (1 - p1) * poisson_sf(k, lam_b)
            if e < best:
                best, k_best = e, k
            k -= 1
        k = int(ks[-1]) + 1
        while True:
            m = float(np.atleast_1d(miss(np.array([k])))[0])
            if p1 * m >= best:
                break
            e = p1 * m + (1 - p1) * poisson_sf(k, lam_b)
            if e < best:
                best, k_best = e, k
            k += 1
    return float(min(max(best, 0.0), 0.5 if p1 == 0.5 else 1.0)), k_best


def ber_no_jitter(lam_s, lam_b, p1=0.5):
    """Minimum-error OOK probability and its threshold (decide "1" if n > n_th).

    ``n_th = -1`` means always decide "1".
    """
    if not (lam_s >= 0 and lam_b >= 0):
        raise InputError("photon means must be >= 0")
    if not 0.0 < p1 < 1.0:
        raise InputError("p1 must lie in (0, 1)")
    if lam_s == 0:
        return min(p1, 1 - p1), int(math.floor(lam_b)) if p1 <= 0.5 else -1
    return _search(lambda ks: poisson_cdf(ks, lam_s + lam_b), threshold_range(lam_s, lam_b), lam_b, p1)


def ber_jitter(density, d, lam_b, p1=0.5):
    """OOK error probability averaged over jittered received power.

    Every candidate threshold is evaluated in one pass over the density; the
    range uses the largest signal mean on the truncated support.
    """
    if density.is_point_mass:
        return ber_no_jitter(lambda_s(density.point_mass, d), lam_b, p1)
    if not 0.0 < p1 < 1.0:
        raise InputError("p1 must lie in (0, 1)")
    lam_max = lambda_s(density.support()[1], d)
    total = _signal_means(density, d, lam_b)

    def miss(ks):
        return np.atleast_1d(density.expect(lambda e: poisson_cdf(ks[None, :], total(e)[:, None])))

    return _search(miss, threshold_range(lam_max, lam_b), lam_b, p1)


def count_variance(density, d, lam_b):
    """Variance of the "1"-pulse count under jitter (law of total variance)."""
    mean_lam = lambda_s(density.mean, d) + lam_b if density.is_point_mass else None
    if mean_lam is not None:
        return mean_lam
    total = _signal_means(density, d, lam_b)
    m1, m2 = density.expect(lambda e: np.stack([total(e), total(e) ** 2], axis=1))
    return m1 + (m2 - m1 * m1)
