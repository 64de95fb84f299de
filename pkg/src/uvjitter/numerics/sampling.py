"""Seeded random streams and exact Gaussian / Poisson samplers.

Poisson variates use sequential inversion below mean 30 and Hormann's PTRS
transformed-rejection sampler above it.  The same two algorithms exist as
numba kernels in :mod:`uvjitter.kernels` for the symbol-level simulator.
"""

import math

import numpy as np
from scipy.special import gammaln

from ..errors import InputError

POISSON_INVERSION_LIMIT = 30.0


def make_rng(seed, worker=0):
    """Independent generator for ``(seed, worker)``; same inputs, same stream."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(worker),))
    return np.random.Generator(np.random.PCG64(ss))


def block_seeds(seed, n_blocks):
    """32-bit seeds for numba's per-thread generator, one per work block."""
    root = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return [int(c.generate_state(1, np.uint32)[0]) for c in root.spawn(n_blocks)]


def sample_gaussian(mean, sd, rng):
    if not sd >= 0:
        raise InputError(f"standard deviation must be >= 0, got {sd}")
    if sd == 0:
        return float(mean)
    return float(mean + sd * rng.standard_normal())


def _poisson_inversion(lam, uniform):
    u = uniform()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf and k < 1000:
        k += 1
        p *= lam / k
        cdf += p
    return k


def _poisson_ptrs(lam, uniform):
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = uniform() - 0.5
        v = uniform()
        us = 0.5 - abs(u)
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


def sample_poisson(mean, rng):
    if not mean >= 0:
        raise InputError(f"Poisson mean must be >= 0, got {mean}")
    if mean == 0:
        return 0
    if mean < POISSON_INVERSION_LIMIT:
        return _poisson_inversion(mean, rng.random)
    return _poisson_ptrs(mean, rng.random)


def sample_poisson_array(means, rng):
    """Vectorised version of :func:`sample_poisson` for an array of means."""
    lam = np.asarray(means, dtype=float)
    if np.any(~(lam >= 0)):
        raise InputError("Poisson means must be >= 0")
    flat = lam.ravel()
    out = np.zeros(flat.shape, dtype=np.int64)

    small = np.flatnonzero((flat > 0) & (flat < POISSON_INVERSION_LIMIT))
    if small.size:
        ls = flat[small]
        u = rng.random(small.size)
        k = np.zeros(small.size, dtype=np.int64)
        p = np.exp(-ls)
        cdf = p.copy()
        active = np.flatnonzero(u > cdf)
        while active.size:
            k[active] += 1
            p[active] *= ls[active] / k[active]
            cdf[active] += p[active]
            active = active[(u[active] > cdf[active]) & (k[active] < 1000)]
        out[small] = k

    large = np.flatnonzero(flat >= POISSON_INVERSION_LIMIT)
    if large.size:
        out[large] = _ptrs_array(flat[large], rng)
    return out.reshape(lam.shape)


def _ptrs_array(lam, rng):
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    result = np.empty(lam.size, dtype=np.int64)
    pending = np.arange(lam.size)
    while pending.size:
        u = rng.random(pending.size) - 0.5
        v = rng.random(pending.size)
        us = 0.5 - np.abs(u)
        ap, bp = a[pending], b[pending]
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.floor((2.0 * ap / us + bp) * u + lam[pending] + 0.43)
            quick = (us >= 0.07) & (v <= vr[pending])
            reject = (k < 0) | ((us < 0.013) & (v > us)) | ~np.isfinite(k)
            lhs = np.log(v) + np.log(invalpha[pending]) - np.log(ap / (us * us) + bp)
            rhs = -lam[pending] + k * loglam[pending] - gammaln(k + 1.0)
        accept = quick | (~reject & (lhs <= rhs))
        result[pending[accept]] = k[accept].astype(np.int64)
        pending = pending[~accept]
    return result
