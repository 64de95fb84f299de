"""Monte Carlo oracles: jitter-sampled power histograms and symbol-level BER.

Work is cut into fixed-size blocks, each seeded from ``(seed, block index)``.
Blocks may run on several threads but are merged in index order, so results
do not depend on the worker count.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .channel import power_args
from .counting import lambda_s
from .errors import InputError
from .jitter import expand_ftpd
from .kernels import ber_block, ftpd_batch, received_power_batch
from .numerics import block_seeds

POWER_BLOCK = 50_000
SYMBOL_BLOCK = 2_000_000


@dataclass(frozen=True)
class McConfig:
    seed: int = 0
    n_samples: int = 100_000
    n_symbols: int = 100_000_000
    bins: int = 200
    workers: int = 1

    def __post_init__(self):
        for name in ("n_samples", "n_symbols", "bins", "workers"):
            if int(getattr(self, name)) <= 0:
                raise InputError(f"{name} must be > 0")
            object.__setattr__(self, name, int(getattr(self, name)))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class Histogram:
    """Density-normalised histogram; ``invalid`` counts samples scored as zero power."""

    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    count: int
    invalid: int = 0

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self):
        return np.diff(self.edges)

    def l1_distance(self, pdf):
        """``sum |pdf(center) - density| * width`` against a density callable."""
        return float(np.sum(np.abs(np.asarray(pdf(self.centers)) - self.density) * self.widths))


@dataclass(frozen=True)
class BerEstimate:
    ber: float
    ci_lo: float
    ci_hi: float
    errors: int
    n_symbols: int

    def contains(self, value):
        return self.ci_lo <= value <= self.ci_hi


def _blocks(total, size):
    n_blocks = max(1, math.ceil(total / size))
    sizes = [size] * (n_blocks - 1) + [total - size * (n_blocks - 1)]
    return sizes


def _run_blocks(task, seeds, sizes, workers):
    jobs = list(zip(seeds, sizes))
    if workers <= 1 or len(jobs) == 1:
        return [task(s, n) for s, n in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: task(*job), jobs))


def make_histogram(samples, bins, edges=None, invalid=0):
    samples = np.asarray(samples, dtype=float)
    if edges is None:
        lo, hi = float(samples.min()), float(samples.max())
        if hi <= lo:
            pad = max(abs(lo), 1e-300) * 1e-9
            lo, hi = lo - pad, hi + pad
        edges = np.linspace(lo, hi, bins + 1)
    counts, edges = np.histogram(samples, edges)
    widths = np.diff(edges)
    density = counts / (counts.sum() * widths)
    return Histogram(np.asarray(edges, dtype=float), density, int(samples.size), int(invalid))


def sample_power_mc(geom, params, spec, cfg, path="ftpd", model=None, backend=None):
    """Jittered received-power samples and the count of invalid exact-path draws."""
    if path not in ("exact", "ftpd"):
        raise InputError(f"unknown sampling path {path!r}")
    sigma = spec.sigma_array
    if path == "ftpd" and model is None:
        model = expand_ftpd(geom, params, spec)
    base = np.array(geom.angles) + spec.mean_array
    args = power_args(geom, params)

    def task(seed, n):
        rng = np.random.Generator(np.random.PCG64(seed))
        offsets = rng.standard_normal((n, 4)) * sigma
        if path == "ftpd":
            return ftpd_batch(offsets, model.shift, model.gmat, model.eps, backend=backend), 0
        vals, bad = received_power_batch(base + offsets, args, backend=backend)
        return vals, int(bad.sum())

    sizes = _blocks(cfg.n_samples, POWER_BLOCK)
    parts = _run_blocks(task, block_seeds(cfg.seed, len(sizes)), sizes, cfg.workers)
    return np.concatenate([p[0] for p in parts]), sum(p[1] for p in parts)


def mc_power(geom, params, spec, cfg, path="ftpd", edges=None, model=None, backend=None):
    """Histogram of received power under Gaussian pointing jitter.

    ``path="exact"`` evaluates the closed-form power at each perturbed
    pointing; elevations pushed outside ``(0, pi/2)`` score zero and are
    counted in ``Histogram.invalid``.  ``path="ftpd"`` evaluates the
    quadratic model.
    """
    samples, invalid = sample_power_mc(geom, params, spec, cfg, path, model, backend)
    return make_histogram(samples, cfg.bins, edges, invalid)


def wilson_interval(errors, n, level=0.95):
    ci = binomtest(int(errors), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def mc_ber(geom, params, spec, d, lam_b, n_th, cfg, model=None, backend=None):
    """Symbol-level OOK simulation through the FTPD jitter model.

    Each symbol is a fair bit.  A "1" draws jittered power, then
    Poisson(lambda_s + lambda_b) counts; a "0" draws Poisson(lambda_b).  An
    error is a "1" with at most ``n_th`` counts or a "0" with more.
    """
    if model is None:
        model = expand_ftpd(geom, params, spec)
    ppw = lambda_s(1.0, d)

    def task(seed, n):
        return ber_block(seed, n, spec.sigma_array, model.shift, model.gmat, model.eps,
                         ppw, lam_b, n_th, backend=backend)

    sizes = _blocks(cfg.n_symbols, SYMBOL_BLOCK)
    parts = _run_blocks(task, block_seeds(cfg.seed, len(sizes)), sizes, cfg.workers)
    errors = sum(p[0] for p in parts)
    lo, hi = wilson_interval(errors, cfg.n_symbols)
    return BerEstimate(errors / cfg.n_symbols, lo, hi, errors, cfg.n_symbols)
