"""Hot loops, each with a numba implementation and a vectorised numpy twin.

``backend=None`` picks numba unless ``UVJITTER_DISABLE_NUMBA`` is set.  The
two backends agree to rounding on the deterministic kernels.  The random
kernels draw from different generators (numba's per-thread Mersenne Twister
versus numpy PCG64), so they agree in law, not bit for bit; each is
reproducible for a given seed.
"""

import math

import numpy as np

from ._accel import njit, resolve_backend
from .channel import M_TO_KM, _power_core
from .numerics.sampling import sample_poisson_array


# --- received power over a batch of pointing angles -------------------------

@njit
def _power_batch_nb(angles, r, alpha_t, alpha_r, k_r, k_m, k_a, gamma, g, f, area_km2, e_t):
    n = angles.shape[0]
    out = np.empty(n)
    invalid = np.zeros(n, dtype=np.bool_)
    half_pi = 0.5 * math.pi
    for i in range(n):
        th_t = angles[i, 0]
        th_r = angles[i, 1]
        if not (0.0 < th_t < half_pi and 0.0 < th_r < half_pi):
            out[i] = 0.0
            invalid[i] = True
            continue
        out[i] = _power_core(r, th_t, th_r, angles[i, 2], angles[i, 3], alpha_t, alpha_r,
                             k_r, k_m, k_a, gamma, g, f, area_km2, e_t)
    return out, invalid


def _common_volume_np(r, th_t, th_r, ph_t, ph_r, alpha_r, ke_per_m):
    tx = np.cos(th_t) * np.cos(ph_t)
    ty = np.cos(th_t) * np.sin(ph_t)
    tz = np.sin(th_t)
    rx = -np.cos(th_r) * np.cos(ph_r)
    ry = np.cos(th_r) * np.sin(ph_r)
    rz = np.sin(th_r)
    c2 = math.cos(alpha_r) ** 2

    tr = tx * rx + ty * ry + tz * rz
    a_ = tr * tr - c2
    b_ = -2.0 * tr * (r * rx) + 2.0 * c2 * (r * tx)
    c_ = (r * rx) ** 2 - c2 * r * r

    n = th_t.shape[0]
    s1 = np.full(n, -1.0)
    s2 = np.full(n, -1.0)
    linear = np.abs(a_) <= 1e-13 * (np.abs(b_) / r + np.abs(c_) / (r * r) + 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = linear & (b_ != 0.0)
        s1[lin] = -c_[lin] / b_[lin]
        disc = b_ * b_ - 4.0 * a_ * c_
        quad = ~linear & (disc >= 0.0)
        sq = np.sqrt(np.where(quad, disc, 0.0))
        q = np.where(b_ >= 0.0, -0.5 * (b_ + sq), -0.5 * (b_ - sq))
        r1 = q / a_
        r2 = np.where(q != 0.0, c_ / q, r1)
    s1[quad] = r1[quad]
    s2[quad] = r2[quad]
    s1, s2 = np.minimum(s1, s2), np.maximum(s1, s2)

    p1 = np.where(s1 > 0.0, s1, np.where(s2 > 0.0, s2, np.inf))
    p2 = np.where((s1 > 0.0) & (s2 > s1), s2, np.inf)
    starts = (np.zeros(n), p1, p2)
    ends = (p1, p2, np.full(n, np.inf))

    lo = np.full(n, np.inf)
    hi = np.full(n, -np.inf)
    for a, b in zip(starts, ends):
        ok = np.isfinite(a) & (b > a)
        with np.errstate(invalid="ignore"):
            probe = np.where(np.isinf(b), a + 10.0 * (a + r), 0.5 * (a + b))
            wx = probe * tx - r
            wy = probe * ty
            wz = probe * tz
            d = wx * rx + wy * ry + wz * rz
            inside = ok & (d >= 0.0) & (d * d >= c2 * (wx * wx + wy * wy + wz * wz))
        lo = np.where(inside & (a < lo), a, lo)
        hi = np.where(inside, b, hi)

    empty = ~np.isfinite(lo)
    lo_safe = np.where(empty, 0.0, lo)
    s_cell = np.where(np.isinf(hi), lo_safe + 1.0 / ke_per_m, 0.5 * (lo_safe + hi))
    s_cell = np.where(empty, 0.0, s_cell)
    dx = r - s_cell * tx
    dy = -s_cell * ty
    dz = -s_cell * tz
    rp = np.sqrt(dx * dx + dy * dy + dz * dz)
    cos_s = np.clip((tx * dx + ty * dy + tz * dz) / rp, -1.0, 1.0)
    cos_z = np.clip(-(rx * dx + ry * dy + rz * dz) / rp, -1.0, 1.0)
    return lo_safe, hi, rp, cos_s, cos_z, empty


def _power_batch_np(angles, r, alpha_t, alpha_r, k_r, k_m, k_a, gamma, g, f, area_km2, e_t):
    th_t, th_r, ph_t, ph_r = (angles[:, i] for i in range(4))
    half_pi = 0.5 * math.pi
    invalid = ~((th_t > 0) & (th_t < half_pi) & (th_r > 0) & (th_r < half_pi))
    k_e = k_r + k_m + k_a
    r_a, r_b, rp, mu, cos_z, empty = _common_volume_np(
        r, th_t, th_r, ph_t, ph_r, alpha_r, k_e * M_TO_KM)

    gg = g * g
    p_ray = 3.0 * (1.0 + 3.0 * gamma + (1.0 - gamma) * mu * mu) / (16.0 * math.pi * (1.0 + 2.0 * gamma))
    p_mie = (1.0 - gg) / (4.0 * math.pi) * (
        (1.0 + gg - 2.0 * g * mu) ** -1.5 + f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + gg) ** 1.5))
    p = (k_r * p_ray + k_m * p_mie) / (k_r + k_m)

    omega_t = 2.0 * math.pi * (1.0 - math.cos(alpha_t))
    rp_km = rp * M_TO_KM
    chord = np.exp(-k_e * r_a * M_TO_KM) - np.exp(-k_e * np.where(np.isinf(r_b), np.inf, r_b) * M_TO_KM)
    num = e_t * area_km2 * alpha_t * alpha_t * p * cos_z
    den = 4.0 * omega_t * k_e * rp_km * rp_km * np.exp(k_e * rp_km)
    out = num / den * chord
    out = np.where(empty | invalid, 0.0, out)
    return out, invalid


def received_power_batch(angles, args, backend=None):
    """Received power for each row ``(th_T, th_R, ph_T, ph_R)`` of ``angles``.

    ``args`` is :func:`uvjitter.channel.power_args`.  Rows whose elevations
    leave ``(0, pi/2)`` score zero power and are flagged in the second return
    value.
    """
    angles = np.ascontiguousarray(angles, dtype=float).reshape(-1, 4)
    if resolve_backend(backend) == "numba":
        return _power_batch_nb(angles, *args)
    return _power_batch_np(angles, *args)


# --- quadratic (FTPD) model over a batch of jitter offsets -----------------

@njit
def _ftpd_batch_nb(offsets, shift, gmat, eps):
    n = offsets.shape[0]
    out = np.empty(n)
    b = np.empty(4)
    for i in range(n):
        for j in range(4):
            b[j] = offsets[i, j] - shift[j]
        acc = 0.0
        for j in range(4):
            row = 0.0
            for k in range(4):
                row += gmat[j, k] * b[k]
            acc += b[j] * row
        out[i] = acc + eps
    return out


def _ftpd_batch_np(offsets, shift, gmat, eps):
    b = offsets - shift
    return np.einsum("ij,jk,ik->i", b, gmat, b) + eps


def ftpd_batch(offsets, shift, gmat, eps, backend=None):
    """Evaluate ``(a - shift) G (a - shift)^T + eps`` row-wise."""
    offsets = np.ascontiguousarray(offsets, dtype=float).reshape(-1, 4)
    shift = np.ascontiguousarray(shift, dtype=float)
    gmat = np.ascontiguousarray(gmat, dtype=float)
    if resolve_backend(backend) == "numba":
        return _ftpd_batch_nb(offsets, shift, gmat, float(eps))
    return _ftpd_batch_np(offsets, shift, gmat, float(eps))


# --- Poisson sampling inside numba ------------------------------------------

@njit
def _poisson_nb(lam):
    if lam <= 0.0:
        return 0
    if lam < 30.0:
        u = np.random.random()
        k = 0
        p = math.exp(-lam)
        cdf = p
        while u > cdf and k < 1000:
            k += 1
            p *= lam / k
            cdf += p
        return k
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = np.random.random() - 0.5
        v = np.random.random()
        us = 0.5 - abs(u)
        if us <= 0.0:
            continue
        k = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if us >= 0.07 and v <= vr:
            return int(k)
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
                <= -lam + k * loglam - math.lgamma(k + 1.0)):
            return int(k)


@njit
def _poisson_block_nb(seed, means):
    np.random.seed(seed)
    out = np.empty(means.shape[0], dtype=np.int64)
    for i in range(means.shape[0]):
        out[i] = _poisson_nb(means[i])
    return out


def poisson_block(seed, means, backend=None):
    """Poisson draws for ``means`` from a stream fully determined by ``seed`` (uint32)."""
    means = np.ascontiguousarray(means, dtype=float)
    if resolve_backend(backend) == "numba":
        return _poisson_block_nb(np.uint32(seed), means)
    return sample_poisson_array(means, np.random.Generator(np.random.PCG64(seed)))


# --- symbol-level OOK simulation --------------------------------------------

@njit
def _ber_block_nb(seed, n, sigma, shift, gmat, eps, photons_per_watt, lam_b, n_th):
    """Return (errors, ones) over ``n`` simulated symbols."""
    np.random.seed(seed)
    errors = 0
    ones = 0
    b = np.empty(4)
    for _ in range(n):
        if np.random.random() < 0.5:
            ones += 1
            for j in range(4):
                b[j] = sigma[j] * np.random.standard_normal() - shift[j]
            e_r = eps
            for j in range(4):
                row = 0.0
                for k in range(4):
                    row += gmat[j, k] * b[k]
                e_r += b[j] * row
            lam = lam_b + max(0.0, e_r) * photons_per_watt
            if _poisson_nb(lam) <= n_th:
                errors += 1
        else:
            if _poisson_nb(lam_b) > n_th:
                errors += 1
    return errors, ones


def _ber_block_np(seed, n, sigma, shift, gmat, eps, photons_per_watt, lam_b, n_th):
    rng = np.random.Generator(np.random.PCG64(seed))
    bits = rng.random(n) < 0.5
    n1 = int(bits.sum())
    offsets = rng.standard_normal((n1, 4)) * sigma
    e_r = _ftpd_batch_np(offsets, shift, gmat, eps)
    lam1 = lam_b + np.maximum(e_r, 0.0) * photons_per_watt
    c1 = sample_poisson_array(lam1, rng)
    c0 = sample_poisson_array(np.full(n - n1, lam_b), rng)
    errors = int(np.count_nonzero(c1 <= n_th) + np.count_nonzero(c0 > n_th))
    return errors, n1


def ber_block(seed, n, sigma, shift, gmat, eps, photons_per_watt, lam_b, n_th, backend=None):
    """Simulate ``n`` equiprobable OOK symbols through the FTPD jitter model.

    ``photons_per_watt`` maps received power to mean signal photons per pulse.
    """
    sigma = np.ascontiguousarray(sigma, dtype=float)
    shift = np.ascontiguousarray(shift, dtype=float)
    gmat = np.ascontiguousarray(gmat, dtype=float)
    args = (int(n), sigma, shift, gmat, float(eps), float(photons_per_watt),
            float(lam_b), int(n_th))
    if resolve_backend(backend) == "numba":
        errors, ones = _ber_block_nb(np.uint32(seed), *args)
        return int(errors), int(ones)
    return _ber_block_np(int(seed), *args)
