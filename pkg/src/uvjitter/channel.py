"""Closed-form single-scattering NLOS channel.

Frame: transmitter at the origin, receiver at ``(r, 0, 0)``, z up.  The
transmitter axis is ``(cos th_T cos ph_T, cos th_T sin ph_T, sin th_T)``; the
receiver axis looks back over the baseline,
``(-cos th_R cos ph_R, cos th_R sin ph_R, sin th_R)``.

The common volume is represented by the chord of the transmitter beam axis
inside the receiver field-of-view cone.  Received power is evaluated at one
representative scattering cell, the chord midpoint.

Units at the public surface: metres, radians, km^-1, cm^2 and watts.  The
power formula runs entirely in kilometres; conversion happens once, in
:func:`received_power`.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from ._accel import njit
from .errors import InputError

HALF_PI = 0.5 * math.pi
CM2_TO_KM2 = 1e-10
M_TO_KM = 1e-3


@dataclass(frozen=True)
class LinkGeometry:
    """Baseline range (m) and transceiver pointing angles (rad)."""

    r: float
    theta_t: float
    theta_r: float
    phi_t: float
    phi_r: float
    alpha_t: float
    alpha_r: float

    def __post_init__(self):
        vals = (self.r, self.theta_t, self.theta_r, self.phi_t, self.phi_r,
                self.alpha_t, self.alpha_r)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("geometry values must be finite")
        if not self.r > 0:
            raise InputError(f"range must be positive, got {self.r}")
        for name in ("theta_t", "theta_r"):
            v = getattr(self, name)
            if not 0 < v < HALF_PI:
                raise InputError(f"{name} must lie in (0, pi/2), got {v}")
        for name in ("alpha_t", "alpha_r"):
            v = getattr(self, name)
            if not 0 < v < HALF_PI:
                raise InputError(f"{name} must lie in (0, pi/2), got {v}")
        for name in ("phi_t", "phi_r"):
            v = getattr(self, name)
            if not -math.pi < v <= math.pi:
                raise InputError(f"{name} must lie in (-pi, pi], got {v}")

    @classmethod
    def from_degrees(cls, r, theta_t, theta_r, phi_t, phi_r, alpha_t, alpha_r):
        d = math.radians
        return cls(r, d(theta_t), d(theta_r), d(phi_t), d(phi_r), d(alpha_t), d(alpha_r))

    @property
    def angles(self):
        """Jitter-ordered pointing angles (theta_T, theta_R, phi_T, phi_R)."""
        return np.array([self.theta_t, self.theta_r, self.phi_t, self.phi_r])

    def with_angles(self, angles):
        th_t, th_r, ph_t, ph_r = (float(a) for a in angles)
        return replace(self, theta_t=th_t, theta_r=th_r, phi_t=ph_t, phi_r=ph_r)


@dataclass(frozen=True)
class ChannelParams:
    """Atmospheric coefficients (km^-1), phase-function shape, aperture and pulse power."""

    k_r: float = 0.266
    k_m: float = 0.284
    k_a: float = 0.802
    gamma: float = 0.017
    g: float = 0.72
    f: float = 0.5
    area_cm2: float = 1.77
    e_t: float = 0.1

    def __post_init__(self):
        for name in ("k_r", "k_m", "k_a"):
            if not getattr(self, name) >= 0:
                raise InputError(f"{name} must be >= 0")
        if not self.k_e > 0:
            raise InputError("total extinction k_r + k_m + k_a must be positive")
        if not self.k_r + self.k_m > 0:
            raise InputError("at least one scattering coefficient must be positive")
        if not abs(self.g) < 1:
            raise InputError("asymmetry g must satisfy |g| < 1")
        if not 0 <= self.f <= 1:
            raise InputError("Mie shape f must lie in [0, 1]")
        if not self.area_cm2 > 0:
            raise InputError("receiver area must be positive")
        if not self.e_t >= 0:
            raise InputError("pulse power must be >= 0")

    @property
    def k_e(self):
        return self.k_r + self.k_m + self.k_a


@dataclass(frozen=True)
class CommonVolume:
    r_a: float      # m, chord entry along the beam axis
    r_b: float      # m, chord exit (inf when the beam never leaves the FOV)
    r_prime: float  # m, cell-to-receiver distance
    theta_s: float  # rad, scattering angle
    zeta: float     # rad, arrival angle off the receiver axis
    empty: bool


# --- scalar cores (compiled by numba when available) -----------------------

@njit
def _inside_fov(s, tx, ty, tz, r, rx, ry, rz, c2):
    wx = s * tx - r
    wy = s * ty
    wz = s * tz
    d = wx * rx + wy * ry + wz * rz
    return d >= 0.0 and d * d >= c2 * (wx * wx + wy * wy + wz * wz)


@njit
def _common_volume_core(r, th_t, th_r, ph_t, ph_r, alpha_r, ke_per_m):
    tx = math.cos(th_t) * math.cos(ph_t)
    ty = math.cos(th_t) * math.sin(ph_t)
    tz = math.sin(th_t)
    rx = -math.cos(th_r) * math.cos(ph_r)
    ry = math.cos(th_r) * math.sin(ph_r)
    rz = math.sin(th_r)
    ca = math.cos(alpha_r)
    c2 = ca * ca

    # (w.r)^2 - cos^2(a) |w|^2 along w(s) = s t - R0 is A s^2 + B s + C
    tr = tx * rx + ty * ry + tz * rz
    a_ = tr * tr - c2
    b_ = -2.0 * tr * (r * rx) + 2.0 * c2 * (r * tx)
    c_ = (r * rx) ** 2 - c2 * r * r

    s1 = -1.0
    s2 = -1.0
    if abs(a_) <= 1e-13 * (abs(b_) / r + abs(c_) / (r * r) + 1e-300):
        if b_ != 0.0:
            s1 = -c_ / b_
    else:
        disc = b_ * b_ - 4.0 * a_ * c_
        if disc >= 0.0:
            sq = math.sqrt(disc)
            q = -0.5 * (b_ + sq) if b_ >= 0.0 else -0.5 * (b_ - sq)
            s1 = q / a_
            if q != 0.0:
                s2 = c_ / q
            else:
                s2 = s1
    if s1 > s2:
        s1, s2 = s2, s1

    # breakpoints 0 <= p0 < p1 < p2 split [0, inf) into segments of constant membership
    p0 = 0.0
    p1 = math.inf
    p2 = math.inf
    if s1 > 0.0:
        p1 = s1
        if s2 > s1:
            p2 = s2
    elif s2 > 0.0:
        p1 = s2

    lo = math.inf
    hi = -math.inf
    starts = (p0, p1, p2)
    ends = (p1, p2, math.inf)
    for i in range(3):
        a = starts[i]
        b = ends[i]
        if a == math.inf or not b > a:
            continue
        if b == math.inf:
            probe = a + 10.0 * (a + r)
        else:
            probe = 0.5 * (a + b)
        if _inside_fov(probe, tx, ty, tz, r, rx, ry, rz, c2):
            if a < lo:
                lo = a
            hi = b

    if lo == math.inf:
        return 0.0, 0.0, 0.0, 0.0, 0.0, True

    if hi == math.inf:
        s_cell = lo + 1.0 / ke_per_m
    else:
        s_cell = 0.5 * (lo + hi)
    px = s_cell * tx
    py = s_cell * ty
    pz = s_cell * tz
    dx = r - px
    dy = -py
    dz = -pz
    rp = math.sqrt(dx * dx + dy * dy + dz * dz)
    cos_s = (tx * dx + ty * dy + tz * dz) / rp
    cos_z = -(rx * dx + ry * dy + rz * dz) / rp
    cos_s = min(1.0, max(-1.0, cos_s))
    cos_z = min(1.0, max(-1.0, cos_z))
    return lo, hi, rp, math.acos(cos_s), math.acos(cos_z), False


@njit
def _phase_core(mu, k_r, k_m, gamma, g, f):
    p_ray = 3.0 * (1.0 + 3.0 * gamma + (1.0 - gamma) * mu * mu) / (16.0 * math.pi * (1.0 + 2.0 * gamma))
    gg = g * g
    p_mie = (1.0 - gg) / (4.0 * math.pi) * (
        (1.0 + gg - 2.0 * g * mu) ** -1.5
        + f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + gg) ** 1.5)
    )
    return (k_r * p_ray + k_m * p_mie) / (k_r + k_m)


@njit
def _power_core(r, th_t, th_r, ph_t, ph_r, alpha_t, alpha_r,
                k_r, k_m, k_a, gamma, g, f, area_km2, e_t):
    k_e = k_r + k_m + k_a
    r_a, r_b, rp, theta_s, zeta, empty = _common_volume_core(
        r, th_t, th_r, ph_t, ph_r, alpha_r, k_e * M_TO_KM)
    if empty:
        return 0.0
    p = _phase_core(math.cos(theta_s), k_r, k_m, gamma, g, f)
    omega_t = 2.0 * math.pi * (1.0 - math.cos(alpha_t))
    rp_km = rp * M_TO_KM
    chord = math.exp(-k_e * r_a * M_TO_KM)
    if r_b != math.inf:
        chord -= math.exp(-k_e * r_b * M_TO_KM)
    num = e_t * area_km2 * alpha_t * alpha_t * p * math.cos(zeta)
    den = 4.0 * omega_t * k_e * rp_km * rp_km * math.exp(k_e * rp_km)
    return num / den * chord


# --- public API ------------------------------------------------------------

def axis_vectors(geom):
    """Unit transmitter axis, unit receiver axis and receiver position."""
    t = np.array([
        math.cos(geom.theta_t) * math.cos(geom.phi_t),
        math.cos(geom.theta_t) * math.sin(geom.phi_t),
        math.sin(geom.theta_t),
    ])
    rhat = np.array([
        -math.cos(geom.theta_r) * math.cos(geom.phi_r),
        math.cos(geom.theta_r) * math.sin(geom.phi_r),
        math.sin(geom.theta_r),
    ])
    return t, rhat, np.array([geom.r, 0.0, 0.0])


def common_volume(geom, params=None):
    """Beam-axis chord through the receiver FOV cone and the representative cell.

    ``params`` only matters when the chord never exits the cone; the cell is
    then placed one extinction length past the entry point.
    """
    params = params or ChannelParams()
    out = _common_volume_core(geom.r, geom.theta_t, geom.theta_r, geom.phi_t,
                              geom.phi_r, geom.alpha_r, params.k_e * M_TO_KM)
    return CommonVolume(*(float(v) for v in out[:5]), bool(out[5]))


def phase_function(cos_theta_s, params):
    """Rayleigh / generalised Henyey-Greenstein mixture, normalised over 4 pi sr."""
    mu = np.asarray(cos_theta_s, dtype=float)
    if np.any(np.abs(mu) > 1.0) or not np.all(np.isfinite(mu)):
        raise InputError("cos(theta_s) must lie in [-1, 1]")
    p = params
    gg = p.g * p.g
    p_ray = 3.0 * (1.0 + 3.0 * p.gamma + (1.0 - p.gamma) * mu * mu) / (
        16.0 * np.pi * (1.0 + 2.0 * p.gamma))
    p_mie = (1.0 - gg) / (4.0 * np.pi) * (
        (1.0 + gg - 2.0 * p.g * mu) ** -1.5
        + p.f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + gg) ** 1.5))
    out = (p.k_r * p_ray + p.k_m * p_mie) / (p.k_r + p.k_m)
    return float(out) if out.ndim == 0 else out


def power_args(geom, params):
    """Flat argument tuple shared by the scalar core and the batch kernels."""
    return (geom.r, geom.alpha_t, geom.alpha_r, params.k_r, params.k_m, params.k_a,
            params.gamma, params.g, params.f, params.area_cm2 * CM2_TO_KM2, params.e_t)


def received_power(geom, params):
    """Received power in watts (0 when the beam misses the field of view)."""
    return float(_power_core(
        geom.r, geom.theta_t, geom.theta_r, geom.phi_t, geom.phi_r,
        geom.alpha_t, geom.alpha_r, params.k_r, params.k_m, params.k_a,
        params.gamma, params.g, params.f, params.area_cm2 * CM2_TO_KM2, params.e_t))
