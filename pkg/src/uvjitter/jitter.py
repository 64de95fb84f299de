"""Second-order (FTPD) model of received power in the four jitter angles.

Jitter offsets are ordered ``(theta_Tj, theta_Rj, phi_Tj, phi_Rj)``.  The
expansion ``f0 + grad . a + a G a^T`` is rewritten as
``(a - shift) G (a - shift)^T + eps`` so that, with Gaussian ``a``, the power
is a shifted quadratic form in normal variables.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import LinkGeometry, common_volume, received_power
from .errors import (
    DegenerateFormError,
    DomainError,
    InputError,
    NonSmoothPointError,
    SingularMatrixError,
)
from .numerics import solve4

ANGLE_NAMES = ("theta_t", "theta_r", "phi_t", "phi_r")
FD_STEP = 1e-4


@dataclass(frozen=True)
class JitterSpec:
    """Gaussian jitter: means and standard deviations (rad), jitter-ordered."""

    mean: tuple = (0.0, 0.0, 0.0, 0.0)
    sigma: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        sigma = tuple(float(v) for v in self.sigma)
        if len(mean) != 4 or len(sigma) != 4:
            raise InputError("jitter mean and sigma need four components")
        if not all(math.isfinite(v) for v in mean + sigma):
            raise InputError("jitter parameters must be finite")
        if any(s < 0 for s in sigma):
            raise InputError("jitter standard deviations must be >= 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def isotropic(cls, sigma, mean=(0.0, 0.0, 0.0, 0.0)):
        return cls(mean=mean, sigma=(sigma,) * 4)

    @property
    def sigma_array(self):
        return np.array(self.sigma)

    @property
    def mean_array(self):
        return np.array(self.mean)


@dataclass(frozen=True)
class QuadraticModel:
    f0: float
    grad: np.ndarray = field(repr=False)
    gmat: np.ndarray = field(repr=False)
    shift: np.ndarray = field(repr=False)
    e: float = 0.0

    @property
    def eps(self):
        return self.f0 + self.e

    def taylor(self, a):
        """``f0 + grad . a + a G a^T`` for one offset vector or a stack of them."""
        a = np.asarray(a, dtype=float)
        quad = np.einsum("...j,jk,...k->...", a, self.gmat, a)
        return self.f0 + a @ self.grad + quad

    def shifted(self, a):
        """``(a - shift) G (a - shift)^T + eps``; equals :meth:`taylor` identically."""
        b = np.asarray(a, dtype=float) - self.shift
        return np.einsum("...j,jk,...k->...", b, self.gmat, b) + self.eps


def _wrap_azimuth(phi):
    wrapped = math.remainder(phi, 2.0 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def perturbed_geometry(geom, offsets):
    a = np.asarray(offsets, dtype=float)
    if a.shape != (4,) or not np.all(np.isfinite(a)):
        raise InputError("jitter offsets must be four finite numbers")
    th_t = geom.theta_t + a[0]
    th_r = geom.theta_r + a[1]
    for name, v in (("theta_t", th_t), ("theta_r", th_r)):
        if not 0.0 < v < 0.5 * math.pi:
            raise DomainError(f"perturbed {name} = {v:.6g} rad leaves (0, pi/2)", angle=name)
    return LinkGeometry(geom.r, th_t, th_r,
                        _wrap_azimuth(geom.phi_t + a[2]), _wrap_azimuth(geom.phi_r + a[3]),
                        geom.alpha_t, geom.alpha_r)


def perturbed_power(geom, params, offsets):
    """Received power with the pointing angles displaced by ``offsets``."""
    if not np.any(offsets):
        return received_power(geom, params)
    return received_power(perturbed_geometry(geom, offsets), params)


def fd_derivatives(func, h=FD_STEP):
    """Value, gradient and Hessian of ``func`` at the origin of R^4.

    Central differences at steps ``h`` and ``2h`` combined by one Richardson
    step, which removes the leading O(h^2) error term.
    """
    cache = {}

    def at(*steps):
        key = tuple(steps)
        if key not in cache:
            x = np.zeros(4)
            for i, s in steps:
                x[i] += s
            cache[key] = func(x)
        return cache[key]

    f0 = func(np.zeros(4))
    grad = np.empty(4)
    hess = np.empty((4, 4))

    def rich(fh, f2h):
        return (4.0 * fh - f2h) / 3.0

    for i in range(4):
        d = []
        dd = []
        for step in (h, 2.0 * h):
            fp = at((i, step))
            fm = at((i, -step))
            d.append((fp - fm) / (2.0 * step))
            dd.append((fp - 2.0 * f0 + fm) / (step * step))
        grad[i] = rich(*d)
        hess[i, i] = rich(*dd)

    for i in range(4):
        for j in range(i + 1, 4):
            est = []
            for step in (h, 2.0 * h):
                fpp = at((i, step), (j, step))
                fpm = at((i, step), (j, -step))
                fmp = at((i, -step), (j, step))
                fmm = at((i, -step), (j, -step))
                est.append((fpp - fpm - fmp + fmm) / (4.0 * step * step))
            hess[i, j] = hess[j, i] = rich(*est)

    hess = 0.5 * (hess + hess.T)
    return f0, grad, hess


def complete_square(f0, grad, gmat):
    """Rewrite ``f0 + grad . a + a G a^T`` as ``(a - shift) G (a - shift)^T + eps``."""
    grad = np.asarray(grad, dtype=float)
    gmat = np.asarray(gmat, dtype=float)
    if not np.any(grad):
        return QuadraticModel(float(f0), grad.copy(), gmat.copy(), np.zeros(4), 0.0)
    try:
        shift = solve4(gmat, -0.5 * grad)
    except SingularMatrixError as exc:
        raise DegenerateFormError(
            "curvature matrix is singular, so the quadratic model cannot be centred; "
            "perturb the base geometry slightly and retry"
        ) from exc
    e = -float(shift @ gmat @ shift)
    return QuadraticModel(float(f0), grad.copy(), gmat.copy(), shift, e)


def expand_ftpd(geom, params, spec=None, h=FD_STEP):
    """Quadratic jitter model of received power about the mean pointing.

    Jitter means in ``spec`` are folded into the base geometry, so the
    returned model is in zero-mean offsets.  ``G`` is half the Hessian, which
    makes ``f0 + grad . a + a G a^T`` the second-order Maclaurin polynomial.
    """
    if spec is not None and any(spec.mean):
        geom = perturbed_geometry(geom, spec.mean_array)

    base = common_volume(geom, params)
    if base.empty:
        raise NonSmoothPointError("common volume is empty at the expansion point")
    clipped = []

    def func(a):
        try:
            g = perturbed_geometry(geom, a)
        except DomainError as exc:
            raise NonSmoothPointError(
                f"finite-difference stencil left the valid geometry ({exc})") from exc
        cv = common_volume(g, params)
        if cv.empty:
            raise NonSmoothPointError("finite-difference stencil hit an empty common volume")
        clipped.append(cv.r_a == 0.0)
        return received_power(g, params)

    f0, grad, hess = fd_derivatives(func, h)
    if any(clipped) and not all(clipped):
        # the chord entry switches between clamped (transmitter inside the FOV)
        # and free within the stencil: received power has a slope kink here
        raise NonSmoothPointError(
            "expansion point sits on the FOV cone boundary through the transmitter "
            "(chord entry clamp switches inside the stencil); received power is not "
            "differentiable here")
    return complete_square(f0, grad, 0.5 * hess)


def expanded_square_constant(shift, gmat):
    """The ten-term expansion of ``-(shift G shift^T)`` written out entry by entry."""
    a, b, c, d = shift
    f = gmat
    return -(a * a * f[0, 0] + 2 * a * b * f[0, 1] + 2 * a * c * f[0, 2] + 2 * a * d * f[0, 3]
             + b * b * f[1, 1] + 2 * b * c * f[1, 2] + 2 * b * d * f[1, 3]
             + c * c * f[2, 2] + 2 * c * d * f[2, 3] + d * d * f[3, 3])
