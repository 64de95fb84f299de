"""Fast invariant checks across all modules, run by ``uvjitter validate``."""

import math
import time
import warnings

import numpy as np
from scipy import integrate, stats

from .channel import ChannelParams, LinkGeometry, common_volume, phase_function
from .counting import (DetectorParams, ber_jitter, ber_no_jitter, lambda_s, pmf_jitter,
                       poisson_cdf, poisson_sf)
from .jitter import JitterSpec, expand_ftpd, expanded_square_constant
from .montecarlo import McConfig, mc_ber, mc_power
from .numerics import jacobi_eigen, make_rng
from .quadform import PowerDensity, decompose, fit_gamma_series

BASELINE = LinkGeometry.from_degrees(50.0, 20.0, 20.0, 5.0, 0.0, 1.0, 30.0)


def _phase_norm():
    p = ChannelParams()
    val, _ = integrate.quad(lambda mu: 2 * math.pi * phase_function(mu, p), -1, 1,
                            epsabs=1e-13, epsrel=1e-12)
    return abs(val - 1) < 1e-6, f"sphere integral {val:.12f}"


def _eigen():
    rng = make_rng(1)
    worst = 0.0
    for _ in range(50):
        a = rng.standard_normal((4, 4))
        a = a + a.T
        vals, vecs = jacobi_eigen(a)
        worst = max(worst, np.abs(vecs @ np.diag(vals) @ vecs.T - a).max(),
                    np.abs(vecs.T @ vecs - np.eye(4)).max())
    return worst < 1e-12, f"max reconstruction/orthogonality error {worst:.2e}"


def _common_volume():
    cv = common_volume(BASELINE)
    ok = (not cv.empty) and 0 <= cv.r_a < cv.r_b and cv.zeta <= BASELINE.alpha_r + 1e-12
    return ok, f"r_A={cv.r_a:.4f} m r_B={cv.r_b:.4f} m"


def _square_completion(model):
    rng = make_rng(2)
    a = rng.standard_normal((100, 4)) * 0.05
    lhs = model.taylor(a)
    rhs = model.shifted(a)
    rel = np.max(np.abs(lhs - rhs) / np.abs(lhs))
    ten = expanded_square_constant(model.shift, model.gmat)
    direct = -float(model.shift @ model.gmat @ model.shift)
    rel_e = abs(ten - direct) / abs(direct)
    return rel < 1e-10 and rel_e < 1e-12, f"identity {rel:.1e}, expansion {rel_e:.1e}"


def _cumulants(model):
    spec = JitterSpec.isotropic(0.04)
    form = decompose(model, spec)
    rng = make_rng(3)
    n = 200_000
    x = np.full(n, form.eps)
    for lam, d in form.pos:
        x += lam * rng.noncentral_chisquare(1, d, n) if d > 0 else lam * rng.chisquare(1, n)
    for lam, d in form.neg:
        x -= lam * rng.noncentral_chisquare(1, d, n) if d > 0 else lam * rng.chisquare(1, n)
    k1 = form.mean
    k2 = form.variance
    z1 = (x.mean() - k1) / math.sqrt(k2 / n)
    z2 = (x.var() - k2) / math.sqrt(np.var((x - x.mean()) ** 2) / n)
    return abs(z1) < 4 and abs(z2) < 4, f"mean z={z1:+.2f}, variance z={z2:+.2f}"


def _gamma_chi2():
    gs = fit_gamma_series(((1.0, 0.0),), 6)
    xs = np.linspace(0.01, 20, 20001)
    l1 = integrate.trapezoid(np.abs(gs.pdf(xs) - stats.chi2.pdf(xs, 1)), xs)
    return l1 < 0.02, f"L1 vs chi2_1 {l1:.2e}"


def _density_mass(model):
    mass = PowerDensity.from_model(model, JitterSpec.isotropic(0.04)).total_mass()
    return abs(mass - 1) < 1e-3, f"mass {mass:.6f}"


def _pmf_sum(model, det):
    dens = PowerDensity.from_model(model, JitterSpec.isotropic(0.04))
    lam_b = det.lambda_b
    top = lambda_s(dens.support()[1], det) + lam_b
    n = np.arange(int(top + 12 * math.sqrt(top) + 30))
    total = float(np.sum(pmf_jitter(n, dens, det, lam_b)))
    return abs(total - 1) < 1e-3, f"sum {total:.6f}"


def _ber_monotone():
    lam_b = 0.15
    grid = np.linspace(0, 40, 161)
    pe = [ber_no_jitter(ls, lam_b)[0] for ls in grid]
    ok = all(b <= a + 1e-15 for a, b in zip(pe, pe[1:])) and all(0 <= v <= 0.5 for v in pe)
    return ok, f"P_e from {pe[0]:.3f} to {pe[-1]:.2e}"


def _threshold_global():
    rng = make_rng(4)
    bad = 0
    for _ in range(200):
        ls, lb = rng.uniform(0, 60), rng.uniform(0, 20)
        pe, nth = ber_no_jitter(ls, lb)
        ks = np.arange(0, int(ls + lb + 10 * math.sqrt(ls + lb + 1)) + 2)
        brute = np.min(0.5 * poisson_cdf(ks, ls + lb) + 0.5 * poisson_sf(ks, lb))
        bad += pe > brute * (1 + 1e-12) + 1e-300
    return bad == 0, f"{bad} of 200 thresholds beaten by brute force"


def _degenerate_limit(model, det):
    dens = PowerDensity.from_model(model, JitterSpec.isotropic(1e-6))
    pej, _ = ber_jitter(dens, det, det.lambda_b)
    pe, _ = ber_no_jitter(lambda_s(model.f0, det), det.lambda_b)
    return abs(pej - pe) < 1e-6, f"|P_ej - P_e| = {abs(pej - pe):.2e}"


def _mc_determinism(model, det):
    spec = JitterSpec.isotropic(0.04)
    cfg1 = McConfig(seed=7, n_samples=20_000, n_symbols=400_000, workers=1)
    cfg2 = McConfig(seed=7, n_samples=20_000, n_symbols=400_000, workers=3)
    h1 = mc_power(BASELINE, ChannelParams(), spec, cfg1, "exact")
    h2 = mc_power(BASELINE, ChannelParams(), spec, cfg2, "exact")
    b1 = mc_ber(BASELINE, ChannelParams(), spec, det, det.lambda_b, 1, cfg1, model=model)
    b2 = mc_ber(BASELINE, ChannelParams(), spec, det, det.lambda_b, 1, cfg2, model=model)
    same = np.array_equal(h1.density, h2.density) and b1 == b2
    norm = abs(np.sum(h1.density * h1.widths) - 1)
    return same and norm < 1e-12, f"worker-count invariant: {same}, normalisation error {norm:.1e}"


def run_suite(out=print):
    """Run every check, print a table and return True if all passed."""
    params = ChannelParams()
    det = DetectorParams()
    model = expand_ftpd(BASELINE, params)
    checks = [
        ("phase function normalisation", _phase_norm),
        ("Jacobi eigendecomposition", _eigen),
        ("common volume baseline", _common_volume),
        ("square completion identities", lambda: _square_completion(model)),
        ("spectral form moments vs MC", lambda: _cumulants(model)),
        ("gamma series vs chi2_1", _gamma_chi2),
        ("power density mass", lambda: _density_mass(model)),
        ("jittered pmf sums to 1", lambda: _pmf_sum(model, det)),
        ("BER monotone and bounded", _ber_monotone),
        ("threshold is global minimum", _threshold_global),
        ("small-jitter BER limit", lambda: _degenerate_limit(model, det)),
        ("MC determinism and normalisation", lambda: _mc_determinism(model, det)),
    ]
    width = max(len(name) for name, _ in checks)
    all_ok = True
    for name, check in checks:
        start = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ok, detail = check()
        except Exception as exc:  # a crash is a failed check, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}  ({time.perf_counter() - start:.1f}s)")
    out(f"{'all checks passed' if all_ok else 'some checks FAILED'}")
    return all_ok
