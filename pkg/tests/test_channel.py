import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from uvjitter import ChannelParams, LinkGeometry, common_volume, phase_function, received_power
from uvjitter.channel import axis_vectors, power_args
from uvjitter.errors import InputError
from uvjitter.kernels import received_power_batch
from uvjitter.numerics import make_rng

# independent scripted evaluation of the baseline link, frozen
BASELINE_POWER_W = 8.355675759159675e-12

angle = st.floats(0.05, 1.5)
azimuth = st.floats(-3.1, 3.1)


def march(geom, step=1e-3, s_max=400.0):
    """Dense ray march along the beam axis; returns (entry, exit) or None."""
    th_t, th_r, ph_t, ph_r = geom.theta_t, geom.theta_r, geom.phi_t, geom.phi_r
    t = np.array([math.cos(th_t) * math.cos(ph_t), math.cos(th_t) * math.sin(ph_t), math.sin(th_t)])
    axis = np.array([-math.cos(th_r) * math.cos(ph_r), math.cos(th_r) * math.sin(ph_r), math.sin(th_r)])
    s = np.arange(0.0, s_max + step / 2, step)
    w = s[:, None] * t[None, :] - np.array([geom.r, 0.0, 0.0])
    along = w @ axis
    inside = along >= np.linalg.norm(w, axis=1) * math.cos(geom.alpha_r)
    idx = np.flatnonzero(inside)
    if idx.size == 0:
        return None
    first, last = idx[0], idx[-1]
    entry = 0.0 if first == 0 else s[first] - step / 2
    exit_ = math.inf if last == s.size - 1 else s[last] + step / 2
    return entry, exit_


def cell_quantities(geom, entry, exit_):
    t, axis, rx = axis_vectors(geom)
    p = 0.5 * (entry + exit_) * t
    rp = np.linalg.norm(rx - p)
    theta_s = math.acos(np.clip(t @ (rx - p) / rp, -1, 1))
    zeta = math.acos(np.clip(axis @ (p - rx) / rp, -1, 1))
    return rp, theta_s, zeta


class TestAxes:
    def test_vertical(self):
        g = SimpleNamespace(theta_t=math.pi / 2, theta_r=0.3, phi_t=0.2, phi_r=0.0, r=10.0)
        t, _, _ = axis_vectors(g)
        np.testing.assert_allclose(t, [0, 0, 1], atol=1e-16)

    def test_coplanar(self):
        g = LinkGeometry.from_degrees(50, 25, 25, 0, 0, 1, 30)
        t, rhat, rx = axis_vectors(g)
        assert t[1] == rhat[1] == 0.0
        assert t[2] == rhat[2]
        np.testing.assert_array_equal(rx, [50, 0, 0])

    @given(angle, angle, azimuth, azimuth)
    def test_unit_norm(self, th_t, th_r, ph_t, ph_r):
        g = SimpleNamespace(theta_t=th_t, theta_r=th_r, phi_t=ph_t, phi_r=ph_r, r=1.0)
        t, rhat, _ = axis_vectors(g)
        assert abs(np.linalg.norm(t) - 1) < 1e-14 and abs(np.linalg.norm(rhat) - 1) < 1e-14


class TestGeometryValidation:
    @pytest.mark.parametrize("kw", [dict(r=0.0), dict(theta_t=0.0), dict(theta_r=math.pi / 2),
                                    dict(alpha_r=0.0), dict(phi_t=-math.pi), dict(r=math.nan)])
    def test_rejects(self, kw):
        base = dict(r=50.0, theta_t=0.3, theta_r=0.3, phi_t=0.0, phi_r=0.0, alpha_t=0.02, alpha_r=0.5)
        base.update(kw)
        with pytest.raises(InputError):
            LinkGeometry(**base)

    def test_params_validation(self):
        with pytest.raises(InputError):
            ChannelParams(g=1.0)
        with pytest.raises(InputError):
            ChannelParams(k_r=0, k_m=0, k_a=0)
        with pytest.raises(InputError):
            ChannelParams(area_cm2=0)


class TestCommonVolume:
    def test_axis_crossing_limit(self):
        g = LinkGeometry.from_degrees(50, 30, 30, 0, 0, 1, 1e-6)
        cv = common_volume(g)
        expected = 50 * math.sin(math.radians(30)) / math.sin(math.radians(60))
        assert expected == pytest.approx(28.8675, abs=1e-4)
        assert cv.r_a == pytest.approx(expected, abs=1e-3)
        assert cv.r_b == pytest.approx(expected, abs=1e-3)

    def test_pointed_away_is_empty(self):
        # beam tilted back, behind the transmitter, receiver looking steeply up with a narrow FOV
        g = LinkGeometry(50.0, math.radians(30), math.radians(80), math.pi, 0.0,
                         math.radians(1), math.radians(5))
        assert common_volume(g).empty
        assert received_power(g, ChannelParams()) == 0.0
        assert march(g) is None

    def test_baseline_against_ray_march(self, baseline):
        cv = common_volume(baseline)
        entry, exit_ = march(baseline)
        assert cv.r_a == pytest.approx(entry, abs=5e-4)
        assert cv.r_b == pytest.approx(exit_, abs=5e-4)
        rp, theta_s, zeta = cell_quantities(baseline, entry, exit_)
        assert cv.r_prime == pytest.approx(rp, abs=5e-4)
        assert cv.theta_s == pytest.approx(theta_s, abs=1e-5)
        assert cv.zeta == pytest.approx(zeta, abs=1e-5)
        assert cv.zeta <= baseline.alpha_r

    def test_random_geometries_against_ray_march(self):
        rng = make_rng(21)
        checked = 0
        while checked < 200:
            g = LinkGeometry(rng.uniform(20, 150), *np.radians(rng.uniform(5, 80, 2)),
                             *np.radians(rng.uniform(-60, 60, 2)), math.radians(1),
                             math.radians(rng.uniform(5, 60)))
            cv = common_volume(g)
            marched = march(g, s_max=600.0)
            if marched is None:
                assert cv.empty
                continue
            entry, exit_ = marched
            if (exit_ - entry) < 0.01:
                continue  # grazing chords shorter than the march resolution
            assert not cv.empty
            assert cv.r_a == pytest.approx(entry, abs=1e-3)
            if math.isinf(exit_):
                assert cv.r_b > 600.0
            else:
                assert cv.r_b == pytest.approx(exit_, abs=1e-3)
            checked += 1

    def test_unbounded_chord_cell_one_extinction_length_in(self):
        # both axes at 80 deg elevation are 20 deg apart, inside the 30 deg FOV
        g = LinkGeometry.from_degrees(50, 80, 80, 0, 0, 1, 30)
        p = ChannelParams()
        cv = common_volume(g, p)
        assert math.isinf(cv.r_b)
        t, _, rx = axis_vectors(g)
        cell = (cv.r_a + 1e3 / p.k_e) * t
        assert cv.r_prime == pytest.approx(np.linalg.norm(rx - cell), rel=1e-12)


class TestPhaseFunction:
    def test_rayleigh_closed_form(self):
        p = ChannelParams(k_m=0.0, gamma=0.0)
        assert phase_function(0.0, p) == pytest.approx(3 / (16 * math.pi), rel=1e-15)

    def test_isotropic_limit(self):
        p = ChannelParams(k_r=0.0, g=0.0, f=0.0)
        np.testing.assert_allclose(phase_function(np.linspace(-1, 1, 11), p), 1 / (4 * math.pi))

    @given(st.floats(0, 0.5), st.floats(-0.95, 0.95), st.floats(0, 1), st.floats(0.01, 1), st.floats(0, 1))
    def test_normalised(self, gamma, g, f, k_r, k_m):
        p = ChannelParams(k_r=k_r, k_m=k_m, gamma=gamma, g=g, f=f)
        val, _ = integrate.quad(lambda mu: 2 * math.pi * phase_function(mu, p), -1, 1,
                                epsabs=1e-12, epsrel=1e-12, limit=200)
        assert val == pytest.approx(1.0, abs=1e-6)

    def test_rejects_out_of_range(self):
        with pytest.raises(InputError):
            phase_function(1.01, ChannelParams())


class TestReceivedPower:
    def test_baseline_regression(self, baseline, params):
        assert received_power(baseline, params) == pytest.approx(BASELINE_POWER_W, rel=1e-12)

    def test_linear_in_area_and_energy(self, baseline, params):
        base = received_power(baseline, params)
        assert received_power(baseline, ChannelParams(area_cm2=2 * 1.77)) == pytest.approx(2 * base, rel=1e-14)
        assert received_power(baseline, ChannelParams(e_t=0.2)) == pytest.approx(2 * base, rel=1e-14)

    def test_azimuthal_reflection(self, params):
        for x in (0.05, 0.2, 0.6):
            plus = LinkGeometry(50, 0.35, 0.35, x, 0.0, 0.02, 0.5)
            minus = LinkGeometry(50, 0.35, 0.35, -x, 0.0, 0.02, 0.5)
            assert received_power(plus, params) == pytest.approx(received_power(minus, params), rel=1e-13)

    @given(st.floats(5, 300), angle, angle, azimuth, azimuth, st.floats(0.005, 0.3), st.floats(0.02, 1.2))
    def test_nonnegative_and_zero_when_empty(self, r, th_t, th_r, ph_t, ph_r, a_t, a_r):
        g = LinkGeometry(r, th_t, th_r, ph_t, ph_r, a_t, a_r)
        e = received_power(g, ChannelParams())
        assert e >= 0
        if common_volume(g).empty:
            assert e == 0

    @pytest.mark.parametrize("backend", ["numba", "numpy"])
    def test_batch_matches_scalar(self, baseline, params, backend):
        rng = make_rng(3)
        angles = baseline.angles + rng.standard_normal((500, 4)) * 0.1
        vals, invalid = received_power_batch(angles, power_args(baseline, params), backend=backend)
        for row, v, bad in zip(angles, vals, invalid):
            if bad:
                assert v == 0.0
                continue
            ph = [math.remainder(a, 2 * math.pi) for a in row[2:]]
            g = LinkGeometry(baseline.r, row[0], row[1], *ph, baseline.alpha_t, baseline.alpha_r)
            assert v == pytest.approx(received_power(g, params), rel=1e-12, abs=1e-30)
