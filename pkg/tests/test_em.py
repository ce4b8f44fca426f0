import cmath
import math

import numpy as np
import pytest

from risray import em, geo
from risray.tracer import TraceConfig, make_path, trace


class TestFresnel:
    def test_lossless_normal_incidence(self):
        pair = em.fresnel(4.0 + 0j, 0.0)
        assert pair.gamma_perp == pytest.approx(-1 / 3, abs=1e-12)
        # standard right-handed basis convention: the parallel coefficient
        # carries the opposite sign at normal incidence
        assert pair.gamma_par == pytest.approx(+1 / 3, abs=1e-12)

    def test_grazing_limit(self):
        for eps in (4.0 + 0j, 5.24 - 0.402j, 2.0 - 1.0j):
            pair = em.fresnel(eps, math.pi / 2 - 1e-8)
            assert abs(pair.gamma_perp - (-1.0)) < 1e-3
            assert abs(pair.gamma_par - (-1.0)) < 1e-3

    def test_concrete_45deg_frozen(self):
        # independently evaluated with 30-digit arithmetic
        eps = complex(5.24, -0.402013505897659)
        pair = em.fresnel(eps, math.pi / 4)
        assert pair.gamma_perp.real == pytest.approx(-0.510510838212, abs=1e-9)
        assert pair.gamma_perp.imag == pytest.approx(0.0156439552183, abs=1e-9)
        assert pair.gamma_par.real == pytest.approx(0.260376582597, abs=1e-9)
        assert pair.gamma_par.imag == pytest.approx(-0.0159728173829, abs=1e-9)

    def test_passivity(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            eps = complex(1.0 + 9 * rng.random(), -3 * rng.random())
            theta = rng.random() * (math.pi / 2 - 1e-6)
            pair = em.fresnel(eps, theta)
            assert abs(pair.gamma_perp) <= 1 + 1e-12
            assert abs(pair.gamma_par) <= 1 + 1e-12

    def test_index_matched_vanishes(self):
        pair = em.fresnel(1.0 + 0j, 0.3)
        assert abs(pair.gamma_perp) < 1e-12
        assert abs(pair.gamma_par) < 1e-12

    def test_angle_domain(self):
        with pytest.raises(ValueError):
            em.fresnel(4.0, math.pi / 2)


class TestFreeSpaceGain:
    def test_six_db_per_octave(self):
        for d in (1.0, 3.0, 100.0):
            ratio = abs(em.free_space_gain(d, 28.0)) / abs(em.free_space_gain(2 * d, 28.0))
            assert 20 * math.log10(ratio) == pytest.approx(6.0205999133, abs=1e-9)

    def test_path_loss_1m_28ghz(self):
        loss = -20 * math.log10(abs(em.free_space_gain(1.0, 28.0)))
        assert loss == pytest.approx(61.3909438487, abs=1e-6)

    def test_full_wavelength_phase_wrap(self):
        lam = em.wavelength(28.0)
        g = em.free_space_gain(lam, 28.0)
        assert cmath.phase(g) == pytest.approx(0.0, abs=1e-9)

    def test_nonpositive_distance(self):
        with pytest.raises(ValueError):
            em.free_space_gain(0.0, 28.0)

    def test_frequency_sanity(self):
        # halving the wavelength costs 6.02 dB
        r = abs(em.free_space_gain(10.0, 28.0)) / abs(em.free_space_gain(10.0, 56.0))
        assert 20 * math.log10(r) == pytest.approx(6.0206, abs=1e-4)


class TestApplyReflection:
    def _field(self, k):
        return em.launch_field(np.asarray(k, float))

    def test_perfect_mirror_preserves_magnitude(self):
        f = self._field([1, 0, 0])
        out = em.apply_reflection(f, em.FresnelPair(1.0, 1.0), np.array([-1.0, 0, 0]))
        assert out.magnitude == pytest.approx(f.magnitude, abs=1e-12)

    def test_zero_pair_kills_field(self):
        f = self._field([1, 0, 0])
        out = em.apply_reflection(f, em.FresnelPair(0.0, 0.0), np.array([-1.0, 0, 0]))
        assert out.magnitude == 0.0

    def test_equal_pair_scales_by_third(self):
        # rotation of the basis cannot change the Euclidean magnitude
        f = self._field([0.6, 0.0, -0.8])
        out = em.apply_reflection(f, em.FresnelPair(-1 / 3, -1 / 3), np.array([0.0, 0, 1.0]))
        assert out.magnitude == pytest.approx(f.magnitude / 3, abs=1e-12)

    def test_energy_never_increases(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            k = rng.normal(size=3)
            k /= np.linalg.norm(k)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            if abs(np.dot(k, n)) < 1e-3:
                continue
            if np.dot(k, n) > 0:
                n = -n
            eps = complex(1 + 9 * rng.random(), -rng.random())
            theta = math.acos(min(1.0, abs(np.dot(k, n))))
            pair = em.fresnel(eps, theta)
            f = self._field(k)
            out = em.apply_reflection(f, pair, n)
            assert out.magnitude <= f.magnitude + 1e-12

    def test_degenerate_frame_rejected(self):
        f = self._field([1, 0, 0])
        with pytest.raises(em.FrameError):
            em.apply_reflection(f, em.FresnelPair(1, 1), np.array([0.0, 0, 1.0]))


class TestPathGain:
    def test_pure_los(self, ground_scene):
        p = make_path(np.array([[0, 0, 5.0], [12, 0, 5.0]]), [])
        g = em.path_gain(p, ground_scene, 28.0)
        assert abs(g.amplitude) == pytest.approx(em.wavelength(28.0) / (4 * math.pi * 12.0), rel=1e-12)
        assert g.delay == pytest.approx(12.0 / em.SPEED_OF_LIGHT, rel=1e-12)

    def test_single_ground_bounce_matches_image_oracle(self, ground_scene, materials):
        cfg = TraceConfig(max_reflections=1, angular_resolution=math.radians(2.0))
        paths = trace(ground_scene, [0, 0, 5.0], [20, 0, 1.0], cfg)
        bounce = [p for p in paths if not p.is_los][0]
        g = em.path_gain(bounce, ground_scene, 28.0)
        d_total = math.hypot(20, 6)
        eps = geo.itu_permittivity(materials["concrete"], 28.0)
        theta = math.acos(6 / d_total)
        gamma_eff = em.fresnel(eps, theta).mean
        want = abs(gamma_eff) * em.wavelength(28.0) / (4 * math.pi * d_total)
        assert abs(g.amplitude) == pytest.approx(want, rel=1e-12)

    def test_passivity_bound(self, corridor_scene):
        cfg = TraceConfig(max_reflections=5, angular_resolution=math.radians(1.0))
        paths = trace(corridor_scene, [0, 0, 3.0], [25, 1, 1.5], cfg)
        assert any(len(p.interactions) >= 3 for p in paths)
        bound = em.wavelength(28.0) / (4 * math.pi)
        for p in paths:
            g = em.path_gain(p, corridor_scene, 28.0)
            assert abs(g.amplitude) <= bound / p.length + 1e-15

    def test_reciprocity(self, corridor_scene):
        cfg = TraceConfig(max_reflections=3, angular_resolution=math.radians(1.0))
        a = np.array([0, -1.0, 3.0])
        b = np.array([24, 2.0, 1.2])
        fwd = {p.seq_key(): p for p in trace(corridor_scene, a, b, cfg)}
        rev = {p.seq_key(): p for p in trace(corridor_scene, b, a, cfg)}
        assert len(fwd) == len(rev) >= 4
        for key, p in fwd.items():
            q = rev[tuple(reversed(key))]
            gf = em.path_gain(p, corridor_scene, 28.0).amplitude
            gr = em.path_gain(q, corridor_scene, 28.0).amplitude
            assert abs(abs(gf) - abs(gr)) <= 1e-12 * abs(gf)

    def test_phase_consistency(self, ground_scene):
        cfg = TraceConfig(max_reflections=1, angular_resolution=math.radians(2.0))
        paths = trace(ground_scene, [0, 0, 5.0], [20, 0, 1.0], cfg)
        for p in paths:
            g = em.path_gain(p, ground_scene, 28.0)
            # amplitude phase = spreading phase + interaction phase, exactly
            recomputed = cmath.phase(g.spreading * g.jones_scalar * g.diffraction_scalar)
            assert cmath.phase(g.amplitude) == pytest.approx(recomputed, abs=1e-12)
            lam = em.wavelength(28.0)
            spread_phase = (-2 * math.pi * p.length / lam) % (2 * math.pi)
            assert cmath.phase(g.spreading) % (2 * math.pi) == pytest.approx(spread_phase, abs=1e-9)
