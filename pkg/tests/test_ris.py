import math

import numpy as np
import pytest

from risray import em, ris
from risray.tracer import make_path


def seg(values):
    return ris.SegmentChannel(np.asarray(values, dtype=complex), 1)


class TestPanel:
    def test_square_panel(self):
        p = ris.square_panel([0, 0, 5], 0.0, 0.0, 1024, 28.0)
        assert p.rows == p.cols == 32
        assert p.n_elements == 1024
        assert p.spacing == pytest.approx(em.wavelength(28.0) / 2)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            ris.square_panel([0, 0, 5], 0.0, 0.0, 1000, 28.0)

    def test_lattice_centered(self):
        p = ris.square_panel([0, 0, 5], 0.3, -0.05, 64, 28.0)
        off = p.element_offsets()
        assert off.shape == (64, 3)
        assert np.allclose(off.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(off @ p.normal, 0.0, atol=1e-12)

    def test_tilt_moves_normal_down(self):
        p = ris.square_panel([0, 0, 5], 0.0, math.radians(-3.0), 16, 28.0)
        assert p.normal[2] == pytest.approx(math.sin(math.radians(-3)), abs=1e-12)


class TestSteering:
    def test_broadside_all_equal(self):
        p = ris.square_panel([0, 0, 5], 0.7, -0.05, 256, 28.0)
        ph = ris.steering_phase(p, p.normal, 28.0)
        assert np.allclose(ph, ph[0])
        assert abs(ph.sum()) == pytest.approx(256.0, rel=1e-12)

    def test_endfire_pi_shift(self):
        # two elements half a wavelength apart, steered along the lattice
        panel = ris.RisPanel(np.zeros(3), 0.0, 0.0, 1, 2, em.wavelength(28.0) / 2)
        ph = ris.steering_phase(panel, panel.axis_right, 28.0)
        delta = np.angle(ph[1] / ph[0])
        assert abs(abs(delta) - math.pi) < 1e-9


class TestSegmentChannel:
    def test_broadside_path_uniform(self, ground_scene):
        p = ris.square_panel([0, 0, 5.0], 0.0, 0.0, 64, 28.0)
        path = make_path(np.array([[20.0, 0, 5.0], [0.0, 0, 5.0]]), [])
        ch = ris.segment_channel(p, [path], ground_scene, 28.0, panel_at="dst")
        g = em.path_gain(path, ground_scene, 28.0).amplitude
        assert np.allclose(ch.per_element, g, rtol=1e-9)
        assert ch.n_paths == 1

    def test_anti_normal_discarded(self, ground_scene):
        p = ris.square_panel([0, 0, 5.0], 0.0, 0.0, 64, 28.0)
        path = make_path(np.array([[-20.0, 0, 5.0], [0.0, 0, 5.0]]), [])  # from behind
        ch = ris.segment_channel(p, [path], ground_scene, 28.0, panel_at="dst")
        assert np.all(ch.per_element == 0)
        assert ch.n_paths == 0

    def test_linearity(self, ground_scene):
        p = ris.square_panel([0, 0, 5.0], 0.0, 0.0, 16, 28.0)
        a = make_path(np.array([[20.0, 0, 5.0], [0.0, 0, 5.0]]), [])
        b = make_path(np.array([[15.0, 8.0, 4.0], [0.0, 0, 5.0]]), [])
        ch_a = ris.segment_channel(p, [a], ground_scene, 28.0, panel_at="dst")
        ch_b = ris.segment_channel(p, [b], ground_scene, 28.0, panel_at="dst")
        ch_ab = ris.segment_channel(p, [a, b], ground_scene, 28.0, panel_at="dst")
        assert np.allclose(ch_ab.per_element, ch_a.per_element + ch_b.per_element, rtol=1e-12)

    def test_empty_paths_zero(self, ground_scene):
        p = ris.square_panel([0, 0, 5.0], 0.0, 0.0, 16, 28.0)
        ch = ris.segment_channel(p, [], ground_scene, 28.0, panel_at="dst")
        assert np.all(ch.per_element == 0)


class TestCoefficients:
    def test_optimal_matches_exhaustive_search(self):
        # N = 2 exhaustive phase grid as the independent optimum oracle
        rng = np.random.default_rng(11)
        grid = np.linspace(-math.pi, math.pi, 100, endpoint=False)
        for _ in range(10):
            ht = seg(rng.normal(size=2) + 1j * rng.normal(size=2))
            hr = seg(rng.normal(size=2) + 1j * rng.normal(size=2))
            best = 0.0
            for p1 in grid:
                for p2 in grid:
                    c = ris.RisCoefficients(np.array([p1, p2]), "grid")
                    best = max(best, abs(ris.cascade(ht, hr, c)))
            opt = abs(ris.cascade(ht, hr, ris.optimal_coeffs(ht, hr)))
            assert opt >= best - 1e-9
            want = np.sum(np.abs(ht.per_element) * np.abs(hr.per_element))
            assert opt == pytest.approx(want, rel=1e-12)

    def test_phase_wrap_domain(self):
        rng = np.random.default_rng(5)
        ht = seg(rng.normal(size=32) + 1j * rng.normal(size=32))
        hr = seg(rng.normal(size=32) + 1j * rng.normal(size=32))
        psi = ris.optimal_coeffs(ht, hr).phases
        assert np.all(psi >= -math.pi) and np.all(psi < math.pi)

    def test_wrap_arithmetic(self):
        # single element, angles chosen to force a wrap
        ht = seg([np.exp(2.0j)])
        hr = seg([np.exp(-3.0j)])
        psi = ris.optimal_coeffs(ht, hr).phases[0]
        assert psi == pytest.approx(1.0, abs=1e-12)  # -(2 - 3) = 1
        assert abs(ris.cascade(ht, hr, ris.optimal_coeffs(ht, hr)) - 1.0) < 1e-12

    def test_zero_amplitude_phase_zero(self):
        ht = seg([0.0, 1.0 + 1j])
        hr = seg([1.0, 2.0])
        psi = ris.optimal_coeffs(ht, hr).phases
        assert psi[0] == 0.0

    def test_global_phase_invariance(self):
        rng = np.random.default_rng(17)
        ht = seg(rng.normal(size=16) + 1j * rng.normal(size=16))
        hr = seg(rng.normal(size=16) + 1j * rng.normal(size=16))
        base = ris.optimal_coeffs(ht, hr)
        alpha = 0.9
        ht2 = seg(ht.per_element * np.exp(1j * alpha))
        shifted = ris.optimal_coeffs(ht2, hr)
        delta = (shifted.phases - base.phases + alpha + math.pi) % (2 * math.pi) - math.pi
        assert np.allclose(delta, 0.0, atol=1e-12)
        assert abs(ris.cascade(ht2, hr, shifted)) == pytest.approx(
            abs(ris.cascade(ht, hr, base)), rel=1e-12
        )

    def test_unit(self):
        c = ris.unit_coeffs(4)
        assert np.all(c.phases == 0.0)
        assert c.policy == "unit"

    def test_random_deterministic(self):
        a = ris.random_coeffs(64, 42)
        b = ris.random_coeffs(64, 42)
        assert np.array_equal(a.phases, b.phases)
        c = ris.random_coeffs(64, 43)
        assert not np.array_equal(a.phases, c.phases)

    def test_random_circular_mean(self):
        c = ris.random_coeffs(100_000, 0)
        mean = np.abs(np.mean(np.exp(1j * c.phases)))
        assert mean < 0.02


class TestCascade:
    def test_single_unit_element(self):
        assert ris.cascade(seg([1.0]), seg([1.0]), ris.unit_coeffs(1)) == pytest.approx(1.0)

    def test_coherent_sum(self):
        n, a = 64, 0.3
        rng = np.random.default_rng(2)
        ht = seg(a * np.exp(1j * rng.uniform(-math.pi, math.pi, n)))
        hr = seg(a * np.exp(1j * rng.uniform(-math.pi, math.pi, n)))
        got = abs(ris.cascade(ht, hr, ris.optimal_coeffs(ht, hr)))
        assert got == pytest.approx(n * a * a, rel=1e-12)

    def test_random_phases_incoherent_expectation(self):
        # Monte Carlo oracle: mean power of a random-phase sum is the
        # incoherent sum of element powers
        n, a = 32, 0.5
        ht = seg(np.full(n, a))
        hr = seg(np.full(n, a))
        powers = []
        for s in range(1000):
            c = ris.random_coeffs(n, s)
            powers.append(abs(ris.cascade(ht, hr, c)) ** 2)
        powers = np.asarray(powers)
        expected = n * a**4
        se = powers.std(ddof=1) / math.sqrt(len(powers))
        assert abs(powers.mean() - expected) < 3 * se

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ris.cascade(seg([1.0]), seg([1.0, 2.0]), ris.unit_coeffs(1))

    def test_free_space_random_gap_is_10logN(self, ground_scene):
        # coherent/incoherent ratio: optimal beats the random-policy mean
        # by 10 log10 N in free space
        from risray import channel
        from risray.tracer import TraceConfig

        n = 1024
        panel = ris.square_panel([20.0, 6.0, 5.0], -math.pi / 2, math.radians(-3), n, 28.0)
        ht, hr = channel.segment_channels(
            ground_scene, [0, 0, 5.0], [40.0, 0, 1.0], panel, TraceConfig(max_reflections=0)
        )
        p_opt = abs(ris.cascade(ht, hr, ris.optimal_coeffs(ht, hr))) ** 2
        rnd = np.array(
            [abs(ris.cascade(ht, hr, ris.random_coeffs(n, s))) ** 2 for s in range(100)]
        )
        gap_db = 10 * math.log10(p_opt / rnd.mean())
        assert gap_db == pytest.approx(10 * math.log10(n), abs=3.0)

    def test_size_one_policies_coincide(self):
        ht, hr = seg([0.7 * np.exp(0.4j)]), seg([1.1 * np.exp(-2.2j)])
        mags = {
            policy: abs(ris.cascade(ht, hr, coeffs))
            for policy, coeffs in [
                ("optimal", ris.optimal_coeffs(ht, hr)),
                ("unit", ris.unit_coeffs(1)),
                ("random", ris.random_coeffs(1, 9)),
            ]
        }
        assert mags["optimal"] == pytest.approx(mags["unit"], rel=1e-12)
        assert mags["optimal"] == pytest.approx(mags["random"], rel=1e-12)


class TestCoefficientTable:
    def test_rows_cover_grid(self):
        p = ris.square_panel([0, 0, 5], 0.0, 0.0, 16, 28.0)
        c = ris.unit_coeffs(16)
        rows = ris.coefficients_table(p, c)
        assert len(rows) == 16
        assert rows[0] == (0, 0, 0, 0.0)
        assert {(r, c_) for _, r, c_, _ in rows} == {(r, c_) for r in range(4) for c_ in range(4)}
