import numpy as np
import pytest
from scipy.integrate import trapezoid

from polardd.jones import named_state
from polardd.spectral import (
    GaussianSpectrum, SpectralAmplitudes, bloch_from_stokes, gaussian_envelope, purity_deficit, stokes,
)


def double_integral_deficit(spec):
    """O(N^2) oracle: 2 * sum |a_H(w) a_V(w') - a_H(w') a_V(w)|^2 dw dw' / s0^2."""
    w = spec.omega
    # trapezoid weights on the uniform grid
    weights = np.full(w.size, w[1] - w[0])
    weights[[0, -1]] *= 0.5
    ah, av = spec.alpha_h, spec.alpha_v
    m = ah[:, None] * av[None, :] - ah[None, :] * av[:, None]
    total = np.sum(np.abs(m) ** 2 * weights[:, None] * weights[None, :])
    s0 = np.sum((np.abs(ah) ** 2 + np.abs(av) ** 2) * weights)
    return 2 * total / s0 ** 2


@pytest.fixture
def gauss():
    g = GaussianSpectrum(omega0=10.0, sigma_omega=0.5)
    w = g.grid()
    return g, w, gaussian_envelope(g, w)


def entangled(w, env, omega0):
    return SpectralAmplitudes(w, env, env * np.sign(w - omega0))


class TestStokes:
    def test_pure_h(self, gauss):
        _, w, env = gauss
        s = np.array(stokes(SpectralAmplitudes.factorized(w, env, [1, 0])))
        assert np.allclose(s / s[0], [1, 1, 0, 0], atol=1e-12)
        assert s[0] == pytest.approx(1, abs=1e-6)

    def test_pure_d(self, gauss):
        _, w, env = gauss
        s0, _, s2, _ = stokes(SpectralAmplitudes.factorized(w, env, np.array([1, 1]) / np.sqrt(2)))
        assert s2 / s0 == pytest.approx(1, abs=1e-12)

    def test_named_states_give_their_bloch_vectors(self, gauss):
        _, w, env = gauss
        for name in "HVDARL":
            p = bloch_from_stokes(*stokes(SpectralAmplitudes.factorized(w, env, named_state(name))))
            assert np.linalg.norm(p) == pytest.approx(1, abs=1e-12)

    def test_sign_flip_is_mixed(self, gauss):
        g, w, env = gauss
        s0, s1, s2, s3 = stokes(entangled(w, env, g.omega0))
        assert np.sqrt(s1 ** 2 + s2 ** 2 + s3 ** 2) / s0 < 1

    def test_stokes_bound(self, rng):
        w = np.linspace(-3, 3, 301)
        for _ in range(20):
            spec = SpectralAmplitudes(w, rng.standard_normal(301) + 1j * rng.standard_normal(301),
                                      rng.standard_normal(301) + 1j * rng.standard_normal(301))
            s0, s1, s2, s3 = stokes(spec)
            assert s0 > 0
            assert s0 ** 2 - s1 ** 2 - s2 ** 2 - s3 ** 2 >= -1e-9 * s0 ** 2

    def test_common_scalar_invariance(self, gauss, rng):
        g, w, env = gauss
        spec = SpectralAmplitudes(w, env * np.exp(1j * w), env * (0.3 + 0.2j) * np.cos(w))
        p = bloch_from_stokes(*stokes(spec))
        c = 2.7 * np.exp(0.9j)
        q = bloch_from_stokes(*stokes(SpectralAmplitudes(w, c * spec.alpha_h, c * spec.alpha_v)))
        assert np.max(np.abs(p - q)) <= 1e-12

    def test_rejects_zero_and_bad_grids(self):
        w = np.linspace(0, 1, 5)
        with pytest.raises(ValueError):
            SpectralAmplitudes(w, np.zeros(5), np.zeros(5))
        with pytest.raises(ValueError):
            SpectralAmplitudes(w[::-1], np.ones(5), np.ones(5))
        with pytest.raises(ValueError):
            SpectralAmplitudes([0.0, 1.0, 3.0], np.ones(3), np.ones(3))
        with pytest.raises(ValueError):
            SpectralAmplitudes([0.0], np.ones(1), np.ones(1))


class TestPurityDeficit:
    def test_factorized_is_zero(self, gauss, rng):
        _, w, env = gauss
        for _ in range(10):
            j = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            assert purity_deficit(SpectralAmplitudes.factorized(w, env, j)) <= 1e-9

    def test_entangled_matches_oracle(self, gauss):
        g, w, env = gauss
        spec = entangled(w, env, g.omega0)
        d = purity_deficit(spec)
        assert d > 0.1
        assert abs(d - double_integral_deficit(spec)) <= 1e-6

    def test_random_spectra_match_oracle(self, rng):
        w = np.linspace(-2, 2, 200)
        for _ in range(5):
            spec = SpectralAmplitudes(w, rng.standard_normal(200) + 1j * rng.standard_normal(200),
                                      rng.standard_normal(200) + 1j * rng.standard_normal(200))
            assert abs(purity_deficit(spec) - double_integral_deficit(spec)) <= 1e-6

    def test_duplicated_single_point(self):
        spec = SpectralAmplitudes([1.0, 2.0], [0.3 + 0.1j] * 2, [0.5j] * 2)
        assert purity_deficit(spec) <= 1e-12

    def test_agrees_with_stokes_purity(self, gauss):
        g, w, env = gauss
        spec = SpectralAmplitudes(w, env, env * np.tanh(w - g.omega0) * 1j)
        p = bloch_from_stokes(*stokes(spec))
        assert abs(0.5 * (1 + p @ p) - (1 - purity_deficit(spec) / 2)) <= 1e-6


class TestGaussianEnvelope:
    def test_normalization(self, gauss):
        _, w, env = gauss
        assert trapezoid(np.abs(env) ** 2, w) == pytest.approx(1, abs=1e-6)

    def test_peak_value(self, gauss):
        g, _, _ = gauss
        peak = gaussian_envelope(g, np.array([g.omega0 - 6 * g.sigma_omega, g.omega0, g.omega0 + 6 * g.sigma_omega]))[1]
        assert peak == pytest.approx((np.pi * g.sigma_omega ** 2) ** -0.25, rel=1e-14)

    def test_symmetric(self, gauss):
        g, w, env = gauss
        assert np.allclose(env, env[::-1], rtol=1e-12)

    def test_grid_too_narrow(self):
        g = GaussianSpectrum(0.0, 1.0)
        with pytest.raises(ValueError):
            gaussian_envelope(g, np.linspace(-4, 4, 100))

    def test_positive_width(self):
        with pytest.raises(ValueError):
            GaussianSpectrum(0.0, 0.0)


def test_amplitudes_csv_roundtrip(tmp_path, gauss):
    from polardd.io import write_amplitudes

    g, w, env = gauss
    spec = SpectralAmplitudes(w, env * np.exp(0.3j * w), env * np.sign(w - g.omega0))
    write_amplitudes(tmp_path / "amp.csv", spec)
    back = SpectralAmplitudes.from_csv(tmp_path / "amp.csv")
    assert np.array_equal(back.omega, spec.omega)
    assert np.array_equal(back.alpha_h, spec.alpha_h)
    assert np.array_equal(back.alpha_v, spec.alpha_v)
