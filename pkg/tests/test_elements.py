import numpy as np
import pytest
from scipy.linalg import expm

from polardd.elements import MirrorPhaseModel, mirror_mz, noise_element, soleil_babinet, waveplate
from polardd.jones import I2, X, Z, is_unitary, pauli, projectively_equal


class TestMirror:
    def test_zero_phase_is_z(self):
        assert np.allclose(mirror_mz(0.0), Z, atol=1e-15)

    def test_half_angle_form(self):
        for phi in np.linspace(-3, 3, 13):
            assert np.allclose(mirror_mz(phi), Z @ expm(-0.5j * phi * Z), atol=1e-14)

    def test_relative_phase(self):
        # diag(exp(-i phi_H), -exp(-i phi_V)) with phi = phi_H - phi_V
        ph, pv = 0.7, -0.4
        m = np.diag([np.exp(-1j * ph), -np.exp(-1j * pv)])
        assert projectively_equal(mirror_mz(ph - pv), m)

    def test_pi_phase_is_projectively_identity(self):
        assert projectively_equal(mirror_mz(np.pi), I2)

    def test_two_mirrors_and_spherical(self):
        for phi in (0.1, -0.2182, 1.3):
            m = mirror_mz(phi)
            assert np.allclose(Z @ m @ m, Z @ expm(-1j * phi * Z), atol=1e-14)

    def test_commutes_with_z(self, rng):
        for phi in rng.uniform(-np.pi, np.pi, 50):
            m = mirror_mz(phi)
            assert np.allclose(m @ Z, Z @ m, atol=1e-14)

    def test_broadcasts(self):
        out = mirror_mz(np.zeros((4, 3)))
        assert out.shape == (4, 3, 2, 2)


class TestWaveplate:
    def test_returns_pauli(self):
        assert np.array_equal(waveplate("X"), pauli("X"))
        assert np.array_equal(waveplate("z"), pauli("Z"))

    def test_only_x_and_z(self):
        with pytest.raises(ValueError):
            waveplate("Y")


class TestSoleilBabinet:
    def test_zero_is_identity(self):
        assert np.allclose(soleil_babinet(0.0), I2, atol=1e-15)

    def test_half_wave_is_x(self):
        assert np.allclose(soleil_babinet(np.pi), -1j * X, atol=1e-15)
        assert projectively_equal(soleil_babinet(np.pi), X)

    def test_quarter(self):
        assert np.allclose(soleil_babinet(np.pi / 2), (I2 - 1j * X) / np.sqrt(2), atol=1e-15)

    def test_exponential_form(self, rng):
        for t in rng.uniform(0, 2 * np.pi, 20):
            assert np.allclose(soleil_babinet(t), expm(-0.5j * t * X), atol=1e-14)

    def test_composition(self, rng):
        for a, b in rng.uniform(0, 2 * np.pi, (30, 2)):
            assert projectively_equal(soleil_babinet(a) @ soleil_babinet(b), soleil_babinet(a + b))

    def test_commutes_with_x(self, rng):
        for t in rng.uniform(0, 2 * np.pi, 50):
            b = soleil_babinet(t)
            assert np.allclose(b @ X, X @ b, atol=1e-14)


class TestNoiseElement:
    def test_no_delay(self):
        assert np.allclose(noise_element(0.4, 0.0), mirror_mz(0.4), atol=1e-15)

    def test_no_phase(self):
        assert np.allclose(noise_element(0.0, 1.1), Z @ soleil_babinet(1.1), atol=1e-15)

    def test_explicit_product(self):
        phi, theta = 0.1, 0.3
        m = np.diag([np.exp(-0.05j), -np.exp(0.05j)])
        b = np.array([[np.cos(0.15), -1j * np.sin(0.15)], [-1j * np.sin(0.15), np.cos(0.15)]])
        assert np.allclose(noise_element(phi, theta), m @ b, atol=1e-15)


def test_all_elements_unitary(rng):
    phis = rng.uniform(-10, 10, 1000)
    thetas = rng.uniform(0, 2 * np.pi, 1000)
    for u in (mirror_mz(phis), soleil_babinet(thetas), noise_element(phis, thetas)):
        assert all(is_unitary(x) for x in u)


def test_phase_model_links_bandwidths():
    model = MirrorPhaseModel(phi0=-0.2182, tau=-2.0)
    assert model.phase(0.0) == -0.2182
    assert model.phase(0.5) == pytest.approx(-1.2182)
    assert model.sigma_phi(0.04195) == pytest.approx(0.0839)
