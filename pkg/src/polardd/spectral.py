"""Frequency-resolved pulse amplitudes and their Stokes parameters.

A pulse is described by complex amplitudes alpha_H(w), alpha_V(w) sampled
on a uniform angular-frequency grid. Frequency integrals use the
trapezoidal rule.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ._validation import check_jones


@dataclass(frozen=True)
class SpectralAmplitudes:
    omega: np.ndarray
    alpha_h: np.ndarray
    alpha_v: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        ah = np.asarray(self.alpha_h, dtype=complex)
        av = np.asarray(self.alpha_v, dtype=complex)
        if omega.ndim != 1 or omega.size < 2:
            raise ValueError("frequency grid needs at least two points")
        if ah.shape != omega.shape or av.shape != omega.shape:
            raise ValueError("amplitude arrays must match the frequency grid")
        step = np.diff(omega)
        if np.any(step <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.allclose(step, step[0], rtol=1e-9, atol=0):
            raise ValueError("frequency grid must be uniformly spaced")
        if not (np.any(ah) or np.any(av)):
            raise ValueError("all amplitudes are zero")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha_h", ah)
        object.__setattr__(self, "alpha_v", av)

    @classmethod
    def factorized(cls, omega, envelope, jones):
        """Amplitudes alpha_S(w) = envelope(w) * jones_S (polarization independent of frequency)."""
        jones = check_jones(jones, normalized=False)
        envelope = np.asarray(envelope, dtype=complex)
        return cls(omega, envelope * jones[0], envelope * jones[1])

    @classmethod
    def from_csv(cls, path):
        """Load columns omega, re_h, im_h, re_v, im_v (header row required)."""
        data = np.genfromtxt(path, delimiter=",", names=True)
        return cls(data["omega"], data["re_h"] + 1j * data["im_h"], data["re_v"] + 1j * data["im_v"])


@dataclass(frozen=True)
class GaussianSpectrum:
    """Amplitude spectrum E(w) = (pi s^2)^(-1/4) exp(-(w - w0)^2 / (2 s^2)).

    ``sigma_omega`` is the width parameter of the amplitude; the power
    spectrum |E|^2 is a normalized Gaussian with standard deviation
    sigma_omega / sqrt(2).
    """

    omega0: float
    sigma_omega: float

    def __post_init__(self):
        if not self.sigma_omega > 0:
            raise ValueError("sigma_omega must be positive")

    def grid(self, n_points=2048, half_width=6.0):
        return np.linspace(self.omega0 - half_width * self.sigma_omega,
                           self.omega0 + half_width * self.sigma_omega, n_points)


def gaussian_envelope(spectrum, omega):
    """Evaluate the normalized Gaussian amplitude spectrum on ``omega``.

    The grid must reach at least 5 sigma_omega on both sides of the centre,
    otherwise the truncated normalization is off by more than ~1e-11.
    """
    omega = np.asarray(omega, dtype=float)
    reach = 5 * spectrum.sigma_omega * (1 - 1e-12)
    if omega.min() > spectrum.omega0 - reach or omega.max() < spectrum.omega0 + reach:
        raise ValueError("frequency grid must span at least +-5 sigma_omega around omega0")
    s2 = spectrum.sigma_omega ** 2
    return (np.pi * s2) ** -0.25 * np.exp(-((omega - spectrum.omega0) ** 2) / (2 * s2))


def stokes(spec):
    """Return (s0, s1, s2, s3) by trapezoidal integration over the grid."""
    ah, av, w = spec.alpha_h, spec.alpha_v, spec.omega
    nh = np.abs(ah) ** 2
    nv = np.abs(av) ** 2
    cross = np.conj(ah) * av
    s0 = trapezoid(nh + nv, w)
    if s0 <= 0:
        raise ValueError("pulse carries no intensity (s0 = 0)")
    s1 = trapezoid(nh - nv, w)
    s2 = trapezoid(2 * cross.real, w)
    s3 = trapezoid(2 * cross.imag, w)
    return float(s0), float(s1), float(s2), float(s3)


def bloch_from_stokes(s0, s1, s2, s3):
    return np.array([s2, s3, s1]) / s0


def purity_deficit(spec):
    """(s0^2 - s1^2 - s2^2 - s3^2) / s0^2, i.e. 1 - |P|^2.

    Vanishes exactly when alpha_H / alpha_V does not depend on frequency.
    """
    s0, s1, s2, s3 = stokes(spec)
    return max(0.0, (s0 * s0 - s1 * s1 - s2 * s2 - s3 * s3) / (s0 * s0))
