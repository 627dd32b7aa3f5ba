"""Jones matrices of the individual cavity elements.

All functions broadcast over array-valued phases and return stacks of
2x2 complex matrices with shape ``np.shape(phi) + (2, 2)``.
"""

from dataclasses import dataclass

import numpy as np

from .jones import pauli


@dataclass(frozen=True)
class MirrorPhaseModel:
    """Linear dispersion of the H/V reflection phase difference, phi(w) = phi0 + tau * w.

    Here ``w`` is measured from the pulse centre, so phi0 is the phase
    difference at the carrier frequency.
    """

    phi0: float
    tau: float

    def phase(self, omega_offset):
        return self.phi0 + self.tau * np.asarray(omega_offset, dtype=float)

    def sigma_phi(self, sigma_omega):
        return abs(self.tau) * sigma_omega


def mirror_mz(phi):
    """45-degree plane mirror with relative H/V phase ``phi``: Z exp(-i phi Z / 2).

    This is diag(exp(-i phi_H), -exp(-i phi_V)) with the common phase removed.
    """
    phi = np.asarray(phi, dtype=float)
    out = np.zeros(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * phi)
    out[..., 1, 1] = -np.exp(0.5j * phi)
    return out


def waveplate(axis):
    """Half-wave plate realizing the Pauli operation ``axis`` ("X" or "Z")."""
    if axis.upper() not in ("X", "Z"):
        raise ValueError("wave plates are available for the X and Z operations only")
    return pauli(axis)


def soleil_babinet(theta):
    """Soleil-Babinet compensator at 45 degrees with delay phase theta: exp(-i theta X / 2)."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    return out


def noise_element(phi, theta):
    """Compensator followed by a plane mirror: M_Z(phi) B_X(theta)."""
    return mirror_mz(phi) @ soleil_babinet(theta)
