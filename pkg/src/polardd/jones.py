"""Two-level polarization algebra: Pauli matrices, density matrices, Bloch vectors.

Basis ordering is (H, V). The Bloch vector components are (x, y, z) with
x the diagonal/anti-diagonal axis, y the circular axis and z the H/V axis,
so that H maps to (0, 0, 1), D = (H + V)/sqrt(2) to (1, 0, 0) and
R = (H + iV)/sqrt(2) to (0, 1, 0).
"""

import numpy as np

from ._validation import check_bloch, check_density, check_jones, check_unitary

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_VECTOR = np.stack([X, Y, Z])

_PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

_SQ2 = 1 / np.sqrt(2)
_NAMED_STATES = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_SQ2, _SQ2], dtype=complex),
    "A": np.array([_SQ2, -_SQ2], dtype=complex),
    "R": np.array([_SQ2, 1j * _SQ2], dtype=complex),
    "L": np.array([_SQ2, -1j * _SQ2], dtype=complex),
}
# Elliptical input: equal-weight mix of the V, A and R directions on the sphere.
_ELLIPTICAL_BLOCH = np.array([-1.0, 1.0, -1.0]) / np.sqrt(3)


def pauli(axis):
    """Return the Pauli matrix for ``axis`` in {"I", "X", "Y", "Z"}."""
    try:
        return _PAULI[axis.upper()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def density_from_bloch(p):
    """rho = (I + p . sigma) / 2. Broadcasts over leading axes of ``p``."""
    p = check_bloch(p)
    return 0.5 * (I2 + np.einsum("...k,kij->...ij", p.astype(complex), PAULI_VECTOR))


def bloch_from_density(rho):
    """Bloch vector p_k = Tr(rho sigma_k)."""
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("...ij,kji->...k", rho, PAULI_VECTOR).real


def purity(rho):
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("...ij,...ji->...", rho, rho).real


def fidelity_pure(rho, pi_in):
    """Overlap <pi|rho|pi> of a (possibly mixed) state with a pure reference."""
    pi_in = check_jones(pi_in)
    rho = np.asarray(rho, dtype=complex)
    return np.einsum("i,...ij,j->...", pi_in.conj(), rho, pi_in).real


def apply_unitary(u, rho):
    u = np.asarray(u, dtype=complex)
    return u @ np.asarray(rho, dtype=complex) @ np.conj(np.swapaxes(u, -1, -2))


def jones_from_bloch(p):
    """A Jones vector (global phase fixed so the H amplitude is real) for a unit Bloch vector."""
    p = check_bloch(p)
    norm = np.linalg.norm(p)
    if abs(norm - 1) > 1e-10:
        raise ValueError("only pure states (|p| = 1) have a Jones vector")
    x, y, z = p / norm
    xy = complex(x, y)
    # half-angle forms chosen per hemisphere so neither pole loses precision
    if z >= 0:
        h = np.sqrt((1 + z) / 2)
        v = xy / (2 * h)
    else:
        v_abs = np.sqrt((1 - z) / 2)
        h = abs(xy) / (2 * v_abs)
        v = v_abs * (xy / abs(xy) if abs(xy) > 0 else 1.0)
    return np.array([h, v], dtype=complex)


def bloch_from_jones(v):
    v = check_jones(v, normalized=False)
    v = v / np.linalg.norm(v)
    return bloch_from_density(np.outer(v, v.conj()))


def named_state(name):
    """Jones vector for one of H, V, D, A, R, L or the elliptical state E."""
    key = name.upper()
    if key == "E":
        return jones_from_bloch(_ELLIPTICAL_BLOCH)
    try:
        return _NAMED_STATES[key].copy()
    except KeyError:
        raise ValueError(f"unknown polarization state {name!r}") from None


def bloch_rotation(u):
    """The SO(3) matrix R with R p = Bloch(U rho U^dag) for rho = rho(p).

    Accepts a stack of unitaries of shape (..., 2, 2).
    """
    u = np.asarray(u, dtype=complex)
    ud = np.conj(np.swapaxes(u, -1, -2))
    # R_ij = Tr(sigma_i U sigma_j U^dag) / 2
    return 0.5 * np.einsum("iab,...bc,jcd,...da->...ij", PAULI_VECTOR, u, PAULI_VECTOR, ud).real


def projectively_equal(a, b, tol=1e-10):
    """True if the unitaries ``a`` and ``b`` differ only by a global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.trace(np.conj(b.T) @ a)
    if abs(overlap) == 0:
        return False
    phase = overlap / abs(overlap)
    return bool(np.abs(a - phase * b).max() <= tol)


def is_unitary(u, tol=1e-12):
    try:
        check_unitary(u, tol)
    except ValueError:
        return False
    return True


__all__ = [
    "I2", "X", "Y", "Z", "PAULI_VECTOR", "pauli", "density_from_bloch", "bloch_from_density",
    "purity", "fidelity_pure", "apply_unitary", "jones_from_bloch", "bloch_from_jones",
    "named_state", "bloch_rotation", "projectively_equal", "is_unitary", "check_density",
]
