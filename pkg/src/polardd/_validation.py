"""Input validation helpers shared across the package."""

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
BLOCH_TOL = 1e-10
UNITARY_TOL = 1e-12
NORM_TOL = 1e-12


class PhysicalityError(ValueError):
    """Raised when an input cannot describe a physical polarization state or element."""


def check_bloch(p, tol=BLOCH_TOL):
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (3,):
        raise ValueError(f"Bloch vectors must have a trailing axis of length 3, got shape {p.shape}")
    norm = np.linalg.norm(p, axis=-1)
    if np.any(norm > 1 + tol):
        raise PhysicalityError(f"unphysical Bloch vector, |p| = {np.max(norm):.6g} > 1")
    return p


def check_density(rho, tol=PSD_TOL):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape[-2:] != (2, 2):
        raise ValueError(f"expected 2x2 density matrices, got shape {rho.shape}")
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
    if herm > HERMITIAN_TOL:
        raise PhysicalityError(f"density matrix is not Hermitian (deviation {herm:.3g})")
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1) > TRACE_TOL):
        raise PhysicalityError("density matrix trace differs from 1")
    if np.any(np.linalg.eigvalsh(rho) < -tol):
        raise PhysicalityError("density matrix has a negative eigenvalue")
    return rho


def check_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u, dtype=complex)
    if u.shape[-2:] != (2, 2):
        raise ValueError(f"expected 2x2 matrices, got shape {u.shape}")
    err = np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - np.eye(2)).max()
    if err > tol:
        raise PhysicalityError(f"matrix is not unitary (|U^dag U - I| = {err:.3g})")
    return u


def check_jones(v, normalized=True, tol=NORM_TOL):
    v = np.asarray(v, dtype=complex)
    if v.shape != (2,):
        raise ValueError(f"Jones vectors have two components, got shape {v.shape}")
    norm2 = float(np.vdot(v, v).real)
    if norm2 <= 0:
        raise PhysicalityError("Jones vector has zero norm")
    if normalized and abs(norm2 - 1) > tol:
        raise PhysicalityError(f"Jones vector is not normalized (|v|^2 = {norm2:.12g})")
    return v
