"""Second-order analytic model of the frequency-averaged evolution.

For a narrow phase distribution the per-round-trip rotation axis is frozen
at its value at phi0 and the rotation angle is expanded to second order,
alpha(phi) ~ alpha0 + alpha'(phi - phi0) + alpha''(phi - phi0)^2 / 2.
The Gaussian average of the resulting rotation gives

    p_out = V p_in,   V = D O + (1 - D) s s^T,

with a scalar contraction D of the transverse Bloch components and a
rotation O about s by 2 m gamma_m after m round trips.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_bloch
from .cavity import rotation_closed_form

_LEVI_CIVITA = np.zeros((3, 3, 3))
_LEVI_CIVITA[0, 1, 2] = _LEVI_CIVITA[1, 2, 0] = _LEVI_CIVITA[2, 0, 1] = 1
_LEVI_CIVITA[0, 2, 1] = _LEVI_CIVITA[2, 1, 0] = _LEVI_CIVITA[1, 0, 2] = -1


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Per-round-trip expansion of the rotation angle around phi0.

    ``round_trips_per_step`` converts the step index n used by the model
    functions into round trips (m = n * round_trips_per_step).
    """

    alpha0: float
    dalpha0: float
    ddalpha0: float
    s0_axis: np.ndarray
    round_trips_per_step: int = 1
    degenerate: bool = False

    def __post_init__(self):
        s = np.asarray(self.s0_axis, dtype=float)
        if abs(np.linalg.norm(s) - 1) > 1e-10:
            raise ValueError("rotation axis must be a unit vector")
        object.__setattr__(self, "s0_axis", s)


def expansion_coeffs(cfg, phi0, step=1e-4):
    """Coefficients by centred finite differences of the closed-form angle."""
    if not cfg.layout.is_generic:
        raise ValueError("the analytic model covers the generic-noise layouts")

    def angle(phi):
        return float(rotation_closed_form(cfg, phi)[0])

    a0 = angle(phi0)
    ap, am = angle(phi0 + step), angle(phi0 - step)
    da = (ap - am) / (2 * step)
    dda = (ap - 2 * a0 + am) / step ** 2
    s0 = np.asarray(rotation_closed_form(cfg, phi0)[1], dtype=float)
    # at alpha0 = 0 (mod pi) the axis is only defined as the limit phi -> phi0
    degenerate = abs(np.sin(a0)) < 1e-12
    return ExpansionCoeffs(a0, da, dda, s0, cfg.round_trips_per_step, degenerate)


def _round_trips(n, coeffs):
    return np.asarray(n, dtype=float) * coeffs.round_trips_per_step


def decoherence_factor(n, coeffs, sigma_phi):
    """D_n = q^(-1/4) exp(-m^2 a'^2 s^2 / q) with q = 1 + m^2 a''^2 s^4."""
    m = _round_trips(n, coeffs)
    if np.any(m < 0):
        raise ValueError("n must be non-negative")
    s2 = sigma_phi ** 2
    q = 1 + m * m * coeffs.ddalpha0 ** 2 * s2 * s2
    return q ** -0.25 * np.exp(-m * m * coeffs.dalpha0 ** 2 * s2 / q)


def gamma_n(n, coeffs, sigma_phi, printed=False):
    """Mean rotation half-angle per round trip after n steps.

    gamma = alpha0 - m^2 a'' a'^2 s^4 / (2 q) + arctan(m a'' s^2) / (4 m), the
    phase of the Gaussian average of exp(2 i m alpha(phi)). ``printed=True``
    evaluates the variant with +m^2 a'' a'^2 s^2 / (2 q) instead, kept for
    comparison only.
    """
    m = _round_trips(n, coeffs)
    if np.any(m <= 0):
        raise ValueError("gamma_n is defined for n >= 1")
    a0, a1, a2 = coeffs.alpha0, coeffs.dalpha0, coeffs.ddalpha0
    s2 = sigma_phi ** 2
    q = 1 + m * m * a2 * a2 * s2 * s2
    if printed:
        middle = 0.5 * m * m * a2 * a1 * a1 * s2 / q
    else:
        middle = -0.5 * m * m * a2 * a1 * a1 * s2 * s2 / q
    return a0 + middle + np.arctan(m * a2 * s2) / (4 * m)


def rotation_matrix(axis, angle):
    """Rodrigues rotation: delta cos + s s^T (1 - cos) - eps_ijk s_k sin."""
    s = np.asarray(axis, dtype=float)
    c, sn = np.cos(angle), np.sin(angle)
    return np.eye(3) * c + np.outer(s, s) * (1 - c) - np.einsum("ijk,k->ij", _LEVI_CIVITA, s) * sn


def o_matrix(n, coeffs, sigma_phi, printed=False):
    if n == 0:
        return np.eye(3)
    m = float(_round_trips(n, coeffs))
    return rotation_matrix(coeffs.s0_axis, 2 * m * gamma_n(n, coeffs, sigma_phi, printed))


def v_matrix(n, coeffs, sigma_phi, printed=False):
    d = float(decoherence_factor(n, coeffs, sigma_phi))
    s = coeffs.s0_axis
    return d * o_matrix(n, coeffs, sigma_phi, printed) + (1 - d) * np.outer(s, s)


def analytic_purity_fidelity(n, coeffs, sigma_phi, p_in):
    """(purity, fidelity) of the output for a pure input with Bloch vector ``p_in``."""
    p_in = check_bloch(p_in)
    if abs(np.linalg.norm(p_in) - 1) > 1e-9:
        raise ValueError("the analytic model is stated for pure inputs")
    p_out = v_matrix(n, coeffs, sigma_phi) @ p_in
    return 0.5 * (1 + p_out @ p_out), 0.5 * (1 + p_in @ p_out)


def expanded_purity_fidelity(n, coeffs, sigma_phi, p_in):
    """The same quantities written out through D_n, P(gamma_n) and p_in . s."""
    d = float(decoherence_factor(n, coeffs, sigma_phi))
    s = coeffs.s0_axis
    p_in = np.asarray(p_in, dtype=float)
    p_gamma = o_matrix(n, coeffs, sigma_phi) @ p_in
    ps = p_in @ s
    purity = 0.5 * (1 + 2 * d * (1 - d) * ps * (p_gamma @ s) + d * d + (1 - d) ** 2 * ps * ps)
    fidelity = 0.5 * (1 + d * (p_in @ p_gamma) + (1 - d) * ps * ps)
    return purity, fidelity


def asymptotic_purity(coeffs, p_in):
    """Common n -> infinity limit of purity and fidelity: (1 + (p_in . s)^2) / 2."""
    return 0.5 * (1 + (np.asarray(p_in, dtype=float) @ coeffs.s0_axis) ** 2)


def small_n_infidelity(n, coeffs, sigma_phi, p_in):
    """Leading-order 1 - F ~ m^2 (a' sigma)^2 (1 - (p_in . s)^2) / 2."""
    m = _round_trips(n, coeffs)
    ps = np.asarray(p_in, dtype=float) @ coeffs.s0_axis
    return m * m * (coeffs.dalpha0 * sigma_phi) ** 2 * (1 - ps * ps) / 2


@dataclass
class AnalyticPrediction:
    n: np.ndarray
    decoherence: np.ndarray
    gamma: np.ndarray
    v: np.ndarray
    purity: np.ndarray
    fidelity: np.ndarray


def predict(coeffs, sigma_phi, p_in, n_max):
    """Records for n = 0..n_max (gamma is reported as alpha0 at n = 0)."""
    ns = np.arange(n_max + 1)
    vs = np.stack([v_matrix(n, coeffs, sigma_phi) for n in ns])
    p_in = check_bloch(p_in)
    out = vs @ p_in
    gam = np.array([coeffs.alpha0] + [float(gamma_n(n, coeffs, sigma_phi)) for n in ns[1:]])
    return AnalyticPrediction(
        n=ns,
        decoherence=np.asarray(decoherence_factor(ns, coeffs, sigma_phi)),
        gamma=gam,
        v=vs,
        purity=0.5 * (1 + np.einsum("ni,ni->n", out, out)),
        fidelity=0.5 * (1 + out @ p_in),
    )
