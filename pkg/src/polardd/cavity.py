"""Round-trip unitaries for the ring-cavity layouts and their rotation form.

Every layout maps a relative mirror phase ``phi`` to the 2x2 unitary
applied per *step*. Bare and Z-compensated cavities step once per round
trip; the decoupled and generic-noise layouts complete a control cycle
every two round trips, so their step is a double round trip.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .elements import mirror_mz, noise_element
from .jones import I2, PAULI_VECTOR, X, Z


class Layout(str, enum.Enum):
    BARE = "bare"
    Z_COMPENSATED = "z-compensated"
    CARR_PURCELL = "carr-purcell"
    PAULI_GROUP = "pauli-group"
    GENERIC_FREE = "generic-free"
    GENERIC_BB = "generic-bb"

    @property
    def is_generic(self):
        return self in (Layout.GENERIC_FREE, Layout.GENERIC_BB)

    @property
    def round_trips_per_step(self):
        return 1 if self in (Layout.BARE, Layout.Z_COMPENSATED) else 2


@dataclass(frozen=True)
class CavityConfig:
    layout: Layout
    theta: float | None = None

    def __post_init__(self):
        layout = Layout(self.layout)
        object.__setattr__(self, "layout", layout)
        if layout.is_generic:
            if self.theta is None:
                raise ValueError(f"layout {layout.value!r} needs a noise delay phase theta")
            theta = float(self.theta)
            if not 0 <= theta < 2 * np.pi:
                raise ValueError("theta must lie in [0, 2 pi)")
            object.__setattr__(self, "theta", theta)
        elif self.theta is not None:
            raise ValueError(f"layout {layout.value!r} takes no theta")

    @property
    def round_trips_per_step(self):
        return self.layout.round_trips_per_step


def round_trip_unitary(cfg, phi):
    """Unitary for a single round trip.

    For the double-trip layouts this is the first half of the control
    cycle; its square is :func:`step_unitary`.
    """
    phi = np.asarray(phi, dtype=float)
    m = mirror_mz(phi)
    layout = cfg.layout
    if layout is Layout.BARE:
        # spherical mirror (Z) after the two plane mirrors
        return Z @ m @ m
    if layout is Layout.Z_COMPENSATED:
        return Z @ Z @ m @ m
    if layout in (Layout.CARR_PURCELL, Layout.PAULI_GROUP):
        return Z @ m @ X @ m
    n = noise_element(phi, cfg.theta)
    if layout is Layout.GENERIC_FREE:
        return n @ n
    return Z @ n @ X @ n


def step_unitary(cfg, phi):
    """Unitary for one step of ``cfg`` (one round trip, or two for cycled layouts).

    - bare: Z exp(-i phi Z)
    - z-compensated: exp(-i phi Z)
    - carr-purcell: Z M X M Z M X M = -I
    - pauli-group: [Z M X M][Z M X M] = -I
    - generic-free: [N N][N N]
    - generic-bb: [Z N X N][Z N X N]
    """
    half = round_trip_unitary(cfg, phi)
    if cfg.round_trips_per_step == 1:
        return half
    return half @ half


@dataclass(frozen=True)
class AxisAngle:
    """U = exp(-i alpha s . sigma), a Bloch-sphere rotation by 2 alpha about s."""

    alpha: float
    s: np.ndarray
    degenerate: bool = False

    def unitary(self):
        return unitary_from_axis_angle(self.alpha, self.s)


def unitary_from_axis_angle(alpha, s):
    s = np.asarray(s, dtype=float)
    return np.cos(alpha) * I2 - 1j * np.sin(alpha) * np.einsum("k,kij->ij", s, PAULI_VECTOR)


_FALLBACK_AXIS = np.array([0.0, 0.0, 1.0])


def axis_angle(u, tol=1e-12):
    """Decompose a 2x2 unitary as exp(-i alpha s . sigma) up to global phase.

    The global phase is removed by dividing by the principal square root of
    det U, so alpha lies in [0, pi]. When sin(alpha) vanishes the axis is
    undefined; (0, 0, 1) is returned and ``degenerate`` is set.
    """
    u = np.asarray(u, dtype=complex)
    su = u / np.sqrt(np.linalg.det(u))
    c = 0.5 * np.trace(su).real
    # Tr(su sigma_k) = -2i sin(alpha) s_k
    v = -0.5 * np.einsum("ij,kji->k", su, PAULI_VECTOR).imag
    sn = np.linalg.norm(v)
    alpha = float(np.arctan2(sn, c))
    if sn < tol:
        return AxisAngle(alpha, _FALLBACK_AXIS.copy(), True)
    return AxisAngle(alpha, v / sn)


def canonical_axis_angle(alpha, s):
    """Map a signed (alpha, s) pair onto alpha in [0, pi] describing the same SU(2) element."""
    alpha = float(alpha)
    s = np.asarray(s, dtype=float)
    if alpha < 0:
        alpha, s = -alpha, -s
    return alpha, s


# Closed forms for one round trip of the generic-noise layouts. Angles are
# signed and continuous through phi = 0, which the expansion needs.

def alpha_fe(phi, theta):
    """Free-evolution rotation angle: sin(alpha/2) = sin(phi/2) cos(theta/2)."""
    return 2 * np.arcsin(np.sin(np.asarray(phi) / 2) * np.cos(np.asarray(theta) / 2))


def s_fe(phi, theta):
    """Free-evolution rotation axis.

    Equal to {sin t (cos p - 1), sin t sin p, (1 + cos t) sin p} / (2 sin alpha_fe)
    with the common factor sin(p/2) cancelled, which keeps it finite at p = 0.
    """
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a = alpha_fe(phi, theta)
    ht, hp = theta / 2, phi / 2
    vec = np.stack(np.broadcast_arrays(
        -np.sin(ht) * np.sin(hp), np.sin(ht) * np.cos(hp), np.cos(ht) * np.cos(hp)), axis=-1)
    return vec / np.cos(a / 2)[..., None]


def alpha_bb(phi, theta):
    """Decoupled rotation angle: cos(alpha) = -sin(phi) sin(theta) / 2."""
    return np.arccos(-np.sin(np.asarray(phi)) * np.sin(np.asarray(theta)) / 2)


def s_bb(phi, theta):
    """Decoupled rotation axis (never degenerate: sin(alpha_bb) >= sqrt(3)/2)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    st2 = np.sin(theta / 2) ** 2
    sp2 = np.sin(phi / 2) ** 2
    vec = np.stack(np.broadcast_arrays(
        -np.sin(phi) * st2, 1 - 2 * st2 * sp2, -np.sin(theta) * sp2), axis=-1)
    return vec / np.sin(alpha_bb(phi, theta))[..., None]


def fe_rotation(phi, theta, tol=1e-12):
    """Closed-form AxisAngle of one free-evolution round trip (N N)."""
    a = float(alpha_fe(phi, theta))
    alpha, s = canonical_axis_angle(a, s_fe(phi, theta))
    return AxisAngle(alpha, s, abs(np.sin(alpha)) < tol)


def bb_rotation(phi, theta):
    """Closed-form AxisAngle of one decoupled round trip (Z N X N)."""
    return AxisAngle(float(alpha_bb(phi, theta)), s_bb(phi, theta))


def rotation_closed_form(cfg, phi):
    """Signed per-round-trip (alpha, s) for a generic-noise layout."""
    if cfg.layout is Layout.GENERIC_FREE:
        return alpha_fe(phi, cfg.theta), s_fe(phi, cfg.theta)
    if cfg.layout is Layout.GENERIC_BB:
        return alpha_bb(phi, cfg.theta), s_bb(phi, cfg.theta)
    raise ValueError(f"no closed-form rotation for layout {cfg.layout.value!r}")
