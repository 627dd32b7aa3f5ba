"""Six-projector polarization tomography.

Counts are recorded for the projectors H, V, D, A, R, L. Reconstruction
maximizes the Poisson likelihood over physical states parameterized as
rho = T^dag T / Tr(T^dag T) with T lower triangular (four real numbers),
so every returned state is positive semidefinite with unit trace.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .jones import bloch_from_density, density_from_bloch, named_state

PROJECTORS = ("H", "V", "D", "A", "R", "L")
_KETS = np.stack([named_state(k) for k in PROJECTORS])
_PAIRS = ((0, 1), (2, 3), (4, 5))


@dataclass(frozen=True)
class CountRecord:
    n_trip: int
    counts: dict

    def __post_init__(self):
        counts = {k: int(self.counts[k]) for k in PROJECTORS}
        if any(v < 0 for v in counts.values()):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    def as_array(self):
        return np.array([self.counts[k] for k in PROJECTORS], dtype=float)

    @classmethod
    def from_array(cls, n_trip, values):
        return cls(int(n_trip), dict(zip(PROJECTORS, (int(v) for v in values))))


@dataclass
class ReconstructionResult:
    rho: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    grad_norm: float = float("nan")

    @property
    def bloch(self):
        return bloch_from_density(self.rho)


def projector_probabilities(rho):
    """<pi|rho|pi> for the six projectors, in PROJECTORS order."""
    return np.einsum("ki,ij,kj->k", _KETS.conj(), np.asarray(rho, dtype=complex), _KETS).real


def simulate_counts(rho, n_per_basis, seed=None, noise="poisson", n_trip=0):
    """Counts for one peak; each measurement basis receives ``n_per_basis`` trials on average."""
    if n_per_basis < 1:
        raise ValueError("n_per_basis must be >= 1")
    expected = n_per_basis * np.clip(projector_probabilities(rho), 0, None)
    if noise in (None, "none"):
        values = np.rint(expected)
    elif noise == "poisson":
        values = np.random.default_rng(seed).poisson(expected)
    else:
        raise ValueError(f"unknown noise model {noise!r}")
    return CountRecord.from_array(n_trip, values)


def stokes_from_counts(rec):
    """Linear-inversion Bloch vector (D-A, R-L, H-V normalized per basis)."""
    c = rec.as_array() if isinstance(rec, CountRecord) else np.asarray(rec, dtype=float)
    out = []
    for a, b in ((2, 3), (4, 5), (0, 1)):
        total = c[a] + c[b]
        if total <= 0:
            raise ValueError(f"no counts in the {PROJECTORS[a]}/{PROJECTORS[b]} basis")
        out.append((c[a] - c[b]) / total)
    return np.array(out)


def _t_from_params(x):
    return np.array([[x[0], 0], [x[2] + 1j * x[3], x[1]]], dtype=complex)


def _params_from_rho(rho):
    # rho = T^dag T with T lower triangular: reverse the ordinary Cholesky factor
    j = np.array([[0, 1], [1, 0]])
    lower = np.linalg.cholesky(j @ rho @ j)
    t = j @ lower.conj().T @ j
    # fix the phases so the diagonal is real and positive
    phases = np.exp(-1j * np.angle(np.diag(t)))
    t = np.diag(phases) @ t
    return np.array([t[0, 0].real, t[1, 1].real, t[1, 0].real, t[1, 0].imag])


def _loglik_terms(counts, likelihood):
    """Return f(p) and df/dp for the chosen likelihood, per projector."""
    n_basis = np.repeat([counts[a] + counts[b] for a, b in _PAIRS], 2)
    if likelihood == "poisson":
        mask = counts > 0

        def f(p):
            return float(np.sum(counts[mask] * np.log(n_basis[mask] * p[mask])) - np.sum(n_basis * p))

        def df(p):
            g = -n_basis.copy()
            g[mask] += counts[mask] / p[mask]
            return g
    elif likelihood == "gaussian":
        var = np.maximum(counts, 1.0)

        def f(p):
            return float(-0.5 * np.sum((n_basis * p - counts) ** 2 / var))

        def df(p):
            return -(n_basis * p - counts) * n_basis / var
    else:
        raise ValueError(f"unknown likelihood {likelihood!r}")
    return f, df


def log_likelihood(rho, rec, likelihood="poisson"):
    counts = rec.as_array() if isinstance(rec, CountRecord) else np.asarray(rec, dtype=float)
    f, _ = _loglik_terms(counts, likelihood)
    return f(projector_probabilities(rho))


def _initial_rho(counts):
    sums = [counts[a] + counts[b] for a, b in _PAIRS]
    p = np.array([
        (counts[2] - counts[3]) / sums[1] if sums[1] else 0.0,
        (counts[4] - counts[5]) / sums[2] if sums[2] else 0.0,
        (counts[0] - counts[1]) / sums[0] if sums[0] else 0.0,
    ])
    norm = np.linalg.norm(p)
    if norm > 0.99:
        p *= 0.99 / norm
    return density_from_bloch(p)


def mle_reconstruct(rec, likelihood="poisson", gtol=1e-9, max_iter=10_000):
    """Maximum-likelihood density matrix for one count record.

    The objective is the log-likelihood divided by the total count, plus a
    quadratic penalty on Tr(T^dag T) - 1 that pins the otherwise free
    scale of T. Convergence means the gradient norm of that objective fell
    below ``gtol``; otherwise the best iterate is returned unflagged.
    """
    counts = rec.as_array() if isinstance(rec, CountRecord) else np.asarray(rec, dtype=float)
    if counts.shape != (6,) or np.any(counts < 0):
        raise ValueError("expected six non-negative counts")
    total = counts.sum()
    if total <= 0:
        raise ValueError("count record is empty")
    f, df = _loglik_terms(counts, likelihood)

    def objective(x):
        t = _t_from_params(x)
        norm2 = float(np.sum(np.abs(t) ** 2))
        tk = _KETS @ t.T  # rows are T|pi>
        amp2 = np.sum(np.abs(tk) ** 2, axis=1)
        p = np.clip(amp2 / norm2, 1e-300, None)
        g_p = df(p)
        # dp/dT* = (T|pi><pi| - p T) / norm2
        grad_t = (np.einsum("k,ki,kj->ij", g_p, tk, _KETS.conj()) - np.sum(g_p * p) * t) / norm2
        pen = norm2 - 1
        value = -f(p) / total + pen * pen
        grad_t = -grad_t / total + 2 * pen * t
        # real gradients are 2 Re / 2 Im of the Wirtinger derivative
        grad = 2 * np.array([grad_t[0, 0].real, grad_t[1, 1].real, grad_t[1, 0].real, grad_t[1, 0].imag])
        return value, grad

    x0 = _params_from_rho(_initial_rho(counts))
    res = minimize(objective, x0, jac=True, method="BFGS",
                   options={"gtol": gtol, "maxiter": max_iter})
    x = res.x
    value, grad = objective(x)
    # BFGS can stop on precision loss just short of gtol; polish with Newton-free restarts
    restarts = 0
    while np.linalg.norm(grad) > gtol and restarts < 5:
        res2 = minimize(objective, x, jac=True, method="BFGS", options={"gtol": gtol, "maxiter": max_iter})
        if res2.fun > value:
            break
        x, restarts = res2.x, restarts + 1
        value, grad = objective(x)
        res.nit += res2.nit
    t = _t_from_params(x)
    rho = t.conj().T @ t
    rho = rho / np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    gnorm = float(np.linalg.norm(grad))
    return ReconstructionResult(rho, f(projector_probabilities(rho)), int(res.nit), gnorm <= gtol, gnorm)


class MLETomography(TransformerMixin, BaseEstimator):
    """Reconstruct polarization states from rows of (H, V, D, A, R, L) counts.

    ``transform`` maps a count matrix of shape (n_records, 6) to Bloch
    vectors of shape (n_records, 3); ``fit`` stores the reconstructions of
    its input in ``results_``.
    """

    def __init__(self, likelihood="poisson", gtol=1e-9, max_iter=10_000):
        self.likelihood = likelihood
        self.gtol = gtol
        self.max_iter = max_iter

    def _reconstruct(self, counts):
        counts = check_array(counts, dtype=float)
        if counts.shape[1] != 6:
            raise ValueError(f"expected 6 count columns, got {counts.shape[1]}")
        return [mle_reconstruct(row, self.likelihood, self.gtol, self.max_iter) for row in counts]

    def fit(self, X, y=None):
        self.results_ = self._reconstruct(X)
        self.density_matrices_ = np.stack([r.rho for r in self.results_])
        self.n_features_in_ = 6
        return self

    def transform(self, X):
        check_is_fitted(self, "results_")
        return np.stack([r.bloch for r in self._reconstruct(X)])
