"""Recover the phase-noise parameters (sigma_phi, phi0) from decay data."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize
from sklearn.base import BaseEstimator

from .cavity import CavityConfig, Layout, round_trip_unitary, step_unitary
from .engine import EvolutionConfig, PhaseDistribution, Quadrature, averaged_maps, closed_form_purity
from .jones import bloch_rotation

SIGMA_BOUNDS = (0.0, 0.3)
PHI0_BOUNDS = (-math.pi / 2, math.pi / 2)


class IdentifiabilityError(ValueError):
    """The data carry no information about the requested parameter."""


@dataclass
class FitResult:
    sigma_phi: float
    phi0: float
    residual: float
    covariance: np.ndarray
    converged: bool = True
    n_points: int = 0
    method: str = ""
    cost_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.sigma_phi < 0:
            raise ValueError("sigma_phi must be non-negative")
        if self.residual < 0:
            raise ValueError("residual must be non-negative")
        self.covariance = np.asarray(self.covariance, dtype=float).reshape(2, 2)

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))

    def report(self):
        se = self.stderr
        lines = [
            "[fit]",
            f"method = {self.method}",
            f"sigma_phi = {self.sigma_phi:.10g}",
            f"sigma_phi_stderr = {se[0]:.6g}",
            f"phi0 = {self.phi0:.10g}",
            f"phi0_stderr = {se[1]:.6g}",
            f"residual = {self.residual:.10g}",
            f"n_points = {self.n_points}",
            f"converged = {str(self.converged).lower()}",
            "covariance = " + "; ".join(" ".join(f"{v:.6g}" for v in row) for row in self.covariance),
        ]
        return "\n".join(lines) + "\n"


def _cov_from_jacobian(jac, rss, n_params):
    dof = max(jac.shape[0] - n_params, 1)
    try:
        return np.linalg.pinv(jac.T @ jac) * (rss / dof)
    except np.linalg.LinAlgError:
        return np.full((n_params, n_params), np.nan)


def fit_sigma_phi(series):
    """Least-squares fit of (1 + exp(-2 n^2 sigma^2)) / 2 to a purity series.

    Only sigma_phi is estimated; phi0 is reported as NaN.
    """
    n = np.asarray(series.n, dtype=float)
    purity = np.asarray(series.purity, dtype=float)
    informative = purity < 1 - 1e-4
    if informative.sum() < 5:
        raise IdentifiabilityError("purity series is flat; sigma_phi is not identifiable")

    def resid(x):
        return closed_form_purity(n, x[0]) - purity

    # start from the first informative point inverted through the closed form
    k = int(np.argmax(informative))
    arg = max(2 * purity[k] - 1, 1e-12)
    x0 = math.sqrt(-math.log(arg) / (2 * n[k] ** 2)) if n[k] > 0 else 0.05
    sol = least_squares(resid, [x0], bounds=([0.0], [np.inf]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    rss = float(np.sum(sol.fun ** 2))
    var = _cov_from_jacobian(sol.jac, rss, 1)[0, 0]
    cov = np.array([[var, 0.0], [0.0, np.nan]])
    return FitResult(float(sol.x[0]), float("nan"), rss, cov, bool(sol.success), len(n), "purity")


def _series_list(series):
    if isinstance(series, dict):
        return list(series.values())
    return list(series)


def _check_series(items):
    if not items:
        raise ValueError("no series given")
    first = items[0]
    for s in items[1:]:
        if s.layout != first.layout or s.theta != first.theta or s.unit != first.unit:
            raise ValueError("all series must come from the same layout and unit")
    cfg = CavityConfig(Layout(first.layout), first.theta)
    if cfg.layout in (Layout.CARR_PURCELL, Layout.PAULI_GROUP):
        raise IdentifiabilityError("decoupled layouts carry no phase information")
    inputs = []
    for s in items:
        if s.input_bloch is None:
            raise ValueError("series lacks its input Bloch vector")
        p = np.asarray(s.input_bloch, dtype=float)
        # H and V are eigenstates of every mirror phase in the bare cavities
        if cfg.layout in (Layout.BARE, Layout.Z_COMPENSATED) and np.hypot(p[0], p[1]) < 1e-6:
            continue
        if not any(np.linalg.norm(p - q) < 1e-9 for q in inputs):
            inputs.append(p)
    if len(inputs) < 2:
        raise IdentifiabilityError("need series for at least two distinct non-eigenstate inputs")
    return cfg


class _Problem:
    """Stacked Stokes data and the quadrature forward model."""

    def __init__(self, items, quad_order):
        self.cfg = _check_series(items)
        self.per_round_trip = items[0].unit == "round_trip"
        self.items = items
        self.n_max = max(int(np.max(s.n)) for s in items)
        self.p_in = np.stack([np.asarray(s.input_bloch, dtype=float) for s in items])
        self.data = np.concatenate([np.asarray(s.bloch, dtype=float).ravel() for s in items])
        steps = self.n_max
        if self.per_round_trip:
            steps = -(-self.n_max // self.cfg.round_trips_per_step)
        self.evo = EvolutionConfig(max(steps, 1), Quadrature(quad_order))

    def model_from_maps(self, maps):
        return np.concatenate([(maps[s.n] @ p).ravel() for s, p in zip(self.items, self.p_in)])

    def model(self, x):
        dist = PhaseDistribution(float(x[1]), max(float(x[0]), 0.0))
        return self.model_from_maps(averaged_maps(self.cfg, dist, self.evo, self.per_round_trip))

    def residuals(self, x):
        return self.model(x) - self.data

    def cost(self, x):
        r = self.residuals(x)
        return float(r @ r)


def _grid_search(prob, sigma_step, phi0_step, phi_step=2e-3):
    """Coarse scan of the cost over the parameter box.

    Trajectories are tabulated once on a fine uniform phase grid; each
    (sigma, phi0) then costs one weighted sum against Gaussian weights.
    """
    sigmas = np.arange(SIGMA_BOUNDS[0], SIGMA_BOUNDS[1] + 1e-12, sigma_step)
    phi0s = np.arange(PHI0_BOUNDS[0], PHI0_BOUNDS[1] + 1e-12, phi0_step)
    margin = 6 * SIGMA_BOUNDS[1]
    phis = np.arange(PHI0_BOUNDS[0] - margin, PHI0_BOUNDS[1] + margin + phi_step, phi_step)
    u = round_trip_unitary(prob.cfg, phis) if prob.per_round_trip else step_unitary(prob.cfg, phis)
    r = bloch_rotation(u)
    count = prob.n_max
    # trajectories: (n_phi, n_points) for every data entry
    traj = np.empty((len(phis), prob.data.size))
    vecs = prob.p_in.T[None, :, :].repeat(len(phis), axis=0)  # (K, 3, n_inputs)
    stack = [vecs]
    for _ in range(count):
        vecs = np.matmul(r, vecs)
        stack.append(vecs)
    stack = np.stack(stack)  # (n, K, 3, n_inputs)
    col = 0
    for j, s in enumerate(prob.items):
        block = stack[s.n, :, :, j]  # (len(s.n), K, 3)
        traj[:, col:col + block.shape[0] * 3] = block.transpose(1, 0, 2).reshape(len(phis), -1)
        col += block.shape[0] * 3

    costs = np.full((len(sigmas), len(phi0s)), np.inf)
    data = prob.data
    for i, sig in enumerate(sigmas):
        if sig < 2.5 * phi_step:
            # below the tabulation resolution: evaluate the model directly
            for j, p0 in enumerate(phi0s):
                costs[i, j] = prob.cost([sig, p0])
            continue
        w = np.exp(-((phis[None, :] - phi0s[:, None]) / sig) ** 2)
        w /= w.sum(axis=1, keepdims=True)
        diff = w @ traj - data
        costs[i] = np.einsum("ij,ij->i", diff, diff)
    i, j = np.unravel_index(np.argmin(costs), costs.shape)
    return np.array([sigmas[i], phi0s[j]]), costs


def fit_full(series, sigma_step=0.01, phi0_step=0.01, quad_order=256, tol=1e-12):
    """Joint least squares over all Stokes components of several input series.

    ``series`` is a mapping (or sequence) of DecaySeries from one layout.
    A grid scan over sigma in [0, 0.3] and phi0 in [-pi/2, pi/2] picks the
    starting point; L-BFGS-B then refines it against the quadrature engine and
    a short Gauss-Newton pass polishes the result.
    """
    items = _series_list(series)
    prob = _Problem(items, quad_order)
    x0, _ = _grid_search(prob, sigma_step, phi0_step)

    history = [prob.cost(x0)]

    def on_step(xk):
        history.append(prob.cost(xk))

    bounds = [SIGMA_BOUNDS, (PHI0_BOUNDS[0] - 0.05, PHI0_BOUNDS[1] + 0.05)]
    sol = minimize(prob.cost, x0, method="L-BFGS-B", bounds=bounds, callback=on_step,
                   options={"ftol": tol, "gtol": 1e-12, "maxiter": 500})
    x = sol.x if sol.fun <= history[0] else x0
    # L-BFGS-B stalls near 1e-12 on exact data; a few Gauss-Newton steps finish the job
    lo_b, hi_b = [b[0] for b in bounds], [b[1] for b in bounds]
    polish = least_squares(prob.residuals, np.clip(x, lo_b, hi_b), bounds=(lo_b, hi_b),
                           xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=50)
    if prob.cost(polish.x) < prob.cost(x):
        x = polish.x
        history.append(prob.cost(x))
    rss = prob.cost(x)

    # Gauss-Newton covariance from a central-difference Jacobian
    jac = np.empty((prob.data.size, 2))
    for k in range(2):
        h = np.zeros(2)
        h[k] = 1e-6
        lo = x - h
        lo[0] = max(lo[0], 0.0)
        jac[:, k] = (prob.residuals(x + h) - prob.residuals(lo)) / (x[k] + h[k] - lo[k])
    cov = _cov_from_jacobian(jac, rss, 2)
    converged = bool(sol.success) or np.isclose(sol.fun, history[0])
    return FitResult(float(x[0]), float(x[1]), rss, cov, converged, prob.data.size, "stokes", history)


def forward_series(series, sigma_phi, phi0, quad_order=256):
    """Model Bloch vectors matching the layout, inputs and n of ``series``."""
    items = _series_list(series)
    prob = _Problem(items, quad_order)
    return prob.model([sigma_phi, phi0]).reshape(-1, 3)


class NoiseFitter(BaseEstimator):
    """Estimator wrapper around :func:`fit_full` and :func:`fit_sigma_phi`.

    ``fit`` takes a mapping or list of DecaySeries. With ``mode="purity"``
    only the first series is used and only sigma_phi is estimated.
    """

    def __init__(self, mode="stokes", sigma_step=0.01, phi0_step=0.01, quad_order=256):
        self.mode = mode
        self.sigma_step = sigma_step
        self.phi0_step = phi0_step
        self.quad_order = quad_order

    def fit(self, X, y=None):
        if self.mode == "purity":
            self.result_ = fit_sigma_phi(_series_list(X)[0])
        elif self.mode == "stokes":
            self.result_ = fit_full(X, self.sigma_step, self.phi0_step, self.quad_order)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.sigma_phi_ = self.result_.sigma_phi
        self.phi0_ = self.result_.phi0
        return self

    def predict(self, X):
        """Fitted-model Bloch vectors for the layouts, inputs and n values in ``X``."""
        if not hasattr(self, "result_"):
            raise AttributeError("NoiseFitter is not fitted yet")
        if self.mode == "purity":
            return [closed_form_purity(s.n, self.sigma_phi_) for s in _series_list(X)]
        return forward_series(X, self.sigma_phi_, self.phi0_, self.quad_order)

    def score(self, X, y=None):
        """Negative sum of squared residuals of the fitted model on ``X``."""
        items = _series_list(X)
        if self.mode == "purity":
            return -float(sum(np.sum((p - s.purity) ** 2) for p, s in zip(self.predict(items), items)))
        data = np.concatenate([np.asarray(s.bloch).ravel() for s in items])
        return -float(np.sum((self.predict(items).ravel() - data) ** 2))
