"""Maximum-likelihood fitting of exponential Hawkes models.

The log-likelihood splits into one term per target dimension ``i`` that only
involves ``mu_i`` and row ``i`` of ``alpha``/``beta``.  With the decays of a
row tied to a single ``beta_i``, each row objective is

    f(theta) = sum_k log(x_k . theta) - c . theta,    theta = (mu_i, alpha_i1..alpha_id)

where ``x_k = (1, R_1(t_k), ..., R_d(t_k))`` collects the decayed event sums
at the row's own events and ``c`` the matching compensator coefficients.
``f`` is concave in ``theta`` for fixed ``beta_i``; ``beta_i`` itself is found
by a grid scan followed by golden-section refinement of the profile
likelihood.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import HawkesModel
from .exceptions import DegenerateIntensity, NoConvergence, ValidationError
from .trajectory import Trajectory, check_model_matches, concatenate  # noqa: F401

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def default_beta_grid() -> tuple:
    return tuple(np.geomspace(0.05, 5.0, 16))


@dataclass(frozen=True)
class FitConfig:
    beta_grid: tuple = field(default_factory=default_beta_grid)
    refine_iters: int = 40
    max_opt_iters: int = 500
    null_threshold: float = 1e-4
    restarts: int = 3
    tol: float = 1e-7

    def __post_init__(self):
        grid = tuple(sorted(float(b) for b in self.beta_grid))
        if not grid or grid[0] <= 0:
            raise ValidationError("beta_grid must be a non-empty list of positive rates")
        object.__setattr__(self, "beta_grid", grid)
        if self.null_threshold <= 0 or self.tol <= 0:
            raise ValidationError("thresholds must be positive")
        if self.refine_iters < 0 or self.max_opt_iters < 1 or self.restarts < 1:
            raise ValidationError("iteration counts must be positive")


@dataclass(frozen=True, eq=False)
class FitResult:
    model: HawkesModel
    loglik: float
    per_dimension_loglik: np.ndarray
    null_mask: np.ndarray
    diagnostics: list

    def diagnostics_dict(self) -> dict:
        return {
            "loglik": self.loglik,
            "per_dimension_loglik": self.per_dimension_loglik.tolist(),
            "null_mask": self.null_mask.tolist(),
            "dimensions": self.diagnostics,
        }


# ---------------------------------------------------------------- likelihood


def per_dimension_loglik(model: HawkesModel, traj: Trajectory) -> np.ndarray:
    """Log-likelihood contribution of each target dimension (closed-form compensator)."""
    check_model_matches(model, traj)
    bad, logs, comp = _kernels.loglik_terms(
        traj.times, traj.marks, model.mu, model.alpha, model.beta, traj.horizon
    )
    if bad >= 0:
        raise DegenerateIntensity(
            f"intensity of dimension {traj.marks[bad] + 1} is zero at t={traj.times[bad]}"
        )
    sums = np.zeros(model.d)
    np.add.at(sums, traj.marks, logs)
    return sums - comp


def log_likelihood(model: HawkesModel, traj: Trajectory) -> float:
    """``sum_i [ -int_0^T lambda_i + sum_{events of i} log lambda_i(t_k) ]``."""
    return float(np.sum(per_dimension_loglik(model, traj)))


def compensator_coefficients(traj: Trajectory, beta: float) -> np.ndarray:
    """``c = (T, C_1..C_d)`` with ``C_j = sum_{l in j} (1 - exp(-beta (T - t_l))) / beta``."""
    tails = -np.expm1(-beta * (traj.horizon - traj.times)) / beta
    c = np.empty(traj.d + 1)
    c[0] = traj.horizon
    c[1:] = np.bincount(traj.marks, weights=tails, minlength=traj.d)
    return c


def row_design(traj: Trajectory, i: int, beta: float):
    """Features ``X`` (n_i x (d+1)) and coefficients ``c`` of row ``i`` at decay ``beta``."""
    R = _kernels.decayed_sums(traj.times, traj.marks, traj.d, float(beta), int(i))
    X = np.empty((R.shape[0], traj.d + 1))
    X[:, 0] = 1.0
    X[:, 1:] = R
    return X, compensator_coefficients(traj, beta)


def row_loglik(theta, X, c) -> float:
    lam = X @ theta
    if np.any(lam <= 0):
        return -np.inf
    return float(np.sum(np.log(lam)) - c @ theta)


def row_gradient(theta, X, c) -> np.ndarray:
    return X.T @ (1.0 / (X @ theta)) - c


def row_hessian(theta, X, c) -> np.ndarray:
    w = 1.0 / (X @ theta)
    Xw = X * w[:, None]
    return -(Xw.T @ Xw)


# ---------------------------------------------------------------- inner solve


@dataclass
class _RowSolution:
    theta: np.ndarray
    value: float
    iterations: int
    converged: bool


def _stationarity(theta, g, c) -> float:
    pg = np.where(theta > 0, g, np.maximum(g, 0.0))
    return float(np.max(np.abs(pg) / c))


def _projected_newton(X, c, theta0, max_iter, tol) -> _RowSolution:
    """Maximize the concave row objective over the nonnegative orthant.

    Two-metric projection: coordinates pinned at the bound with a descending
    gradient take a diagonally scaled gradient step (and stay projected at
    zero); the remaining ones take a Newton step.  Armijo backtracking along
    the projection arc.  Converged when the projected gradient, scaled
    coordinate-wise by ``c``, is below ``tol``.
    """
    theta = theta0.copy()
    f = row_loglik(theta, X, c)
    for it in range(1, max_iter + 1):
        g = row_gradient(theta, X, c)
        if _stationarity(theta, g, c) <= tol:
            return _RowSolution(theta, f, it - 1, True)
        H = row_hessian(theta, X, c)
        D = np.maximum(-np.diag(H), 1e-300)
        eps = min(np.linalg.norm(theta - np.maximum(theta + g / D, 0.0)), 1e-3)
        active = (theta <= eps) & (g < 0)
        free = ~active
        direction = np.zeros_like(theta)
        direction[active] = g[active] / D[active]
        if free.any():
            Hf = -H[np.ix_(free, free)]
            try:
                L = np.linalg.cholesky(Hf)
                direction[free] = np.linalg.solve(L.T, np.linalg.solve(L, g[free]))
            except np.linalg.LinAlgError:
                ridge = 1e-10 * np.trace(Hf) / Hf.shape[0]
                direction[free] = np.linalg.lstsq(
                    Hf + ridge * np.eye(Hf.shape[0]), g[free], rcond=None
                )[0]
        step = 1.0
        accepted = False
        for _ in range(60):
            cand = np.maximum(theta + step * direction, 0.0)
            fc = row_loglik(cand, X, c)
            gain = step * g[free] @ direction[free] + g[active] @ (cand - theta)[active]
            if np.isfinite(fc) and fc - f >= 1e-4 * gain:
                accepted = True
                break
            step *= 0.5
        if not accepted or fc <= f:
            # no further ascent representable in floating point
            if accepted:
                theta, f = cand, fc
            g = row_gradient(theta, X, c)
            return _RowSolution(theta, f, it, _stationarity(theta, g, c) <= tol)
        theta, f = cand, fc
    g = row_gradient(theta, X, c)
    return _RowSolution(theta, f, max_iter, _stationarity(theta, g, c) <= tol)


def _interior_start(n_events, c, usable, share):
    theta = np.zeros_like(c)
    theta[0] = share * n_events / c[0]
    k = int(usable[1:].sum())
    if k:
        idx = np.flatnonzero(usable)
        idx = idx[idx > 0]
        theta[idx] = (1.0 - share) * n_events / (k * c[idx])
    else:
        theta[0] = n_events / c[0]
    return theta


def solve_row(X, c, theta0=None, max_iter=500, tol=1e-7, restarts=1) -> _RowSolution:
    """Best nonnegative maximizer of ``sum log(X theta) - c.theta``.

    Features that are identically zero at the row's events only lower the
    objective, so their coefficients are pinned to zero.  Extra restarts from
    other interior points are used only when a solve fails to converge.
    """
    n = X.shape[0]
    usable = np.ones(c.size, dtype=bool)
    usable[1:] = (c[1:] > 0) & np.any(X[:, 1:] > 0, axis=0)
    Xu, cu = X[:, usable], c[usable]
    starts = []
    if theta0 is not None:
        start = np.asarray(theta0, float)[usable].copy()
        if start[0] <= 0:
            start[0] = 0.5 * n / cu[0]
        if np.all(Xu @ start > 0):
            starts.append(start)
    for share in (0.5, 0.9, 0.1, 0.99)[:restarts]:
        starts.append(_interior_start(n, c, usable, share)[usable])
    best = None
    total_iters = 0
    for start in starts:
        sol = _projected_newton(Xu, cu, start, max_iter, tol)
        total_iters += sol.iterations
        if sol.converged:
            # a KKT point of a concave problem is the maximum; a stalled iterate can only
            # beat it by rounding
            best = sol
            break
        if best is None or sol.value > best.value:
            best = sol
    theta = np.zeros(c.size)
    theta[usable] = best.theta
    return _RowSolution(theta, best.value, total_iters, best.converged)


# ---------------------------------------------------------------- beta profile


def _fit_row(traj: Trajectory, i: int, config: FitConfig) -> dict:
    n_i = int(np.sum(traj.marks == i))
    grid = config.beta_grid
    if n_i == 0:
        beta = float(np.exp(np.mean(np.log(grid))))
        return dict(theta=np.zeros(traj.d + 1), beta=beta, value=0.0,
                    iterations=0, evaluations=0, converged=True, empty=True)

    evals = {}
    state = {"iters": 0, "theta": None, "beta": None, "converged": True}

    def profile(beta):
        if beta in evals:
            return evals[beta][0]
        X, c = row_design(traj, i, beta)
        warm = None
        if state["theta"] is not None:
            warm = state["theta"].copy()
            warm[1:] *= beta / state["beta"]
        sol = solve_row(X, c, warm, config.max_opt_iters, config.tol, config.restarts)
        state["iters"] += sol.iterations
        evals[beta] = (sol.value, sol.theta, sol.converged)
        state["theta"], state["beta"] = sol.theta, beta
        return sol.value

    values = [profile(b) for b in grid]
    k = int(np.argmax(values))
    lo = math.log(grid[max(k - 1, 0)])
    hi = math.log(grid[min(k + 1, len(grid) - 1)])
    if config.refine_iters and hi > lo:
        a, b = lo, hi
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1, f2 = profile(math.exp(x1)), profile(math.exp(x2))
        for _ in range(config.refine_iters):
            if f1 >= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = profile(math.exp(x1))
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = profile(math.exp(x2))
    beta = max(evals, key=lambda b: evals[b][0])
    value, theta, converged = evals[beta]
    return dict(theta=theta, beta=float(beta), value=value, iterations=state["iters"],
                evaluations=len(evals), converged=bool(converged), empty=False)


def fit(traj: Trajectory, config: FitConfig | None = None) -> FitResult:
    """Fit ``(mu, alpha, beta)`` with decays shared along each row.

    Rows are fitted independently.  Estimated amplitudes below
    ``config.null_threshold`` are set to exactly zero and flagged in
    ``null_mask``.  A row whose inner solve hits ``max_opt_iters`` keeps its
    best iterate and emits :class:`NoConvergence`.
    """
    config = config or FitConfig()
    counts = traj.counts()
    if counts.max(initial=0) < 2:
        raise ValidationError("need at least two events in some dimension to fit")
    d = traj.d
    mu = np.zeros(d)
    alpha = np.zeros((d, d))
    beta = np.ones((d, d))
    per_dim = np.zeros(d)
    diagnostics = []
    for i in range(d):
        row = _fit_row(traj, i, config)
        theta = row["theta"].copy()
        small = theta[1:] < config.null_threshold
        theta[1:][small] = 0.0
        mu[i] = theta[0]
        alpha[i] = theta[1:]
        beta[i, :] = row["beta"]
        if not row["empty"]:
            X, c = row_design(traj, i, row["beta"])
            per_dim[i] = row_loglik(theta, X, c)
        if not row["converged"]:
            warnings.warn(f"dimension {i + 1}: inner solve did not converge", NoConvergence)
        diagnostics.append({
            "dimension": i + 1,
            "n_events": int(counts[i]),
            "beta": row["beta"],
            "iterations": row["iterations"],
            "evaluations": row["evaluations"],
            "converged": row["converged"],
            "empty": row["empty"],
        })
    model = HawkesModel(mu, alpha, beta)
    null_mask = alpha == 0
    return FitResult(model, float(np.sum(per_dim)), per_dim, null_mask, diagnostics)


# ---------------------------------------------------------------- goodness of fit


def time_rescaled_residuals(model: HawkesModel, traj: Trajectory) -> np.ndarray:
    """Compensator increments between consecutive events of each dimension.

    Under the true model these are i.i.d. unit exponentials; the returned array
    pools all dimensions.
    """
    check_model_matches(model, traj)
    lam_int = _kernels.compensator_at_events(
        traj.times, traj.marks, model.mu, model.alpha, model.beta
    )
    out = []
    for i in range(traj.d):
        v = lam_int[traj.marks == i]
        if v.size:
            out.append(np.diff(v, prepend=0.0))
    return np.concatenate(out) if out else np.empty(0)
