"""Exponential-kernel Hawkes parameters and the linear algebra of branching.

A d-variate exponential Hawkes process has intensity

    lambda_i(t) = mu_i + sum_j sum_{t_k^j < t} alpha_ij * exp(-beta_ij (t - t_k^j))

and branching matrix ``K = alpha / beta``.  ``K[i, j]`` is the expected number
of direct type-i children of one type-j event, and ``K (I - K)^-1`` counts
descendants over all generations.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InstabilityError, ValidationError

STABILITY_MARGIN = 1e-9
POWER_RTOL = 1e-10
DENSE_FALLBACK_MAX_D = 32


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HawkesModel:
    """Baseline ``mu`` (events/s), amplitudes ``alpha`` (1/s^2) and decays ``beta`` (1/s)."""

    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        mu, alpha, beta = _frozen(self.mu), _frozen(self.alpha), _frozen(self.beta)
        if mu.ndim != 1 or mu.size < 1:
            raise ValidationError("mu must be a non-empty vector")
        d = mu.size
        if alpha.shape != (d, d) or beta.shape != (d, d):
            raise ValidationError(
                f"alpha and beta must be {d}x{d}, got {alpha.shape} and {beta.shape}"
            )
        for name, arr in (("mu", mu), ("alpha", alpha), ("beta", beta)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains NaN or Inf")
        if np.any(mu < 0) or np.any(alpha < 0):
            raise ValidationError("mu and alpha must be nonnegative")
        if np.any((alpha > 0) & (beta <= 0)):
            raise ValidationError("beta must be positive wherever alpha is positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def d(self) -> int:
        return self.mu.size

    def __eq__(self, other):
        if not isinstance(other, HawkesModel):
            return NotImplemented
        return (
            np.array_equal(self.mu, other.mu)
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
        )

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "mu": self.mu.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HawkesModel":
        model = cls(data["mu"], data["alpha"], data["beta"])
        if "d" in data and int(data["d"]) != model.d:
            raise ValidationError(f"declared d={data['d']} but mu has length {model.d}")
        return model

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), allow_nan=False)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, path) -> "HawkesModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True, eq=False)
class BranchingMatrix:
    K: np.ndarray
    spectral_radius: float

    @property
    def d(self) -> int:
        return self.K.shape[0]


@dataclass(frozen=True, eq=False)
class DescendantMatrix:
    M: np.ndarray


def _irreducible(K: np.ndarray) -> bool:
    """Whether the support graph of ``K`` is strongly connected."""
    d = K.shape[0]
    reach = (K > 0) | np.eye(d, dtype=bool)
    for _ in range(int(np.ceil(np.log2(max(d, 2))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def _power_radius(K: np.ndarray, rtol: float = POWER_RTOL, maxiter: int = 2000):
    """Perron root of a nonnegative matrix by shifted power iteration.

    Iterates on ``K + I`` (same Perron vector, root shifted by one, no
    periodicity) and stops when the Collatz-Wielandt bounds
    ``min (Ax)_i/x_i <= rho(A) <= max (Ax)_i/x_i`` agree to ``rtol``.
    Returns ``None`` when the bounds fail to close, e.g. for reducible
    matrices whose Perron vector has zero entries.
    """
    d = K.shape[0]
    A = K + np.eye(d)
    x = np.ones(d)
    for _ in range(maxiter):
        y = A @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= rtol * hi:
            # re-bound on K itself: undoing the shift would round away the last digits
            r = (K @ x) / x
            return max(0.5 * (r.min() + r.max()), 0.0)
        x = y / y.max()
        if x.min() < 1e-250:
            return None
    return None


def spectral_radius(K) -> float:
    """Spectral radius of a nonnegative matrix."""
    K = np.asarray(K, dtype=float)
    if not np.any(K):
        return 0.0
    # a reducible matrix can have a Perron vector with zeros, and then the bounds never close
    rho = _power_radius(K) if _irreducible(K) or K.shape[0] > DENSE_FALLBACK_MAX_D else None
    if rho is not None:
        return float(rho)
    if K.shape[0] <= DENSE_FALLBACK_MAX_D:
        return float(np.max(np.abs(np.linalg.eigvals(K))))
    warnings.warn("power iteration did not converge; using last iterate", RuntimeWarning)
    x = np.ones(K.shape[0])
    for _ in range(2000):
        y = K @ x
        n = np.linalg.norm(y)
        if n == 0:
            return 0.0
        x = y / n
    return float(np.linalg.norm(K @ x))


def branching_matrix(model: HawkesModel) -> BranchingMatrix:
    """``K = alpha / beta`` with null kernels mapped to exact zeros."""
    alpha, beta = model.alpha, model.beta
    K = np.zeros_like(alpha)
    nz = alpha > 0
    K[nz] = alpha[nz] / beta[nz]
    K.setflags(write=False)
    return BranchingMatrix(K, spectral_radius(K))


def as_branching(K) -> BranchingMatrix:
    """Wrap a raw nonnegative matrix, e.g. a hand-built or reduced ``K``."""
    K = _frozen(K)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError("K must be square")
    if np.any(K < 0) or not np.all(np.isfinite(K)):
        raise ValidationError("K must be finite and nonnegative")
    return BranchingMatrix(K, spectral_radius(K))


def is_stable(K: BranchingMatrix) -> bool:
    return K.spectral_radius < 1.0 - STABILITY_MARGIN


def _require_stable(K: BranchingMatrix):
    if not is_stable(K):
        raise InstabilityError(
            f"spectral radius {K.spectral_radius:.12g} is not below 1 - {STABILITY_MARGIN:g}"
        )


def descendant_matrix(K: BranchingMatrix) -> DescendantMatrix:
    """Expected all-generation descendants ``M = K (I - K)^-1``.

    ``M[i, j]`` is the mean number of type-i descendants of one type-j event.
    """
    _require_stable(K)
    A = np.eye(K.d) - K.K
    # M (I - K) = K  <=>  (I - K)^T M^T = K^T
    M = np.linalg.solve(A.T, K.K.T).T
    np.maximum(M, 0.0, out=M)
    M.setflags(write=False)
    return DescendantMatrix(M)


def expected_counts(model: HawkesModel, K: BranchingMatrix, T: float) -> np.ndarray:
    """Stationary mean event counts over a window of ``T`` seconds: ``(I - K)^-1 mu T``."""
    if not T > 0:
        raise ValidationError("T must be positive")
    _require_stable(K)
    return np.linalg.solve(np.eye(K.d) - K.K, model.mu) * T


def intensity_at(model: HawkesModel, history, i: int, t: float) -> float:
    """Exact intensity of dimension ``i`` (0-based) at ``t``, left-continuous.

    ``history`` is a :class:`~gothawkes.trajectory.Trajectory`; only events
    strictly before ``t`` contribute.
    """
    times = np.asarray(history.times)
    marks = np.asarray(history.marks)
    past = times < t
    if not np.any(past):
        return float(model.mu[i])
    tp, mp = times[past], marks[past]
    a = model.alpha[i, mp]
    b = model.beta[i, mp]
    terms = np.where(a > 0, a * np.exp(-b * (t - tp)), 0.0)
    return float(model.mu[i] + math.fsum(terms))
