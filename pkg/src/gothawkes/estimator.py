"""scikit-learn compatible wrappers around fitting and ingestion."""

from __future__ import annotations

from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import branching_matrix
from .estimate import FitConfig, fit, log_likelihood, time_rescaled_residuals
from .got import got_report
from .ingest import DangerArea, build_team_process
from .trajectory import DEAD_GAP_S, Trajectory, check_trajectory, concatenate
from .exceptions import ValidationError


def check_trajectories(X, gap: float = DEAD_GAP_S) -> Trajectory:
    """Coerce ``X`` into a single validated trajectory.

    Accepts a :class:`Trajectory`, its dict form, a path to its JSON file, or a
    list of any of those (joined with dead gaps).
    """
    if isinstance(X, Trajectory):
        return check_trajectory(X)
    if isinstance(X, dict):
        return Trajectory.from_dict(X)
    if isinstance(X, (str, Path)):
        return Trajectory.from_json(X)
    try:
        parts = [check_trajectories(x, gap) for x in X]
    except TypeError:
        raise ValidationError(f"cannot interpret {type(X).__name__} as trajectories") from None
    if len(parts) == 1:
        return parts[0]
    return concatenate(parts, gap=gap)


class HawkesExpEstimator(BaseEstimator):
    """Maximum-likelihood exponential Hawkes fit with one decay per target row.

    Parameters
    ----------
    beta_grid : sequence of float, optional
        Candidate decays (1/s) scanned before golden-section refinement.
        Defaults to 16 log-spaced values in [0.05, 5].
    refine_iters : int
        Golden-section iterations around the best grid decay.
    max_opt_iters : int
        Iteration cap of each inner concave solve.
    null_threshold : float
        Estimated amplitudes below this are set to zero.
    restarts : int
        Starting points tried when an inner solve does not converge.
    tol : float
        Relative projected-gradient tolerance of the inner solve.
    gap : float
        Dead gap (s) inserted when ``fit`` receives several trajectories.

    Attributes
    ----------
    model_ : HawkesModel
    result_ : FitResult
    loglik_ : float
    null_mask_ : ndarray of bool, shape (d, d)
    branching_ : BranchingMatrix
    """

    def __init__(self, beta_grid=None, refine_iters=40, max_opt_iters=500,
                 null_threshold=1e-4, restarts=3, tol=1e-7, gap=DEAD_GAP_S):
        self.beta_grid = beta_grid
        self.refine_iters = refine_iters
        self.max_opt_iters = max_opt_iters
        self.null_threshold = null_threshold
        self.restarts = restarts
        self.tol = tol
        self.gap = gap

    def _config(self) -> FitConfig:
        kwargs = dict(refine_iters=self.refine_iters, max_opt_iters=self.max_opt_iters,
                      null_threshold=self.null_threshold, restarts=self.restarts, tol=self.tol)
        if self.beta_grid is not None:
            kwargs["beta_grid"] = tuple(self.beta_grid)
        return FitConfig(**kwargs)

    def fit(self, X, y=None):
        traj = check_trajectories(X, self.gap)
        self.result_ = fit(traj, self._config())
        self.model_ = self.result_.model
        self.loglik_ = self.result_.loglik
        self.null_mask_ = self.result_.null_mask
        self.branching_ = branching_matrix(self.model_)
        self.n_dims_ = traj.d
        return self

    def score(self, X, y=None) -> float:
        """Log-likelihood of ``X`` under the fitted model."""
        check_is_fitted(self, "model_")
        return log_likelihood(self.model_, check_trajectories(X, self.gap))

    def residuals(self, X):
        """Time-rescaled inter-event residuals (unit exponentials under a good fit)."""
        check_is_fitted(self, "model_")
        return time_rescaled_residuals(self.model_, check_trajectories(X, self.gap))

    def got_report(self, meta=None):
        check_is_fitted(self, "model_")
        return got_report(self.model_, meta)


class PointProcessBuilder(TransformerMixin, BaseEstimator):
    """Turn ``(events, metas)`` into one concatenated 12-dimensional trajectory.

    Stateless; ``fit`` only exists for pipeline compatibility.
    """

    def __init__(self, seed=0, gap=DEAD_GAP_S, area=None):
        self.seed = seed
        self.gap = gap
        self.area = area

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        events, metas = X
        metas = list(metas)
        if not metas:
            raise ValidationError("no matches to build")
        return build_team_process(events, metas, self.area or DangerArea(), self.seed, self.gap)
