"""Lagged regression problems and their OLS / l1-penalized solutions.

``build_design`` turns a multichannel series into the regression of one
target channel on everybody's lags; ``fit_ols`` and ``fit_lasso`` minimize

    (1/n) ||x - X theta||^2            and
    (1/n) ||x - X theta||^2 + lam ||theta||_1

respectively. The l1 solver is cyclic coordinate descent with exact
soft-threshold updates, warm starts, and a KKT certificate on exit. Columns
are used as-is: the processes are modeled as zero-mean, so there is no
intercept and no standardization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import NumericalError, StructuralError
from .var_model import Trajectory

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        return wrap if not (args and callable(args[0])) else args[0]

DEFAULT_CD_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000
DEFAULT_KKT_TOL = 1e-6
DEFAULT_GRID_SIZE = 50
DEFAULT_GRID_DECADES = 4.0
OLS_RCOND = 1e-10
# Desk-scale solver budget for cross-validation paths: held-out error only
# needs the loss, which plateaus long before ill-conditioned coefficients
# settle, so path fits stop on a relative objective plateau.
CV_PLATEAU_TOL = 1e-8
CV_MAX_SWEEPS = 2_000


@dataclass
class DesignProblem:
    """Response vector and lagged design matrix for one target channel.

    Row t of ``design`` holds lags 1..p of every channel for the response
    sample ``response[t]``; samples are ordered most-recent-first. Columns are
    grouped into per-channel blocks of width p (most recent lag first inside
    each block), with the target channel's own block first and the remaining
    channels following; ``channels`` records which source channel each block
    reads from.
    """

    response: np.ndarray
    design: np.ndarray
    n: int
    p: int
    d: int
    target_channel: int
    channels: Tuple[int, ...]
    _gram_cache: Optional[tuple] = field(default=None, repr=False, compare=False)

    def block_index(self, channel: int) -> slice:
        """Column slice of the block holding ``channel``'s lags."""
        try:
            pos = self.channels.index(channel)
        except ValueError:
            raise StructuralError(
                f"channel {channel} has no block in this design (blocks: {self.channels})"
            ) from None
        return slice(pos * self.p, (pos + 1) * self.p)

    def gram(self) -> tuple:
        """Cached (2/n) X^T X, (2/n) X^T x, (1/n) x^T x."""
        if self._gram_cache is None:
            two_n = 2.0 / self.n
            g = two_n * (self.design.T @ self.design)
            b = two_n * (self.design.T @ self.response)
            c0 = float(self.response @ self.response) / self.n
            self._gram_cache = (g, b, c0)
        return self._gram_cache


@dataclass
class LassoFit:
    """A fitted coefficient vector with solver diagnostics.

    ``lam`` is the l1 weight (0 for OLS), ``loss`` the unpenalized
    (1/n)||x - X theta||^2, and ``kkt_violation`` the largest stationarity
    residual scaled by max(1, (2/n)||X_j||^2) per column, so the certificate
    is insensitive to raw column scales. ``rank_deficient`` flags problems
    where the solution is not unique (for OLS the minimum-norm solution is
    returned).
    """

    coeffs: np.ndarray
    lam: float
    loss: float
    iterations: int
    converged: bool
    kkt_violation: float
    n: int
    p: int
    d: int
    target_channel: int
    channels: Tuple[int, ...]
    rank_deficient: bool = False

    def to_json(self) -> str:
        doc = {
            "lambda": self.lam,
            "coeffs": self.coeffs.tolist(),
            "loss": self.loss,
            "kkt_violation": self.kkt_violation,
            "converged": self.converged,
        }
        return json.dumps(doc, indent=2)

    def penalized_objective(self) -> float:
        return self.loss + self.lam * float(np.abs(self.coeffs).sum())

    def passes_kkt(self, tol: float = DEFAULT_KKT_TOL) -> bool:
        """Whether the stationarity certificate holds at ``tol``."""
        return self.kkt_violation <= tol


@dataclass
class CvReport:
    """Cross-validation record: grid (largest lambda first), per-fold errors,
    and the chosen lambda (ties resolved toward heavier shrinkage)."""

    grid: np.ndarray
    fold_errors: np.ndarray
    chosen_lambda: float
    folds: int

    @property
    def mean_errors(self) -> np.ndarray:
        return self.fold_errors.mean(axis=1)


def build_design(
    series: Union[Trajectory, np.ndarray],
    target_channel: int,
    p: int,
) -> DesignProblem:
    """Build the full lagged regression for ``target_channel``.

    Parameters
    ----------
    series : Trajectory or (rows, d) array
        Raw samples, one row per time step.
    target_channel : int
        Channel whose future is being predicted.
    p : int
        Number of lags per channel; needs at least p+1 rows.

    Returns
    -------
    DesignProblem
        n = rows - p samples, design of shape (n, d*p). The response stacks
        the target's samples most-recent-first and each design row holds the
        corresponding lags (own block first, then the other channels in
        ascending order).
    """
    data = series.data if isinstance(series, Trajectory) else np.asarray(series, dtype=float)
    if data.ndim != 2:
        raise StructuralError(f"series must be 2-D, got shape {data.shape}")
    rows, d = data.shape
    if not 0 <= target_channel < d:
        raise StructuralError(f"target_channel {target_channel} out of range for d={d}")
    if p < 1:
        raise StructuralError(f"p must be >= 1, got {p}")
    if rows < p + 1:
        raise StructuralError(f"series has {rows} rows; needs at least p+1={p + 1}")
    n = rows - p

    channels = (target_channel,) + tuple(c for c in range(d) if c != target_channel)
    response = data[p:, target_channel][::-1].copy()
    design = np.empty((n, d * p))
    for pos, ch in enumerate(channels):
        col = data[:, ch]
        for lag in range(1, p + 1):
            design[:, pos * p + lag - 1] = col[p - lag:rows - lag][::-1]
    return DesignProblem(
        response=response,
        design=design,
        n=n,
        p=p,
        d=d,
        target_channel=target_channel,
        channels=channels,
    )


def restrict(problem: DesignProblem, drop_channel: int) -> DesignProblem:
    """Reduced design with ``drop_channel``'s lag block removed."""
    if drop_channel == problem.target_channel:
        raise StructuralError("cannot drop the target channel's own lag block")
    if drop_channel not in problem.channels:
        raise StructuralError(
            f"channel {drop_channel} not present (blocks: {problem.channels})"
        )
    keep = [c for c in problem.channels if c != drop_channel]
    cols = np.concatenate([np.arange(problem.p) + problem.channels.index(c) * problem.p for c in keep])
    return DesignProblem(
        response=problem.response,
        design=np.ascontiguousarray(problem.design[:, cols]),
        n=problem.n,
        p=problem.p,
        d=problem.d - 1,
        target_channel=problem.target_channel,
        channels=tuple(keep),
    )


def soft_threshold(z: float, t: float) -> float:
    """sign(z) * max(|z| - t, 0)."""
    if t < 0:
        raise StructuralError(f"threshold must be >= 0, got {t}")
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lambda_max(problem: DesignProblem) -> float:
    """Smallest lambda at which the all-zero vector is optimal: (2/n)||X^T x||_inf."""
    return float(np.max(np.abs(problem.design.T @ problem.response))) * 2.0 / problem.n


def fit_ols(problem: DesignProblem) -> LassoFit:
    """Least-squares fit (lam = 0); minimum-norm solution when rank-deficient.

    Rank deficiency (including n < columns, where the data are interpolated)
    is reported via ``rank_deficient`` rather than raised.
    """
    x, X = problem.response, problem.design
    theta, _, rank, _ = np.linalg.lstsq(X, x, rcond=OLS_RCOND)
    resid = x - X @ theta
    loss = float(resid @ resid) / problem.n
    grad = 2.0 / problem.n * (X.T @ resid)
    scale = np.maximum(1.0, 2.0 / problem.n * np.einsum("ij,ij->j", X, X))
    return LassoFit(
        coeffs=theta,
        lam=0.0,
        loss=loss,
        iterations=1,
        converged=True,
        kkt_violation=float(np.max(np.abs(grad) / scale)) if theta.size else 0.0,
        n=problem.n,
        p=problem.p,
        d=problem.d,
        target_channel=problem.target_channel,
        channels=problem.channels,
        rank_deficient=rank < X.shape[1],
    )


@njit(cache=True)
def _cd_kernel(gram, diag, b, c0, lam, theta, h, tol, max_sweeps, plateau_tol):
    """Cyclic coordinate descent on the Gram form of the objective.

    Minimizes c0 - b.theta + theta.gram.theta/2 + lam ||theta||_1, mutating
    ``theta`` and ``h = gram @ theta`` in place. Full sweeps alternate with
    active-set polishing; the objective must be non-increasing after every
    sweep (monotone_ok reports this instead of raising so the loop can be
    compiled). ``plateau_tol > 0`` additionally stops when a full sweep
    reduces the objective by less than ``plateau_tol * max(1, |obj|)``
    without the coefficient criterion having been met (converged stays
    False). Returns (sweeps, converged, monotone_ok).
    """
    size = b.size
    sweeps = 0
    converged = False
    monotone_ok = True
    prev_obj = c0 - np.dot(b, theta) + 0.5 * np.dot(theta, h) + lam * np.sum(np.abs(theta))

    while sweeps < max_sweeps:
        # Full sweep over every coordinate.
        max_delta = 0.0
        for j in range(size):
            gj = diag[j]
            if gj <= 0.0:
                continue
            tj = theta[j]
            rho = b[j] - h[j] + gj * tj
            if tj == 0.0 and (-lam <= rho <= lam):
                continue
            if rho > lam:
                new = (rho - lam) / gj
            elif rho < -lam:
                new = (rho + lam) / gj
            else:
                new = 0.0
            delta = new - tj
            if delta != 0.0:
                theta[j] = new
                for t in range(size):
                    h[t] += gram[j, t] * delta
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        sweeps += 1
        obj = c0 - np.dot(b, theta) + 0.5 * np.dot(theta, h) + lam * np.sum(np.abs(theta))
        if obj > prev_obj + 1e-12 * max(1.0, abs(prev_obj)):
            monotone_ok = False
            break
        drop = prev_obj - obj
        prev_obj = obj
        scale = 1.0
        for j in range(size):
            if abs(theta[j]) > scale:
                scale = abs(theta[j])
        if max_delta <= tol * scale:
            converged = True
            break
        if plateau_tol > 0.0 and drop <= plateau_tol * max(1.0, abs(obj)):
            break

        # Polish the current active set before the next full pass.
        active = np.nonzero(theta)[0]
        if active.size == 0 or active.size == size:
            continue
        for _ in range(100):
            if sweeps >= max_sweeps:
                break
            inner_delta = 0.0
            for j in active:
                gj = diag[j]
                if gj <= 0.0:
                    continue
                tj = theta[j]
                rho = b[j] - h[j] + gj * tj
                if rho > lam:
                    new = (rho - lam) / gj
                elif rho < -lam:
                    new = (rho + lam) / gj
                else:
                    new = 0.0
                delta = new - tj
                if delta != 0.0:
                    theta[j] = new
                    for t in range(size):
                        h[t] += gram[j, t] * delta
                    if abs(delta) > inner_delta:
                        inner_delta = abs(delta)
            sweeps += 1
            obj = c0 - np.dot(b, theta) + 0.5 * np.dot(theta, h) + lam * np.sum(np.abs(theta))
            if obj > prev_obj + 1e-12 * max(1.0, abs(prev_obj)):
                monotone_ok = False
                break
            prev_obj = obj
            scale = 1.0
            for j in range(size):
                if abs(theta[j]) > scale:
                    scale = abs(theta[j])
            if inner_delta <= tol * scale:
                break
        if not monotone_ok:
            break
    return sweeps, converged, monotone_ok


def _cd_solve(
    gram: np.ndarray,
    b: np.ndarray,
    c0: float,
    lam: float,
    theta: np.ndarray,
    h: np.ndarray,
    tol: float,
    max_sweeps: int,
    plateau_tol: float = 0.0,
) -> tuple:
    """Run the descent kernel and translate its flags. Returns (sweeps, converged)."""
    diag = np.ascontiguousarray(np.diag(gram))
    sweeps, converged, monotone_ok = _cd_kernel(
        np.ascontiguousarray(gram),
        diag,
        np.ascontiguousarray(b),
        float(c0),
        float(lam),
        theta,
        h,
        float(tol),
        int(max_sweeps),
        float(plateau_tol),
    )
    if not monotone_ok:
        raise NumericalError("coordinate descent objective increased within a sweep")
    return int(sweeps), bool(converged)


def _kkt_violation(gram_diag, b, h, theta, lam) -> float:
    """Largest stationarity residual, per column scaled by max(1, diag)."""
    corr = b - h
    viol = np.where(
        theta != 0.0,
        np.abs(corr - lam * np.sign(theta)),
        np.maximum(np.abs(corr) - lam, 0.0),
    )
    return float(np.max(viol / np.maximum(1.0, gram_diag))) if theta.size else 0.0


def fit_lasso(
    problem: DesignProblem,
    lam: float,
    tol: float = DEFAULT_CD_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    warm_start: Optional[np.ndarray] = None,
    plateau_tol: float = 0.0,
) -> LassoFit:
    """Solve (1/n)||x - X theta||^2 + lam ||theta||_1 by coordinate descent.

    Convergence is declared when the largest coefficient change in a full
    sweep drops below ``tol * max(1, ||theta||_inf)``; the returned
    ``kkt_violation`` certifies stationarity of the final iterate. If the
    sweep cap is reached the best iterate is returned with
    ``converged=False``. A positive ``plateau_tol`` allows an early
    objective-plateau stop (also ``converged=False``), useful when only the
    loss is needed.
    """
    if lam < 0:
        raise StructuralError(f"lam must be >= 0, got {lam}")
    gram, b, c0 = problem.gram()
    size = b.size
    theta = np.zeros(size) if warm_start is None else np.asarray(warm_start, dtype=float).copy()
    if theta.shape != (size,):
        raise StructuralError(f"warm_start has shape {theta.shape}, expected ({size},)")
    h = gram @ theta if theta.any() else np.zeros(size)
    sweeps, converged = _cd_solve(gram, b, c0, lam, theta, h, tol, max_sweeps, plateau_tol)
    resid = problem.response - problem.design @ theta
    loss = float(resid @ resid) / problem.n
    return LassoFit(
        coeffs=theta,
        lam=float(lam),
        loss=loss,
        iterations=sweeps,
        converged=converged,
        kkt_violation=_kkt_violation(np.diag(gram), b, h, theta, lam),
        n=problem.n,
        p=problem.p,
        d=problem.d,
        target_channel=problem.target_channel,
        channels=problem.channels,
    )


def lasso_path(
    problem: DesignProblem,
    lams: Sequence[float],
    tol: float = DEFAULT_CD_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    plateau_tol: float = 0.0,
) -> List[LassoFit]:
    """Warm-started fits over a descending-lambda path.

    ``lams`` may be in any order; fits are computed largest-lambda-first and
    returned in the order given.
    """
    gram, b, c0 = problem.gram()
    size = b.size
    order = np.argsort(-np.asarray(lams, dtype=float))
    theta = np.zeros(size)
    h = np.zeros(size)
    fits: List[Optional[LassoFit]] = [None] * len(order)
    for rank_pos in order:
        lam = float(lams[rank_pos])
        if lam < 0:
            raise StructuralError(f"lam must be >= 0, got {lam}")
        sweeps, converged = _cd_solve(gram, b, c0, lam, theta, h, tol, max_sweeps, plateau_tol)
        resid = problem.response - problem.design @ theta
        fits[rank_pos] = LassoFit(
            coeffs=theta.copy(),
            lam=lam,
            loss=float(resid @ resid) / problem.n,
            iterations=sweeps,
            converged=converged,
            kkt_violation=_kkt_violation(np.diag(gram), b, h, theta, lam),
            n=problem.n,
            p=problem.p,
            d=problem.d,
            target_channel=problem.target_channel,
            channels=problem.channels,
        )
    return fits


def default_lambda_grid(problem: DesignProblem, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Log-spaced grid from lambda_max down over DEFAULT_GRID_DECADES decades."""
    lmax = lambda_max(problem)
    if lmax <= 0:
        # Response orthogonal to every column; any positive lambda keeps 0.
        return np.logspace(0.0, -DEFAULT_GRID_DECADES, size)
    return lmax * np.logspace(0.0, -DEFAULT_GRID_DECADES, size)


def _fold_bounds(n: int, folds: int) -> List[np.ndarray]:
    return [idx for idx in np.array_split(np.arange(n), folds)]


def cross_validate_lambda(
    problem: DesignProblem,
    grid: Optional[Sequence[float]] = None,
    folds: int = 5,
    shuffle: bool = False,
    seed: int = 0,
    tol: float = DEFAULT_CD_TOL,
    max_sweeps: int = CV_MAX_SWEEPS,
    plateau_tol: float = CV_PLATEAU_TOL,
) -> CvReport:
    """Pick lambda by K-fold cross-validated prediction error.

    Rows are split into ``folds`` contiguous blocks (respecting the serial
    ordering of the samples); ``shuffle=True`` switches to a seeded random
    partition instead. For each lambda the model is fit on all but one block
    and scored by mean squared prediction error on the held-out block; the
    internal path fits run under the desk-scale objective-plateau budget
    since only held-out losses are compared. The caller is expected to reuse
    ``chosen_lambda`` for any companion reduced-model fit rather than
    re-validating.
    """
    if folds < 2:
        raise StructuralError(f"folds must be >= 2, got {folds}")
    if folds > problem.n:
        raise StructuralError(f"folds={folds} exceeds sample count n={problem.n}")
    if grid is None:
        grid_arr = default_lambda_grid(problem)
    else:
        grid_arr = np.sort(np.asarray(list(grid), dtype=float))[::-1].copy()
        if grid_arr.size == 0:
            raise StructuralError("lambda grid is empty")
        if np.any(grid_arr <= 0):
            raise StructuralError("lambda grid values must be positive")

    indices = np.arange(problem.n)
    if shuffle:
        indices = np.random.Generator(np.random.Philox(seed)).permutation(problem.n)
    blocks = _fold_bounds(problem.n, folds)

    fold_errors = np.empty((grid_arr.size, folds))
    for f, block in enumerate(blocks):
        held = indices[block]
        mask = np.ones(problem.n, dtype=bool)
        mask[held] = False
        train = DesignProblem(
            response=problem.response[mask],
            design=np.ascontiguousarray(problem.design[mask]),
            n=int(mask.sum()),
            p=problem.p,
            d=problem.d,
            target_channel=problem.target_channel,
            channels=problem.channels,
        )
        fits = lasso_path(train, grid_arr, tol=tol, max_sweeps=max_sweeps, plateau_tol=plateau_tol)
        xv = problem.response[held]
        Xv = problem.design[held]
        for i, fit in enumerate(fits):
            err = xv - Xv @ fit.coeffs
            fold_errors[i, f] = float(err @ err) / held.size

    mean_err = fold_errors.mean(axis=1)
    # Ties resolve to the largest lambda (grid is descending).
    chosen = float(grid_arr[int(np.argmin(mean_err))])
    return CvReport(grid=grid_arr, fold_errors=fold_errors, chosen_lambda=chosen, folds=folds)
