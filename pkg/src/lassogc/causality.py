"""Granger-causality statistics and decision rules.

Two routes are provided for deciding whether a source channel improves the
prediction of a target channel:

* the classical measure ``F = log(reduced_loss / full_loss)`` computed from
  least-squares fits, whose scaled version ``n * F`` is asymptotically
  chi-square with p degrees of freedom under the null, and
* the regularized statistic ``T = reduced_loss / full_loss - 1`` computed
  from l1-penalized fits solved with one shared lambda, paired with a
  finite-sample thresholding rule whose false-positive probability has the
  closed form

      2 * exp(-n / (8 * (1 + gamma * t0 * sqrt(log(2p)/n))^2)),
      gamma = (t + 2) / t,

  for threshold t > 0 and a free tuning constant t0 > 0.

The identity ``T = exp(F) - 1`` ties the two scales together and holds for
every result produced here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np

from .errors import InfeasibleThresholdError, StructuralError
from .regression import (
    DesignProblem,
    LassoFit,
    build_design,
    cross_validate_lambda,
    fit_lasso,
    fit_ols,
    restrict,
)
from .var_model import Trajectory

DEFAULT_T0 = 0.25

GC_CSV_HEADER = "source,target,n,p,lambda,lgc,classical_f,p_value_lgc,p_value_chi2"


@dataclass(frozen=True)
class GcResult:
    """Paired full/reduced losses and the derived statistics.

    ``lgc`` is reduced/full - 1, ``classical_f`` the log loss ratio; both are
    +inf when the full model interpolates the response exactly
    (``interpolated`` flag). ``p_value_lgc`` and ``p_value_chi2`` are filled
    in by :func:`attach_p_values`.
    """

    full_loss: float
    reduced_loss: float
    lgc: float
    classical_f: float
    lam: float
    n: int
    p: int
    d: int
    source_channel: int
    target_channel: int
    interpolated: bool = False
    rank_deficient: bool = False
    p_value_lgc: Optional[float] = None
    p_value_chi2: Optional[float] = None

    def to_json(self) -> str:
        import json

        doc = {
            "source": self.source_channel,
            "target": self.target_channel,
            "n": self.n,
            "p": self.p,
            "d": self.d,
            "lambda": self.lam,
            "full_loss": self.full_loss,
            "reduced_loss": self.reduced_loss,
            "lgc": self.lgc,
            "classical_f": self.classical_f,
            "p_value_lgc": self.p_value_lgc,
            "p_value_chi2": self.p_value_chi2,
            "interpolated": self.interpolated,
            "rank_deficient": self.rank_deficient,
        }
        return json.dumps(doc, indent=2)

    def to_csv_row(self) -> str:
        """One CSV record matching :data:`GC_CSV_HEADER`."""
        cells = [
            str(self.source_channel),
            str(self.target_channel),
            str(self.n),
            str(self.p),
            format(self.lam, ".17g"),
            format(self.lgc, ".17g"),
            format(self.classical_f, ".17g"),
            "" if self.p_value_lgc is None else format(self.p_value_lgc, ".17g"),
            "" if self.p_value_chi2 is None else format(self.p_value_chi2, ".17g"),
        ]
        return ",".join(cells)


@dataclass(frozen=True)
class ThresholdRule:
    """A threshold with its closed-form false-positive bound.

    ``fp_bound`` is the raw bound (may exceed 1); ``gamma = (threshold+2)/threshold``.
    """

    threshold: float
    t0: float
    gamma: float
    fp_bound: float
    n: int
    p: int


@dataclass(frozen=True)
class Chi2Test:
    """Scaled classical statistic n*F against chi-square with ``dof`` degrees."""

    statistic: float
    dof: int
    p_value: float


class FpBound(float):
    """Clamped false-positive bound; the unclamped value is ``.raw``."""

    raw: float

    def __new__(cls, raw: float):
        obj = super().__new__(cls, min(max(raw, 0.0), 1.0))
        obj.raw = raw
        return obj


def _lgam(a: float) -> float:
    return math.lgamma(a)


def _lower_gamma_series(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x) by power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(1000):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - _lgam(a))


def _upper_gamma_cf(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a + 1)."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - _lgam(a))


def chi2_sf(x: float, dof: int) -> float:
    """Upper-tail probability P(Chi2_dof > x).

    Evaluated through the regularized incomplete gamma function Q(dof/2, x/2)
    using the series expansion for small arguments and the continued fraction
    otherwise; absolute error is below 1e-10 across the supported range.
    """
    if dof < 1:
        raise StructuralError(f"dof must be a positive integer, got {dof}")
    if x < 0:
        raise StructuralError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = dof / 2.0
    half = x / 2.0
    if half < a + 1.0:
        return 1.0 - _lower_gamma_series(a, half)
    return _upper_gamma_cf(a, half)


def lgc_statistic(
    full: LassoFit,
    reduced: LassoFit,
    source_channel: Optional[int] = None,
) -> GcResult:
    """Form the loss-ratio statistics from a full/reduced fit pair.

    Both fits must have been solved with the same lambda and the reduced fit
    must come from the full problem with the candidate source block removed
    (its ``channels`` must be the full fit's minus one entry, which identifies
    the source channel when ``source_channel`` is not given).
    """
    if full.lam != reduced.lam:
        raise StructuralError(
            f"full and reduced fits used different lambdas ({full.lam} vs {reduced.lam})"
        )
    if full.n != reduced.n or full.p != reduced.p:
        raise StructuralError("full and reduced fits describe different problems")
    missing = set(full.channels) - set(reduced.channels)
    if source_channel is None:
        if len(missing) != 1:
            raise StructuralError(
                f"cannot infer source channel from blocks {full.channels} vs {reduced.channels}"
            )
        source_channel = missing.pop()
    elif missing != {source_channel}:
        raise StructuralError(
            f"reduced fit drops {missing or 'nothing'}, expected {{{source_channel}}}"
        )

    # Interpolation leaves a residual at round-off scale; compare against the
    # reduced loss since any genuine fit keeps the two within a few decades.
    interpolated = full.loss == 0.0 or full.loss <= 1e-12 * reduced.loss
    if interpolated:
        warnings.warn("full model interpolates the response; statistics are infinite",
                      RuntimeWarning, stacklevel=2)
        ratio = math.inf
    else:
        ratio = reduced.loss / full.loss
    return GcResult(
        full_loss=full.loss,
        reduced_loss=reduced.loss,
        lgc=ratio - 1.0,
        classical_f=math.log(ratio) if ratio > 0 else -math.inf,
        lam=full.lam,
        n=full.n,
        p=full.p,
        d=full.d,
        source_channel=int(source_channel),
        target_channel=full.target_channel,
        interpolated=interpolated,
        # an under-determined fit pair is reported, not hidden, but flagged
        # as untrustworthy
        rank_deficient=full.rank_deficient or reduced.rank_deficient,
    )


def gc_pipeline(
    series: Union[Trajectory, np.ndarray],
    target: int,
    source: int,
    p: int,
    lam: Optional[float] = None,
    cv_grid=None,
    cv_folds: int = 5,
) -> GcResult:
    """Build designs, fit full and reduced models, and return the statistics.

    The full design regresses ``target`` on the lags of every channel in
    ``series``; the reduced design drops only ``source``'s block, so with
    more than two channels this is the conditional statistic given the rest.
    ``lam=None`` selects lambda by cross-validation on the full model and
    reuses it for the reduced fit; ``lam=0`` gives the least-squares route.
    """
    if source == target:
        raise StructuralError("source and target channels must differ")
    problem = build_design(series, target, p)
    reduced_problem = restrict(problem, source)
    if lam is None:
        lam = cross_validate_lambda(problem, grid=cv_grid, folds=cv_folds).chosen_lambda
    if lam == 0.0:
        full = fit_ols(problem)
        reduced = fit_ols(reduced_problem)
    else:
        full = fit_lasso(problem, lam)
        reduced = fit_lasso(reduced_problem, lam)
    return lgc_statistic(full, reduced, source_channel=source)


def conditional_lgc(
    series: Union[Trajectory, np.ndarray],
    target: int,
    source: int,
    p: int,
    lam: Optional[float] = None,
) -> GcResult:
    """Conditional statistic for source -> target given all other channels."""
    return gc_pipeline(series, target, source, p, lam=lam)


def classical_gc_test(result: GcResult) -> Chi2Test:
    """Chi-square test of the classical measure: statistic n*F, dof p.

    Intended for least-squares results; a regularized result is accepted with
    a warning since the asymptotic null law no longer applies.
    """
    if result.lam != 0.0:
        warnings.warn(
            "chi-square calibration assumes lam=0 (least squares); "
            f"result was computed with lam={result.lam}",
            RuntimeWarning,
            stacklevel=2,
        )
    if not math.isfinite(result.classical_f):
        raise StructuralError("classical statistic is not finite")
    stat = result.n * result.classical_f
    return Chi2Test(statistic=stat, dof=result.p, p_value=chi2_sf(max(stat, 0.0), result.p))


def fp_probability(threshold: float, n: int, p: int, t0: float = DEFAULT_T0) -> FpBound:
    """Closed-form false-positive bound for thresholding the statistic.

    Returns the bound clamped to [0, 1]; the raw value (which can exceed 1
    for small n) is available as ``.raw`` on the returned float.
    """
    if threshold <= 0:
        raise StructuralError(f"threshold must be > 0, got {threshold}")
    if n < 1 or p < 1:
        raise StructuralError(f"n and p must be positive, got ({n}, {p})")
    if t0 <= 0:
        raise StructuralError(f"t0 must be > 0, got {t0}")
    gamma = (threshold + 2.0) / threshold
    s = math.sqrt(math.log(2.0 * p) / n)
    raw = 2.0 * math.exp(-n / (8.0 * (1.0 + gamma * t0 * s) ** 2))
    return FpBound(raw)


def _min_feasible_n(target_fpr: float, p: int, t0: float) -> int:
    """Smallest n for which some positive threshold achieves ``target_fpr``."""

    def feasible(n: int) -> bool:
        s = math.sqrt(math.log(2.0 * p) / n)
        # Limit of the bound as the threshold grows (gamma -> 1).
        return 2.0 * math.exp(-n / (8.0 * (1.0 + t0 * s) ** 2)) < target_fpr

    lo, hi = 1, 2
    while not feasible(hi):
        hi *= 2
        if hi > 2**62:
            raise InfeasibleThresholdError("no feasible sample size found", min_n=-1)
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def threshold_for_fpr(target_fpr: float, n: int, p: int, t0: float = DEFAULT_T0) -> ThresholdRule:
    """Invert the false-positive bound: smallest threshold achieving ``target_fpr``.

    Solves 2*exp(-n / (8*(1 + gamma*t0*s)^2)) = target_fpr for gamma with
    s = sqrt(log(2p)/n), then threshold = 2/(gamma - 1). If the solved gamma
    is not > 1 the level is unreachable at this n and an
    :class:`InfeasibleThresholdError` reports the minimal feasible n.
    A target of 2 or more is vacuous (the bound never exceeds 2) and yields
    the degenerate rule threshold=0, gamma=inf.
    """
    if target_fpr <= 0:
        raise StructuralError(f"target_fpr must be positive, got {target_fpr}")
    if n < 1 or p < 1:
        raise StructuralError(f"n and p must be positive, got ({n}, {p})")
    if t0 <= 0:
        raise StructuralError(f"t0 must be > 0, got {t0}")
    if target_fpr >= 2.0:
        return ThresholdRule(threshold=0.0, t0=t0, gamma=math.inf, fp_bound=2.0, n=n, p=p)
    s = math.sqrt(math.log(2.0 * p) / n)
    root = math.sqrt(n / (8.0 * math.log(2.0 / target_fpr)))
    gamma = (root - 1.0) / (t0 * s)
    if gamma <= 1.0:
        min_n = _min_feasible_n(target_fpr, p, t0)
        raise InfeasibleThresholdError(
            f"false-positive level {target_fpr} is unreachable at n={n} "
            f"(needs n >= {min_n})",
            min_n=min_n,
        )
    threshold = 2.0 / (gamma - 1.0)
    return ThresholdRule(
        threshold=threshold,
        t0=t0,
        gamma=gamma,
        fp_bound=float(fp_probability(threshold, n, p, t0).raw),
        n=n,
        p=p,
    )


def lgc_p_value(observed: float, n: int, p: int, t0: float = DEFAULT_T0) -> float:
    """False-positive bound when the observed statistic is used as the threshold.

    Non-positive observations cannot reject at any positive threshold, so the
    p-value saturates at 1.
    """
    if observed <= 0 or not math.isfinite(observed):
        return 1.0
    return float(fp_probability(observed, n, p, t0))


def attach_p_values(result: GcResult, t0: float = DEFAULT_T0) -> GcResult:
    """Return ``result`` with both p-value conventions filled in.

    ``p_value_lgc`` evaluates the finite-sample bound at the observed
    statistic; ``p_value_chi2`` is the chi-square upper tail of n*F (reported
    for any lambda, trustworthy only for the lam=0 route).
    """
    p_lgc = lgc_p_value(result.lgc, result.n, result.p, t0)
    if math.isfinite(result.classical_f):
        p_chi2 = chi2_sf(max(result.n * result.classical_f, 0.0), result.p)
    else:
        p_chi2 = 0.0
    return replace(result, p_value_lgc=p_lgc, p_value_chi2=p_chi2)


def corollary_sampling_requirement(
    k: int,
    p: int,
    t0: float,
    gamma: float,
    d_tilde: float,
) -> int:
    """Smallest n satisfying n >= 2*max(d_tilde^2 k^2 / t0^2, 2 d_tilde gamma k) * log(2p)."""
    if k < 1 or p < 1:
        raise StructuralError(f"k and p must be positive, got ({k}, {p})")
    if t0 <= 0 or gamma <= 0 or d_tilde <= 0:
        raise StructuralError("t0, gamma and d_tilde must all be positive")
    bound = 2.0 * max(d_tilde**2 * k**2 / t0**2, 2.0 * d_tilde * gamma * k) * math.log(2.0 * p)
    return int(math.ceil(bound - 1e-12))
