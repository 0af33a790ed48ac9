"""Experiment harness: simulation sweeps, data ingestion, paired analysis.

The built-in three-channel model has one genuine cross-channel influence
(channel 0 drives channel 1) plus a slow second-order channel 2 that leaks
into both, so dropping channel 2 from the analysis creates exactly the
correlated-noise situation the thresholded statistic is meant to survive.
Sweeps simulate that model (or any model loaded from JSON), compute both
direction statistics per trial, and emit deterministic CSV plus SVG views of
the per-value hulls.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .causality import (
    DEFAULT_T0,
    GC_CSV_HEADER,
    GcResult,
    attach_p_values,
    lgc_statistic,
    threshold_for_fpr,
)
from .errors import InfeasibleThresholdError, InputError, StructuralError
from .regression import (
    DesignProblem,
    build_design,
    cross_validate_lambda,
    default_lambda_grid,
    fit_lasso,
    fit_ols,
    lasso_path,
    restrict,
)
from .svgplot import Series, render_svg
from .var_model import VarModel, is_stable, simulate

RECORD_CSV_HEADER = (
    "value,trial,seed,lambda_fwd,lambda_rev,t_fwd,t_rev,threshold,detect_fwd,detect_rev"
)
SUMMARY_CSV_HEADER = (
    "value,t_fwd_min,t_fwd_median,t_fwd_max,t_rev_min,t_rev_median,t_rev_max,"
    "threshold,detect_rate_fwd,detect_rate_rev"
)
# Desk-scale solver budget for lambda-grid sweeps: deep in the dense (tiny
# lambda) regime the coefficients of a near-square design settle extremely
# slowly while the losses, which are all the statistic needs, plateau early.
SWEEP_PLATEAU_TOL = 1e-9
SWEEP_MAX_SWEEPS = 4_000


def builtin_sim_model() -> VarModel:
    """The built-in sparse three-channel order-11 demonstration model.

    Channel 0 feeds channel 1 at lags 2, 3 and 11; channel 2 is an
    autonomous oscillator leaking weakly into both others; every other
    coefficient is zero. Noise is diagonal with variances (1, 0.6, 1).
    """
    p = 11
    coeffs = [np.zeros((3, 3)) for _ in range(p)]
    # channel 0: own lags 1, 5, 11 and channel 2 lag 3
    coeffs[0][0, 0] = -0.67
    coeffs[4][0, 0] = 0.2
    coeffs[10][0, 0] = -0.1
    coeffs[2][0, 2] = 0.05
    # channel 1: own lags 1, 5, 11; channel 0 lags 2, 3, 11; channel 2 lags 4, 5
    coeffs[0][1, 1] = -0.62
    coeffs[4][1, 1] = 0.1
    coeffs[10][1, 1] = -0.2
    coeffs[1][1, 0] = -0.1
    coeffs[2][1, 0] = -0.1
    coeffs[10][1, 0] = 0.5
    coeffs[3][1, 2] = -0.001
    coeffs[4][1, 2] = -0.004
    # channel 2: own lag 2 only
    coeffs[1][2, 2] = -0.9025
    noise = np.diag([1.0, 0.6, 1.0])
    return VarModel(dim=3, order=p, coeffs=coeffs, noise_cov=noise)


def load_model(source: str) -> VarModel:
    """Resolve a model source: the literal string "builtin" or a JSON path."""
    if source == "builtin":
        return builtin_sim_model()
    try:
        with open(source) as fh:
            return VarModel.from_json(fh.read())
    except FileNotFoundError as exc:
        raise InputError(f"model file not found: {source}") from exc


@dataclass
class SweepConfig:
    """Configuration of one sweep over lambda, n, or p.

    ``fixed`` holds the non-swept sizes (and the fixed lambda when
    ``lambda_mode="fixed"``); ``observed_channels`` selects which simulated
    channels enter the bivariate analysis (everything else stays latent).
    """

    sweep_variable: str
    values: List[float]
    fixed: Dict[str, float]
    model_source: str = "builtin"
    trials: int = 30
    seed_base: int = 0
    fpr_level: float = 0.01
    t0: float = DEFAULT_T0
    lambda_mode: str = "cv"
    burn_in: int = 1000
    observed_channels: Tuple[int, int] = (0, 1)
    cv_grid_size: int = 25
    cv_folds: int = 5

    def __post_init__(self):
        if self.sweep_variable not in ("lambda", "n", "p"):
            raise InputError(f"sweep_variable must be lambda, n or p, got {self.sweep_variable!r}")
        if not self.values:
            raise InputError("values must be nonempty")
        vals = [float(v) for v in self.values]
        if sorted(vals) != vals:
            raise InputError("values must be sorted ascending")
        self.values = vals
        if self.trials < 1:
            raise InputError(f"trials must be >= 1, got {self.trials}")
        if len(self.observed_channels) != 2:
            raise InputError("observed_channels must name exactly two channels")
        self.observed_channels = tuple(int(c) for c in self.observed_channels)
        needed = {"lambda", "n", "p"} - {self.sweep_variable}
        if self.lambda_mode == "cv":
            needed.discard("lambda")
        elif self.lambda_mode != "fixed":
            raise InputError(f"lambda_mode must be 'cv' or 'fixed', got {self.lambda_mode!r}")
        missing = needed - set(self.fixed)
        if missing:
            raise InputError(f"fixed is missing {sorted(missing)}")

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"sweep config is not valid JSON: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InputError(f"unknown sweep config fields: {sorted(unknown)}")
        if "observed_channels" in doc:
            doc["observed_channels"] = tuple(doc["observed_channels"])
        return cls(**doc)

    def to_json(self) -> str:
        doc = {k: getattr(self, k) for k in self.__dataclass_fields__}
        doc["observed_channels"] = list(self.observed_channels)
        return json.dumps(doc, indent=2)


@dataclass(frozen=True)
class SweepRecord:
    """Both direction statistics for one (value, trial) cell."""

    value: float
    trial: int
    seed: int
    lambda_fwd: float
    lambda_rev: float
    t_fwd: float
    t_rev: float
    threshold: Optional[float]
    detect_fwd: Optional[bool]
    detect_rev: Optional[bool]

    def to_csv_row(self) -> str:
        thr = "" if self.threshold is None else format(self.threshold, ".17g")
        det_f = "" if self.detect_fwd is None else str(int(self.detect_fwd))
        det_r = "" if self.detect_rev is None else str(int(self.detect_rev))
        return ",".join(
            [
                format(self.value, ".17g"),
                str(self.trial),
                str(self.seed),
                format(self.lambda_fwd, ".17g"),
                format(self.lambda_rev, ".17g"),
                format(self.t_fwd, ".17g"),
                format(self.t_rev, ".17g"),
                thr,
                det_f,
                det_r,
            ]
        )


@dataclass(frozen=True)
class SweepSummary:
    """Per-value hull statistics (min / median / max over trials)."""

    value: float
    t_fwd_min: float
    t_fwd_median: float
    t_fwd_max: float
    t_rev_min: float
    t_rev_median: float
    t_rev_max: float
    threshold: Optional[float]
    detect_rate_fwd: Optional[float]
    detect_rate_rev: Optional[float]

    def to_csv_row(self) -> str:
        thr = "" if self.threshold is None else format(self.threshold, ".17g")
        dr_f = "" if self.detect_rate_fwd is None else format(self.detect_rate_fwd, ".17g")
        dr_r = "" if self.detect_rate_rev is None else format(self.detect_rate_rev, ".17g")
        return ",".join(
            [format(self.value, ".17g")]
            + [
                format(v, ".17g")
                for v in (
                    self.t_fwd_min,
                    self.t_fwd_median,
                    self.t_fwd_max,
                    self.t_rev_min,
                    self.t_rev_median,
                    self.t_rev_max,
                )
            ]
            + [thr, dr_f, dr_r]
        )


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    records: List[SweepRecord]
    summaries: List[SweepSummary]

    def records_csv(self) -> str:
        return "\n".join([RECORD_CSV_HEADER] + [r.to_csv_row() for r in self.records]) + "\n"

    def summary_csv(self) -> str:
        return "\n".join([SUMMARY_CSV_HEADER] + [s.to_csv_row() for s in self.summaries]) + "\n"


def _direction_problems(observed: np.ndarray, p: int) -> Dict[str, tuple]:
    """Full and reduced designs for both directions of a 2-channel matrix."""
    assert observed.shape[1] == 2, "bivariate sweep analysis expects exactly two channels"
    problems = {}
    # forward: channel 0 -> channel 1 (target 1, drop block 0)
    full_fwd = build_design(observed, target_channel=1, p=p)
    problems["fwd"] = (full_fwd, restrict(full_fwd, 0), 0)
    # reverse: channel 1 -> channel 0
    full_rev = build_design(observed, target_channel=0, p=p)
    problems["rev"] = (full_rev, restrict(full_rev, 1), 1)
    return problems


def _simulate_observed(model: VarModel, n: int, p: int, burn_in: int, seed: int,
                       observed_channels: Tuple[int, int]) -> np.ndarray:
    """Simulate n + p analysis rows and keep only the observed channels."""
    rows_needed = n + p
    sim_n = rows_needed - model.order
    if sim_n < 1:
        raise StructuralError(f"n + p = {rows_needed} too small for model order {model.order}")
    traj = simulate(model, sim_n, burn_in=burn_in, seed=seed)
    return traj.data[:, list(observed_channels)]


def _fit_direction(full: DesignProblem, reduced: DesignProblem, source: int,
                   lam: Optional[float], cv_grid_size: int, cv_folds: int) -> tuple:
    """Fit one direction; lam=None selects by CV on the full model."""
    if lam is None:
        grid = default_lambda_grid(full, size=cv_grid_size)
        lam = cross_validate_lambda(full, grid=grid, folds=cv_folds).chosen_lambda
    if lam == 0.0:
        result = lgc_statistic(fit_ols(full), fit_ols(reduced), source_channel=source)
    else:
        result = lgc_statistic(fit_lasso(full, lam), fit_lasso(reduced, lam), source_channel=source)
    return result.lgc, lam


def _sweep_threshold(config: SweepConfig, n: int, p: int) -> Optional[float]:
    try:
        return threshold_for_fpr(config.fpr_level, n, p, config.t0).threshold
    except InfeasibleThresholdError:
        return None


def _sweep_cell(config: SweepConfig, model: VarModel, value: float, trial: int,
                n: int, p: int, lam: Optional[float], threshold: Optional[float]) -> SweepRecord:
    seed = config.seed_base + trial
    observed = _simulate_observed(model, n, p, config.burn_in, seed, config.observed_channels)
    problems = _direction_problems(observed, p)
    t_fwd, lam_fwd = _fit_direction(*problems["fwd"], lam, config.cv_grid_size, config.cv_folds)
    t_rev, lam_rev = _fit_direction(*problems["rev"], lam, config.cv_grid_size, config.cv_folds)
    return SweepRecord(
        value=value,
        trial=trial,
        seed=seed,
        lambda_fwd=lam_fwd,
        lambda_rev=lam_rev,
        t_fwd=t_fwd,
        t_rev=t_rev,
        threshold=threshold,
        detect_fwd=None if threshold is None else bool(t_fwd > threshold),
        detect_rev=None if threshold is None else bool(t_rev > threshold),
    )


def _lambda_sweep_trial(config: SweepConfig, model: VarModel, trial: int,
                        n: int, p: int, threshold: Optional[float]) -> List[SweepRecord]:
    """All lambda grid points for one trial, sharing the simulation and Grams."""
    seed = config.seed_base + trial
    observed = _simulate_observed(model, n, p, config.burn_in, seed, config.observed_channels)
    problems = _direction_problems(observed, p)
    lams = config.values
    stats = {}
    for key in ("fwd", "rev"):
        full, reduced, _ = problems[key]
        full_fits = lasso_path(
            full, lams, max_sweeps=SWEEP_MAX_SWEEPS, plateau_tol=SWEEP_PLATEAU_TOL
        )
        reduced_fits = lasso_path(
            reduced, lams, max_sweeps=SWEEP_MAX_SWEEPS, plateau_tol=SWEEP_PLATEAU_TOL
        )
        stats[key] = [
            lgc_statistic(f, r).lgc for f, r in zip(full_fits, reduced_fits)
        ]
    records = []
    for i, lam in enumerate(lams):
        t_fwd, t_rev = stats["fwd"][i], stats["rev"][i]
        records.append(
            SweepRecord(
                value=lam,
                trial=trial,
                seed=seed,
                lambda_fwd=lam,
                lambda_rev=lam,
                t_fwd=t_fwd,
                t_rev=t_rev,
                threshold=threshold,
                detect_fwd=None if threshold is None else bool(t_fwd > threshold),
                detect_rev=None if threshold is None else bool(t_rev > threshold),
            )
        )
    return records


def _summarize(records: List[SweepRecord]) -> List[SweepSummary]:
    by_value: Dict[float, List[SweepRecord]] = {}
    for r in records:
        by_value.setdefault(r.value, []).append(r)
    out = []
    for value in sorted(by_value):
        cell = by_value[value]
        t_fwd = np.array([r.t_fwd for r in cell])
        t_rev = np.array([r.t_rev for r in cell])
        threshold = cell[0].threshold
        detect_f = [r.detect_fwd for r in cell if r.detect_fwd is not None]
        detect_r = [r.detect_rev for r in cell if r.detect_rev is not None]
        out.append(
            SweepSummary(
                value=value,
                t_fwd_min=float(t_fwd.min()),
                t_fwd_median=float(np.median(t_fwd)),
                t_fwd_max=float(t_fwd.max()),
                t_rev_min=float(t_rev.min()),
                t_rev_median=float(np.median(t_rev)),
                t_rev_max=float(t_rev.max()),
                threshold=threshold,
                detect_rate_fwd=float(np.mean(detect_f)) if detect_f else None,
                detect_rate_rev=float(np.mean(detect_r)) if detect_r else None,
            )
        )
    return out


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run every (value, trial) cell of a sweep and summarize the hulls.

    Trials are seeded ``seed_base + trial`` so any single trial can be rerun
    in isolation; records come back ordered by (value, trial) and the whole
    output is deterministic for a fixed config.
    """
    model = load_model(config.model_source)
    verdict = is_stable(model)
    if not verdict:
        raise StructuralError(
            f"sweep model is unstable (radius {verdict.spectral_radius:.6f})"
        )
    records: List[SweepRecord] = []
    if config.sweep_variable == "lambda":
        n, p = int(config.fixed["n"]), int(config.fixed["p"])
        threshold = _sweep_threshold(config, n, p)
        per_trial = [
            _lambda_sweep_trial(config, model, trial, n, p, threshold)
            for trial in range(config.trials)
        ]
        for i in range(len(config.values)):
            for trial_records in per_trial:
                records.append(trial_records[i])
    else:
        for value in config.values:
            if config.sweep_variable == "n":
                n, p = int(value), int(config.fixed["p"])
            else:
                n, p = int(config.fixed["n"]), int(value)
            lam = None if config.lambda_mode == "cv" else float(config.fixed["lambda"])
            threshold = _sweep_threshold(config, n, p)
            for trial in range(config.trials):
                records.append(
                    _sweep_cell(config, model, value, trial, n, p, lam, threshold)
                )
    return SweepResult(config=config, records=records, summaries=_summarize(records))


def render_plots(result: SweepResult, out_dir: str, stem: str = "sweep") -> List[str]:
    """Write one SVG per sweep mirroring the summary CSV's numeric content."""
    if not result.records:
        raise StructuralError("no records to plot")
    summaries = result.summaries
    xs = [s.value for s in summaries]
    var = result.config.sweep_variable
    series = [
        Series(
            label="forward",
            x=xs,
            center=[s.t_fwd_median for s in summaries],
            lo=[s.t_fwd_min for s in summaries],
            hi=[s.t_fwd_max for s in summaries],
            color="#1f77b4",
        ),
        Series(
            label="reverse",
            x=xs,
            center=[s.t_rev_median for s in summaries],
            lo=[s.t_rev_min for s in summaries],
            hi=[s.t_rev_max for s in summaries],
            color="#d62728",
        ),
    ]
    thresholds = [s.threshold for s in summaries]
    if any(t is not None for t in thresholds):
        thr_vals = [math.nan if t is None else t for t in thresholds]
        series.append(
            Series(label="threshold", x=xs, center=thr_vals, color="#555555", dashed=True)
        )
    svg = render_svg(
        series,
        x_label=var,
        y_label="statistic",
        title=f"sweep over {var}",
        x_log=var in ("lambda", "p"),
    )
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{stem}_{var}.svg")
    with open(path, "w") as fh:
        fh.write(svg)
    return [path]


def ingest_csv(
    path: str,
    channels: Optional[Sequence[Union[int, str]]] = None,
    center: bool = True,
    zscore: bool = False,
) -> np.ndarray:
    """Read a numeric CSV into an (rows, d) matrix.

    The first row is treated as a header when any cell is non-numeric.
    ``channels`` selects columns by header name or integer position; by
    default every column except one literally named "t" is used. Channel
    means are subtracted unless ``center=False`` (the processes are modeled
    as zero-mean); ``zscore=True`` additionally divides by the channel
    standard deviations.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise InputError(f"data file not found: {path}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise InputError(f"{path} is empty")

    def numeric(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header: Optional[List[str]] = None
    if not all(numeric(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise InputError(f"{path} has a header but no data rows")

    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"{path}: row {i + 1} has {len(r)} cells, expected {width}")

    if channels is None:
        if header is not None:
            cols = [i for i, name in enumerate(header) if name != "t"]
        else:
            cols = list(range(width))
    else:
        cols = []
        for ch in channels:
            if isinstance(ch, int):
                if not 0 <= ch < width:
                    raise InputError(f"channel index {ch} out of range (width {width})")
                cols.append(ch)
            else:
                if header is None or ch not in header:
                    raise InputError(f"channel {ch!r} not found in header {header}")
                cols.append(header.index(ch))
    if not cols:
        raise InputError("no channels selected")

    out = np.empty((len(rows), len(cols)))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            cell = r[c].strip()
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: non-numeric cell {cell!r} at row {i + 1}, column {c}"
                ) from None
    if np.isnan(out).any():
        raise InputError(f"{path}: missing values are not supported")
    if center or zscore:
        out = out - out.mean(axis=0)
    if zscore:
        std = out.std(axis=0)
        if np.any(std == 0):
            raise InputError(f"{path}: cannot z-score a constant channel")
        out = out / std
    return out


@dataclass(frozen=True)
class Psth:
    """Binned, unit-averaged event counts."""

    counts: np.ndarray
    bin_width: float
    t_start: float
    ignored: int


def bin_spikes(
    spike_times: Sequence[Sequence[float]],
    bin_width: float,
    t_start: float,
    t_end: float,
) -> Psth:
    """Bin per-unit event times and average the counts across units.

    Events outside [t_start, t_end] are ignored; their number is reported on
    the result. The vector has ceil((t_end - t_start)/bin_width) bins and an
    event at exactly t_end lands in the last bin.
    """
    if bin_width <= 0:
        raise InputError(f"bin_width must be > 0, got {bin_width}")
    if t_end <= t_start:
        raise InputError(f"empty time range [{t_start}, {t_end}]")
    n_bins = int(math.ceil((t_end - t_start) / bin_width - 1e-12))
    n_units = len(spike_times)
    counts = np.zeros(n_bins)
    ignored = 0
    for u, times in enumerate(spike_times):
        times = np.asarray(list(times), dtype=float)
        if times.size and np.any(np.diff(times) < 0):
            raise InputError(f"unit {u} event times are not sorted")
        for t in times:
            if t < t_start or t > t_end:
                ignored += 1
                continue
            idx = int((t - t_start) / bin_width)
            if idx >= n_bins:
                idx = n_bins - 1
            counts[idx] += 1.0
    if n_units > 0:
        counts /= n_units
    return Psth(counts=counts, bin_width=bin_width, t_start=t_start, ignored=ignored)


@dataclass(frozen=True)
class PairAnalysis:
    """Both directions of a pairwise analysis, regularized and least-squares."""

    lasso_src_to_tgt: GcResult
    lasso_tgt_to_src: GcResult
    ols_src_to_tgt: GcResult
    ols_tgt_to_src: GcResult

    def results(self) -> List[GcResult]:
        return [
            self.lasso_src_to_tgt,
            self.lasso_tgt_to_src,
            self.ols_src_to_tgt,
            self.ols_tgt_to_src,
        ]

    def to_csv(self) -> str:
        return "\n".join([GC_CSV_HEADER] + [r.to_csv_row() for r in self.results()]) + "\n"

    def format_table(self) -> str:
        def fmt(res: GcResult, p_val: Optional[float]) -> str:
            p = "n/a" if p_val is None else f"{p_val:.4g}"
            return f"{res.lgc:.4g} (p={p})"

        lines = [
            f"{'direction':<16}{'regularized':<26}{'least-squares':<26}",
            f"{self.lasso_src_to_tgt.source_channel}->{self.lasso_src_to_tgt.target_channel:<14}"
            f"{fmt(self.lasso_src_to_tgt, self.lasso_src_to_tgt.p_value_lgc):<26}"
            f"{fmt(self.ols_src_to_tgt, self.ols_src_to_tgt.p_value_chi2):<26}",
            f"{self.lasso_tgt_to_src.source_channel}->{self.lasso_tgt_to_src.target_channel:<14}"
            f"{fmt(self.lasso_tgt_to_src, self.lasso_tgt_to_src.p_value_lgc):<26}"
            f"{fmt(self.ols_tgt_to_src, self.ols_tgt_to_src.p_value_chi2):<26}",
        ]
        return "\n".join(lines)


def analyze_pair(
    data: np.ndarray,
    target: int,
    source: int,
    p: int,
    lam: Optional[float] = None,
    t0: float = DEFAULT_T0,
    cv_grid_size: int = 25,
    cv_folds: int = 5,
) -> PairAnalysis:
    """Run both directions between ``source`` and ``target``.

    For each direction the regularized route picks lambda by CV on the full
    model (unless ``lam`` fixes it) and reuses it for the reduced fit, and a
    least-squares run is reported alongside. All other channels present in
    ``data`` are conditioned on in both models. p-values use the
    finite-sample bound for the regularized route and the chi-square tail
    for the least-squares one.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise StructuralError("analyze_pair needs an (rows, d>=2) matrix")
    if data.shape[0] < p + 1:
        raise StructuralError(f"need at least p+1={p + 1} rows, got {data.shape[0]}")

    def one(tgt: int, src: int) -> tuple:
        full = build_design(data, tgt, p)
        reduced = restrict(full, src)
        chosen = lam
        if chosen is None:
            grid = default_lambda_grid(full, size=cv_grid_size)
            chosen = cross_validate_lambda(full, grid=grid, folds=cv_folds).chosen_lambda
        if chosen == 0.0:
            reg_full, reg_reduced = fit_ols(full), fit_ols(reduced)
        else:
            reg_full, reg_reduced = fit_lasso(full, chosen), fit_lasso(reduced, chosen)
        lasso_res = lgc_statistic(reg_full, reg_reduced, source_channel=src)
        ols_res = lgc_statistic(fit_ols(full), fit_ols(reduced), source_channel=src)
        return attach_p_values(lasso_res, t0), attach_p_values(ols_res, t0)

    lasso_fwd, ols_fwd = one(target, source)
    lasso_rev, ols_rev = one(source, target)
    return PairAnalysis(
        lasso_src_to_tgt=lasso_fwd,
        lasso_tgt_to_src=lasso_rev,
        ols_src_to_tgt=ols_fwd,
        ols_tgt_to_src=ols_rev,
    )
