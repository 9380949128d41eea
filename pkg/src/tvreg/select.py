"""Bandwidth plans, model complexities and the selection criterion.

Each candidate model gets a bandwidth at its own mean-squared-error
optimal rate, a complexity score (an effective parameter count for the
smoothers), and a penalized log residual score.  The penalty weight can
be fixed by a schedule in the sample size or tuned by K-fold
cross-validation on held-out prediction error.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import (
    DegenerateDensity,
    DegenerateWindow,
    FoldTooSmall,
    SingularGram,
    TvregError,
    ZeroIQR,
)
from .kernels import Kernel1D
from .locstat import Dataset, ModelKind
from .smooth import (
    DENSITY_FLOOR,
    Region,
    _augment,
    _eval_coefficients,
    _eval_time_constant,
    _eval_time_varying,
    _solve_normal_equations,
    predict_time_constant,
    predict_time_varying,
    predict_varying_coefficient,
)

LOG_RSS_FLOOR = -745.0

DEFAULT_C_GRID = (0.025, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6)


@dataclass(frozen=True)
class BandwidthPlan:
    """Bandwidths for all four fits, tied to (n, d) through fixed rates.

    The constants are the tunable part; the rates n^{-1/(d+5)},
    n^{-1/(d+4)} and n^{-1/5} are pinned to each estimator.
    """

    n: int
    d: int
    iqr: np.ndarray
    c_b_time_varying: float = 0.5
    c_h_time_varying: float = 1.0
    c_h_time_constant: float = 1.0
    c_b_coefficient: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "iqr", np.atleast_1d(np.asarray(self.iqr, dtype=float)))
        if self.n < 2:
            raise ValueError("plan needs n >= 2")
        if self.iqr.shape[0] != self.d:
            raise ValueError("iqr must have one entry per predictor coordinate")
        for name in ("c_b_time_varying", "c_h_time_varying", "c_h_time_constant", "c_b_coefficient"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def b_time_varying(self) -> float:
        return self.c_b_time_varying * self.n ** (-1.0 / (self.d + 5))

    @property
    def h_time_varying(self) -> float:
        return self.c_h_time_varying * self.n ** (-1.0 / (self.d + 5))

    @property
    def h_time_constant(self) -> float:
        return self.c_h_time_constant * self.n ** (-1.0 / (self.d + 4))

    @property
    def b_coefficient(self) -> float:
        return self.c_b_coefficient * self.n ** (-1.0 / 5.0)

    def with_sample_size(self, n: int) -> "BandwidthPlan":
        """Same constants, rates re-evaluated at another sample size."""
        return replace(self, n=int(n))


def default_bandwidths(data: Dataset) -> BandwidthPlan:
    """Rule-of-thumb plan: constants 1/2 for the temporal bandwidths and
    the product of componentwise interquartile ranges for the spatial ones."""
    if data.n < 20:
        raise ValueError("need at least 20 observations for a bandwidth plan")
    iqr = np.percentile(data.x, 75, axis=0) - np.percentile(data.x, 25, axis=0)
    for k, value in enumerate(iqr):
        if not value > 0:
            raise ZeroIQR(f"predictor coordinate {k} is constant on its quartile range", coordinate=k)
    c_h = float(np.prod(iqr))
    return BandwidthPlan(
        n=data.n,
        d=data.d,
        iqr=iqr,
        c_b_time_varying=0.5,
        c_h_time_varying=c_h,
        c_h_time_constant=c_h,
        c_b_coefficient=0.5,
    )


def model_df(kind: ModelKind, plan: BandwidthPlan, d_eff: int) -> float:
    """Model complexity: predictor count for the linear fit, effective
    parameter counts scaled by the interquartile box for the smoothers.

    ``d_eff`` counts the intercept when one is fitted; the kernel
    dimension stays the raw predictor count.
    """
    if d_eff < 1:
        raise ValueError("d_eff must be at least 1")
    box = float(np.prod(2.0 * plan.iqr))
    if kind is ModelKind.LINEAR:
        return float(d_eff)
    if kind is ModelKind.VARYING_COEFFICIENT:
        return d_eff / plan.b_coefficient
    if kind is ModelKind.TIME_CONSTANT:
        return box / plan.h_time_constant**plan.d
    if kind is ModelKind.TIME_VARYING:
        return box / (plan.b_time_varying * plan.h_time_varying**plan.d)
    raise ValueError(f"unknown model kind {kind!r}")


def tau_schedule(n: float, d: int, c: float) -> float:
    """Penalty weight c * n^{-(d+3)/(d+4)} * log n (natural log)."""
    if not c > 0:
        raise ValueError("c must be positive")
    if not n >= 2:
        raise ValueError("n must be at least 2")
    return c * float(n) ** (-(d + 3.0) / (d + 4.0)) * math.log(float(n))


@dataclass(frozen=True)
class CvPlan:
    """K contiguous time blocks and a grid of penalty constants to try."""

    k_folds: int = 10
    c_grid: tuple = DEFAULT_C_GRID
    fold_style: str = "contiguous_blocks"

    def __post_init__(self):
        if self.k_folds < 2:
            raise ValueError("need at least 2 folds")
        if len(self.c_grid) < 1:
            raise ValueError("c_grid must not be empty")
        if any(not c > 0 for c in self.c_grid):
            raise ValueError("all c values must be positive")
        if self.fold_style != "contiguous_blocks":
            raise ValueError("only contiguous_blocks folds are supported")


@dataclass(frozen=True)
class GicRow:
    log_rss_over_n: float
    df: float
    gic: float


@dataclass
class SelectionReport:
    """Per-model scores, the chosen model, and how the penalty was set."""

    rows: dict
    chosen: ModelKind
    tau: float
    plan: BandwidthPlan
    n: int
    d_eff: int
    c: Optional[float] = None
    cv_fallbacks: int = 0


def _log_rss_over_n(rss: float, n: int) -> float:
    value = rss / n
    if value <= 0.0:
        return LOG_RSS_FLOOR
    return max(math.log(value), LOG_RSS_FLOOR)


def _annotate(exc: TvregError, kind: ModelKind) -> TvregError:
    exc.model = kind
    exc.args = (f"model {kind.label}: {exc}",)
    return exc


def _restricted_rss(x, y, times, region, plan, kernel, intercept):
    """Restricted RSS of all four fits on raw arrays (times need not be
    the full grid; cross-validation passes gapped subsets)."""
    idx = region.restricted_indices(x, times)
    y_r = y[idx]
    rss = {}

    try:
        fhat, that, badwin = _eval_time_varying(
            x, y, times, x[idx], times[idx], plan.b_time_varying, plan.h_time_varying, kernel
        )
        if badwin.any():
            raise DegenerateWindow(
                f"temporal window degenerate at t={times[idx][badwin][0]:.6g}"
            )
        if (fhat <= DENSITY_FLOOR).any():
            offender = int(idx[fhat <= DENSITY_FLOOR][0])
            raise DegenerateDensity(
                f"density estimate fell below {DENSITY_FLOOR} at sample index {offender}",
                index=offender,
            )
        rss[ModelKind.TIME_VARYING] = float(np.sum((y_r - that / fhat) ** 2))
    except TvregError as exc:
        raise _annotate(exc, ModelKind.TIME_VARYING)

    try:
        ftilde, ttilde = _eval_time_constant(x, y, x[idx], plan.h_time_constant, kernel)
        if (ftilde <= DENSITY_FLOOR).any():
            offender = int(idx[ftilde <= DENSITY_FLOOR][0])
            raise DegenerateDensity(
                f"density estimate fell below {DENSITY_FLOOR} at sample index {offender}",
                index=offender,
            )
        rss[ModelKind.TIME_CONSTANT] = float(np.sum((y_r - ttilde / ftilde) ** 2))
    except TvregError as exc:
        raise _annotate(exc, ModelKind.TIME_CONSTANT)

    design = _augment(x, intercept)
    try:
        betas, bad = _eval_coefficients(design, y, times, times[idx], plan.b_coefficient, kernel)
        if bad.any():
            where = float(times[idx][bad][0])
            raise SingularGram(f"weighted Gram matrix is singular at t={where:.6g}", t=where)
        fitted = np.einsum("ij,ij->i", design[idx], betas)
        rss[ModelKind.VARYING_COEFFICIENT] = float(np.sum((y_r - fitted) ** 2))
    except TvregError as exc:
        raise _annotate(exc, ModelKind.VARYING_COEFFICIENT)

    try:
        theta = _solve_normal_equations(design, y)
        rss[ModelKind.LINEAR] = float(np.sum((y_r - design[idx] @ theta) ** 2))
    except TvregError as exc:
        raise _annotate(exc, ModelKind.LINEAR)

    return rss


def _choose(scores: dict) -> ModelKind:
    return min(scores, key=lambda kind: (scores[kind], kind.penalty_rank))


def gic(
    data: Dataset,
    region: Region,
    plan: BandwidthPlan,
    tau: float,
    kernel: Kernel1D,
    intercept: bool = True,
) -> SelectionReport:
    """Score all four models with penalty weight ``tau`` and pick the
    minimizer (exact ties go to the simpler model)."""
    d_eff = data.d + (1 if intercept else 0)
    rss = _restricted_rss(data.x, data.y, data.times, region, plan, kernel, intercept)
    rows = {}
    for kind in ModelKind:
        log_term = _log_rss_over_n(rss[kind], data.n)
        df = model_df(kind, plan, d_eff)
        rows[kind] = GicRow(log_term, df, log_term + tau * df)
    chosen = _choose({kind: rows[kind].gic for kind in rows})
    return SelectionReport(rows, chosen, float(tau), plan, data.n, d_eff)


def _fold_predictions(x_tr, y_tr, t_tr, x_te, t_te, plan, kernel, intercept, kind):
    """Held-out predictions for one model fitted on the training part.

    Points the model cannot reach (held-out predictor outside the spanned
    support, or a degenerate local window) fall back to the training mean.
    Returns (sum of squared errors contributions, fallback count) pieces.
    """
    if kind is ModelKind.TIME_VARYING:
        values, ok = predict_time_varying(
            x_tr, y_tr, t_tr, x_te, t_te, plan.b_time_varying, plan.h_time_varying, kernel
        )
    elif kind is ModelKind.TIME_CONSTANT:
        values, ok = predict_time_constant(x_tr, y_tr, x_te, plan.h_time_constant, kernel)
    elif kind is ModelKind.VARYING_COEFFICIENT:
        values, ok = predict_varying_coefficient(
            x_tr, y_tr, t_tr, x_te, t_te, plan.b_coefficient, kernel, intercept
        )
    else:
        theta = _solve_normal_equations(_augment(x_tr, intercept), y_tr)
        values = _augment(x_te, intercept) @ theta
        ok = np.ones(x_te.shape[0], dtype=bool)
    fallback = float(np.mean(y_tr))
    values = np.where(ok, values, fallback)
    return values, int(np.count_nonzero(~ok))


def cross_validation_curve(
    data: Dataset,
    region: Region,
    plan: BandwidthPlan,
    cv: CvPlan,
    kernel: Kernel1D,
    intercept: bool = True,
):
    """Held-out squared error of the criterion-selected model, per penalty
    constant.

    For each fold the four models are fitted once on the remaining data;
    only the model choice (hence the prediction set) depends on c, so the
    curve is piecewise constant in c.  Returns (cv values, per-fold chosen
    models, per-c fallback counts).
    """
    n = data.n
    if n < cv.k_folds:
        raise FoldTooSmall(f"cannot split {n} points into {cv.k_folds} folds")
    folds = np.array_split(np.arange(n), cv.k_folds)
    largest = max(fold.size for fold in folds)
    if n - largest < 20:
        raise FoldTooSmall(
            f"{cv.k_folds} folds leave only {n - largest} training points; need 20"
        )
    times = data.times
    d_eff = data.d + (1 if intercept else 0)
    n_c = len(cv.c_grid)
    totals = np.zeros(n_c)
    fallbacks = np.zeros(n_c, dtype=int)
    chosen_per_fold = []
    for fold in folds:
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        x_tr, y_tr, t_tr = data.x[mask], data.y[mask], times[mask]
        x_te, y_te, t_te = data.x[fold], data.y[fold], times[fold]
        n_tr = x_tr.shape[0]
        plan_k = plan.with_sample_size(n_tr)
        rss = _restricted_rss(x_tr, y_tr, t_tr, region, plan_k, kernel, intercept)
        log_terms = {kind: _log_rss_over_n(rss[kind], n_tr) for kind in ModelKind}
        dfs = {kind: model_df(kind, plan_k, d_eff) for kind in ModelKind}
        sse_cache = {}
        fold_choices = {}
        for ci, c in enumerate(cv.c_grid):
            tau_c = tau_schedule(n_tr, data.d, c)
            scores = {kind: log_terms[kind] + tau_c * dfs[kind] for kind in ModelKind}
            kind = _choose(scores)
            fold_choices[c] = kind
            if kind not in sse_cache:
                values, n_fall = _fold_predictions(
                    x_tr, y_tr, t_tr, x_te, t_te, plan_k, kernel, intercept, kind
                )
                sse_cache[kind] = (float(np.sum((y_te - values) ** 2)), n_fall)
            sse, n_fall = sse_cache[kind]
            totals[ci] += sse
            fallbacks[ci] += n_fall
        chosen_per_fold.append(fold_choices)
    return totals, chosen_per_fold, fallbacks


def select_tau_cv(
    data: Dataset,
    region: Region,
    plan: BandwidthPlan,
    cv: CvPlan,
    kernel: Kernel1D,
    intercept: bool = True,
):
    """Pick the penalty constant by K-fold cross-validation, then score the
    full data with the tuned penalty.  Returns (c_hat, report)."""
    totals, _, fallbacks = cross_validation_curve(data, region, plan, cv, kernel, intercept)
    best = int(np.argmin(totals))
    c_hat = float(cv.c_grid[best])
    tau = tau_schedule(data.n, data.d, c_hat)
    report = gic(data, region, plan, tau, kernel, intercept)
    report.c = c_hat
    report.cv_fallbacks = int(fallbacks[best])
    return c_hat, report
