"""Kernel estimators for the four nested candidate models.

Model I smooths jointly in space and rescaled time with local-linear
temporal weights, model II is the classical kernel regression that
ignores time, model III fits linear coefficients that drift with time,
and model IV is plain least squares.  Residual sums of squares are
always restricted to a compact evaluation region so boundary and
sparse-density zones stay out of the comparison.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateDensity, DegenerateWindow, SingularGram
from .kernels import Kernel1D
from .locstat import Dataset, ModelKind

DENSITY_FLOOR = 1e-12
WINDOW_FLOOR = 1e-14
GRAM_RIDGE = 1e-10
GRAM_EIG_RATIO = 1e-10

_CHUNK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class Region:
    """Compact evaluation region: a box for the predictors and a closed
    time interval strictly inside (0, 1)."""

    x_box: np.ndarray
    t_interval: tuple

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.x_box, dtype=float))
        if box.shape[1] != 2:
            raise ValueError("x_box must have one (lo, hi) pair per coordinate")
        if not np.all(box[:, 0] < box[:, 1]):
            raise ValueError("each x_box interval needs lo < hi")
        lo, hi = float(self.t_interval[0]), float(self.t_interval[1])
        if not (0.0 < lo < hi < 1.0):
            raise ValueError("t_interval must satisfy 0 < lo < hi < 1")
        object.__setattr__(self, "x_box", box)
        object.__setattr__(self, "t_interval", (lo, hi))

    @property
    def d(self) -> int:
        return self.x_box.shape[0]

    def mask_x(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lo = self.x_box[:, 0]
        hi = self.x_box[:, 1]
        return np.all((x >= lo) & (x <= hi), axis=1)

    def mask_t(self, times: np.ndarray) -> np.ndarray:
        lo, hi = self.t_interval
        return (times >= lo) & (times <= hi)

    def restricted_indices(self, x: np.ndarray, times: np.ndarray) -> np.ndarray:
        return np.nonzero(self.mask_t(times) & self.mask_x(x))[0]


def default_region(x: np.ndarray, t_interval=(0.2, 0.8), coverage: float = 0.95) -> Region:
    """Region from per-coordinate quantiles so roughly ``coverage`` of the
    predictor values fall inside the box."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    tail = 100.0 * (1.0 - coverage) / 2.0
    lo = np.percentile(x, tail, axis=0)
    hi = np.percentile(x, 100.0 - tail, axis=0)
    return Region(np.column_stack([lo, hi]), t_interval)


@dataclass
class TemporalWeights:
    """Local-linear weights in time for one evaluation point."""

    w: np.ndarray
    t: float
    b: float


@dataclass
class FitResult:
    """Fitted values on the restricted index set and the restricted RSS."""

    kind: ModelKind
    fitted: np.ndarray
    rss: float
    n_used: int
    bandwidths: dict
    indices: np.ndarray
    coefficients: Optional[np.ndarray] = None


def local_linear_weights(n: int, t: float, b: float, kernel: Kernel1D) -> TemporalWeights:
    """Weights over the grid i/n that reproduce constants and linear
    trends in time exactly (their first two moments are 1 and 0)."""
    if n < 2:
        raise ValueError("need at least two design points")
    if not (b > 0):
        raise ValueError("bandwidth must be positive")
    times = np.arange(1, n + 1) / n
    kt = kernel((times - t) / b)
    if np.count_nonzero(kt > 0) < 2:
        raise DegenerateWindow(
            f"fewer than 2 design points receive kernel mass at t={t}, b={b}"
        )
    dt = t - times
    s0 = float(np.sum(kt))
    s1 = float(np.sum(dt * kt))
    s2 = float(np.sum(dt * dt * kt))
    det = s2 * s0 - s1 * s1
    if det <= WINDOW_FLOOR * s0 * s2:
        raise DegenerateWindow(f"temporal design is degenerate at t={t}, b={b}")
    w = kt * (s2 - dt * s1) / det
    return TemporalWeights(w, float(t), float(b))


def _augment(x: np.ndarray, intercept: bool) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if not intercept:
        return x
    return np.column_stack([np.ones(x.shape[0]), x])


def _temporal_windows(train_times, t_eval, b, kernel):
    """Gathered kernel windows around each evaluation time.

    Returns (idx, kt, dt, s0, s1, s2, det, degenerate); entries outside a
    window carry zero kernel weight, so downstream sums can ignore them.
    """
    lo = np.searchsorted(train_times, t_eval - b, side="left")
    hi = np.searchsorted(train_times, t_eval + b, side="right")
    width = max(1, int((hi - lo).max()))
    idx = lo[:, None] + np.arange(width)
    valid = idx < hi[:, None]
    idx = np.where(valid, idx, 0)
    tg = train_times[idx]
    kt = kernel((tg - t_eval[:, None]) / b)
    kt = np.where(valid, kt, 0.0)
    dt = np.where(valid, t_eval[:, None] - tg, 0.0)
    s0 = kt.sum(axis=1)
    s1 = (dt * kt).sum(axis=1)
    s2 = (dt * dt * kt).sum(axis=1)
    det = s2 * s0 - s1 * s1
    degenerate = ((kt > 0).sum(axis=1) < 2) | (det <= WINDOW_FLOOR * s0 * s2)
    return idx, kt, dt, s0, s1, s2, det, degenerate


def _spatial_product(x_gather, x_eval, h, kernel):
    """Product kernel h^{-d} prod_j k((u_j - x_j)/h) on gathered windows."""
    d = x_gather.shape[-1]
    if d == 1:
        return kernel((x_eval[:, None, 0] - x_gather[..., 0]) / h) / h
    diff = (x_eval[:, None, :] - x_gather) / h
    return np.prod(kernel(diff), axis=2) / h**d


def _eval_time_varying(x_tr, y_tr, t_tr, x_ev, t_ev, b, h, kernel):
    """Joint space-time kernel sums at arbitrary evaluation points.

    Returns (density, weighted response sum, degenerate-window mask).
    """
    m = t_ev.shape[0]
    fhat = np.empty(m)
    that = np.empty(m)
    bad = np.zeros(m, dtype=bool)
    if m == 0:
        return fhat, that, bad
    window = max(1, int(np.ceil(2.0 * b * len(t_tr))) + 2)
    block = max(1, _CHUNK_ELEMENTS // window)
    for start in range(0, m, block):
        sl = slice(start, min(start + block, m))
        idx, kt, dt, s0, s1, s2, det, deg = _temporal_windows(t_tr, t_ev[sl], b, kernel)
        safe_det = np.where(deg, 1.0, det)
        w = kt * (s2[:, None] - dt * s1[:, None]) / safe_det[:, None]
        ks = _spatial_product(x_tr[idx], x_ev[sl], h, kernel)
        ksw = ks * w
        fhat[sl] = ksw.sum(axis=1)
        that[sl] = (ksw * y_tr[idx]).sum(axis=1)
        bad[sl] = deg
    return fhat, that, bad


def _eval_time_constant(x_tr, y_tr, x_ev, h, kernel):
    """Plain kernel sums (1/(n h^d)) sum_i K((u - x_i)/h) and the response
    analogue, at arbitrary evaluation points.

    Training points are sorted on the first coordinate so each evaluation
    only touches the slice where that coordinate is within one bandwidth
    (a necessary condition for nonzero product-kernel mass).
    """
    n, d = x_tr.shape
    m = x_ev.shape[0]
    ftilde = np.empty(m)
    ttilde = np.empty(m)
    if m == 0:
        return ftilde, ttilde
    order = np.argsort(x_tr[:, 0], kind="stable")
    xs = x_tr[order]
    ys = y_tr[order]
    first = xs[:, 0]
    lo = np.searchsorted(first, x_ev[:, 0] - h, side="left")
    hi = np.searchsorted(first, x_ev[:, 0] + h, side="right")
    width = max(1, int((hi - lo).max()))
    scale = n * h**d
    block = max(1, _CHUNK_ELEMENTS // width)
    for start in range(0, m, block):
        sl = slice(start, min(start + block, m))
        idx = lo[sl, None] + np.arange(width)
        valid = idx < hi[sl, None]
        idx = np.where(valid, idx, 0)
        if d == 1:
            ks = kernel((x_ev[sl, 0][:, None] - first[idx]) / h)
        else:
            ks = np.prod(kernel((x_ev[sl, None, :] - xs[idx]) / h), axis=2)
        ks = np.where(valid, ks, 0.0)
        ftilde[sl] = ks.sum(axis=1) / scale
        ttilde[sl] = (ks * ys[idx]).sum(axis=1) / scale
    return ftilde, ttilde


def _eval_coefficients(x_tr_aug, y_tr, t_tr, t_ev, b, kernel):
    """Kernel-weighted least squares coefficients at each evaluation time.

    Uses the weight K((t_j - t)/b)/b on every sample term; a relative
    ridge keeps nearly collinear windows solvable, and windows that stay
    ill-conditioned are flagged instead of solved.
    """
    m = t_ev.shape[0]
    dd = x_tr_aug.shape[1]
    betas = np.full((m, dd), np.nan)
    bad = np.zeros(m, dtype=bool)
    if m == 0:
        return betas, bad
    window = max(1, int(np.ceil(2.0 * b * len(t_tr))) + 2)
    block = max(1, _CHUNK_ELEMENTS // (window * dd))
    eye = np.eye(dd)
    for start in range(0, m, block):
        sl = slice(start, min(start + block, m))
        lo = np.searchsorted(t_tr, t_ev[sl] - b, side="left")
        hi = np.searchsorted(t_tr, t_ev[sl] + b, side="right")
        width = max(1, int((hi - lo).max()))
        idx = lo[:, None] + np.arange(width)
        valid = idx < hi[:, None]
        idx = np.where(valid, idx, 0)
        tg = t_tr[idx]
        kb = kernel((tg - t_ev[sl, None]) / b) / b
        kb = np.where(valid, kb, 0.0)
        xg = x_tr_aug[idx]
        yg = y_tr[idx]
        mb = xg.shape[0]
        gram = np.empty((mb, dd, dd))
        rhs = np.empty((mb, dd))
        for p in range(dd):
            kxp = kb * xg[:, :, p]
            for q in range(p, dd):
                s = (kxp * xg[:, :, q]).sum(axis=1)
                gram[:, p, q] = s
                gram[:, q, p] = s
            rhs[:, p] = (kxp * yg).sum(axis=1)
        trace = np.trace(gram, axis1=1, axis2=2) / dd
        gram = gram + (GRAM_RIDGE * trace)[:, None, None] * eye
        eigvals = np.linalg.eigvalsh(gram)
        deg = (eigvals[:, -1] <= 0.0) | (eigvals[:, 0] < GRAM_EIG_RATIO * eigvals[:, -1])
        good = ~deg
        if good.any():
            betas[sl][good] = np.linalg.solve(gram[good], rhs[good][..., None])[..., 0]
        bad[sl] = deg
    return betas, bad


def fit_time_varying(
    data: Dataset, region: Region, b: float, h: float, kernel: Kernel1D
) -> FitResult:
    """Fit model I at the restricted sample points and collect the RSS.

    Every fitted value keeps observation i in its own kernel sum; the
    complexity penalty of the selection criterion accounts for that.
    """
    times = data.times
    idx = region.restricted_indices(data.x, times)
    fhat, that, badwin = _eval_time_varying(
        data.x, data.y, times, data.x[idx], times[idx], b, h, kernel
    )
    if badwin.any():
        where = times[idx][badwin][0]
        raise DegenerateWindow(f"temporal window degenerate at t={where:.6g} (b={b})")
    low = fhat <= DENSITY_FLOOR
    if low.any():
        offender = int(idx[low][0])
        raise DegenerateDensity(
            f"density estimate fell below {DENSITY_FLOOR} at sample index {offender}",
            index=offender,
        )
    fitted = that / fhat
    rss = float(np.sum((data.y[idx] - fitted) ** 2))
    return FitResult(ModelKind.TIME_VARYING, fitted, rss, idx.size, {"b": b, "h": h}, idx)


def fit_time_constant(data: Dataset, region: Region, h: float, kernel: Kernel1D) -> FitResult:
    """Fit model II (kernel regression without temporal weighting)."""
    times = data.times
    idx = region.restricted_indices(data.x, times)
    ftilde, ttilde = _eval_time_constant(data.x, data.y, data.x[idx], h, kernel)
    low = ftilde <= DENSITY_FLOOR
    if low.any():
        offender = int(idx[low][0])
        raise DegenerateDensity(
            f"density estimate fell below {DENSITY_FLOOR} at sample index {offender}",
            index=offender,
        )
    fitted = ttilde / ftilde
    rss = float(np.sum((data.y[idx] - fitted) ** 2))
    return FitResult(ModelKind.TIME_CONSTANT, fitted, rss, idx.size, {"h": h}, idx)


def fit_varying_coefficient(
    data: Dataset, region: Region, b: float, kernel: Kernel1D, intercept: bool = True
) -> FitResult:
    """Fit model III: coefficients re-estimated at each restricted time."""
    times = data.times
    idx = region.restricted_indices(data.x, times)
    design = _augment(data.x, intercept)
    betas, bad = _eval_coefficients(design, data.y, times, times[idx], b, kernel)
    if bad.any():
        where = float(times[idx][bad][0])
        raise SingularGram(
            f"weighted Gram matrix is singular at t={where:.6g} (b={b})", t=where
        )
    fitted = np.einsum("ij,ij->i", design[idx], betas)
    rss = float(np.sum((data.y[idx] - fitted) ** 2))
    return FitResult(
        ModelKind.VARYING_COEFFICIENT, fitted, rss, idx.size, {"b": b}, idx, betas
    )


def fit_linear(data: Dataset, region: Region, intercept: bool = True) -> FitResult:
    """Fit model IV by least squares on the full sample; only the RSS is
    restricted to the evaluation region."""
    times = data.times
    idx = region.restricted_indices(data.x, times)
    design = _augment(data.x, intercept)
    theta = _solve_normal_equations(design, data.y)
    fitted = design[idx] @ theta
    rss = float(np.sum((data.y[idx] - fitted) ** 2))
    return FitResult(ModelKind.LINEAR, fitted, rss, idx.size, {}, idx, theta)


def _solve_normal_equations(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    n, dd = design.shape
    gram = design.T @ design / n
    rhs = design.T @ y / n
    trace = np.trace(gram) / dd
    gram = gram + GRAM_RIDGE * trace * np.eye(dd)
    eigvals = np.linalg.eigvalsh(gram)
    if eigvals[-1] <= 0.0 or eigvals[0] < GRAM_EIG_RATIO * eigvals[-1]:
        raise SingularGram("Gram matrix of the linear fit is singular")
    return np.linalg.solve(gram, rhs)


def eval_density(
    data: Dataset, u, t: float, b: float, h: float, kernel: Kernel1D
) -> float:
    """Joint space-time density estimate at a single point (u, t)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))[None, :]
    fhat, _, bad = _eval_time_varying(
        data.x, data.y, data.times, u, np.asarray([t], dtype=float), b, h, kernel
    )
    if bad[0]:
        raise DegenerateWindow(f"temporal window degenerate at t={t} (b={b})")
    return float(fhat[0])


def predict_time_varying(x_tr, y_tr, t_tr, x_new, t_new, b, h, kernel):
    """Model-I predictions at new points; the mask flags points outside the
    training support, where no honest prediction exists.

    Outside-support means a vanishing local density, or a time beyond the
    range of training times (there the local-linear temporal weights would
    extrapolate instead of interpolate).
    """
    fhat, that, badwin = _eval_time_varying(x_tr, y_tr, t_tr, x_new, t_new, b, h, kernel)
    inside_t = (t_new >= t_tr[0]) & (t_new <= t_tr[-1])
    ok = (~badwin) & (fhat > DENSITY_FLOOR) & inside_t
    values = np.where(ok, that / np.where(ok, fhat, 1.0), np.nan)
    return values, ok


def predict_time_constant(x_tr, y_tr, x_new, h, kernel):
    ftilde, ttilde = _eval_time_constant(x_tr, y_tr, x_new, h, kernel)
    ok = ftilde > DENSITY_FLOOR
    values = np.where(ok, ttilde / np.where(ok, ftilde, 1.0), np.nan)
    return values, ok


def predict_varying_coefficient(x_tr, y_tr, t_tr, x_new, t_new, b, kernel, intercept=True):
    design_tr = _augment(x_tr, intercept)
    design_new = _augment(x_new, intercept)
    betas, bad = _eval_coefficients(design_tr, y_tr, t_tr, t_new, b, kernel)
    ok = ~bad
    values = np.where(ok, np.einsum("ij,ij->i", design_new, np.where(ok[:, None], betas, 0.0)), np.nan)
    return values, ok


def eval_time_varying_grid(data, u_points, t_points, b, h, kernel):
    """Model-I regression surface on a lattice; NaN marks cells where the
    estimate is undefined (thin window or vanishing density)."""
    u_points = np.atleast_2d(np.asarray(u_points, dtype=float))
    t_points = np.asarray(t_points, dtype=float)
    g, k = u_points.shape[0], t_points.shape[0]
    x_ev = np.repeat(u_points, k, axis=0)
    t_ev = np.tile(t_points, g)
    order = np.argsort(t_ev, kind="stable")
    fhat = np.empty(g * k)
    that = np.empty(g * k)
    bad = np.empty(g * k, dtype=bool)
    fhat[order], that[order], bad[order] = _eval_time_varying(
        data.x, data.y, data.times, x_ev[order], t_ev[order], b, h, kernel
    )
    ok = (~bad) & (fhat > DENSITY_FLOOR)
    values = np.where(ok, that / np.where(ok, fhat, 1.0), np.nan)
    return values.reshape(g, k)


def eval_time_constant_grid(data, u_points, h, kernel):
    """Model-II regression curve on a predictor lattice; NaN where undefined."""
    u_points = np.atleast_2d(np.asarray(u_points, dtype=float))
    values, ok = predict_time_constant(data.x, data.y, u_points, h, kernel)
    return np.where(ok, values, np.nan)


def eval_coefficient_grid(data, t_points, b, kernel, intercept=True):
    """Model-III coefficient curves on a time lattice; NaN rows where the
    weighted Gram matrix is degenerate."""
    t_points = np.asarray(t_points, dtype=float)
    design = _augment(data.x, intercept)
    betas, bad = _eval_coefficients(design, data.y, data.times, t_points, b, kernel)
    betas[bad] = np.nan
    return betas
