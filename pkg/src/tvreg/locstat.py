"""Synthetic data generation for locally stationary regression problems.

Regressors follow a moving-average process whose coefficients drift with
rescaled time, so that any short stretch of the series looks stationary
while the whole series does not.  On top of that sit four benchmark
regression designs (one per candidate model class), a time-varying
autoregression, and a discretized short-rate diffusion.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import DivergentRecursion, TvregError


class ModelKind(Enum):
    """The four nested candidate model classes, labelled I-IV."""

    TIME_VARYING = "I"
    TIME_CONSTANT = "II"
    VARYING_COEFFICIENT = "III"
    LINEAR = "IV"

    @property
    def label(self) -> str:
        return self.value

    @property
    def penalty_rank(self) -> int:
        """Position in the simplest-first order IV, III, II, I (ties prefer low rank)."""
        return _PENALTY_RANK[self]


_PENALTY_RANK = {
    ModelKind.LINEAR: 0,
    ModelKind.VARYING_COEFFICIENT: 1,
    ModelKind.TIME_CONSTANT: 2,
    ModelKind.TIME_VARYING: 3,
}

KIND_BY_LABEL = {k.value: k for k in ModelKind}


class Design(Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    AR = "AR"
    DIFFUSION = "DIFFUSION"


@dataclass(eq=False)
class Dataset:
    """Responses ``y`` and predictors ``x`` observed on the grid i/n."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        self.x = x
        if self.y.ndim != 1:
            raise ValueError("y must be one-dimensional")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError("y and x must have the same number of rows")
        if not np.all(np.isfinite(self.y)) or not np.all(np.isfinite(self.x)):
            raise ValueError("dataset contains NaN or Inf entries")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def times(self) -> np.ndarray:
        """Rescaled observation times i/n for i = 1..n."""
        n = self.n
        return np.arange(1, n + 1) / n


@dataclass(frozen=True)
class TrueModel:
    """The generating regression function, noise scale and model class."""

    m: Callable
    sigma: Callable
    kind: ModelKind


@dataclass(frozen=True)
class GeneratorSpec:
    """Which synthetic process to draw, at what size, noise level and seed."""

    design: Design
    n: int
    phi: float = 1.0
    seed: int = 0
    ma_truncation_eps: float = 1e-8

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("sample size must be at least 10")
        if not self.phi > 0:
            raise ValueError("noise level phi must be positive")
        if not 0.0 < self.ma_truncation_eps <= 1e-6:
            raise ValueError("ma_truncation_eps must lie in (0, 1e-6]")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def ma_truncation_length(eps: float) -> int:
    """Smallest L with (1/4)^L < eps; 1/4 bounds the MA coefficient (t-1/2)^2."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    length = max(1, math.ceil(math.log(eps) / math.log(0.25)))
    while 0.25 ** length >= eps:
        length += 1
    while length > 1 and 0.25 ** (length - 1) < eps:
        length -= 1
    return length


def _rng(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def gen_regressors_ma(n: int, seed, eps: float = 1e-8) -> np.ndarray:
    """Draw the moving-average regressor series x_i, i = 1..n.

    x_i sums standard-normal innovations with weights a(i/n)^l where
    a(t) = (t - 1/2)^2, truncated once the weight bound (1/4)^L drops
    below ``eps``.  Innovations with index below one are drawn as a
    backward extension of the same stream, so tightening ``eps`` only
    appends older terms and never re-randomizes the shared ones.
    """
    if n < 10:
        raise ValueError("sample size must be at least 10")
    length = ma_truncation_length(eps)
    rng = _rng(seed)
    main = rng.standard_normal(n)
    back = rng.standard_normal(length)
    # innovations[k] holds the innovation with index k - length + 1
    innovations = np.concatenate([back[::-1], main])
    times = np.arange(1, n + 1) / n
    a = (times - 0.5) ** 2
    coeff = a[:, None] ** np.arange(length + 1)
    windows = np.lib.stride_tricks.sliding_window_view(innovations, length + 1)
    return np.einsum("il,il->i", coeff, windows[:, ::-1])


def make_design(design: Design, phi: float = 1.0) -> TrueModel:
    """The four benchmark regression designs, one per candidate model class."""
    design = Design(design)
    if design is Design.A:
        return TrueModel(
            m=lambda x, t: 2.5 * np.sin(2 * np.pi * t) * np.cos(np.pi * x),
            sigma=lambda x, t: phi * np.abs(t * x) / 2.0,
            kind=ModelKind.TIME_VARYING,
        )
    if design is Design.B:
        return TrueModel(
            m=lambda x, t: np.exp(x),
            sigma=lambda x, t: phi * t * np.exp(x / 3.0),
            kind=ModelKind.TIME_CONSTANT,
        )
    if design is Design.C:
        return TrueModel(
            m=lambda x, t: 5.0 * t + 4.0 * np.cos(2 * np.pi * t) * x,
            sigma=lambda x, t: phi * np.exp(t * x / 2.0),
            kind=ModelKind.VARYING_COEFFICIENT,
        )
    if design is Design.D:
        return TrueModel(
            m=lambda x, t: 2.0 + 3.0 * x,
            sigma=lambda x, t: phi * np.abs(x / 3.0 + t),
            kind=ModelKind.LINEAR,
        )
    raise ValueError(f"no closed-form design for {design}")


def simulate(spec: GeneratorSpec) -> tuple[Dataset, TrueModel]:
    """Draw one realization of a benchmark design.

    The regressor and noise streams come from disjoint substreams of the
    seed, so the same seed always reproduces the same dataset bit for bit
    and the regressors do not depend on how much noise is consumed.
    """
    design = Design(spec.design)
    if design not in (Design.A, Design.B, Design.C, Design.D):
        raise ValueError("simulate() draws the closed-form designs A-D only")
    xi_seed, eta_seed = np.random.SeedSequence(int(spec.seed)).spawn(2)
    x = gen_regressors_ma(spec.n, xi_seed, spec.ma_truncation_eps)
    truth = make_design(design, spec.phi)
    times = np.arange(1, spec.n + 1) / spec.n
    eta = np.random.default_rng(eta_seed).standard_normal(spec.n)
    y = truth.m(x, times) + truth.sigma(x, times) * eta
    return Dataset(y, x), truth


def simulate_ar(
    n: int,
    m: Callable,
    sigma: Callable,
    d: int = 1,
    seed=0,
    burn_in: int = 200,
) -> Dataset:
    """Run the time-varying autoregression y_i = m(x_i, i/n) + sigma(x_i, i/n) eta_i
    with x_i collecting the previous d responses.

    Initial values come from running the recursion frozen at t = 0 for
    ``burn_in`` steps, which forgets the zero start geometrically fast.
    Contraction of (m, sigma) is the caller's responsibility; the run
    aborts once |y_i| exceeds 1e12.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if d < 1:
        raise ValueError("d must be positive")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    def _scalar(value):
        return np.asarray(value, dtype=float).item()

    rng = _rng(seed)
    state = np.zeros(d)
    for _ in range(burn_in):
        value = _scalar(m(state, 0.0)) + _scalar(sigma(state, 0.0)) * rng.standard_normal()
        state = np.concatenate([[value], state[:-1]])
    xs = np.empty((n, d))
    ys = np.empty(n)
    for i in range(1, n + 1):
        t = i / n
        xs[i - 1] = state
        value = _scalar(m(state, t)) + _scalar(sigma(state, t)) * rng.standard_normal()
        if abs(value) > 1e12:
            raise DivergentRecursion(
                f"|y_{i}| = {abs(value):.3e} exceeds 1e12; the recursion diverges"
            )
        ys[i - 1] = value
        state = np.concatenate([[value], state[:-1]])
    return Dataset(ys, xs)


def difference_rates(rates) -> Dataset:
    """Turn a level series r into the regression pairs x_i = r_i, y_i = r_{i+1} - r_i."""
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 1:
        raise ValueError("rates must be a one-dimensional series")
    bad = ~np.isfinite(rates)
    if bad.any():
        first = int(np.argmax(bad))
        raise TvregError(f"non-finite rate at index {first}")
    if rates.shape[0] < 11:
        raise TvregError("need at least 11 rate observations")
    return Dataset(np.diff(rates), rates[:-1])


def simulate_diffusion(
    n: int, phi: float = 1.0, seed=0, start: float = 5.0
) -> tuple[np.ndarray, Dataset, TrueModel]:
    """Simulate a discretized short-rate diffusion with a drifting linear drift.

    The daily increment is m(r, t) + sigma(r, t) eta with
    m(r, t) = (1 + t)((5 - 2t) - r) / 250 and a constant volatility of
    0.8 phi per year, so the drift is linear in the level with
    time-varying coefficients.  Returns the level series of length n + 1
    together with the differenced dataset and the generating model.
    """
    if n < 10:
        raise ValueError("sample size must be at least 10")
    if not phi > 0:
        raise ValueError("noise level phi must be positive")
    delta = 1.0 / 250.0

    def drift(x, t):
        return delta * (1.0 + t) * ((5.0 - 2.0 * t) - x)

    def vol(x, t):
        return phi * 0.8 * math.sqrt(delta) * np.ones_like(np.asarray(x, dtype=float))

    rng = _rng(seed)
    eta = rng.standard_normal(n)
    levels = np.empty(n + 1)
    levels[0] = start
    times = np.arange(1, n + 1) / n
    for i in range(n):
        step = drift(levels[i], times[i]) + phi * 0.8 * math.sqrt(delta) * eta[i]
        levels[i + 1] = levels[i] + step
    return levels, difference_rates(levels), TrueModel(drift, vol, ModelKind.VARYING_COEFFICIENT)


def generate(spec: GeneratorSpec) -> tuple[Dataset, TrueModel]:
    """Dispatch a GeneratorSpec to the matching generator."""
    design = Design(spec.design)
    if design in (Design.A, Design.B, Design.C, Design.D):
        return simulate(spec)
    if design is Design.AR:
        coeff = lambda x, t: (0.2 + 0.3 * t) * x
        noise = lambda x, t: spec.phi * np.ones_like(np.asarray(x, dtype=float))
        data = simulate_ar(spec.n, coeff, noise, d=1, seed=spec.seed)
        return data, TrueModel(coeff, noise, ModelKind.VARYING_COEFFICIENT)
    if design is Design.DIFFUSION:
        _, data, truth = simulate_diffusion(spec.n, spec.phi, spec.seed)
        return data, truth
    raise ValueError(f"unknown design {spec.design!r}")
