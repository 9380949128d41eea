"""Time-varying regression estimation and model selection.

Four nested candidate models (fully time-varying kernel regression, a
time-constant kernel regression, a varying-coefficient linear fit and
plain least squares), a penalized selection criterion that chooses among
them, and a reproducible Monte-Carlo study harness.
"""

from .errors import (
    CellFailure,
    DegenerateDensity,
    DegenerateWindow,
    DivergentRecursion,
    EmptyFile,
    FoldTooSmall,
    ParseError,
    SingularGram,
    TvregError,
    ZeroIQR,
    ZeroNoise,
)
from .kernels import Kernel1D, KernelConstants, constants, epanechnikov, product_kernel, uniform
from .locstat import (
    Dataset,
    Design,
    GeneratorSpec,
    ModelKind,
    TrueModel,
    difference_rates,
    gen_regressors_ma,
    generate,
    ma_truncation_length,
    make_design,
    simulate,
    simulate_ar,
    simulate_diffusion,
)
from .select import (
    BandwidthPlan,
    CvPlan,
    DEFAULT_C_GRID,
    GicRow,
    SelectionReport,
    cross_validation_curve,
    default_bandwidths,
    gic,
    model_df,
    select_tau_cv,
    tau_schedule,
)
from .sim import CellRecord, CellResult, StudyGrid, replication_seed, run_cell, run_grid, snr
from .smooth import (
    FitResult,
    Region,
    TemporalWeights,
    default_region,
    eval_coefficient_grid,
    eval_density,
    eval_time_constant_grid,
    eval_time_varying_grid,
    fit_linear,
    fit_time_constant,
    fit_time_varying,
    fit_varying_coefficient,
    local_linear_weights,
)

__version__ = "0.1.0"
