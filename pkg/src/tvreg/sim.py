"""Monte-Carlo replication harness for the selection study.

Each cell of the study grid repeats: draw a dataset from one benchmark
design, tune the penalty constant by cross-validation, select a model,
and record the choice together with the realization's signal-to-noise
ratio.  Replications carry seeds derived from the cell coordinates, so
results do not depend on scheduling or on the number of workers.
"""

import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CellFailure, TvregError, ZeroNoise
from .kernels import epanechnikov
from .locstat import Dataset, Design, GeneratorSpec, ModelKind, TrueModel, simulate
from .select import CvPlan, select_tau_cv, default_bandwidths
from .smooth import Region

_DESIGN_SEED_CODE = {"A": 1, "B": 2, "C": 3, "D": 4}

FAILURE_BUDGET = 0.05


@dataclass(frozen=True)
class StudyGrid:
    """Which (design, n, phi) cells to run, with how many replications."""

    designs: tuple
    sample_sizes: tuple
    noise_levels: tuple
    replications: int
    base_seed: int = 0
    cv: CvPlan = field(default_factory=CvPlan)
    region: Region = field(
        default_factory=lambda: Region([[-2.0, 2.0]], (0.2, 0.8))
    )

    def __post_init__(self):
        designs = tuple(Design(d) for d in self.designs)
        if any(d not in (Design.A, Design.B, Design.C, Design.D) for d in designs):
            raise ValueError("study designs must come from A-D")
        object.__setattr__(self, "designs", designs)
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "noise_levels", tuple(float(p) for p in self.noise_levels))
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if any(n < 100 for n in self.sample_sizes):
            raise ValueError("study sample sizes must be at least 100")


@dataclass
class CellResult:
    """Selection frequencies and the median signal-to-noise ratio of a cell."""

    proportions: dict
    snr_median: float
    failures: int


@dataclass
class CellRecord:
    n: int
    design: Design
    phi: float
    replications: int
    base_seed: int
    result: CellResult


def snr(data: Dataset, truth: TrueModel) -> float:
    """Signal-to-noise ratio of one realization: the root of the ratio of
    summed squared signal values to summed squared errors."""
    if data.d != 1:
        raise ValueError("snr is defined for scalar-predictor designs")
    signal = np.asarray(truth.m(data.x[:, 0], data.times), dtype=float)
    errors = data.y - signal
    denom = float(np.sum(errors * errors))
    if denom == 0.0:
        raise ZeroNoise("residuals are identically zero")
    return float(np.sqrt(np.sum(signal * signal) / denom))


def replication_seed(base_seed: int, design, n: int, phi: float, rep: int) -> int:
    """Seed for one replication, mixed from the cell coordinates."""
    entropy = [
        int(base_seed),
        _DESIGN_SEED_CODE[Design(design).value],
        int(n),
        int(round(phi * 1_000_000)),
        int(rep),
    ]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _replicate(task):
    """Run one replication; returns ('ok', label, snr) or ('err', message)."""
    design, n, phi, rep, base_seed, cv, region, intercept = task
    try:
        spec = GeneratorSpec(
            design=Design(design),
            n=n,
            phi=phi,
            seed=replication_seed(base_seed, design, n, phi, rep),
        )
        data, truth = simulate(spec)
        ratio = snr(data, truth)
        plan = default_bandwidths(data)
        _, report = select_tau_cv(data, region, plan, cv, epanechnikov(), intercept)
        return ("ok", report.chosen.label, ratio)
    except TvregError as exc:
        return ("err", f"{type(exc).__name__}: {exc}")


def resolve_workers(workers=None) -> int:
    """Worker count: explicit argument, else TVREG_THREADS, else all cores."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("TVREG_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _run_tasks(tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [_replicate(task) for task in tasks]
    with multiprocessing.Pool(processes=workers) as pool:
        chunk = max(1, len(tasks) // (workers * 8))
        return pool.map(_replicate, tasks, chunksize=chunk)


def _aggregate(outcomes, design, n, phi, replications, base_seed):
    failures = sum(1 for item in outcomes if item[0] == "err")
    if failures > FAILURE_BUDGET * replications:
        messages = {item[1] for item in outcomes if item[0] == "err"}
        raise CellFailure(
            f"cell (design={Design(design).value}, n={n}, phi={phi}): "
            f"{failures}/{replications} replications failed: {sorted(messages)[:3]}"
        )
    labels = [item[1] for item in outcomes if item[0] == "ok"]
    ratios = np.array([item[2] for item in outcomes if item[0] == "ok"])
    successes = len(labels)
    proportions = {
        kind.label: labels.count(kind.label) / successes for kind in ModelKind
    }
    return CellRecord(
        n=int(n),
        design=Design(design),
        phi=float(phi),
        replications=int(replications),
        base_seed=int(base_seed),
        result=CellResult(proportions, float(np.median(ratios)), failures),
    )


def run_cell(
    design,
    n: int,
    phi: float,
    replications: int,
    base_seed: int,
    cv: CvPlan,
    region: Region,
    intercept: bool = True,
    workers: int = 1,
) -> CellResult:
    """Run every replication of one cell and aggregate the outcomes."""
    tasks = [
        (Design(design).value, int(n), float(phi), rep, int(base_seed), cv, region, intercept)
        for rep in range(int(replications))
    ]
    outcomes = _run_tasks(tasks, resolve_workers(workers))
    return _aggregate(outcomes, design, n, phi, replications, base_seed).result


def run_grid(grid: StudyGrid, intercept: bool = True, workers=None) -> list:
    """Run every cell of the grid; rows come back ordered by (n, design, phi).

    The flattened replication list is scheduled across workers, but each
    replication owns a derived seed and aggregation follows task order,
    so the output is identical for any worker count.
    """
    workers = resolve_workers(workers)
    cells = [
        (n, design, phi)
        for n in grid.sample_sizes
        for design in grid.designs
        for phi in grid.noise_levels
    ]
    tasks = []
    spans = []
    for n, design, phi in cells:
        start = len(tasks)
        tasks.extend(
            (design.value, n, phi, rep, grid.base_seed, grid.cv, grid.region, intercept)
            for rep in range(grid.replications)
        )
        spans.append((start, len(tasks)))
    outcomes = _run_tasks(tasks, workers)
    records = []
    for (n, design, phi), (start, stop) in zip(cells, spans):
        records.append(
            _aggregate(outcomes[start:stop], design, n, phi, grid.replications, grid.base_seed)
        )
    records.sort(key=lambda r: (r.n, r.design.value, r.phi))
    return records
