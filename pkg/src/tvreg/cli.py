"""Command-line interface: dataset ingestion, simulation, the selection
study, model selection reports, and lattice exports for plotting.

Exit codes are stable for scripting: 0 success, 2 parse error,
3 numerical failure, 4 configuration error.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import figures
from .errors import EmptyFile, ParseError, TvregError
from .kernels import epanechnikov
from .locstat import (
    Dataset,
    Design,
    GeneratorSpec,
    KIND_BY_LABEL,
    ModelKind,
    difference_rates,
    generate,
)
from .select import (
    BandwidthPlan,
    CvPlan,
    DEFAULT_C_GRID,
    default_bandwidths,
    select_tau_cv,
)
from .sim import StudyGrid, run_grid
from .smooth import (
    Region,
    default_region,
    eval_coefficient_grid,
    eval_time_constant_grid,
    eval_time_varying_grid,
    fit_linear,
)


class ConfigError(Exception):
    """Bad flags, paths or flag combinations."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(value) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(value, float):
        if value != value:  # NaN becomes a missing field
            return ""
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _parse_interval(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"expected lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"expected numeric lo:hi, got {text!r}")
    return lo, hi


def _parse_boxes(text: str) -> np.ndarray:
    return np.array([_parse_interval(part) for part in text.split(",")])


def _parse_floats(text: str):
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}")


def _parse_ints(text: str):
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def _parse_designs(text: str):
    out = []
    for part in text.split(","):
        name = part.strip().upper()
        try:
            out.append(Design(name))
        except ValueError:
            raise ConfigError(f"unknown design {part!r}")
    return tuple(out)


def ingest_csv(path):
    """Read either a (date, value) level series or a (y, x1..xd) dataset.

    Returns ("series", values) or ("dataset", Dataset); the header row
    decides the mode.  Empty and unparseable fields are rejected with
    their 1-based line and column.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file {path} does not exist")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader]
    rows = [row for row in rows if row]
    if not rows:
        raise EmptyFile(f"{path} holds no rows")
    header = [cell.strip().lower() for cell in rows[0]]
    if header == ["date", "value"]:
        values = []
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) < 2 or row[1].strip() == "":
                raise ParseError(line_no, 2, "empty value field")
            try:
                values.append(float(row[1]))
            except ValueError:
                raise ParseError(line_no, 2, f"not a number: {row[1]!r}")
        if not values:
            raise EmptyFile(f"{path} holds a header but no data rows")
        return "series", np.asarray(values)
    if header and header[0] == "y" and header[1:] == [f"x{j}" for j in range(1, len(header))]:
        if len(header) < 2:
            raise ParseError(1, 1, "dataset header needs y and at least x1")
        width = len(header)
        y = []
        x = []
        for line_no, row in enumerate(rows[1:], start=2):
            if len(row) != width:
                raise ParseError(line_no, min(len(row) + 1, width), "wrong field count")
            parsed = []
            for col, cell in enumerate(row, start=1):
                if cell.strip() == "":
                    raise ParseError(line_no, col, "empty value field")
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ParseError(line_no, col, f"not a number: {cell!r}")
            y.append(parsed[0])
            x.append(parsed[1:])
        if not y:
            raise EmptyFile(f"{path} holds a header but no data rows")
        return "dataset", Dataset(np.asarray(y), np.asarray(x))
    raise ParseError(1, 1, "header must be 'date,value' or 'y,x1[,x2...]'")


def _load_dataset(path) -> Dataset:
    mode, payload = ingest_csv(path)
    if mode == "series":
        return difference_rates(payload)
    return payload


def _write_csv(path, header, rows):
    def _dump(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])

    if path is None:
        _dump(sys.stdout)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            _dump(fh)


def _jsonable(obj):
    if isinstance(obj, float):
        return None if obj != obj else obj
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _write_json(path, payload):
    text = json.dumps(_jsonable(payload), indent=2)
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _plot_path(args) -> Path:
    if not args.output:
        raise ConfigError("--plot needs --output to name the figure file")
    return Path(args.output).with_suffix(".png")


def _region_from_args(args, data=None) -> Region:
    t_interval = _parse_interval(args.region_t) if args.region_t else (0.2, 0.8)
    if args.region_x:
        return Region(_parse_boxes(args.region_x), t_interval)
    if data is None:
        return Region([[-2.0, 2.0]], t_interval)
    return default_region(data.x, t_interval)


def _plan_from_args(args, data) -> BandwidthPlan:
    plan = default_bandwidths(data)
    overrides = {}
    if args.c_b_i is not None:
        overrides["c_b_time_varying"] = args.c_b_i
    if args.c_h_i is not None:
        overrides["c_h_time_varying"] = args.c_h_i
    if args.c_h_ii is not None:
        overrides["c_h_time_constant"] = args.c_h_ii
    if args.c_b_iii is not None:
        overrides["c_b_coefficient"] = args.c_b_iii
    if overrides:
        from dataclasses import replace

        plan = replace(plan, **overrides)
    return plan


def _cv_from_args(args) -> CvPlan:
    c_grid = _parse_floats(args.c_grid) if args.c_grid else DEFAULT_C_GRID
    return CvPlan(k_folds=args.cv_folds, c_grid=c_grid)


def _plan_payload(plan: BandwidthPlan) -> dict:
    return {
        "n": plan.n,
        "d": plan.d,
        "iqr": plan.iqr,
        "c_b_I": plan.c_b_time_varying,
        "c_h_I": plan.c_h_time_varying,
        "c_h_II": plan.c_h_time_constant,
        "c_b_III": plan.c_b_coefficient,
        "b_I": plan.b_time_varying,
        "h_I": plan.h_time_varying,
        "h_II": plan.h_time_constant,
        "b_III": plan.b_coefficient,
    }


def cmd_simulate(args) -> int:
    designs = _parse_designs(args.designs) if args.designs else ()
    if len(designs) != 1:
        raise ConfigError("simulate draws exactly one design; pass --designs with one value")
    sizes = _parse_ints(args.sizes) if args.sizes else ()
    if len(sizes) != 1:
        raise ConfigError("simulate needs exactly one --sizes value")
    noises = _parse_floats(args.noise) if args.noise else (1.0,)
    if len(noises) != 1:
        raise ConfigError("simulate needs exactly one --noise value")
    design = designs[0]
    spec = GeneratorSpec(design=design, n=sizes[0], phi=noises[0], seed=args.seed)
    if design is Design.DIFFUSION:
        from .locstat import simulate_diffusion

        levels, _, _ = simulate_diffusion(spec.n, spec.phi, spec.seed)
        if args.format == "json":
            _write_json(args.output, {"design": design.value, "seed": args.seed, "value": levels})
        else:
            rows = [(day, level) for day, level in enumerate(levels, start=1)]
            _write_csv(args.output, ["date", "value"], rows)
        return 0
    data, _ = generate(spec)
    if args.format == "json":
        _write_json(
            args.output,
            {"design": design.value, "seed": args.seed, "y": data.y, "x": data.x},
        )
    else:
        header = ["y"] + [f"x{j}" for j in range(1, data.d + 1)]
        rows = [tuple(row) for row in np.column_stack([data.y, data.x])]
        _write_csv(args.output, header, rows)
    return 0


def cmd_study(args) -> int:
    if args.full_scale:
        sizes = _parse_ints(args.sizes) if args.sizes else (250, 500, 1000, 2000)
        noises = _parse_floats(args.noise) if args.noise else (1.0, 2.0, 3.0)
        replications = args.replications if args.replications else 1000
    else:
        sizes = _parse_ints(args.sizes) if args.sizes else (250, 500, 1000)
        noises = _parse_floats(args.noise) if args.noise else (1.0, 2.0)
        replications = args.replications if args.replications else 200
    designs = _parse_designs(args.designs) if args.designs else tuple("ABCD")
    grid = StudyGrid(
        designs=designs,
        sample_sizes=sizes,
        noise_levels=noises,
        replications=replications,
        base_seed=args.seed,
        cv=_cv_from_args(args),
        region=_region_from_args(args),
    )
    records = run_grid(grid, intercept=args.intercept == "on")
    header = [
        "n",
        "design",
        "phi",
        "replications",
        "base_seed",
        "failures",
        "snr_median",
        "prop_I",
        "prop_II",
        "prop_III",
        "prop_IV",
    ]
    rows = [
        (
            r.n,
            r.design.value.lower(),
            r.phi,
            r.replications,
            r.base_seed,
            r.result.failures,
            r.result.snr_median,
            r.result.proportions["I"],
            r.result.proportions["II"],
            r.result.proportions["III"],
            r.result.proportions["IV"],
        )
        for r in records
    ]
    if args.format == "json":
        _write_json(args.output, [dict(zip(header, row)) for row in rows])
    else:
        _write_csv(args.output, header, rows)
    if args.plot:
        figures.save_study_figure(records, _plot_path(args))
    return 0


def cmd_select(args) -> int:
    if not args.input:
        raise ConfigError("select needs --input")
    data = _load_dataset(args.input)
    region = _region_from_args(args, data)
    plan = _plan_from_args(args, data)
    cv = _cv_from_args(args)
    c_hat, report = select_tau_cv(
        data, region, plan, cv, epanechnikov(), intercept=args.intercept == "on"
    )
    order = [ModelKind.TIME_VARYING, ModelKind.TIME_CONSTANT, ModelKind.VARYING_COEFFICIENT, ModelKind.LINEAR]
    rows = [
        (
            kind.label,
            report.rows[kind].log_rss_over_n,
            report.rows[kind].df,
            report.rows[kind].gic,
            1 if kind is report.chosen else 0,
        )
        for kind in order
    ]
    if args.format == "json":
        _write_json(
            args.output,
            {
                "rows": {
                    kind.label: {
                        "log_rss_over_n": report.rows[kind].log_rss_over_n,
                        "df": report.rows[kind].df,
                        "gic": report.rows[kind].gic,
                    }
                    for kind in order
                },
                "chosen": report.chosen.label,
                "tau": report.tau,
                "c": c_hat,
                "cv_fallbacks": report.cv_fallbacks,
                "n": report.n,
                "d_eff": report.d_eff,
                "bandwidths": _plan_payload(plan),
            },
        )
    else:
        _write_csv(args.output, ["model", "log_rss_over_n", "df", "gic", "chosen"], rows)
    if args.plot:
        figures.save_selection_figure(report, _plot_path(args))
    return 0


def cmd_fit(args) -> int:
    if not args.input:
        raise ConfigError("fit needs --input")
    if not args.model:
        raise ConfigError("fit needs --model (I, II, III or IV)")
    label = args.model.strip().upper()
    if label not in KIND_BY_LABEL:
        raise ConfigError(f"unknown model {args.model!r}")
    kind = KIND_BY_LABEL[label]
    data = _load_dataset(args.input)
    region = _region_from_args(args, data)
    plan = _plan_from_args(args, data)
    intercept = args.intercept == "on"
    kernel = epanechnikov()
    t_lo, t_hi = region.t_interval
    t_points = np.linspace(t_lo, t_hi, args.grid_t)
    axes = [np.linspace(lo, hi, args.grid_x) for lo, hi in region.x_box]
    mesh = np.meshgrid(*axes, indexing="ij")
    u_points = np.column_stack([m.ravel() for m in mesh])
    x_names = [f"x{j}" for j in range(1, data.d + 1)]
    if kind is ModelKind.TIME_VARYING:
        values = eval_time_varying_grid(
            data, u_points, t_points, plan.b_time_varying, plan.h_time_varying, kernel
        )
        header = x_names + ["t", "mhat"]
        rows = [
            tuple(u_points[g]) + (t_points[k], values[g, k])
            for g in range(u_points.shape[0])
            for k in range(t_points.shape[0])
        ]
        payload = {"model": "I", "u": u_points[:, 0], "t": t_points, "values": values}
    elif kind is ModelKind.TIME_CONSTANT:
        curve = eval_time_constant_grid(data, u_points, plan.h_time_constant, kernel)
        header = x_names + ["muhat"]
        rows = [tuple(u_points[g]) + (curve[g],) for g in range(u_points.shape[0])]
        payload = {"model": "II", "u": u_points[:, 0], "values": curve}
    elif kind is ModelKind.VARYING_COEFFICIENT:
        betas = eval_coefficient_grid(data, t_points, plan.b_coefficient, kernel, intercept)
        columns = (["intercept"] if intercept else []) + x_names
        header = ["t"] + [f"beta_{name}" for name in columns]
        rows = [(t_points[k],) + tuple(betas[k]) for k in range(t_points.shape[0])]
        payload = {"model": "III", "t": t_points, "values": betas, "columns": columns}
    else:
        fit = fit_linear(data, region, intercept)
        columns = (["intercept"] if intercept else []) + x_names
        header = [f"theta_{name}" for name in columns]
        rows = [tuple(fit.coefficients)]
        payload = {"model": "IV", "values": fit.coefficients, "columns": columns}
    if args.format == "json":
        _write_json(args.output, payload)
    else:
        _write_csv(args.output, header, rows)
    if args.plot:
        figures.save_fit_figure(payload, _plot_path(args))
    return 0


def cmd_bandwidths(args) -> int:
    if not args.input:
        raise ConfigError("bandwidths needs --input")
    data = _load_dataset(args.input)
    plan = _plan_from_args(args, data)
    payload = _plan_payload(plan)
    if args.format == "json":
        _write_json(args.output, payload)
    else:
        rows = [(k, v) for k, v in payload.items() if k != "iqr"]
        rows += [(f"iqr_{j + 1}", plan.iqr[j]) for j in range(plan.d)]
        _write_csv(args.output, ["quantity", "value"], rows)
    return 0


def _add_common(parser):
    parser.add_argument("--input", help="input CSV path")
    parser.add_argument("--output", help="output file path (default: stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--region-x", help="predictor box lo:hi[,lo:hi...]")
    parser.add_argument("--region-t", help="time interval lo:hi inside (0,1)")
    parser.add_argument("--cv-folds", type=int, default=10)
    parser.add_argument("--c-grid", help="penalty constants v1,v2,...")
    parser.add_argument("--replications", type=int, default=None)
    parser.add_argument("--designs", help="designs a,b,c,d (also ar, diffusion for simulate)")
    parser.add_argument("--sizes", help="sample sizes n1,n2,...")
    parser.add_argument("--noise", help="noise levels phi1,phi2,...")
    parser.add_argument("--intercept", choices=["on", "off"], default="on")
    parser.add_argument("--full-scale", action="store_true")
    parser.add_argument("--plot", action="store_true", help="render a PNG next to --output")
    parser.add_argument("--c-b-i", type=float, default=None, help="override temporal constant of model I")
    parser.add_argument("--c-h-i", type=float, default=None, help="override spatial constant of model I")
    parser.add_argument("--c-h-ii", type=float, default=None, help="override spatial constant of model II")
    parser.add_argument("--c-b-iii", type=float, default=None, help="override temporal constant of model III")


def build_parser() -> _Parser:
    parser = _Parser(prog="tvreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "simulate": cmd_simulate,
        "study": cmd_study,
        "select": cmd_select,
        "fit": cmd_fit,
        "bandwidths": cmd_bandwidths,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name)
        _add_common(p)
        if name == "fit":
            p.add_argument("--model", help="candidate model: I, II, III or IV")
            p.add_argument("--grid-x", type=int, default=25)
            p.add_argument("--grid-t", type=int, default=25)
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"tvreg: configuration error: {exc}", file=sys.stderr)
        return 4
    try:
        return args.handler(args)
    except (ParseError, EmptyFile) as exc:
        print(f"tvreg: parse error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, FileNotFoundError) as exc:
        print(f"tvreg: configuration error: {exc}", file=sys.stderr)
        return 4
    except (TvregError, ValueError) as exc:
        print(f"tvreg: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
