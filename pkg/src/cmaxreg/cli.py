"""Command-line front end: estimation runs, sweeps, benchmarks, synthesis, TTC.

Artifacts per run (written under ``output_dir``):

- ``report.csv``      one row per window (estimate/ttc)
- ``metrics.csv``     per-window accuracy rows (sharpness gain always;
                      endpoint errors only when ground truth is supplied)
- ``sweep.csv``       landscape table (sweep)
- ``bench.csv``       runtime table (bench)
- ``manifest.txt``    the fully resolved config; re-running it reproduces
                      every numeric artifact byte-for-byte (bench timings and
                      wall-clock logs excluded by nature)
- ``iwe_<k>_<tag>.pgm`` / ``defmap_<k>.pgm``  image artifacts per window
- PNG companions for the PGM/CSV artifacts when ``figures = true``

Exit codes: 0 success, 1 config error, 2 data error, 3 all windows failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .events import (
    CameraGeometry,
    EventFormatError,
    EventWindow,
    load_events,
    slice_by_count,
    slice_by_duration,
    write_events,
)
from .figures import save_image_figure, save_map_figure, save_sweep_figure
from .gridio import normalize_to_u8, write_pgm
from .iwe import Objective, ObjectiveKind, build_iwe
from .metrics import (
    GroundTruthFlow,
    MetricsReport,
    aee_npe,
    fwl,
    read_flow_text,
    time_to_contact,
    write_flow_text,
)
from .optimizer import CompositeProblem, composite_value, landscape_sweep, solve
from .regularizers import RegKind, RegularizerOptions, rate_map
from .synth import SceneSpec, generate, generate_velocity_stream
from .warps import DOF_BY_KIND, WarpKind, WarpModel, displacement_field

__all__ = [
    "ConfigError",
    "DataError",
    "AllWindowsFailed",
    "RunConfig",
    "main",
]

log = logging.getLogger("cmaxreg")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_ALL_FAILED = 3

COMMANDS = ("estimate", "sweep", "bench", "synth", "ttc")


class ConfigError(ValueError):
    """Bad or inconsistent configuration (exit code 1)."""


class DataError(ValueError):
    """Unusable input data (exit code 2)."""


class AllWindowsFailed(RuntimeError):
    """Every window in an estimation run failed (exit code 3)."""


# ---------------------------------------------------------------------------
# configuration


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    return tuple(float(p) for p in parts)


@dataclass
class RunConfig:
    """Fully resolved options for one command invocation."""

    command: str
    input: str | None = None
    output_dir: str = "out"
    width: int = 0
    height: int = 0
    fx: float | None = None
    fy: float | None = None
    cx: float | None = None
    cy: float | None = None
    model: WarpKind = WarpKind.ZOOM_1DOF
    objective: ObjectiveKind = ObjectiveKind.VARIANCE
    use_polarity: bool = False
    regularizer: RegKind = RegKind.GEOMETRIC
    lam: float | None = None
    tau: float = 0.2
    alpha: float = 1.0
    trim: float = 0.01
    map_stride: int = 1
    time_samples: int = 16
    window_count: int | None = None
    window_seconds: float | None = None
    budget: int = 500
    seed: int = 0
    bounds_lo: tuple[float, ...] | None = None
    bounds_hi: tuple[float, ...] | None = None
    ground_truth: str | None = None
    figures: bool = True
    sweep_axis: int = 0
    sweep_grid: int = 300
    sweep_theta: tuple[float, ...] | None = None
    bench_trials: int = 400
    bench_warmup: int = 10
    bench_events: int = 30000
    theta: tuple[float, ...] | None = None
    n_points: int = 2000
    events_per_point: int = 15
    noise_px: float = 0.5
    duration: float = 1.0
    t_start: float = 0.0
    n_windows: int = 1
    vz_over_z: float | None = None

    def geometry(self) -> CameraGeometry:
        if self.width < 1 or self.height < 1:
            raise ConfigError("width and height must be positive integers")
        fx = 0.8 * self.width if self.fx is None else self.fx
        fy = fx if self.fy is None else self.fy
        cx = self.width / 2.0 if self.cx is None else self.cx
        cy = self.height / 2.0 if self.cy is None else self.cy
        return CameraGeometry(self.width, self.height, fx, fy, cx, cy)

    def reg_options(self) -> RegularizerOptions:
        try:
            return RegularizerOptions(
                tau=self.tau,
                alpha=self.alpha,
                trim=self.trim,
                stride=self.map_stride,
                n_time_samples=self.time_samples,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def bounds(self) -> np.ndarray | None:
        if (self.bounds_lo is None) != (self.bounds_hi is None):
            raise ConfigError("bounds_lo and bounds_hi must be given together")
        if self.bounds_lo is None:
            return None
        dof = DOF_BY_KIND[self.model]
        if len(self.bounds_lo) != dof or len(self.bounds_hi) != dof:
            raise ConfigError(f"bounds need {dof} entries for model {self.model.value}")
        return np.column_stack([self.bounds_lo, self.bounds_hi])


# key -> (parser, serializer); identity serializers are plain repr-style text.
def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_floats(vs) -> str:
    return ", ".join(repr(float(v)) for v in vs)


_SCHEMA: dict[str, tuple] = {
    "command": (str, str),
    "input": (str, str),
    "output_dir": (str, str),
    "width": (int, str),
    "height": (int, str),
    "fx": (float, _fmt_float),
    "fy": (float, _fmt_float),
    "cx": (float, _fmt_float),
    "cy": (float, _fmt_float),
    "model": (WarpKind, lambda v: v.value),
    "objective": (ObjectiveKind, lambda v: v.value),
    "use_polarity": (_parse_bool, lambda v: "true" if v else "false"),
    "regularizer": (RegKind, lambda v: v.value),
    "lam": (float, _fmt_float),
    "tau": (float, _fmt_float),
    "alpha": (float, _fmt_float),
    "trim": (float, _fmt_float),
    "map_stride": (int, str),
    "time_samples": (int, str),
    "window_count": (int, str),
    "window_seconds": (float, _fmt_float),
    "budget": (int, str),
    "seed": (int, str),
    "bounds_lo": (_parse_floats, _fmt_floats),
    "bounds_hi": (_parse_floats, _fmt_floats),
    "ground_truth": (str, str),
    "figures": (_parse_bool, lambda v: "true" if v else "false"),
    "sweep_axis": (int, str),
    "sweep_grid": (int, str),
    "sweep_theta": (_parse_floats, _fmt_floats),
    "bench_trials": (int, str),
    "bench_warmup": (int, str),
    "bench_events": (int, str),
    "theta": (_parse_floats, _fmt_floats),
    "n_points": (int, str),
    "events_per_point": (int, str),
    "noise_px": (float, _fmt_float),
    "duration": (float, _fmt_float),
    "t_start": (float, _fmt_float),
    "n_windows": (int, str),
    "vz_over_z": (float, _fmt_float),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` lines and blanks are skipped."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def resolve_config(command: str, pairs: dict[str, str]) -> RunConfig:
    """Type-check raw pairs against the schema and apply defaults."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = RunConfig(command=command)
    for key, raw in pairs.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            value = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: {exc}") from exc
        if key == "command":
            if value != command:
                raise ConfigError(
                    f"config file is for command {value!r}, invoked as {command!r}"
                )
            continue
        setattr(cfg, key, value)
    if cfg.window_count is not None and cfg.window_seconds is not None:
        raise ConfigError("window_count and window_seconds are mutually exclusive")
    if command == "ttc" and cfg.model is not WarpKind.ZOOM_1DOF:
        raise ConfigError("the ttc command requires the zoom1dof model")
    if command == "bench" and cfg.bench_trials < 1:
        raise ConfigError("bench_trials must be at least 1")
    if cfg.budget < 10 * DOF_BY_KIND[cfg.model]:
        raise ConfigError("budget must be at least 10 evaluations per model DOF")
    if cfg.sweep_grid < 2:
        raise ConfigError("sweep_grid must be at least 2")
    return cfg


def load_config(command: str, path: str | None, overrides: list[str]) -> RunConfig:
    pairs: dict[str, str] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        pairs.update(parse_config_text(text))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        pairs[key.strip()] = value.strip()
    return resolve_config(command, pairs)


# manifest key order is fixed so that files are stable across runs
_MANIFEST_ORDER = list(_SCHEMA.keys())


def write_manifest(path, cfg: RunConfig) -> None:
    """Serialize the resolved config; the file is itself a valid config."""
    lines = []
    for key in _MANIFEST_ORDER:
        value = getattr(cfg, key, None) if key != "command" else cfg.command
        if value is None:
            continue
        _, fmt = _SCHEMA[key]
        lines.append(f"{key} = {fmt(value)}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# shared helpers


def _load_window(cfg: RunConfig) -> EventWindow:
    if not cfg.input:
        raise ConfigError("this command requires an input event file")
    geometry = cfg.geometry()
    try:
        window, report = load_events(cfg.input, geometry)
    except OSError as exc:
        raise DataError(f"cannot read {cfg.input}: {exc}") from exc
    except EventFormatError as exc:
        raise DataError(str(exc)) from exc
    if report.rejected_out_of_bounds:
        log.info("dropped %d out-of-bounds events", report.rejected_out_of_bounds)
    if not report.was_sorted:
        log.info("input was unsorted; sorted by timestamp")
    return window


def _slice_windows(cfg: RunConfig, window: EventWindow) -> list[EventWindow]:
    if cfg.window_seconds is not None:
        return slice_by_duration(window, cfg.window_seconds)
    count = 30000 if cfg.window_count is None else cfg.window_count
    if count < 1:
        raise ConfigError("window_count must be at least 1")
    return slice_by_count(window, count)


def _write_iwe_images(out: Path, k: int, tag: str, window, model, geometry, cfg) -> None:
    iwe = build_iwe(window, model, geometry, Objective(kind=cfg.objective,
                                                       use_polarity=cfg.use_polarity))
    write_pgm(out / f"iwe_{k}_{tag}.pgm", normalize_to_u8(iwe.values))
    if cfg.figures:
        save_image_figure(iwe.values, out / f"iwe_{k}_{tag}.png",
                          title=f"window {k}: {tag}")


_REPORT_FIELDS = ("value", "objective_g", "reg_value", "geometric_reg",
                  "collapsed", "evaluations")


def _report_header(dof: int, with_ttc: bool) -> str:
    cols = ["window", "t_start", "t_end", "n_events", "status"]
    cols += [f"theta_{i}" for i in range(dof)]
    cols += list(_REPORT_FIELDS)
    if with_ttc:
        cols.append("ttc")
    return ",".join(cols)


# ---------------------------------------------------------------------------
# commands


def _run_estimation(cfg: RunConfig, with_ttc: bool) -> int:
    geometry = cfg.geometry()
    stream = _load_window(cfg)
    windows = _slice_windows(cfg, stream)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    gt: GroundTruthFlow | None = None
    if cfg.ground_truth:
        try:
            gt = read_flow_text(cfg.ground_truth)
        except OSError as exc:
            raise DataError(f"cannot read {cfg.ground_truth}: {exc}") from exc
        except ValueError as exc:
            raise DataError(f"ground truth: {exc}") from exc

    dof = DOF_BY_KIND[cfg.model]
    opts = cfg.reg_options()
    report_lines = [_report_header(dof, with_ttc)]
    metrics_lines = ["window," + MetricsReport.csv_header()]
    n_failed = 0

    for k, window in enumerate(windows):
        prefix = [str(k), repr(window.t_first), repr(window.t_last), str(window.n)]
        try:
            problem = CompositeProblem(
                window,
                cfg.model,
                geometry,
                objective=Objective(kind=cfg.objective, use_polarity=cfg.use_polarity),
                reg_kind=cfg.regularizer,
                lam=cfg.lam,
                reg_options=opts,
                bounds=cfg.bounds(),
            )
            rep = solve(problem, budget=cfg.budget, seed=cfg.seed)
        except ValueError as exc:
            log.warning("window %d failed: %s", k, exc)
            n_failed += 1
            blank = [""] * (dof + len(_REPORT_FIELDS) + (1 if with_ttc else 0))
            report_lines.append(",".join(prefix + ["failed"] + blank))
            continue

        model = problem.model(rep.theta_hat)
        row = prefix + ["ok"]
        row += [repr(float(v)) for v in rep.theta_hat]
        row += [
            repr(rep.value),
            repr(rep.objective_g),
            repr(rep.reg_value),
            repr(rep.geometric_reg),
            str(int(rep.collapsed)),
            str(rep.evaluations),
        ]
        ttc_value: float | None = None
        if with_ttc:
            if rep.theta_hat[0] > 0 and window.duration > 0:
                ttc_value = time_to_contact(float(rep.theta_hat[0]), window.duration)
                row.append(repr(ttc_value))
            else:
                row.append("")
        report_lines.append(",".join(row))
        log.info("window %d: theta=%s in %.2fs", k,
                 np.array2string(rep.theta_hat, precision=5), rep.wall_time_s)

        _write_iwe_images(out, k, "identity", window, problem.model(np.zeros(dof)),
                          geometry, cfg)
        _write_iwe_images(out, k, "solved", window, model, geometry, cfg)
        dmap = rate_map(model, geometry, opts)
        write_pgm(out / f"defmap_{k}.pgm", normalize_to_u8(dmap.values))
        if cfg.figures:
            save_map_figure(dmap.values, out / f"defmap_{k}.png",
                            title=f"window {k}: area-rate map")

        metric = MetricsReport(ttc=ttc_value)
        try:
            metric.fwl = fwl(window, model, geometry)
        except ValueError:
            pass
        if gt is not None:
            try:
                # ground truth stores the full-window displacement, so the
                # prediction must be the displacement too, not the velocity
                acc = aee_npe(displacement_field(model, geometry), gt)
            except ValueError as exc:
                raise DataError(f"ground truth mismatch: {exc}") from exc
            metric.aee = acc["aee"]
            metric.npe3 = acc["npe3"]
            metric.npe10 = acc["npe10"]
            metric.npe20 = acc["npe20"]
        metrics_lines.append(f"{k}," + metric.to_csv_row())

    (out / "report.csv").write_text("\n".join(report_lines) + "\n")
    if len(metrics_lines) > 1:
        (out / "metrics.csv").write_text("\n".join(metrics_lines) + "\n")
    write_manifest(out / "manifest.txt", cfg)
    if n_failed == len(windows):
        raise AllWindowsFailed(f"all {len(windows)} windows failed")
    return EXIT_OK


def cmd_estimate(cfg: RunConfig) -> int:
    return _run_estimation(cfg, with_ttc=False)


def cmd_ttc(cfg: RunConfig) -> int:
    return _run_estimation(cfg, with_ttc=True)


def cmd_sweep(cfg: RunConfig) -> int:
    geometry = cfg.geometry()
    window = _load_window(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        problem = CompositeProblem(
            window,
            cfg.model,
            geometry,
            objective=Objective(kind=cfg.objective, use_polarity=cfg.use_polarity),
            reg_kind=cfg.regularizer,
            lam=cfg.lam,
            reg_options=cfg.reg_options(),
            bounds=cfg.bounds(),
        )
        rows = landscape_sweep(problem, axis=cfg.sweep_axis, grid=cfg.sweep_grid,
                               theta_fixed=cfg.sweep_theta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    lines = ["theta,neg_objective,regularizer,composite"]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    if cfg.figures:
        save_sweep_figure(rows, out / "sweep.png",
                          param_label=f"{cfg.model.value} theta[{cfg.sweep_axis}]")
    write_manifest(out / "manifest.txt", cfg)
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    geometry = cfg.geometry()
    stream = _load_window(cfg)
    if stream.n < cfg.bench_events:
        raise DataError(
            f"bench needs {cfg.bench_events} events, input has only {stream.n}"
        )
    window = slice_by_count(stream, cfg.bench_events)[0]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    opts = cfg.reg_options()
    lines = ["objective,regularizer,mean_ms,sd_ms,ratio_to_none"]
    for objective in (ObjectiveKind.VARIANCE, ObjectiveKind.GRADIENT_MAGNITUDE):
        base_mean = None
        for reg in (RegKind.NONE, RegKind.GEOMETRIC, RegKind.DIVERGENCE,
                    RegKind.DEFORMATION, RegKind.DIV_PLUS_DEF):
            problem = CompositeProblem(
                window, cfg.model, geometry,
                objective=Objective(kind=objective, use_polarity=cfg.use_polarity),
                reg_kind=reg, lam=cfg.lam, reg_options=opts, bounds=cfg.bounds(),
            )
            mean_ms, sd_ms = bench_composite(problem, cfg.bench_trials, cfg.bench_warmup)
            if reg is RegKind.NONE:
                base_mean = mean_ms
            ratio = mean_ms / base_mean
            lines.append(
                f"{objective.value},{reg.value},{mean_ms:.6f},{sd_ms:.6f},{ratio:.6f}"
            )
            log.info("bench %s/%s: %.3f ms +- %.3f", objective.value, reg.value,
                     mean_ms, sd_ms)
    (out / "bench.csv").write_text("\n".join(lines) + "\n")
    write_manifest(out / "manifest.txt", cfg)
    return EXIT_OK


def bench_composite(problem: CompositeProblem, trials: int, warmup: int) -> tuple[float, float]:
    """Mean and sd of single composite evaluations, in milliseconds."""
    theta = np.zeros(problem.dof)
    for _ in range(warmup):
        composite_value(problem, theta)
    samples = np.empty(trials)
    for i in range(trials):
        t0 = time.perf_counter()
        composite_value(problem, theta)
        samples[i] = (time.perf_counter() - t0) * 1e3
    return float(samples.mean()), float(samples.std())


def cmd_synth(cfg: RunConfig) -> int:
    geometry = cfg.geometry()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if cfg.vz_over_z is not None:
            if cfg.model is not WarpKind.ZOOM_1DOF:
                raise ConfigError("velocity-mode synthesis requires the zoom1dof model")
            window, gt = generate_velocity_stream(
                cfg.vz_over_z, cfg.duration, cfg.n_windows, geometry,
                seed=cfg.seed, n_points=cfg.n_points,
                events_per_point=cfg.events_per_point, noise_px=cfg.noise_px,
            )
        else:
            if cfg.theta is None:
                raise ConfigError("synth requires theta (or vz_over_z for velocity mode)")
            dof = DOF_BY_KIND[cfg.model]
            if len(cfg.theta) != dof:
                raise ConfigError(f"theta needs {dof} entries for model {cfg.model.value}")
            spec = SceneSpec(
                model=WarpModel(cfg.model, np.asarray(cfg.theta, dtype=float)),
                geometry=geometry,
                n_points=cfg.n_points,
                events_per_point=cfg.events_per_point,
                noise_px=cfg.noise_px,
                seed=cfg.seed,
                t_start=cfg.t_start,
                duration=cfg.duration,
            )
            window, gt = generate(spec)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_events(out / "events.txt", window)
    write_flow_text(out / "flow.txt", gt)
    write_manifest(out / "manifest.txt", cfg)
    log.info("wrote %d events to %s", window.n, out / "events.txt")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

_DISPATCH = {
    "estimate": cmd_estimate,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "synth": cmd_synth,
    "ttc": cmd_ttc,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cmaxreg",
        description="Motion estimation from event streams by sharpness "
        "maximization with a collapse penalty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
        p.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        cfg = load_config(args.command, args.config, args.override)
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AllWindowsFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())
