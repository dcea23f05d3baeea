"""
MMSOUND command-line application - analyze, fit, synth, waveform, convert
"""

import argparse
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .config import config
from .errors import ConfigError, SounderError, SounderIOError, SpecError
from .models import (
    BeamGrid,
    CalibrationProfile,
    LocationMeta,
    LocationReport,
    MultitoneSpec,
    RunConfig,
    Scenario,
    SceneFile,
    SounderConfig,
)
from .pipeline import (
    DELAY_COLUMNS,
    PATHLOSS_COLUMNS,
    LocationAnalysis,
    analyze_capture,
    fit_locations,
    stage,
)
from .processing import capture, delay, mpc, pathloss, synth, waveform
from .reports import (
    read_locations_csv,
    rows_to_table,
    write_csv,
    write_json,
    write_locations_csv,
    write_padp_csv,
    write_pas_csv,
    write_profile_csv,
)
from .utils import format_db, format_delay

logger = logging.getLogger(__name__)
console = Console()

REFERENCE_PAPR_DB = 0.4


def setup_logging(level: str) -> None:
    """Send package diagnostics to stderr through a single RichHandler."""
    pkg_logger = logging.getLogger("mmsound")
    for handler in list(pkg_logger.handlers):
        if isinstance(handler, RichHandler):
            pkg_logger.removeHandler(handler)
    handler = RichHandler(console=Console(stderr=True), show_path=False, log_time_format="[%X]")
    handler.setFormatter(logging.Formatter("%(message)s"))
    pkg_logger.addHandler(handler)
    pkg_logger.setLevel(getattr(logging, level.upper(), logging.INFO))


def _ensure_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise SounderIOError(f"cannot create output directory {path}: {e}") from e
    return path


def build_run_config(args: argparse.Namespace, **overrides: Any) -> RunConfig:
    """Merge environment defaults, an optional JSON config file and flags.

    Raises:
        ConfigError: unreadable config file or invalid settings
    """
    data: Dict[str, Any] = {
        "tail_fraction": config.tail_fraction,
        "dynamic_range_db": config.dynamic_range_db,
        "false_alarm_rate": config.false_alarm_rate,
        "center_freq_hz": config.center_freq_hz,
        "output_dir": config.output_dir,
        "workers": config.workers,
    }
    if getattr(args, "config", None):
        try:
            file_data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {args.config} is not valid JSON: {e}") from e
        if not isinstance(file_data, dict):
            raise ConfigError(f"config file {args.config} must hold a JSON object")
        data.update(file_data)

    flags = {
        "output_dir": getattr(args, "output_dir", None),
        "workers": getattr(args, "workers", None),
        "tail_fraction": getattr(args, "tail_fraction", None),
        "dynamic_range_db": getattr(args, "dynamic_range_db", None),
        "false_alarm_rate": getattr(args, "false_alarm_rate", None),
        "center_freq_hz": getattr(args, "center_freq_hz", None),
        "calibration": getattr(args, "calibration", None),
        "scenarios": getattr(args, "scenario", None),
        "formats": getattr(args, "formats", None),
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    if getattr(args, "inputs", None):
        data["inputs"] = args.inputs
    if getattr(args, "window", False):
        data["window"] = True
    if getattr(args, "no_false_alarm", False):
        data["false_alarm_rate"] = None
    data.update(overrides)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e


# analyze

def _write_location(result: LocationAnalysis, run: RunConfig) -> None:
    out = _ensure_dir(run.output_dir / result.report.location_id)
    if "csv" in run.formats:
        write_profile_csv(out / "pdp_omni.csv", result.omni)
        write_profile_csv(out / "pdp_best.csv", result.best)
        write_pas_csv(out / "pas.csv", result.pas)
        write_padp_csv(out / "padp_rx.csv", result.padp_rx)
        write_padp_csv(out / "padp_tx.csv", result.padp_tx)
        write_csv(out / "mpcs.csv", ("dod_deg", "doa_deg", "delay_ns", "gain_db"), mpc.mpcs_to_rows(result.mpcs))
    if "json" in run.formats:
        best_tx, best_rx = result.best.tx_deg, result.best.rx_deg
        write_json(out / "summary.json", {
            **result.report.model_dump(mode="json"),
            "p_rx": result.p_rx,
            "p_rx_dir": result.p_rx_dir,
            "best_beam_pair_deg": [best_tx, best_rx],
            "noise_sigma2_omni": result.noise.sigma2_omni,
            "num_mpcs": len(result.mpcs),
            "mpcs": mpc.mpcs_to_rows(result.mpcs),
        })


def cmd_analyze(run: RunConfig) -> int:
    """Analyze every capture and write per-location reports."""
    if not run.inputs:
        raise ConfigError("no input captures given")
    cal: Optional[CalibrationProfile] = None
    if run.calibration is not None:
        with stage("calibration"):
            cal = capture.load_calibration(run.calibration)
    _ensure_dir(run.output_dir)

    def process(path: Path) -> LocationReport:
        with stage(f"load {path}"):
            c = capture.load_capture(path)
        location_cal = cal
        if location_cal is None:
            logger.info("%s: no calibration file, using a flat response", c.meta.location_id)
            location_cal = CalibrationProfile.unity(c.config.num_tones)
        result = analyze_capture(c, location_cal, run)
        with stage("report"):
            _write_location(result, run)
        return result.report

    with ThreadPoolExecutor(max_workers=run.workers) as pool:
        reports = list(pool.map(process, run.inputs))

    ids = [r.location_id for r in reports]
    if len(set(ids)) != len(ids):
        logger.warning("duplicate location ids; per-location outputs were overwritten")
    with stage("report"):
        write_locations_csv(run.output_dir / "locations.csv", reports)

    table = Table(title="Locations")
    for col in ("Location", "Scenario", "Distance", "PL", "PL dir", "DS omni", "DS dir"):
        table.add_column(col)
    for r in reports:
        table.add_row(
            r.location_id, r.scenario.value, f"{r.distance_m:g} m", format_db(r.pl_db),
            format_db(r.pl_dir_db), format_delay(r.rms_ds_omni_s), format_delay(r.rms_ds_dir_s),
        )
    console.print(table)
    return 0


# fit

def cmd_fit(run: RunConfig) -> int:
    """Fit path-loss and delay-spread models across locations."""
    if not run.inputs:
        raise ConfigError("no per-location tables given")
    reports: List[LocationReport] = []
    for path in run.inputs:
        with stage(f"load {path}"):
            reports.extend(read_locations_csv(path))

    summary = fit_locations(reports, run.center_freq_hz, run.scenarios)
    out = _ensure_dir(run.output_dir)

    with stage("report"):
        if "json" in run.formats:
            write_json(out / "pathloss.json", {
                "center_freq_hz": run.center_freq_hz,
                "fspl_reference_db": pathloss.fspl_reference(run.center_freq_hz),
                "rows": summary.pathloss_rows,
            })
            write_json(out / "delay_spread.json", {
                "center_freq_hz": run.center_freq_hz,
                "rows": summary.delay_rows,
                "omni_to_directional_ratio": summary.ratios,
            })
        if "csv" in run.formats:
            write_csv(out / "pathloss.csv", PATHLOSS_COLUMNS, summary.pathloss_rows)
            write_csv(out / "delay_spread.csv", DELAY_COLUMNS, summary.delay_rows)
            for key, report in summary.fits.items():
                x, emp, fitted = pathloss.shadowing_cdf(report)
                rows = [{"residual_db": a, "empirical_cdf": b, "gaussian_cdf": c} for a, b, c in zip(x, emp, fitted)]
                write_csv(out / f"shadowing_{key}.csv", ("residual_db", "empirical_cdf", "gaussian_cdf"), rows)
            for key, ds in summary.ds_stats.items():
                x, emp, fitted = delay.log_ds_cdf(ds)
                rows = [{"log10_ds_s": a, "empirical_cdf": b, "gaussian_cdf": c} for a, b, c in zip(x, emp, fitted)]
                write_csv(out / f"log_ds_cdf_{key}.csv", ("log10_ds_s", "empirical_cdf", "gaussian_cdf"), rows)

    pl_table = Table(title="Path-loss models")
    for col in ("Scenario", "Variant", "Model", "n", "P0 (dB)", "σ (dB)", "KS p"):
        pl_table.add_column(col)
    for cells in rows_to_table(summary.pathloss_rows, ("scenario", "variant", "family", "n", "p0_db", "sigma_db", "ks_p")):
        pl_table.add_row(*cells)
    console.print(pl_table)

    ds_table = Table(title="RMS delay spread")
    for col in ("Scenario", "Variant", "Median (ns)", "μ", "σ", "KS p", "3GPP μ"):
        ds_table.add_column(col)
    for cells in rows_to_table(summary.delay_rows, ("scenario", "variant", "median_ns", "mu_log", "sigma_log", "ks_p", "three_gpp_mu")):
        ds_table.add_row(*cells)
    console.print(ds_table)
    return 0


# synth

def _load_scene_file(path: Path) -> SceneFile:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SounderIOError(f"cannot read scene file {path}: {e}") from e
    try:
        return SceneFile.model_validate_json(text)
    except (ValidationError, SounderError) as e:
        raise ConfigError(f"scene file {path} is invalid: {e}") from e


def cmd_synth(scene_path: Path, output: Optional[Path], run: RunConfig) -> int:
    """Render a scene file into a capture plus a planted-truth sidecar."""
    doc = _load_scene_file(scene_path)
    scene = doc.scene
    sounder = doc.sounder or SounderConfig(
        center_freq_hz=run.center_freq_hz,
        link_budget_offset_db=scene.link_budget_offset_db,
    )
    if sounder.link_budget_offset_db != scene.link_budget_offset_db:
        raise SpecError("scene and sounder disagree on link_budget_offset_db")
    grid = doc.grid or BeamGrid.standard()
    scene = scene.model_copy(update={"delay_bin_s": sounder.delay_bin_s})

    with stage("synth"):
        mpcs, pl_db = synth.sample_scene(scene, grid)
        meta = LocationMeta(location_id=doc.location_id, tx_rx_distance_m=scene.distance_m, scenario=doc.scenario)
        c = synth.render_capture(
            mpcs, grid, sounder, doc.pattern, doc.noise_sigma2,
            seed=scene.seed, meta=meta, workers=run.workers,
        )

    if output is None:
        output = _ensure_dir(run.output_dir) / f"{doc.location_id}.mmw"
    else:
        _ensure_dir(output.parent)
    capture.save_capture(c, output)
    write_json(output.with_suffix(".truth.json"), {
        "location_id": doc.location_id,
        "scenario": doc.scenario.value,
        "pl_db": pl_db,
        "scene": scene.model_dump(mode="json"),
        "mpcs": [m.model_dump() for m in mpcs],
    })
    console.print(f"[bold]{doc.location_id}[/bold]: {len(mpcs)} paths, PL {format_db(pl_db)} -> {output}")
    return 0


# waveform

def cmd_waveform(
    num_tones: int,
    spacing_hz: float,
    target_papr_db: float,
    max_iters: int,
    restarts: int,
    seed: Optional[int],
    run: RunConfig,
) -> int:
    """Design a low-PAPR multitone and write its tone table."""
    if num_tones < 1 or spacing_hz <= 0 or max_iters < 0 or restarts < 0:
        raise ConfigError("num_tones >= 1, spacing > 0, max_iters >= 0 and restarts >= 0 required")
    if num_tones == 1:
        spec = MultitoneSpec(num_tones=1, tone_spacing_hz=spacing_hz, phases_rad=[0.0])
        initial = achieved = waveform.papr_db(spec)
        reached = achieved <= target_papr_db
        iterations = 0
    else:
        design = waveform.optimize_phases(
            num_tones, target_papr_db, max_iters,
            tone_spacing_hz=spacing_hz, restarts=restarts, seed=seed,
        )
        spec, achieved, initial = design.spec, design.papr_db, design.initial_papr_db
        reached, iterations = design.reached_target, design.iterations

    out = _ensure_dir(run.output_dir)
    duration = waveform.waveform_duration_s(spec)
    write_csv(out / "waveform.csv", ("tone_index", "amplitude", "phase_rad"), waveform.spec_to_rows(spec))
    write_json(out / "waveform.json", {
        "num_tones": num_tones,
        "tone_spacing_hz": spacing_hz,
        "bandwidth_hz": (num_tones - 1) * spacing_hz,
        "duration_s": duration,
        "initial_papr_db": initial,
        "papr_db": achieved,
        "target_papr_db": target_papr_db,
        "reached_target": reached,
        "iterations": iterations,
        "reference_papr_db": REFERENCE_PAPR_DB,
    })

    table = Table(title="Sounding waveform")
    table.add_column("Parameter")
    table.add_column("Value")
    table.add_row("Tones", str(num_tones))
    table.add_row("Duration", format_delay(duration))
    table.add_row("Newman PAPR", format_db(initial))
    table.add_row("Achieved PAPR", format_db(achieved))
    table.add_row("Target", f"{format_db(target_papr_db)} ({'reached' if reached else 'not reached'})")
    table.add_row("Reference", format_db(REFERENCE_PAPR_DB))
    console.print(table)
    return 0


# convert

def cmd_convert(source: Path, target: Path) -> int:
    """Binary capture to text dump, or text dump to binary capture."""
    with stage("convert"):
        if capture.is_capture_file(source):
            capture.dump_capture_text(capture.load_capture(source), target)
        else:
            capture.save_capture(capture.parse_capture_text(source), target)
    console.print(f"{source} -> {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Command-line interface definition."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", type=Path, help="output directory")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--config", type=Path, help="JSON run configuration file")

    parser = argparse.ArgumentParser(prog="mmsound", description="Millimeter-wave channel sounder toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="analyze captures per location")
    p.add_argument("inputs", nargs="*", type=Path, help="capture files")
    p.add_argument("--calibration", type=Path, help="calibration file (flat response if omitted)")
    p.add_argument("--tail-fraction", type=float)
    p.add_argument("--dynamic-range-db", type=float)
    p.add_argument("--false-alarm-rate", type=float)
    p.add_argument("--no-false-alarm", action="store_true", help="disable the MPC false-alarm threshold")
    p.add_argument("--window", action="store_true", help="Hann window before the delay transform")
    p.add_argument("--formats", nargs="+", choices=["csv", "json"])

    p = sub.add_parser("fit", parents=[common], help="fit models across locations")
    p.add_argument("inputs", nargs="*", type=Path, help="locations.csv files")
    p.add_argument("--center-freq-hz", type=float)
    p.add_argument("--scenario", action="append", choices=[s.value for s in Scenario])
    p.add_argument("--formats", nargs="+", choices=["csv", "json"])

    p = sub.add_parser("synth", parents=[common], help="render a synthetic capture")
    p.add_argument("scene", type=Path, help="scene JSON file")
    p.add_argument("-o", "--output", type=Path, help="capture file to write")

    p = sub.add_parser("waveform", parents=[common], help="design the sounding waveform")
    p.add_argument("--num-tones", type=int, default=801)
    p.add_argument("--spacing-hz", type=float, default=500e3)
    p.add_argument("--target-papr-db", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("convert", parents=[common], help="capture <-> text dump")
    p.add_argument("source", type=Path)
    p.add_argument("target", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level or config.log_level)

    try:
        run = build_run_config(args)
        if args.command == "analyze":
            return cmd_analyze(run)
        if args.command == "fit":
            return cmd_fit(run)
        if args.command == "synth":
            return cmd_synth(args.scene, args.output, run)
        if args.command == "waveform":
            return cmd_waveform(
                args.num_tones, args.spacing_hz, args.target_papr_db,
                args.max_iters, args.restarts, args.seed, run,
            )
        return cmd_convert(args.source, args.target)
    except SounderError as e:
        logger.error("%s", e)
        return e.exit_code
    except ValidationError as e:
        logger.error("invalid input: %s", e)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
