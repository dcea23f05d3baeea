"""Per-location analysis chain and cross-location model fitting."""

import logging
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import (
    DegenerateError,
    InsufficientDataError,
    NoSignalError,
    SounderError,
    StageError,
)
from .models import (
    AngularSpectrum,
    CalibrationProfile,
    DelayProfile,
    DelaySpreadStats,
    FitReport,
    LinkCondition,
    LocationReport,
    MeasurementCapture,
    ModelFamily,
    MultipathComponent,
    NoiseEstimate,
    Padp,
    PadpSide,
    PdpTensor,
    RunConfig,
    Scenario,
)
from .processing import beams, delay, mpc, pathloss

logger = logging.getLogger(__name__)

VARIANTS = ("omni", "directional")
SCENARIO_CONDITION = {
    Scenario.STREET28: LinkCondition.LOS,
    Scenario.NLOS: LinkCondition.NLOS,
}

PATHLOSS_COLUMNS = ("family", "scenario", "variant", "n", "p0_db", "sigma_db", "ks_p", "count", "skipped")
DELAY_COLUMNS = (
    "scenario", "variant", "count", "median_ns", "mu_log", "sigma_log", "ks_p",
    "three_gpp_condition", "three_gpp_mu", "fraction_5_10ns", "skipped",
)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Name the pipeline stage in any toolkit error raised inside it."""
    try:
        yield
    except StageError:
        raise
    except SounderError as e:
        raise StageError(name, e) from e


class LocationAnalysis(BaseModel):
    """Everything the analysis chain derives from one capture."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    report: LocationReport
    pdps: PdpTensor
    gated: PdpTensor
    noise: NoiseEstimate
    pas: AngularSpectrum
    omni: DelayProfile
    best: DelayProfile
    padp_rx: Padp
    padp_tx: Padp
    mpcs: List[MultipathComponent]
    p_rx: float
    p_rx_dir: float


def analyze_capture(
    c: MeasurementCapture,
    cal: CalibrationProfile,
    run: Optional[RunConfig] = None,
) -> LocationAnalysis:
    """Run the full chain on one location.

    Directional PDPs are gated per beam pair, the omni PDP and best-beam PDP
    are built from the gated tensor, and the omni delay spread uses the
    2 sigma^2 support rule on top.

    Raises:
        StageError: naming the failing stage
    """
    run = run or RunConfig()
    loc = c.meta.location_id

    with stage("beam-processing"):
        pdps = beams.directional_pdps(c, cal, window=run.window)
    with stage("noise-estimation"):
        noise = delay.estimate_noise_grid(pdps, run.tail_fraction, run.dynamic_range_db)
    with stage("gating"):
        gated = delay.gate_pdps(pdps, noise, run.directional_gate)
    with stage("beam-processing"):
        pas = beams.angular_power_spectrum(gated)
        omni = beams.omni_pdp(gated)
        best = beams.best_beam_pdp(gated)
        padp_rx = beams.padp(gated, PadpSide.RX)
        padp_tx = beams.padp(gated, PadpSide.TX)

    with stage("path-loss"):
        p_rx = beams.received_power(omni)
        p_rx_dir = beams.received_power(best)
        if p_rx <= 0 or p_rx_dir <= 0:
            raise NoSignalError(f"{loc}: no power above the noise gate")
        pl = beams.path_loss_db(p_rx, c.config)
        pl_dir = beams.path_loss_db(p_rx_dir, c.config)

    with stage("delay-spread"):
        support = delay.gated_delay_support(omni, noise.sigma2_omni, run.omni_gate)
        ds_omni = delay.rms_delay_spread(omni, support)
        ds_dir = delay.rms_delay_spread(best, np.flatnonzero(best.power > 0))

    with stage("mpc-extraction"):
        mpcs = mpc.find_mpcs(pdps, noise, run.false_alarm_rate, run.directional_gate)

    report = LocationReport(
        location_id=loc,
        scenario=c.meta.scenario,
        distance_m=c.meta.tx_rx_distance_m,
        pl_db=pl,
        pl_dir_db=pl_dir,
        rms_ds_omni_s=ds_omni,
        rms_ds_dir_s=ds_dir,
    )
    logger.info(
        "%s: PL %.2f dB (dir %.2f dB), DS omni %.2f ns, dir %.2f ns, %d MPCs",
        loc, pl, pl_dir, ds_omni * 1e9, ds_dir * 1e9, len(mpcs),
    )
    return LocationAnalysis(
        report=report, pdps=pdps, gated=gated, noise=noise, pas=pas, omni=omni, best=best,
        padp_rx=padp_rx, padp_tx=padp_tx, mpcs=mpcs, p_rx=p_rx, p_rx_dir=p_rx_dir,
    )


class FitSummary(BaseModel):
    """Cross-location model fits mirroring the path-loss and delay-spread tables."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    pathloss_rows: List[Dict[str, Any]] = Field(default_factory=list)
    delay_rows: List[Dict[str, Any]] = Field(default_factory=list)
    fits: Dict[str, FitReport] = Field(default_factory=dict)
    ds_stats: Dict[str, DelaySpreadStats] = Field(default_factory=dict)
    ratios: Dict[str, Optional[float]] = Field(default_factory=dict)


def _skipped_pathloss(family: ModelFamily, scenario: Scenario, variant: str, count: int, reason: str):
    row = {col: None for col in PATHLOSS_COLUMNS}
    row.update(family=family.value, scenario=scenario.value, variant=variant, count=count, skipped=reason)
    return row


def _skipped_delay(scenario: Scenario, variant: str, count: int, reason: str, f_ghz: float):
    row = {col: None for col in DELAY_COLUMNS}
    condition = SCENARIO_CONDITION[scenario]
    row.update(
        scenario=scenario.value, variant=variant, count=count, skipped=reason,
        three_gpp_condition=condition.value, three_gpp_mu=delay.three_gpp_mu(f_ghz, condition),
    )
    return row


def _samples(reports: Sequence[LocationReport], variant: str):
    if variant == "omni":
        return [(r.distance_m, r.pl_db) for r in reports], [r.rms_ds_omni_s for r in reports]
    return [(r.distance_m, r.pl_dir_db) for r in reports], [r.rms_ds_dir_s for r in reports]


def fit_locations(
    reports: Sequence[LocationReport],
    center_freq_hz: float = 27.85e9,
    scenarios: Optional[Sequence[Scenario]] = None,
) -> FitSummary:
    """Fit CI/ABG path loss and log-normal delay spread per scenario and variant.

    Scenarios with fewer than two locations, and fits that fail for lack of
    data or degenerate geometry, are reported as skipped rows.
    """
    wanted = set(scenarios) if scenarios is not None else set(Scenario)
    f_ghz = center_freq_hz / 1e9
    summary = FitSummary()

    for scenario in Scenario:
        subset = [r for r in reports if r.scenario == scenario]
        if scenario not in wanted:
            reason = "not requested"
        elif len(subset) < 2:
            reason = f"fewer than 2 locations ({len(subset)})"
        else:
            reason = None

        for variant in VARIANTS:
            samples, ds_values = _samples(subset, variant)
            for family in ModelFamily:
                if reason:
                    summary.pathloss_rows.append(_skipped_pathloss(family, scenario, variant, len(subset), reason))
                    continue
                try:
                    if family == ModelFamily.CI:
                        report = pathloss.fit_ci(samples, center_freq_hz)
                    else:
                        report = pathloss.fit_abg(samples)
                except (InsufficientDataError, DegenerateError) as e:
                    logger.warning("%s %s %s fit skipped: %s", scenario.value, variant, family.value, e)
                    summary.pathloss_rows.append(_skipped_pathloss(family, scenario, variant, len(subset), str(e)))
                    continue
                summary.fits[f"{scenario.value}_{variant}_{family.value}"] = report
                summary.pathloss_rows.append(pathloss.report_row(report, scenario.value, variant))

            if reason:
                summary.delay_rows.append(_skipped_delay(scenario, variant, len(subset), reason, f_ghz))
                continue
            positive = [v for v in ds_values if v > 0]
            if len(positive) < len(ds_values):
                logger.warning(
                    "%s %s: %d zero delay spreads left out of the log-normal fit",
                    scenario.value, variant, len(ds_values) - len(positive),
                )
            try:
                ds = delay.fit_log_ds(positive)
            except InsufficientDataError as e:
                logger.warning("%s %s delay-spread fit skipped: %s", scenario.value, variant, e)
                summary.delay_rows.append(_skipped_delay(scenario, variant, len(positive), str(e), f_ghz))
                continue
            summary.ds_stats[f"{scenario.value}_{variant}"] = ds
            condition = SCENARIO_CONDITION[scenario]
            summary.delay_rows.append({
                "scenario": scenario.value,
                "variant": variant,
                "count": ds.count,
                "median_ns": ds.median_s * 1e9,
                "mu_log": ds.mu_log,
                "sigma_log": ds.sigma_log,
                "ks_p": ds.ks_p,
                "three_gpp_condition": condition.value,
                "three_gpp_mu": delay.three_gpp_mu(f_ghz, condition),
                "fraction_5_10ns": delay.fraction_within(ds.values_s, 5e-9, 10e-9),
                "skipped": None,
            })

        omni = summary.ds_stats.get(f"{scenario.value}_omni")
        directional = summary.ds_stats.get(f"{scenario.value}_directional")
        if omni is not None and directional is not None:
            try:
                summary.ratios[scenario.value] = delay.delay_spread_ratio(omni.values_s, directional.values_s)
            except DegenerateError as e:
                logger.warning("%s delay-spread ratio skipped: %s", scenario.value, e)
                summary.ratios[scenario.value] = None

    return summary
