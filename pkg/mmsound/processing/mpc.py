"""Multipath component extraction by 3-D peak detection."""

import logging
import math
from collections import defaultdict
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import linear_sum_assignment

from ..models import (
    BeamGrid,
    CalibrationProfile,
    MeasurementCapture,
    MpcMatch,
    MultipathComponent,
    NoiseEstimate,
    PdpTensor,
)
from ..utils import angle_diff_deg
from .beams import directional_pdps
from .delay import DIRECTIONAL_GATE, estimate_noise_grid, gate_pdps

logger = logging.getLogger(__name__)

SIDELOBE_REJECTION_DB = 10.0
MAINLOBE_ANGLE_STEPS = 2
MAINLOBE_DELAY_BINS = 1
DEFAULT_FALSE_ALARM_RATE = 1e-4

_NEIGHBORHOOD = np.ones((3, 3, 3), dtype=bool)
_NEIGHBORHOOD[1, 1, 1] = False


def _delay_key(delay_s: float) -> int:
    """Delay bin identity at picosecond resolution."""
    return int(round(delay_s * 1e12))


def detect_peaks_3d(pdps: PdpTensor) -> List[MultipathComponent]:
    """Strict local maxima of a gated power tensor.

    The neighborhood is the 26 surrounding cells. The RX axis wraps only on a
    uniform full-circle grid; TX and delay never wrap. Equal neighbors
    disqualify a cell, so plateaus produce no peaks.
    """
    p = pdps.power
    if p.size == 0:
        return []
    # non-separable footprints take a single mode, so RX wrap is padded in by hand
    rx_pad = ((0, 0), (1, 1), (0, 0))
    if pdps.grid.is_full_circle:
        padded = np.pad(p, rx_pad, mode="wrap")
    else:
        padded = np.pad(p, rx_pad, mode="constant", constant_values=-np.inf)
    neighbors = maximum_filter(
        padded,
        footprint=_NEIGHBORHOOD,
        mode="constant",
        cval=-np.inf,
    )[:, 1:-1, :]
    peaks = np.argwhere((p > neighbors) & (p > 0))
    tx, rx = pdps.grid.tx_azimuths_deg, pdps.grid.rx_azimuths_deg
    return [
        MultipathComponent(
            dod_deg=tx[i],
            doa_deg=rx[j],
            delay_s=k * pdps.delay_bin_s,
            gain=float(p[i, j, k]),
        )
        for i, j, k in peaks
    ]


def sidelobe_filter(
    mpcs: Sequence[MultipathComponent],
    rejection_db: float = SIDELOBE_REJECTION_DB,
) -> List[MultipathComponent]:
    """Drop MPCs within rejection_db of the strongest MPC in the same delay bin.

    A component survives only if its gain is strictly above
    max_gain_in_bin * 10^(-rejection_db / 10), evaluated as
    gain * 10^(rejection_db / 10) > max_gain_in_bin; input order is kept.
    """
    strongest: Dict[int, float] = defaultdict(float)
    for m in mpcs:
        key = _delay_key(m.delay_s)
        strongest[key] = max(strongest[key], m.gain)
    factor = 10.0 ** (rejection_db / 10.0)
    return [m for m in mpcs if m.gain * factor > strongest[_delay_key(m.delay_s)]]


def mainlobe_filter(
    mpcs: Sequence[MultipathComponent],
    grid: BeamGrid,
    delay_bin_s: float,
    angle_steps: int = MAINLOBE_ANGLE_STEPS,
    delay_bins: int = MAINLOBE_DELAY_BINS,
) -> List[MultipathComponent]:
    """Keep one peak per beam main lobe.

    Peaks are visited strongest first. A peak is dropped when an already kept
    peak lies within angle_steps on both TX and RX and within delay_bins in
    delay. RX distance wraps on a full-circle grid. Returns survivors in
    descending gain order.
    """
    span_deg = angle_steps * grid.step_deg + 1e-6
    span_s = (delay_bins + 1e-6) * delay_bin_s
    wrap = grid.is_full_circle
    kept: List[MultipathComponent] = []
    for m in sorted(mpcs, key=lambda m: (-m.gain, m.delay_s, m.dod_deg, m.doa_deg)):
        shadowed = False
        for k in kept:
            d_rx = abs(angle_diff_deg(m.doa_deg, k.doa_deg)) if wrap else abs(m.doa_deg - k.doa_deg)
            if (
                abs(m.dod_deg - k.dod_deg) <= span_deg
                and d_rx <= span_deg
                and abs(m.delay_s - k.delay_s) <= span_s
            ):
                shadowed = True
                break
        if not shadowed:
            kept.append(m)
    return kept


def false_alarm_threshold(noise: NoiseEstimate, cells: int, false_alarm_rate: float) -> float:
    """Power an exponential noise cell exceeds with total probability false_alarm_rate."""
    pooled = float(noise.sigma2.mean())
    return pooled * math.log(max(cells, 1) / false_alarm_rate)


def find_mpcs(
    pdps: PdpTensor,
    noise: NoiseEstimate,
    false_alarm_rate: Optional[float] = DEFAULT_FALSE_ALARM_RATE,
    gate_factor: float = DIRECTIONAL_GATE,
) -> List[MultipathComponent]:
    """Gate, detect, threshold and filter MPCs from ungated PDPs.

    Returns:
        MPCs sorted by descending gain
    """
    gated = gate_pdps(pdps, noise, gate_factor)
    mpcs = detect_peaks_3d(gated)
    found = len(mpcs)
    if false_alarm_rate is not None:
        threshold = false_alarm_threshold(noise, pdps.power.size, false_alarm_rate)
        mpcs = [m for m in mpcs if m.gain > threshold]
    mpcs = mainlobe_filter(mpcs, pdps.grid, pdps.delay_bin_s)
    mpcs = sidelobe_filter(mpcs)
    logger.debug("MPCs: %d peaks, %d after thresholds and lobe filters", found, len(mpcs))
    return sorted(mpcs, key=lambda m: (-m.gain, m.delay_s, m.dod_deg, m.doa_deg))


def extract_mpcs(
    c: MeasurementCapture,
    cal: CalibrationProfile,
    tail_fraction: float = 0.1,
    dynamic_range_db: Optional[float] = 60.0,
    false_alarm_rate: Optional[float] = DEFAULT_FALSE_ALARM_RATE,
    window: bool = False,
) -> List[MultipathComponent]:
    """Full extraction chain from a capture.

    Args:
        c: Capture
        cal: Calibration profile
        tail_fraction: Noise tail share
        dynamic_range_db: Noise floor relative to the tensor peak
        false_alarm_rate: Total false-alarm probability; None disables the check
        window: Hann window before the delay transform

    Returns:
        MPCs sorted by descending gain
    """
    pdps = directional_pdps(c, cal, window=window)
    noise = estimate_noise_grid(pdps, tail_fraction, dynamic_range_db)
    return find_mpcs(pdps, noise, false_alarm_rate)


def match_mpcs(
    planted: Sequence[MultipathComponent],
    recovered: Sequence[MultipathComponent],
    step_deg: float,
    delay_bin_s: float,
    max_angle_steps: int = 1,
    max_delay_bins: int = 1,
) -> MpcMatch:
    """Pair recovered MPCs with planted ones by minimum-cost assignment.

    Pairs further apart than the angle or delay tolerance are left unmatched.
    """
    if not planted or not recovered:
        return MpcMatch(
            pairs=(),
            unmatched_planted=tuple(range(len(planted))),
            spurious=tuple(range(len(recovered))),
        )
    big = 1e9
    cost = np.full((len(planted), len(recovered)), big)
    for a, p in enumerate(planted):
        for b, r in enumerate(recovered):
            d_tx = abs(p.dod_deg - r.dod_deg) / step_deg
            d_rx = abs(angle_diff_deg(p.doa_deg, r.doa_deg)) / step_deg
            d_tau = abs(p.delay_s - r.delay_s) / delay_bin_s
            eps = 1e-6
            if d_tx <= max_angle_steps + eps and d_rx <= max_angle_steps + eps and d_tau <= max_delay_bins + eps:
                cost[a, b] = d_tx + d_rx + d_tau
    rows, cols = linear_sum_assignment(cost)
    pairs = tuple((int(a), int(b)) for a, b in zip(rows, cols) if cost[a, b] < big)
    matched_p = {a for a, _ in pairs}
    matched_r = {b for _, b in pairs}
    return MpcMatch(
        pairs=pairs,
        unmatched_planted=tuple(a for a in range(len(planted)) if a not in matched_p),
        spurious=tuple(b for b in range(len(recovered)) if b not in matched_r),
    )


def mpcs_to_rows(mpcs: Sequence[MultipathComponent]) -> List[Dict[str, Any]]:
    """CSV rows: dod_deg, doa_deg, delay_ns, gain_db."""
    return [
        {
            "dod_deg": m.dod_deg,
            "doa_deg": m.doa_deg,
            "delay_ns": m.delay_s * 1e9,
            "gain_db": m.gain_db,
        }
        for m in mpcs
    ]
