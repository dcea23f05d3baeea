"""Beam-domain delay synthesis, angular spectra and received power."""

import logging
from typing import Tuple

import numpy as np
from scipy import fft
from scipy.signal import get_window

from ..errors import DimensionError, DomainError
from ..models import (
    AngularSpectrum,
    CalibrationProfile,
    DelayProfile,
    MeasurementCapture,
    Padp,
    PadpSide,
    PdpTensor,
    ProfileKind,
    SounderConfig,
)

logger = logging.getLogger(__name__)


def _calibrated_ratio(h: np.ndarray, cal: CalibrationProfile, window: bool) -> np.ndarray:
    if cal.num_tones != h.shape[-1]:
        raise DimensionError(f"calibration has {cal.num_tones} tones, capture has {h.shape[-1]}")
    ratio = h.astype(np.complex128) / cal.h_cal.astype(np.complex128)
    if window:
        ratio = ratio * get_window("hann", h.shape[-1], fftbins=False)
    return ratio


def _delay_power(ratio: np.ndarray) -> np.ndarray:
    # 1/N inverse transform: bin 0 of an all-ones ratio has power 1
    return np.abs(fft.ifft(ratio, axis=-1)) ** 2


def directional_pdps(
    c: MeasurementCapture,
    cal: CalibrationProfile,
    window: bool = False,
) -> PdpTensor:
    """Directional PDPs of every beam pair.

    Args:
        c: Capture H[tx][rx][tone]
        cal: System calibration response
        window: Apply a Hann window across tones before the transform

    Returns:
        PDP tensor [tx][rx][delay]
    """
    power = _delay_power(_calibrated_ratio(c.h, cal, window))
    logger.debug("synthesized %dx%d directional PDPs", *c.grid.shape)
    return PdpTensor(power=power, grid=c.grid, delay_bin_s=c.config.delay_bin_s)


def directional_pdp(
    c: MeasurementCapture,
    cal: CalibrationProfile,
    tx_deg: float,
    rx_deg: float,
    window: bool = False,
) -> DelayProfile:
    """Directional PDP of one beam pair.

    Raises:
        GridError: angle not on the grid
        DimensionError: calibration length differs from the tone count
    """
    i, j = c.grid.tx_index(tx_deg), c.grid.rx_index(rx_deg)
    power = _delay_power(_calibrated_ratio(c.h[i, j], cal, window))
    return DelayProfile(
        power=power,
        delay_bin_s=c.config.delay_bin_s,
        kind=ProfileKind.DIRECTIONAL,
        tx_deg=c.grid.tx_azimuths_deg[i],
        rx_deg=c.grid.rx_azimuths_deg[j],
    )


def angular_power_spectrum(pdps: PdpTensor) -> AngularSpectrum:
    """Total power of each beam pair, summed over delay."""
    return AngularSpectrum(power=pdps.power.sum(axis=2), grid=pdps.grid)


def omni_pdp(pdps: PdpTensor) -> DelayProfile:
    """Per-bin maximum over all beam pairs."""
    return DelayProfile(
        power=pdps.power.max(axis=(0, 1)),
        delay_bin_s=pdps.delay_bin_s,
        kind=ProfileKind.OMNI,
    )


def padp(pdps: PdpTensor, side: PadpSide) -> Padp:
    """Power angular-delay profile of one link end.

    Args:
        pdps: Directional PDP tensor
        side: RX keeps RX angles (max over TX beams), TX the reverse

    Returns:
        PADP [beam][delay]
    """
    if side == PadpSide.RX:
        power, angles = pdps.power.max(axis=0), pdps.grid.rx_azimuths_deg
    else:
        power, angles = pdps.power.max(axis=1), pdps.grid.tx_azimuths_deg
    return Padp(power=power, side=side, angles_deg=angles, delay_bin_s=pdps.delay_bin_s)


def received_power(p: DelayProfile) -> float:
    """Sum of power over all delay bins."""
    return float(p.power.sum())


def best_beam_pair(pas: AngularSpectrum) -> Tuple[float, float]:
    """Beam pair with the largest received power.

    Ties go to the lexicographically smallest (tx, rx) pair.
    """
    i, j = np.unravel_index(int(np.argmax(pas.power)), pas.power.shape)
    return pas.grid.tx_azimuths_deg[i], pas.grid.rx_azimuths_deg[j]


def best_beam_pdp(pdps: PdpTensor) -> DelayProfile:
    """Directional PDP of the strongest beam pair."""
    tx, rx = best_beam_pair(angular_power_spectrum(pdps))
    prof = pdps.profile(tx, rx)
    return prof.model_copy(update={"kind": ProfileKind.BEST_BEAM})


def path_loss_db(p_rx: float, cfg: SounderConfig) -> float:
    """Path loss from received power through the link budget.

    Args:
        p_rx: Received power (linear, relative)
        cfg: Sounder configuration holding link_budget_offset_db

    Returns:
        link_budget_offset_db - 10 log10(p_rx)

    Raises:
        DomainError: p_rx is not positive
    """
    if not p_rx > 0:
        raise DomainError(f"received power must be positive, got {p_rx}")
    return cfg.link_budget_offset_db - 10.0 * float(np.log10(p_rx))
