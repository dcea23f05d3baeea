"""Noise estimation, noise gating and RMS delay-spread statistics."""

import logging
import math
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ..errors import (
    DegenerateError,
    DimensionError,
    DomainError,
    InsufficientDataError,
    NoSignalError,
)
from ..models import (
    DelayProfile,
    DelaySpreadStats,
    LinkCondition,
    NoiseEstimate,
    NoiseMethod,
    PdpTensor,
)
from .pathloss import gaussian_ks_test

logger = logging.getLogger(__name__)

MIN_NOISE_BINS = 10
DIRECTIONAL_GATE = 4.0
OMNI_GATE = 2.0


def _tail_bins(num_bins: int, tail_fraction: float) -> int:
    if not 0.0 < tail_fraction <= 0.5:
        raise DomainError(f"tail_fraction must be in (0, 0.5], got {tail_fraction}")
    if num_bins < MIN_NOISE_BINS:
        raise InsufficientDataError(f"noise estimate needs at least {MIN_NOISE_BINS} bins, got {num_bins}")
    return max(1, math.ceil(round(tail_fraction * num_bins, 9)))


def estimate_noise(p: DelayProfile, tail_fraction: float = 0.1) -> float:
    """Mean power of the final delay bins of an ungated profile.

    Args:
        p: Delay profile
        tail_fraction: Share of bins, counted from the end, treated as noise

    Returns:
        Noise power (linear)

    Raises:
        InsufficientDataError: fewer than 10 bins
        DegenerateError: the tail is exactly zero
    """
    k = _tail_bins(p.num_bins, tail_fraction)
    sigma2 = float(p.power[-k:].mean())
    if sigma2 <= 0.0:
        raise DegenerateError("noise floor is exactly zero")
    return sigma2


def estimate_noise_grid(
    pdps: PdpTensor,
    tail_fraction: float = 0.1,
    dynamic_range_db: Optional[float] = 60.0,
) -> NoiseEstimate:
    """Per-pair tail noise, floored at the sounder's dynamic range.

    Each pair's estimate is at least peak * 10^(-dynamic_range_db / 10),
    where peak is the largest bin of the whole tensor. The omni noise is the
    largest per-pair value.

    Raises:
        DegenerateError: all-zero tensor, or a zero estimate with no floor
    """
    k = _tail_bins(pdps.num_bins, tail_fraction)
    sigma2 = pdps.power[:, :, -k:].mean(axis=2)
    peak = float(pdps.power.max())
    if peak == 0.0:
        raise DegenerateError("all-zero PDP tensor has no noise floor")
    if dynamic_range_db is not None:
        sigma2 = np.maximum(sigma2, peak * 10.0 ** (-dynamic_range_db / 10.0))
    estimate = NoiseEstimate(
        sigma2=sigma2,
        sigma2_omni=float(sigma2.max()),
        method=NoiseMethod.TAIL_REGION,
    )
    logger.debug("noise: omni sigma2=%.3e, %d tail bins", estimate.sigma2_omni, k)
    return estimate


def gate_directional(p: DelayProfile, sigma2: float, factor: float = DIRECTIONAL_GATE) -> DelayProfile:
    """Zero every bin at or below factor * sigma2."""
    if not sigma2 > 0:
        raise DomainError(f"noise power must be positive, got {sigma2}")
    power = np.where(p.power > factor * sigma2, p.power, 0.0)
    return DelayProfile(power=power, delay_bin_s=p.delay_bin_s, kind=p.kind, tx_deg=p.tx_deg, rx_deg=p.rx_deg)


def gate_pdps(pdps: PdpTensor, noise: NoiseEstimate, factor: float = DIRECTIONAL_GATE) -> PdpTensor:
    """Apply the per-pair directional gate to a whole tensor."""
    if noise.sigma2.shape != pdps.grid.shape:
        raise DimensionError("noise estimate does not match the beam grid")
    threshold = factor * noise.sigma2[:, :, np.newaxis]
    power = np.where(pdps.power > threshold, pdps.power, 0.0)
    return PdpTensor(power=power, grid=pdps.grid, delay_bin_s=pdps.delay_bin_s)


def gated_delay_support(p: DelayProfile, sigma2_omni: float, factor: float = OMNI_GATE) -> np.ndarray:
    """Indices of bins strictly above factor * sigma2_omni."""
    if not sigma2_omni > 0:
        raise DomainError(f"noise power must be positive, got {sigma2_omni}")
    return np.flatnonzero(p.power > factor * sigma2_omni)


def rms_delay_spread(p: DelayProfile, support: Iterable[int]) -> float:
    """Second central moment of the profile over the support bins.

    Args:
        p: Delay profile
        support: Delay bin indices to include

    Returns:
        RMS delay spread in seconds

    Raises:
        NoSignalError: empty support or zero power on it
    """
    idx = np.unique(np.fromiter(support, dtype=np.int64))
    if idx.size == 0:
        raise NoSignalError("empty delay support")
    if idx[0] < 0 or idx[-1] >= p.num_bins:
        raise DimensionError("support index outside the profile")
    w = p.power[idx]
    total = float(w.sum())
    if total <= 0.0:
        raise NoSignalError("no power on the delay support")
    tau = idx * p.delay_bin_s
    mean = float(np.dot(w, tau)) / total
    var = float(np.dot(w, (tau - mean) ** 2)) / total
    return math.sqrt(max(var, 0.0))


def fit_log_ds(values_s: Sequence[float]) -> DelaySpreadStats:
    """Lognormal statistics of RMS delay spread.

    mu/sigma are the mean and unbiased std of log10 values. The KS p-value
    needs three values and a nonzero sigma; otherwise it is None.

    Raises:
        InsufficientDataError: fewer than two values
        DomainError: a value is not positive
    """
    values = np.asarray(values_s, dtype=float).ravel()
    if values.size < 2:
        raise InsufficientDataError(f"need at least 2 delay spreads, got {values.size}")
    if np.any(values <= 0):
        raise DomainError("delay spreads must be positive")
    logs = np.log10(values)
    mu = float(logs.mean())
    sigma = float(logs.std(ddof=1))
    if np.allclose(logs, logs[0], rtol=0.0, atol=1e-12):
        sigma = 0.0

    ks_p = None
    if values.size >= 3 and sigma > 0:
        _, ks_p = gaussian_ks_test((logs - mu) / sigma, sigma=1.0)
    else:
        logger.warning("KS p-value not computable for %d values (sigma=%.3g)", values.size, sigma)

    return DelaySpreadStats(
        values_s=tuple(values),
        median_s=float(np.median(values)),
        mu_log=mu,
        sigma_log=sigma,
        ks_p=ks_p,
    )


def three_gpp_mu(f_ghz: float, condition: LinkCondition) -> float:
    """3GPP UMi mean of log10 delay spread (seconds)."""
    if not f_ghz > 0:
        raise DomainError(f"frequency must be positive, got {f_ghz}")
    if condition == LinkCondition.LOS:
        return -0.2 * math.log10(1.0 + f_ghz) - 7.2
    return -0.21 * math.log10(1.0 + f_ghz) - 6.88


def fraction_within(values_s: Sequence[float], low_s: float, high_s: float) -> float:
    """Share of delay spreads inside [low_s, high_s]."""
    values = np.asarray(values_s, dtype=float)
    if values.size == 0:
        raise InsufficientDataError("no delay spreads")
    return float(np.mean((values >= low_s) & (values <= high_s)))


def delay_spread_ratio(omni_values_s: Sequence[float], dir_values_s: Sequence[float]) -> float:
    """Ratio of the omni median to the directional median."""
    if len(omni_values_s) == 0 or len(dir_values_s) == 0:
        raise InsufficientDataError("no delay spreads")
    dir_median = float(np.median(dir_values_s))
    if dir_median <= 0:
        raise DegenerateError("directional median delay spread is zero")
    return float(np.median(omni_values_s)) / dir_median


def log_ds_cdf(ds: DelaySpreadStats) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Empirical CDF of log10 delay spread with the fitted Gaussian.

    Returns:
        (sorted log10 values, empirical CDF, Gaussian CDF)
    """
    x = np.sort(np.log10(np.asarray(ds.values_s, dtype=float)))
    emp = np.arange(1, x.size + 1) / x.size
    if ds.sigma_log > 0:
        fitted = stats.norm.cdf(x, loc=ds.mu_log, scale=ds.sigma_log)
    else:
        fitted = (x >= ds.mu_log).astype(float)
    return x, emp, fitted