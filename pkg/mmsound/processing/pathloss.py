"""Close-in and alpha-beta path-loss fitting with shadow-fading tests."""

import logging
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import constants, stats

from ..errors import (
    DegenerateError,
    DomainError,
    InsufficientDataError,
    RankDeficiencyError,
)
from ..models import FitReport, ModelFamily, PathLossModel

logger = logging.getLogger(__name__)

Sample = Tuple[float, float]


def fspl_reference(f_hz: float) -> float:
    """Free-space path loss at 1 m, 20 log10(4 pi f / c).

    Raises:
        DomainError: f_hz is not positive
    """
    if not f_hz > 0:
        raise DomainError(f"frequency must be positive, got {f_hz}")
    return 20.0 * float(np.log10(4.0 * np.pi * f_hz / constants.c))


def fspl_db(d_m, f_hz: float):
    """Free-space path loss at distance d_m (scalar or array)."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be positive")
    out = fspl_reference(f_hz) + 20.0 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def _split(samples: Iterable[Sample]) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(list(samples), dtype=float).reshape(-1, 2)
    if arr.shape[0] < 2:
        raise InsufficientDataError(f"need at least 2 samples, got {arr.shape[0]}")
    d, pl = arr[:, 0], arr[:, 1]
    if np.any(d <= 0):
        raise DomainError("distances must be positive")
    if not np.all(np.isfinite(pl)):
        raise DomainError("path loss samples must be finite")
    return d, pl


def _ks_or_none(residuals: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    try:
        return gaussian_ks_test(residuals)
    except (InsufficientDataError, DegenerateError) as e:
        logger.warning("KS test skipped: %s", e)
        return None, None


def gaussian_ks_test(
    residuals_db: Sequence[float],
    sigma: Optional[float] = None,
) -> Tuple[float, float]:
    """KS test of residuals against a zero-mean Gaussian.

    The p-value is the asymptotic Kolmogorov distribution of sqrt(n) D,
    with no correction for a sigma estimated from the same data.

    Args:
        residuals_db: Shadow-fading residuals
        sigma: Hypothesized standard deviation; the population std of the
            residuals when omitted

    Returns:
        (statistic, p_value)

    Raises:
        InsufficientDataError: fewer than 3 residuals (1 with sigma given)
        DegenerateError: residuals have zero variance
        DomainError: supplied sigma is not positive
    """
    x = np.asarray(residuals_db, dtype=float).ravel()
    if sigma is None:
        if x.size < 3:
            raise InsufficientDataError(f"KS test needs at least 3 residuals, got {x.size}")
        sigma = float(np.std(x))
        if sigma == 0.0:
            raise DegenerateError("residuals have zero variance")
    else:
        if x.size < 1:
            raise InsufficientDataError("KS test needs at least 1 residual")
        if not sigma > 0:
            raise DomainError(f"sigma must be positive, got {sigma}")
    result = stats.kstest(x, "norm", args=(0.0, sigma), method="asymp")
    return float(result.statistic), float(result.pvalue)


def fit_ci(samples: Iterable[Sample], f_hz: float) -> FitReport:
    """Close-in fit: P0 fixed at the 1 m free-space loss, MMSE exponent.

    Args:
        samples: (distance_m, path_loss_db) pairs
        f_hz: Carrier frequency

    Returns:
        Fit report with population-std shadowing

    Raises:
        DegenerateError: every distance is 1 m
    """
    d, pl = _split(samples)
    p0 = fspl_reference(f_hz)
    dd = 10.0 * np.log10(d)
    a = pl - p0
    denom = float(np.dot(dd, dd))
    if denom == 0.0:
        raise DegenerateError("all samples at the 1 m reference distance")
    n = float(np.dot(a, dd)) / denom
    residuals = a - n * dd
    ks_stat, ks_p = _ks_or_none(residuals)
    model = PathLossModel(n=n, p0_db=p0, sigma_db=float(np.std(residuals)), family=ModelFamily.CI)
    logger.debug("CI fit over %d samples: n=%.3f sigma=%.2f dB", d.size, n, model.sigma_db)
    return FitReport(model=model, residuals_db=tuple(residuals), ks_statistic=ks_stat, ks_p=ks_p)


def fit_abg(samples: Iterable[Sample]) -> FitReport:
    """Single-band alpha-beta fit: joint least squares of slope and intercept.

    Raises:
        RankDeficiencyError: fewer than two distinct distances
    """
    d, pl = _split(samples)
    if np.unique(d).size < 2:
        raise RankDeficiencyError("ABG fit needs at least two distinct distances")
    dd = 10.0 * np.log10(d)
    reg = stats.linregress(dd, pl)
    n, p0 = float(reg.slope), float(reg.intercept)
    residuals = pl - (n * dd + p0)
    ks_stat, ks_p = _ks_or_none(residuals)
    model = PathLossModel(n=n, p0_db=p0, sigma_db=float(np.std(residuals)), family=ModelFamily.ABG)
    logger.debug("ABG fit over %d samples: n=%.3f P0=%.2f dB", d.size, n, p0)
    return FitReport(model=model, residuals_db=tuple(residuals), ks_statistic=ks_stat, ks_p=ks_p)


def predict(m: PathLossModel, d_m):
    """Mean path loss 10 n log10(d) + P0 (scalar or array)."""
    d = np.asarray(d_m, dtype=float)
    if np.any(d <= 0):
        raise DomainError("distance must be positive")
    out = 10.0 * m.n * np.log10(d) + m.p0_db
    return float(out) if out.ndim == 0 else out


def shadowing_cdf(report: FitReport) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Empirical shadow-fading CDF with the fitted zero-mean Gaussian.

    Returns:
        (sorted residuals, empirical CDF, Gaussian CDF at the residuals)
    """
    x = np.sort(np.asarray(report.residuals_db, dtype=float))
    emp = np.arange(1, x.size + 1) / x.size
    if report.model.sigma_db > 0:
        fitted = stats.norm.cdf(x, loc=0.0, scale=report.model.sigma_db)
    else:
        fitted = (x >= 0).astype(float)
    return x, emp, fitted


def report_row(report: FitReport, scenario: str, variant: str) -> Dict[str, Any]:
    """Path-loss table row for one fit."""
    return {
        "family": report.model.family.value,
        "scenario": scenario,
        "variant": variant,
        "n": report.model.n,
        "p0_db": report.model.p0_db,
        "sigma_db": report.model.sigma_db,
        "ks_p": report.ks_p,
        "count": len(report.residuals_db),
        "skipped": None,
    }
