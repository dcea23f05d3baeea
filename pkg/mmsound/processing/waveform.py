"""Multitone sounding waveform synthesis and low-PAPR phase design."""

import logging
from typing import Any, Dict, List, Optional

import numpy as np
from scipy import fft

from ..errors import DomainError
from ..models import MultitoneSpec, PhaseDesign

logger = logging.getLogger(__name__)

MIN_PAPR_OVERSAMPLE = 4


def newman_phases(num_tones: int) -> np.ndarray:
    """Quadratic phase schedule pi k^2 / N, k = 0..N-1."""
    if num_tones < 1:
        raise DomainError("num_tones must be at least 1")
    k = np.arange(num_tones, dtype=float)
    return np.pi * k ** 2 / num_tones


def newman_spec(num_tones: int, tone_spacing_hz: float = 500e3) -> MultitoneSpec:
    """Unit-amplitude multitone with Newman phases."""
    return MultitoneSpec(
        num_tones=num_tones,
        tone_spacing_hz=tone_spacing_hz,
        phases_rad=newman_phases(num_tones),
    )


def waveform_duration_s(spec: MultitoneSpec) -> float:
    """One period of the multitone, 1 / tone spacing."""
    return 1.0 / spec.tone_spacing_hz


def _check_oversample(oversample: int, minimum: int = 1) -> int:
    if int(oversample) != oversample or oversample < minimum:
        raise DomainError(f"oversample must be an integer >= {minimum}, got {oversample}")
    return int(oversample)


def _synthesize(amplitudes: np.ndarray, phases: np.ndarray, oversample: int) -> np.ndarray:
    n = amplitudes.size
    m = oversample * n
    spectrum = np.zeros(m, dtype=np.complex128)
    spectrum[:n] = amplitudes * np.exp(1j * phases)
    # mean power of the result is sum(a^2) / N
    return fft.ifft(spectrum) * (m / np.sqrt(n))


def _papr(x: np.ndarray) -> float:
    power = np.abs(x) ** 2
    return 10.0 * float(np.log10(power.max() / power.mean()))


def synthesize_time_domain(spec: MultitoneSpec, oversample: int = 1) -> np.ndarray:
    """Complex baseband samples over one period.

    Args:
        spec: Multitone definition
        oversample: Samples per tone spacing bin (integer >= 1)

    Returns:
        oversample * num_tones samples at rate oversample * N * spacing
    """
    oversample = _check_oversample(oversample)
    return _synthesize(spec.amplitudes, spec.phases_rad, oversample)


def papr_db(spec: MultitoneSpec, oversample: int = MIN_PAPR_OVERSAMPLE) -> float:
    """Peak-to-average power ratio of the envelope in dB.

    Raises:
        DomainError: oversample below 4
    """
    oversample = _check_oversample(oversample, MIN_PAPR_OVERSAMPLE)
    return _papr(_synthesize(spec.amplitudes, spec.phases_rad, oversample))


def _clip_and_restore(
    amplitudes: np.ndarray,
    phases: np.ndarray,
    target_papr_db: float,
    max_iters: int,
    oversample: int,
):
    """Iterate envelope clipping; return (best phases, best PAPR, iterations)."""
    n = amplitudes.size
    best_phases = phases
    best = _papr(_synthesize(amplitudes, phases, oversample))
    gain = 10.0 ** (target_papr_db / 20.0)
    iters = 0
    while iters < max_iters and best > target_papr_db:
        iters += 1
        x = _synthesize(amplitudes, phases, oversample)
        mag = np.abs(x)
        limit = np.sqrt(np.mean(mag ** 2)) * gain
        clipped = np.where(mag > limit, x * (limit / np.maximum(mag, 1e-300)), x)
        phases = np.angle(fft.fft(clipped)[:n])
        current = _papr(_synthesize(amplitudes, phases, oversample))
        if current < best:
            best, best_phases = current, phases
    return best_phases, best, iters


def optimize_phases(
    num_tones: int,
    target_papr_db: float = 1.0,
    max_iters: int = 2000,
    tone_spacing_hz: float = 500e3,
    initial: Optional[MultitoneSpec] = None,
    oversample: int = MIN_PAPR_OVERSAMPLE,
    restarts: int = 0,
    seed: Optional[int] = None,
) -> PhaseDesign:
    """Phase-only PAPR reduction by iterative clip-and-restore.

    Starts from Newman phases (or `initial`) and keeps the best phase set
    seen, so the result never exceeds the starting PAPR. Optional restarts
    begin from seeded uniform random phases.

    Args:
        num_tones: Tone count (>= 2)
        target_papr_db: Stop once the PAPR is at or below this value
        max_iters: Iteration budget per start
        tone_spacing_hz: Tone spacing of the returned spec
        initial: Starting spec; returned unchanged if already below target
        oversample: Oversampling used to measure PAPR (>= 4)
        restarts: Extra random starts
        seed: Seed for the random starts

    Returns:
        PhaseDesign with the best spec and whether the target was reached
    """
    if num_tones < 2:
        raise DomainError("phase optimization needs at least 2 tones")
    oversample = _check_oversample(oversample, MIN_PAPR_OVERSAMPLE)
    start = initial if initial is not None else newman_spec(num_tones, tone_spacing_hz)
    if start.num_tones != num_tones:
        raise DomainError("initial spec has a different tone count")

    amplitudes = start.amplitudes
    initial_papr = papr_db(start, oversample)
    if initial_papr <= target_papr_db:
        return PhaseDesign(
            spec=start, papr_db=initial_papr, initial_papr_db=initial_papr,
            target_papr_db=target_papr_db, reached_target=True, iterations=0,
        )

    best_phases, best, total_iters = _clip_and_restore(
        amplitudes, start.phases_rad, target_papr_db, max_iters, oversample
    )
    rng = np.random.default_rng(seed)
    for r in range(restarts):
        if best <= target_papr_db:
            break
        phases, value, iters = _clip_and_restore(
            amplitudes, rng.uniform(0.0, 2.0 * np.pi, num_tones), target_papr_db, max_iters, oversample
        )
        total_iters += iters
        logger.debug("restart %d reached %.3f dB", r, value)
        if value < best:
            best, best_phases = value, phases

    if best < initial_papr:
        spec = MultitoneSpec(
            num_tones=num_tones,
            tone_spacing_hz=start.tone_spacing_hz,
            phases_rad=np.mod(best_phases, 2.0 * np.pi),
            amplitudes=amplitudes,
        )
        # recompute on the stored phases so the report matches the spec
        best = papr_db(spec, oversample)
    if best >= initial_papr:
        spec, best = start, initial_papr

    logger.info("phase design: %.2f dB -> %.2f dB in %d iterations", initial_papr, best, total_iters)
    return PhaseDesign(
        spec=spec,
        papr_db=best,
        initial_papr_db=initial_papr,
        target_papr_db=target_papr_db,
        reached_target=best <= target_papr_db,
        iterations=total_iters,
    )


def spec_to_rows(spec: MultitoneSpec) -> List[Dict[str, Any]]:
    """Tone table rows: tone_index, amplitude, phase_rad."""
    return [
        {"tone_index": k, "amplitude": float(a), "phase_rad": float(p)}
        for k, (a, p) in enumerate(zip(spec.amplitudes, spec.phases_rad))
    ]
