"""Synthetic channel scenes and their rendering into captures."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import RangeError, SpecError
from ..models import (
    BeamGrid,
    BeamPatternModel,
    LocationMeta,
    MeasurementCapture,
    ModelFamily,
    MultipathComponent,
    PathLossModel,
    SceneSpec,
    SounderConfig,
)
from ..utils import angle_diff_deg
from .pathloss import predict

logger = logging.getLogger(__name__)

MAX_SCENE_DRAWS = 100
DS_TOLERANCE = 0.05


def beam_gain(pattern: BeamPatternModel, offset_deg):
    """Power gain of a Gaussian main lobe floored at the sidelobe level.

    Args:
        pattern: Beam pattern parameters
        offset_deg: Angle from boresight (scalar or array, wrapped)

    Returns:
        Linear power gain, 1 at boresight and 0.5 at half the 3 dB width
    """
    offset = np.asarray(angle_diff_deg(offset_deg, 0.0), dtype=float)
    main = np.exp(-4.0 * np.log(2.0) * (offset / pattern.azimuth_3db_deg) ** 2)
    gain = np.maximum(main, 10.0 ** (pattern.sidelobe_floor_db / 10.0))
    return float(gain) if gain.ndim == 0 else gain


def _weighted_spread(delays: np.ndarray, weights: np.ndarray) -> float:
    total = weights.sum()
    mean = np.dot(weights, delays) / total
    return float(np.sqrt(max(np.dot(weights, (delays - mean) ** 2) / total, 0.0)))


def _draw_delays(
    rng: np.random.Generator,
    num_paths: int,
    ds_target_s: float,
    delay_bin_s: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """Exponential-decay taps on the delay-bin grid with the target spread."""
    for attempt in range(MAX_SCENE_DRAWS):
        u = np.sort(rng.exponential(1.0, size=num_paths))
        u -= u[0]
        weights = np.exp(-u)
        unit_ds = _weighted_spread(u, weights)
        if unit_ds == 0.0:
            continue
        delays = np.round(u * (ds_target_s / unit_ds) / delay_bin_s) * delay_bin_s
        ds = _weighted_spread(delays, weights)
        if abs(ds - ds_target_s) <= DS_TOLERANCE * ds_target_s:
            logger.debug("scene delays accepted after %d draws (DS %.3e s)", attempt + 1, ds)
            return delays, weights
    raise SpecError(
        f"could not reach delay spread {ds_target_s:.3e} s with {num_paths} paths "
        f"in {MAX_SCENE_DRAWS} draws"
    )


def sample_scene(
    spec: SceneSpec,
    grid: Optional[BeamGrid] = None,
) -> Tuple[List[MultipathComponent], float]:
    """Draw a random MPC scene and its path loss.

    Path loss is the model mean at spec.distance_m plus a Gaussian shadowing
    draw. Tap delays follow an exponential power profile scaled to the target
    delay spread and quantized to spec.delay_bin_s; angles are uniform on the
    grid. Gains sum to 10^((link_budget_offset_db - PL) / 10).

    Args:
        spec: Scene parameters
        grid: Beam grid for the angles (standard grid when omitted)

    Returns:
        (MPCs, path loss in dB)

    Raises:
        SpecError: a single path with a nonzero delay-spread target, or no
            draw within tolerance
    """
    grid = grid or BeamGrid.standard()
    rng = np.random.default_rng(spec.seed)
    mean_pl = predict(PathLossModel(n=spec.n, p0_db=spec.p0_db, sigma_db=spec.shadow_sigma_db,
                                    family=ModelFamily.ABG), spec.distance_m)
    pl_db = float(mean_pl + rng.normal(0.0, spec.shadow_sigma_db))
    if spec.num_paths == 0:
        return [], pl_db

    if spec.num_paths == 1:
        if spec.ds_target_s > 0:
            raise SpecError("a single path has zero delay spread; ds_target_s must be 0")
        delays, weights = np.zeros(1), np.ones(1)
    elif spec.ds_target_s == 0:
        delays, weights = np.zeros(spec.num_paths), np.exp(-rng.exponential(1.0, size=spec.num_paths))
    else:
        delays, weights = _draw_delays(rng, spec.num_paths, spec.ds_target_s, spec.delay_bin_s)

    total = 10.0 ** ((spec.link_budget_offset_db - pl_db) / 10.0)
    gains = weights / weights.sum() * total
    dods = rng.choice(np.asarray(grid.tx_azimuths_deg), size=spec.num_paths)
    doas = rng.choice(np.asarray(grid.rx_azimuths_deg), size=spec.num_paths)
    mpcs = [
        MultipathComponent(dod_deg=float(a), doa_deg=float(b), delay_s=float(t), gain=float(g))
        for a, b, t, g in zip(dods, doas, delays, gains)
    ]
    logger.debug("sampled scene seed=%d: %d paths, PL %.2f dB", spec.seed, len(mpcs), pl_db)
    return mpcs, pl_db


def render_capture(
    scene: Sequence[MultipathComponent],
    grid: BeamGrid,
    cfg: SounderConfig,
    pattern: Optional[BeamPatternModel] = None,
    noise_sigma2: float = 0.0,
    seed: int = 0,
    meta: Optional[LocationMeta] = None,
    workers: int = 1,
) -> MeasurementCapture:
    """Forward model: MPC scene to frequency-response tensor.

    H[i, j, f] = sum_p sqrt(gain_p g(tx_i - dod_p) g(rx_j - doa_p)) exp(-j 2 pi f tau_p)
    plus complex Gaussian noise of variance noise_sigma2 per tone. Each beam
    pair draws noise from its own child of SeedSequence(seed), so the result
    does not depend on the number of workers.

    Raises:
        RangeError: a delay is outside [0, 1 / tone_spacing)
    """
    pattern = pattern or BeamPatternModel()
    meta = meta or LocationMeta(location_id="synth", tx_rx_distance_m=1.0)
    n_tx, n_rx = grid.shape
    n_tones = cfg.num_tones

    delays = np.array([m.delay_s for m in scene], dtype=float)
    if np.any(delays < 0) or np.any(delays >= cfg.max_delay_s):
        raise RangeError(f"MPC delays must lie in [0, {cfg.max_delay_s:.3e}) s")

    tx = np.asarray(grid.tx_azimuths_deg)
    rx = np.asarray(grid.rx_azimuths_deg)
    if scene:
        gains = np.array([m.gain for m in scene])
        g_tx = beam_gain(pattern, tx[np.newaxis, :] - np.array([m.dod_deg for m in scene])[:, np.newaxis])
        g_rx = beam_gain(pattern, rx[np.newaxis, :] - np.array([m.doa_deg for m in scene])[:, np.newaxis])
        # amplitude[p, i, j]
        amplitude = np.sqrt(gains[:, None, None] * g_tx[:, :, None] * g_rx[:, None, :])
        cycles = np.mod(np.outer(delays, cfg.tone_frequencies_hz), 1.0)
        phasor = np.exp(-2j * np.pi * cycles)
    else:
        amplitude = np.zeros((0, n_tx, n_rx))
        phasor = np.zeros((0, n_tones), dtype=np.complex128)

    children = np.random.SeedSequence(seed).spawn(n_tx * n_rx) if noise_sigma2 > 0 else None
    scale = np.sqrt(noise_sigma2 / 2.0)

    def render_row(i: int) -> np.ndarray:
        row = np.einsum("pj,pk->jk", amplitude[:, i, :], phasor).astype(np.complex128)
        if children is not None:
            for j in range(n_rx):
                rng = np.random.default_rng(children[i * n_rx + j])
                row[j] += scale * (rng.standard_normal(n_tones) + 1j * rng.standard_normal(n_tones))
        return row

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        rows = list(pool.map(render_row, range(n_tx)))
    h = np.stack(rows) if rows else np.zeros((0, n_rx, n_tones), dtype=np.complex128)
    logger.debug("rendered %d paths onto %dx%dx%d tensor", len(scene), n_tx, n_rx, n_tones)
    return MeasurementCapture(config=cfg, grid=grid, h=h, meta=meta)
