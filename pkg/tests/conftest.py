"""Shared fixtures for the MMSOUND test suite."""

import numpy as np
import pytest

from mmsound.models import (
    BeamGrid,
    CalibrationProfile,
    LocationMeta,
    MeasurementCapture,
    MultipathComponent,
    Scenario,
    SounderConfig,
)


@pytest.fixture
def small_config():
    """64-tone sounder; 100 dB link budget offset."""
    return SounderConfig(num_tones=64, tone_spacing_hz=500e3, link_budget_offset_db=100.0)


@pytest.fixture
def small_grid():
    """Three TX beams and a 12-beam full RX circle on a 30-degree step."""
    return BeamGrid(
        tx_azimuths_deg=[-30, 0, 30],
        rx_azimuths_deg=np.arange(-150, 181, 30),
        step_deg=30.0,
    )


@pytest.fixture
def unity_cal(small_config):
    return CalibrationProfile.unity(small_config.num_tones)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_capture(small_config, small_grid):
    """Build a capture on the small grid from a tensor (random when omitted)."""

    def _make(h=None, location_id="loc-1", distance_m=50.0, scenario=Scenario.STREET28, seed=0):
        if h is None:
            r = np.random.default_rng(seed)
            shape = (*small_grid.shape, small_config.num_tones)
            h = r.standard_normal(shape) + 1j * r.standard_normal(shape)
        meta = LocationMeta(location_id=location_id, tx_rx_distance_m=distance_m, scenario=scenario)
        return MeasurementCapture(config=small_config, grid=small_grid, h=h, meta=meta)

    return _make


@pytest.fixture
def single_path(small_config):
    """One path at (0, 90) degrees, ten bins late, gain 1e-3."""
    return MultipathComponent(dod_deg=0.0, doa_deg=90.0, delay_s=10 * small_config.delay_bin_s, gain=1e-3)
