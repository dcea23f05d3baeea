"""Data models for MMSOUND."""

from enum import Enum
from pathlib import Path
from typing import ClassVar, Dict, List, Mapping, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from .errors import (
    ConditioningError,
    DataError,
    DegenerateError,
    DimensionError,
    DomainError,
    GridError,
    MissingBeamError,
)

ANGLE_TOL_DEG = 1e-9


def _frozen_array(values, dtype=None, ndim: Optional[int] = None) -> np.ndarray:
    """Copy values into a read-only array."""
    arr = np.array(values, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_power(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{what} contains non-finite values")
    if np.any(arr < 0):
        raise DataError(f"{what} contains negative power")


class Scenario(str, Enum):
    """Measurement campaign classes."""
    STREET28 = "Street28"
    NLOS = "NLoS"


class LinkCondition(str, Enum):
    """Line-of-sight condition for the 3GPP delay-spread model."""
    LOS = "LoS"
    NLOS = "NLoS"


class ProfileKind(str, Enum):
    """Origin of a delay profile."""
    DIRECTIONAL = "Directional"
    OMNI = "Omni"
    BEST_BEAM = "BestBeam"


class PadpSide(str, Enum):
    """Link end kept by a power angular-delay profile."""
    RX = "RxSide"
    TX = "TxSide"


class NoiseMethod(str, Enum):
    """How a noise estimate was obtained."""
    TAIL_REGION = "TailRegion"
    MANUAL = "Manual"


class ModelFamily(str, Enum):
    """Path-loss fitting method."""
    CI = "CI"
    ABG = "ABG"


class BeamGrid(BaseModel):
    """Azimuth beam grid of a switched-beam sweep."""

    model_config = ConfigDict(frozen=True)

    tx_azimuths_deg: Tuple[float, ...]
    rx_azimuths_deg: Tuple[float, ...]
    elevation_deg: float = 0.0
    step_deg: float = Field(default=5.0, gt=0.0)

    @field_validator("tx_azimuths_deg", "rx_azimuths_deg", mode="before")
    @classmethod
    def _as_tuple(cls, v):
        return tuple(float(a) for a in np.atleast_1d(np.asarray(v, dtype=float)))

    @model_validator(mode="after")
    def _check_grid(self):
        for side, angles in (("tx", self.tx_azimuths_deg), ("rx", self.rx_azimuths_deg)):
            if not angles:
                raise DimensionError(f"empty {side} beam grid")
            arr = np.asarray(angles)
            if np.any(np.diff(arr) <= 0):
                raise GridError(f"{side} azimuths must be strictly increasing")
            ratio = arr / self.step_deg
            if np.any(np.abs(ratio - np.round(ratio)) > ANGLE_TOL_DEG):
                raise GridError(f"{side} azimuths must be multiples of {self.step_deg} deg")
            if arr[0] <= -180.0 or arr[-1] > 180.0:
                raise GridError(f"{side} azimuths must lie in (-180, 180]")
        return self

    @classmethod
    def standard(cls) -> "BeamGrid":
        """19 TX beams over [-45, 45] and 72 RX beams over [-175, 180]."""
        return cls(
            tx_azimuths_deg=np.arange(-45, 50, 5),
            rx_azimuths_deg=np.arange(-175, 185, 5),
        )

    @classmethod
    def sector(cls) -> "BeamGrid":
        """Single 90-degree sector on both ends (one RX orientation)."""
        return cls(
            tx_azimuths_deg=np.arange(-45, 50, 5),
            rx_azimuths_deg=np.arange(-45, 50, 5),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.tx_azimuths_deg), len(self.rx_azimuths_deg)

    @property
    def is_uniform(self) -> bool:
        """True when both axes have exactly step_deg spacing."""
        for angles in (self.tx_azimuths_deg, self.rx_azimuths_deg):
            if len(angles) > 1 and not np.allclose(np.diff(angles), self.step_deg):
                return False
        return True

    @property
    def is_full_circle(self) -> bool:
        """True when the RX axis covers 360 degrees without gaps."""
        rx = self.rx_azimuths_deg
        return (
            len(rx) >= 3
            and np.isclose(len(rx) * self.step_deg, 360.0)
            and np.allclose(np.diff(rx), self.step_deg)
        )

    def tx_index(self, angle_deg: float) -> int:
        """Index of a TX azimuth on the grid.

        Raises:
            GridError: angle is not a grid point
        """
        return self._index(self.tx_azimuths_deg, angle_deg, "TX")

    def rx_index(self, angle_deg: float) -> int:
        """Index of an RX azimuth on the grid.

        Raises:
            GridError: angle is not a grid point
        """
        return self._index(self.rx_azimuths_deg, angle_deg, "RX")

    @staticmethod
    def _index(angles: Tuple[float, ...], angle_deg: float, side: str) -> int:
        hits = np.flatnonzero(np.abs(np.asarray(angles) - angle_deg) <= ANGLE_TOL_DEG)
        if hits.size == 0:
            raise GridError(f"{side} angle {angle_deg} deg is not on the beam grid")
        return int(hits[0])


class SounderConfig(BaseModel):
    """Multitone sounder parameters."""

    model_config = ConfigDict(frozen=True)

    center_freq_hz: float = Field(default=27.85e9, gt=0.0)
    num_tones: int = Field(default=801, ge=2)
    tone_spacing_hz: float = Field(default=500e3, gt=0.0)
    tx_eirp_dbm: float = 57.0
    link_budget_offset_db: float
    repetitions_per_beam: int = Field(default=10, ge=1)
    beam_switch_s: float = Field(default=2e-6, ge=0.0)

    @property
    def bandwidth_hz(self) -> float:
        """Occupied bandwidth (num_tones - 1) * spacing."""
        return (self.num_tones - 1) * self.tone_spacing_hz

    @property
    def delay_bin_s(self) -> float:
        """Delay resolution 1 / (num_tones * spacing)."""
        return 1.0 / (self.num_tones * self.tone_spacing_hz)

    @property
    def max_delay_s(self) -> float:
        """Unambiguous delay range 1 / spacing."""
        return 1.0 / self.tone_spacing_hz

    @property
    def waveform_duration_s(self) -> float:
        return 1.0 / self.tone_spacing_hz

    @property
    def tone_frequencies_hz(self) -> np.ndarray:
        """Absolute tone frequencies, centered on center_freq_hz."""
        k = np.arange(self.num_tones) - (self.num_tones - 1) / 2.0
        return self.center_freq_hz + k * self.tone_spacing_hz

    def sweep_time_s(self, num_beam_pairs: int) -> float:
        """Time to sweep every beam pair once with averaging.

        Args:
            num_beam_pairs: Number of TX/RX beam pairs in the sweep

        Returns:
            Sweep time in seconds
        """
        per_pair = self.waveform_duration_s + self.beam_switch_s
        return num_beam_pairs * self.repetitions_per_beam * per_pair


class LocationMeta(BaseModel):
    """Where and how a capture was taken."""

    model_config = ConfigDict(frozen=True)

    location_id: str
    tx_rx_distance_m: float = Field(gt=0.0)
    scenario: Scenario = Scenario.STREET28
    rx_orientation_set: Tuple[float, ...] = (0.0,)


class MeasurementCapture(BaseModel):
    """Frequency-response tensor H[tx_beam][rx_beam][tone] with metadata."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    config: SounderConfig
    grid: BeamGrid
    h: np.ndarray
    meta: LocationMeta

    @field_validator("h", mode="before")
    @classmethod
    def _as_complex(cls, v):
        arr = np.asarray(v)
        dtype = arr.dtype if np.iscomplexobj(arr) else np.complex128
        return _frozen_array(arr, dtype=dtype, ndim=3)

    @model_validator(mode="after")
    def _check_tensor(self):
        expected = (*self.grid.shape, self.config.num_tones)
        if self.h.shape != expected:
            raise DimensionError(f"tensor shape {self.h.shape} does not match grid/config {expected}")
        if not np.all(np.isfinite(self.h)):
            raise DataError("frequency response contains NaN or Inf")
        return self


class CalibrationProfile(BaseModel):
    """System calibration response h_cal[tone]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    EPS_REL: ClassVar[float] = 1e-6

    h_cal: np.ndarray

    @field_validator("h_cal", mode="before")
    @classmethod
    def _as_complex(cls, v):
        arr = np.asarray(v)
        dtype = arr.dtype if np.iscomplexobj(arr) else np.complex128
        return _frozen_array(arr, dtype=dtype, ndim=1)

    @model_validator(mode="after")
    def _check_conditioning(self):
        if not np.all(np.isfinite(self.h_cal)):
            raise DataError("calibration response contains NaN or Inf")
        mag = np.abs(self.h_cal)
        if mag.size == 0 or mag.max() == 0.0 or mag.min() <= self.epsilon:
            raise ConditioningError("calibration response is ill-conditioned for division")
        return self

    @classmethod
    def unity(cls, num_tones: int) -> "CalibrationProfile":
        """Flat calibration (ideal system response)."""
        return cls(h_cal=np.ones(num_tones, dtype=np.complex128))

    @property
    def num_tones(self) -> int:
        return int(self.h_cal.size)

    @property
    def epsilon(self) -> float:
        """Conditioning floor 1e-6 * max|h_cal|."""
        return self.EPS_REL * float(np.abs(self.h_cal).max(initial=0.0))


class DelayProfile(BaseModel):
    """Power versus delay bin."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    power: np.ndarray
    delay_bin_s: float = Field(gt=0.0)
    kind: ProfileKind = ProfileKind.DIRECTIONAL
    tx_deg: Optional[float] = None
    rx_deg: Optional[float] = None

    @field_validator("power", mode="before")
    @classmethod
    def _as_power(cls, v):
        arr = _frozen_array(v, dtype=float, ndim=1)
        _check_power(arr, "delay profile")
        return arr

    @property
    def num_bins(self) -> int:
        return int(self.power.size)

    @property
    def delays_s(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.delay_bin_s


class PdpTensor(BaseModel):
    """Directional PDPs for every beam pair, power[tx][rx][delay]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    power: np.ndarray
    grid: BeamGrid
    delay_bin_s: float = Field(gt=0.0)

    @field_validator("power", mode="before")
    @classmethod
    def _as_power(cls, v):
        arr = _frozen_array(v, dtype=float, ndim=3)
        _check_power(arr, "PDP tensor")
        return arr

    @model_validator(mode="after")
    def _check_shape(self):
        if self.power.shape[:2] != self.grid.shape:
            raise DimensionError(f"PDP tensor {self.power.shape} does not match grid {self.grid.shape}")
        return self

    @classmethod
    def from_profiles(
        cls,
        profiles: Mapping[Tuple[float, float], DelayProfile],
        grid: BeamGrid,
    ) -> "PdpTensor":
        """Assemble a tensor from per-pair profiles keyed by (tx_deg, rx_deg).

        Raises:
            MissingBeamError: a grid pair has no profile
            DimensionError: profiles disagree in length or bin width
        """
        lookup: Dict[Tuple[int, int], DelayProfile] = {}
        for (tx, rx), prof in profiles.items():
            lookup[(grid.tx_index(tx), grid.rx_index(rx))] = prof
        missing = [
            (tx, rx)
            for i, tx in enumerate(grid.tx_azimuths_deg)
            for j, rx in enumerate(grid.rx_azimuths_deg)
            if (i, j) not in lookup
        ]
        if missing:
            raise MissingBeamError(f"{len(missing)} beam pairs missing, first {missing[0]}")

        first = lookup[(0, 0)]
        bins = {p.num_bins for p in lookup.values()}
        widths = {p.delay_bin_s for p in lookup.values()}
        if len(bins) != 1 or len(widths) != 1:
            raise DimensionError("directional profiles differ in length or bin width")

        power = np.empty((*grid.shape, first.num_bins))
        for (i, j), prof in lookup.items():
            power[i, j] = prof.power
        return cls(power=power, grid=grid, delay_bin_s=first.delay_bin_s)

    @property
    def num_bins(self) -> int:
        return int(self.power.shape[2])

    def profile(self, tx_deg: float, rx_deg: float) -> DelayProfile:
        """Directional PDP of one beam pair."""
        i, j = self.grid.tx_index(tx_deg), self.grid.rx_index(rx_deg)
        return DelayProfile(
            power=self.power[i, j],
            delay_bin_s=self.delay_bin_s,
            kind=ProfileKind.DIRECTIONAL,
            tx_deg=self.grid.tx_azimuths_deg[i],
            rx_deg=self.grid.rx_azimuths_deg[j],
        )


class AngularSpectrum(BaseModel):
    """Power angular spectrum PAS[tx][rx]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    power: np.ndarray
    grid: BeamGrid

    @field_validator("power", mode="before")
    @classmethod
    def _as_power(cls, v):
        arr = _frozen_array(v, dtype=float, ndim=2)
        _check_power(arr, "angular spectrum")
        return arr

    @model_validator(mode="after")
    def _check_shape(self):
        if self.power.shape != self.grid.shape:
            raise DimensionError(f"PAS {self.power.shape} does not match grid {self.grid.shape}")
        return self


class Padp(BaseModel):
    """Power angular-delay profile power[beam][delay] for one link end."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    power: np.ndarray
    side: PadpSide
    angles_deg: Tuple[float, ...]
    delay_bin_s: float = Field(gt=0.0)

    @field_validator("power", mode="before")
    @classmethod
    def _as_power(cls, v):
        arr = _frozen_array(v, dtype=float, ndim=2)
        _check_power(arr, "PADP")
        return arr

    @model_validator(mode="after")
    def _check_shape(self):
        if self.power.shape[0] != len(self.angles_deg):
            raise DimensionError("PADP rows do not match the angle axis")
        return self


class NoiseEstimate(BaseModel):
    """Noise power per beam pair and for the omni profile."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sigma2: np.ndarray
    sigma2_omni: float
    method: NoiseMethod = NoiseMethod.TAIL_REGION

    @field_validator("sigma2", mode="before")
    @classmethod
    def _as_matrix(cls, v):
        return _frozen_array(v, dtype=float, ndim=2)

    @model_validator(mode="after")
    def _check_positive(self):
        if not (np.all(self.sigma2 > 0) and self.sigma2_omni > 0):
            raise DegenerateError("noise power must be strictly positive")
        return self


class DelaySpreadStats(BaseModel):
    """Lognormal statistics of RMS delay spread over locations."""

    model_config = ConfigDict(frozen=True)

    values_s: Tuple[float, ...]
    median_s: float
    mu_log: float
    sigma_log: float
    ks_p: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @property
    def count(self) -> int:
        return len(self.values_s)


class PathLossModel(BaseModel):
    """PL(d) = 10 n log10(d / 1 m) + P0 + X_sigma.

    For the CI family p0_db is the 1 m free-space loss at the fit frequency.
    """

    model_config = ConfigDict(frozen=True)

    n: float
    p0_db: float
    sigma_db: float = Field(ge=0.0)
    family: ModelFamily


class FitReport(BaseModel):
    """Fitted path-loss model with shadow-fading residuals."""

    model_config = ConfigDict(frozen=True)

    model: PathLossModel
    residuals_db: Tuple[float, ...]
    ks_statistic: Optional[float] = None
    ks_p: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class MultipathComponent(BaseModel):
    """Discrete path: departure angle, arrival angle, delay, power gain."""

    model_config = ConfigDict(frozen=True)

    dod_deg: float
    doa_deg: float
    delay_s: float = Field(ge=0.0)
    gain: float = Field(gt=0.0)

    @property
    def gain_db(self) -> float:
        return 10.0 * float(np.log10(self.gain))


class MpcMatch(BaseModel):
    """Assignment of recovered MPCs to planted ones."""

    model_config = ConfigDict(frozen=True)

    pairs: Tuple[Tuple[int, int], ...]
    unmatched_planted: Tuple[int, ...]
    spurious: Tuple[int, ...]


class MultitoneSpec(BaseModel):
    """Equally spaced multitone: per-tone amplitude and phase."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_tones: int = Field(ge=1)
    tone_spacing_hz: float = Field(default=500e3, gt=0.0)
    phases_rad: np.ndarray
    amplitudes: Optional[np.ndarray] = Field(default=None, validate_default=True)

    @field_validator("phases_rad", mode="before")
    @classmethod
    def _as_phases(cls, v):
        return _frozen_array(v, dtype=float, ndim=1)

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_amplitudes(cls, v, info: ValidationInfo):
        if v is None:
            v = np.ones(info.data.get("num_tones", 0))
        return _frozen_array(v, dtype=float, ndim=1)

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.phases_rad.size != self.num_tones:
            raise DimensionError("phase vector length must equal num_tones")
        if self.amplitudes.size != self.num_tones:
            raise DimensionError("amplitude vector length must equal num_tones")
        if np.any(self.amplitudes <= 0):
            raise DomainError("tone amplitudes must be positive")
        return self


class PhaseDesign(BaseModel):
    """Outcome of a phase optimization run."""

    model_config = ConfigDict(frozen=True)

    spec: MultitoneSpec
    papr_db: float
    initial_papr_db: float
    target_papr_db: float
    reached_target: bool
    iterations: int


class SceneSpec(BaseModel):
    """Statistical parameters of one synthetic location."""

    model_config = ConfigDict(frozen=True)

    n: float
    p0_db: float
    shadow_sigma_db: float = Field(default=0.0, ge=0.0)
    ds_target_s: float = Field(default=0.0, ge=0.0)
    num_paths: int = Field(default=1, ge=0)
    distance_m: float = Field(gt=0.0)
    seed: int = 0
    link_budget_offset_db: float = 200.0
    delay_bin_s: float = Field(default=1.0 / (801 * 500e3), gt=0.0)


class BeamPatternModel(BaseModel):
    """Gaussian main lobe with a flat sidelobe floor."""

    model_config = ConfigDict(frozen=True)

    azimuth_3db_deg: float = Field(default=12.0, gt=0.0)
    sidelobe_floor_db: float = Field(default=-20.0, lt=0.0)


class SceneFile(BaseModel):
    """Schema of a synth scene document."""

    model_config = ConfigDict(extra="forbid")

    scene: SceneSpec
    grid: Optional[BeamGrid] = None
    sounder: Optional[SounderConfig] = None
    pattern: BeamPatternModel = Field(default_factory=BeamPatternModel)
    noise_sigma2: float = Field(default=0.0, ge=0.0)
    location_id: str = "synth"
    scenario: Scenario = Scenario.STREET28


class LocationReport(BaseModel):
    """One row of the per-location table."""

    location_id: str
    scenario: Scenario
    distance_m: float
    pl_db: float
    pl_dir_db: float
    rms_ds_omni_s: float
    rms_ds_dir_s: float

    COLUMNS: ClassVar[Tuple[str, ...]] = (
        "location_id", "scenario", "distance_m", "pl_db",
        "pl_dir_db", "rms_ds_omni_s", "rms_ds_dir_s",
    )


class RunConfig(BaseModel):
    """Settings of one command-line run."""

    model_config = ConfigDict(extra="forbid")

    inputs: List[Path] = Field(default_factory=list)
    calibration: Optional[Path] = None
    scenarios: List[Scenario] = Field(default_factory=lambda: list(Scenario))
    tail_fraction: float = Field(default=0.1, gt=0.0, le=0.5)
    directional_gate: float = Field(default=4.0, gt=0.0)
    omni_gate: float = Field(default=2.0, gt=0.0)
    dynamic_range_db: float = Field(default=60.0, gt=0.0)
    false_alarm_rate: Optional[float] = Field(default=1e-4, gt=0.0, lt=1.0)
    window: bool = False
    center_freq_hz: float = Field(default=27.85e9, gt=0.0)
    output_dir: Path = Path("mmsound-out")
    formats: List[str] = Field(default_factory=lambda: ["csv", "json"])
    workers: int = Field(default=1, ge=1)

    @field_validator("formats")
    @classmethod
    def _known_formats(cls, v):
        unknown = set(v) - {"csv", "json"}
        if unknown:
            raise ValueError(f"unknown report formats: {sorted(unknown)}")
        return v
