"""Row-sequential image sensor simulation with supply-coupled row offsets.

Model
-----
The sensor reads one row per line period at f_line = fps * frame_length_rows,
where frame_length_rows = active + optical black + blanking row times. A
disturbance on the pixel supply rail shifts the reference of every pixel
sampled in the same line period by the same amount, so row r of frame F
picks up a common offset

    dn_offset(r, F) = coupling_gain * v_supply(t_rF) * dn_per_volt
    t_rF            = F / fps + r / f_line          (continuous phase mode)

on top of the dark pedestal. Optical black rows are read through the same
chain and carry the same offset. Temporal noise sources (shot, read,
reset, flicker) and frozen spatial non-uniformities stack on the analog
value, which is then rounded half away from zero and clamped to the 8-bit
range.

Determinism: every stochastic term draws from its own Philox substream
keyed by (seed, frame_index, source tag), filled row-major in one shot.
Frames can therefore be generated in any order, on any worker count, and
come out bit-identical. Fixed-pattern maps are keyed by seed alone so
they stay frozen across a stack.

Units: one simulated electron contributes one DN. Neither the supply
coupling path nor the 0 lux operating point gives a reason to pick a
different conversion gain, and unit gain keeps electron-domain variance
directly visible in the output.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import physics

__all__ = [
    "PhaseMode",
    "SensorConfig",
    "SupplyNoiseConfig",
    "TemporalNoiseConfig",
    "SpatialNoiseConfig",
    "SimScenario",
    "Frame",
    "FpnMaps",
    "supply_noise_sample",
    "rc_attenuation",
    "pink_noise",
    "quantize_dn",
    "generate_fpn_maps",
    "row_supply_offsets_dn",
    "simulate_frame_analog",
    "simulate_frame",
    "simulate_stack",
    "scenario_to_json",
    "scenario_from_json",
]

MAX_DN = 255  # 8-bit output range

# Substream tags. Values are part of the reproducibility contract:
# changing them changes every simulated frame.
_TAG_PHASE = 1
_TAG_SHOT = 2
_TAG_READ = 3
_TAG_RESET = 4
_TAG_FLICKER = 5
_TAG_FPN_PIXEL = 6
_TAG_FPN_COLUMN = 7
_TAG_FPN_PRNU = 8


class PhaseMode(str, Enum):
    """Supply phase handling across frames.

    CONTINUOUS runs one clock through the whole stack, the way a free
    running oscillator beats against the sensor timing. RANDOM_PER_FRAME
    draws a fresh uniform phase for each frame, for rigs where capture
    timing is uncorrelated with the disturbance.
    """

    CONTINUOUS = "continuous"
    RANDOM_PER_FRAME = "random_per_frame"


@dataclass(frozen=True)
class SensorConfig:
    width: int = 1280
    active_rows: int = 800
    optical_black_rows: int = 0
    blanking_rows: int = 12
    fps: float = 30.0
    bit_depth: int = 8           # fixed at 8 for now
    pedestal_dn: float = 16.0    # keeps negative excursions off the 0 clamp
    dn_per_volt: float = MAX_DN / 3.3
    channels: int = 1

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")
        if self.active_rows < 1:
            raise ValueError(f"active_rows must be >= 1, got {self.active_rows}")
        if self.optical_black_rows < 0:
            raise ValueError("optical_black_rows must be >= 0")
        if self.blanking_rows < 0:
            raise ValueError("blanking_rows must be >= 0")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.bit_depth != 8:
            raise ValueError(f"only bit_depth 8 is supported, got {self.bit_depth}")
        if not 0 <= self.pedestal_dn <= MAX_DN:
            raise ValueError(f"pedestal_dn must be in [0, {MAX_DN}], got {self.pedestal_dn}")
        if self.dn_per_volt <= 0:
            raise ValueError(f"dn_per_volt must be positive, got {self.dn_per_volt}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def readout_rows(self) -> int:
        """Rows that produce pixels: active plus optical black."""
        return self.active_rows + self.optical_black_rows

    @property
    def frame_length_rows(self) -> int:
        """Total row periods per frame, blanking included."""
        return self.active_rows + self.optical_black_rows + self.blanking_rows

    @property
    def line_frequency_hz(self) -> float:
        return physics.line_frequency(self.fps, self.frame_length_rows)


@dataclass(frozen=True)
class SupplyNoiseConfig:
    frequency_hz: float = 0.0
    amplitude_vpp: float = 0.0
    phase_rad: float = 0.0
    coupling_gain: float = 1.0
    phase_mode: PhaseMode = PhaseMode.CONTINUOUS
    rc_cutoff_hz: float | None = None  # first-order low-pass ahead of the rail

    def __post_init__(self) -> None:
        if self.frequency_hz < 0:
            raise ValueError(f"frequency_hz must be >= 0, got {self.frequency_hz}")
        if self.amplitude_vpp < 0:
            raise ValueError(f"amplitude_vpp must be >= 0, got {self.amplitude_vpp}")
        if self.rc_cutoff_hz is not None and self.rc_cutoff_hz <= 0:
            raise ValueError(f"rc_cutoff_hz must be positive, got {self.rc_cutoff_hz}")
        if not isinstance(self.phase_mode, PhaseMode):
            object.__setattr__(self, "phase_mode", PhaseMode(self.phase_mode))


@dataclass(frozen=True)
class TemporalNoiseConfig:
    shot_enabled: bool = False
    dark_signal_e: float = 0.0
    read_noise_dn: float = 0.0
    flicker_enabled: bool = False
    flicker_scale_dn: float = 0.0
    reset_enabled: bool = False
    reset_temp_k: float = 300.0
    reset_cap_f: float = 5e-15
    cds_enabled: bool = False

    def __post_init__(self) -> None:
        if self.dark_signal_e < 0:
            raise ValueError(f"dark_signal_e must be >= 0, got {self.dark_signal_e}")
        if self.read_noise_dn < 0:
            raise ValueError(f"read_noise_dn must be >= 0, got {self.read_noise_dn}")
        if self.flicker_scale_dn < 0:
            raise ValueError(f"flicker_scale_dn must be >= 0, got {self.flicker_scale_dn}")
        if self.reset_temp_k <= 0:
            raise ValueError(f"reset_temp_k must be positive, got {self.reset_temp_k}")
        if self.reset_cap_f <= 0:
            raise ValueError(f"reset_cap_f must be positive, got {self.reset_cap_f}")


@dataclass(frozen=True)
class SpatialNoiseConfig:
    dsnu_dn: float = 0.0        # per-pixel offset sigma, frozen per seed
    column_fpn_dn: float = 0.0  # per-column offset sigma, constant down rows
    prnu_fraction: float = 0.0  # gain sigma; multiplies photo signal only

    def __post_init__(self) -> None:
        if self.dsnu_dn < 0:
            raise ValueError(f"dsnu_dn must be >= 0, got {self.dsnu_dn}")
        if self.column_fpn_dn < 0:
            raise ValueError(f"column_fpn_dn must be >= 0, got {self.column_fpn_dn}")
        if self.prnu_fraction < 0:
            raise ValueError(f"prnu_fraction must be >= 0, got {self.prnu_fraction}")


@dataclass(frozen=True)
class SimScenario:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    supply: SupplyNoiseConfig = field(default_factory=SupplyNoiseConfig)
    temporal: TemporalNoiseConfig = field(default_factory=TemporalNoiseConfig)
    spatial: SpatialNoiseConfig = field(default_factory=SpatialNoiseConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")

    def digest(self) -> str:
        """Stable short hash of the fully resolved scenario."""
        blob = scenario_to_json(self).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Frame:
    """One simulated or loaded capture, channel-major uint8."""

    pixels: np.ndarray  # (channels, rows, width)
    frame_index: int = 0
    scenario_digest: str = ""
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3:
            raise ValueError(f"pixels must be (channels, rows, width), got {self.pixels.shape}")
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")

    @property
    def channels(self) -> int:
        return self.pixels.shape[0]

    @property
    def rows(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class FpnMaps:
    pixel_offset_dn: np.ndarray  # (channels, rows, width)
    column_offset_dn: np.ndarray  # (channels, width), broadcast down rows
    prnu_gain: np.ndarray        # (channels, rows, width), mean 1


def _stream(seed: int, *key: int) -> np.random.Generator:
    # Philox is counter-based; SeedSequence spawn keys give stable,
    # collision-free substreams for (frame, tag) addressing.
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def rc_attenuation(freq_hz: float, cutoff_hz: float | None) -> tuple[float, float]:
    """First-order low-pass response: (gain, phase shift in rad)."""
    if cutoff_hz is None or freq_hz == 0.0:
        return 1.0, 0.0
    ratio = freq_hz / cutoff_hz
    return 1.0 / math.sqrt(1.0 + ratio * ratio), -math.atan(ratio)


def supply_noise_sample(supply: SupplyNoiseConfig, t, extra_phase_rad: float = 0.0):
    """Rail disturbance voltage at time t (scalar or array).

    Sinusoid of peak amplitude_vpp/2, attenuated and phase-lagged by the
    optional RC filter. extra_phase_rad carries the per-frame random
    phase in RANDOM_PER_FRAME mode.
    """
    gain, phase_lag = rc_attenuation(supply.frequency_hz, supply.rc_cutoff_hz)
    amplitude = 0.5 * supply.amplitude_vpp * gain
    arg = (
        2.0 * math.pi * supply.frequency_hz * np.asarray(t, dtype=np.float64)
        + supply.phase_rad
        + phase_lag
        + extra_phase_rad
    )
    return amplitude * np.sin(arg)


def pink_noise(n: int, rng: np.random.Generator, octaves: int = 16) -> np.ndarray:
    """1/f noise by multi-rate summation.

    Octave k holds a white sample for 2**k outputs; the sum over octaves
    has a power density sloping at about -1 per decade across the band
    the octave count spans. Output is scaled to roughly unit variance.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if octaves < 1:
        raise ValueError(f"octaves must be >= 1, got {octaves}")
    total = np.zeros(n, dtype=np.float64)
    for k in range(octaves):
        step = 1 << k
        draws = rng.standard_normal((n + step - 1) // step)
        total += np.repeat(draws, step)[:n]
    return total / math.sqrt(octaves)


def quantize_dn(analog: np.ndarray) -> np.ndarray:
    """Round half away from zero, clamp to [0, MAX_DN], cast to uint8."""
    a = np.asarray(analog, dtype=np.float64)
    rounded = np.sign(a) * np.floor(np.abs(a) + 0.5)
    return np.clip(rounded, 0, MAX_DN).astype(np.uint8)


def generate_fpn_maps(seed: int, sensor: SensorConfig, spatial: SpatialNoiseConfig) -> FpnMaps:
    """Frozen non-uniformity maps for one seed. Frame-independent."""
    shape = (sensor.channels, sensor.readout_rows, sensor.width)
    pixel = _stream(seed, _TAG_FPN_PIXEL).standard_normal(shape) * spatial.dsnu_dn
    column = (
        _stream(seed, _TAG_FPN_COLUMN).standard_normal((sensor.channels, sensor.width))
        * spatial.column_fpn_dn
    )
    prnu = 1.0 + _stream(seed, _TAG_FPN_PRNU).standard_normal(shape) * spatial.prnu_fraction
    return FpnMaps(pixel_offset_dn=pixel, column_offset_dn=column, prnu_gain=prnu)


def _frame_phase(scenario: SimScenario, frame_index: int) -> tuple[np.ndarray, float]:
    """Row sample times plus any per-frame phase draw."""
    sensor = scenario.sensor
    rows = np.arange(sensor.readout_rows, dtype=np.float64)
    if scenario.supply.phase_mode is PhaseMode.RANDOM_PER_FRAME:
        t = rows / sensor.line_frequency_hz
        extra = float(
            _stream(scenario.seed, frame_index, _TAG_PHASE).uniform(0.0, 2.0 * math.pi)
        )
        return t, extra
    t = frame_index / sensor.fps + rows / sensor.line_frequency_hz
    return t, 0.0


def row_supply_offsets_dn(scenario: SimScenario, frame_index: int) -> np.ndarray:
    """Per-row DN offset injected by the supply disturbance, pre-quantization."""
    if frame_index < 0:
        raise ValueError(f"frame_index must be >= 0, got {frame_index}")
    t, extra = _frame_phase(scenario, frame_index)
    volts = supply_noise_sample(scenario.supply, t, extra_phase_rad=extra)
    return scenario.supply.coupling_gain * scenario.sensor.dn_per_volt * volts


def simulate_frame_analog(
    scenario: SimScenario, frame_index: int, fpn: FpnMaps | None = None
) -> np.ndarray:
    """Analog pixel values before quantization, float64 (channels, rows, width)."""
    sensor = scenario.sensor
    temporal = scenario.temporal
    if fpn is None:
        fpn = generate_fpn_maps(scenario.seed, sensor, scenario.spatial)

    shape = (sensor.channels, sensor.readout_rows, sensor.width)
    offsets = row_supply_offsets_dn(scenario, frame_index)
    analog = np.broadcast_to(
        sensor.pedestal_dn + offsets[None, :, None], shape
    ).astype(np.float64)

    if temporal.shot_enabled and temporal.dark_signal_e > 0:
        dark = _stream(scenario.seed, frame_index, _TAG_SHOT).poisson(
            temporal.dark_signal_e, shape
        )
        analog = analog + dark  # 1 DN per electron
    if temporal.read_noise_dn > 0:
        analog = analog + _stream(scenario.seed, frame_index, _TAG_READ).normal(
            0.0, temporal.read_noise_dn, shape
        )
    if temporal.reset_enabled and not temporal.cds_enabled:
        sigma = (
            physics.reset_noise_v(temporal.reset_temp_k, temporal.reset_cap_f)
            * sensor.dn_per_volt
        )
        analog = analog + _stream(scenario.seed, frame_index, _TAG_RESET).normal(
            0.0, sigma, shape
        )
    if temporal.flicker_enabled and temporal.flicker_scale_dn > 0:
        series = pink_noise(
            sensor.channels * sensor.readout_rows * sensor.width,
            _stream(scenario.seed, frame_index, _TAG_FLICKER),
        )
        analog = analog + temporal.flicker_scale_dn * series.reshape(shape)

    analog = analog + fpn.pixel_offset_dn + fpn.column_offset_dn[:, None, :]
    # prnu_gain would multiply photo signal here; illumination is fixed
    # at 0 lux, so there is none.
    return analog


def simulate_frame(
    scenario: SimScenario, frame_index: int, fpn: FpnMaps | None = None
) -> Frame:
    """Quantized capture of one frame."""
    analog = simulate_frame_analog(scenario, frame_index, fpn)
    return Frame(
        pixels=quantize_dn(analog),
        frame_index=frame_index,
        scenario_digest=scenario.digest(),
        seed=scenario.seed,
    )


def simulate_stack(scenario: SimScenario, n_frames: int) -> list[Frame]:
    """n_frames consecutive captures sharing one set of FPN maps."""
    if n_frames < 1:
        raise ValueError(f"n_frames must be >= 1, got {n_frames}")
    fpn = generate_fpn_maps(scenario.seed, scenario.sensor, scenario.spatial)
    return [simulate_frame(scenario, i, fpn) for i in range(n_frames)]


def scenario_to_json(scenario: SimScenario) -> str:
    """Serialize to a stable JSON document mirroring the config fields."""
    doc = asdict(scenario)
    doc["supply"]["phase_mode"] = scenario.supply.phase_mode.value
    return json.dumps(doc, sort_keys=True)


def scenario_from_json(text: str) -> SimScenario:
    """Inverse of scenario_to_json. Missing fields take their defaults."""
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("scenario document must be a JSON object")
    known = {"sensor", "supply", "temporal", "spatial", "seed"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")

    def build(cls, key):
        section = doc.get(key, {})
        if not isinstance(section, dict):
            raise ValueError(f"scenario section {key!r} must be an object")
        try:
            return cls(**section)
        except TypeError as exc:
            raise ValueError(f"bad scenario section {key!r}: {exc}") from exc

    return SimScenario(
        sensor=build(SensorConfig, "sensor"),
        supply=build(SupplyNoiseConfig, "supply"),
        temporal=build(TemporalNoiseConfig, "temporal"),
        spatial=build(SpatialNoiseConfig, "spatial"),
        seed=int(doc.get("seed", 0)),
    )
