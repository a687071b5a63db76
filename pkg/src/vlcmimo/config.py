"""Declarative experiment configuration: strict loading, defaults, presets.

Configs are YAML (or JSON) mappings mirroring the dataclasses below.  Unknown
keys are rejected and every physical range is validated before any
computation starts.  Named presets reproduce the standard experiment setups.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channel import GeometryError, RoomLayout, square_grid_layout
from .noise import NoiseParams

__all__ = [
    "ConfigError",
    "DetectorConfig",
    "LayoutConfig",
    "NoiseConfig",
    "SweepConfig",
    "CsiConfig",
    "MobilityConfig",
    "MonteCarloConfig",
    "ExperimentConfig",
    "load_config",
    "config_from_dict",
    "preset",
    "PRESET_NAMES",
]


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


@dataclass(frozen=True)
class DetectorConfig:
    area_m2: float = 1e-4
    fov_deg: float = 60.0
    responsivity_a_per_w: float = 1.0
    refractive_index: float = 1.5
    filter_gain: float = 1.0


@dataclass(frozen=True)
class LayoutConfig:
    room_x_m: float = 4.0
    room_y_m: float = 4.0
    room_z_m: float = 3.0
    receiver_plane_z_m: float = 0.75
    luminaire_z_m: float | None = None
    n_links: int = 4
    spacing_m: float = 1.0
    semi_angle_deg: float = 15.0
    leds_per_luminaire: int = 3600
    power_per_led_w: float = 0.010
    detector: DetectorConfig = field(default_factory=DetectorConfig)


@dataclass(frozen=True)
class NoiseConfig:
    mode: str = "swept"
    bandwidth_hz: float = 100e6
    background_current_a: float = 100e-6
    noise_bandwidth_factor_i2: float = 0.562
    noise_bandwidth_factor_i3: float = 0.0868
    temperature_k: float = 295.0
    open_loop_gain: float = 10.0
    capacitance_per_area_f_m2: float = 1.12e-6
    fet_noise_factor: float = 1.5
    fet_transconductance_s: float = 30e-3

    def __post_init__(self):
        if self.mode not in ("swept", "physical"):
            raise ConfigError(f"noise.mode must be swept or physical, got {self.mode!r}")

    def params(self) -> NoiseParams:
        return NoiseParams(
            bandwidth=self.bandwidth_hz,
            i_bg=self.background_current_a,
            i2=self.noise_bandwidth_factor_i2,
            i3=self.noise_bandwidth_factor_i3,
            temperature=self.temperature_k,
            open_loop_gain=self.open_loop_gain,
            capacitance_per_area=self.capacitance_per_area_f_m2,
            fet_noise_factor=self.fet_noise_factor,
            fet_transconductance=self.fet_transconductance_s,
        )


@dataclass(frozen=True)
class SweepConfig:
    snr_start_db: float = 70.0
    snr_stop_db: float = 130.0
    snr_step_db: float = 2.0

    def __post_init__(self):
        if self.snr_step_db <= 0.0:
            raise ConfigError("sweep.snr_step_db must be positive")
        if self.snr_stop_db < self.snr_start_db:
            raise ConfigError("sweep.snr_stop_db must be >= snr_start_db")

    def points(self) -> tuple[float, ...]:
        n = int(round((self.snr_stop_db - self.snr_start_db) / self.snr_step_db)) + 1
        return tuple(self.snr_start_db + i * self.snr_step_db for i in range(n))


@dataclass(frozen=True)
class CsiConfig:
    mode: str = "perfect"
    model: str = "uniform"
    mobile_user: int = 0
    worst_case_sign: str = "pessimistic"

    def __post_init__(self):
        if self.mode not in ("perfect", "outdated"):
            raise ConfigError(f"csi.mode must be perfect or outdated, got {self.mode!r}")
        if self.model not in ("uniform", "worst_case"):
            raise ConfigError(f"csi.model must be uniform or worst_case, got {self.model!r}")
        if self.worst_case_sign not in ("pessimistic", "plus", "minus"):
            raise ConfigError(f"unknown csi.worst_case_sign {self.worst_case_sign!r}")
        if self.mobile_user < 0:
            raise ConfigError("csi.mobile_user must be >= 0")


@dataclass(frozen=True)
class MobilityConfig:
    """Horizontal move of the mobile user relative to its luminaire axis."""

    start_xy_m: tuple[float, float] = (0.0, 0.0)
    speed_mps: float = 1.0
    direction: tuple[float, float] = (1.0, 0.0)
    elapsed_times_s: tuple[float, ...] = (0.02, 0.1, 0.3)

    def __post_init__(self):
        if self.speed_mps < 0.0:
            raise ConfigError("mobility.speed_mps must be nonnegative")
        if any(t <= 0.0 for t in self.elapsed_times_s):
            raise ConfigError("mobility.elapsed_times_s must be positive")
        if not any(self.direction):
            raise ConfigError("mobility.direction must be a nonzero vector")
        object.__setattr__(self, "start_xy_m", tuple(float(c) for c in self.start_xy_m))
        norm = float(np.hypot(*self.direction))
        object.__setattr__(self, "direction",
                           tuple(float(c) / norm for c in self.direction))
        object.__setattr__(self, "elapsed_times_s",
                           tuple(float(t) for t in self.elapsed_times_s))

    def end_xy(self, elapsed_s: float) -> tuple[float, float]:
        dist = self.speed_mps * elapsed_s
        return (self.start_xy_m[0] + dist * self.direction[0],
                self.start_xy_m[1] + dist * self.direction[1])


@dataclass(frozen=True)
class MonteCarloConfig:
    n_symbols: int = 2_000_000
    early_stop_errors: int | None = None
    block_size: int = 65536

    def __post_init__(self):
        if self.n_symbols < 1:
            raise ConfigError("montecarlo.n_symbols must be >= 1")
        if self.early_stop_errors is not None and self.early_stop_errors < 100:
            raise ConfigError("montecarlo.early_stop_errors must be >= 100 when set")
        if self.block_size < 1:
            raise ConfigError("montecarlo.block_size must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    seed: int = 20260810
    schemes: tuple[str, ...] = ("ci", "oap")
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    csi: CsiConfig = field(default_factory=CsiConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    montecarlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    spacings_m: tuple[float, ...] | None = None
    semi_angles_deg: tuple[float, ...] | None = None
    mimo_orders: tuple[int, ...] | None = None
    map_resolution_m: float = 0.05
    renormalize_oap: bool = False

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        bad = [s for s in self.schemes if s not in ("ci", "oap")]
        if bad:
            raise ConfigError(f"unknown schemes {bad}; valid: ci, oap")
        if self.map_resolution_m <= 0.0:
            raise ConfigError("map_resolution_m must be positive")
        object.__setattr__(self, "schemes", tuple(self.schemes))

    def variants(self):
        """Cartesian product of the configured sweep axes (order, spacing, angle)."""
        orders = self.mimo_orders or (self.layout.n_links,)
        spacings = self.spacings_m or (self.layout.spacing_m,)
        angles = self.semi_angles_deg or (self.layout.semi_angle_deg,)
        for n in orders:
            for sp in spacings:
                for ang in angles:
                    yield int(n), float(sp), float(ang)

    def build_layout(self, n_links=None, spacing=None, semi_angle=None) -> RoomLayout:
        lay = self.layout
        det = lay.detector
        try:
            return square_grid_layout(
                n_links=n_links if n_links is not None else lay.n_links,
                spacing=spacing if spacing is not None else lay.spacing_m,
                room=(lay.room_x_m, lay.room_y_m, lay.room_z_m),
                receiver_plane_z=lay.receiver_plane_z_m,
                luminaire_z=lay.luminaire_z_m,
                semi_angle_half_power=semi_angle if semi_angle is not None else lay.semi_angle_deg,
                leds_per_luminaire=lay.leds_per_luminaire,
                power_per_led=lay.power_per_led_w,
                detector_area=det.area_m2,
                fov=det.fov_deg,
                responsivity=det.responsivity_a_per_w,
                refractive_index=det.refractive_index,
                filter_gain=det.filter_gain,
            )
        except GeometryError as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self):
        """Construct every variant layout so impossible geometry fails early."""
        for n, sp, ang in self.variants():
            self.build_layout(n_links=n, spacing=sp, semi_angle=ang)
        try:
            self.noise.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def resolved(self) -> dict:
        """Every parameter, defaults included, as a plain JSON-safe mapping."""
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _from_dict(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; valid keys: {sorted(names)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        target = hints.get(f.name)
        if dataclasses.is_dataclass(target):
            kwargs[f.name] = _from_dict(target, value, f"{path}.{f.name}")
        elif isinstance(value, list):
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    return _from_dict(ExperimentConfig, data, "config").validate()


def load_config(path) -> ExperimentConfig:
    """Load a YAML or JSON experiment config from disk."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{p}: cannot parse: {exc}") from exc
    if data is None:
        data = {}
    return config_from_dict(data)


# Named experiment presets.  The channel-map presets keep a narrow-field
# concentrator that shows the per-luminaire coverage lobes; the link
# experiments use a wide-field detector so that neighboring luminaires stay
# inside the field of view and inter-channel coupling is present at every
# configured spacing.
_BER_DETECTOR = {"fov_deg": 60.0}
_MAP_DETECTOR = {"fov_deg": 15.0}

_PRESETS: dict[str, dict] = {
    "fig3a": {
        "name": "fig3a",
        "layout": {"n_links": 4, "spacing_m": 0.5, "detector": _MAP_DETECTOR},
        "map_resolution_m": 0.05,
    },
    "fig3b": {
        "name": "fig3b",
        "layout": {"n_links": 4, "spacing_m": 1.0, "detector": _MAP_DETECTOR},
        "map_resolution_m": 0.05,
    },
    "fig3c": {
        "name": "fig3c",
        "layout": {"n_links": 4, "spacing_m": 2.0, "detector": _MAP_DETECTOR},
        "map_resolution_m": 0.05,
    },
    "fig4": {
        "name": "fig4",
        "layout": {"n_links": 4, "detector": _BER_DETECTOR},
        "spacings_m": [0.25, 0.5, 1.0],
        "sweep": {"snr_start_db": 70.0, "snr_stop_db": 130.0, "snr_step_db": 2.0},
    },
    "fig5": {
        "name": "fig5",
        "layout": {"n_links": 4, "spacing_m": 1.0, "detector": _BER_DETECTOR},
        "semi_angles_deg": [15.0, 30.0, 45.0],
        "sweep": {"snr_start_db": 70.0, "snr_stop_db": 140.0, "snr_step_db": 2.0},
    },
    "fig6": {
        "name": "fig6",
        "layout": {"n_links": 4, "spacing_m": 1.0, "detector": _BER_DETECTOR},
        "csi": {"mode": "outdated", "model": "uniform", "mobile_user": 0},
        "mobility": {"speed_mps": 1.0, "elapsed_times_s": [0.02, 0.1, 0.3]},
        "sweep": {"snr_start_db": 70.0, "snr_stop_db": 110.0, "snr_step_db": 2.0},
    },
    "fig7": {
        "name": "fig7",
        "layout": {"n_links": 4, "spacing_m": 0.25, "detector": _BER_DETECTOR},
        "mimo_orders": [2, 4, 8],
        "sweep": {"snr_start_db": 80.0, "snr_stop_db": 150.0, "snr_step_db": 2.0},
    },
    "fig8": {
        "name": "fig8",
        "layout": {"n_links": 4, "spacing_m": 0.25, "detector": _BER_DETECTOR},
        "mimo_orders": [2, 4, 8],
        "sweep": {"snr_start_db": 60.0, "snr_stop_db": 120.0, "snr_step_db": 5.0},
    },
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> ExperimentConfig:
    """Named experiment setup; see PRESET_NAMES."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    return config_from_dict(copy.deepcopy(_PRESETS[name]))
