"""Pipeline configuration: nested dataclasses loaded from YAML."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml


@dataclass
class InitConfig:
    kind: str = "sine"
    amplitude: float = 1.0
    modes: int = 1
    center: float = 0.5
    width: float = 0.1
    offset: float = 0.0
    # add the linear interpolant of the boundary values
    ramp: bool = False


@dataclass
class ForcingConfig:
    kind: str = "none"
    amplitude: float = 0.0
    frequency: float = 1.0
    offset: float = 0.0
    side: str = "right"


@dataclass
class FomConfig:
    kind: str = "viscous_burgers"
    n_x: int = 128
    domain: tuple = (0.0, 1.0)
    diffusivity: float = 0.1
    bc: tuple = (0.0, 0.0)
    init: InitConfig = field(default_factory=InitConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    t_final: float = 1.0
    # None picks half the RK4 stability estimate, rounded to hit save times
    dt: Optional[float] = None
    n_saves: int = 200


@dataclass
class LiftingConfig:
    kind: str = "identity"


@dataclass
class PodConfig:
    r: Optional[int] = None
    # used to choose r when r is None: smallest rank with eta_r >= energy
    energy: float = 0.999
    method: str = "thin_svd"
    n_singular: Optional[int] = None
    oversample: int = 10
    power_iters: int = 2
    center_scale: bool = True


@dataclass
class OpinfConfig:
    linear: bool = True
    quadratic: bool = True
    constant: bool = True
    input: bool = False
    gamma1: float = 0.0
    gamma2: float = 0.0
    train_fraction: float = 0.6


@dataclass
class RomConfig:
    scheme: str = "rk2_heun"
    # integrator steps per snapshot interval
    substeps: int = 4
    t_end: Optional[float] = None


@dataclass
class TuningConfig:
    enabled: bool = False
    gamma1_bounds: tuple = (1.0, 1e7)
    gamma1_count: int = 15
    gamma2_bounds: tuple = (1e10, 1e18)
    gamma2_count: int = 9
    growth_factor: float = 1.2
    # trial integration runs this far past the prediction end time
    trial_extension: float = 0.0


@dataclass
class EvaluateConfig:
    variable: Optional[str] = None
    probes: list = field(default_factory=lambda: [0])


@dataclass
class IoConfig:
    out_dir: str = "out"
    format: str = "binary"


@dataclass
class PipelineConfig:
    seed: int = 0
    fom: FomConfig = field(default_factory=FomConfig)
    lifting: LiftingConfig = field(default_factory=LiftingConfig)
    pod: PodConfig = field(default_factory=PodConfig)
    opinf: OpinfConfig = field(default_factory=OpinfConfig)
    rom: RomConfig = field(default_factory=RomConfig)
    tuning: TuningConfig = field(default_factory=TuningConfig)
    evaluate: EvaluateConfig = field(default_factory=EvaluateConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        return clean(dataclasses.asdict(self))

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


class ConfigError(ValueError):
    pass


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown key {where}.{key}")
        default = fields[key].default_factory() if fields[key].default_factory \
            is not dataclasses.MISSING else fields[key].default
        if dataclasses.is_dataclass(default):
            kwargs[key] = _build(type(default), value, f"{where}.{key}")
        elif isinstance(default, tuple):
            if not isinstance(value, (list, tuple)) or len(value) != len(default):
                raise ConfigError(f"{where}.{key} must be a list of {len(default)} numbers")
            kwargs[key] = tuple(float(v) for v in value)
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{where}.{key} must be true or false")
            kwargs[key] = value
        elif isinstance(default, float) and value is not None:
            kwargs[key] = float(value)
        elif isinstance(default, int) and value is not None:
            if float(value) != int(value):
                raise ConfigError(f"{where}.{key} must be an integer")
            kwargs[key] = int(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def load_config(path=None, overrides=None) -> PipelineConfig:
    """Read a YAML pipeline config; ``overrides`` maps dotted keys to values."""
    data = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        try:
            data = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for dotted, value in (overrides or {}).items():
        node = data
        *parents, leaf = dotted.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    cfg = _build(PipelineConfig, data, "config")
    validate(cfg)
    return cfg


def validate(cfg: PipelineConfig) -> None:
    if not 0 < cfg.opinf.train_fraction <= 1:
        raise ConfigError("opinf.train_fraction must lie in (0, 1]")
    if cfg.pod.r is not None and cfg.pod.r < 1:
        raise ConfigError("pod.r must be positive")
    if not 0 < cfg.pod.energy <= 1:
        raise ConfigError("pod.energy must lie in (0, 1]")
    if cfg.rom.substeps < 1:
        raise ConfigError("rom.substeps must be positive")
    if cfg.fom.n_saves < 2:
        raise ConfigError("fom.n_saves must be at least 2")
    if cfg.io.format not in ("binary", "csv"):
        raise ConfigError("io.format must be 'binary' or 'csv'")
    if cfg.opinf.input and cfg.fom.forcing.kind == "none":
        raise ConfigError("opinf.input requires a fom.forcing signal")
