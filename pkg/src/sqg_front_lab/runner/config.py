"""Experiment configuration: YAML in, validated pydantic models out.

Schema (every key optional; omitted keys take the preset default)::

    preset: mass
    seed: 0
    grid:        {n, box_length}
    initial:     {profile, amplitude, width, center, wavenumber}
    v_initial:   same keys as ``initial`` or null
    sim:         {dt, t_end, retained_fraction, cfl, margin, nonlinear,
                  snapshot_every, diag_every}
    quadrature:  {y_min, y_max, ratio, h_max, tail_ratio}   # field mesh, null = grid default
    symbols:     {y_max}                                     # symbol mesh radius
    norms:       {s, s0, delta, delta_B, regime}
    para:        {M}
    packets:     {lam, velocities, t_min, residual_window, fit_windows}
    probes:      {eps_list, dt_levels, t_check, trials}
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..diagnostics import NormParams
from ..evolution import InitialData, SimConfig
from ..nonlocal_ops import QuadratureMesh
from ..packets import PacketParams
from ..paradiff import ParaParams
from ..spectral import Grid1D


class ConfigError(ValueError):
    pass


class ConfigNotFoundError(ConfigError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"config file not found: {path}")


class ConfigSchemaError(ConfigError):
    def __init__(self, path, detail: str):
        self.path = str(path)
        super().__init__(f"{path}: {detail}")


class UnknownConfigKeyError(ConfigError):
    def __init__(self, path, key: str):
        self.path = str(path)
        self.key = key
        super().__init__(f"{path}: unknown key {key!r}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class GridModel(_Strict):
    n: int = 1024
    box_length: float = 200.0


class InitialModel(_Strict):
    profile: Literal["gaussian", "packet", "zero"] = "gaussian"
    amplitude: float = 0.05
    width: float = Field(2.0, gt=0)
    center: float = 0.0
    wavenumber: float = 0.0


class SimModel(_Strict):
    dt: float = Field(0.01, gt=0)
    t_end: float = Field(20.0, ge=0)
    retained_fraction: float = Field(0.5, gt=0, le=2 / 3)
    cfl: float = Field(0.5, gt=0)
    margin: float = Field(0.05, gt=0, lt=1)
    nonlinear: bool = True
    snapshot_every: Optional[float] = Field(1.0, gt=0)
    diag_every: Optional[float] = Field(1.0, gt=0)


class QuadratureModel(_Strict):
    y_min: Optional[float] = Field(None, gt=0)
    y_max: Optional[float] = Field(None, gt=0)
    ratio: float = Field(1.08, gt=1)
    h_max: Optional[float] = Field(None, gt=0)
    tail_ratio: Optional[float] = Field(1.04, gt=1)


class SymbolModel(_Strict):
    y_max: float = Field(1e4, gt=0)


class NormModel(_Strict):
    s: float = 3.5
    s0: float = 0.5
    delta: float = 0.1
    delta_B: float = 0.05
    regime: Literal["global", "local"] = "global"


class ParaModel(_Strict):
    M: Optional[float] = Field(None, gt=0)


class PacketModel(_Strict):
    lam: float = Field(1.0, gt=0)
    velocities: list[float] = [-2.0]
    t_min: Optional[float] = None
    residual_window: tuple[float, float] = (10.0, 50.0)
    fit_windows: tuple[tuple[float, float], tuple[float, float]] = ((5.0, 20.0), (20.0, 50.0))


class ProbeModel(_Strict):
    eps_list: list[float] = [1e-2, 5e-3, 2.5e-3]
    dt_levels: list[float] = [0.01, 0.005, 0.0025]
    t_check: float = Field(2.0, gt=0)
    trials: int = Field(3, ge=1)


class ExperimentConfig(_Strict):
    preset: str = "mass"
    seed: int = 0
    grid: GridModel = GridModel()
    initial: InitialModel = InitialModel()
    v_initial: Optional[InitialModel] = None
    sim: SimModel = SimModel()
    quadrature: QuadratureModel = QuadratureModel()
    symbols: SymbolModel = SymbolModel()
    norms: NormModel = NormModel()
    para: ParaModel = ParaModel()
    packets: PacketModel = PacketModel()
    probes: ProbeModel = ProbeModel()

    @field_validator("preset")
    @classmethod
    def _known(cls, v):
        from .presets import PRESETS

        if v not in PRESETS:
            raise ValueError(f"unknown preset {v!r}; choose from {sorted(PRESETS)}")
        return v

    # builders for the numerical layer

    def build_grid(self) -> Grid1D:
        return Grid1D(self.grid.n, self.grid.box_length)

    def build_mesh(self, grid: Grid1D | None = None) -> QuadratureMesh:
        grid = grid or self.build_grid()
        q = self.quadrature
        return QuadratureMesh.graded(
            grid.dx / 4 if q.y_min is None else q.y_min,
            grid.box_length / 2 if q.y_max is None else q.y_max,
            ratio=q.ratio, h_max=grid.dx / 2 if q.h_max is None else q.h_max,
            tail_ratio=q.tail_ratio)

    def build_symbol_mesh(self) -> QuadratureMesh:
        return QuadratureMesh.for_symbols(self.symbols.y_max)

    def build_norms(self) -> NormParams:
        return NormParams(**self.norms.model_dump())

    def build_para(self) -> ParaParams:
        return ParaParams(self.para.M)

    def build_packets(self) -> PacketParams:
        p = self.packets
        return PacketParams(p.lam, tuple(p.velocities), p.t_min)

    def build_sim(self, dt: float | None = None) -> SimConfig:
        grid = self.build_grid()
        s = self.sim
        snaps = ()
        if s.snapshot_every:
            k = int(np.floor(s.t_end / s.snapshot_every + 1e-9))
            snaps = tuple(round(i * s.snapshot_every, 12) for i in range(k + 1))
        return SimConfig(
            grid=grid, dt=s.dt if dt is None else dt, t_end=s.t_end,
            initial=InitialData(**self.initial.model_dump()),
            v_initial=None if self.v_initial is None else InitialData(**self.v_initial.model_dump()),
            mesh=self.build_mesh(grid), retained_fraction=s.retained_fraction,
            snapshot_times=snaps, diag_every=s.diag_every, cfl=s.cfl, margin=s.margin,
            nonlinear=s.nonlinear, norm_params=self.build_norms(), para=self.build_para())


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _dotted(loc) -> str:
    return ".".join(str(p) for p in loc)


def from_mapping(data: dict | None, preset: str | None = None, source="<mapping>") -> ExperimentConfig:
    """Validate ``data`` layered over the defaults of ``preset`` (or ``data['preset']``)."""
    from .presets import PRESETS

    data = dict(data or {})
    name = preset or data.get("preset") or ExperimentConfig.model_fields["preset"].default
    if name not in PRESETS:
        raise ConfigSchemaError(source, f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    merged = _deep_merge(PRESETS[name].defaults, data)
    merged["preset"] = name
    try:
        return ExperimentConfig.model_validate(merged)
    except ValidationError as exc:
        for err in exc.errors():
            if err["type"] == "extra_forbidden":
                raise UnknownConfigKeyError(source, _dotted(err["loc"])) from None
        first = exc.errors()[0]
        raise ConfigSchemaError(source, f"{_dotted(first['loc'])}: {first['msg']}") from None


def parse_config(path, preset: str | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigNotFoundError(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigSchemaError(path, f"invalid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigSchemaError(path, "top level must be a mapping")
    return from_mapping(data, preset, source=path)


def dump_config(cfg: ExperimentConfig) -> str:
    """Fully defaulted YAML echo of ``cfg``."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=True, default_flow_style=False)
