"""
JSON run configuration.

One document with the sections ``link``, ``loss``, ``search``, ``system``,
``traffic`` and ``output``. Every section is optional and falls back to the
library defaults; unknown keys anywhere are rejected. Relative paths are
resolved against the directory holding the config file.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any

from .link_models import (
    DEFAULT_ER_MODEL,
    ErModel,
    FilterModel,
    LinkConfig,
    PenaltyModel,
    SensitivityModel,
)
from .loss_map import COMPOSITIONS, PROPAGATION_ONLY, IlMatrix, LossParams, build_il_matrix, calibrated_layout, load_il_matrix
from .metrics import LaserModel, OverheadModel, ThermalModel
from .optimizer import STRATEGIES, SearchSpace
from .sim import LinkModels, SystemConfig
from .traffic import SystemDims, TrafficSpec

SECTIONS = ("link", "loss", "search", "system", "traffic", "output")
OUTPUT_FORMATS = ("json", "csv")


class ConfigError(ValueError):
    pass


def _check_keys(data: Any, allowed, where: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    return data


def _build(cls, data: dict, where: str, skip=()):
    names = [f.name for f in dataclasses.fields(cls) if f.name not in skip]
    _check_keys(data, names, where)
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class LayoutSpec:
    n_gis: int | None = None
    min_il_db: float = 0.47
    max_il_db: float = 10.0
    n_rows: int = 10
    pitch_cm: float = 0.2


@dataclass(frozen=True)
class RunConfig:
    link_template: LinkConfig = LinkConfig()
    penalty_model: PenaltyModel = PenaltyModel()
    sens_model: SensitivityModel = SensitivityModel()
    p_max_dbm: float = 20.0
    loss_params: LossParams = LossParams()
    composition: str = PROPAGATION_ONLY
    il_matrix_path: str | None = None
    layout: LayoutSpec = LayoutSpec()
    space: SearchSpace = SearchSpace()
    strategy: str = "pp_optimal"
    system: SystemConfig = SystemConfig()
    overhead: OverheadModel = field(default_factory=OverheadModel)
    thermal: ThermalModel = ThermalModel()
    laser: LaserModel = LaserModel()
    traffic: TrafficSpec = TrafficSpec()
    output_dir: str = "out"
    formats: tuple[str, ...] = OUTPUT_FORMATS

    @property
    def link_models(self) -> LinkModels:
        return LinkModels(self.link_template.with_(n_lambda=self.system.n_lambda), self.penalty_model,
                          self.sens_model, self.p_max_dbm)

    @property
    def dims(self) -> SystemDims:
        return SystemDims(self.system.n_cores, self.system.cores_per_cluster, self.system.network_clock_ghz)

    def il_matrix(self) -> IlMatrix:
        if self.il_matrix_path:
            return load_il_matrix(self.il_matrix_path, self.composition)
        lay = self.layout
        n = lay.n_gis if lay.n_gis is not None else self.system.n_gis
        layout = calibrated_layout(n, lay.min_il_db, lay.max_il_db, self.loss_params, lay.n_rows, lay.pitch_cm)
        return build_il_matrix(layout, self.loss_params, self.composition)


def _parse_link(d: dict) -> dict:
    _check_keys(d, ("n_lambda", "spacing_nm", "fsr_nm", "center_wavelength_nm", "p_max_dbm", "er_anchors",
                    "sensitivity", "mod_xtalk_db", "filter", "penalties_enabled"), "link")
    out = {}
    tmpl = {k: d[k] for k in ("n_lambda", "spacing_nm", "fsr_nm", "center_wavelength_nm") if k in d}
    try:
        out["link_template"] = LinkConfig(**tmpl)
    except ValueError as exc:
        raise ConfigError(f"link: {exc}") from None
    er = DEFAULT_ER_MODEL
    if "er_anchors" in d:
        try:
            er = ErModel(tuple(tuple(p) for p in d["er_anchors"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"link.er_anchors: {exc}") from None
    fil = _build(FilterModel, d.get("filter", {}), "link.filter")
    try:
        out["penalty_model"] = PenaltyModel(er, fil, float(d.get("mod_xtalk_db", 1.0)),
                                            bool(d.get("penalties_enabled", True)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"link: {exc}") from None
    out["sens_model"] = _build(SensitivityModel, d.get("sensitivity", {}), "link.sensitivity")
    if "p_max_dbm" in d:
        out["p_max_dbm"] = float(d["p_max_dbm"])
    return out


def _parse_loss(d: dict, base: str) -> dict:
    params = ("waveguide_db_per_cm", "bend_db_per_90deg", "splitter_db", "coupler_db")
    _check_keys(d, params + ("composition", "il_matrix_path", "layout"), "loss")
    out = {"loss_params": _build(LossParams, {k: d[k] for k in params if k in d}, "loss")}
    if "composition" in d:
        if d["composition"] not in COMPOSITIONS:
            raise ConfigError(f"loss.composition must be one of {COMPOSITIONS}")
        out["composition"] = d["composition"]
    if d.get("il_matrix_path"):
        out["il_matrix_path"] = os.path.join(base, d["il_matrix_path"])
    if "layout" in d:
        out["layout"] = _build(LayoutSpec, d["layout"], "loss.layout")
    return out


def _parse_search(d: dict) -> dict:
    _check_keys(d, ("q_min", "q_max", "q_step", "br_set_gbps", "strategy"), "search")
    out = {}
    try:
        out["space"] = SearchSpace.from_range(float(d.get("q_min", 5000)), float(d.get("q_max", 12000)),
                                              float(d.get("q_step", 250)), d.get("br_set_gbps", (10, 15, 20, 25)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"search: {exc}") from None
    if "strategy" in d:
        if d["strategy"] not in STRATEGIES:
            raise ConfigError(f"search.strategy must be one of {STRATEGIES}")
        out["strategy"] = d["strategy"]
    return out


def _parse_system(d: dict) -> dict:
    extra = ("overhead", "thermal", "laser")
    names = [f.name for f in dataclasses.fields(SystemConfig)]
    _check_keys(d, names + list(extra), "system")
    out = {"system": _build(SystemConfig, {k: v for k, v in d.items() if k not in extra}, "system")}
    if "overhead" in d:
        ov = dict(d["overhead"])
        if "serdes_mw_by_br" in ov:
            try:
                ov["serdes_mw_by_br"] = {float(k): float(v) for k, v in ov["serdes_mw_by_br"].items()}
            except (AttributeError, ValueError) as exc:
                raise ConfigError(f"system.overhead.serdes_mw_by_br: {exc}") from None
        out["overhead"] = _build(OverheadModel, ov, "system.overhead")
    if "thermal" in d:
        out["thermal"] = _build(ThermalModel, d["thermal"], "system.thermal")
    if "laser" in d:
        out["laser"] = _build(LaserModel, d["laser"], "system.laser")
    return out


def _parse_traffic(d: dict, base: str, seed_override: int | None) -> dict:
    d = dict(d)
    if d.get("trace_path"):
        d["trace_path"] = os.path.join(base, d["trace_path"])
    if seed_override is not None:
        d["seed"] = seed_override
    return {"traffic": _build(TrafficSpec, d, "traffic")}


def _parse_output(d: dict, base: str) -> dict:
    _check_keys(d, ("directory", "formats"), "output")
    out = {}
    if "directory" in d:
        out["output_dir"] = os.path.join(base, d["directory"])
    if "formats" in d:
        fmts = tuple(d["formats"])
        if set(fmts) - set(OUTPUT_FORMATS):
            raise ConfigError(f"output.formats must be a subset of {OUTPUT_FORMATS}")
        out["formats"] = fmts
    return out


def parse_config(doc: Any, base_dir: str = ".", seed_override: int | None = None) -> RunConfig:
    """Validate a decoded JSON document and build a RunConfig."""
    _check_keys(doc, SECTIONS, "config")
    kw: dict = {}
    kw.update(_parse_link(doc.get("link", {})))
    kw.update(_parse_loss(doc.get("loss", {}), base_dir))
    kw.update(_parse_search(doc.get("search", {})))
    kw.update(_parse_system(doc.get("system", {})))
    kw.update(_parse_traffic(doc.get("traffic", {}), base_dir, seed_override))
    kw.update(_parse_output(doc.get("output", {}), base_dir))
    if "output_dir" not in kw:
        kw["output_dir"] = os.path.join(base_dir, "out")
    link_n, sys_n = doc.get("link", {}).get("n_lambda"), doc.get("system", {}).get("n_lambda")
    if link_n is not None and sys_n is not None and link_n != sys_n:
        raise ConfigError("link.n_lambda and system.n_lambda disagree")
    if link_n is not None and sys_n is None:
        try:
            kw["system"] = kw["system"].with_(n_lambda=link_n)
        except ValueError as exc:
            raise ConfigError(f"system: {exc}") from None
    cfg = RunConfig(**kw)
    if not math.isfinite(cfg.p_max_dbm):
        raise ConfigError("link.p_max_dbm must be finite")
    return cfg


def load_config(path: str | os.PathLike | None, seed_override: int | None = None) -> RunConfig:
    if path is None:
        return parse_config({}, ".", seed_override)
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, os.path.dirname(os.path.abspath(path)), seed_override)
