"""
Offline design search: pick the Q that minimises the power penalty, fix a
single laser power at the worst-case loss, then choose a (Q, BR) duplet
for every loss value in the chip so the fixed power is used as fully as
possible.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .link_models import (
    DEFAULT_PENALTY_MODEL,
    DEFAULT_SENSITIVITY,
    FEASIBILITY_TOL_DB,
    LinkConfig,
    PenaltyModel,
    SensitivityModel,
    dbm_to_mw,
    min_required_p_laser,
    worst_penalty_db,
)
from .loss_map import IlMatrix, quantize_il

STRATEGIES = ("pp_optimal", "exhaustive")

SWEEP_COLUMNS = ("il_db", "q", "br_gbps", "p_laser_dbm", "margin_db", "frame_delay_ns",
                 "agg_datarate_gbps", "power_eff_mw_per_gbps")


class LinkInfeasibleError(RuntimeError):
    pass


class NoViableQError(LinkInfeasibleError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    q_grid: tuple[float, ...] = tuple(float(q) for q in range(5000, 12001, 250))
    br_set_gbps: tuple[float, ...] = (10.0, 15.0, 20.0, 25.0)

    def __post_init__(self) -> None:
        q = tuple(float(x) for x in self.q_grid)
        br = tuple(float(x) for x in self.br_set_gbps)
        if not q or not br:
            raise ValueError("search space must be non-empty")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q_grid must be strictly ascending")
        steps = {round(b - a, 9) for a, b in zip(q, q[1:])}
        if len(steps) > 1:
            raise ValueError("q_grid step must be uniform")
        if any(b <= a for a, b in zip(br, br[1:])):
            raise ValueError("br_set_gbps must be strictly ascending")
        if min(q) <= 0 or min(br) <= 0:
            raise ValueError("grid values must be positive")
        object.__setattr__(self, "q_grid", q)
        object.__setattr__(self, "br_set_gbps", br)

    @classmethod
    def from_range(cls, q_min: float, q_max: float, q_step: float, br_set_gbps) -> "SearchSpace":
        n = int(round((q_max - q_min) / q_step)) + 1
        return cls(tuple(q_min + i * q_step for i in range(n)), tuple(br_set_gbps))


DEFAULT_SPACE = SearchSpace()
DEFAULT_LINK = LinkConfig()


def frame_delay_ns(bits: int, n_lambda: int, bitrate_gbps: float) -> float:
    """Serialisation time of one packet split over ``n_lambda`` carriers."""
    return math.ceil(bits / n_lambda) / bitrate_gbps


@dataclass(frozen=True)
class DesignPoint:
    il_db: float
    q_factor: float
    bitrate_gbps: float
    p_laser_dbm: float
    margin_db: float
    frame_delay_ns: float
    aggregated_datarate_gbps: float
    power_efficiency: float

    def __post_init__(self) -> None:
        if self.margin_db < -FEASIBILITY_TOL_DB:
            raise ValueError(f"design point at IL {self.il_db} dB has negative margin {self.margin_db}")


@dataclass(frozen=True)
class StaticDesign:
    p_laser_dbm: float
    worst_il_db: float
    q_at_worst: float
    br_at_worst: float
    per_il_points: tuple[DesignPoint, ...]
    n_lambda: int = 55
    packet_size_bits: int = 512

    def point_for(self, il_db: float) -> DesignPoint:
        key = quantize_il(il_db)
        for p in self.per_il_points:
            if p.il_db == key:
                return p
        raise KeyError(f"no design point for IL {il_db} dB (key {key})")

    def to_json(self) -> str:
        d = asdict(self)
        d["per_il_points"] = [asdict(p) for p in self.per_il_points]
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "StaticDesign":
        d = json.loads(text)
        pts = tuple(DesignPoint(**p) for p in d.pop("per_il_points"))
        return cls(per_il_points=pts, **d)


class Duplet(NamedTuple):
    q_factor: float
    bitrate_gbps: float
    margin_db: float


def optimal_q_for_br(bitrate_gbps: float, link_template: LinkConfig = DEFAULT_LINK,
                     penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                     space: SearchSpace = DEFAULT_SPACE) -> float:
    """Grid Q minimising the worst-channel power penalty; ties go to larger Q."""
    best_q, best_pp = None, math.inf
    for q in space.q_grid:
        pp = worst_penalty_db(link_template.with_(q_factor=q, bitrate_gbps=bitrate_gbps), penalty_model)
        if math.isfinite(pp) and pp <= best_pp:
            best_q, best_pp = q, pp
    if best_q is None:
        raise NoViableQError(f"no viable Q in the grid at {bitrate_gbps} Gb/s")
    return best_q


def static_p_laser(worst_il_db: float, link_template: LinkConfig = DEFAULT_LINK,
                   penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                   sens_model: SensitivityModel = DEFAULT_SENSITIVITY,
                   space: SearchSpace = DEFAULT_SPACE, base_br_gbps: float = 10.0,
                   p_max_dbm: float = 20.0) -> float:
    """Fixed laser power (dBm, rounded up to 0.1 dB) that closes the worst-case budget."""
    q = optimal_q_for_br(base_br_gbps, link_template, penalty_model, space)
    cfg = link_template.with_(q_factor=q, bitrate_gbps=base_br_gbps)
    need = min_required_p_laser(worst_il_db, cfg, penalty_model, sens_model)
    p = math.ceil(round(need * 10.0, 6)) / 10.0
    if not p <= p_max_dbm + FEASIBILITY_TOL_DB:
        raise LinkInfeasibleError(
            f"link infeasible: worst-case IL {worst_il_db} dB needs {need:.2f} dBm > P_max {p_max_dbm} dBm")
    return p


def _candidates(strategy: str, space: SearchSpace, link_template: LinkConfig,
                penalty_model: PenaltyModel) -> list[tuple[float, float]]:
    if strategy == "exhaustive":
        return [(q, br) for br in space.br_set_gbps for q in space.q_grid]
    if strategy == "pp_optimal":
        out = []
        for br in space.br_set_gbps:
            try:
                out.append((optimal_q_for_br(br, link_template, penalty_model, space), br))
            except NoViableQError:
                pass
        return out
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def optimal_duplet_for_il(il_db: float, p_laser_dbm: float, space: SearchSpace = DEFAULT_SPACE,
                          link_template: LinkConfig = DEFAULT_LINK,
                          penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                          sens_model: SensitivityModel = DEFAULT_SENSITIVITY,
                          strategy: str = "pp_optimal") -> Duplet:
    """(Q, BR) with the smallest non-negative residual margin at ``il_db``.

    ``pp_optimal`` restricts each bitrate to its penalty-minimising Q, so a
    bitrate is only chosen when it fits with its best filter setting;
    ``exhaustive`` searches every grid pair. Ties prefer higher BR, then
    higher Q.
    """
    best = None
    for q, br in _candidates(strategy, space, link_template, penalty_model):
        cfg = link_template.with_(q_factor=q, bitrate_gbps=br)
        e = p_laser_dbm - min_required_p_laser(il_db, cfg, penalty_model, sens_model)
        if e < -FEASIBILITY_TOL_DB:
            continue
        key = (max(e, 0.0), -br, -q)
        if best is None or key < best[0]:
            best = (key, Duplet(q, br, e))
    if best is None:
        raise LinkInfeasibleError(f"no feasible (Q, BR) at IL {il_db} dB with P_laser {p_laser_dbm} dBm")
    return best[1]


def design_point(il_db: float, duplet: Duplet, p_laser_dbm: float, n_lambda: int,
                 packet_size_bits: int = 512) -> DesignPoint:
    agg = n_lambda * duplet.bitrate_gbps
    return DesignPoint(
        il_db=il_db,
        q_factor=duplet.q_factor,
        bitrate_gbps=duplet.bitrate_gbps,
        p_laser_dbm=p_laser_dbm,
        margin_db=duplet.margin_db,
        frame_delay_ns=frame_delay_ns(packet_size_bits, n_lambda, duplet.bitrate_gbps),
        aggregated_datarate_gbps=agg,
        power_efficiency=dbm_to_mw(p_laser_dbm) / agg,
    )


def build_static_design(il_matrix: IlMatrix, space: SearchSpace = DEFAULT_SPACE,
                        link_template: LinkConfig = DEFAULT_LINK,
                        penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                        sens_model: SensitivityModel = DEFAULT_SENSITIVITY,
                        strategy: str = "pp_optimal", p_max_dbm: float = 20.0,
                        packet_size_bits: int = 512) -> StaticDesign:
    """Static laser power plus one design point per distinct quantised IL."""
    ils = il_matrix.distinct_quantized()
    worst = ils[-1]
    p = static_p_laser(worst, link_template, penalty_model, sens_model, space, p_max_dbm=p_max_dbm)
    points = []
    for il in ils:
        d = optimal_duplet_for_il(il, p, space, link_template, penalty_model, sens_model, strategy)
        points.append(design_point(il, d, p, link_template.n_lambda, packet_size_bits))
    return StaticDesign(
        p_laser_dbm=p,
        worst_il_db=worst,
        q_at_worst=points[-1].q_factor,
        br_at_worst=points[-1].bitrate_gbps,
        per_il_points=tuple(points),
        n_lambda=link_template.n_lambda,
        packet_size_bits=packet_size_bits,
    )


def design_sweep_csv(design: StaticDesign) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for p in design.per_il_points:
        w.writerow([repr(p.il_db), repr(p.q_factor), repr(p.bitrate_gbps), repr(p.p_laser_dbm),
                    repr(p.margin_db), repr(p.frame_delay_ns), repr(p.aggregated_datarate_gbps),
                    repr(p.power_efficiency)])
    return buf.getvalue()
