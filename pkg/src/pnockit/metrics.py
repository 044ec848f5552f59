"""
Power, latency and energy-per-bit figures from simulation reports, and
side-by-side policy comparisons.

Units: watts for power, pJ/bit for EPB, ns for latency.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .sim import SimReport

COMPARISON_COLUMNS = ("policy", "total_w", "laser_w", "thermal_w", "overhead_w", "avg_latency_ns",
                      "norm_latency", "aggregate_epb_pj", "norm_epb")


class EpbUndefinedError(ZeroDivisionError):
    pass


class ComparisonError(ValueError):
    pass


def _default_serdes() -> dict:
    return {10.0: 1.4, 15.0: 2.4, 20.0: 3.3, 25.0: 4.2}


@dataclass(frozen=True)
class OverheadModel:
    """Adaptation hardware of the Proteus GI. Serializer and deserializer draw the same power."""

    serdes_mw_by_br: dict = field(default_factory=_default_serdes)
    clock_gen_mw_per_rate: float = 0.5
    htree_mw_per_rate: float = 0.504
    n_rates: int = 4
    q_tuning_uw_per_mr_max: float = 6.1
    n_mrs: int = 6457

    def __post_init__(self) -> None:
        vals = [self.clock_gen_mw_per_rate, self.htree_mw_per_rate, self.q_tuning_uw_per_mr_max,
                self.n_mrs, self.n_rates, *self.serdes_mw_by_br.values()]
        if any(v < 0 for v in vals):
            raise ValueError("overhead model values must be >= 0")
        object.__setattr__(self, "serdes_mw_by_br", {float(k): float(v) for k, v in self.serdes_mw_by_br.items()})

    @property
    def clock_floor_mw(self) -> float:
        return self.n_rates * (self.clock_gen_mw_per_rate + self.htree_mw_per_rate)


@dataclass(frozen=True)
class ThermalModel:
    n_mrs: int = 6457
    uw_per_nm: float = 800.0
    mean_tuning_nm: float = 0.5

    def __post_init__(self) -> None:
        if min(self.n_mrs, self.uw_per_nm, self.mean_tuning_nm) < 0:
            raise ValueError("thermal model values must be >= 0")


@dataclass(frozen=True)
class LaserModel:
    wall_plug_efficiency: float = 0.10
    coupler_db: float = 2.0
    splitter_db: float = 0.5
    include_splitter_tree: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.wall_plug_efficiency <= 1:
            raise ValueError("wall_plug_efficiency must be in (0, 1]")

    def upstream_db(self, n_waveguides: int) -> float:
        """Loss between the laser and a waveguide's input."""
        loss = self.coupler_db
        if self.include_splitter_tree and n_waveguides > 1:
            loss += math.ceil(math.log2(n_waveguides)) * self.splitter_db
        return loss


@dataclass(frozen=True)
class PowerBreakdown:
    electrical_laser_w: float
    thermal_tuning_w: float
    overhead_w: float

    def __post_init__(self) -> None:
        if min(self.electrical_laser_w, self.thermal_tuning_w, self.overhead_w) < 0:
            raise ValueError("power components must be >= 0")

    @property
    def total_w(self) -> float:
        return self.electrical_laser_w + self.thermal_tuning_w + self.overhead_w


@dataclass(frozen=True)
class EpbBreakdown:
    laser_epb_pj_per_bit: float
    thermal_epb: float
    overhead_epb: float

    @property
    def aggregate_epb(self) -> float:
        return self.laser_epb_pj_per_bit + self.thermal_epb + self.overhead_epb


def electrical_laser_power_w(optical_mw: float, wall_plug_efficiency: float = 0.10,
                             upstream_db: float = 0.0) -> float:
    """Electrical input for ``optical_mw`` delivered into the waveguides."""
    if not 0 < wall_plug_efficiency <= 1:
        raise ValueError("wall_plug_efficiency must be in (0, 1]")
    return optical_mw * 10.0 ** (upstream_db / 10.0) / wall_plug_efficiency * 1e-3


def electrical_laser_power(report: SimReport, laser: LaserModel = LaserModel()) -> float:
    """Time-averaged electrical laser power of a run, in W."""
    return electrical_laser_power_w(report.total_optical_mw, laser.wall_plug_efficiency,
                                    laser.upstream_db(report.config.n_waveguides))


def thermal_tuning_power(model: ThermalModel = ThermalModel()) -> float:
    return model.n_mrs * model.uw_per_nm * model.mean_tuning_nm * 1e-6


def q_tuning_power_w(n_mrs: int, model: OverheadModel = OverheadModel(), duty: float = 1.0) -> float:
    return n_mrs * model.q_tuning_uw_per_mr_max * duty * 1e-6


def overhead_power(report: SimReport, model: OverheadModel = OverheadModel()) -> float:
    """Average adaptation overhead in W.

    Under Proteus the serializer/deserializer pair is charged at its
    bitrate's power while a packet is on the wire, Q tuning is charged for
    the modulator and filter banks of the active link, and the clock
    generators and H-trees of every provisioned rate run continuously.
    """
    cfg = report.config
    if cfg.policy == "opa":
        return cfg.opa_overhead_w
    if cfg.policy != "proteus":
        return 0.0
    floor_mw = model.clock_floor_mw
    if report.duration_ns <= 0 or len(report.records) == 0:
        return floor_mw * 1e-3
    r = report.records
    try:
        serdes = [model.serdes_mw_by_br[float(b)] for b in r.br.tolist()]
    except KeyError as exc:
        raise ValueError(f"no serdes power for bitrate {exc.args[0]} Gb/s") from None
    serdes_mj = 2.0 * float((r.frame_ns * serdes).sum())
    mr_ns = float(r.frame_ns.sum()) * 2 * cfg.n_lambda
    q_mj = mr_ns * model.q_tuning_uw_per_mr_max * 1e-3
    return (floor_mw + (serdes_mj + q_mj) / report.duration_ns) * 1e-3


def power_breakdown(report: SimReport, overhead: OverheadModel = OverheadModel(),
                    thermal: ThermalModel = ThermalModel(), laser: LaserModel = LaserModel()) -> PowerBreakdown:
    return PowerBreakdown(electrical_laser_power(report, laser), thermal_tuning_power(thermal),
                          overhead_power(report, overhead))


def epb(report: SimReport, power: PowerBreakdown) -> EpbBreakdown:
    """Each power component divided by the delivered throughput, in pJ/bit."""
    tput = report.throughput_bits_per_ns
    if not tput > 0:
        raise EpbUndefinedError("EPB undefined: zero throughput")
    # W / (bit/ns) = nJ/bit
    k = 1e3 / tput
    return EpbBreakdown(power.electrical_laser_w * k, power.thermal_tuning_w * k, power.overhead_w * k)


@dataclass(frozen=True)
class PolicyMetrics:
    policy: str
    power: PowerBreakdown
    epb: EpbBreakdown | None
    avg_latency_ns: float | None
    throughput_bits_per_ns: float


def evaluate(report: SimReport, overhead: OverheadModel = OverheadModel(),
             thermal: ThermalModel = ThermalModel(), laser: LaserModel = LaserModel()) -> PolicyMetrics:
    power = power_breakdown(report, overhead, thermal, laser)
    e = epb(report, power) if report.throughput_bits_per_ns > 0 else None
    return PolicyMetrics(report.policy, power, e, report.avg_latency_ns, report.throughput_bits_per_ns)


@dataclass(frozen=True)
class ComparisonRow:
    policy: str
    total_w: float
    laser_w: float
    thermal_w: float
    overhead_w: float
    avg_latency_ns: float | None
    norm_latency: float | None
    aggregate_epb_pj: float | None
    norm_epb: float | None


def _ratio(a, b):
    if a is None or b is None or b == 0:
        return None
    return a / b


@dataclass(frozen=True)
class Comparison:
    reference: str
    rows: tuple[ComparisonRow, ...]

    def row(self, policy: str) -> ComparisonRow:
        for r in self.rows:
            if r.policy == policy:
                return r
        raise KeyError(policy)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COMPARISON_COLUMNS)
        for r in self.rows:
            w.writerow(["" if v is None else (v if isinstance(v, str) else repr(float(v)))
                        for v in (getattr(r, c) for c in COMPARISON_COLUMNS)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"normalized_to": self.reference, "rows": [asdict(r) for r in self.rows]},
                          indent=2) + "\n"


def compare(reports: Sequence[SimReport], overhead: OverheadModel = OverheadModel(),
            thermal: ThermalModel = ThermalModel(), laser: LaserModel = LaserModel(),
            reference: str = "abm") -> Comparison:
    """Absolute figures plus latency and EPB normalised to ``reference``.

    Falls back to the first report when no report has the reference policy.
    """
    if not reports:
        raise ComparisonError("nothing to compare")
    fps = {r.fingerprint for r in reports}
    if len(fps) != 1:
        raise ComparisonError("reports come from different workloads (fingerprint mismatch)")
    metrics = [evaluate(r, overhead, thermal, laser) for r in reports]
    ref = next((m for m in metrics if m.policy == reference), metrics[0])
    ref_epb = ref.epb.aggregate_epb if ref.epb else None
    rows = []
    for m in metrics:
        agg = m.epb.aggregate_epb if m.epb else None
        rows.append(ComparisonRow(
            policy=m.policy,
            total_w=m.power.total_w,
            laser_w=m.power.electrical_laser_w,
            thermal_w=m.power.thermal_tuning_w,
            overhead_w=m.power.overhead_w,
            avg_latency_ns=m.avg_latency_ns,
            norm_latency=_ratio(m.avg_latency_ns, ref.avg_latency_ns),
            aggregate_epb_pj=agg,
            norm_epb=_ratio(agg, ref_epb),
        ))
    return Comparison(ref.policy, tuple(rows))
