"""
Discrete-event simulator of the MWMR photonic crossbar.

Cores inject packets into their cluster's GI. Each GI serves a FIFO; its
head packet requests the token of the waveguide owned by the receiving GI
(``dst_gi mod n_waveguides``), waits a fixed arbitration delay plus any
adaptation delay, and transmits once the waveguide is free. The next head
of that GI may request as soon as the current one starts transmitting.
Events are ordered by (time, sequence number), so a run is a pure function
of its inputs.

Four laser policies are modelled:

``proteus``  one static laser power; (Q, BR) per pair from the rule tables
``opa``      laser retuned per packet to the minimum the pair's loss needs
``abm``      epoch-based bandwidth manager: the active wavelength count per
             waveguide follows the previous epoch's demand, idle waveguides
             go dark and pay a switch-on delay
``static``   every laser at P_max
"""

from __future__ import annotations

import dataclasses
import hashlib
import heapq
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .link_models import (
    C_M_PER_S,
    DEFAULT_PENALTY_MODEL,
    DEFAULT_SENSITIVITY,
    FEASIBILITY_TOL_DB,
    LinkConfig,
    PenaltyModel,
    SensitivityModel,
    dbm_to_mw,
    min_required_p_laser,
    worst_penalty_db,
    sensitivity,
)
from .loss_map import IlMatrix, LossParams, build_il_matrix, calibrated_layout
from .optimizer import DEFAULT_SPACE, SearchSpace, StaticDesign, frame_delay_ns
from .rules import RuleLookupMiss, RuleTable, adaptation_latency_ps, code_to_q, default_pair_id_map, lookup
from .traffic import TrafficArrays

POLICIES = ("proteus", "opa", "abm", "static")
INJECTION_MODES = ("closed_loop", "open_loop")
POWER_BIN_NS = 1000.0


class SimConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    n_cores: int = 256
    n_clusters: int = 32
    cores_per_cluster: int = 8
    n_gis: int = 32
    n_waveguides: int = 32
    n_lambda: int = 55
    packet_size_bits: int = 512
    network_clock_ghz: float = 5.0
    group_index: float = 4.2
    arbitration_cycles: int = 2
    policy: str = "proteus"
    abm_laser_switch_latency_ns: float = 100.0
    abm_epoch_cycles: int = 1000
    abm_headroom: float = 2.0
    opa_overhead_w: float = 0.5
    baseline_q: float = 7000.0
    baseline_br_gbps: float = 10.0
    q_tuning_ps: float = 25.0
    injection_mode: str = "closed_loop"
    until_ns: float | None = None

    def __post_init__(self) -> None:
        if self.n_cores != self.n_clusters * self.cores_per_cluster:
            raise SimConfigError(
                f"n_cores ({self.n_cores}) must equal n_clusters x cores_per_cluster "
                f"({self.n_clusters} x {self.cores_per_cluster})")
        if not 2 <= self.n_gis <= self.n_clusters:
            raise SimConfigError("need 2 <= n_gis <= n_clusters")
        if not 1 <= self.n_waveguides <= self.n_gis:
            raise SimConfigError("need 1 <= n_waveguides <= n_gis")
        if self.n_lambda < 1 or self.packet_size_bits < 1:
            raise SimConfigError("n_lambda and packet_size_bits must be positive")
        if not (self.network_clock_ghz > 0 and self.group_index > 0):
            raise SimConfigError("network_clock_ghz and group_index must be positive")
        if self.arbitration_cycles < 0 or self.abm_laser_switch_latency_ns < 0 or self.opa_overhead_w < 0:
            raise SimConfigError("delays and overheads must be >= 0")
        if self.abm_epoch_cycles < 1 or not self.abm_headroom > 0:
            raise SimConfigError("abm_epoch_cycles and abm_headroom must be positive")
        if self.policy not in POLICIES:
            raise SimConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.injection_mode not in INJECTION_MODES:
            raise SimConfigError(f"injection_mode must be one of {INJECTION_MODES}")
        if self.until_ns is not None and not self.until_ns >= 0:
            raise SimConfigError("until_ns must be >= 0")

    @property
    def cycle_ns(self) -> float:
        return 1.0 / self.network_clock_ghz

    @property
    def arbitration_ns(self) -> float:
        return self.arbitration_cycles * self.cycle_ns

    @property
    def abm_epoch_ns(self) -> float:
        return self.abm_epoch_cycles * self.cycle_ns

    def gi_of_core(self, core):
        return (core // self.cores_per_cluster) % self.n_gis

    def waveguide_of(self, dst_gi):
        return dst_gi % self.n_waveguides

    def with_(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LinkModels:
    """Physics shared by the policies and the budget audit."""

    link_template: LinkConfig = LinkConfig()
    penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL
    sens_model: SensitivityModel = DEFAULT_SENSITIVITY
    p_max_dbm: float = 20.0

    def required_dbm(self, il_db, q, br, n_lambda) -> float:
        cfg = self.link_template.with_(n_lambda=int(n_lambda), q_factor=float(q), bitrate_gbps=float(br))
        return min_required_p_laser(float(il_db), cfg, self.penalty_model, self.sens_model)


def propagation_delay_ns(length_cm, group_index: float = 4.2):
    """Time of flight at the group velocity c / n_g."""
    return length_cm * 1e-2 / (C_M_PER_S / group_index) * 1e9


class LatencyComponents(NamedTuple):
    adaptation_ns: float
    frame_ns: float
    propagation_ns: float


def _pair_settings(cfg: SystemConfig, rules: list[RuleTable] | None, space: SearchSpace):
    """(br, q) matrices for every ordered GI pair under Proteus."""
    n = cfg.n_gis
    if rules is None or len(rules) != n:
        raise SimConfigError(f"proteus needs one rule table per GI ({n})")
    br = np.full((n, n), np.nan)
    q = np.full((n, n), np.nan)
    pair_map = default_pair_id_map(n)
    for gi, pairs in pair_map.items():
        table = rules[gi]
        for pid, (s, d) in enumerate(pairs):
            try:
                entry = lookup(table, pid)
            except RuleLookupMiss as exc:
                raise SimConfigError(f"rule tables are not total: {exc}") from None
            br[s, d] = entry.switch_vector.bitrate(space.br_set_gbps)
            q[s, d] = code_to_q(entry.q_code, space)
    return br, q


def packet_latency_components(cfg: SystemConfig, src_gi: int, dst_gi: int, length_cm: float,
                              bitrate_gbps: float) -> LatencyComponents:
    """Per-packet fixed delays for a policy transmitting at ``bitrate_gbps``."""
    adapt = adaptation_latency_ps(q_tuning_ps=cfg.q_tuning_ps) * 1e-3 if cfg.policy == "proteus" else 0.0
    if src_gi == dst_gi:
        raise ValueError("src_gi == dst_gi")
    return LatencyComponents(adapt, frame_delay_ns(cfg.packet_size_bits, cfg.n_lambda, bitrate_gbps),
                             propagation_delay_ns(length_cm, cfg.group_index))


RECORD_FIELDS = ("id", "src_core", "dst_core", "src_gi", "dst_gi", "waveguide", "inject_ns", "start_ns",
                 "arbitration_ns", "adaptation_ns", "frame_ns", "propagation_ns", "eject_ns", "il_db",
                 "p_laser_dbm", "br", "q", "n_active")
_INT_FIELDS = {"id", "src_core", "dst_core", "src_gi", "dst_gi", "waveguide", "n_active"}


@dataclass(frozen=True, eq=False)
class PacketRecords:
    """Columnar per-packet log of delivered packets, in delivery-event order."""

    id: np.ndarray
    src_core: np.ndarray
    dst_core: np.ndarray
    src_gi: np.ndarray
    dst_gi: np.ndarray
    waveguide: np.ndarray
    inject_ns: np.ndarray
    start_ns: np.ndarray
    arbitration_ns: np.ndarray
    adaptation_ns: np.ndarray
    frame_ns: np.ndarray
    propagation_ns: np.ndarray
    eject_ns: np.ndarray
    il_db: np.ndarray
    p_laser_dbm: np.ndarray
    br: np.ndarray
    q: np.ndarray
    n_active: np.ndarray

    def __len__(self) -> int:
        return len(self.id)

    @property
    def queue_ns(self) -> np.ndarray:
        return self.start_ns - self.inject_ns - self.arbitration_ns - self.adaptation_ns

    @property
    def latency_ns(self) -> np.ndarray:
        return self.eject_ns - self.inject_ns

    @classmethod
    def empty(cls) -> "PacketRecords":
        return cls(**{f: np.empty(0, dtype=np.int64 if f in _INT_FIELDS else np.float64) for f in RECORD_FIELDS})

    def replace(self, **changes) -> "PacketRecords":
        return dataclasses.replace(self, **changes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("id,src,dst,inject_ns,eject_ns,il_db,br,q,p_laser_dbm\n")
        cols = (self.id.tolist(), self.src_core.tolist(), self.dst_core.tolist(), self.inject_ns.tolist(),
                self.eject_ns.tolist(), self.il_db.tolist(), self.br.tolist(), self.q.tolist(),
                self.p_laser_dbm.tolist())
        for row in zip(*cols):
            buf.write(",".join(repr(v) for v in row))
            buf.write("\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class SimReport:
    config: SystemConfig
    fingerprint: str
    records: PacketRecords
    n_injected: int
    n_delivered: int
    n_in_flight: int
    n_not_issued: int
    n_skipped_local: int
    duration_ns: float
    avg_optical_mw_per_wg: np.ndarray
    power_bins_mw: np.ndarray
    static_p_laser_dbm: float | None = None

    @property
    def policy(self) -> str:
        return self.config.policy

    @property
    def delivered_bits(self) -> float:
        return float(self.n_delivered * self.config.packet_size_bits)

    @property
    def avg_latency_ns(self) -> float | None:
        if self.n_delivered == 0:
            return None
        return float(self.records.latency_ns.mean())

    @property
    def throughput_bits_per_ns(self) -> float:
        return self.delivered_bits / self.duration_ns if self.duration_ns > 0 else 0.0

    @property
    def total_optical_mw(self) -> float:
        return float(self.avg_optical_mw_per_wg.sum())

    def totals(self) -> dict:
        lat = self.records.latency_ns
        pct = (lambda p: float(np.percentile(lat, p))) if len(lat) else (lambda p: None)
        return {
            "policy": self.policy,
            "fingerprint": self.fingerprint,
            "packets_injected": self.n_injected,
            "packets_delivered": self.n_delivered,
            "packets_in_flight": self.n_in_flight,
            "packets_not_issued": self.n_not_issued,
            "packets_skipped_local": self.n_skipped_local,
            "duration_ns": self.duration_ns,
            "avg_latency_ns": self.avg_latency_ns,
            "p50_latency_ns": pct(50),
            "p99_latency_ns": pct(99),
            "throughput_bits_per_ns": self.throughput_bits_per_ns,
            "avg_optical_mw_total": self.total_optical_mw,
            "static_p_laser_dbm": self.static_p_laser_dbm,
        }

    def to_json(self) -> str:
        doc = {
            "totals": self.totals(),
            "config": dataclasses.asdict(self.config),
            "avg_optical_mw_per_wg": self.avg_optical_mw_per_wg.tolist(),
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def power_csv(self) -> str:
        buf = io.StringIO()
        n_wg = self.power_bins_mw.shape[1] if self.power_bins_mw.ndim == 2 else 0
        buf.write("t_start_ns," + ",".join(f"wg{i}_mw" for i in range(n_wg)) + ",total_mw\n")
        for b, row in enumerate(self.power_bins_mw.tolist()):
            buf.write(",".join([repr(b * POWER_BIN_NS)] + [repr(v) for v in row] + [repr(float(sum(row)))]))
            buf.write("\n")
        return buf.getvalue()


def traffic_fingerprint(cfg: SystemConfig, traffic: TrafficArrays, il_matrix: IlMatrix) -> str:
    """Identity of the workload, independent of the policy under test."""
    h = hashlib.sha256()
    h.update(traffic.to_bytes())
    h.update(json.dumps(dataclasses.asdict(cfg.with_(policy="proteus")), sort_keys=True).encode())
    h.update(np.ascontiguousarray(il_matrix.losses_db, dtype="<f8").tobytes())
    return h.hexdigest()


def default_il_matrix(cfg: SystemConfig) -> IlMatrix:
    return build_il_matrix(calibrated_layout(cfg.n_gis))


def _step_energy(times: np.ndarray, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Integral from 0 to x of a step function that takes values[i] on [times[i], times[i+1])."""
    seg = np.diff(times) * values[:-1]
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    k = np.searchsorted(times, x, side="right") - 1
    return cum[k] + values[k] * (x - times[k])


class _Abm:
    """Per-waveguide epoch state of the bandwidth manager."""

    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.epoch_ns = cfg.abm_epoch_ns
        self.demand = [dict() for _ in range(cfg.n_waveguides)]
        self.woken = [dict() for _ in range(cfg.n_waveguides)]

    def active_for(self, wg: int, epoch: int) -> int:
        if epoch == 0:
            return self.cfg.n_lambda
        util = self.demand[wg].get(epoch - 1, 0.0) / self.epoch_ns
        frac = min(1.0, util * self.cfg.abm_headroom)
        return int(math.ceil(round(frac * self.cfg.n_lambda, 9)))

    def admit(self, wg: int, t_req: float) -> tuple[int, float]:
        """(active wavelengths, time the laser is lit) for a request at ``t_req``."""
        epoch = int(t_req // self.epoch_ns)
        n = self.active_for(wg, epoch)
        if n > 0:
            return n, 0.0
        woke = self.woken[wg].setdefault(epoch, t_req)
        return self.cfg.n_lambda, woke + self.cfg.abm_laser_switch_latency_ns

    def charge(self, wg: int, t_req: float, busy_ns: float) -> None:
        """Book channel occupancy against the epoch in which it was requested."""
        epoch = int(t_req // self.epoch_ns)
        self.demand[wg][epoch] = self.demand[wg].get(epoch, 0.0) + busy_ns

    def step_function(self, wg: int, duration: float, full_mw: float) -> tuple[np.ndarray, np.ndarray]:
        n_epochs = max(1, int(math.ceil(duration / self.epoch_ns)))
        times, values = [], []
        for e in range(n_epochs):
            t0 = e * self.epoch_ns
            times.append(t0)
            values.append(full_mw * self.active_for(wg, e) / self.cfg.n_lambda)
            if e in self.woken[wg]:
                # switch-on is charged at full power from the wake request
                times.append(self.woken[wg][e])
                values.append(full_mw)
        return np.asarray(times), np.asarray(values)


def idle_power_mw(cfg: SystemConfig, models: LinkModels, il_matrix: IlMatrix,
                  static_p_dbm: float | None) -> float:
    """Per-waveguide optical power of a policy with no traffic at all."""
    if cfg.policy == "proteus":
        return dbm_to_mw(static_p_dbm)
    if cfg.policy == "static":
        return dbm_to_mw(models.p_max_dbm)
    if cfg.policy == "abm":
        return 0.0
    return dbm_to_mw(models.required_dbm(il_matrix.max_db, cfg.baseline_q, cfg.baseline_br_gbps, cfg.n_lambda))


def run(cfg: SystemConfig, traffic: TrafficArrays, rules: list[RuleTable] | None = None,
        design: StaticDesign | None = None, il_matrix: IlMatrix | None = None,
        models: LinkModels = LinkModels(), space: SearchSpace = DEFAULT_SPACE,
        loss_params: LossParams = LossParams()) -> SimReport:
    """Simulate ``traffic`` on the crossbar under ``cfg.policy``."""
    il_matrix = default_il_matrix(cfg) if il_matrix is None else il_matrix
    if il_matrix.n_gis != cfg.n_gis:
        raise SimConfigError(f"IL matrix has {il_matrix.n_gis} GIs, system has {cfg.n_gis}")
    if (cfg.policy == "proteus") != (rules is not None):
        raise SimConfigError("rule tables are required for, and only for, the proteus policy")
    if cfg.policy == "proteus" and design is None:
        raise SimConfigError("proteus needs the static design for its laser power")
    if len(traffic) and (traffic.src_core.max() >= cfg.n_cores or traffic.dst_core.max() >= cfg.n_cores
                         or traffic.src_core.min() < 0 or traffic.dst_core.min() < 0):
        raise SimConfigError("traffic references cores outside the system")
    if len(traffic) and np.any(np.diff(traffic.time_ns) < 0):
        raise SimConfigError("traffic stream is not sorted by time")

    fingerprint = traffic_fingerprint(cfg, traffic, il_matrix)
    il = il_matrix.losses_db
    # an explicit matrix carries no geometry; infer lengths from the waveguide loss
    lengths = il_matrix.lengths_cm if il_matrix.lengths_cm is not None else il / loss_params.waveguide_db_per_cm
    prop = propagation_delay_ns(lengths, cfg.group_index)
    n_wg = cfg.n_waveguides
    nl = cfg.n_lambda
    policy = cfg.policy
    arb = cfg.arbitration_ns
    static_p = design.p_laser_dbm if design is not None else None

    if policy == "proteus":
        if design.n_lambda != nl or design.packet_size_bits != cfg.packet_size_bits:
            raise SimConfigError("design was built for a different N-lambda or packet size")
        br_mat, q_mat = _pair_settings(cfg, rules, space)
        frame_mat = np.ceil(cfg.packet_size_bits / nl) / br_mat
        adapt = adaptation_latency_ps(q_tuning_ps=cfg.q_tuning_ps) * 1e-3
        if static_p > models.p_max_dbm + FEASIBILITY_TOL_DB:
            raise SimConfigError("static laser power exceeds P_max")
    else:
        base_frame = frame_delay_ns(cfg.packet_size_bits, nl, cfg.baseline_br_gbps)
        adapt = 0.0
    if policy == "opa":
        pp = worst_penalty_db(models.link_template.with_(n_lambda=nl, q_factor=cfg.baseline_q,
                                                        bitrate_gbps=cfg.baseline_br_gbps), models.penalty_model)
        opa_dbm = il + pp + 10.0 * math.log10(nl) + sensitivity(cfg.baseline_br_gbps, models.sens_model)
        if opa_dbm.max() > models.p_max_dbm + FEASIBILITY_TOL_DB:
            raise SimConfigError("OPA cannot close the budget on the worst pair below P_max")
        opa_mw = 10.0 ** (opa_dbm / 10.0)
        opa_times = [[0.0] for _ in range(n_wg)]
        opa_vals = [[idle_power_mw(cfg, models, il_matrix, None)] for _ in range(n_wg)]
    if policy == "abm":
        abm = _Abm(cfg)
        abm_full_dbm = models.required_dbm(il_matrix.max_db, cfg.baseline_q, cfg.baseline_br_gbps, nl)
        if abm_full_dbm > models.p_max_dbm + FEASIBILITY_TOL_DB:
            raise SimConfigError("ABM worst-case laser power exceeds P_max")

    n = len(traffic)
    src_core = traffic.src_core
    dst_core = traffic.dst_core
    src_gi_arr = cfg.gi_of_core(src_core)
    dst_gi_arr = cfg.gi_of_core(dst_core)
    local = src_gi_arr == dst_gi_arr
    n_skipped = int(local.sum())
    times = traffic.time_ns.tolist()
    sg_list = src_gi_arr.tolist()
    dg_list = dst_gi_arr.tolist()
    local_list = local.tolist()

    # event kinds, ordered so that simultaneous events resolve deterministically by sequence number
    ISSUE, HEAD, DELIVER = 0, 1, 2
    heap: list = []
    seq = 0
    closed = cfg.injection_mode == "closed_loop"
    next_of = [-1] * n
    gap = [0.0] * n
    if closed:
        last_of_core: dict[int, int] = {}
        for i, c in enumerate(src_core.tolist()):
            if local_list[i]:
                continue
            if c in last_of_core:
                prev = last_of_core[c]
                next_of[prev] = i
                gap[i] = times[i] - times[prev]
            else:
                heap.append((times[i], seq, ISSUE, i))
                seq += 1
            last_of_core[c] = i
    else:
        for i in range(n):
            if not local_list[i]:
                heap.append((times[i], seq, ISSUE, i))
                seq += 1
    heapq.heapify(heap)

    queues = [deque() for _ in range(cfg.n_gis)]
    gi_busy = [False] * cfg.n_gis
    wg_free = [0.0] * n_wg
    out: dict[str, list] = {f: [] for f in RECORD_FIELDS}
    pending: dict[int, tuple] = {}
    issue_time: dict[int, float] = {}
    until = math.inf if cfg.until_ns is None else cfg.until_ns
    n_issued = 0
    n_delivered = 0
    last_eject = 0.0

    def request(gi: int, t: float) -> None:
        nonlocal seq
        p = queues[gi].popleft()
        s, d = gi, dg_list[p]
        wg = d % n_wg
        il_sd = il[s, d]
        n_act = nl
        lit = 0.0
        if policy == "proteus":
            br, q, fr, pdbm = br_mat[s, d], q_mat[s, d], frame_mat[s, d], static_p
        elif policy == "abm":
            n_act, lit = abm.admit(wg, t)
            br, q = cfg.baseline_br_gbps, cfg.baseline_q
            fr = math.ceil(cfg.packet_size_bits / n_act) / br
            pdbm = abm_full_dbm + 10.0 * math.log10(n_act / nl)
        else:
            br, q, fr = cfg.baseline_br_gbps, cfg.baseline_q, base_frame
            pdbm = opa_dbm[s, d] if policy == "opa" else models.p_max_dbm
        start = max(t + arb + adapt, wg_free[wg], lit)
        pr = prop[s, d]
        wg_free[wg] = start + fr + pr
        eject = start + fr + pr
        if policy == "abm":
            abm.charge(wg, t, fr + pr)
        elif policy == "opa":
            opa_times[wg].append(start)
            opa_vals[wg].append(opa_mw[s, d])
        pending[p] = (s, d, wg, start, fr, pr, eject, il_sd, pdbm, br, q, n_act)
        heapq.heappush(heap, (eject, seq, DELIVER, p))
        seq += 1
        heapq.heappush(heap, (start, seq, HEAD, gi))
        seq += 1

    while heap and heap[0][0] <= until:
        t, _, kind, x = heapq.heappop(heap)
        if kind == ISSUE:
            n_issued += 1
            gi = sg_list[x]
            issue_time[x] = t
            queues[gi].append(x)
            if not gi_busy[gi]:
                gi_busy[gi] = True
                request(gi, t)
        elif kind == HEAD:
            if queues[x]:
                request(x, t)
            else:
                gi_busy[x] = False
        else:
            s, d, wg, start, fr, pr, eject, il_sd, pdbm, br, q, n_act = pending.pop(x)
            n_delivered += 1
            last_eject = eject
            o = out
            o["id"].append(x)
            o["src_core"].append(int(src_core[x]))
            o["dst_core"].append(int(dst_core[x]))
            o["src_gi"].append(s)
            o["dst_gi"].append(d)
            o["waveguide"].append(wg)
            o["inject_ns"].append(issue_time.pop(x))
            o["start_ns"].append(start)
            o["arbitration_ns"].append(arb)
            o["adaptation_ns"].append(adapt)
            o["frame_ns"].append(fr)
            o["propagation_ns"].append(pr)
            o["eject_ns"].append(eject)
            o["il_db"].append(float(il_sd))
            o["p_laser_dbm"].append(float(pdbm))
            o["br"].append(float(br))
            o["q"].append(float(q))
            o["n_active"].append(n_act)
            nxt = next_of[x]
            if nxt >= 0:
                heapq.heappush(heap, (t + gap[nxt], seq, ISSUE, nxt))
                seq += 1

    records = PacketRecords(**{f: np.asarray(v, dtype=np.int64 if f in _INT_FIELDS else np.float64)
                               for f, v in out.items()})
    duration = cfg.until_ns if cfg.until_ns is not None else last_eject
    n_in_flight = n_issued - n_delivered
    n_not_issued = n - n_skipped - n_issued

    # optical power per waveguide as step functions, averaged exactly and into 1 us bins
    if policy == "proteus":
        steps = [(np.array([0.0]), np.array([dbm_to_mw(static_p)]))] * n_wg
    elif policy == "static":
        steps = [(np.array([0.0]), np.array([dbm_to_mw(models.p_max_dbm)]))] * n_wg
    elif policy == "opa":
        steps = [(np.asarray(opa_times[w]), np.asarray(opa_vals[w])) for w in range(n_wg)]
    else:
        full_mw = dbm_to_mw(abm_full_dbm)
        steps = [abm.step_function(w, duration, full_mw) for w in range(n_wg)]

    if duration > 0:
        n_bins = int(math.ceil(duration / POWER_BIN_NS))
        edges = np.minimum(np.arange(n_bins + 1) * POWER_BIN_NS, duration)
        widths = np.diff(edges)
        bins = np.empty((n_bins, n_wg))
        avg = np.empty(n_wg)
        for w, (ts, vs) in enumerate(steps):
            ts = np.append(ts, max(duration, ts[-1]) + 1.0)
            vs = np.append(vs, vs[-1])
            energy = _step_energy(ts, vs, edges)
            bins[:, w] = np.diff(energy) / widths
            avg[w] = energy[-1] / duration
    else:
        bins = np.empty((0, n_wg))
        avg = np.full(n_wg, idle_power_mw(cfg, models, il_matrix, static_p))

    return SimReport(
        config=cfg,
        fingerprint=fingerprint,
        records=records,
        n_injected=n_issued,
        n_delivered=n_delivered,
        n_in_flight=n_in_flight,
        n_not_issued=n_not_issued,
        n_skipped_local=n_skipped,
        duration_ns=float(duration),
        avg_optical_mw_per_wg=avg,
        power_bins_mw=bins,
        static_p_laser_dbm=static_p,
    )


@dataclass(frozen=True)
class BudgetViolation:
    packet_id: int
    margin_db: float
    p_laser_dbm: float
    reason: str


def budget_audit(report: SimReport, models: LinkModels = LinkModels()) -> list[BudgetViolation]:
    """Re-check the laser budget for every delivered packet."""
    r = report.records
    if len(r) == 0:
        return []
    keys = np.stack([r.q, r.br, r.n_active.astype(float)], axis=1)
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    fixed = np.array([worst_penalty_db(models.link_template.with_(n_lambda=int(n), q_factor=float(q),
                                                                  bitrate_gbps=float(br)), models.penalty_model)
                      + 10.0 * math.log10(n) + sensitivity(float(br), models.sens_model)
                      for q, br, n in uniq])
    margin = r.p_laser_dbm - r.il_db - fixed[inv]
    bad_margin = margin < -FEASIBILITY_TOL_DB
    bad_pmax = r.p_laser_dbm > models.p_max_dbm + FEASIBILITY_TOL_DB
    out = []
    for i in np.flatnonzero(bad_margin | bad_pmax).tolist():
        reason = "margin" if bad_margin[i] else "p_max"
        if bad_margin[i] and bad_pmax[i]:
            reason = "margin,p_max"
        out.append(BudgetViolation(int(r.id[i]), float(margin[i]), float(r.p_laser_dbm[i]), reason))
    return out
