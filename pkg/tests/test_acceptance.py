"""Acceptance criteria 1-11, at their stated tolerances."""

import json
import math
import random
import time

import numpy as np
import pytest

from oracles import duplet_oracle, gamma_oracle, total_penalty_oracle
from pnockit.cli import main
from pnockit.link_models import (
    DEFAULT_ER_MODEL,
    ErModel,
    LinkConfig,
    PenaltyModel,
    crosstalk_ratio,
    er_penalty,
    filter_crosstalk_penalty,
    max_supported_nlambda,
)
from pnockit.loss_map import PathProfile, path_insertion_loss
from pnockit.metrics import evaluate
from pnockit.optimizer import DEFAULT_SPACE, LinkInfeasibleError, optimal_duplet_for_il, static_p_laser
from pnockit.rules import (
    HEADER_BYTES,
    N_SLOTS,
    RuleEntry,
    RuleTable,
    SwitchVector,
    decode_entry,
    encode_entry,
    write_rule_tables,
)
from pnockit.sim import budget_audit, run
from pnockit.traffic import SystemDims, TrafficSpec, generate_arrays

criterion = pytest.mark.criterion


@criterion(1, "ER penalty at 17.5 dB = 0.1546 +/- 0.005 dB")
def test_c01_er_penalty_anchor(note):
    v = er_penalty(17.5)
    note(f"{v:.4f} dB")
    assert v == pytest.approx(0.1546, abs=0.005)


@criterion(2, "path loss 1.74 cm -> 0.94 dB, 2.61 cm + 1 bend -> 1.41 dB (+/- 0.01)")
def test_c02_path_loss_anchors(note):
    p1 = path_insertion_loss(PathProfile(1.74, 0))
    p2 = path_insertion_loss(PathProfile(2.61, 1))
    note(f"{p1:.4f} / {p2:.4f} dB")
    assert p1 == pytest.approx(0.94, abs=0.01)
    assert p2 == pytest.approx(1.41, abs=0.01)


@criterion(3, "filter-crosstalk argmin over Q grid at 10 Gb/s, 55 ch = 9750 +/- 250")
def test_c03_optimal_q(note):
    t0 = time.perf_counter()
    pens = {q: filter_crosstalk_penalty(LinkConfig(55, 10, q, 0.37, center_wavelength_nm=1550))
            for q in DEFAULT_SPACE.q_grid}
    best = min(pens, key=lambda q: (pens[q], -q))
    note(f"argmin {best:.0f}")
    assert abs(best - 9750) <= 250
    assert time.perf_counter() - t0 < 1.0


@criterion(4, "max N-lambda = 55 exactly; ER anchor perturbations <= 1 dB stay within 55 +/- 3")
def test_c04_nlambda(note):
    t0 = time.perf_counter()
    assert max_supported_nlambda(20, 10, 7000, 10).n_lambda == 55
    seen = set()
    for d0 in np.linspace(-1, 1, 5):
        for d1 in np.linspace(-1, 1, 5):
            (q0, e0), (q1, e1) = DEFAULT_ER_MODEL.anchor_points
            m = PenaltyModel(ErModel(((q0, e0 + d0), (q1, e1 + d1))))
            seen.add(max_supported_nlambda(20, 10, 7000, 10, penalty_model=m).n_lambda)
    note(f"perturbed range {min(seen)}..{max(seen)}")
    assert all(abs(n - 55) <= 3 for n in seen)
    assert time.perf_counter() - t0 < 1.0


@criterion(5, "static P_laser at worst-case IL 10 dB = 16 +/- 1 dBm")
def test_c05_static_power(note):
    p = static_p_laser(10.0)
    note(f"{p:.1f} dBm")
    assert p == pytest.approx(16.0, abs=1.0)


@criterion(6, "BR non-increasing and frame delay non-decreasing in IL; BR 10 at 10 dB, 25 at min IL")
def test_c06_adaptation_monotone(system_design, note):
    pts = system_design.per_il_points
    assert all(b.bitrate_gbps <= a.bitrate_gbps for a, b in zip(pts, pts[1:]))
    assert all(b.frame_delay_ns >= a.frame_delay_ns for a, b in zip(pts, pts[1:]))
    assert pts[-1].il_db == 10.0 and pts[-1].bitrate_gbps == 10
    assert pts[0].bitrate_gbps == 25
    note(f"{len(pts)} IL points, BR {pts[0].bitrate_gbps:g}..{pts[-1].bitrate_gbps:g}")


@criterion(7, "budget audit of a 1e6-packet Proteus run: zero violations, P_laser <= 20 dBm")
def test_c07_budget_invariant(system_cfg, system_design, system_rules, system_matrix, note):
    t0 = time.perf_counter()
    traffic = generate_arrays(TrafficSpec(injection_rate=0.2, duration_cycles=20_000, seed=17), SystemDims())
    report = run(system_cfg, traffic, system_rules, system_design, system_matrix)
    violations = budget_audit(report)
    elapsed = time.perf_counter() - t0
    note(f"{report.n_delivered} packets, {len(violations)} violations, {elapsed:.1f} s")
    assert report.n_delivered >= 1_000_000
    assert violations == []
    assert report.records.p_laser_dbm.max() <= 20.0
    assert elapsed < 60


@criterion(8, "crosstalk_ratio vs oracle rel err <= 1e-12 (1000 pts); duplet vs exhaustive (50 inputs)")
def test_c08_oracle_equivalence(note):
    rng = random.Random(2024)
    worst = 0.0
    for _ in range(1000):
        q, br, det = rng.uniform(3000, 20000), rng.uniform(5, 40), rng.uniform(0, 3000)
        got, want = crosstalk_ratio(q, br, det, 193.4), gamma_oracle(q, br, det, 193.4)
        worst = max(worst, abs(got - want) / abs(want))
    assert worst <= 1e-12

    grid, brs = DEFAULT_SPACE.q_grid, DEFAULT_SPACE.br_set_gbps
    table = {(q, br): total_penalty_oracle(q, br, 55) for q in grid for br in brs}
    matched = 0
    for _ in range(50):
        il, p = rng.uniform(0, 12), rng.uniform(12, 20)
        want = duplet_oracle(il, p, table)
        if want is None:
            with pytest.raises(LinkInfeasibleError):
                optimal_duplet_for_il(il, p, strategy="exhaustive")
        else:
            got = optimal_duplet_for_il(il, p, strategy="exhaustive")
            assert (got.q_factor, got.bitrate_gbps) == want[:2]
        matched += 1
    note(f"max rel err {worst:.1e}, {matched}/50 duplets")


@criterion(9, "codec round-trip over all 7424 valid words; table file = 64*3 bytes + header")
def test_c09_codec(tmp_path, system_rules, note):
    n = 0
    for pair in range(64):
        for sw in ("1000", "0100", "0010", "0001"):
            for q in range(len(DEFAULT_SPACE.q_grid)):
                e = RuleEntry(pair, SwitchVector.from_string(sw), q)
                w = encode_entry(e)
                assert decode_entry(w) == e and encode_entry(decode_entry(w)) == w
                n += 1
    assert n == 7424
    write_rule_tables(system_rules[:1], tmp_path)
    size = (tmp_path / "gi00.bin").stat().st_size
    assert size == N_SLOTS * 3 + HEADER_BYTES
    assert len(RuleTable(0, (None,) * N_SLOTS).to_bytes()) == size
    note(f"{n} words, file {size} bytes")


LOADS = (0.05, 0.1, 0.2)
SEEDS = (1, 2, 3)


@criterion(10, "directional results over 3 loads x 3 seeds (latency, total power, EPB, laser power)")
def test_c10_directional(system_cfg, system_design, system_rules, system_matrix, note):
    t0 = time.perf_counter()
    opa_total_wins = 0
    for load in LOADS:
        for seed in SEEDS:
            traffic = generate_arrays(TrafficSpec(injection_rate=load, duration_cycles=2000, seed=seed), SystemDims())
            m = {}
            for p in ("proteus", "opa", "abm", "static"):
                rules = system_rules if p == "proteus" else None
                design = system_design if p == "proteus" else None
                m[p] = evaluate(run(system_cfg.with_(policy=p), traffic, rules, design, system_matrix))
            ctx = f"load {load} seed {seed}"
            pr = m["proteus"]
            assert pr.avg_latency_ns < m["opa"].avg_latency_ns, ctx
            assert pr.avg_latency_ns < m["abm"].avg_latency_ns, ctx
            assert pr.power.total_w < m["abm"].power.total_w, ctx
            assert pr.epb.aggregate_epb < m["abm"].epb.aggregate_epb, ctx
            assert pr.epb.aggregate_epb < m["opa"].epb.aggregate_epb, ctx
            assert pr.power.electrical_laser_w < m["abm"].power.electrical_laser_w, ctx
            assert pr.power.electrical_laser_w < m["static"].power.electrical_laser_w, ctx
            opa_total_wins += m["opa"].power.total_w < pr.power.total_w
    elapsed = time.perf_counter() - t0
    note(f"OPA total power below Proteus in {opa_total_wins}/9 runs (reported only), {elapsed:.0f} s")
    assert elapsed < 300


@criterion(11, "simulate twice with identical config -> byte-identical reports")
def test_c11_determinism(tmp_path, note):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({}), encoding="utf-8")
    t0 = time.perf_counter()
    for d in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--policy", "proteus", "--out", str(tmp_path / d),
                     "--quiet"]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "report_proteus.json" in files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f
    elapsed = time.perf_counter() - t0
    note(f"{len(files)} files identical, {elapsed:.1f} s")
    assert elapsed < 60
