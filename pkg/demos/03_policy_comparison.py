"""
Run the same uniform-random workload under the four laser policies and
compare power, latency and energy per bit.

Run with ``python demos/03_policy_comparison.py [load] [seed]``.
"""

import sys

from pnockit import SystemConfig, build_rule_tables, build_static_design, compare, run
from pnockit.sim import budget_audit, default_il_matrix
from pnockit.traffic import SystemDims, TrafficSpec, generate_arrays

load = float(sys.argv[1]) if len(sys.argv) > 1 else 0.1
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 3

cfg = SystemConfig()
matrix = default_il_matrix(cfg)
design = build_static_design(matrix)
rules = build_rule_tables(design, matrix)
traffic = generate_arrays(TrafficSpec(injection_rate=load, duration_cycles=2000, seed=seed), SystemDims())
print(f"{len(traffic)} packets at {load} packets/core/cycle\n")

reports = []
for policy in ("proteus", "opa", "abm", "static"):
    kw = dict(rules=rules, design=design) if policy == "proteus" else {}
    r = run(cfg.with_(policy=policy), traffic, il_matrix=matrix, **kw)
    print(f"{policy:8s} latency {r.avg_latency_ns:6.2f} ns  optical {r.total_optical_mw:7.1f} mW  "
          f"budget violations {len(budget_audit(r))}")
    reports.append(r)

table = compare(reports)
print(f"\nnormalised to {table.reference}:")
print(f"{'policy':8s} {'total W':>8s} {'laser W':>8s} {'EPB pJ/b':>9s} {'lat':>6s} {'EPB':>6s}")
for row in table.rows:
    print(f"{row.policy:8s} {row.total_w:8.2f} {row.laser_w:8.2f} {row.aggregate_epb_pj:9.2f} "
          f"{row.norm_latency:6.3f} {row.norm_epb:6.3f}")
