"""
Build the per-loss design sweep for the 32-GI crossbar and pack it into
rule tables.

Run with ``python demos/02_design_and_rules.py``.
"""

import collections

from pnockit import build_il_matrix, build_rule_tables, build_static_design, calibrated_layout
from pnockit.rules import default_pair_id_map, lookup

# Insertion loss of every sender/receiver pair along the serpentine.
matrix = build_il_matrix(calibrated_layout(32))
print(f"IL range {matrix.min_db:.2f} .. {matrix.max_db:.2f} dB, "
      f"{len(matrix.distinct_quantized())} distinct values at 0.01 dB")

# One laser power for the whole chip, then the best (Q, BR) for every loss value.
design = build_static_design(matrix)
print(f"static P_laser {design.p_laser_dbm:.1f} dBm")

by_br = collections.defaultdict(list)
for p in design.per_il_points:
    by_br[p.bitrate_gbps].append(p)
for br in sorted(by_br, reverse=True):
    pts = by_br[br]
    print(f"  {br:4.0f} Gb/s  Q {pts[0].q_factor:.0f}  IL {pts[0].il_db:5.2f}..{pts[-1].il_db:5.2f} dB  "
          f"frame {pts[0].frame_delay_ns:.2f} ns  ({len(pts)} points)")

# Each GI keeps a 64-slot table of 24-bit words, one per destination.
tables = build_rule_tables(design, matrix)
pairs = default_pair_id_map(32)
s, d = matrix.worst_pair()
e = lookup(tables[s], pairs[s].index((s, d)))
print(f"\nworst pair {s}->{d}: switch {e.switch_vector}, q_code {e.q_code}")
print(f"GI 0 table: {len(tables[0].populated)} rules, {len(tables[0].to_bytes())} bytes")
