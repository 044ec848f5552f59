"""
Walk through the link budget of one 55-channel DWDM waveguide.

Run with ``python demos/01_link_budget.py``.
"""

import numpy as np

from pnockit import (
    LinkConfig,
    crosstalk_ratio,
    filter_crosstalk_penalty,
    max_supported_nlambda,
    residual_margin,
    static_p_laser,
    total_power_penalty,
)
from pnockit.link_models import spacing_to_detuning_ghz

# Neighbouring channels sit 0.37 nm apart, about 46 GHz at 1550 nm.
det = spacing_to_detuning_ghz(0.37)
print(f"channel spacing: {det:.2f} GHz")

# Share of an aggressor's power that leaks into a Q=9750 drop filter, by offset.
for k in (1, 2, 5, 27):
    print(f"  offset {k:2d}: gamma = {crosstalk_ratio(9750, 10, k * det, 193.4):.3e}")

# Filter penalty of the centre channel across the Q grid at 10 Gb/s.
qs = np.arange(5000, 12001, 250)
pens = np.array([filter_crosstalk_penalty(LinkConfig(55, 10, q)) for q in qs])
finite = np.isfinite(pens)
print(f"\nfilter penalty is finite for Q >= {qs[finite][0]:.0f}; best Q = {qs[np.argmin(pens)]:.0f} "
      f"({pens.min():.2f} dB)")

# The full power penalty at the common Q=7000, 10 Gb/s operating point.
b = total_power_penalty(LinkConfig(55, 10, 7000))
print(f"\nQ=7000: ER {b.er_penalty_db:.3f} + modulator {b.mod_xtalk_db:.1f} + filter {b.fil_xtalk_db:.2f} "
      f"= {b.total_db:.2f} dB")

# With 20 dBm of laser power and 10 dB of loss this budget carries 55 channels.
n = max_supported_nlambda(20, 10, 7000, 10)
print(f"channels supported at 20 dBm, 10 dB IL: {n.n_lambda}")

# Re-optimising Q lets a fixed, lower laser power close the same worst case.
p = static_p_laser(10.0)
print(f"\nstatic laser power at the worst-case 10 dB path: {p:.1f} dBm")
for il in (0.5, 5.0, 10.0):
    print(f"  margin at IL {il:4.1f} dB, Q=9750, 10 Gb/s: {residual_margin(p, il, LinkConfig(55, 10, 9750)):.2f} dB")
