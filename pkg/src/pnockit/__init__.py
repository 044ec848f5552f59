"""
pnockit: design and evaluation of adaptive photonic network-on-chip links.

Modules
-------
link_models   crosstalk, extinction-ratio penalty, sensitivity, laser budget
loss_map      per-pair insertion loss from a serpentine layout or a CSV file
optimizer     static laser power and per-loss (Q, BR) selection
rules         per-GI 24-bit rule tables and their codecs
traffic       seeded synthetic streams and trace files
sim           discrete-event crossbar simulator and budget audit
metrics       power, latency and energy-per-bit comparisons
calibration   fitting of the free model constants
"""

from .link_models import (
    ErModel,
    FilterModel,
    LinkConfig,
    PenaltyBreakdown,
    PenaltyModel,
    PowerBudget,
    SensitivityModel,
    crosstalk_ratio,
    er_penalty,
    filter_crosstalk_penalty,
    max_supported_nlambda,
    residual_margin,
    sensitivity,
    total_power_penalty,
)
from .loss_map import (
    ChipLayout,
    IlMatrix,
    LossParams,
    PathProfile,
    build_il_matrix,
    calibrated_layout,
    load_il_matrix,
    path_insertion_loss,
)
from .metrics import compare, evaluate
from .optimizer import SearchSpace, StaticDesign, build_static_design, optimal_duplet_for_il, optimal_q_for_br, static_p_laser
from .rules import RuleEntry, RuleTable, SwitchVector, build_rule_tables, decode_entry, encode_entry, lookup
from .sim import SystemConfig, budget_audit, run
from .traffic import FlitRequest, TrafficSpec, generate, read_trace

__version__ = "0.1.0"
