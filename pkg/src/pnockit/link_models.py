"""
Photonic link physics: crosstalk, extinction-ratio penalty, detector
sensitivity and the laser-power budget of a DWDM microring link.

Every function here is pure. Power quantities are in dB/dBm, frequencies
in GHz/THz, wavelengths in nm, bitrates in Gb/s.

A configuration whose filter crosstalk saturates (the eye is fully closed)
is *nonviable*; its penalty is reported as ``math.inf`` so that budget
arithmetic propagates the rejection (a margin of ``-inf`` is never
feasible) instead of silently clamping.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

C_M_PER_S = 299_792_458.0

NONVIABLE = math.inf

# Slack used in every feasibility comparison, absorbs float round-off only.
FEASIBILITY_TOL_DB = 1e-9


def is_viable(penalty_db: float) -> bool:
    return math.isfinite(penalty_db)


def wavelength_to_frequency_thz(wavelength_nm: float) -> float:
    return C_M_PER_S / (wavelength_nm * 1e-9) * 1e-12


def spacing_to_detuning_ghz(spacing_nm: float, center_wavelength_nm: float = 1550.0) -> float:
    """Convert a wavelength offset to a frequency offset, f = c * dl / l^2."""
    lam = center_wavelength_nm * 1e-9
    return C_M_PER_S * (spacing_nm * 1e-9) / lam**2 * 1e-9


def mw_to_dbm(p_mw: float) -> float:
    if p_mw <= 0:
        return -math.inf
    return 10.0 * math.log10(p_mw)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class LinkConfig:
    """Signalling configuration of one DWDM waveguide.

    ``fsr_nm`` may be ``math.inf`` to lift the comb-span constraint, which
    the N-lambda scan uses to find the budget-limited channel count.
    """

    n_lambda: int = 55
    bitrate_gbps: float = 10.0
    q_factor: float = 9750.0
    spacing_nm: float = 0.37
    fsr_nm: float = 20.0
    center_wavelength_nm: float = 1550.0

    def __post_init__(self) -> None:
        if int(self.n_lambda) != self.n_lambda or self.n_lambda < 1:
            raise ValueError(f"n_lambda must be an integer >= 1, got {self.n_lambda}")
        if not self.bitrate_gbps > 0:
            raise ValueError(f"bitrate_gbps must be positive, got {self.bitrate_gbps}")
        if not self.q_factor > 0:
            raise ValueError(f"q_factor must be positive, got {self.q_factor}")
        if not self.spacing_nm > 0.3:
            raise ValueError(
                f"spacing_nm must exceed 0.3 nm for the fixed modulator-crosstalk term, got {self.spacing_nm}"
            )
        if not self.center_wavelength_nm > 0:
            raise ValueError("center_wavelength_nm must be positive")
        # comb span: n channels occupy (n - 1) spacings
        span = (self.n_lambda - 1) * self.spacing_nm
        if span > self.fsr_nm * (1 + 1e-12):
            raise ValueError(
                f"comb span {span:.3f} nm ({self.n_lambda} x {self.spacing_nm} nm) exceeds FSR {self.fsr_nm} nm"
            )

    @property
    def center_frequency_thz(self) -> float:
        return wavelength_to_frequency_thz(self.center_wavelength_nm)

    @property
    def channel_detuning_ghz(self) -> float:
        return spacing_to_detuning_ghz(self.spacing_nm, self.center_wavelength_nm)

    @property
    def worst_channel(self) -> int:
        # the centre of the comb sees the most close-in aggressors
        return (self.n_lambda - 1) // 2

    def with_(self, **changes) -> "LinkConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class PenaltyBreakdown:
    er_penalty_db: float
    mod_xtalk_db: float
    fil_xtalk_db: float

    @property
    def total_db(self) -> float:
        return self.er_penalty_db + self.mod_xtalk_db + self.fil_xtalk_db

    @property
    def viable(self) -> bool:
        return is_viable(self.total_db)


@dataclass(frozen=True)
class ErModel:
    """Extinction ratio as a piecewise-linear function of Q.

    Queries outside the anchor range clamp to the nearest anchor.
    """

    anchor_points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts = tuple((float(q), float(er)) for q, er in self.anchor_points)
        if not pts:
            raise ValueError("ErModel needs at least one anchor")
        qs = [q for q, _ in pts]
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("ErModel anchors must be strictly increasing in q_factor")
        if any(er <= 0 for _, er in pts):
            raise ValueError("extinction ratio must be > 0 dB at every anchor")
        object.__setattr__(self, "anchor_points", pts)

    def extinction_ratio_db(self, q_factor: float) -> float:
        qs = [q for q, _ in self.anchor_points]
        ers = [er for _, er in self.anchor_points]
        return float(np.interp(q_factor, qs, ers))


@dataclass(frozen=True)
class SensitivityModel:
    s_ref_dbm: float = -20.0
    br_ref_gbps: float = 10.0
    scaling_exponent: float = 1.0

    def __post_init__(self) -> None:
        if not self.br_ref_gbps > 0:
            raise ValueError("br_ref_gbps must be positive")


@dataclass(frozen=True)
class FilterModel:
    """How per-aggressor crosstalk ratios combine into the filter penalty.

    ``aggregation="amplitude"`` with ``xtalk_weight=2`` and no intrinsic Q is
    the textbook worst-case form ``-10 log10(1 - 2 sum sqrt(gamma))``.
    The default aggregates aggressor *power* ratios and adds the drop-port
    loss of the victim filter, ``-20 log10(1 - Q / Q_intrinsic)``, whose
    growth with loaded Q is what gives each bitrate an interior optimum.
    ``xtalk_weight`` and ``intrinsic_q`` are calibration constants, see
    ``pnockit.calibration``.
    """

    aggregation: str = "power"
    xtalk_weight: float = 2.82
    intrinsic_q: float | None = 22500.0

    def __post_init__(self) -> None:
        if self.aggregation not in ("power", "amplitude"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if not self.xtalk_weight >= 0:
            raise ValueError("xtalk_weight must be >= 0")
        if self.intrinsic_q is not None and not self.intrinsic_q > 0:
            raise ValueError("intrinsic_q must be positive")

    @classmethod
    def literal(cls) -> "FilterModel":
        return cls(aggregation="amplitude", xtalk_weight=2.0, intrinsic_q=None)


# Q=6000 -> 17.5 dB is read off the device characterisation; the Q=7000
# anchor is calibrated so the budget at Q=7000, 10 Gb/s, IL=10 dB, 20 dBm
# supports exactly 55 channels (see pnockit.calibration).
DEFAULT_ER_MODEL = ErModel(((6000.0, 17.5), (7000.0, 16.6)))


@dataclass(frozen=True)
class PenaltyModel:
    """Everything that turns a LinkConfig into a power penalty."""

    er_model: ErModel = DEFAULT_ER_MODEL
    filter_model: FilterModel = field(default_factory=FilterModel)
    mod_xtalk_db: float = 1.0
    enabled: bool = True

    @classmethod
    def disabled(cls) -> "PenaltyModel":
        """All penalties zero; used to test the bare budget arithmetic."""
        return cls(enabled=False)


DEFAULT_PENALTY_MODEL = PenaltyModel()
DEFAULT_SENSITIVITY = SensitivityModel()


# ---------------------------------------------------------------------------
# crosstalk
# ---------------------------------------------------------------------------

def crosstalk_ratio(
    q_factor: float,
    bitrate_gbps: float,
    detuning_ghz: float,
    center_frequency_thz: float,
) -> float:
    """Fraction of an NRZ signal's power dropped by a Lorentzian filter.

    ``gamma = 1/(1+b^2) - Re[(1 - exp(-2 pi v (1 - j b))) / (1 - j b)^2] / (2 pi v)``
    with ``v = f0 / (2 Q r_b)`` and ``b = 2 Q f_delta / f0``. At zero
    detuning this is the share of the victim's own power passed to the
    detector. The result is clamped to [0, 1].
    """
    if not q_factor > 0 or not bitrate_gbps > 0 or not center_frequency_thz > 0:
        raise ValueError("q_factor, bitrate_gbps and center_frequency_thz must be positive")
    if detuning_ghz < 0 or math.isnan(detuning_ghz):
        raise ValueError("detuning_ghz must be >= 0")
    if math.isinf(detuning_ghz):
        return 0.0

    f0_hz = center_frequency_thz * 1e12
    v = f0_hz / (2.0 * q_factor * bitrate_gbps * 1e9)
    beta = 2.0 * q_factor * detuning_ghz * 1e9 / f0_hz
    lorentz = 1.0 / (1.0 + beta * beta)
    a = 2.0 * math.pi * v
    if math.isinf(a):
        return _clamp_unit(lorentz)

    z = complex(1.0, -beta)
    w = a * z
    if abs(w) < 1e-4:
        # (1 - e^-w)/w = 1 - w/2 + w^2/6 - w^3/24, avoids 0/0 as v -> 0
        ratio = 1.0 - w / 2.0 + w * w / 6.0 - w * w * w / 24.0
        second = (ratio / z).real
    else:
        second = ((1.0 - cmath.exp(-w)) / (z * z)).real / a
    return _clamp_unit(lorentz - second)


def _clamp_unit(x: float) -> float:
    if math.isnan(x):
        return 0.0
    return min(1.0, max(0.0, x))


def _crosstalk_ratios(q_factor: float, bitrate_gbps: float, detunings_ghz: np.ndarray,
                      center_frequency_thz: float) -> np.ndarray:
    """Vectorised crosstalk_ratio for an array of finite detunings."""
    f0_hz = center_frequency_thz * 1e12
    v = f0_hz / (2.0 * q_factor * bitrate_gbps * 1e9)
    beta = 2.0 * q_factor * np.asarray(detunings_ghz, dtype=float) * 1e9 / f0_hz
    a = 2.0 * math.pi * v
    z = 1.0 - 1j * beta
    lorentz = 1.0 / (1.0 + beta * beta)
    if a < 1e-3:
        return np.array([crosstalk_ratio(q_factor, bitrate_gbps, d, center_frequency_thz)
                         for d in np.asarray(detunings_ghz, dtype=float)])
    second = ((1.0 - np.exp(-a * z)) / (z * z)).real / a
    return np.clip(np.nan_to_num(lorentz - second, nan=0.0), 0.0, 1.0)


@lru_cache(maxsize=4096)
def _offset_ratio_table(q_factor: float, bitrate_gbps: float, max_offset: int,
                        detuning_step_ghz: float, f0_thz: float) -> tuple[float, ...]:
    """gamma at channel offsets 0..max_offset (index 0 is the victim itself)."""
    det = np.arange(max_offset + 1, dtype=float) * detuning_step_ghz
    return tuple(float(g) for g in _crosstalk_ratios(q_factor, bitrate_gbps, det, f0_thz))


def _aggressor_offsets(n_lambda: int, channel_index: int) -> list[tuple[int, int]]:
    """(offset, multiplicity) pairs; mirror channels get identical lists."""
    left, right = channel_index, n_lambda - 1 - channel_index
    near, far = min(left, right), max(left, right)
    return [(k, 2 if k <= near else 1) for k in range(1, far + 1)]


def filter_penalty_terms(cfg: LinkConfig, channel_index: int | None = None,
                         model: FilterModel | None = None) -> tuple[float, float]:
    """(aggressor crosstalk dB, drop-port loss dB) for one channel's filter."""
    model = model or FilterModel()
    ci = cfg.worst_channel if channel_index is None else channel_index
    if not 0 <= ci < cfg.n_lambda:
        raise ValueError(f"channel_index {ci} outside 0..{cfg.n_lambda - 1}")

    drop_db = 0.0
    if model.intrinsic_q is not None:
        if cfg.q_factor >= model.intrinsic_q:
            return NONVIABLE, NONVIABLE
        drop_db = -20.0 * math.log10(1.0 - cfg.q_factor / model.intrinsic_q)

    offsets = _aggressor_offsets(cfg.n_lambda, ci)
    if not offsets:
        return 0.0, drop_db
    table = _offset_ratio_table(float(cfg.q_factor), float(cfg.bitrate_gbps), offsets[-1][0],
                                cfg.channel_detuning_ghz, cfg.center_frequency_thz)
    if model.aggregation == "amplitude":
        total = sum(m * math.sqrt(table[k]) for k, m in offsets)
    else:
        total = sum(m * table[k] for k, m in offsets)
    x = model.xtalk_weight * total
    if x >= 1.0:
        return NONVIABLE, drop_db
    return -10.0 * math.log10(1.0 - x), drop_db


def filter_crosstalk_penalty(cfg: LinkConfig, channel_index: int | None = None,
                             model: FilterModel | None = None) -> float:
    """Filter penalty in dB for ``channel_index`` (default: worst channel).

    Returns ``math.inf`` when the aggregate crosstalk closes the eye.
    """
    xt, drop = filter_penalty_terms(cfg, channel_index, model)
    return xt + drop


# ---------------------------------------------------------------------------
# penalties and budget
# ---------------------------------------------------------------------------

def er_penalty(extinction_ratio_db: float) -> float:
    """Penalty of finite extinction ratio, -10 log10((r - 1)/(r + 1))."""
    if not extinction_ratio_db > 0:
        raise ValueError(f"degenerate modulation: extinction ratio {extinction_ratio_db} dB <= 0")
    if math.isinf(extinction_ratio_db):
        return 0.0
    r = 10.0 ** (extinction_ratio_db / 10.0)
    return -10.0 * math.log10((r - 1.0) / (r + 1.0))


def total_power_penalty(cfg: LinkConfig, model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                        channel_index: int | None = None) -> PenaltyBreakdown:
    if not model.enabled:
        return PenaltyBreakdown(0.0, 0.0, 0.0)
    er_db = er_penalty(model.er_model.extinction_ratio_db(cfg.q_factor))
    fil_db = filter_crosstalk_penalty(cfg, channel_index, model.filter_model)
    return PenaltyBreakdown(er_db, model.mod_xtalk_db, fil_db)


@lru_cache(maxsize=65536)
def worst_penalty_db(cfg: LinkConfig, model: PenaltyModel = DEFAULT_PENALTY_MODEL) -> float:
    """Total penalty of the worst (centre) channel; cached."""
    return total_power_penalty(cfg, model).total_db


def sensitivity(bitrate_gbps: float, model: SensitivityModel = DEFAULT_SENSITIVITY) -> float:
    if not bitrate_gbps > 0:
        raise ValueError("bitrate_gbps must be positive")
    return model.s_ref_dbm + 10.0 * model.scaling_exponent * math.log10(bitrate_gbps / model.br_ref_gbps)


@dataclass(frozen=True)
class PowerBudget:
    p_laser_dbm: float
    p_max_dbm: float
    il_db: float
    n_lambda: int
    penalty: PenaltyBreakdown
    sensitivity_dbm: float

    @property
    def required_dbm(self) -> float:
        return self.il_db + self.penalty.total_db + 10.0 * math.log10(self.n_lambda) + self.sensitivity_dbm

    @property
    def margin_db(self) -> float:
        return self.p_laser_dbm - self.required_dbm

    @property
    def feasible(self) -> bool:
        return (self.margin_db >= -FEASIBILITY_TOL_DB
                and self.p_laser_dbm <= self.p_max_dbm + FEASIBILITY_TOL_DB)


def power_budget(p_laser_dbm: float, il_db: float, cfg: LinkConfig,
                 penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                 sens_model: SensitivityModel = DEFAULT_SENSITIVITY,
                 p_max_dbm: float = 20.0) -> PowerBudget:
    return PowerBudget(
        p_laser_dbm=p_laser_dbm,
        p_max_dbm=p_max_dbm,
        il_db=il_db,
        n_lambda=cfg.n_lambda,
        penalty=total_power_penalty(cfg, penalty_model),
        sensitivity_dbm=sensitivity(cfg.bitrate_gbps, sens_model),
    )


def min_required_p_laser(il_db: float, cfg: LinkConfig,
                         penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                         sens_model: SensitivityModel = DEFAULT_SENSITIVITY) -> float:
    """Smallest per-waveguide laser power (dBm) closing the budget; inf if nonviable."""
    return (il_db + worst_penalty_db(cfg, penalty_model) + 10.0 * math.log10(cfg.n_lambda)
            + sensitivity(cfg.bitrate_gbps, sens_model))


def residual_margin(p_laser_dbm: float, il_db: float, cfg: LinkConfig,
                    penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                    sens_model: SensitivityModel = DEFAULT_SENSITIVITY) -> float:
    """Residual e = P_laser - IL - PP - 10 log10(N) - S at the worst channel.

    ``-inf`` for a nonviable configuration.
    """
    return p_laser_dbm - min_required_p_laser(il_db, cfg, penalty_model, sens_model)


class NlambdaResult(NamedTuple):
    n_lambda: int
    feasible: bool


def max_supported_nlambda(p_laser_dbm: float, il_db: float, q_factor: float, bitrate_gbps: float,
                          spacing_nm: float = 0.37,
                          penalty_model: PenaltyModel = DEFAULT_PENALTY_MODEL,
                          sens_model: SensitivityModel = DEFAULT_SENSITIVITY,
                          *, p_max_dbm: float = 20.0, fsr_nm: float = math.inf,
                          center_wavelength_nm: float = 1550.0,
                          n_limit: int = 4096) -> NlambdaResult:
    """Largest channel count whose worst channel still closes the budget.

    Scans upward from one channel and stops at the first infeasible count,
    because the penalty grows with the aggressor count. With the default
    ``fsr_nm=inf`` only the power budget limits the result.
    """
    if p_laser_dbm > p_max_dbm + FEASIBILITY_TOL_DB:
        return NlambdaResult(0, False)
    best = 0
    for n in range(1, n_limit + 1):
        if (n - 1) * spacing_nm > fsr_nm:
            break
        cfg = LinkConfig(n, bitrate_gbps, q_factor, spacing_nm, fsr_nm, center_wavelength_nm)
        if residual_margin(p_laser_dbm, il_db, cfg, penalty_model, sens_model) < -FEASIBILITY_TOL_DB:
            break
        best = n
    return NlambdaResult(best, best > 0)
