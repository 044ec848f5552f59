"""
Fitting the free constants of the link models to reference design points.

Two things are calibrated:

* the filter model (``xtalk_weight`` and ``intrinsic_q``) so that the
  filter penalty at 10 Gb/s, 55 channels, 0.37 nm spacing is minimised
  at a target Q;
* the second ER anchor so that the budget at Q=7000 supports exactly a
  target channel count.

The shipped defaults in ``pnockit.link_models`` are frozen outputs of these
routines; the test suite re-runs them to make sure the two stay in sync.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .link_models import (
    ErModel,
    FilterModel,
    LinkConfig,
    PenaltyModel,
    SensitivityModel,
    _aggressor_offsets,
    _crosstalk_ratios,
    er_penalty,
    filter_crosstalk_penalty,
    sensitivity,
)

Q_GRID = tuple(range(5000, 12001, 250))


def _aggregate_sums(q_grid, bitrate_gbps, n_lambda, spacing_nm, center_wavelength_nm, aggregation):
    cfg0 = LinkConfig(n_lambda, bitrate_gbps, q_grid[0], spacing_nm, math.inf, center_wavelength_nm)
    offsets = _aggressor_offsets(n_lambda, cfg0.worst_channel)
    ks = np.array([k for k, _ in offsets], dtype=float)
    mult = np.array([m for _, m in offsets], dtype=float)
    sums = []
    for q in q_grid:
        g = _crosstalk_ratios(q, bitrate_gbps, ks * cfg0.channel_detuning_ghz, cfg0.center_frequency_thz)
        if aggregation == "amplitude":
            g = np.sqrt(g)
        sums.append(float(mult @ g))
    return np.array(sums)


@dataclass(frozen=True)
class FilterFit:
    xtalk_weight: float
    intrinsic_q: float
    argmin_q: float
    min_penalty_db: float


def fit_filter_constants(weights, intrinsic_qs, target_q: float = 9750.0, q_grid=Q_GRID,
                         bitrate_gbps: float = 10.0, n_lambda: int = 55, spacing_nm: float = 0.37,
                         center_wavelength_nm: float = 1550.0) -> list[FilterFit]:
    """All (weight, intrinsic Q) combinations whose grid argmin equals ``target_q``.

    The aggressor sums do not depend on either constant, so they are
    computed once per grid Q.
    """
    q = np.asarray(q_grid, dtype=float)
    sums = _aggregate_sums(q_grid, bitrate_gbps, n_lambda, spacing_nm, center_wavelength_nm, "power")
    fits = []
    for w in weights:
        x = w * sums
        with np.errstate(divide="ignore", invalid="ignore"):
            xt = np.where(x < 1.0, -10.0 * np.log10(1.0 - x), np.inf)
        for qi in intrinsic_qs:
            with np.errstate(divide="ignore", invalid="ignore"):
                drop = np.where(q < qi, -20.0 * np.log10(1.0 - q / qi), np.inf)
            pen = xt + drop
            if not np.isfinite(pen).any():
                continue
            best = float(pen.min())
            # ties toward larger Q, matching the optimizer
            idx = int(np.flatnonzero(pen == best)[-1])
            if q[idx] == target_q:
                fits.append(FilterFit(float(w), float(qi), float(q[idx]), best))
    return fits


def nlambda_window(q_factor: float = 7000.0, bitrate_gbps: float = 10.0, il_db: float = 10.0,
                   p_laser_dbm: float = 20.0, target_n: int = 55, spacing_nm: float = 0.37,
                   filter_model: FilterModel | None = None, mod_xtalk_db: float = 1.0,
                   sens_model: SensitivityModel | None = None) -> tuple[float, float]:
    """Open/closed interval (lo, hi] of ER penalty giving exactly ``target_n`` channels."""
    sens_model = sens_model or SensitivityModel()
    filter_model = filter_model or FilterModel()
    s = sensitivity(bitrate_gbps, sens_model)

    def headroom(n):
        cfg = LinkConfig(n, bitrate_gbps, q_factor, spacing_nm, math.inf)
        fil = filter_crosstalk_penalty(cfg, model=filter_model)
        return p_laser_dbm - il_db - s - 10.0 * math.log10(n) - mod_xtalk_db - fil

    return headroom(target_n + 1), headroom(target_n)


def er_for_penalty(penalty_db: float) -> float:
    """Invert er_penalty: the extinction ratio (dB) giving ``penalty_db``."""
    if not penalty_db > 0:
        raise ValueError("penalty_db must be positive")
    a = 10.0 ** (-penalty_db / 10.0)
    r = (1.0 + a) / (1.0 - a)
    return 10.0 * math.log10(r)


def calibrate_er_anchor(q_factor: float = 7000.0, target_n: int = 55,
                        fixed_anchor: tuple[float, float] = (6000.0, 17.5),
                        round_to_db: float = 0.1, **window_kwargs) -> ErModel:
    """ER model with the calibration anchor placed mid-window for ``target_n``."""
    lo, hi = nlambda_window(q_factor=q_factor, target_n=target_n, **window_kwargs)
    if hi <= 0 or hi <= lo:
        raise ValueError(f"no ER reproduces {target_n} channels (window {lo:.4f}..{hi:.4f} dB)")
    er = er_for_penalty(0.5 * (max(lo, 0.0) + hi))
    er = round(er / round_to_db) * round_to_db
    assert lo < er_penalty(er) <= hi, "rounding left the calibration window"
    return ErModel((fixed_anchor, (q_factor, round(er, 6))))


def default_penalty_model_is_calibrated(model: PenaltyModel) -> bool:
    return calibrate_er_anchor(filter_model=model.filter_model) == model.er_model
