import math

import pytest
from hypothesis import given, strategies as st

from oracles import er_penalty_oracle, filter_penalty_oracle
from pnockit.calibration import (
    Q_GRID,
    calibrate_er_anchor,
    default_penalty_model_is_calibrated,
    er_for_penalty,
    fit_filter_constants,
    nlambda_window,
)
from pnockit.link_models import DEFAULT_ER_MODEL, ErModel, FilterModel, PenaltyModel, er_penalty, max_supported_nlambda


def test_shipped_filter_constants_are_a_fit():
    m = FilterModel()
    fits = fit_filter_constants([m.xtalk_weight], [m.intrinsic_q])
    assert len(fits) == 1 and fits[0].argmin_q == 9750


def test_fit_family_for_shipped_weight():
    fits = fit_filter_constants([2.82], [20000, 20500, 21000, 21500, 22000, 22500, 23000, 23500])
    assert sorted(f.intrinsic_q for f in fits) == [21500, 22000, 22500]


def test_fit_min_penalty_matches_oracle():
    f = fit_filter_constants([2.82], [22500])[0]
    assert f.min_penalty_db == pytest.approx(filter_penalty_oracle(9750, 10, 55), rel=1e-11)


def test_literal_form_is_nonviable_on_whole_grid():
    from pnockit.link_models import LinkConfig, filter_crosstalk_penalty
    lit = FilterModel.literal()
    assert all(filter_crosstalk_penalty(LinkConfig(55, 10, q), model=lit) == math.inf for q in Q_GRID)


def test_power_sum_without_drop_term_misses_target():
    # without the intrinsic-Q drop loss the penalty keeps falling towards the top of the grid
    assert fit_filter_constants([2.0, 2.82], [math.inf]) == []


def test_window():
    lo, hi = nlambda_window()
    assert lo == pytest.approx(0.14769, abs=1e-5) and hi == pytest.approx(0.23608, abs=1e-5)
    assert lo < er_penalty(16.6) <= hi


def test_anchor_is_frozen_default():
    assert calibrate_er_anchor() == DEFAULT_ER_MODEL == ErModel(((6000.0, 17.5), (7000.0, 16.6)))
    assert default_penalty_model_is_calibrated(PenaltyModel())


def test_er_penalty_golden():
    assert er_penalty(16.6) == pytest.approx(er_penalty_oracle(16.6), rel=1e-14)
    assert er_penalty(16.6) == pytest.approx(0.19005688638637347, rel=1e-12)


@given(st.floats(0.001, 3.0))
def test_er_for_penalty_inverts(p):
    assert er_penalty(er_for_penalty(p)) == pytest.approx(p, rel=1e-9)


def test_er_for_penalty_domain():
    with pytest.raises(ValueError):
        er_for_penalty(0.0)


@pytest.mark.parametrize("delta", [-1.0, -0.5, 0.5, 1.0])
@pytest.mark.parametrize("which", [0, 1])
def test_anchor_perturbation(delta, which):
    pts = [list(p) for p in DEFAULT_ER_MODEL.anchor_points]
    pts[which][1] += delta
    model = PenaltyModel(ErModel(tuple(tuple(p) for p in pts)))
    n = max_supported_nlambda(20, 10, 7000, 10, penalty_model=model).n_lambda
    assert n in (54, 55)


def test_q_grid():
    assert len(Q_GRID) == 29
