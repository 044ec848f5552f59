import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pnockit.loss_map import (
    FULL,
    PROPAGATION_ONLY,
    ChipLayout,
    IlMatrix,
    IlMatrixParseError,
    LossParams,
    PathProfile,
    build_il_matrix,
    calibrated_layout,
    format_il_matrix,
    load_il_matrix,
    parse_il_matrix,
    path_insertion_loss,
    path_profile,
    quantize_il,
    save_il_matrix,
)

profiles = st.builds(PathProfile, st.floats(0, 50), st.integers(0, 40), st.integers(0, 4), st.integers(0, 4))


class TestPathInsertionLoss:
    def test_p1(self):
        assert path_insertion_loss(PathProfile(1.74, 0)) == pytest.approx(0.9396, abs=1e-12)
        assert path_insertion_loss(PathProfile(1.74, 0)) == pytest.approx(0.94, abs=0.01)

    def test_p2(self):
        assert path_insertion_loss(PathProfile(2.61, 1)) == pytest.approx(1.4144, abs=1e-12)
        assert path_insertion_loss(PathProfile(2.61, 1)) == pytest.approx(1.41, abs=0.01)

    def test_zero(self):
        assert path_insertion_loss(PathProfile(0.0, 0)) == 0.0

    def test_full_adds_fixed_losses(self):
        p = PathProfile(1.0, 2, 1, 1)
        assert path_insertion_loss(p, composition=FULL) == pytest.approx(0.54 + 0.01 + 0.5 + 2.0)
        assert path_insertion_loss(p) == pytest.approx(0.55)

    def test_bad_composition(self):
        with pytest.raises(ValueError):
            path_insertion_loss(PathProfile(1.0), composition="bogus")

    @pytest.mark.parametrize("kw", [dict(length_cm=-1), dict(length_cm=1, n_bends=-1)])
    def test_invalid_profile(self, kw):
        with pytest.raises(ValueError):
            PathProfile(**kw)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            LossParams(waveguide_db_per_cm=-0.1)

    @given(a=profiles, b=profiles, comp=st.sampled_from([PROPAGATION_ONLY, FULL]))
    def test_additive(self, a, b, comp):
        assert path_insertion_loss(a + b, composition=comp) == pytest.approx(
            path_insertion_loss(a, composition=comp) + path_insertion_loss(b, composition=comp), rel=1e-12, abs=1e-12)


class TestGeometry:
    def test_adjacent_same_row(self):
        lay = ChipLayout(n_gis=4, n_rows=2, row_length_cm=1.5, gi_positions_cm=(0.0, 0.5, 1.0, 3.0))
        p = path_profile(lay, 0, 1)
        assert p.length_cm == pytest.approx(0.5) and p.n_bends == 0

    def test_start_to_end_is_full_serpentine(self):
        lay = ChipLayout()
        p = path_profile(lay, 0, lay.n_gis - 1)
        assert p.length_cm == pytest.approx(lay.serpentine_length_cm)
        assert p.n_bends == 2 * (lay.n_rows - 1)

    def test_wrapped_path_uses_return_leg(self):
        lay = ChipLayout()
        p = path_profile(lay, lay.n_gis - 1, 0)
        assert p.length_cm == pytest.approx(lay.return_length_cm)
        assert p.n_bends == lay.return_bends

    def test_self_send_rejected(self):
        with pytest.raises(ValueError):
            path_profile(ChipLayout(), 3, 3)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            path_profile(ChipLayout(), 0, 16)

    def test_layout_must_fit_chip(self):
        with pytest.raises(ValueError):
            ChipLayout(row_length_cm=2.5)
        with pytest.raises(ValueError):
            ChipLayout(n_gis=1)

    def test_gi_order_permutes_positions(self):
        lay = ChipLayout(n_gis=3, gi_order=(2, 0, 1))
        assert lay.position_of(2) == 0.0


class TestCalibratedLayout:
    def test_default_bounds(self):
        m = build_il_matrix(calibrated_layout(16))
        assert m.min_db == pytest.approx(0.47, abs=0.05)
        assert m.max_db == pytest.approx(10.0, abs=0.2)

    def test_path_lengths(self):
        m = build_il_matrix(calibrated_layout(16))
        off = m.lengths_cm[~np.eye(16, dtype=bool)]
        # the shortest path is the return leg; its two bends take 0.01 dB off the length budget
        assert off.min() == pytest.approx((0.47 - 0.01) / 0.54, rel=1e-12)
        assert off.min() == pytest.approx(0.47 / 0.54, abs=0.02)
        assert off.max() == pytest.approx(18.5, abs=0.2)

    def test_system_layout_max_stays_at_bound(self):
        m = build_il_matrix(calibrated_layout(32))
        assert m.max_db <= 10.0 + 1e-9
        assert m.max_db == pytest.approx(10.0, abs=0.2)
        assert m.min_db < 0.47  # many GIs: adjacent spacing undercuts the return leg

    def test_two_gis(self):
        m = build_il_matrix(calibrated_layout(2))
        assert m.n_gis == 2 and (m.off_diagonal() >= 0).all()

    def test_deterministic(self):
        a = build_il_matrix(calibrated_layout(16))
        b = build_il_matrix(calibrated_layout(16))
        assert a.losses_db.tobytes() == b.losses_db.tobytes()

    def test_monotone_in_length_at_fixed_bends(self):
        lay = calibrated_layout(16)
        m = build_il_matrix(lay)
        groups = {}
        for s in range(16):
            for d in range(16):
                if s != d:
                    groups.setdefault(path_profile(lay, s, d).n_bends, []).append((m.lengths_cm[s, d], m.losses_db[s, d]))
        for pts in groups.values():
            pts.sort()
            assert all(b[1] >= a[1] for a, b in zip(pts, pts[1:]))

    def test_full_composition_adds_constant(self):
        lay = calibrated_layout(16)
        diff = build_il_matrix(lay, composition=FULL).off_diagonal() - build_il_matrix(lay).off_diagonal()
        assert np.allclose(diff, 2.5)


class TestQuantize:
    @pytest.mark.parametrize("x,want", [(0.47, 0.47), (0.4701, 0.48), (10.0, 10.0), (0.0, 0.0), (1.4144, 1.42)])
    def test_values(self, x, want):
        assert quantize_il(x) == want

    @given(st.floats(0, 100))
    def test_ceiling(self, x):
        q = quantize_il(x)
        assert x - 1e-9 <= q < x + 0.01 + 1e-9


class TestMatrixIo:
    def test_round_trip(self, tmp_path):
        m = build_il_matrix(calibrated_layout(16))
        save_il_matrix(m, tmp_path / "m.csv")
        assert load_il_matrix(tmp_path / "m.csv") == m

    def test_format_header(self):
        m = IlMatrix(np.array([[0, 1.5], [2.0, 0]]))
        assert format_il_matrix(m).splitlines()[0] == "n_gis,2"

    def test_one_by_one(self):
        with pytest.raises(IlMatrixParseError, match="n_gis"):
            parse_il_matrix(io.StringIO("n_gis,1\n0\n"))

    def test_worst_pair(self):
        text = "n_gis,3\n0,1,10.0\n2,0,3\n4,5,0\n"
        assert parse_il_matrix(io.StringIO(text)).worst_pair() == (0, 2)

    def test_negative_names_row_and_column(self):
        with pytest.raises(IlMatrixParseError, match="row 1, column 0"):
            parse_il_matrix(io.StringIO("n_gis,2\n0,1\n-1,0\n"))

    def test_non_numeric(self):
        with pytest.raises(IlMatrixParseError, match="row 0, column 1"):
            parse_il_matrix(io.StringIO("n_gis,2\n0,abc\n1,0\n"))

    def test_non_square(self):
        with pytest.raises(IlMatrixParseError, match="not square"):
            parse_il_matrix(io.StringIO("n_gis,2\n0,1,2\n1,0\n"))
        with pytest.raises(IlMatrixParseError, match="not square"):
            parse_il_matrix(io.StringIO("n_gis,3\n0,1,2\n1,0,2\n"))

    def test_bad_header(self):
        with pytest.raises(IlMatrixParseError, match="line 1"):
            parse_il_matrix(io.StringIO("gis,2\n0,1\n1,0\n"))

    def test_diagonal_ignored(self):
        m = parse_il_matrix(io.StringIO("n_gis,2\nnan,1\n1,-5\n"))
        assert m.losses_db[0, 0] == 0.0 and m.losses_db[1, 1] == 0.0

    def test_immutable(self):
        m = IlMatrix(np.array([[0, 1.0], [1.0, 0]]))
        with pytest.raises(ValueError):
            m.losses_db[0, 1] = 3

    def test_distinct_quantized(self):
        m = IlMatrix(np.array([[0, 1.001, 1.0], [1.0, 0, 2.0], [2.0, 1.0, 0]]))
        assert m.distinct_quantized() == [1.0, 1.01, 2.0]

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            IlMatrix(np.array([[0, math.inf], [1, 0]]))
