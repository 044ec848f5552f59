import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnockit.traffic import (
    FlitRequest,
    SystemDims,
    TraceParseError,
    TrafficArrays,
    TrafficSpec,
    generate,
    generate_arrays,
    read_trace,
    write_trace,
)

SMALL = SystemDims(32, 8)


def _trace(tmp_path, body, name="t.csv"):
    p = tmp_path / name
    p.write_text("time_ns,src_core,dst_core,size_bits\n" + body, encoding="utf-8")
    return p


class TestTrafficSpec:
    @pytest.mark.parametrize("rate", [0.0, -0.1, 1.5])
    def test_rate_bounds(self, rate):
        with pytest.raises(ValueError):
            TrafficSpec(injection_rate=rate)

    def test_rate_one_allowed(self):
        assert TrafficSpec(injection_rate=1.0).injection_rate == 1.0

    @pytest.mark.parametrize("kw", [dict(kind="bursty"), dict(kind="trace"), dict(duration_cycles=-1),
                                    dict(hotspot_fraction=1.5), dict(packet_size_bits=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TrafficSpec(**kw)

    def test_dims(self):
        with pytest.raises(ValueError):
            SystemDims(30, 8)
        assert SystemDims().n_clusters == 32


class TestGenerate:
    def test_transpose_four_cores(self):
        dims = SystemDims(4, 1)
        reqs = list(generate(TrafficSpec("transpose", 0.5, 200, seed=2), dims))
        assert reqs and all(r.dst_core == 2 for r in reqs if r.src_core == 0)
        assert {(r.src_core, r.dst_core) for r in reqs} <= {(0, 2), (1, 3), (2, 0), (3, 1)}

    def test_deterministic(self):
        spec = TrafficSpec(injection_rate=0.2, duration_cycles=500, seed=11)
        assert generate_arrays(spec, SMALL).to_bytes() == generate_arrays(spec, SMALL).to_bytes()

    def test_seed_changes_stream(self):
        a = generate_arrays(TrafficSpec(seed=1, duration_cycles=500), SMALL)
        b = generate_arrays(TrafficSpec(seed=2, duration_cycles=500), SMALL)
        assert a.to_bytes() != b.to_bytes()

    def test_uniform_is_inter_cluster(self):
        t = generate_arrays(TrafficSpec(injection_rate=0.3, duration_cycles=1000, seed=4), SMALL)
        assert (t.src_core // 8 != t.dst_core // 8).all()
        assert t.dst_core.min() >= 0 and t.dst_core.max() < 32
        # every other cluster is reachable
        assert set((t.dst_core[t.src_core // 8 == 0] // 8).tolist()) == {1, 2, 3}

    def test_sorted_and_on_clock_edges(self):
        t = generate_arrays(TrafficSpec(injection_rate=0.3, duration_cycles=1000, seed=4), SMALL)
        assert (np.diff(t.time_ns) >= 0).all()
        assert np.allclose(t.time_ns * 5, np.round(t.time_ns * 5))
        assert t.time_ns.max() < 1000 / 5

    def test_rate_converges(self):
        spec = TrafficSpec(injection_rate=0.1, duration_cycles=100_000, seed=5)
        t = generate_arrays(spec, SystemDims(16, 8))
        assert len(t) / (16 * 100_000) == pytest.approx(0.1, rel=0.02)

    def test_hotspot_share(self):
        spec = TrafficSpec("hotspot", 0.2, 5000, seed=6, hotspot_fraction=0.5, hotspot_cluster=1)
        t = generate_arrays(spec, SMALL)
        others = t.src_core // 8 != 1
        share = np.mean(t.dst_core[others] // 8 == 1)
        # half forced plus a third of the uniform remainder
        assert share == pytest.approx(0.5 + 0.5 / 3, abs=0.03)

    def test_zero_duration(self):
        assert len(generate_arrays(TrafficSpec(duration_cycles=0), SMALL)) == 0

    def test_iteration_yields_requests(self):
        t = generate_arrays(TrafficSpec(duration_cycles=50, seed=3), SMALL)
        r = next(iter(t))
        assert isinstance(r, FlitRequest) and r.size_bits == 512

    @settings(max_examples=25, deadline=None)
    @given(rate=st.floats(0.01, 1.0), seed=st.integers(0, 2**31), dur=st.integers(0, 300))
    def test_invariants(self, rate, seed, dur):
        t = generate_arrays(TrafficSpec(injection_rate=rate, duration_cycles=dur, seed=seed), SMALL)
        assert (np.diff(t.time_ns) >= 0).all()
        assert (t.src_core // 8 != t.dst_core // 8).all()
        assert len(t) <= 32 * dur


class TestTrace:
    def test_header_only(self, tmp_path):
        assert len(read_trace(_trace(tmp_path, ""))) == 0

    def test_single_line(self, tmp_path):
        t = read_trace(_trace(tmp_path, "0,0,9,512\n"))
        assert list(t) == [FlitRequest(0.0, 0, 9, 512)]

    def test_intra_cluster_skipped(self, tmp_path):
        t = read_trace(_trace(tmp_path, "0,0,3,512\n1,0,9,512\n2,5,5,512\n"))
        assert len(t) == 1 and t.skipped_intra_cluster == 2

    def test_unsorted(self, tmp_path):
        with pytest.raises(TraceParseError, match="line 3"):
            read_trace(_trace(tmp_path, "5,0,9,512\n4,0,9,512\n"))

    def test_out_of_range(self, tmp_path):
        with pytest.raises(TraceParseError, match="line 2: dst_core"):
            read_trace(_trace(tmp_path, "0,0,256,512\n"))

    def test_malformed(self, tmp_path):
        with pytest.raises(TraceParseError, match="line 2"):
            read_trace(_trace(tmp_path, "0,a,9,512\n"))
        with pytest.raises(TraceParseError, match="line 2"):
            read_trace(_trace(tmp_path, "0,0,9\n"))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("t,s,d,b\n", encoding="utf-8")
        with pytest.raises(TraceParseError, match="line 1"):
            read_trace(p)

    def test_round_trip_and_trace_kind(self, tmp_path):
        t = generate_arrays(TrafficSpec(duration_cycles=200, seed=9), SMALL)
        p = tmp_path / "out.csv"
        write_trace(p, t)
        back = generate_arrays(TrafficSpec(kind="trace", trace_path=str(p)), SMALL)
        assert back.to_bytes() == t.to_bytes()

    def test_from_requests(self):
        t = TrafficArrays.from_requests([FlitRequest(1.0, 0, 9)], skipped=3)
        assert len(t) == 1 and t.skipped_intra_cluster == 3
