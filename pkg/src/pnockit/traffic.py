"""
Packet injection streams: seeded synthetic patterns and a CSV trace format.

Intra-cluster packets travel over the electrical cluster network and never
reach the photonic crossbar, so generators never emit them and the trace
reader drops (and counts) them.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

KINDS = ("uniform_random", "hotspot", "transpose", "trace")
TRACE_HEADER = ("time_ns", "src_core", "dst_core", "size_bits")


class TraceParseError(ValueError):
    pass


class FlitRequest(NamedTuple):
    inject_time_ns: float
    src_core: int
    dst_core: int
    size_bits: int = 512


@dataclass(frozen=True)
class SystemDims:
    n_cores: int = 256
    cores_per_cluster: int = 8
    clock_ghz: float = 5.0

    def __post_init__(self) -> None:
        if self.n_cores < 1 or self.cores_per_cluster < 1 or self.n_cores % self.cores_per_cluster:
            raise ValueError("n_cores must be a positive multiple of cores_per_cluster")
        if not self.clock_ghz > 0:
            raise ValueError("clock_ghz must be positive")

    @property
    def n_clusters(self) -> int:
        return self.n_cores // self.cores_per_cluster


@dataclass(frozen=True)
class TrafficSpec:
    kind: str = "uniform_random"
    injection_rate: float = 0.1
    duration_cycles: int = 10_000
    seed: int = 1
    hotspot_fraction: float = 0.2
    hotspot_cluster: int = 0
    trace_path: str | None = None
    packet_size_bits: int = 512

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"traffic kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "trace":
            if not self.trace_path:
                raise ValueError("trace traffic needs trace_path")
        elif not 0 < self.injection_rate <= 1:
            raise ValueError(f"injection_rate must be in (0, 1], got {self.injection_rate}")
        if int(self.duration_cycles) != self.duration_cycles or self.duration_cycles < 0:
            raise ValueError("duration_cycles must be a non-negative integer")
        if not 0 <= self.hotspot_fraction <= 1:
            raise ValueError("hotspot_fraction must be in [0, 1]")
        if self.packet_size_bits <= 0:
            raise ValueError("packet_size_bits must be positive")


@dataclass(frozen=True, eq=False)
class TrafficArrays:
    """Columnar stream, sorted by (time, source core)."""

    time_ns: np.ndarray
    src_core: np.ndarray
    dst_core: np.ndarray
    size_bits: np.ndarray
    skipped_intra_cluster: int = 0

    def __len__(self) -> int:
        return len(self.time_ns)

    def __iter__(self) -> Iterator[FlitRequest]:
        for t, s, d, b in zip(self.time_ns.tolist(), self.src_core.tolist(),
                              self.dst_core.tolist(), self.size_bits.tolist()):
            yield FlitRequest(t, s, d, b)

    def to_bytes(self) -> bytes:
        return b"".join(a.astype(a.dtype.newbyteorder("<")).tobytes()
                        for a in (self.time_ns, self.src_core, self.dst_core, self.size_bits))

    @classmethod
    def from_requests(cls, reqs: Sequence[FlitRequest], skipped: int = 0) -> "TrafficArrays":
        reqs = list(reqs)
        return cls(
            np.array([r.inject_time_ns for r in reqs], dtype=np.float64),
            np.array([r.src_core for r in reqs], dtype=np.int64),
            np.array([r.dst_core for r in reqs], dtype=np.int64),
            np.array([r.size_bits for r in reqs], dtype=np.int64),
            skipped,
        )


def _injection_cycles(rng: np.random.Generator, rate: float, duration: int) -> np.ndarray:
    """Cycles in [0, duration) where a Bernoulli(rate) source fires."""
    if duration == 0:
        return np.empty(0, dtype=np.int64)
    expected = rate * duration
    n = int(expected + 6.0 * np.sqrt(expected) + 16)
    cycles = np.cumsum(rng.geometric(rate, size=n)) - 1
    while cycles[-1] < duration:
        more = np.cumsum(rng.geometric(rate, size=n)) + cycles[-1]
        cycles = np.concatenate([cycles, more])
    return cycles[cycles < duration]


def _other_cluster_core(rng, src: np.ndarray, dims: SystemDims) -> np.ndarray:
    cpc = dims.cores_per_cluster
    r = rng.integers(0, dims.n_cores - cpc, size=len(src))
    base = (src // cpc) * cpc
    return np.where(r >= base, r + cpc, r)


def generate_arrays(spec: TrafficSpec, dims: SystemDims = SystemDims()) -> TrafficArrays:
    """Synthetic stream; identical (spec, dims) always gives identical arrays."""
    if spec.kind == "trace":
        return read_trace(spec.trace_path, dims)
    if dims.n_clusters < 2:
        raise ValueError("inter-cluster traffic needs at least two clusters")
    rng = np.random.default_rng(spec.seed)
    per_core = [_injection_cycles(rng, spec.injection_rate, spec.duration_cycles) for _ in range(dims.n_cores)]
    cycles = np.concatenate(per_core) if per_core else np.empty(0, dtype=np.int64)
    src = np.repeat(np.arange(dims.n_cores, dtype=np.int64), [len(c) for c in per_core])
    order = np.lexsort((src, cycles))
    cycles, src = cycles[order], src[order]

    cpc = dims.cores_per_cluster
    if spec.kind == "uniform_random":
        dst = _other_cluster_core(rng, src, dims)
    elif spec.kind == "hotspot":
        dst = _other_cluster_core(rng, src, dims)
        hot = (rng.random(len(src)) < spec.hotspot_fraction) & (src // cpc != spec.hotspot_cluster)
        dst = np.where(hot, spec.hotspot_cluster * cpc + rng.integers(0, cpc, size=len(src)), dst)
    else:  # transpose
        dst = (src + dims.n_cores // 2) % dims.n_cores
        keep = dst // cpc != src // cpc
        cycles, src, dst = cycles[keep], src[keep], dst[keep]

    return TrafficArrays(
        cycles.astype(np.float64) / dims.clock_ghz,
        src,
        dst.astype(np.int64),
        np.full(len(src), spec.packet_size_bits, dtype=np.int64),
    )


def generate(spec: TrafficSpec, dims: SystemDims = SystemDims()) -> Iterator[FlitRequest]:
    return iter(generate_arrays(spec, dims))


def read_trace(path: str | os.PathLike, dims: SystemDims = SystemDims()) -> TrafficArrays:
    """Parse a trace CSV; ``skipped_intra_cluster`` counts dropped local packets."""
    reqs: list[FlitRequest] = []
    skipped = 0
    last_t = -np.inf
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != TRACE_HEADER:
            raise TraceParseError(f"line 1: expected header {','.join(TRACE_HEADER)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 4:
                raise TraceParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
            try:
                t = float(row[0])
                s, d, b = int(row[1]), int(row[2]), int(row[3])
            except ValueError:
                raise TraceParseError(f"line {lineno}: malformed field in {','.join(row)!r}") from None
            if not np.isfinite(t) or t < 0:
                raise TraceParseError(f"line {lineno}: time_ns must be finite and >= 0")
            if t < last_t:
                raise TraceParseError(f"line {lineno}: timestamps not sorted ({t} after {last_t})")
            for name, core in (("src_core", s), ("dst_core", d)):
                if not 0 <= core < dims.n_cores:
                    raise TraceParseError(f"line {lineno}: {name} {core} outside 0..{dims.n_cores - 1}")
            if b <= 0:
                raise TraceParseError(f"line {lineno}: size_bits must be positive")
            last_t = t
            if s // dims.cores_per_cluster == d // dims.cores_per_cluster:
                skipped += 1
                continue
            reqs.append(FlitRequest(t, s, d, b))
    return TrafficArrays.from_requests(reqs, skipped)


def write_trace(path: str | os.PathLike, requests) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in requests:
            w.writerow([repr(float(r.inject_time_ns)), int(r.src_core), int(r.dst_core), int(r.size_bits)])
