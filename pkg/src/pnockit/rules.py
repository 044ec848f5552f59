"""
Per-GI adaptation rule tables and their bit-exact codecs.

Each GI owns a 64-slot table of 24-bit words::

    bit 23..18  pair_id      sender/receiver pair, local to the table
    bit 17..14  switch       one-hot serdes select, s1 (10 Gb/s) is bit 17
    bit 13..6   q_code       index into the Q grid, 0 = 5000, step 250
    bit  5..0   reserved     must be zero

The binary file is ``b"PRT1"``, gi_id (u16), slot count (u16, 64), then
64 big-endian 3-byte words. Empty slots hold 0xFFFFFF.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from typing import Mapping, Sequence

from .io_utils import atomic_write
from .loss_map import IlMatrix, quantize_il
from .optimizer import DEFAULT_SPACE, SearchSpace, StaticDesign

MAGIC = b"PRT1"
N_SLOTS = 64
WORD_BYTES = 3
HEADER = struct.Struct(">4sHH")
HEADER_BYTES = HEADER.size
TABLE_FILE_BYTES = HEADER_BYTES + N_SLOTS * WORD_BYTES
EMPTY_WORD = 0xFFFFFF

PAIR_BITS, SWITCH_BITS, Q_BITS, RESERVED_BITS = 6, 4, 8, 6
PAIR_SHIFT, SWITCH_SHIFT, Q_SHIFT = 18, 14, 6

TABLE_ACCESS_PS = 40.0
Q_TUNING_PS = 25.0
SERDES_WAKEUP_PS = 200.0

SWITCH_RATES_GBPS = (10.0, 15.0, 20.0, 25.0)


def adaptation_latency_ps(table_access_ps: float = TABLE_ACCESS_PS, q_tuning_ps: float = Q_TUNING_PS,
                          serdes_wakeup_ps: float = SERDES_WAKEUP_PS) -> float:
    """Lookup + Q retune + serdes wake-up, paid once per Proteus transfer."""
    return table_access_ps + q_tuning_ps + serdes_wakeup_ps


class RuleCodecError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class RuleCapacityError(ValueError):
    pass


class RuleLookupMiss(KeyError):
    pass


@dataclass(frozen=True)
class SwitchVector:
    s1: bool = False
    s2: bool = False
    s3: bool = False
    s4: bool = False

    @property
    def bits(self) -> int:
        return (self.s1 << 3) | (self.s2 << 2) | (self.s3 << 1) | int(self.s4)

    @property
    def is_one_hot(self) -> bool:
        return self.s1 + self.s2 + self.s3 + self.s4 == 1

    @classmethod
    def from_bits(cls, bits: int) -> "SwitchVector":
        return cls(bool(bits & 8), bool(bits & 4), bool(bits & 2), bool(bits & 1))

    @classmethod
    def from_string(cls, text: str) -> "SwitchVector":
        if len(text) != 4 or set(text) - {"0", "1"}:
            raise ValueError(f"switch vector must be 4 binary digits, got {text!r}")
        return cls.from_bits(int(text, 2))

    @classmethod
    def for_bitrate(cls, bitrate_gbps: float, rates: Sequence[float] = SWITCH_RATES_GBPS) -> "SwitchVector":
        try:
            idx = [float(r) for r in rates].index(float(bitrate_gbps))
        except ValueError:
            raise ValueError(f"bitrate {bitrate_gbps} Gb/s has no serdes switch") from None
        return cls.from_bits(1 << (3 - idx))

    def bitrate(self, rates: Sequence[float] = SWITCH_RATES_GBPS) -> float:
        if not self.is_one_hot:
            raise ValueError(f"switch vector {self} is not one-hot")
        return float(rates[[self.s1, self.s2, self.s3, self.s4].index(True)])

    def __str__(self) -> str:
        return format(self.bits, "04b")


@dataclass(frozen=True)
class RuleEntry:
    pair_id: int
    switch_vector: SwitchVector
    q_code: int
    reserved: int = 0


def encode_entry(entry: RuleEntry, n_q_codes: int = len(DEFAULT_SPACE.q_grid)) -> int:
    if not 0 <= entry.pair_id < 1 << PAIR_BITS:
        raise RuleCodecError("pair_id", f"{entry.pair_id} does not fit {PAIR_BITS} bits")
    if not entry.switch_vector.is_one_hot:
        raise RuleCodecError("switch_vector", f"{entry.switch_vector} is not one-hot")
    if not 0 <= entry.q_code < n_q_codes:
        raise RuleCodecError("q_code", f"{entry.q_code} outside 0..{n_q_codes - 1}")
    if entry.reserved != 0:
        raise RuleCodecError("reserved", f"reserved bits must be zero, got {entry.reserved:#x}")
    return (entry.pair_id << PAIR_SHIFT) | (entry.switch_vector.bits << SWITCH_SHIFT) | (entry.q_code << Q_SHIFT)


def decode_entry(word: int, n_q_codes: int = len(DEFAULT_SPACE.q_grid)) -> RuleEntry:
    if not 0 <= word < 1 << 24:
        raise RuleCodecError("word", f"{word:#x} is not a 24-bit value")
    reserved = word & ((1 << RESERVED_BITS) - 1)
    if reserved:
        raise RuleCodecError("reserved", f"reserved bits set ({reserved:#08b})")
    switch = SwitchVector.from_bits((word >> SWITCH_SHIFT) & 0xF)
    if not switch.is_one_hot:
        raise RuleCodecError("switch_vector", f"{switch} is not one-hot")
    q_code = (word >> Q_SHIFT) & 0xFF
    if q_code >= n_q_codes:
        raise RuleCodecError("q_code", f"{q_code} outside 0..{n_q_codes - 1}")
    return RuleEntry(word >> PAIR_SHIFT, switch, q_code)


def q_to_code(q_factor: float, space: SearchSpace = DEFAULT_SPACE) -> int:
    try:
        return space.q_grid.index(float(q_factor))
    except ValueError:
        raise ValueError(f"Q {q_factor} is not on the search grid") from None


def code_to_q(q_code: int, space: SearchSpace = DEFAULT_SPACE) -> float:
    return space.q_grid[q_code]


@dataclass(frozen=True)
class RuleTable:
    gi_id: int
    entries: tuple[RuleEntry | None, ...]
    access_latency_ps: float = TABLE_ACCESS_PS

    def __post_init__(self) -> None:
        if len(self.entries) != N_SLOTS:
            raise ValueError(f"a rule table has exactly {N_SLOTS} slots, got {len(self.entries)}")
        for slot, e in enumerate(self.entries):
            if e is not None and e.pair_id != slot:
                raise ValueError(f"slot {slot} holds pair_id {e.pair_id}")

    @property
    def populated(self) -> list[RuleEntry]:
        return [e for e in self.entries if e is not None]

    def to_bytes(self, n_q_codes: int = len(DEFAULT_SPACE.q_grid)) -> bytes:
        out = bytearray(HEADER.pack(MAGIC, self.gi_id, N_SLOTS))
        for e in self.entries:
            word = EMPTY_WORD if e is None else encode_entry(e, n_q_codes)
            out += word.to_bytes(WORD_BYTES, "big")
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes, n_q_codes: int = len(DEFAULT_SPACE.q_grid)) -> "RuleTable":
        if len(data) != TABLE_FILE_BYTES:
            raise RuleCodecError("file", f"expected {TABLE_FILE_BYTES} bytes, got {len(data)}")
        magic, gi_id, count = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise RuleCodecError("magic", f"bad magic {magic!r}")
        if count != N_SLOTS:
            raise RuleCodecError("count", f"expected {N_SLOTS} slots, got {count}")
        entries = []
        for i in range(N_SLOTS):
            off = HEADER_BYTES + i * WORD_BYTES
            word = int.from_bytes(data[off:off + WORD_BYTES], "big")
            entries.append(None if word == EMPTY_WORD else decode_entry(word, n_q_codes))
        return cls(gi_id, tuple(entries))

    def to_json(self, space: SearchSpace = DEFAULT_SPACE) -> str:
        rows = [{"pair_id": e.pair_id, "switch": str(e.switch_vector), "q": code_to_q(e.q_code, space),
                 "br_gbps": e.switch_vector.bitrate(space.br_set_gbps)} for e in self.populated]
        return json.dumps(rows, indent=2) + "\n"


def lookup(table: RuleTable, pair_id: int) -> RuleEntry:
    if not 0 <= pair_id < N_SLOTS or table.entries[pair_id] is None:
        raise RuleLookupMiss(f"GI {table.gi_id}: no rule for pair_id {pair_id}")
    return table.entries[pair_id]


def default_pair_id_map(n_gis: int) -> dict[int, tuple[tuple[int, int], ...]]:
    """Pairs each GI sends on, in lexicographic (sender, receiver) order.

    A pair's position in its GI's list is its pair_id in that GI's table.
    Every GI on the crossbar shares a waveguide group with every other, so
    each sender has ``n_gis - 1`` pairs.
    """
    return {g: tuple((g, d) for d in range(n_gis) if d != g) for g in range(n_gis)}


def build_rule_tables(design: StaticDesign, il_matrix: IlMatrix,
                      pair_id_map: Mapping[int, Sequence[tuple[int, int]]] | None = None,
                      space: SearchSpace = DEFAULT_SPACE) -> list[RuleTable]:
    pair_id_map = default_pair_id_map(il_matrix.n_gis) if pair_id_map is None else pair_id_map
    if len(space.br_set_gbps) != 4:
        raise ValueError("the switch vector encodes exactly four bitrates")
    tables = []
    for gi in range(il_matrix.n_gis):
        pairs = list(pair_id_map.get(gi, ()))
        if len(pairs) > N_SLOTS:
            raise RuleCapacityError(f"GI {gi} takes part in {len(pairs)} pairs; a table holds {N_SLOTS}")
        slots: list[RuleEntry | None] = [None] * N_SLOTS
        for pid, (s, d) in enumerate(pairs):
            point = design.point_for(quantize_il(float(il_matrix.losses_db[s, d])))
            slots[pid] = RuleEntry(pid, SwitchVector.for_bitrate(point.bitrate_gbps, space.br_set_gbps),
                                   q_to_code(point.q_factor, space))
        tables.append(RuleTable(gi, tuple(slots)))
    return tables


def table_filename(gi_id: int, suffix: str) -> str:
    return f"gi{gi_id:02d}.{suffix}"


def write_rule_tables(tables: Sequence[RuleTable], out_dir: str | os.PathLike,
                      space: SearchSpace = DEFAULT_SPACE) -> list[str]:
    written = []
    for t in tables:
        for suffix, payload in (("bin", t.to_bytes(len(space.q_grid))), ("json", t.to_json(space))):
            path = os.path.join(out_dir, table_filename(t.gi_id, suffix))
            atomic_write(path, payload)
            written.append(path)
    return written


def read_rule_tables(in_dir: str | os.PathLike, n_gis: int,
                     space: SearchSpace = DEFAULT_SPACE) -> list[RuleTable]:
    tables = []
    for gi in range(n_gis):
        with open(os.path.join(in_dir, table_filename(gi, "bin")), "rb") as fh:
            t = RuleTable.from_bytes(fh.read(), len(space.q_grid))
        if t.gi_id != gi:
            raise RuleCodecError("gi_id", f"file for GI {gi} carries gi_id {t.gi_id}")
        tables.append(t)
    return tables
