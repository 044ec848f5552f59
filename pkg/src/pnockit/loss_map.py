"""
Per-pair insertion loss of the gateway-interface (GI) crossbar.

Light travels one way along a serpentine waveguide that snakes across the
chip in ``n_rows`` rows. GIs tap the waveguide at increasing arc-length
positions. A receiver downstream of its sender is reached directly; one
upstream of it is reached over the return leg of the multiple-writer
multiple-reader (MWMR) loop, so every ordered pair is reachable.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

PROPAGATION_ONLY = "propagation_only"
FULL = "full"
COMPOSITIONS = (PROPAGATION_ONLY, FULL)

IL_QUANTUM_DB = 0.01


class IlMatrixParseError(ValueError):
    pass


def quantize_il(il_db: float) -> float:
    """Round an IL up to the 0.01 dB rule-table key (never understates loss)."""
    return round(math.ceil(round(il_db / IL_QUANTUM_DB, 6)) * IL_QUANTUM_DB, 10)


@dataclass(frozen=True)
class LossParams:
    waveguide_db_per_cm: float = 0.54
    bend_db_per_90deg: float = 0.005
    splitter_db: float = 0.5
    coupler_db: float = 2.0

    def __post_init__(self) -> None:
        for name in ("waveguide_db_per_cm", "bend_db_per_90deg", "splitter_db", "coupler_db"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class PathProfile:
    length_cm: float
    n_bends: int = 0
    n_splitters: int = 0
    n_couplers: int = 0

    def __post_init__(self) -> None:
        if not self.length_cm >= 0:
            raise ValueError("length_cm must be >= 0")
        if min(self.n_bends, self.n_splitters, self.n_couplers) < 0:
            raise ValueError("component counts must be >= 0")

    def __add__(self, other: "PathProfile") -> "PathProfile":
        return PathProfile(self.length_cm + other.length_cm, self.n_bends + other.n_bends,
                           self.n_splitters + other.n_splitters, self.n_couplers + other.n_couplers)


def path_insertion_loss(profile: PathProfile, params: LossParams = LossParams(),
                        composition: str = PROPAGATION_ONLY) -> float:
    if composition not in COMPOSITIONS:
        raise ValueError(f"composition must be one of {COMPOSITIONS}")
    loss = profile.length_cm * params.waveguide_db_per_cm + profile.n_bends * params.bend_db_per_90deg
    if composition == FULL:
        loss += profile.n_splitters * params.splitter_db + profile.n_couplers * params.coupler_db
    return loss


@dataclass(frozen=True)
class ChipLayout:
    """Serpentine waveguide geometry and GI placement.

    ``gi_positions_cm`` are arc-length offsets along the serpentine in
    light-propagation order; ``gi_order`` maps slot -> GI id.
    """

    n_gis: int = 16
    n_rows: int = 10
    row_length_cm: float = 1.655
    serpentine_pitch_cm: float = 0.2
    return_length_cm: float = 0.852
    return_bends: int = 2
    chip_width_cm: float = 2.0
    chip_height_cm: float = 2.0
    gi_order: tuple[int, ...] | None = None
    gi_positions_cm: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_gis < 2:
            raise ValueError("n_gis must be >= 2")
        if self.n_rows < 1:
            raise ValueError("n_rows must be >= 1")
        if self.row_length_cm <= 0 or self.serpentine_pitch_cm < 0 or self.return_length_cm < 0:
            raise ValueError("serpentine dimensions must be positive")
        if self.row_length_cm > self.chip_width_cm:
            raise ValueError(f"row length {self.row_length_cm} cm exceeds chip width {self.chip_width_cm} cm")
        if (self.n_rows - 1) * self.serpentine_pitch_cm > self.chip_height_cm:
            raise ValueError("serpentine rows do not fit the chip height")
        order = tuple(range(self.n_gis)) if self.gi_order is None else tuple(self.gi_order)
        if sorted(order) != list(range(self.n_gis)):
            raise ValueError("gi_order must be a permutation of 0..n_gis-1")
        object.__setattr__(self, "gi_order", order)
        if self.gi_positions_cm is None:
            pos = tuple(float(x) for x in np.linspace(0.0, self.serpentine_length_cm, self.n_gis))
        else:
            pos = tuple(float(x) for x in self.gi_positions_cm)
            if len(pos) != self.n_gis:
                raise ValueError("gi_positions_cm needs one entry per GI")
            if any(b <= a for a, b in zip(pos, pos[1:])) or pos[0] < 0 or pos[-1] > self.serpentine_length_cm + 1e-12:
                raise ValueError("gi_positions_cm must be strictly increasing within the serpentine")
        object.__setattr__(self, "gi_positions_cm", pos)

    @property
    def serpentine_length_cm(self) -> float:
        return self.n_rows * self.row_length_cm + (self.n_rows - 1) * self.serpentine_pitch_cm

    @property
    def bend_positions_cm(self) -> tuple[float, ...]:
        # each row change is a U-turn: two 90 degree bends around the pitch segment
        out = []
        for r in range(self.n_rows - 1):
            end = (r + 1) * self.row_length_cm + r * self.serpentine_pitch_cm
            out += [end, end + self.serpentine_pitch_cm]
        return tuple(out)

    def position_of(self, gi: int) -> float:
        return self.gi_positions_cm[self.gi_order.index(gi)]


def _bends_between(bends: np.ndarray, a: float, b: float) -> int:
    return int(np.count_nonzero((bends > a) & (bends < b)))


def path_profile(layout: ChipLayout, src_gi: int, dst_gi: int) -> PathProfile:
    """Geometry of the path from ``src_gi`` to ``dst_gi``.

    Every path passes one splitter (the sender's tap) and one coupler; these
    only count under the ``full`` composition.
    """
    for g in (src_gi, dst_gi):
        if not 0 <= g < layout.n_gis:
            raise ValueError(f"GI {g} outside 0..{layout.n_gis - 1}")
    if src_gi == dst_gi:
        raise ValueError("src_gi == dst_gi: a GI does not send to itself")
    bends = np.asarray(layout.bend_positions_cm)
    a, b = layout.position_of(src_gi), layout.position_of(dst_gi)
    end = layout.serpentine_length_cm
    if b > a:
        length = b - a
        n_bends = _bends_between(bends, a, b)
    else:
        length = (end - a) + layout.return_length_cm + b
        n_bends = _bends_between(bends, a, end + 1.0) + layout.return_bends + _bends_between(bends, -1.0, b)
    return PathProfile(length, n_bends, 1, 1)


def calibrated_layout(n_gis: int = 16, min_il_db: float = 0.47, max_il_db: float = 10.0,
                      params: LossParams = LossParams(), n_rows: int = 10,
                      pitch_cm: float = 0.2) -> ChipLayout:
    """Layout whose extreme propagation losses hit the given bounds.

    The last-to-first path over the return leg sets the return length. The
    serpentine length is the largest that keeps both the end-to-end path and
    the longest wrapped path (second GI back to the first) within
    ``max_il_db``. With many GIs the adjacent spacing falls below the return
    path, so the minimum then undershoots ``min_il_db``.
    """
    a, b = params.waveguide_db_per_cm, params.bend_db_per_90deg
    n_bends = 2 * (n_rows - 1)
    ret_bends = 2
    ret = (min_il_db - ret_bends * b) / a
    total = (max_il_db - n_bends * b) / a
    if n_gis > 2:
        wrapped = ((max_il_db - (n_bends + ret_bends) * b) / a - ret) * (n_gis - 1) / (n_gis - 2)
        total = min(total, wrapped)
    row = (total - (n_rows - 1) * pitch_cm) / n_rows
    if row <= 0 or ret < 0:
        raise ValueError("IL bounds cannot be met with this row count and pitch")
    return ChipLayout(n_gis=n_gis, n_rows=n_rows, row_length_cm=row, serpentine_pitch_cm=pitch_cm,
                      return_length_cm=ret, return_bends=ret_bends)


@dataclass(frozen=True, eq=False)
class IlMatrix:
    losses_db: np.ndarray
    composition: str = PROPAGATION_ONLY
    lengths_cm: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.losses_db, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"IL matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise ValueError("IL matrix needs n_gis >= 2")
        np.fill_diagonal(m, 0.0)
        if not np.isfinite(m).all() or (m < 0).any():
            raise ValueError("IL entries must be finite and >= 0")
        if self.composition not in COMPOSITIONS:
            raise ValueError(f"composition must be one of {COMPOSITIONS}")
        m.setflags(write=False)
        object.__setattr__(self, "losses_db", m)
        if self.lengths_cm is not None:
            lengths = np.array(self.lengths_cm, dtype=float)
            if lengths.shape != m.shape:
                raise ValueError("lengths_cm must match the IL matrix shape")
            lengths.setflags(write=False)
            object.__setattr__(self, "lengths_cm", lengths)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IlMatrix):
            return NotImplemented
        return self.composition == other.composition and np.array_equal(self.losses_db, other.losses_db)

    __hash__ = None

    @property
    def n_gis(self) -> int:
        return self.losses_db.shape[0]

    def off_diagonal(self) -> np.ndarray:
        return self.losses_db[~np.eye(self.n_gis, dtype=bool)]

    @property
    def min_db(self) -> float:
        return float(self.off_diagonal().min())

    @property
    def max_db(self) -> float:
        return float(self.off_diagonal().max())

    def worst_pair(self) -> tuple[int, int]:
        masked = np.where(np.eye(self.n_gis, dtype=bool), -np.inf, self.losses_db)
        i, j = np.unravel_index(int(np.argmax(masked)), masked.shape)
        return int(i), int(j)

    def quantized(self) -> np.ndarray:
        q = np.vectorize(quantize_il, otypes=[float])(self.losses_db)
        np.fill_diagonal(q, 0.0)
        return q

    def distinct_quantized(self) -> list[float]:
        q = self.quantized()
        return sorted({float(x) for x in q[~np.eye(self.n_gis, dtype=bool)]})


def build_il_matrix(layout: ChipLayout, params: LossParams = LossParams(),
                    composition: str = PROPAGATION_ONLY) -> IlMatrix:
    n = layout.n_gis
    losses = np.zeros((n, n))
    lengths = np.zeros((n, n))
    for s in range(n):
        for d in range(n):
            if s != d:
                prof = path_profile(layout, s, d)
                losses[s, d] = path_insertion_loss(prof, params, composition)
                lengths[s, d] = prof.length_cm
    return IlMatrix(losses, composition, lengths)


def format_il_matrix(matrix: IlMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_gis", matrix.n_gis])
    for row in matrix.losses_db:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def save_il_matrix(matrix: IlMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_il_matrix(matrix))


def parse_il_matrix(lines: Iterable[str], composition: str = PROPAGATION_ONLY) -> IlMatrix:
    rows = [r for r in csv.reader(lines) if r and any(c.strip() for c in r)]
    if not rows:
        raise IlMatrixParseError("empty IL matrix file")
    head = [c.strip() for c in rows[0]]
    if len(head) != 2 or head[0] != "n_gis":
        raise IlMatrixParseError(f"line 1: expected header 'n_gis,<N>', got {','.join(rows[0])!r}")
    try:
        n = int(head[1])
    except ValueError:
        raise IlMatrixParseError(f"line 1: n_gis {head[1]!r} is not an integer") from None
    if n < 2:
        raise IlMatrixParseError(f"line 1: n_gis must be >= 2, got {n}")
    body = rows[1:]
    if len(body) != n:
        raise IlMatrixParseError(f"expected {n} matrix rows, found {len(body)} (not square)")
    m = np.zeros((n, n))
    for i, row in enumerate(body):
        if len(row) != n:
            raise IlMatrixParseError(f"row {i}: expected {n} columns, found {len(row)} (not square)")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise IlMatrixParseError(f"row {i}, column {j}: {cell!r} is not a number") from None
            if i != j and not (math.isfinite(v) and v >= 0):
                raise IlMatrixParseError(f"row {i}, column {j}: entry {cell!r} must be finite and >= 0")
            m[i, j] = v
    return IlMatrix(m, composition)


def load_il_matrix(path: str | os.PathLike, composition: str = PROPAGATION_ONLY) -> IlMatrix:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_il_matrix(fh, composition)
