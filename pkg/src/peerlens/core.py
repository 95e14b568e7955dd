"""Shared domain types for peer reliability prediction.

Everything downstream (ingestion, simulation, factor extraction, prediction,
evaluation) is built on the types in this module:

- ``TestCase``      one block-request probe record
- ``CanonicalChain``ground-truth height -> hash mapping
- ``ObservationMatrix`` dense requester x peer grid with missing cells
- ``FactorSet``     the four aligned factor matrices plus the criteria
- ``Criteria``      tolerance thresholds for block backwardness and RTT
- ``ReliabilityParams`` horizon / failure-rate pair for the reliability map

All types are immutable after construction and safe to share across threads.
Identifiers are opaque strings (IP addresses in field data, synthetic names in
simulation); equality is exact string match. Time values are epoch
milliseconds everywhere inside the library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np


class PeerlensError(Exception):
    """Base class for errors raised by this package."""


@dataclass(frozen=True)
class TestCase:
    """One probe: a requester asked one peer for the latest block.

    ``height`` and ``block_hash`` are both present (the peer answered) or
    both absent (null response). Hashes are normalized to lowercase so that
    comparisons are case-insensitive.
    """

    requester_id: str
    batch_time: int
    peer_id: str
    start_time: int
    end_time: int
    height: Optional[int] = None
    block_hash: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.height is None) != (self.block_hash is None):
            raise ValueError("height and block_hash must both be present or both absent")
        if self.height is not None and self.height < 0:
            raise ValueError(f"negative height {self.height}")
        if self.end_time < self.start_time:
            raise ValueError("end_time earlier than start_time")
        if self.start_time < self.batch_time:
            raise ValueError("start_time earlier than batch_time")
        if self.block_hash is not None:
            object.__setattr__(self, "block_hash", self.block_hash.lower())

    @property
    def responded(self) -> bool:
        return self.height is not None

    @property
    def rtt_ms(self) -> int:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class CanonicalChain:
    """Trusted height -> block-hash association over a contiguous height range.

    The chain is the oracle for the "returns right block" check; hashes are
    compared as lowercase strings, never recomputed.
    """

    min_height: int
    hashes: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.min_height < 0:
            raise ValueError("min_height must be non-negative")
        if not self.hashes:
            raise ValueError("chain must contain at least one height")
        object.__setattr__(self, "hashes", tuple(h.lower() for h in self.hashes))

    @classmethod
    def from_mapping(cls, entries: Mapping[int, str]) -> "CanonicalChain":
        """Build a chain from a height->hash mapping; heights must be contiguous."""
        if not entries:
            raise ValueError("empty chain")
        lo, hi = min(entries), max(entries)
        missing = [h for h in range(lo, hi + 1) if h not in entries]
        if missing:
            raise ValueError(f"chain has gaps at heights {missing[:5]}")
        return cls(lo, tuple(entries[h] for h in range(lo, hi + 1)))

    @property
    def max_height(self) -> int:
        return self.min_height + len(self.hashes) - 1

    def contains(self, height: int) -> bool:
        return self.min_height <= height <= self.max_height

    def hash_at(self, height: int) -> Optional[str]:
        if not self.contains(height):
            return None
        return self.hashes[height - self.min_height]


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Requester x peer grid of optional real values.

    ``values`` is a float64 array with NaN marking missing cells; every known
    cell holds a finite value. The array is made read-only on construction.
    """

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        rows = tuple(self.rows)
        cols = tuple(self.cols)
        if len(set(rows)) != len(rows):
            raise ValueError("duplicate row ids")
        if len(set(cols)) != len(cols):
            raise ValueError("duplicate col ids")
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != (len(rows), len(cols)):
            raise ValueError(f"values shape {vals.shape} != ({len(rows)}, {len(cols)})")
        if np.isinf(vals).any():
            raise ValueError("cells must be finite or missing (NaN)")
        vals.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", vals)

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {r: i for i, r in enumerate(self.rows)}

    @cached_property
    def col_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.cols)}

    @cached_property
    def known_mask(self) -> np.ndarray:
        mask = ~np.isnan(self.values)
        mask.setflags(write=False)
        return mask

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_known(self) -> int:
        return int(self.known_mask.sum())

    def get(self, row_id: str, col_id: str) -> Optional[float]:
        v = self.values[self.row_index[row_id], self.col_index[col_id]]
        return None if math.isnan(v) else float(v)

    def with_values(self, values: np.ndarray) -> "ObservationMatrix":
        """Same row/col ids, new cell values."""
        return ObservationMatrix(self.rows, self.cols, values)

    def transposed(self) -> "ObservationMatrix":
        return ObservationMatrix(self.cols, self.rows, self.values.T)


@dataclass(frozen=True)
class Criteria:
    """Success thresholds: tolerated block backwardness and max round-trip time."""

    max_block_back: int
    max_rtt_ms: int

    def __post_init__(self) -> None:
        if self.max_block_back < 0:
            raise ValueError("max_block_back must be non-negative")
        if self.max_rtt_ms <= 0:
            raise ValueError("max_rtt_ms must be positive")


@dataclass(frozen=True, eq=False)
class FactorSet:
    """The four aligned factor matrices sharing one missing-cell mask.

    A cell is known in all four matrices or in none of them (it is known iff
    the pair had at least one probe). Rate matrices live in [0, 1]; the
    round-trip-time matrix is in non-negative milliseconds.
    """

    success_rate: ObservationMatrix
    right_block: ObservationMatrix
    recent_height: ObservationMatrix
    round_trip_time: ObservationMatrix
    criteria: Criteria

    def __post_init__(self) -> None:
        ms = (self.success_rate, self.right_block, self.recent_height, self.round_trip_time)
        names = ("success_rate", "right_block", "recent_height", "round_trip_time")
        base = self.success_rate
        for name, m in zip(names[1:], ms[1:]):
            if m.rows != base.rows or m.cols != base.cols:
                raise ValueError(f"{name} row/col ids differ from success_rate")
            if not np.array_equal(m.known_mask, base.known_mask):
                raise ValueError(f"{name} missing-cell mask differs from success_rate")
        for name, m in zip(names[:3], ms[:3]):
            vals = m.values[m.known_mask]
            if vals.size and (vals.min() < 0.0 or vals.max() > 1.0):
                raise ValueError(f"{name} cells must lie in [0, 1]")
        rtt = self.round_trip_time.values[self.round_trip_time.known_mask]
        if rtt.size and rtt.min() < 0.0:
            raise ValueError("round_trip_time cells must be non-negative")

    @property
    def rows(self) -> tuple[str, ...]:
        return self.success_rate.rows

    @property
    def cols(self) -> tuple[str, ...]:
        return self.success_rate.cols


@dataclass(frozen=True)
class ReliabilityParams:
    """Horizon ``t`` and failure rate ``gamma`` for the exponential reliability map."""

    t: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.t > 0) or not math.isfinite(self.t):
            raise ValueError("t must be a positive finite real")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    @classmethod
    def from_success_rate(cls, success_rate: float, t: float) -> "ReliabilityParams":
        return cls(t=t, gamma=1.0 - success_rate)


def intern_ids(cases: Iterable[TestCase]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Collect distinct requester and peer ids in first-appearance order."""
    requesters: dict[str, None] = {}
    peers: dict[str, None] = {}
    for c in cases:
        requesters.setdefault(c.requester_id, None)
        peers.setdefault(c.peer_id, None)
    return tuple(requesters), tuple(peers)
