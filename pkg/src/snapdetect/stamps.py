"""Timestamp types and update rules for the three clock families.

Three kinds of stamps are supported:

* ``SnapshotStamp`` -- a scalar logical tick.  An event's lifetime is the
  half-open interval ``[lo, hi)`` of ticks, where ``hi`` is the first tick
  after the event.
* ``VectorStamp`` -- an n-slot logical timestamp whose slot-wise partial
  order characterises causality exactly.
* ``PhysicalStamp`` -- simulated microseconds since trace start.

All operations are pure functions on frozen value types.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

#: Stamps are 64-bit non-negative integers.  Overflow is a hard fault,
#: never wraparound; desk-scale traces cannot approach this bound.
MAX_TICK = 2**63 - 1


class StampOverflowError(OverflowError):
    """A logical tick left the 64-bit non-negative domain."""


@dataclass(frozen=True)
class ClockParams:
    """Tunables for the logical clock update rules.

    ``d`` is the tick increment (default 1).  ``tick_after_merge`` adds a
    classical post-max increment on receive; it is off by default because
    the merge rule used here takes the plain max, which keeps the
    lower-bound equality of the concurrency predicate reachable.
    """

    d: int = 1
    tick_after_merge: bool = False

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"clock increment d must be >= 1, got {self.d}")


DEFAULT_PARAMS = ClockParams()


@dataclass(frozen=True)
class SnapshotStamp:
    tick: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.tick <= MAX_TICK:
            raise StampOverflowError(f"tick out of range: {self.tick}")


@dataclass(frozen=True)
class VectorStamp:
    slots: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(s < 0 or s > MAX_TICK for s in self.slots):
            raise StampOverflowError(f"slot out of range: {self.slots}")

    @classmethod
    def zero(cls, n: int) -> "VectorStamp":
        return cls((0,) * n)

    def __len__(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class PhysicalStamp:
    micros: int

    def __post_init__(self) -> None:
        if self.micros < 0:
            raise ValueError(f"negative physical stamp: {self.micros}")


def snapshot_tick(clock: SnapshotStamp, params: ClockParams = DEFAULT_PARAMS) -> SnapshotStamp:
    """Advance a scalar clock by ``d`` for a local occurrence or a send."""
    return SnapshotStamp(clock.tick + params.d)


def snapshot_merge(
    local: SnapshotStamp,
    incoming: SnapshotStamp,
    params: ClockParams = DEFAULT_PARAMS,
) -> SnapshotStamp:
    """Fold an incoming scalar stamp into the local clock.

    The receive rule is a plain max; no post-max increment unless
    ``params.tick_after_merge`` is set.
    """
    merged = max(local.tick, incoming.tick)
    if params.tick_after_merge:
        merged += params.d
    return SnapshotStamp(merged)


def vector_tick(clock: VectorStamp, owner: int, params: ClockParams = DEFAULT_PARAMS) -> VectorStamp:
    """Increment the owner's slot by ``d``; other slots are unchanged."""
    if not 0 <= owner < len(clock.slots):
        raise IndexError(f"owner {owner} out of range for {len(clock.slots)} slots")
    slots = list(clock.slots)
    slots[owner] += params.d
    return VectorStamp(tuple(slots))


def vector_merge(
    local: VectorStamp,
    incoming: VectorStamp,
    owner: int,
    params: ClockParams = DEFAULT_PARAMS,
) -> VectorStamp:
    """Slot-wise max of both stamps, then tick the owner's slot."""
    if len(local.slots) != len(incoming.slots):
        raise ValueError(
            f"vector length mismatch: {len(local.slots)} vs {len(incoming.slots)}"
        )
    merged = tuple(max(a, b) for a, b in zip(local.slots, incoming.slots))
    return vector_tick(VectorStamp(merged), owner, params)


def vector_leq(a: VectorStamp, b: VectorStamp) -> bool:
    """Slot-wise partial order: a <= b in every slot."""
    if len(a.slots) != len(b.slots):
        raise ValueError(
            f"vector length mismatch: {len(a.slots)} vs {len(b.slots)}"
        )
    return all(x <= y for x, y in zip(a.slots, b.slots))


def vector_lt(a: VectorStamp, b: VectorStamp) -> bool:
    """Strict slot-wise order: a <= b everywhere and a != b.

    For point events stamped by the vector rules this holds exactly when
    the first causally precedes the second.
    """
    return vector_leq(a, b) and a.slots != b.slots


class Order(enum.Enum):
    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"


@dataclass(frozen=True)
class Interval:
    """An event's ``[lo, hi)`` timestamp interval.

    ``lo`` and ``hi`` must be the same stamp kind.  Scalar and physical
    intervals are non-empty (``lo < hi``); vector intervals satisfy
    ``lo <= hi`` slot-wise.
    """

    lo: object
    hi: object

    def __post_init__(self) -> None:
        if type(self.lo) is not type(self.hi):
            raise TypeError(
                f"mixed stamp kinds: {type(self.lo).__name__} vs {type(self.hi).__name__}"
            )
        if isinstance(self.lo, SnapshotStamp):
            if not self.lo.tick < self.hi.tick:
                raise ValueError(f"empty scalar interval [{self.lo.tick}, {self.hi.tick})")
        elif isinstance(self.lo, PhysicalStamp):
            if not self.lo.micros < self.hi.micros:
                raise ValueError(
                    f"empty physical interval [{self.lo.micros}, {self.hi.micros})"
                )
        elif isinstance(self.lo, VectorStamp):
            if not vector_leq(self.lo, self.hi):
                raise ValueError("vector interval endpoints not slot-wise ordered")
        else:
            raise TypeError(f"unsupported stamp type {type(self.lo).__name__}")


def interval_compare(a: Interval, b: Interval) -> Order:
    """Order two timestamp intervals.

    ``BEFORE`` means every stamp in ``a`` is <= every stamp in ``b`` with
    at least one strict inequality; ``AFTER`` is the mirror image, and
    everything else is ``CONCURRENT``.  For half-open scalar intervals the
    BEFORE test reduces to ``a.hi <= b.lo``; for vector intervals the
    stamp comparison is the slot-wise partial order.
    """
    if type(a.lo) is not type(b.lo):
        raise TypeError("cannot compare intervals over different stamp kinds")
    if isinstance(a.lo, SnapshotStamp):
        if a.hi.tick <= b.lo.tick:
            return Order.BEFORE
        if b.hi.tick <= a.lo.tick:
            return Order.AFTER
        return Order.CONCURRENT
    if isinstance(a.lo, PhysicalStamp):
        if a.hi.micros <= b.lo.micros:
            return Order.BEFORE
        if b.hi.micros <= a.lo.micros:
            return Order.AFTER
        return Order.CONCURRENT
    if _vector_interval_before(a, b):
        return Order.BEFORE
    if _vector_interval_before(b, a):
        return Order.AFTER
    return Order.CONCURRENT


def _vector_interval_before(a: Interval, b: Interval) -> bool:
    # a.hi <= b.lo slot-wise implies every endpoint of a precedes every
    # endpoint of b; a strict pair exists unless all four coincide.
    if not vector_leq(a.hi, b.lo):
        return False
    return not (a.lo == a.hi == b.lo == b.hi)
