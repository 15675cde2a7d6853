"""Concurrent-event detectors.

Three detector families consume the same per-process stream of
local-event / send / receive notifications:

* ``SnapshotDetector`` -- scalar snapshot clocks plus per-peer replicas of
  event and interval queues; a communicating pair (b, c) is reported as
  concurrent when the send stamp x of b's message lands inside c's final
  logical interval: ``c.lo <= x < c.hi``.
* ``vector_detect`` -- the vector-clock baseline: a quadratic pairwise
  scan reporting pairs whose interval endpoints are mutually ordered by
  happened-before (each start precedes the other's end).
* ``physical_detect`` -- wall-clock interval overlap under synchronized
  physical clocks, via a boundary sweep.

``violation_filter`` lifts detected concurrent pairs into context
violations under the constraint that one user cannot be read at two
different locations at the same time.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .metrics import OpCounters
from .stamps import (
    ClockParams,
    DEFAULT_PARAMS,
    Interval,
    SnapshotStamp,
    snapshot_merge,
    snapshot_tick,
    vector_lt,
)

PairKey = tuple["EventId", "EventId"]


@dataclass(frozen=True, order=True)
class EventId:
    """Globally unique event identity: (process index, per-process seq)."""

    process: int
    seq: int


def pair_key(a: EventId, b: EventId) -> PairKey:
    """Canonical unordered form of an event pair."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class ContextReading:
    """A location reading attached to an event, possibly corrupted."""

    user: str
    location: str
    true_location: str
    erroneous: bool

    def __post_init__(self) -> None:
        if self.erroneous != (self.location != self.true_location):
            raise ValueError("erroneous flag inconsistent with locations")


@dataclass(frozen=True)
class Violation:
    """Two concurrent readings placing one user at two locations."""

    pair: PairKey
    user: str
    locations: tuple[str, str]


@dataclass(frozen=True)
class MessageRecord:
    """A delivered point-to-point message.

    ``send_stamp`` is the sender's scalar tick at send time, carried
    inline so the receiver never depends on broadcast arrival order.
    """

    from_event: EventId
    to_event: EventId
    send_stamp: int
    payload: Optional[ContextReading] = None

    def __post_init__(self) -> None:
        if self.from_event == self.to_event:
            raise ValueError("message from an event to itself")


@dataclass(frozen=True)
class BroadcastPayload:
    """What a process announces to all peers when an event occurs.

    Constant-size in the process count: one event id and one scalar tick.
    """

    origin: int
    event: EventId
    stamp: int


@dataclass
class IntervalRecord:
    """A mutable ``[lo, hi)`` scalar interval for one event; hi only grows."""

    event: EventId
    lo: int
    hi: int

    def valid(self) -> bool:
        return self.lo < self.hi


class DuplicateEventError(ValueError):
    pass


class SnapshotDetector:
    """Per-process detector state over scalar snapshot clocks.

    Holds the local clock, per-peer event queues (EQ) and interval queues
    (IQ), the queue of communicating event pairs (EE) and the output set
    of detected concurrent pairs.  Exactly one logical thread may mutate
    an instance; all cross-process coupling goes through the notification
    driver.
    """

    def __init__(
        self,
        process: int,
        n_processes: int,
        params: ClockParams = DEFAULT_PARAMS,
        counters: Optional[OpCounters] = None,
    ):
        if not 0 <= process < n_processes:
            raise IndexError(f"process {process} out of range")
        self.process = process
        self.n_processes = n_processes
        self.params = params
        self.clock = SnapshotStamp(0)
        self.eq: list[list[tuple[EventId, int]]] = [[] for _ in range(n_processes)]
        self.iq: list[list[IntervalRecord]] = [[] for _ in range(n_processes)]
        self.ee: list[tuple[EventId, EventId, int]] = []
        self.out: set[PairKey] = set()
        self.dropped = 0
        self.counters = counters if counters is not None else OpCounters()
        self._intervals: dict[EventId, IntervalRecord] = {}

    # -- clock plumbing ------------------------------------------------

    def _tick(self) -> int:
        self.clock = snapshot_tick(self.clock, self.params)
        self.counters.clock_updates += 1
        return self.clock.tick

    def _merge(self, stamp: int) -> None:
        self.clock = snapshot_merge(self.clock, SnapshotStamp(stamp), self.params)
        self.counters.clock_updates += 1

    def _record(self, origin: int, e: EventId, lo: int, hi: int) -> IntervalRecord:
        if e in self._intervals:
            raise DuplicateEventError(f"event {e} already recorded")
        rec = IntervalRecord(e, lo, hi)
        self.iq[origin].append(rec)
        self._intervals[e] = rec
        return rec

    # -- notification handlers -----------------------------------------

    def on_local_event(self, e: EventId) -> BroadcastPayload:
        """An event occurs at this process.

        Ticks the clock, opens the event's interval ``[tick, tick + 1)``
        and returns the payload the driver delivers to every peer.
        """
        if e.process != self.process:
            raise ValueError(f"event {e} does not belong to process {self.process}")
        tick = self._tick()
        self.eq[self.process].append((e, tick))
        self._record(self.process, e, tick, tick + 1)
        self.counters.events_processed += 1
        self.counters.stamp_words_sent += 1  # one scalar word, any n
        return BroadcastPayload(self.process, e, tick)

    def on_broadcast(self, origin: int, e: EventId, stamp: int) -> None:
        """A peer announced an event occurrence; mirror it and merge."""
        if origin == self.process:
            raise ValueError("broadcast from own process")
        self.eq[origin].append((e, stamp))
        if e not in self._intervals:
            self._record(origin, e, stamp, stamp + 1)
        self._merge(stamp)

    def on_send(self, e: EventId) -> int:
        """This process sends a message from live event ``e``.

        Ticks the clock first, extends the event's own interval past the
        new tick and returns the send stamp x to attach to the message.
        The driver also announces x to all peers (``on_send_stamp``).
        """
        rec = self._intervals.get(e)
        if rec is None or e.process != self.process:
            raise ValueError(f"send from unknown local event {e}")
        x = self._tick()
        self.eq[self.process].append((e, x))
        rec.hi = max(rec.hi, x + 1)
        self.counters.events_processed += 1
        self.counters.stamp_words_sent += 2  # message stamp + its broadcast
        return x

    def on_send_stamp(self, origin: int, e: EventId, stamp: int) -> None:
        """A peer's send stamp arrives; update its replica and merge."""
        rec = self._intervals.get(e)
        if rec is None:
            rec = self._record(origin, e, stamp, stamp + 1)
        else:
            rec.hi = max(rec.hi, stamp + 1)
        self.eq[origin].append((e, stamp))
        self._merge(stamp)

    def on_message(self, m: MessageRecord) -> None:
        """A message is delivered to local event ``m.to_event``.

        Re-stamps the sender's replica, merges the clock, extends the
        receiving event's interval past the send stamp (the message was
        handled inside the event, so its end tick must exceed x) and
        queues the communicating pair for the consistency check.
        """
        self.counters.events_processed += 1
        sender = self._intervals.get(m.from_event)
        if sender is None:
            self.dropped += 1
            return
        x = m.send_stamp
        self.eq[m.from_event.process].append((m.from_event, x))
        sender.hi = max(sender.hi, x + 1)
        self._merge(x)
        own = self._intervals.get(m.to_event)
        if own is None:
            self.dropped += 1
            return
        own.hi = max(own.hi, x + 1)
        self.ee.append((m.to_event, m.from_event, x))

    # -- detection -----------------------------------------------------

    def check_consistency(self) -> set[PairKey]:
        """Drain EE into the output set of detected concurrent pairs.

        A pair passes when both events are valid (present with a
        well-formed interval) and the send stamp lies inside the
        receiver's final interval: ``lo <= x < hi``.  The output is
        deduplicated and the call is idempotent at quiescence.
        """
        while self.ee:
            receiver, sender, x = self.ee.pop(0)
            self.counters.pair_checks += 1
            rec_r = self._intervals.get(receiver)
            rec_s = self._intervals.get(sender)
            if rec_r is None or rec_s is None:
                continue
            if not (rec_r.valid() and rec_s.valid()):
                continue
            if rec_r.lo <= x < rec_r.hi:
                self.out.add(pair_key(receiver, sender))
        return set(self.out)


def vector_detect(
    intervals: Mapping[EventId, Interval],
    counters: Optional[OpCounters] = None,
) -> set[PairKey]:
    """Vector-clock baseline: report pairs with mutually ordered endpoints.

    A pair (j, k) is concurrent when ``lo_j`` happened-before ``hi_k``
    and ``lo_k`` happened-before ``hi_j`` under the vector partial order.
    Quadratic pairwise scan over all intervals.
    """
    items = sorted(intervals.items())
    lengths = {len(iv.lo.slots) for _, iv in items}
    if len(lengths) > 1:
        raise ValueError(f"mixed vector lengths: {sorted(lengths)}")
    found: set[PairKey] = set()
    for i in range(len(items)):
        ei, vi = items[i]
        for j in range(i + 1, len(items)):
            ej, vj = items[j]
            if counters is not None:
                counters.pair_checks += 1
            if vector_lt(vi.lo, vj.hi) and vector_lt(vj.lo, vi.hi):
                found.add(pair_key(ei, ej))
    return found


def physical_detect(
    spans: Iterable[tuple[EventId, int, int]],
    counters: Optional[OpCounters] = None,
) -> set[PairKey]:
    """Wall-clock overlap of half-open ``[start, end)`` spans.

    Boundary sweep: walk start/end boundaries in time order and pair each
    starting span with the active set.  O(n log n + output).
    """
    boundaries: list[tuple[int, int, EventId, int]] = []
    ends: dict[EventId, int] = {}
    for event, start, end in spans:
        if start >= end:
            raise ValueError(f"empty span for {event}: [{start}, {end})")
        # Ends sort before starts at equal times: half-open touch is no overlap.
        boundaries.append((start, 1, event, end))
        boundaries.append((end, 0, event, end))
        ends[event] = end
    boundaries.sort()
    active: set[EventId] = set()
    found: set[PairKey] = set()
    for _, kind, event, _end in boundaries:
        if kind == 0:
            active.discard(event)
        else:
            for other in active:
                if counters is not None:
                    counters.pair_checks += 1
                found.add(pair_key(event, other))
            active.add(event)
    return found


def violation_filter(
    pairs: Iterable[PairKey],
    readings: Mapping[EventId, ContextReading],
) -> set[Violation]:
    """Keep concurrent pairs that read one user at two different locations."""
    violations: set[Violation] = set()
    for a, b in pairs:
        ra = readings.get(a)
        rb = readings.get(b)
        if ra is None or rb is None:
            continue
        if ra.user != rb.user or ra.location == rb.location:
            continue
        a, b = pair_key(a, b)
        ra, rb = readings[a], readings[b]
        violations.add(Violation(pair=(a, b), user=ra.user, locations=(ra.location, rb.location)))
    return violations
