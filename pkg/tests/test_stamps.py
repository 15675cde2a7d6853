import pytest
from hypothesis import given, strategies as st

from snapdetect.stamps import (
    ClockParams,
    Interval,
    MAX_TICK,
    Order,
    PhysicalStamp,
    SnapshotStamp,
    StampOverflowError,
    VectorStamp,
    interval_compare,
    snapshot_merge,
    snapshot_tick,
    vector_leq,
    vector_lt,
    vector_merge,
    vector_tick,
)


def scalar_interval(lo, hi):
    return Interval(SnapshotStamp(lo), SnapshotStamp(hi))


class TestSnapshotRules:
    def test_tick_default(self):
        assert snapshot_tick(SnapshotStamp(5)).tick == 6

    def test_tick_base_case(self):
        assert snapshot_tick(SnapshotStamp(0)).tick == 1

    def test_tick_custom_increment(self):
        assert snapshot_tick(SnapshotStamp(7), ClockParams(d=3)).tick == 10

    def test_merge_takes_max(self):
        assert snapshot_merge(SnapshotStamp(7), SnapshotStamp(10)).tick == 10
        assert snapshot_merge(SnapshotStamp(10), SnapshotStamp(7)).tick == 10

    def test_merge_equal_operands(self):
        assert snapshot_merge(SnapshotStamp(4), SnapshotStamp(4)).tick == 4

    def test_merge_optional_post_tick(self):
        params = ClockParams(tick_after_merge=True)
        assert snapshot_merge(SnapshotStamp(4), SnapshotStamp(9), params).tick == 10

    def test_overflow_is_a_hard_fault(self):
        with pytest.raises(StampOverflowError):
            snapshot_tick(SnapshotStamp(MAX_TICK))

    def test_increment_must_be_positive(self):
        with pytest.raises(ValueError):
            ClockParams(d=0)


class TestVectorRules:
    def test_tick_single_slot(self):
        assert vector_tick(VectorStamp((0, 0, 0)), 1).slots == (0, 1, 0)
        assert vector_tick(VectorStamp((2, 5, 1)), 0).slots == (3, 5, 1)

    def test_tick_custom_increment(self):
        assert vector_tick(VectorStamp((2, 5, 1)), 2, ClockParams(d=2)).slots == (2, 5, 3)

    def test_tick_owner_out_of_range(self):
        with pytest.raises(IndexError):
            vector_tick(VectorStamp((0, 0)), 2)

    def test_merge_max_then_tick(self):
        assert vector_merge(VectorStamp((1, 0)), VectorStamp((0, 2)), 0).slots == (2, 2)
        assert vector_merge(VectorStamp((3, 3)), VectorStamp((3, 3)), 1).slots == (3, 4)
        assert vector_merge(VectorStamp((0, 0, 5)), VectorStamp((4, 0, 0)), 2).slots == (4, 0, 6)

    def test_merge_length_mismatch(self):
        with pytest.raises(ValueError):
            vector_merge(VectorStamp((1, 0)), VectorStamp((0, 2, 3)), 0)

    @given(
        st.lists(
            st.tuples(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50)),
            min_size=1,
            max_size=6,
        ),
        st.permutations(range(6)),
    )
    def test_merge_max_part_commutes(self, stamps, perm):
        # Folding the same multiset of incoming stamps in any order gives
        # the same slot-wise max (owner ticks held aside).
        stamps = [VectorStamp(s) for s in stamps]
        orderings = [stamps, [stamps[i % len(stamps)] for i in perm][: len(stamps)]]

        def fold(seq):
            acc = VectorStamp.zero(3)
            for s in seq:
                acc = VectorStamp(tuple(max(a, b) for a, b in zip(acc.slots, s.slots)))
            return acc

        assert fold(sorted(stamps, key=lambda v: v.slots)) == fold(
            sorted(stamps, key=lambda v: v.slots, reverse=True)
        )


class TestIntervalCompare:
    def test_disjoint_scalar_intervals(self):
        assert interval_compare(scalar_interval(1, 3), scalar_interval(5, 9)) is Order.BEFORE

    def test_overlapping_scalar_intervals(self):
        assert interval_compare(scalar_interval(1, 6), scalar_interval(4, 9)) is Order.CONCURRENT

    def test_identical_scalar_intervals(self):
        assert interval_compare(scalar_interval(2, 4), scalar_interval(2, 4)) is Order.CONCURRENT

    def test_touching_half_open_intervals_are_ordered(self):
        assert interval_compare(scalar_interval(2, 3), scalar_interval(3, 4)) is Order.BEFORE

    def test_physical_intervals(self):
        a = Interval(PhysicalStamp(10_000), PhysicalStamp(30_000))
        b = Interval(PhysicalStamp(30_000), PhysicalStamp(40_000))
        assert interval_compare(a, b) is Order.BEFORE
        assert interval_compare(b, a) is Order.AFTER

    def test_vector_intervals(self):
        a = Interval(VectorStamp((1, 0)), VectorStamp((2, 0)))
        b = Interval(VectorStamp((2, 1)), VectorStamp((2, 2)))
        c = Interval(VectorStamp((0, 1)), VectorStamp((0, 2)))
        assert interval_compare(a, b) is Order.BEFORE
        assert interval_compare(b, a) is Order.AFTER
        assert interval_compare(a, c) is Order.CONCURRENT

    def test_empty_scalar_interval_rejected(self):
        with pytest.raises(ValueError):
            scalar_interval(4, 4)

    def test_mixed_stamp_kinds_rejected(self):
        with pytest.raises(TypeError):
            Interval(SnapshotStamp(1), PhysicalStamp(2))

    @given(
        st.tuples(st.integers(0, 30), st.integers(1, 10)),
        st.tuples(st.integers(0, 30), st.integers(1, 10)),
    )
    def test_antisymmetry(self, a, b):
        ia = scalar_interval(a[0], a[0] + a[1])
        ib = scalar_interval(b[0], b[0] + b[1])
        forward = interval_compare(ia, ib)
        backward = interval_compare(ib, ia)
        flipped = {Order.BEFORE: Order.AFTER, Order.AFTER: Order.BEFORE, Order.CONCURRENT: Order.CONCURRENT}
        assert backward is flipped[forward]


class TestMonotonicity:
    @given(st.lists(st.sampled_from(["tick", "merge-low", "merge-high"]), max_size=30))
    def test_ticks_never_decrease(self, ops):
        clock = SnapshotStamp(0)
        seen = [0]
        for op in ops:
            if op == "tick":
                clock = snapshot_tick(clock)
            elif op == "merge-low":
                clock = snapshot_merge(clock, SnapshotStamp(0))
            else:
                clock = snapshot_merge(clock, SnapshotStamp(clock.tick + 5))
            seen.append(clock.tick)
        assert seen == sorted(seen)

    @given(st.lists(st.integers(0, 2), min_size=1, max_size=20))
    def test_vector_slots_never_decrease(self, owners):
        clock = VectorStamp.zero(3)
        prev = clock
        for owner in owners:
            clock = vector_tick(clock, owner)
            assert vector_leq(prev, clock) and vector_lt(prev, clock)
            prev = clock
