import pytest
from hypothesis import given
from hypothesis import strategies as st

from granlower.core import (
    EmptyRep,
    GranularityError,
    PeriodicRep,
    down_label,
    mindist,
    normalize_alignment,
    shift_granule,
    up_label,
)


@st.composite
def periodic_reps(draw):
    period = draw(st.integers(2, 14))
    covered = sorted(draw(st.sets(st.integers(1, period), min_size=1, max_size=period)))
    r = draw(st.integers(1, min(4, len(covered))))
    if r == 1:
        cuts = []
    else:
        cuts = sorted(
            draw(st.sets(st.integers(1, len(covered) - 1), min_size=r - 1, max_size=r - 1))
        )
    chunks, prev = [], 0
    for c in cuts + [len(covered)]:
        chunks.append(tuple(covered[prev:c]))
        prev = c
    step = draw(st.integers(r, r + 3))
    rep = normalize_alignment({i + 1: chunk for i, chunk in enumerate(chunks)}, period, step)
    assert isinstance(rep, PeriodicRep)
    return rep


class TestExpand:
    def test_week_parts_arbitrary_granule(self, week_parts_rep):
        assert week_parts_rep.expand(6) == (20, 21)

    def test_explicit_label_is_identity(self, week_parts_rep):
        assert week_parts_rep.expand(3) == tuple(range(8, 13))
        assert week_parts_rep.expand(4) == (13, 14)

    def test_week_third_granule(self, week_rep):
        assert week_rep.expand(3) == tuple(range(15, 22))

    def test_off_label_set_is_empty(self, week_parts_rep):
        # only labels congruent to 3 or 4 mod 2 exist; both residues do here,
        # so build a sparse rep instead
        sunday = PeriodicRep(7, 7, {7: (7,)})
        assert sunday.expand(8) == ()
        assert sunday.expand(14) == (14,)

    def test_bounds_clip_expansion(self, week_rep):
        bounded = PeriodicRep(7, 1, week_rep.explicit, (2, 5))
        assert bounded.expand(1) == ()
        assert bounded.expand(2) == tuple(range(8, 15))
        assert bounded.expand(6) == ()


class TestUp:
    def test_week_interior(self, week_rep):
        assert week_rep.up(10) == 2

    def test_week_parts_paper_value(self, week_parts_rep):
        assert week_parts_rep.up(13) == 4

    def test_gap_gives_none(self):
        sunday = PeriodicRep(7, 7, {7: (7,)})
        assert sunday.up(8) is None
        assert sunday.up(14) == 14

    def test_bounds_clip(self, week_rep):
        bounded = PeriodicRep(7, 1, week_rep.explicit, (2, 5))
        assert bounded.up(1) is None
        assert bounded.up(10) == 2


class TestUpLabel:
    def test_day_to_week(self, day_rep, week_rep):
        assert up_label(day_rep, week_rep, 9) == 2

    def test_identity(self, week_rep):
        assert up_label(week_rep, week_rep, 5) == 5

    def test_straddle_is_none(self, week_rep):
        month30 = PeriodicRep(30, 1, {1: tuple(range(1, 31))})
        # week 5 covers days 29..35, split between the first two 30-blocks
        assert up_label(week_rep, month30, 5) is None
        assert up_label(week_rep, month30, 2) == 1

    def test_bounded_target_boundary(self, day_rep, week_rep):
        bounded = PeriodicRep(7, 1, week_rep.explicit, (2, 5))
        assert up_label(day_rep, bounded, 9) == 2
        assert up_label(day_rep, bounded, 2) is None


class TestDownLabel:
    def test_days_of_week(self, day_rep, week_rep):
        assert down_label(day_rep, week_rep, 1) == tuple(range(1, 8))

    def test_identity(self, week_rep):
        assert down_label(week_rep, week_rep, 4) == (4,)

    def test_business_days_inside_week(self, week_rep):
        bday = PeriodicRep(7, 7, {1: (1,), 2: (2,), 3: (3,), 4: (4,), 5: (5,)})
        week_of_bdays = PeriodicRep(7, 1, {1: (1, 2, 3, 4, 5)})
        assert down_label(bday, week_of_bdays, 2) == (8, 9, 10, 11, 12)

    def test_uncovered_instant_raises(self, week_rep):
        sunday = PeriodicRep(7, 7, {7: (7,)})
        with pytest.raises(GranularityError):
            down_label(sunday, week_rep, 1)


class TestLhat:
    def test_partial_window_without_wrap_label(self):
        g = PeriodicRep(4, 3, {6: (1, 2), 7: (3,)})
        assert g.lhat(4) == [6, 7]
        assert g.lhat(8) == [6, 7, 9, 10]

    def test_wrap_label_added_when_anchor_covers_zero(self):
        h = PeriodicRep(4, 3, {6: (0, 1), 7: (3,)})
        assert h.lhat(4) == [6, 7, 9]
        assert h.lhat(8) == [6, 7, 9, 10, 12]

    def test_plain_window_when_anchor_positive(self, week_rep):
        assert week_rep.lhat(7) == [1]

    def test_bad_horizon_rejected(self, week_rep):
        with pytest.raises(GranularityError):
            week_rep.lhat(10)
        with pytest.raises(GranularityError):
            week_rep.lhat(0)

    @given(periodic_reps(), st.integers(1, 4))
    def test_cover_count_rule(self, rep, k):
        covers_nonpositive = min(rep.explicit[rep.first_label]) <= 0
        expected = k * len(rep.explicit) + (1 if covers_nonpositive else 0)
        assert len(rep.lhat(k * rep.period)) == expected


class TestMindist:
    def test_week_over_day(self, week_rep, day_rep):
        assert mindist(week_rep, day_rep) == 7

    def test_self_distance_is_one(self, week_rep):
        assert mindist(week_rep, week_rep) == 1

    def test_thirty_day_groups(self, day_rep):
        month30 = PeriodicRep(30, 1, {1: tuple(range(1, 31))})
        assert mindist(month30, day_rep) == 30

    def test_non_consecutive_tile_raises(self, week_rep):
        month30 = PeriodicRep(30, 1, {1: tuple(range(1, 31))})
        with pytest.raises(GranularityError):
            mindist(month30, week_rep)


class TestNormalize:
    def test_reanchors_to_first_positive_instant(self):
        raw = {40 + i: tuple(range(7 * i + 1, 7 * i + 8)) for i in range(3)}
        rep = normalize_alignment(raw, 7, 1)
        assert rep.first_label == 40 and rep.labels == (40,)
        assert rep.expand(40) == tuple(range(1, 8))

    def test_idempotent_on_aligned(self, week_rep):
        assert normalize_alignment(week_rep.explicit, 7, 1) == week_rep

    def test_inconsistent_duplicates_rejected(self):
        with pytest.raises(GranularityError):
            normalize_alignment({1: (1, 2), 3: (4, 5)}, 4, 2)

    def test_empty_input_is_empty_rep(self):
        assert normalize_alignment({}, 5, 2) == EmptyRep()


class TestValidation:
    def test_rejects_unordered_granules(self):
        with pytest.raises(GranularityError):
            PeriodicRep(7, 2, {1: (5, 6), 2: (4,)})

    def test_rejects_period_overlap(self):
        with pytest.raises(GranularityError):
            PeriodicRep(7, 1, {1: (1, 8)})

    def test_rejects_wide_window(self):
        with pytest.raises(GranularityError):
            PeriodicRep(7, 2, {1: (1,), 3: (3,)})

    def test_rejects_inverted_bounds(self, week_rep):
        with pytest.raises(GranularityError):
            PeriodicRep(7, 1, week_rep.explicit, (5, 2))

    def test_empty_rep_queries(self):
        e = EmptyRep()
        assert e.expand(3) == () and e.up(5) is None
        assert e.lhat(10) == [] and e.labels_within(-5, 5) == []


class TestJson:
    def test_round_trip(self, week_parts_rep):
        data = week_parts_rep.to_json_dict()
        assert data["P"] == 7 and data["N"] == 2
        assert PeriodicRep.from_json_dict(data) == week_parts_rep

    def test_bounds_spellings(self, week_rep):
        bounded = PeriodicRep(7, 1, week_rep.explicit, (None, 1999))
        data = bounded.to_json_dict()
        assert data["bounds"] == {"first": "-inf", "last": 1999}
        assert PeriodicRep.from_json_dict(data) == bounded

    def test_empty_rep(self):
        assert EmptyRep().to_json_dict() == {"empty": True}
        assert PeriodicRep.from_json_dict({"empty": True}) == EmptyRep()


class TestProperties:
    @given(periodic_reps(), st.integers(-3, 3))
    def test_expansion_periodicity(self, rep, cycles):
        for a in rep.labels:
            shifted = rep.expand(a + cycles * rep.step)
            assert shifted == shift_granule(rep.expand(a), cycles * rep.period)

    @given(periodic_reps(), st.integers(-2, 2))
    def test_up_expand_round_trip(self, rep, cycles):
        for a in rep.labels:
            label = a + cycles * rep.step
            for t in rep.expand(label):
                assert rep.up(t) == label

    @given(periodic_reps())
    def test_expansion_monotone(self, rep):
        labels = rep.lhat(2 * rep.period)
        granules = [rep.expand(a) for a in labels]
        for g1, g2 in zip(granules, granules[1:]):
            assert g1[-1] < g2[0]

    @given(periodic_reps(), st.integers(1, 4))
    def test_scaling_validity(self, rep, alpha):
        scaled = rep.scaled(alpha)
        assert scaled.period == alpha * rep.period and scaled.step == alpha * rep.step
        for a in rep.lhat(2 * rep.period):
            assert scaled.expand(a) == rep.expand(a)

    @given(periodic_reps())
    def test_canonical_after_normalize(self, rep):
        assert rep.is_canonical
