import pytest

from granlower import algebra as ast
from granlower.algebra import (
    CalendarDoc,
    CalendarSyntaxError,
    parse_calendar,
    print_calendar,
    rewrite_to_bottom,
    validate,
)


class TestParse:
    def test_group_definition(self):
        doc = parse_calendar("calendar c bottom day;\nweek = group(7, day);\n")
        assert doc.definitions == (("week", ast.Group(7, ast.Bottom())),)

    def test_zero_shift_parses(self):
        doc = parse_calendar("calendar c bottom day;\nx = shift(0, day);\n")
        assert doc.definitions[0][1] == ast.Shift(0, ast.Bottom())

    def test_selectdown_references(self):
        doc = parse_calendar(
            "calendar c bottom day;\nweek = group(7, day);\n"
            "monday = selectdown(1, 1, day, week);\n"
        )
        assert doc.definitions[1][1] == ast.SelectDown(1, 1, ast.Bottom(), ast.Name("week"))

    def test_subset_infinities(self):
        doc = parse_calendar(
            "calendar c bottom day;\nw = group(7, day);\ns = subset(-inf, 1999, w);\n"
        )
        assert doc.definitions[1][1] == ast.Subset(None, 1999, ast.Name("w"))

    def test_comments_and_hyphenated_names(self):
        doc = parse_calendar(
            "calendar c bottom day; # trailing comment\n"
            "b-day = group(2, day);\nx = group(3, b-day);\n"
        )
        assert doc.names == ("b-day", "x")

    @pytest.mark.parametrize(
        "source, fragment",
        [
            ("calendar c bottom d;\nx = group(0, d);", "positive"),
            ("calendar c bottom d;\nx = group(2 d);", "expected"),
            ("calendar c bottom d;\nx = alter(3, 1, 2, d, d);", "exceeds"),
            ("calendar c bottom d;\nx = group(2, subset(1, 2, d));", "outermost"),
            ("calendar c bottom d;\nx = group(2, y);", "unknown"),
            ("calendar c bottom d;\nx = selectdown(0, 1, d, d);", "nonzero"),
            ("calendar c bottom d;\nx = selectdown(1, 0, d, d);", "positive"),
            ("calendar c bottom d;\nx = d;\nx = d;", "duplicate"),
            ("calendar c bottom d;\ngroup = d;", "reserved"),
            ("calendar c bottom d;\nx = frobnicate(2, d);", "unknown"),
            ("calendar c bottom d;\nx = subset(5, 2, d);", "inverted"),
            ("calendar c bottom d;\nx = subset(inf, 2, d);", "upper bound"),
            ("calendar c bottom d;\nx = group(2, d)", "expected"),
        ],
    )
    def test_rejects(self, source, fragment):
        with pytest.raises(CalendarSyntaxError) as err:
            parse_calendar(source)
        assert fragment in str(err.value)

    def test_error_carries_position(self):
        with pytest.raises(CalendarSyntaxError) as err:
            parse_calendar("calendar c bottom d;\nx = group(2, y);")
        assert err.value.line == 2 and err.value.column == 14


class TestPrint:
    def test_round_trip_fixture(self, fixtures_dir):
        doc = parse_calendar((fixtures_dir / "basic.cal").read_text())
        assert parse_calendar(print_calendar(doc)) == doc

    def test_round_trip_all_operators(self):
        src = (
            "calendar c bottom d;\n"
            "a = group(3, d);\n"
            "b = alter(1, -1, 2, d, a);\n"
            "c2 = shift(-4, b);\n"
            "e = combine(a, d);\n"
            "f = selectdown(-2, 1, d, a);\n"
            "g = anchor(d, f);\n"
            "h = selectup(a, f);\n"
            "i = selectintersect(2, 3, a, c2);\n"
            "j = union(f, f);\n"
            "k = intersect(f, f);\n"
            "l = difference(f, f);\n"
            "m = subset(-inf, inf, a);\n"
        )
        doc = parse_calendar(src)
        assert parse_calendar(print_calendar(doc)) == doc


class TestValidate:
    def test_clean_document(self, fixtures_dir):
        doc = parse_calendar((fixtures_dir / "gregorian.cal").read_text())
        assert validate(doc).ok

    def test_inner_subset_flagged(self):
        doc = CalendarDoc(
            "c", "d", (("x", ast.Group(2, ast.Subset(1, 5, ast.Bottom()))),)
        )
        report = validate(doc)
        assert [f.rule for f in report.findings] == ["subset-not-outermost"]

    def test_bounded_reference_flagged(self):
        doc = CalendarDoc(
            "c",
            "d",
            (
                ("s", ast.Subset(1, 5, ast.Bottom())),
                ("u", ast.Group(2, ast.Name("s"))),
            ),
        )
        report = validate(doc)
        assert [f.rule for f in report.findings] == ["bounded-operand"]

    def test_parameter_range_flagged(self):
        doc = CalendarDoc("c", "d", (("x", ast.Alter(3, 1, 2, ast.Bottom(), ast.Bottom())),))
        report = validate(doc)
        assert [f.rule for f in report.findings] == ["parameter-range"]

    def test_unresolved_and_duplicate(self):
        doc = CalendarDoc(
            "c", "d", (("x", ast.Name("nope")), ("x", ast.Bottom()))
        )
        rules = {f.rule for f in validate(doc).findings}
        assert rules == {"unresolved-name", "duplicate-name"}


class TestRewrite:
    def test_monday_over_hour_bottom(self):
        doc = parse_calendar(
            "calendar c bottom hour;\n"
            "day = group(24, hour);\n"
            "week = group(7, day);\n"
            "monday = selectdown(1, 1, day, week);\n"
        )
        closed = rewrite_to_bottom(doc, "monday")
        assert closed == ast.SelectDown(
            1, 1, ast.Group(24, ast.Bottom()), ast.Group(7, ast.Group(24, ast.Bottom()))
        )
        # structural sharing: the inlined day subtree is one object
        assert closed.source is closed.container.operand

    def test_bottom_target(self):
        doc = parse_calendar("calendar c bottom day;\nweek = group(7, day);\n")
        assert rewrite_to_bottom(doc, "day") == ast.Bottom()

    def test_single_inline(self):
        doc = parse_calendar("calendar c bottom day;\nweek = group(7, day);\n")
        assert rewrite_to_bottom(doc, "week") == ast.Group(7, ast.Bottom())

    def test_idempotent_on_closed_expressions(self, fixtures_dir):
        doc = parse_calendar((fixtures_dir / "basic.cal").read_text())
        for name in doc.names:
            closed = rewrite_to_bottom(doc, name)
            wrapper = CalendarDoc("w", doc.bottom, ((name, closed),))
            assert rewrite_to_bottom(wrapper, name) == closed

    def test_unknown_target(self):
        doc = parse_calendar("calendar c bottom day;\n")
        with pytest.raises(KeyError):
            rewrite_to_bottom(doc, "nope")

    def test_rewrite_preserves_oracle_semantics(self):
        from granlower.oracle import eval_window

        doc = parse_calendar(
            "calendar c bottom d;\nw = group(7, d);\nm = selectdown(1, 1, d, w);\n"
        )
        closed = rewrite_to_bottom(doc, "m")
        manual = ast.SelectDown(1, 1, ast.Bottom(), ast.Group(7, ast.Bottom()))
        assert eval_window(closed, -20, 41, guard=0).granules == (
            eval_window(manual, -20, 41, guard=0).granules
        )
