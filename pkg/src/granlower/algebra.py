"""Calendar-algebra expression trees and the textual calendar format.

A calendar file names one bottom granularity and then derives further
granularities from it, one definition per line::

    calendar toy bottom day;
    week = group(7, day);
    monday = selectdown(1, 1, day, week);

Twelve operators build new granularities from existing ones.  Parsing keeps
exact integer literals, resolves every reference to an earlier definition,
and rejects `subset` anywhere but the outermost position of a definition,
since bounds must stay out of all inner conversion math.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


# ---------------------------------------------------------------------------
# expression tree


@dataclass(frozen=True)
class Bottom:
    """Reference to the calendar's bottom granularity."""


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Group:
    size: int
    operand: "CalExpr"


@dataclass(frozen=True)
class Alter:
    """Grow or shrink the ``slot``-th of every ``cycle`` granules of ``base``
    by ``change`` granules of ``unit``."""

    slot: int
    change: int
    cycle: int
    unit: "CalExpr"
    base: "CalExpr"


@dataclass(frozen=True)
class Shift:
    offset: int
    operand: "CalExpr"


@dataclass(frozen=True)
class Combine:
    """Merge the ``pieces`` granules lying inside each ``container`` granule."""

    container: "CalExpr"
    pieces: "CalExpr"


@dataclass(frozen=True)
class AnchoredGroup:
    """Merge the ``filler`` granules between consecutive ``anchors`` granules."""

    filler: "CalExpr"
    anchors: "CalExpr"


@dataclass(frozen=True)
class Subset:
    """Keep only labels in ``[lo, hi]``; ``None`` means unbounded on that side."""

    lo: int | None
    hi: int | None
    operand: "CalExpr"


@dataclass(frozen=True)
class SelectDown:
    """Positionally pick ``count`` of the ``source`` granules contained in each
    ``container`` granule, starting at position ``start`` (negative counts
    from the end)."""

    start: int
    count: int
    source: "CalExpr"
    container: "CalExpr"


@dataclass(frozen=True)
class SelectUp:
    """Keep the ``source`` granules that contain at least one ``witness`` granule."""

    source: "CalExpr"
    witness: "CalExpr"


@dataclass(frozen=True)
class SelectIntersect:
    """Positionally pick among the ``source`` granules intersecting each
    ``probe`` granule."""

    start: int
    count: int
    source: "CalExpr"
    probe: "CalExpr"


@dataclass(frozen=True)
class Union:
    left: "CalExpr"
    right: "CalExpr"


@dataclass(frozen=True)
class Intersection:
    left: "CalExpr"
    right: "CalExpr"


@dataclass(frozen=True)
class Difference:
    left: "CalExpr"
    right: "CalExpr"


CalExpr = (
    Bottom
    | Name
    | Group
    | Alter
    | Shift
    | Combine
    | AnchoredGroup
    | Subset
    | SelectDown
    | SelectUp
    | SelectIntersect
    | Union
    | Intersection
    | Difference
)


def children(expr: CalExpr) -> tuple[CalExpr, ...]:
    match expr:
        case Bottom() | Name():
            return ()
        case Group(_, e) | Shift(_, e) | Subset(_, _, e):
            return (e,)
        case Alter(_, _, _, unit, base):
            return (unit, base)
        case Combine(a, b) | AnchoredGroup(a, b) | SelectUp(a, b):
            return (a, b)
        case SelectDown(_, _, a, b) | SelectIntersect(_, _, a, b):
            return (a, b)
        case Union(a, b) | Intersection(a, b) | Difference(a, b):
            return (a, b)
    raise TypeError(f"not a calendar expression: {expr!r}")


@dataclass(frozen=True)
class CalendarDoc:
    """A named calendar: one bottom granularity and ordered definitions."""

    name: str
    bottom: str
    definitions: tuple[tuple[str, CalExpr], ...]

    def expr_for(self, name: str) -> CalExpr:
        if name == self.bottom:
            return Bottom()
        for n, e in self.definitions:
            if n == name:
                return e
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.definitions)


# ---------------------------------------------------------------------------
# parsing

KEYWORDS = {
    "calendar",
    "bottom",
    "inf",
    "group",
    "alter",
    "shift",
    "combine",
    "anchor",
    "subset",
    "selectdown",
    "selectup",
    "selectintersect",
    "union",
    "intersect",
    "difference",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
    |(?P<int>-?[0-9]+)
    |(?P<neg_inf>-inf\b)
    |(?P<ident>[A-Za-z_][A-Za-z0-9_-]*)
    |(?P<punct>[(),;=])
    """,
    re.VERBOSE,
)


class CalendarSyntaxError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass
class _Token:
    kind: str  # "int" | "ident" | "neg_inf" | punctuation itself | "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise CalendarSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "punct":
            tokens.append(_Token(value, value, line, col))
        elif kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, kind: str, what: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            found = repr(tok.text) if tok.text else "end of input"
            raise CalendarSyntaxError(
                f"expected {what or kind}, found {found}", tok.line, tok.column
            )
        self.pos += 1
        return tok

    def error(self, message: str) -> CalendarSyntaxError:
        tok = self.peek()
        return CalendarSyntaxError(message, tok.line, tok.column)

    def fresh_name(self, seen: set[str]) -> str:
        tok = self.take("ident", "a name")
        if tok.text in KEYWORDS:
            raise CalendarSyntaxError(
                f"{tok.text!r} is reserved and cannot name a granularity",
                tok.line,
                tok.column,
            )
        if tok.text in seen:
            raise CalendarSyntaxError(f"duplicate name {tok.text!r}", tok.line, tok.column)
        return tok.text

    def integer(self) -> int:
        return int(self.take("int", "an integer").text)

    def positive(self, what: str) -> int:
        tok = self.peek()
        value = self.integer()
        if value < 1:
            raise CalendarSyntaxError(f"{what} must be positive, got {value}", tok.line, tok.column)
        return value

    def nonzero(self, what: str) -> int:
        tok = self.peek()
        value = self.integer()
        if value == 0:
            raise CalendarSyntaxError(f"{what} must be nonzero", tok.line, tok.column)
        return value

    def bound(self, side: str) -> int | None:
        tok = self.peek()
        if tok.kind == "neg_inf":
            self.pos += 1
            if side != "lo":
                raise CalendarSyntaxError("-inf is only valid as a lower bound", tok.line, tok.column)
            return None
        if tok.kind == "ident" and tok.text == "inf":
            self.pos += 1
            if side != "hi":
                raise CalendarSyntaxError("inf is only valid as an upper bound", tok.line, tok.column)
            return None
        return self.integer()

    def document(self) -> CalendarDoc:
        self.take_keyword("calendar")
        seen: set[str] = set()
        cal_name = self.fresh_name(seen)
        self.take_keyword("bottom")
        bottom = self.fresh_name(seen)
        seen.add(bottom)
        self.take(";")
        defs: list[tuple[str, CalExpr]] = []
        while self.peek().kind != "eof":
            name = self.fresh_name(seen)
            self.take("=")
            expr = self.expression(bottom, seen, outermost=True)
            self.take(";")
            seen.add(name)
            defs.append((name, expr))
        return CalendarDoc(cal_name, bottom, tuple(defs))

    def take_keyword(self, word: str) -> None:
        tok = self.peek()
        if tok.kind != "ident" or tok.text != word:
            raise CalendarSyntaxError(f"expected {word!r}", tok.line, tok.column)
        self.pos += 1

    def expression(self, bottom: str, seen: set[str], outermost: bool = False) -> CalExpr:
        tok = self.take("ident", "a granularity expression")
        word = tok.text
        if word not in KEYWORDS:
            if word == bottom:
                return Bottom()
            if word not in seen:
                raise CalendarSyntaxError(f"unknown granularity {word!r}", tok.line, tok.column)
            return Name(word)
        if word in ("calendar", "bottom", "inf"):
            raise CalendarSyntaxError(f"unexpected keyword {word!r}", tok.line, tok.column)
        if word == "subset" and not outermost:
            raise CalendarSyntaxError(
                "subset may only appear as the outermost operation of a definition",
                tok.line,
                tok.column,
            )
        self.take("(")
        expr = self._operator_body(word, tok, bottom, seen)
        self.take(")")
        return expr

    def _operator_body(self, word: str, tok: _Token, bottom: str, seen: set[str]) -> CalExpr:
        def sub() -> CalExpr:
            return self.expression(bottom, seen)

        def comma() -> None:
            self.take(",")

        if word == "group":
            size = self.positive("grouping size")
            comma()
            return Group(size, sub())
        if word == "alter":
            slot = self.positive("alter slot")
            comma()
            change = self.integer()
            comma()
            cycle = self.positive("alter cycle")
            if slot > cycle:
                raise CalendarSyntaxError(
                    f"alter slot {slot} exceeds cycle {cycle}", tok.line, tok.column
                )
            comma()
            unit = sub()
            comma()
            return Alter(slot, change, cycle, unit, sub())
        if word == "shift":
            offset = self.integer()
            comma()
            return Shift(offset, sub())
        if word == "combine":
            container = sub()
            comma()
            return Combine(container, sub())
        if word == "anchor":
            filler = sub()
            comma()
            return AnchoredGroup(filler, sub())
        if word == "subset":
            lo = self.bound("lo")
            comma()
            hi = self.bound("hi")
            if lo is not None and hi is not None and lo > hi:
                raise CalendarSyntaxError(
                    f"subset bounds {lo}..{hi} are inverted", tok.line, tok.column
                )
            comma()
            return Subset(lo, hi, sub())
        if word in ("selectdown", "selectintersect"):
            start = self.nonzero("selection start")
            comma()
            count = self.positive("selection count")
            comma()
            source = sub()
            comma()
            other = sub()
            cls = SelectDown if word == "selectdown" else SelectIntersect
            return cls(start, count, source, other)
        if word == "selectup":
            source = sub()
            comma()
            return SelectUp(source, sub())
        if word in ("union", "intersect", "difference"):
            left = sub()
            comma()
            right = sub()
            cls = {"union": Union, "intersect": Intersection, "difference": Difference}[word]
            return cls(left, right)
        raise CalendarSyntaxError(f"unknown operator {word!r}", tok.line, tok.column)


def parse_calendar(text: str) -> CalendarDoc:
    """Parse calendar source text; raises :class:`CalendarSyntaxError` with position."""
    return _Parser(text).document()


# ---------------------------------------------------------------------------
# printing (canonical form; parse . print == identity)


def print_expr(expr: CalExpr, bottom: str) -> str:
    def b(x: int | None, side: str) -> str:
        if x is None:
            return "-inf" if side == "lo" else "inf"
        return str(x)

    match expr:
        case Bottom():
            return bottom
        case Name(n):
            return n
        case Group(m, e):
            return f"group({m}, {print_expr(e, bottom)})"
        case Alter(slot, change, cycle, unit, base):
            return (
                f"alter({slot}, {change}, {cycle}, "
                f"{print_expr(unit, bottom)}, {print_expr(base, bottom)})"
            )
        case Shift(m, e):
            return f"shift({m}, {print_expr(e, bottom)})"
        case Combine(c, p):
            return f"combine({print_expr(c, bottom)}, {print_expr(p, bottom)})"
        case AnchoredGroup(f, a):
            return f"anchor({print_expr(f, bottom)}, {print_expr(a, bottom)})"
        case Subset(lo, hi, e):
            return f"subset({b(lo, 'lo')}, {b(hi, 'hi')}, {print_expr(e, bottom)})"
        case SelectDown(k, l, s, c):
            return f"selectdown({k}, {l}, {print_expr(s, bottom)}, {print_expr(c, bottom)})"
        case SelectUp(s, w):
            return f"selectup({print_expr(s, bottom)}, {print_expr(w, bottom)})"
        case SelectIntersect(k, l, s, p):
            return f"selectintersect({k}, {l}, {print_expr(s, bottom)}, {print_expr(p, bottom)})"
        case Union(a, c):
            return f"union({print_expr(a, bottom)}, {print_expr(c, bottom)})"
        case Intersection(a, c):
            return f"intersect({print_expr(a, bottom)}, {print_expr(c, bottom)})"
        case Difference(a, c):
            return f"difference({print_expr(a, bottom)}, {print_expr(c, bottom)})"
    raise TypeError(f"not a calendar expression: {expr!r}")


def print_calendar(doc: CalendarDoc) -> str:
    lines = [f"calendar {doc.name} bottom {doc.bottom};"]
    lines.extend(
        f"{name} = {print_expr(expr, doc.bottom)};" for name, expr in doc.definitions
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# static validation


@dataclass(frozen=True)
class Finding:
    definition: str
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.findings

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"{f.definition}: [{f.rule}] {f.message}" for f in self.findings)


def validate(doc: CalendarDoc) -> ValidationReport:
    """Static checks on a document, mirroring what the parser enforces.

    Useful for documents assembled programmatically.  Semantic operand checks
    that need converted representations (partitions, label alignment, the
    alter lower bound) are performed by the converter and reported there.
    """
    findings: list[Finding] = []
    known = {doc.bottom}
    bounded: set[str] = set()

    def walk(name: str, expr: CalExpr, outermost: bool) -> None:
        match expr:
            case Name(n):
                if n not in known:
                    findings.append(Finding(name, "unresolved-name", f"{n!r} is not defined earlier"))
                elif n in bounded:
                    findings.append(
                        Finding(
                            name,
                            "bounded-operand",
                            f"{n!r} carries subset bounds and cannot be an operand",
                        )
                    )
            case Subset(lo, hi, _) if not outermost:
                findings.append(
                    Finding(name, "subset-not-outermost", "subset must be the outermost operation")
                )
            case Subset(lo, hi, _) if lo is not None and hi is not None and lo > hi:
                findings.append(Finding(name, "parameter-range", f"subset bounds {lo}..{hi} inverted"))
            case Group(m, _) if m < 1:
                findings.append(Finding(name, "parameter-range", f"group size {m} must be positive"))
            case Alter(slot, _, cycle, _, _) if not 1 <= slot <= cycle:
                findings.append(
                    Finding(name, "parameter-range", f"alter needs 1 <= slot <= cycle, got {slot}, {cycle}")
                )
            case SelectDown(k, l, _, _) | SelectIntersect(k, l, _, _) if k == 0 or l < 1:
                findings.append(
                    Finding(name, "parameter-range", f"selection needs start != 0 and count > 0, got {k}, {l}")
                )
        for child in children(expr):
            walk(name, child, outermost=False)

    seen: set[str] = set()
    for name, expr in doc.definitions:
        if name in seen or name == doc.bottom:
            findings.append(Finding(name, "duplicate-name", f"{name!r} defined twice"))
        walk(name, expr, outermost=True)
        if isinstance(expr, Subset):
            bounded.add(name)
        seen.add(name)
        known.add(name)
    return ValidationReport(tuple(findings))


# ---------------------------------------------------------------------------
# rewriting


def rewrite_to_bottom(doc: CalendarDoc, target: str) -> CalExpr:
    """Close the definition of ``target`` over the bottom granularity.

    Every name is inlined with its (already rewritten) definition; the same
    object is reused wherever a name recurs, so structurally identical
    subexpressions are shared and the conversion cache sees each once.
    """
    memo: dict[str, CalExpr] = {}

    def close(expr: CalExpr) -> CalExpr:
        match expr:
            case Bottom():
                return expr
            case Name(n):
                if n not in memo:
                    memo[n] = close(doc.expr_for(n))
                return memo[n]
            case Group(m, e):
                return Group(m, close(e))
            case Alter(slot, change, cycle, unit, base):
                return Alter(slot, change, cycle, close(unit), close(base))
            case Shift(m, e):
                return Shift(m, close(e))
            case Combine(c, p):
                return Combine(close(c), close(p))
            case AnchoredGroup(f, a):
                return AnchoredGroup(close(f), close(a))
            case Subset(lo, hi, e):
                return Subset(lo, hi, close(e))
            case SelectDown(k, l, s, c):
                return SelectDown(k, l, close(s), close(c))
            case SelectUp(s, w):
                return SelectUp(close(s), close(w))
            case SelectIntersect(k, l, s, p):
                return SelectIntersect(k, l, close(s), close(p))
            case Union(a, b):
                return Union(close(a), close(b))
            case Intersection(a, b):
                return Intersection(close(a), close(b))
            case Difference(a, b):
                return Difference(close(a), close(b))
        raise TypeError(f"not a calendar expression: {expr!r}")

    if target == doc.bottom:
        return Bottom()
    return close(doc.expr_for(target))
