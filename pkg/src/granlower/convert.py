"""Lowering of calendar-algebra expressions to periodic representations.

Each operator gets a dedicated converter that runs the three conversion
steps: derive the result's period length and label distance from the
operands', identify the labels of the granules covering one result period,
and assemble those granules' contents.  The raw labeled granules are then
re-anchored with :func:`granlower.core.normalize_alignment`, so every
converter output is aligned to bottom instant 1.

:func:`convert_expression` drives the recursion over a closed expression,
caching converted subexpressions by structural equality and optionally
interleaving period minimization after every operation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import algebra as ast
from .core import (
    EmptyRep,
    GranularityError,
    PeriodicRep,
    Rep,
    mindist,
    normalize_alignment,
)
from .minimize import minimize as minimize_rep

DEFAULT_MAX_PERIOD = 10**9

BOTTOM_REP = PeriodicRep(1, 1, {1: (1,)})


class ConversionError(Exception):
    """A semantic precondition failed while lowering an expression."""

    def __init__(self, message: str, path: tuple[str, ...] = ()):
        self.message = message
        self.path = path
        where = f" (at {' > '.join(path)})" if path else ""
        super().__init__(message + where)


@dataclass
class TraceEntry:
    """Per-subexpression conversion record, for diagnostics."""

    operation: str
    period: int
    step: int
    anchor: int | None
    explicit_count: int


StepTrace = list  # list[TraceEntry]

ConversionCache = dict  # dict[ast.CalExpr, Rep]


def delta_select(items: Sequence[int], start: int, count: int) -> list[int]:
    """Positional selection: ``count`` elements of ``items`` from position ``start``.

    Positions are 1-based; a negative ``start`` counts from the end (-1 is the
    last element) and selection still runs forward from there.  Positions that
    fall outside the sequence are silently dropped, so the result may be
    shorter than ``count`` or empty.  This is the one place the counted-from-
    the-end reading of negative starts is fixed; the formal definition lives
    in an external source and everything downstream inherits this choice.
    """
    if start == 0:
        raise ValueError("selection start must be nonzero")
    if count < 1:
        raise ValueError("selection count must be positive")
    n = len(items)
    pos = start if start > 0 else n + start + 1
    lo = max(pos, 1)
    hi = min(pos + count - 1, n)
    if lo > hi:
        return []
    return list(items[lo - 1 : hi])


# ---------------------------------------------------------------------------
# shared helpers


def _cap(period: int, max_period: int) -> int:
    if period > max_period:
        raise ConversionError(
            f"result period {period} exceeds the {max_period} cap "
            "(raise GRANLOWER_MAX_PERIOD to allow it)"
        )
    return period


def _require_full_integer(rep: PeriodicRep, op: str) -> None:
    if rep.bounds is not None:
        raise ConversionError(f"operand of {op} carries subset bounds")
    if len(rep.explicit) != rep.step:
        raise ConversionError(
            f"operand of {op} is not full-integer labeled "
            f"({len(rep.explicit)} granules per window of {rep.step})"
        )


def _require_unbounded(rep: Rep, op: str) -> None:
    if isinstance(rep, PeriodicRep) and rep.bounds is not None:
        raise ConversionError(f"operand of {op} carries subset bounds")


def _covering_labels(rep: PeriodicRep, instants: Sequence[int]) -> list[int]:
    # labels of granules touching any of the instants; complete for the
    # contained/containing/intersecting searches because any such granule
    # shares at least one instant with the probe set
    found = {rep.up(t) for t in instants}
    found.discard(None)
    return sorted(found)


def _contained_labels(rep: PeriodicRep, container: Sequence[int]) -> list[int]:
    pool = set(container)
    return [
        j for j in _covering_labels(rep, container) if set(rep.expand(j)) <= pool
    ]


def _concat(granules: list) -> tuple[int, ...]:
    out: list[int] = []
    for g in granules:
        out.extend(g)
    return tuple(out)


# ---------------------------------------------------------------------------
# grouping-oriented operations


def convert_group(g: Rep, size: int, max_period: int = DEFAULT_MAX_PERIOD) -> Rep:
    if size < 1:
        raise ConversionError(f"group size must be positive, got {size}")
    if isinstance(g, EmptyRep):
        return g
    _require_full_integer(g, "group")
    d = math.gcd(size, g.step)
    period = _cap(g.period * size // d, max_period)
    step = g.step // d
    first = (g.anchor_label - 1) // size + 1
    raw = {
        i: _concat([g.expand(j) for j in range((i - 1) * size + 1, i * size + 1)])
        for i in range(first, first + step)
    }
    return normalize_alignment(raw, period, step)


def convert_alter(
    unit: Rep,
    base: Rep,
    slot: int,
    change: int,
    cycle: int,
    max_period: int = DEFAULT_MAX_PERIOD,
) -> Rep:
    if not 1 <= slot <= cycle:
        raise ConversionError(f"alter needs 1 <= slot <= cycle, got {slot}, {cycle}")
    if isinstance(base, EmptyRep):
        return base
    if isinstance(unit, EmptyRep):
        raise ConversionError("alter unit is empty and cannot partition the base")
    _require_full_integer(base, "alter")
    _require_full_integer(unit, "alter")
    try:
        distance = mindist(base, unit)
    except GranularityError as exc:
        raise ConversionError(f"alter unit does not partition the base: {exc}") from exc
    if change <= -(distance - 1):
        raise ConversionError(
            f"alter change {change} must exceed -(mindist-1) = {-(distance - 1)}"
        )
    p1, n1 = base.period, base.step
    p2, n2 = unit.period, unit.step
    step = math.lcm(
        n1,
        cycle,
        p2 * n1 // math.gcd(p2 * n1, p1),
        n2 * cycle // math.gcd(n2 * cycle, abs(change)),
    )
    period_frac = (
        Fraction(step * p1 * n2, n1 * p2) + Fraction(step * change, cycle)
    ) * Fraction(p2, n2)
    if period_frac.denominator != 1 or period_frac < 1:
        raise ConversionError(f"alter produced an invalid period {period_frac}")
    period = _cap(int(period_frac), max_period)
    raw = {}
    for i in range(1, step + 1):
        g = base.expand(i)
        b = unit.up(g[0])
        t = unit.up(g[-1])
        assert b is not None and t is not None  # partition already verified
        h = (i - slot) // cycle + 1
        if (i - slot) % cycle == 0:
            b2 = b + (h - 1) * change
        else:
            b2 = b + h * change
        t2 = t + h * change
        if b2 > t2:
            raise ConversionError(f"alter shrank granule {i} away entirely")
        raw[i] = _concat([unit.expand(j) for j in range(b2, t2 + 1)])
    return normalize_alignment(raw, period, step)


def convert_shift(g: Rep, offset: int, max_period: int = DEFAULT_MAX_PERIOD) -> Rep:
    if isinstance(g, EmptyRep):
        return g
    _require_full_integer(g, "shift")
    base = g.first_label + offset
    raw = {i: g.expand(i - offset) for i in range(base, base + g.step)}
    return normalize_alignment(raw, g.period, g.step)


def convert_combine(
    container: Rep, pieces: Rep, max_period: int = DEFAULT_MAX_PERIOD
) -> Rep:
    if isinstance(container, EmptyRep) or isinstance(pieces, EmptyRep):
        return EmptyRep()
    _require_unbounded(container, "combine")
    _require_unbounded(pieces, "combine")
    period = _cap(math.lcm(container.period, pieces.period), max_period)
    step = period * container.step // container.period
    piece_cover = set(pieces.lhat(period))
    raw = {}
    for i in container.lhat(period):
        granule = container.expand(i)
        inside = _contained_labels(pieces, granule)
        if any(j in piece_cover for j in inside):
            raw[i] = _concat([pieces.expand(j) for j in inside])
    if not raw:
        return EmptyRep()
    return normalize_alignment(raw, period, step)


def convert_anchored(
    filler: Rep, anchors: Rep, max_period: int = DEFAULT_MAX_PERIOD
) -> Rep:
    if isinstance(anchors, EmptyRep):
        return EmptyRep()
    if isinstance(filler, EmptyRep):
        raise ConversionError("anchor granularity is not a subgranularity of an empty filler")
    _require_full_integer(filler, "anchor")
    _require_unbounded(anchors, "anchor")
    horizon = math.lcm(filler.period, anchors.period)
    checked = anchors.lhat(horizon)
    checked.append(anchors.next_label(checked[-1]))
    for a in checked:
        if filler.expand(a) != anchors.expand(a):
            raise ConversionError(
                f"anchor label {a} is not label-aligned with the filler granularity"
            )
    period = _cap(horizon, max_period)
    step = period * anchors.step // anchors.period
    labels = anchors.lhat(period)
    if anchors.anchor_label != filler.anchor_label:
        labels.insert(0, anchors.prev_label(anchors.anchor_label))
    raw = {}
    for i in labels:
        nxt = anchors.next_label(i)
        raw[i] = _concat([filler.expand(j) for j in range(i, nxt)])
    return normalize_alignment(raw, period, step)


# ---------------------------------------------------------------------------
# granule-oriented operations


def convert_subset(
    g: Rep, lo: int | None, hi: int | None, max_period: int = DEFAULT_MAX_PERIOD
) -> Rep:
    if lo is not None and hi is not None and lo > hi:
        raise ConversionError(f"subset bounds {lo}..{hi} are inverted")
    if isinstance(g, EmptyRep):
        return g
    _require_unbounded(g, "subset")
    first = None if lo is None else g.next_label(lo - 1)
    last = None if hi is None else g.prev_label(hi + 1)
    if first is not None and last is not None and first > last:
        return EmptyRep()
    if first is None and last is None:
        return g
    return PeriodicRep(g.period, g.step, g.explicit, (first, last))


def _select_frame(g1: PeriodicRep, g2: PeriodicRep, max_period: int) -> tuple[int, int]:
    period = _cap(math.lcm(g1.period, g2.period), max_period)
    return period, period * g1.step // g1.period


def convert_select_down(
    source: Rep, container: Rep, start: int, count: int,
    max_period: int = DEFAULT_MAX_PERIOD,
) -> Rep:
    if isinstance(source, EmptyRep) or isinstance(container, EmptyRep):
        return EmptyRep()
    _require_unbounded(source, "selectdown")
    _require_unbounded(container, "selectdown")
    period, step = _select_frame(source, container, max_period)
    source_cover = set(source.lhat(period))
    kept: set[int] = set()
    for i in container.lhat(period):
        inside = _contained_labels(source, container.expand(i))
        kept.update(a for a in delta_select(inside, start, count) if a in source_cover)
    if not kept:
        return EmptyRep()
    return normalize_alignment({a: source.expand(a) for a in kept}, period, step)


def convert_select_up(
    source: Rep, witness: Rep, max_period: int = DEFAULT_MAX_PERIOD
) -> Rep:
    if isinstance(source, EmptyRep) or isinstance(witness, EmptyRep):
        return EmptyRep()
    _require_unbounded(source, "selectup")
    _require_unbounded(witness, "selectup")
    period, step = _select_frame(source, witness, max_period)
    raw = {}
    for i in source.lhat(period):
        granule = source.expand(i)
        if _contained_labels(witness, granule):
            raw[i] = granule
    if not raw:
        return EmptyRep()
    return normalize_alignment(raw, period, step)


def convert_select_intersect(
    source: Rep, probe: Rep, start: int, count: int,
    max_period: int = DEFAULT_MAX_PERIOD,
) -> Rep:
    if isinstance(source, EmptyRep) or isinstance(probe, EmptyRep):
        return EmptyRep()
    _require_unbounded(source, "selectintersect")
    _require_unbounded(probe, "selectintersect")
    period, step = _select_frame(source, probe, max_period)
    source_cover = set(source.lhat(period))
    kept: set[int] = set()
    for i in probe.lhat(period):
        touching = _covering_labels(source, probe.expand(i))
        kept.update(a for a in delta_select(touching, start, count) if a in source_cover)
    if not kept:
        return EmptyRep()
    return normalize_alignment({a: source.expand(a) for a in kept}, period, step)


def convert_set_op(
    left: Rep, right: Rep, which: str, max_period: int = DEFAULT_MAX_PERIOD
) -> Rep:
    if which not in ("union", "intersection", "difference"):
        raise ValueError(f"unknown set operation {which!r}")
    if isinstance(left, EmptyRep):
        return right if which == "union" else EmptyRep()
    if isinstance(right, EmptyRep):
        return EmptyRep() if which == "intersection" else left
    _require_unbounded(left, which)
    _require_unbounded(right, which)
    if left.step * right.period != right.step * left.period:
        raise ConversionError(
            "set operation operands have different label densities "
            f"({left.step}/{left.period} vs {right.step}/{right.period})"
        )
    period = _cap(math.lcm(left.period, right.period), max_period)
    step = period * left.step // left.period
    cover1 = left.lhat(period)
    cover2 = right.lhat(period)
    merged: dict[int, tuple[int, ...]] = {a: left.expand(a) for a in cover1}
    for a in cover2:
        g = right.expand(a)
        if a in merged:
            if merged[a] != g:
                raise ConversionError(
                    f"shared label {a} maps to different granules in the two operands"
                )
        else:
            merged[a] = g
    ordered = sorted(merged)
    for a, b in zip(ordered, ordered[1:]):
        if merged[a][-1] >= merged[b][0]:
            raise ConversionError(
                f"granules of labels {a} and {b} interleave; the operands are not "
                "label-aligned subgranularities of one granularity"
            )
    if merged[ordered[-1]][-1] >= merged[ordered[0]][0] + period:
        raise ConversionError("operand granules interleave across the period boundary")
    set1, set2 = set(cover1), set(cover2)
    if which == "union":
        labels = set1 | set2
    elif which == "intersection":
        labels = set1 & set2
    else:
        labels = set1 - set2
    if not labels:
        return EmptyRep()
    return normalize_alignment({a: merged[a] for a in labels}, period, step)


# ---------------------------------------------------------------------------
# relabeling


def relabel(g: Rep, old: int, new: int) -> Rep:
    """Make granule ``old`` of ``g`` the granule labeled ``new``, renumbering
    every other granule consecutively.  The result is full-integer labeled
    with the same period; granule contents are untouched."""
    if isinstance(g, EmptyRep):
        raise ConversionError("cannot relabel an empty granularity")
    core = PeriodicRep(g.period, g.step, g.explicit) if g.bounds else g
    if not core.is_label(old):
        raise ConversionError(f"{old} does not label a non-empty granule")
    if g.anchor_label != g.first_label:
        raise ConversionError("relabel requires an aligned representation")
    window = g.labels
    count = len(window)
    cycles = (old - g.first_label) // g.step
    reduced = old - cycles * g.step
    new_reduced = new - cycles * count
    offset = window.index(reduced)
    base = new_reduced - offset
    explicit = {base + idx: g.explicit[lab] for idx, lab in enumerate(window)}
    bounds = None
    if g.bounds is not None:

        def map_label(lab: int | None) -> int | None:
            if lab is None:
                return None
            c = (lab - g.first_label) // g.step
            idx = window.index(lab - c * g.step)
            return base + idx + c * count

        bounds = (map_label(g.bounds[0]), map_label(g.bounds[1]))
    return PeriodicRep(g.period, count, explicit, bounds)


def gstp_relabel(g: Rep) -> Rep:
    """Relabel so the first granule covering only positive instants gets label 1.

    This is the labeling convention the granularity constraint solver expects
    of its inputs.
    """
    if isinstance(g, EmptyRep):
        raise ConversionError("cannot relabel an empty granularity")
    core = PeriodicRep(g.period, g.step, g.explicit) if g.bounds else g
    anchor = core.anchor_label
    if min(core.expand(anchor)) > 0:
        target = anchor
    else:
        target = core.next_label(anchor)
    return relabel(g, target, 1)


# ---------------------------------------------------------------------------
# the recursive driver


def convert_expression(
    expr: ast.CalExpr,
    *,
    minimize: bool = True,
    cache: ConversionCache | None = None,
    max_period: int = DEFAULT_MAX_PERIOD,
    trace: StepTrace | None = None,
) -> Rep:
    """Lower a closed calendar expression to its periodic representation.

    The expression must contain no name references (see
    :func:`granlower.algebra.rewrite_to_bottom`) and may use ``subset`` only
    at the root.  With ``minimize`` set, the period minimization step runs
    after every operation's conversion.  ``cache`` maps already-converted
    subexpressions (by structural equality) to their representations; reuse it
    across calls only with an unchanged ``minimize`` flag.
    """
    if cache is None:
        cache = {}
    return _convert(expr, minimize, cache, max_period, trace, root=True, path=())


_OP_NAMES = {
    ast.Bottom: "bottom",
    ast.Group: "group",
    ast.Alter: "alter",
    ast.Shift: "shift",
    ast.Combine: "combine",
    ast.AnchoredGroup: "anchor",
    ast.Subset: "subset",
    ast.SelectDown: "selectdown",
    ast.SelectUp: "selectup",
    ast.SelectIntersect: "selectintersect",
    ast.Union: "union",
    ast.Intersection: "intersection",
    ast.Difference: "difference",
}


def _convert(expr, minimize, cache, max_period, trace, root, path):
    if expr in cache:
        return cache[expr]
    name = _OP_NAMES.get(type(expr))
    if name is None:
        if isinstance(expr, ast.Name):
            raise ConversionError(
                f"expression still references {expr.name!r}; rewrite it to the bottom first",
                path,
            )
        raise ConversionError(f"not a calendar expression: {expr!r}", path)
    here = path + (name,)

    def conv(sub):
        return _convert(sub, minimize, cache, max_period, trace, False, here)

    try:
        match expr:
            case ast.Bottom():
                result = BOTTOM_REP
            case ast.Group(size, e):
                result = convert_group(conv(e), size, max_period)
            case ast.Alter(slot, change, cycle, unit, base):
                result = convert_alter(conv(unit), conv(base), slot, change, cycle, max_period)
            case ast.Shift(offset, e):
                result = convert_shift(conv(e), offset, max_period)
            case ast.Combine(container, pieces):
                result = convert_combine(conv(container), conv(pieces), max_period)
            case ast.AnchoredGroup(filler, anchors):
                result = convert_anchored(conv(filler), conv(anchors), max_period)
            case ast.Subset(lo, hi, e):
                if not root:
                    raise ConversionError("subset below the outermost operation", here)
                result = convert_subset(conv(e), lo, hi, max_period)
            case ast.SelectDown(start, count, source, container):
                result = convert_select_down(conv(source), conv(container), start, count, max_period)
            case ast.SelectUp(source, witness):
                result = convert_select_up(conv(source), conv(witness), max_period)
            case ast.SelectIntersect(start, count, source, probe):
                result = convert_select_intersect(conv(source), conv(probe), start, count, max_period)
            case ast.Union(a, b):
                result = convert_set_op(conv(a), conv(b), "union", max_period)
            case ast.Intersection(a, b):
                result = convert_set_op(conv(a), conv(b), "intersection", max_period)
            case ast.Difference(a, b):
                result = convert_set_op(conv(a), conv(b), "difference", max_period)
    except ConversionError as exc:
        if exc.path:
            raise
        raise ConversionError(exc.message, here) from None
    if minimize and not isinstance(expr, ast.Bottom):
        result = minimize_rep(result)
    if trace is not None:
        if isinstance(result, EmptyRep):
            trace.append(TraceEntry(name, 0, 0, None, 0))
        else:
            trace.append(
                TraceEntry(
                    name,
                    result.period,
                    result.step,
                    result.anchor_label,
                    len(result.explicit),
                )
            )
    cache[expr] = result
    return result
