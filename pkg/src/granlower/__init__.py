"""granlower: lower calendar-algebra definitions to minimal periodic sets."""

from .algebra import (
    CalendarDoc,
    CalendarSyntaxError,
    ValidationReport,
    parse_calendar,
    print_calendar,
    rewrite_to_bottom,
    validate,
)
from .convert import (
    ConversionError,
    convert_expression,
    delta_select,
    gstp_relabel,
    relabel,
)
from .core import (
    EmptyRep,
    GranularityError,
    PeriodicRep,
    Rep,
    down_label,
    mindist,
    normalize_alignment,
    up_label,
)
from .minimize import is_valid_reduction, minimize
from .oracle import WindowEval, compare_with_periodic, eval_window, verify_against_oracle

__all__ = [
    "CalendarDoc",
    "CalendarSyntaxError",
    "ConversionError",
    "EmptyRep",
    "GranularityError",
    "PeriodicRep",
    "Rep",
    "ValidationReport",
    "WindowEval",
    "compare_with_periodic",
    "convert_expression",
    "delta_select",
    "down_label",
    "eval_window",
    "gstp_relabel",
    "is_valid_reduction",
    "mindist",
    "minimize",
    "normalize_alignment",
    "parse_calendar",
    "print_calendar",
    "relabel",
    "rewrite_to_bottom",
    "up_label",
    "validate",
    "verify_against_oracle",
]
