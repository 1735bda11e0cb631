"""Edge-type integration scheme and numerical checks of its integral inequalities."""

from .rules import (
    ALL_TYPES,
    D,
    P1,
    P1L,
    P1L2,
    P2,
    P2L,
    P2L2,
    RULE_MU,
    S1,
    S2,
    AmbiguousInput,
    EdgeType,
    NoRule,
    SchemeParams,
    Transition,
    apply_transition,
    classify,
    parse_type,
    structural_violation,
)
from .schedule import ClosureReport, ScheduleState, Step, all_schedules, closure, run_schedule
from .inequalities import (
    LEMMAS,
    HypothesisViolation,
    InequalityCase,
    InequalityReport,
    QuadratureDivergence,
    default_case,
    validate_inequality,
)
