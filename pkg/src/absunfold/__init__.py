"""Static analyzer for concurrent programs: interval abstract interpretation
driven by prime-event-structure unfoldings, with thread-local fixpoints and
subsumption cutoffs, plus an exhaustive concrete oracle for validation."""

from .domains import (
    AbsElement, CollectingInstance, Interval, IntervalInstance, Transformer,
    abstract_transformer, collecting_transformer, contains,
)
from .indep import (
    ActionSet, IndepRelation, actions_of, build_independence,
    check_weak_independence, classify_transformers,
)
from .lang import (
    ConcreteState, Edge, ParseError, Program, concrete_step, desugar_mutexes,
    enabled, format_program, parse_program,
)
from .pes import PES, CapExceeded, Event, is_prefix, isomorphic
from .unfolder import (
    UnfoldOptions, UnfoldResult, Unfolder, check_respects_independence, unfold,
)
from .oracle import (
    ReachReport, check_d_complete, check_sound_cover,
    check_statement_commutation, enumerate_reach_abstract,
    enumerate_reach_concrete, reference_unfold, representative_config,
)

__version__ = "0.1.0"

__all__ = [
    "AbsElement", "ActionSet", "CapExceeded", "CollectingInstance",
    "ConcreteState", "Edge", "Event", "IndepRelation", "Interval",
    "IntervalInstance", "PES", "ParseError", "Program", "ReachReport",
    "Transformer", "UnfoldOptions", "UnfoldResult", "Unfolder",
    "abstract_transformer", "actions_of", "build_independence",
    "check_d_complete", "check_respects_independence", "check_sound_cover",
    "check_statement_commutation", "check_weak_independence",
    "classify_transformers", "collecting_transformer", "concrete_step",
    "contains", "desugar_mutexes", "enabled", "enumerate_reach_abstract",
    "enumerate_reach_concrete", "format_program", "is_prefix", "isomorphic",
    "parse_program", "reference_unfold", "representative_config", "unfold",
]
