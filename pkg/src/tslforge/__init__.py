"""Temporal Stream Logic toolchain."""

from .automata import Automaton, lasso_check, ltl_to_nba, spec_to_ucw, to_hoa
from .cfa import CFA, dumps_cfa, export_cfa, import_cfa, loads_cfa, machine_to_cfa
from .corpus import build_corpus
from .encode import APTable, Encoding, ap_statistics, encode, encode_parts, lt_counts
from .errors import (
    ArityConflict,
    CapacityError,
    EmptyUpdateGroup,
    FormatError,
    NonExclusiveOutput,
    ParseError,
    ResourceLimit,
    TSLError,
)
from .parser import load_spec, parse_formula, parse_ltl, parse_spec, parse_term
from .sim import (
    Interpretation,
    Trace,
    eval_term,
    monitor,
    parse_fun,
    random_interpretation,
    run,
    step_cfa,
)
from .syntax import Spec, SignalTable, classify_signals, desugar, pretty, pretty_term
from .synth import (
    MealyMachine,
    Realizable,
    UnrealizableCertified,
    Unknown,
    bounded_realizable,
    next_chain_experiment,
    synthesize,
    verify_machine,
)

__version__ = "0.1.0"
