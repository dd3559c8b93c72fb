"""dedlog: a temporal Datalog dialect compiled to C for microcontrollers,
with a deterministic host-side simulator for testing programs off-device."""

from .analyzer import analyze, classify_rule, number_predicates, stratify
from .ast import (
    Declaration,
    Fact,
    IoDefinition,
    Literal,
    Program,
    Rule,
    RuleKind,
    ValueType,
    fact_size,
    format_program,
    value_width,
)
from .board import EventLog, TraceScript, VirtualBoard, parse_trace
from .codegen import emit_program
from .factstore import FactStore, decode_value, encode_value
from .macros import expand_macros
from .parser import parse_io_definition, parse_program
from .simulator import Simulator, run_trace

__all__ = [
    "Declaration",
    "EventLog",
    "Fact",
    "FactStore",
    "IoDefinition",
    "Literal",
    "Program",
    "Rule",
    "RuleKind",
    "Simulator",
    "TraceScript",
    "ValueType",
    "VirtualBoard",
    "analyze",
    "classify_rule",
    "decode_value",
    "emit_program",
    "encode_value",
    "expand_macros",
    "fact_size",
    "format_program",
    "number_predicates",
    "parse_io_definition",
    "parse_program",
    "parse_trace",
    "run_trace",
    "stratify",
    "value_width",
]

__version__ = "0.1.0"
