"""Built-in IO predicates for the GPIO interface of Arduino-style boards.

These definitions are implicitly available to every program; the simulator
knows how to execute them natively and the code generator splices their
bodies like any user definition.
"""

from __future__ import annotations

from .ast import IoDefinition, ValueType
from .parser import parse_io_definition

_SOURCES = (
    "#pinIn(P) = {pinMode(#P, INPUT);}",
    "#pinOut(P) = {pinMode(#P, OUTPUT);}",
    "#digitalWrite(P, Val) = {digitalWrite(#P, #Val);}",
    "#digitalRead(P, Val) = {int Val = digitalRead(#P);}",
    "#millis(T) = {unsigned long T = millis();}",
)

STANDARD_IO: dict[str, IoDefinition] = {
    d.name: d for d in (parse_io_definition(s) for s in _SOURCES)
}

# Value types produced by the set parameters of the standard predicates,
# used for typing the variables they bind.
STANDARD_SET_TYPES: dict[tuple[str, str], ValueType] = {
    ("digitalRead", "Val"): ValueType.INT,
    ("millis", "T"): ValueType.UNSIGNED_LONG,
}
