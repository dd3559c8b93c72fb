"""AST for the dedlog dialect.

A program is a set of typed predicate declarations, IO predicate
definitions (verbatim target-code bodies), facts pinned to timestamp 0,
and rules.  Rules never carry an explicit time argument: a rule derives
facts for the current timestamp unless its head has the ``@next`` marker,
in which case it derives facts for the following timestamp.

Everything here is immutable after construction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace


class ValueType(enum.Enum):
    BYTE = "byte"
    INT = "int"
    UNSIGNED_LONG = "unsigned long"

    def __str__(self) -> str:
        return self.value


_WIDTHS = {ValueType.BYTE: 1, ValueType.INT: 2, ValueType.UNSIGNED_LONG: 4}

# Representable value ranges.  `int` is stored sign/magnitude, so its range
# is symmetric and -32768 does not exist.
_RANGES = {
    ValueType.BYTE: (0, 255),
    ValueType.INT: (-32767, 32767),
    ValueType.UNSIGNED_LONG: (0, 2**32 - 1),
}


def value_width(t: ValueType) -> int:
    """Number of buffer bytes one value of type `t` occupies."""
    return _WIDTHS[t]


def value_range(t: ValueType) -> tuple[int, int]:
    """Inclusive range of values representable in the packed encoding."""
    return _RANGES[t]


class RuleKind(enum.Enum):
    DEDUCTIVE = "deductive"
    INDUCTIVE = "inductive"
    OUTPUT = "output"
    INPUT = "input"


class ParamMode(enum.Enum):
    READ = "read"
    SET = "set"


@dataclass(frozen=True)
class Declaration:
    name: str
    arg_types: tuple[ValueType, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.arg_types)


def fact_size(decl: Declaration) -> int:
    """Packed size of one fact: a tag byte plus the encoded arguments."""
    return 1 + sum(value_width(t) for t in decl.arg_types)


# ---------------------------------------------------------------------------
# Terms and arithmetic expressions


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class IntConst:
    value: int


@dataclass(frozen=True)
class NamedConst:
    """A `#NAME` token outside IO-parameter position.

    Resolved against the board's constant table when simulating and passed
    through verbatim (without the `#`) when generating code.
    """

    name: str


Term = Variable | IntConst | NamedConst


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - *
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Negate:
    operand: "Expr"


Expr = Variable | IntConst | NamedConst | BinOp | Negate


@dataclass(frozen=True)
class Comparison:
    lhs: Expr
    op: str  # one of < <= > >= == !=
    rhs: Expr


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[Term, ...] = ()
    negated: bool = False
    is_io: bool = False


BodyElem = Literal | Comparison


@dataclass(frozen=True)
class MacroTag:
    name: str
    arg: int | None = None


@dataclass(frozen=True)
class Rule:
    head: Literal
    body: tuple[BodyElem, ...]
    head_next: bool = False
    kind: RuleKind | None = None
    macro: MacroTag | None = None
    source_index: int = field(default=0, compare=False)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def with_kind(self, kind: RuleKind) -> "Rule":
        return replace(self, kind=kind)


@dataclass(frozen=True)
class Fact:
    predicate: str
    args: tuple[IntConst, ...] = ()
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IoParam:
    name: str
    mode: ParamMode


@dataclass(frozen=True)
class IoDefinition:
    """One IO predicate: `#name(params) = {verbatim target code}`.

    A parameter is READ when the body consumes its value (written `#Name`
    inside the body) and SET when the body declares it, in which case using
    the predicate binds that argument.
    """

    name: str
    params: tuple[IoParam, ...]
    body: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def arity(self) -> int:
        return len(self.params)

    def read_params(self) -> list[int]:
        return [i for i, p in enumerate(self.params) if p.mode is ParamMode.READ]

    def set_params(self) -> list[int]:
        return [i for i, p in enumerate(self.params) if p.mode is ParamMode.SET]


@dataclass(frozen=True)
class Program:
    declarations: tuple[Declaration, ...] = ()
    io_definitions: tuple[IoDefinition, ...] = ()
    facts: tuple[Fact, ...] = ()
    rules: tuple[Rule, ...] = ()

    @property
    def pending_macros(self) -> tuple[tuple[int, MacroTag], ...]:
        return tuple((r.source_index, r.macro) for r in self.rules if r.macro)


# ---------------------------------------------------------------------------
# Canonical pretty printing.  format_program(parse(text)) reparses to a
# structurally identical Program; the `expand` CLI mode prints this form.

_PRECEDENCE = {"+": 1, "-": 1, "*": 2}


def format_term(t: Term) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, IntConst):
        return str(t.value)
    return "#" + t.name


def format_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, (Variable, IntConst, NamedConst)):
        return format_term(e)
    if isinstance(e, Negate):
        return "-" + format_expr(e.operand, 3)
    text = (
        format_expr(e.lhs, _PRECEDENCE[e.op])
        + e.op
        + format_expr(e.rhs, _PRECEDENCE[e.op] + 1)
    )
    if _PRECEDENCE[e.op] < parent_prec:
        return "(" + text + ")"
    return text


def format_literal(lit: Literal) -> str:
    name = ("#" if lit.is_io else "") + lit.predicate
    args = "(" + ", ".join(format_term(a) for a in lit.args) + ")" if lit.args else ""
    return ("!" if lit.negated else "") + name + args


def format_body_elem(e: BodyElem) -> str:
    if isinstance(e, Comparison):
        return f"{format_expr(e.lhs)} {e.op} {format_expr(e.rhs)}"
    return format_literal(e)


def format_rule(r: Rule) -> str:
    prefix = ""
    if r.macro:
        arg = f":{r.macro.arg}" if r.macro.arg is not None else ""
        prefix = f"[{r.macro.name}{arg}]"
    head = format_literal(r.head) + ("@next" if r.head_next else "")
    if not r.body:
        return f"{prefix}{head}."
    return f"{prefix}{head} :- " + ", ".join(format_body_elem(e) for e in r.body) + "."


def format_fact(f: Fact) -> str:
    args = "(" + ", ".join(str(a.value) for a in f.args) + ")" if f.args else ""
    return f"{f.predicate}{args}@0."


def format_declaration(d: Declaration) -> str:
    if not d.arg_types:
        return f".decl {d.name}"
    return f".decl {d.name}(" + ", ".join(str(t) for t in d.arg_types) + ")"


def format_io_definition(d: IoDefinition) -> str:
    params = ", ".join(p.name for p in d.params)
    return f"#{d.name}({params}) = {{{d.body}}}"


def format_program(p: Program) -> str:
    sections = []
    if p.declarations:
        sections.append("\n".join(format_declaration(d) for d in p.declarations))
    if p.io_definitions:
        sections.append("\n".join(format_io_definition(d) for d in p.io_definitions))
    if p.facts:
        sections.append("\n".join(format_fact(f) for f in p.facts))
    if p.rules:
        sections.append("\n".join(format_rule(r) for r in p.rules))
    return "\n\n".join(sections) + ("\n" if sections else "")
