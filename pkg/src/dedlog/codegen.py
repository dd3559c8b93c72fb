"""C code emission.

The emitted file is self-contained: two packed fact buffers, access
functions (switch/clear, typed value readers and writers, per-predicate
inserts, finders for every registered binding pattern, argument readers),
one function per rule, and the setup()/loop() entry points.  loop() runs
one fixpoint do-while per stratum over that stratum's deductive rules,
then the output, inductive, and input rules in program order, and finally
switches the buffers.

Rule functions are nested-loop joins: one while-loop per positive body
literal using the pattern finder, an if per comparison, an all-bound probe
for negated literals and for the duplicate check before every insert.  IO
definitions are spliced verbatim with `#Param` replaced by the bound value
and set parameters renamed to the rule variable they bind.

Buffers carry one extra zero byte past the configured size so scans always
terminate on a zero tag even when a buffer is completely full.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .analyzer import (
    Analysis,
    CompareStep,
    CompileLayout,
    IoStep,
    NegationStep,
    RulePlan,
    RuleKind,
    ScanStep,
)
from .ast import (
    BinOp,
    Expr,
    IntConst,
    NamedConst,
    Negate,
    Term,
    ValueType,
    Variable,
)

ARDUINO_HEADER = "Arduino.h"
SHIM_HEADER = "arduino_shim.h"

_CTYPE = {
    ValueType.BYTE: "uint8_t",
    ValueType.INT: "int16_t",
    ValueType.UNSIGNED_LONG: "uint32_t",
}

_PRINTF = {
    ValueType.BYTE: ("%u", "unsigned"),
    ValueType.INT: ("%d", "int"),
    ValueType.UNSIGNED_LONG: ("%lu", "unsigned long"),
}


class CodegenError(Exception):
    pass


@dataclass
class EmittedUnit:
    source_text: str
    entry_points: tuple[str, str] = ("setup", "loop")
    required_headers: tuple[str, ...] = (ARDUINO_HEADER,)


def _pattern_suffix(pattern: str) -> str:
    return pattern if pattern else "x"


def _finder_name(pred: str, pattern: str) -> str:
    return f"{pred}_{_pattern_suffix(pattern)}"


def _const_text(value: int, t: ValueType) -> str:
    if t is ValueType.UNSIGNED_LONG:
        return f"{value & 0xFFFFFFFF}UL"
    return str(value)


def _term_text(term: Term, t: ValueType | None = None) -> str:
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, IntConst):
        return _const_text(term.value, t) if t is not None else str(term.value)
    return term.name  # named constant, passed through verbatim


# ---------------------------------------------------------------------------
# Comparison emission.  Arithmetic is evaluated in the promoted width with
# every node routed through an unsigned cast, so overflow wraps identically
# on the host, on the target, and in the simulator.


class _CompareEmitter:
    def __init__(self, var_types: dict[str, ValueType], set_vars: set[str]):
        self.var_types = var_types
        self.set_vars = set_vars

    def _unsigned(self, e: Expr, ut: str) -> str:
        if isinstance(e, BinOp):
            return f"({ut})({self._unsigned(e.lhs, ut)} {e.op} {self._unsigned(e.rhs, ut)})"
        if isinstance(e, Negate):
            return f"({ut})(-{self._unsigned(e.operand, ut)})"
        if isinstance(e, IntConst):
            if e.value < 0:
                return f"({ut})({e.value})"
            return f"({ut}){e.value}"
        if isinstance(e, (Variable, NamedConst)):
            return f"({ut}){_term_text(e)}"
        raise CodegenError(f"unsupported expression {e!r}")

    def _leaf(self, e: Expr, promote: ValueType) -> str:
        ct = _CTYPE[promote]
        if isinstance(e, Variable):
            vt = self.var_types.get(e.name)
            if promote is ValueType.INT:
                # byte and int variables compare correctly after the usual
                # promotions; io-set variables need the explicit truncation
                if e.name in self.set_vars:
                    return f"({ct}){e.name}"
                return e.name
            if vt is ValueType.UNSIGNED_LONG and e.name not in self.set_vars:
                return e.name
            return f"({ct}){e.name}"
        if isinstance(e, IntConst):
            return _const_text(e.value, promote if promote is ValueType.UNSIGNED_LONG else ValueType.INT)
        if isinstance(e, NamedConst):
            if promote is ValueType.UNSIGNED_LONG:
                return f"({ct}){e.name}"
            return e.name
        raise CodegenError(f"unsupported leaf {e!r}")

    def operand(self, e: Expr, promote: ValueType) -> str:
        if isinstance(e, (BinOp, Negate)):
            if promote is ValueType.UNSIGNED_LONG:
                return self._unsigned(e, "uint32_t")
            return "(int16_t)" + self._unsigned(e, "uint16_t")
        return self._leaf(e, promote)

    def condition(self, step: CompareStep) -> str:
        cmp = step.comparison
        lhs = self.operand(cmp.lhs, step.promote)
        rhs = self.operand(cmp.rhs, step.promote)
        return f"{lhs} {cmp.op} {rhs}"


# ---------------------------------------------------------------------------
# IO body splicing


def _splice_io(definition, read_values: dict[str, str], set_names: dict[str, str]) -> str:
    body = definition.body
    for param, target in set_names.items():
        body = re.sub(rf"(?<![#\w]){param}\b", target, body)
    for param, value in read_values.items():
        body = re.sub(rf"#{param}\b", value, body)
    return body.strip()


# ---------------------------------------------------------------------------
# Rule function emission


class _RuleEmitter:
    def __init__(self, plan: RulePlan, layout: CompileLayout, name: str):
        self.plan = plan
        self.layout = layout
        self.name = name
        self.lines: list[str] = []
        self.indent = 1
        set_vars = set()
        for step in plan.steps:
            if isinstance(step, IoStep):
                set_vars.update(var for _, var in step.set_bindings)
        self.cmp = _CompareEmitter(plan.var_types, set_vars)
        self._cursor_counts: dict[str, int] = {}
        self._cursor_names: set[str] = set()

    def out(self, text: str = "") -> None:
        self.lines.append(("  " * self.indent + text) if text else "")

    def emit(self) -> str:
        self.lines.append(f"static bool {self.name}(void) {{")
        self.out("bool inserted_facts = false;")
        self._steps(0)
        self.out("return inserted_facts;")
        self.lines.append("}")
        return "\n".join(self.lines)

    def _arg_text(self, term: Term, t: ValueType) -> str:
        if isinstance(term, IntConst):
            return _const_text(term.value, t)
        return _term_text(term)

    def _steps(self, i: int) -> None:
        if i == len(self.plan.steps):
            self._terminal()
            return
        step = self.plan.steps[i]
        if isinstance(step, ScanStep):
            self._scan(step, i)
        elif isinstance(step, NegationStep):
            self._negation(step, i)
        elif isinstance(step, CompareStep):
            self.out(f"if ({self.cmp.condition(step)}) {{")
            self.indent += 1
            self._steps(i + 1)
            self.indent -= 1
            self.out("}")
        else:
            self._io(step, i)

    def _scan(self, step: ScanStep, i: int) -> None:
        pred = step.literal.predicate
        decl = self.layout.declarations[pred]
        n = self._cursor_counts.get(pred, 0)
        while True:
            n += 1
            cursor = f"{pred}{n}"
            if cursor not in self._cursor_names:
                break
        self._cursor_counts[pred] = n
        self._cursor_names.add(cursor)
        finder = _finder_name(pred, step.pattern)
        args = [cursor] + [
            self._arg_text(term, decl.arg_types[pos]) for pos, term in step.bound_args
        ]
        self.out(f"uint8_t *{cursor} = curr_buff;")
        self.out(f"while (({cursor} = {finder}({', '.join(args)})) != 0) {{")
        self.indent += 1
        for pos, var in step.bind_args:
            ct = _CTYPE[decl.arg_types[pos]]
            self.out(f"{ct} {var} = {pred}_arg{pos + 1}({cursor});")
        closes = 0
        if step.check_args:
            cond = " && ".join(
                f"{pred}_arg{pos + 1}({cursor}) == {var}" for pos, var in step.check_args
            )
            self.out(f"if ({cond}) {{")
            self.indent += 1
            closes = 1
        self._steps(i + 1)
        for _ in range(closes):
            self.indent -= 1
            self.out("}")
        self.out(f"{cursor} += size_of_{pred};")
        self.indent -= 1
        self.out("}")

    def _negation(self, step: NegationStep, i: int) -> None:
        lit = step.literal
        decl = self.layout.declarations[lit.predicate]
        finder = _finder_name(lit.predicate, "b" * decl.arity)
        args = ["curr_buff"] + [
            self._arg_text(a, decl.arg_types[pos]) for pos, a in enumerate(lit.args)
        ]
        self.out(f"if ({finder}({', '.join(args)}) == 0) {{")
        self.indent += 1
        self._steps(i + 1)
        self.indent -= 1
        self.out("}")

    def _io(self, step: IoStep, i: int) -> None:
        reads = {param: _term_text(term) for param, term in step.read_values}
        sets = {param: var for param, var in step.set_bindings}
        for line in _splice_io(step.definition, reads, sets).splitlines():
            self.out(line.strip())
        for _, var in step.set_bindings:
            if var not in self.plan.consumed_vars:
                self.out(f"(void){var};")
        self._steps(i + 1)

    def _terminal(self) -> None:
        plan = self.plan
        if plan.io_action is not None:
            reads = {param: _term_text(term) for param, term in plan.io_action.read_values}
            for line in _splice_io(plan.io_action.definition, reads, {}).splitlines():
                self.out(line.strip())
            return
        head = plan.head
        decl = self.layout.declarations[head.predicate]
        target = "next_buff" if head.to_next else "curr_buff"
        values = [
            self._arg_text(a, decl.arg_types[pos]) for pos, a in enumerate(head.args)
        ]
        probe = _finder_name(head.predicate, "b" * decl.arity)
        probe_args = ", ".join([target] + values)
        self.out(f"if ({probe}({probe_args}) == 0) {{")
        self.indent += 1
        self.out(f"insert_{head.predicate}({probe_args});")
        self.out("inserted_facts = true;")
        self.indent -= 1
        self.out("}")


def emit_rule_function(plan: RulePlan, layout: CompileLayout, name: str) -> str:
    """Emit one rule as a parameterless function returning whether it
    inserted facts."""
    return _RuleEmitter(plan, layout, name).emit()


# ---------------------------------------------------------------------------
# Access function emission


def _used_types(layout: CompileLayout) -> list[ValueType]:
    used = []
    for t in (ValueType.BYTE, ValueType.INT, ValueType.UNSIGNED_LONG):
        if any(t in d.arg_types for d in layout.declarations.values()):
            used.append(t)
    return used


_VALUE_HELPERS = {
    ValueType.BYTE: """\
static inline void write_byte_val(uint8_t *pos, uint8_t v) {
  pos[0] = v;
}

static inline uint8_t read_byte_val(const uint8_t *pos) {
  return pos[0];
}""",
    ValueType.INT: """\
static inline void write_int_val(uint8_t *pos, int16_t v) {
  uint16_t bits = (uint16_t)v;
  if (v < 0) {
    bits = (uint16_t)(0x8000u | ((uint16_t)(0u - bits) & 0x7fffu));
  }
  pos[0] = (uint8_t)(bits >> 8);
  pos[1] = (uint8_t)bits;
}

static inline int16_t read_int_val(const uint8_t *pos) {
  uint16_t bits = (uint16_t)(((uint16_t)pos[0] << 8) | pos[1]);
  int16_t magnitude = (int16_t)(bits & 0x7fffu);
  return (bits & 0x8000u) ? (int16_t)-magnitude : magnitude;
}""",
    ValueType.UNSIGNED_LONG: """\
static inline void write_ulong_val(uint8_t *pos, uint32_t v) {
  pos[0] = (uint8_t)(v >> 24);
  pos[1] = (uint8_t)(v >> 16);
  pos[2] = (uint8_t)(v >> 8);
  pos[3] = (uint8_t)v;
}

static inline uint32_t read_ulong_val(const uint8_t *pos) {
  return ((uint32_t)pos[0] << 24) | ((uint32_t)pos[1] << 16) |
         ((uint32_t)pos[2] << 8) | (uint32_t)pos[3];
}""",
}

_RW_NAMES = {
    ValueType.BYTE: ("write_byte_val", "read_byte_val"),
    ValueType.INT: ("write_int_val", "read_int_val"),
    ValueType.UNSIGNED_LONG: ("write_ulong_val", "read_ulong_val"),
}


def emit_access_functions(layout: CompileLayout) -> str:
    """Buffer management, typed value access, and per-predicate insert,
    finder, and argument-reader functions."""
    parts: list[str] = []
    parts.append(
        """\
static void clear_buffer(uint8_t *buf) {
  size_t i;
  for (i = 0; i < BUFFER_SIZE; i++) {
    buf[i] = 0;
  }
}

static void switch_buffers(void) {
  uint8_t *tmp = curr_buff;
  curr_buff = next_buff;
  next_buff = tmp;
  clear_buffer(next_buff);
}"""
    )
    for t in _used_types(layout):
        parts.append(_VALUE_HELPERS[t])

    ordered = layout.names_by_number
    if ordered:
        parts.append(
            """\
static inline uint8_t *free_pos(uint8_t *buf) {
  uint8_t *pos = buf;
  while (*pos != 0) {
    pos += fact_size_of[*pos];
  }
  return pos;
}"""
        )
    for pred in ordered:
        decl = layout.declarations[pred]
        offsets = layout.arg_offsets(pred)
        params = [
            (f"a{i + 1}", _CTYPE[t], offsets[i], _RW_NAMES[t])
            for i, t in enumerate(decl.arg_types)
        ]
        sig = ", ".join(["uint8_t *buf"] + [f"{ct} {n}" for n, ct, _, _ in params])
        body = [f"static inline void insert_{pred}({sig}) {{"]
        body.append(f"  uint8_t *pos = free_pos(buf);")
        body.append(f"  if ((size_t)(pos - buf) + size_of_{pred} > BUFFER_SIZE) {{")
        body.append(f'    ded_fault("buffer overflow inserting {pred}");')
        body.append("    return;")
        body.append("  }")
        body.append(f"  pos[0] = num_of_{pred};")
        for n, _, off, (writer, _) in params:
            body.append(f"  {writer}(pos + {off}, {n});")
        body.append("}")
        parts.append("\n".join(body))

        for i, t in enumerate(decl.arg_types):
            _, reader = _RW_NAMES[t]
            parts.append(
                f"static inline {_CTYPE[t]} {pred}_arg{i + 1}(const uint8_t *pos) {{\n"
                f"  return {reader}(pos + {offsets[i]});\n"
                f"}}"
            )

        for pattern in sorted(layout.binding_patterns.get(pred, ())):
            bound = [
                (i, params[i]) for i, flag in enumerate(pattern) if flag == "b"
            ]
            sig = ", ".join(
                ["uint8_t *pos"] + [f"{ct} {n}" for _, (n, ct, _, _) in bound]
            )
            conds = [f"*pos == num_of_{pred}"]
            for _, (n, _, off, (_, reader)) in bound:
                conds.append(f"{reader}(pos + {off}) == {n}")
            cond = " && ".join(conds)
            parts.append(
                f"static inline uint8_t *{_finder_name(pred, pattern)}({sig}) {{\n"
                f"  while (*pos != 0) {{\n"
                f"    if ({cond}) {{\n"
                f"      return pos;\n"
                f"    }}\n"
                f"    pos += fact_size_of[*pos];\n"
                f"  }}\n"
                f"  return 0;\n"
                f"}}"
            )
    return "\n\n".join(parts)


# ---------------------------------------------------------------------------
# Identifier collision check


_FIXED_IDENTIFIERS = {
    "curr_buff",
    "next_buff",
    "buff_a",
    "buff_b",
    "fact_size_of",
    "free_pos",
    "clear_buffer",
    "switch_buffers",
    "ded_fault",
    "setup",
    "loop",
    "inserted_facts",
    "added_facts",
}


def _check_identifiers(layout: CompileLayout) -> None:
    seen: dict[str, str] = {}
    for pred in layout.names_by_number:
        decl = layout.declarations[pred]
        names = [f"insert_{pred}", f"size_of_{pred}", f"num_of_{pred}"]
        names += [f"{pred}_arg{i + 1}" for i in range(decl.arity)]
        names += [
            _finder_name(pred, pat) for pat in layout.binding_patterns.get(pred, ())
        ]
        for name in names:
            if name in _FIXED_IDENTIFIERS:
                raise CodegenError(
                    f"predicate {pred!r} clashes with generated identifier {name!r}"
                )
            if name in seen and seen[name] != pred:
                raise CodegenError(
                    f"predicates {seen[name]!r} and {pred!r} both generate identifier {name!r}"
                )
            seen[name] = pred


# ---------------------------------------------------------------------------
# Whole-program emission


_KIND_PREFIX = {
    RuleKind.DEDUCTIVE: "deductive_rule",
    RuleKind.OUTPUT: "output_rule",
    RuleKind.INDUCTIVE: "inductive_rule",
    RuleKind.INPUT: "input_rule",
}


def _rule_names(analysis: Analysis) -> dict[int, str]:
    counters = {kind: 0 for kind in _KIND_PREFIX}
    names: dict[int, str] = {}
    for rule in analysis.program.rules:
        plan = analysis.plans[rule.source_index]
        counters[plan.kind] += 1
        names[rule.source_index] = f"{_KIND_PREFIX[plan.kind]}_{counters[plan.kind]}"
    return names


def _emit_dump_function(analysis: Analysis) -> str:
    layout = analysis.layout
    lines = [
        "static unsigned long dump_step = 0;",
        "",
        "static int fact_compare(const void *a, const void *b) {",
        "  const uint8_t *fa = *(const uint8_t *const *)a;",
        "  const uint8_t *fb = *(const uint8_t *const *)b;",
        "  size_t na = fact_size_of[*fa];",
        "  size_t nb = fact_size_of[*fb];",
        "  return memcmp(fa, fb, na < nb ? na : nb);",
        "}",
        "",
        "static void dump_current_facts(void) {",
        "  const uint8_t *order[BUFFER_SIZE];",
        "  size_t count = 0;",
        "  size_t i;",
        "  const uint8_t *pos = curr_buff;",
        "  unsigned long step = dump_step++;",
        "  if (!shim_dump_enabled()) {",
        "    return;",
        "  }",
        "  while (*pos != 0) {",
        "    order[count++] = pos;",
        "    pos += fact_size_of[*pos];",
        "  }",
        "  qsort(order, count, sizeof(order[0]), fact_compare);",
        '  fprintf(stderr, "step %lu:", step);',
        "  for (i = 0; i < count; i++) {",
        "    const uint8_t *f = order[i];",
        '    const char *sep = (i == 0) ? " " : ", ";',
        "    switch (*f) {",
    ]
    for pred in layout.names_by_number:
        decl = layout.declarations[pred]
        lines.append(f"      case num_of_{pred}:")
        if decl.arity == 0:
            lines.append(f'        fprintf(stderr, "%s{pred}", sep);')
        else:
            fmts = []
            args = []
            for i, t in enumerate(decl.arg_types):
                fmt, cast = _PRINTF[t]
                fmts.append(fmt)
                args.append(f"({cast}){pred}_arg{i + 1}(f)")
            fmt_text = ",".join(fmts)
            lines.append(
                f'        fprintf(stderr, "%s{pred}({fmt_text})", sep, {", ".join(args)});'
            )
        lines.append("        break;")
    lines += [
        "      default:",
        "        break;",
        "    }",
        "  }",
        '  fprintf(stderr, "\\n");',
        "}",
    ]
    return "\n".join(lines)


def emit_program(analysis: Analysis, arduino_header: bool = True) -> EmittedUnit:
    """Emit the whole program as one C source file."""
    if not analysis.ok:
        raise CodegenError("cannot emit a program with analysis errors")
    layout = analysis.layout
    _check_identifiers(layout)
    names = _rule_names(analysis)
    ordered = layout.names_by_number

    sections: list[str] = []
    includes = ["#include <stdbool.h>", "#include <stddef.h>", "#include <stdint.h>"]
    if arduino_header:
        includes.insert(0, f"#include <{ARDUINO_HEADER}>")
    else:
        includes.insert(0, f'#include "{SHIM_HEADER}"')
        includes += ["#include <stdio.h>", "#include <stdlib.h>", "#include <string.h>"]
    sections.append("\n".join(includes))

    decls = [f"#define BUFFER_SIZE {layout.buffer_size}"]
    decls += [
        "",
        "static uint8_t buff_a[BUFFER_SIZE + 1];",
        "static uint8_t buff_b[BUFFER_SIZE + 1];",
        "static uint8_t *curr_buff = buff_a;",
        "static uint8_t *next_buff = buff_b;",
    ]
    if ordered:
        decls.append("")
        for pred in ordered:
            decls.append(f"#define num_of_{pred} {layout.number_of(pred)}")
        decls.append("")
        for pred in ordered:
            decls.append(f"#define size_of_{pred} {layout.fact_sizes[pred]}")
        sizes = ["0"] * (len(ordered) + 1)
        for pred in ordered:
            sizes[layout.number_of(pred)] = f"size_of_{pred}"
        decls.append("")
        decls.append(
            "static const uint8_t fact_size_of[] = {" + ", ".join(sizes) + "};"
        )
    sections.append("\n".join(decls))

    if arduino_header and ordered:
        sections.append(
            "static void ded_fault(const char *why) {\n"
            "  (void)why;\n"
            "  for (;;) {\n"
            "  }\n"
            "}"
        )

    sections.append(emit_access_functions(layout))

    if not arduino_header:
        sections.append(_emit_dump_function(analysis))

    for rule in analysis.program.rules:
        plan = analysis.plans[rule.source_index]
        sections.append(emit_rule_function(plan, layout, names[rule.source_index]))

    setup_lines = ["void setup(void) {", "  /* Buffer initialization */",
                   "  clear_buffer(curr_buff);", "  clear_buffer(next_buff);"]
    if analysis.program.facts:
        setup_lines.append("  /* Facts for timestamp 0 */")
        for fact in analysis.program.facts:
            decl = layout.declarations[fact.predicate]
            args = ["curr_buff"] + [
                _const_text(a.value, t) for a, t in zip(fact.args, decl.arg_types)
            ]
            setup_lines.append(f"  insert_{fact.predicate}({', '.join(args)});")
    setup_lines.append("}")
    sections.append("\n".join(setup_lines))

    loop_lines = ["void loop(void) {"]
    if analysis.strata:
        loop_lines.append("  bool added_facts;")
        for s, stratum_plans in enumerate(analysis.strata):
            label = "deductive phase" if len(analysis.strata) == 1 else f"deductive phase, stratum {s}"
            loop_lines.append(f"  do {{ /* {label} */")
            loop_lines.append("    added_facts = false;")
            for plan in stratum_plans:
                loop_lines.append(
                    f"    added_facts |= {names[plan.rule.source_index]}();"
                )
            loop_lines.append("  } while (added_facts);")
    if not arduino_header:
        loop_lines.append("  dump_current_facts();")
    for kind in (RuleKind.OUTPUT, RuleKind.INDUCTIVE, RuleKind.INPUT):
        for rule in analysis.program.rules:
            plan = analysis.plans[rule.source_index]
            if plan.kind is kind:
                loop_lines.append(f"  {names[rule.source_index]}();")
    loop_lines.append("  switch_buffers();")
    loop_lines.append("}")
    sections.append("\n".join(loop_lines))

    text = "\n\n".join(sections) + "\n"
    headers = (ARDUINO_HEADER,) if arduino_header else (SHIM_HEADER,)
    return EmittedUnit(text, ("setup", "loop"), headers)
