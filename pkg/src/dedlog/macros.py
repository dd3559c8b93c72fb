"""Macro expansion: rewrites `[setup]` and `[delay:X]` rule prefixes.

`[setup]head.` becomes `head :- setup.` (the setup literal is appended to
any existing body) plus a shared `setup@0.` fact and `.decl setup`.

`[delay:X]head(Args) :- body.` becomes the delayed-derivation rule group:
the body derives `delayed_head(Args, Curr)` stamped with the current time,
a release rule fires the head once `Await+X <= Curr`, and a carrier rule
transports the pending entry into the next state until then.  The `now`
clock machinery (`now(0)@0.`, `.decl now(unsigned long)`, and
`now(T)@next :- #millis(T).`) is emitted once per program.

Expansion preserves the relative order of user rules and is the identity
on macro-free programs.
"""

from __future__ import annotations

from dataclasses import replace

from .ast import (
    BinOp,
    Comparison,
    Declaration,
    Fact,
    IntConst,
    Literal,
    Program,
    Rule,
    ValueType,
    Variable,
)
from .diagnostics import SourceDiagnostic, error, warning

_MACROS = ("setup", "delay")


def _fresh_name(base: str, used: set[str]) -> str:
    if base not in used:
        return base
    i = 2
    while f"{base}{i}" in used:
        i += 1
    return f"{base}{i}"


def _rule_variables(rule: Rule) -> set[str]:
    names: set[str] = set()

    def walk_expr(e) -> None:
        if isinstance(e, Variable):
            names.add(e.name)
        elif isinstance(e, BinOp):
            walk_expr(e.lhs)
            walk_expr(e.rhs)
        elif hasattr(e, "operand"):
            walk_expr(e.operand)

    for lit in [rule.head, *rule.body]:
        if isinstance(lit, Literal):
            for a in lit.args:
                walk_expr(a)
        else:
            walk_expr(lit.lhs)
            walk_expr(lit.rhs)
    return names


class _Expander:
    def __init__(self, program: Program):
        self.program = program
        self.decls = list(program.declarations)
        self.facts = list(program.facts)
        self.new_rules: list[Rule] = []
        self.diags: list[SourceDiagnostic] = []
        self.setup_done = False
        self.now_done = False

    def decl_for(self, name: str) -> Declaration | None:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    # -- shared machinery --------------------------------------------------

    def ensure_setup(self, rule: Rule) -> bool:
        existing = self.decl_for("setup")
        if existing is not None and existing.arity != 0:
            self.diags.append(
                error(rule.line, rule.col, "'setup' is already declared with arguments")
            )
            return False
        if self.setup_done:
            return True
        if existing is None:
            self.decls.append(Declaration("setup"))
        if not any(f.predicate == "setup" and not f.args for f in self.facts):
            self.facts.append(Fact("setup"))
        self.setup_done = True
        return True

    def ensure_now(self, rule: Rule) -> bool:
        existing = self.decl_for("now")
        if existing is not None and existing.arg_types != (ValueType.UNSIGNED_LONG,):
            self.diags.append(
                error(rule.line, rule.col, "'now' is already declared with an incompatible type")
            )
            return False
        if self.now_done:
            return True
        if existing is None:
            self.decls.append(Declaration("now", (ValueType.UNSIGNED_LONG,)))
        if not any(f.predicate == "now" for f in self.facts):
            self.facts.append(Fact("now", (IntConst(0),)))
        now_rule = Rule(
            head=Literal("now", (Variable("T"),)),
            body=(Literal("millis", (Variable("T"),), is_io=True),),
            head_next=True,
            line=rule.line,
            col=rule.col,
        )
        if any(u == now_rule for u in self.program.rules):
            self.diags.append(
                warning(
                    rule.line,
                    rule.col,
                    "program already reads #millis into 'now'; the delay macro adds its own copy",
                )
            )
        self.new_rules.append(now_rule)
        self.now_done = True
        return True

    # -- per-rule rewrites ---------------------------------------------------

    def expand_setup(self, rule: Rule) -> None:
        if not self.ensure_setup(rule):
            return
        self.new_rules.append(
            replace(rule, macro=None, body=rule.body + (Literal("setup"),))
        )

    def expand_delay(self, rule: Rule) -> None:
        delay = rule.macro.arg
        if delay is None or delay <= 0:
            self.diags.append(
                error(rule.line, rule.col, "delay macro requires a positive integer argument")
            )
            return
        if rule.head_next:
            self.diags.append(
                error(rule.line, rule.col, "a delay macro cannot be combined with '@next'")
            )
            return
        if rule.head.is_io:
            self.diags.append(
                error(rule.line, rule.col, "a delay macro requires a regular predicate head")
            )
            return
        head_decl = self.decl_for(rule.head.predicate)
        if head_decl is None:
            self.diags.append(
                error(rule.line, rule.col, f"cannot delay undeclared predicate {rule.head.predicate!r}")
            )
            return
        if not self.ensure_now(rule):
            return

        delayed_name = "delayed_" + rule.head.predicate
        delayed_types = head_decl.arg_types + (ValueType.UNSIGNED_LONG,)
        existing = self.decl_for(delayed_name)
        if existing is None:
            self.decls.append(Declaration(delayed_name, delayed_types))
        elif existing.arg_types != delayed_types:
            self.diags.append(
                error(
                    rule.line,
                    rule.col,
                    f"{delayed_name!r} is already declared with an incompatible type",
                )
            )
            return

        used = _rule_variables(rule)
        curr = Variable(_fresh_name("Curr", used))
        await_ = Variable(_fresh_name("Await", used))
        now_curr = Literal("now", (curr,))
        args = rule.head.args
        pend = Literal(delayed_name, args + (curr,))
        pend_await = Literal(delayed_name, args + (await_,))
        wait_expr = BinOp("+", await_, IntConst(delay))
        mk = lambda **kw: Rule(line=rule.line, col=rule.col, **kw)
        self.new_rules.append(
            mk(head=pend, body=rule.body + (now_curr,))
        )
        self.new_rules.append(
            mk(
                head=rule.head,
                body=(pend_await, now_curr, Comparison(wait_expr, "<=", curr)),
            )
        )
        self.new_rules.append(
            mk(
                head=pend_await,
                head_next=True,
                body=(pend_await, now_curr, Comparison(wait_expr, ">", curr)),
            )
        )

    # -- driver ----------------------------------------------------------

    def run(self) -> tuple[Program, list[SourceDiagnostic]]:
        for rule in self.program.rules:
            if rule.macro is None:
                self.new_rules.append(rule)
            elif rule.macro.name == "setup":
                self.expand_setup(rule)
            elif rule.macro.name == "delay":
                self.expand_delay(rule)
            else:
                self.diags.append(
                    error(rule.line, rule.col, f"unknown macro [{rule.macro.name}]")
                )
        rules = tuple(
            replace(r, source_index=i) for i, r in enumerate(self.new_rules)
        )
        program = Program(
            declarations=tuple(self.decls),
            io_definitions=self.program.io_definitions,
            facts=tuple(self.facts),
            rules=rules,
        )
        return program, self.diags


def expand_macros(program: Program) -> tuple[Program, list[SourceDiagnostic]]:
    """Rewrite all macro-prefixed rules; returns the program and diagnostics."""
    if not any(r.macro for r in program.rules):
        return program, []
    return _Expander(program).run()
