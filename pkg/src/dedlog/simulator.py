"""Reference interpreter.

Each loop iteration advances the virtual clock one tick, applies the
scripted pin events that have come due, and then runs the four phases:

1. deduction  - stratified naive fixpoint of the deductive rules over the
   current state, duplicates suppressed on insert;
2. output     - output rules in program order, the IO action executed once
   per ground substitution of the body over the minimal model;
3. induction  - every inductive rule evaluated once, heads inserted into
   the next state;
4. input      - input rules in program order; per substitution of the
   non-IO prefix the IO action runs, binds its set parameters, and the
   head lands in the next state if the guards hold.

Finally the buffers switch.  Evaluation order inside a rule is a nested
loop join in body order, scanning buffers in fact order, which keeps the
interpreter's behavior byte-identical to the compiled code.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analyzer import (
    Analysis,
    CompareStep,
    NegationStep,
    RulePlan,
    RuleKind,
    ScanStep,
)
from .ast import (
    BinOp,
    Expr,
    IntConst,
    Negate,
    Term,
    ValueType,
    Variable,
)
from .board import (
    EventLog,
    FaultEvent,
    INPUT,
    OUTPUT,
    StepMarker,
    TraceScript,
    VirtualBoard,
)
from .factstore import EncodeError, FactStore, StoreFault

DEFAULT_MAX_STEPS = 100_000


class SimFault(Exception):
    pass


@dataclass
class StepReport:
    derived_facts: int
    events: int


# -- promoted arithmetic ----------------------------------------------------


def _wrap(v: int, promote: ValueType) -> int:
    if promote is ValueType.UNSIGNED_LONG:
        return v & 0xFFFFFFFF
    return ((v + 0x8000) & 0xFFFF) - 0x8000


def _to_domain(v: int, promote: ValueType) -> int:
    if promote is ValueType.UNSIGNED_LONG:
        return v & 0xFFFFFFFF
    return v  # values of byte/int variables already fit the signed 16-bit domain


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


class Simulator:
    def __init__(
        self,
        analysis: Analysis,
        trace: TraceScript | None = None,
        io_bindings: dict | None = None,
        constants: dict[str, int] | None = None,
    ):
        if not analysis.ok:
            raise ValueError("cannot simulate a program with analysis errors")
        self.analysis = analysis
        self.store = FactStore(analysis.layout)
        self.log = EventLog()
        self.board = VirtualBoard(trace, self.log, constants)
        self.io_bindings = io_bindings or {}
        self.step_index = 0
        self.halted = False
        self.dumps: list[str] = []
        self._plans = [
            analysis.plans[r.source_index] for r in analysis.program.rules
        ]
        try:
            for fact in analysis.program.facts:
                self.store.insert_fact(
                    self.store.current_buffer,
                    fact.predicate,
                    tuple(a.value for a in fact.args),
                )
        except StoreFault as e:
            self.log.append(FaultEvent(self.board.clock_ms, e.log_text))
            self.halted = True

    # -- term/expression evaluation --------------------------------------

    def _resolve(self, term: Term, env: dict[str, int]) -> int:
        if isinstance(term, Variable):
            return env[term.name]
        if isinstance(term, IntConst):
            return term.value
        value = self.board.constants.get(term.name)
        if value is None:
            raise SimFault(f"unknown constant #{term.name}")
        return value

    def _eval_expr(self, e: Expr, env: dict[str, int], promote: ValueType) -> int:
        if isinstance(e, BinOp):
            a = self._eval_expr(e.lhs, env, promote)
            b = self._eval_expr(e.rhs, env, promote)
            if e.op == "+":
                return _wrap(a + b, promote)
            if e.op == "-":
                return _wrap(a - b, promote)
            return _wrap(a * b, promote)
        if isinstance(e, Negate):
            return _wrap(-self._eval_expr(e.operand, env, promote), promote)
        return _to_domain(self._resolve(e, env), promote)

    def _eval_compare(self, step: CompareStep, env: dict[str, int]) -> bool:
        a = self._eval_expr(step.comparison.lhs, env, step.promote)
        b = self._eval_expr(step.comparison.rhs, env, step.promote)
        return _CMP[step.comparison.op](a, b)

    # -- IO actions -------------------------------------------------------

    def _run_io(self, definition, read_values, env) -> list[int]:
        """Execute an IO definition; returns the values of its set params."""
        name = definition.name
        reads = [self._resolve(term, env) for _, term in read_values]
        board = self.board
        if name == "pinIn":
            board.pin_mode(reads[0], INPUT)
            return []
        if name == "pinOut":
            board.pin_mode(reads[0], OUTPUT)
            return []
        if name == "digitalWrite":
            board.digital_write(reads[0], reads[1])
            return []
        if name == "digitalRead":
            return [board.digital_read(reads[0])]
        if name == "millis":
            return [board.millis()]
        binding = self.io_bindings.get(name)
        if binding is None:
            raise SimFault(f"no simulation binding for IO predicate #{name}")
        result = binding(board, reads)
        result = list(result) if result is not None else []
        expected = len(definition.set_params())
        if len(result) != expected:
            raise SimFault(
                f"binding for #{name} returned {len(result)} value(s), expected {expected}"
            )
        return result

    # -- rule evaluation ---------------------------------------------------

    def _eval_rule(self, plan: RulePlan) -> int:
        """Run one rule to completion; returns the number of facts inserted."""
        store = self.store
        current = store.current_buffer
        inserted = 0
        env: dict[str, int] = {}

        def terminal() -> None:
            nonlocal inserted
            if plan.io_action is not None:
                self._run_io(plan.io_action.definition, plan.io_action.read_values, env)
                return
            head = plan.head
            target = store.next_buffer if head.to_next else current
            args = tuple(self._resolve(a, env) for a in head.args)
            try:
                if store.insert_fact(target, head.predicate, args):
                    inserted += 1
            except EncodeError as e:
                raise SimFault(str(e)) from None

        def walk(i: int) -> None:
            if i == len(plan.steps):
                terminal()
                return
            step = plan.steps[i]
            if isinstance(step, ScanStep):
                bound_values = tuple(
                    self._resolve(term, env) for _, term in step.bound_args
                )
                offset = 0
                size = store.layout.fact_sizes[step.literal.predicate]
                while True:
                    try:
                        found = store.find_fact(
                            current, step.literal.predicate, step.pattern,
                            bound_values, offset,
                        )
                    except EncodeError as e:
                        raise SimFault(str(e)) from None
                    if found is None:
                        return
                    ok = True
                    for pos, name in step.bind_args:
                        env[name] = store.read_arg(current, found, pos)
                    for pos, name in step.check_args:
                        if store.read_arg(current, found, pos) != env[name]:
                            ok = False
                            break
                    if ok:
                        walk(i + 1)
                    offset = found + size
            elif isinstance(step, NegationStep):
                lit = step.literal
                values = tuple(self._resolve(a, env) for a in lit.args)
                pattern = "b" * len(lit.args)
                try:
                    found = store.find_fact(current, lit.predicate, pattern, values)
                except EncodeError as e:
                    raise SimFault(str(e)) from None
                if found is None:
                    walk(i + 1)
            elif isinstance(step, CompareStep):
                if self._eval_compare(step, env):
                    walk(i + 1)
            else:  # IoStep
                values = self._run_io(step.definition, step.read_values, env)
                for (param, var), value in zip(step.set_bindings, values):
                    env[var] = value
                walk(i + 1)

        walk(0)
        # variables bound along abandoned branches are simply overwritten on
        # the next binding; no cleanup needed because lookups happen only on
        # fully-bound paths
        return inserted

    # -- phases ------------------------------------------------------------

    def run_deduction_phase(self) -> int:
        total = 0
        for stratum_plans in self.analysis.strata:
            while True:
                added = 0
                for plan in stratum_plans:
                    added += self._eval_rule(plan)
                total += added
                if not added:
                    break
        return total

    def run_output_phase(self) -> None:
        for plan in self._plans:
            if plan.kind is RuleKind.OUTPUT:
                self._eval_rule(plan)

    def run_induction_phase(self) -> int:
        total = 0
        for plan in self._plans:
            if plan.kind is RuleKind.INDUCTIVE:
                total += self._eval_rule(plan)
        return total

    def run_input_phase(self) -> int:
        total = 0
        for plan in self._plans:
            if plan.kind is RuleKind.INPUT:
                total += self._eval_rule(plan)
        return total

    # -- stepping ------------------------------------------------------------

    def step(self) -> StepReport:
        if self.halted:
            raise RuntimeError("simulation already halted")
        events_before = len(self.log)
        self.board.advance_clock()
        self.log.append(StepMarker(self.step_index, self.board.clock_ms))
        derived = 0
        try:
            derived += self.run_deduction_phase()
            self.dumps.append(self.store.dump_line(self.step_index))
            self.run_output_phase()
            derived += self.run_induction_phase()
            derived += self.run_input_phase()
        except (StoreFault, SimFault) as e:
            text = getattr(e, "log_text", None) or str(e)
            self.log.append(FaultEvent(self.board.clock_ms, text))
            self.halted = True
        else:
            self.store.switch_buffers()
            self.step_index += 1
        return StepReport(derived, len(self.log) - events_before)

    def run(self, max_steps: int | None = None) -> EventLog:
        limit = DEFAULT_MAX_STEPS if max_steps is None else max_steps
        steps = 0
        while not self.halted and steps < limit:
            self.step()
            steps += 1
            end = self.board.end_ms
            if end is not None and self.board.total_ms >= end:
                break
        return self.log


def run_trace(
    analysis: Analysis,
    trace: TraceScript | None = None,
    max_steps: int | None = None,
    io_bindings: dict | None = None,
) -> Simulator:
    """Run a program against a trace; returns the finished Simulator (log,
    fact dumps, and final state are all inspectable on it)."""
    sim = Simulator(analysis, trace, io_bindings)
    sim.run(max_steps)
    return sim
