"""Static analysis: rule classification, safety, stratification, IO binding
analysis, and the compile layout.

The analyzer lowers every rule to an execution plan shared by the simulator
and the C emitter: an ordered list of join steps (scans, negation probes,
comparisons, one optional IO step) plus a head action.  All binding
patterns any consumer will ever need are registered here, so nothing is
discovered at emit or run time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .ast import (
    BinOp,
    Comparison,
    Declaration,
    Expr,
    Fact,
    IntConst,
    IoDefinition,
    Literal,
    NamedConst,
    Negate,
    ParamMode,
    Program,
    Rule,
    RuleKind,
    Term,
    ValueType,
    Variable,
    fact_size,
    format_fact,
    value_range,
)
from .diagnostics import SourceDiagnostic, error, has_errors, warning
from .stdlib import STANDARD_IO, STANDARD_SET_TYPES

MAX_PREDICATES = 255
DEFAULT_BUFFER_SIZE = 400

INT16_MIN, INT16_MAX = -32768, 32767


class AnalysisError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# ---------------------------------------------------------------------------
# Compile layout


@dataclass
class CompileLayout:
    predicate_numbers: dict[str, int]
    fact_sizes: dict[str, int]
    binding_patterns: dict[str, set[str]]
    buffer_size: int
    declarations: dict[str, Declaration]

    def number_of(self, name: str) -> int:
        return self.predicate_numbers[name]

    @property
    def names_by_number(self) -> list[str]:
        by_num = sorted(self.predicate_numbers.items(), key=lambda kv: kv[1])
        return [name for name, _ in by_num]

    def size_by_number(self) -> dict[int, int]:
        return {n: self.fact_sizes[name] for name, n in self.predicate_numbers.items()}

    def arg_offsets(self, name: str) -> list[int]:
        from .ast import value_width

        offsets = []
        pos = 1
        for t in self.declarations[name].arg_types:
            offsets.append(pos)
            pos += value_width(t)
        return offsets


def number_predicates(declarations: tuple[Declaration, ...]) -> dict[str, int]:
    """Assign predicate numbers 1..255 in declaration order."""
    if len(declarations) > MAX_PREDICATES:
        raise AnalysisError(
            f"too many predicates: {len(declarations)} declared, at most {MAX_PREDICATES} supported"
        )
    return {d.name: i + 1 for i, d in enumerate(declarations)}


# ---------------------------------------------------------------------------
# Rule classification


def classify_rule(rule: Rule) -> RuleKind:
    """Assign the unique kind of a macro-expanded rule or raise AnalysisError."""
    for elem in rule.body:
        if isinstance(elem, Literal) and elem.is_io and elem.negated:
            raise AnalysisError(f"IO literal #{elem.predicate} cannot be negated")
    body_io = [
        i
        for i, e in enumerate(rule.body)
        if isinstance(e, Literal) and e.is_io
    ]
    io_count = len(body_io) + (1 if rule.head.is_io else 0)
    if io_count > 1:
        raise AnalysisError("a rule may use at most one IO literal in head or body")
    if rule.head.is_io:
        if rule.head_next:
            raise AnalysisError("an IO head cannot be combined with '@next'")
        return RuleKind.OUTPUT
    if body_io:
        if not rule.head_next:
            raise AnalysisError(
                f"IO literal #{rule.body[body_io[0]].predicate} is not allowed in the body of a"
                " deductive rule (the head needs '@next')"
            )
        idx = body_io[0]
        for later in rule.body[idx + 1 :]:
            if isinstance(later, Literal):
                raise AnalysisError("the IO literal must be the last subgoal of the rule")
        return RuleKind.INPUT
    return RuleKind.INDUCTIVE if rule.head_next else RuleKind.DEDUCTIVE


# ---------------------------------------------------------------------------
# Execution plans


@dataclass(frozen=True)
class ScanStep:
    """Nested-loop scan over one positive literal in the current state."""

    literal: Literal
    pattern: str
    bound_args: tuple[tuple[int, Term], ...]
    bind_args: tuple[tuple[int, str], ...]
    check_args: tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class NegationStep:
    """All-bound absence probe for a negated literal."""

    literal: Literal


@dataclass(frozen=True)
class CompareStep:
    comparison: Comparison
    promote: ValueType  # INT: 16-bit signed wrap; UNSIGNED_LONG: 32-bit unsigned wrap


@dataclass(frozen=True)
class IoStep:
    """Execute an IO action: feed it bound values, bind its set parameters."""

    literal: Literal
    definition: IoDefinition
    read_values: tuple[tuple[str, Term], ...]
    set_bindings: tuple[tuple[str, str], ...]


PlanStep = ScanStep | NegationStep | CompareStep | IoStep


@dataclass(frozen=True)
class HeadPlan:
    predicate: str
    args: tuple[Term, ...]
    to_next: bool


@dataclass(frozen=True)
class IoAction:
    """Output-rule head: run the definition once per ground substitution."""

    literal: Literal
    definition: IoDefinition
    read_values: tuple[tuple[str, Term], ...]


@dataclass
class RulePlan:
    rule: Rule
    kind: RuleKind
    steps: tuple[PlanStep, ...]
    head: HeadPlan | None
    io_action: IoAction | None
    var_types: dict[str, ValueType]
    consumed_vars: frozenset[str] = frozenset()
    stratum: int = 0


# ---------------------------------------------------------------------------
# Comparison typing.  Operands are promoted to the widest participating
# type; anything involving an unsigned long (or a constant outside the
# 16-bit range) is evaluated as unsigned 32-bit, everything else as signed
# 16-bit, matching C integer promotion on a 16-bit-int target.


def _expr_vars(e: Expr) -> list[str]:
    if isinstance(e, Variable):
        return [e.name]
    if isinstance(e, BinOp):
        return _expr_vars(e.lhs) + _expr_vars(e.rhs)
    if isinstance(e, Negate):
        return _expr_vars(e.operand)
    return []


def _expr_consts(e: Expr) -> list[int]:
    if isinstance(e, IntConst):
        return [e.value]
    if isinstance(e, BinOp):
        return _expr_consts(e.lhs) + _expr_consts(e.rhs)
    if isinstance(e, Negate):
        return _expr_consts(e.operand)
    return []


def _rule_variable_names(rule: Rule) -> set[str]:
    names: set[str] = set()
    for elem in (rule.head, *rule.body):
        if isinstance(elem, Literal):
            names.update(a.name for a in elem.args if isinstance(a, Variable))
        else:
            names.update(_expr_vars(elem.lhs))
            names.update(_expr_vars(elem.rhs))
    return names


def promote_comparison(cmp: Comparison, var_types: dict[str, ValueType]) -> ValueType:
    for name in _expr_vars(cmp.lhs) + _expr_vars(cmp.rhs):
        if var_types.get(name) is ValueType.UNSIGNED_LONG:
            return ValueType.UNSIGNED_LONG
    for v in _expr_consts(cmp.lhs) + _expr_consts(cmp.rhs):
        if not (INT16_MIN <= v <= INT16_MAX):
            return ValueType.UNSIGNED_LONG
    return ValueType.INT


# ---------------------------------------------------------------------------
# Per-rule plan construction: safety checks, type checks, IO binding
# analysis, and binding-pattern collection happen in one ordered walk.


class _PlanBuilder:
    def __init__(
        self,
        decls: dict[str, Declaration],
        io_defs: dict[str, IoDefinition],
        patterns: dict[str, set[str]],
    ):
        self.decls = decls
        self.io_defs = io_defs
        self.patterns = patterns

    def build(self, rule: Rule) -> RulePlan:
        kind = classify_rule(rule)
        rule = rule.with_kind(kind)
        bound: dict[str, ValueType] = {}
        steps: list[PlanStep] = []

        for elem in rule.body:
            if isinstance(elem, Comparison):
                steps.append(self._compare(elem, bound))
            elif elem.is_io:
                io_step, guards = self._io_literal(rule, elem, bound)
                steps.append(io_step)
                steps.extend(guards)
            elif elem.negated:
                steps.append(self._negation(elem, bound))
            else:
                steps.append(self._scan(elem, bound))

        head: HeadPlan | None = None
        io_action: IoAction | None = None
        if kind is RuleKind.OUTPUT:
            io_action = self._output_head(rule.head, bound)
        else:
            head = self._head(rule, bound)
        consumed = _consumed_variables(steps, head, io_action)
        steps = [
            replace(s, bind_args=tuple(b for b in s.bind_args if b[1] in consumed))
            if isinstance(s, ScanStep)
            else s
            for s in steps
        ]
        return RulePlan(
            rule=rule,
            kind=kind,
            steps=tuple(steps),
            head=head,
            io_action=io_action,
            var_types=bound,
            consumed_vars=consumed,
        )

    # -- helpers ---------------------------------------------------------

    def _decl(self, lit: Literal) -> Declaration:
        decl = self.decls.get(lit.predicate)
        if decl is None:
            raise AnalysisError(f"undeclared predicate {lit.predicate!r}")
        if len(lit.args) != decl.arity:
            raise AnalysisError(
                f"{lit.predicate!r} takes {decl.arity} argument(s), got {len(lit.args)}"
            )
        return decl

    def _check_const(self, value: int, t: ValueType, pred: str) -> None:
        lo, hi = value_range(t)
        if not (lo <= value <= hi):
            raise AnalysisError(
                f"constant {value} is out of range for {t} argument of {pred!r}"
            )

    def _register(self, pred: str, pattern: str) -> None:
        self.patterns.setdefault(pred, set()).add(pattern)

    def _scan(self, lit: Literal, bound: dict[str, ValueType]) -> ScanStep:
        decl = self._decl(lit)
        pattern = []
        bound_args: list[tuple[int, Term]] = []
        bind_args: list[tuple[int, str]] = []
        check_args: list[tuple[int, str]] = []
        local: set[str] = set()
        for i, arg in enumerate(lit.args):
            t = decl.arg_types[i]
            if isinstance(arg, IntConst):
                self._check_const(arg.value, t, lit.predicate)
                pattern.append("b")
                bound_args.append((i, arg))
            elif isinstance(arg, NamedConst):
                pattern.append("b")
                bound_args.append((i, arg))
            else:
                name = arg.name
                if name in local:
                    # repeated within this literal: the value is only known
                    # once the fact is read, so match it after the scan
                    self._check_var_type(name, bound[name], t, lit.predicate)
                    pattern.append("f")
                    check_args.append((i, name))
                elif name in bound:
                    self._check_var_type(name, bound[name], t, lit.predicate)
                    pattern.append("b")
                    bound_args.append((i, arg))
                else:
                    local.add(name)
                    bound[name] = t
                    pattern.append("f")
                    bind_args.append((i, name))
        pat = "".join(pattern)
        self._register(lit.predicate, pat)
        return ScanStep(lit, pat, tuple(bound_args), tuple(bind_args), tuple(check_args))

    def _check_var_type(self, name: str, have: ValueType, want: ValueType, pred: str) -> None:
        if have is not want:
            raise AnalysisError(
                f"variable {name!r} has type {have} but {pred!r} expects {want}"
            )

    def _negation(self, lit: Literal, bound: dict[str, ValueType]) -> NegationStep:
        decl = self._decl(lit)
        for i, arg in enumerate(lit.args):
            t = decl.arg_types[i]
            if isinstance(arg, IntConst):
                self._check_const(arg.value, t, lit.predicate)
            elif isinstance(arg, Variable):
                if arg.name not in bound:
                    raise AnalysisError(
                        f"variable {arg.name!r} in negated literal !{lit.predicate} is not bound"
                        " by an earlier positive literal"
                    )
                self._check_var_type(arg.name, bound[arg.name], t, lit.predicate)
        self._register(lit.predicate, "b" * decl.arity)
        return NegationStep(lit)

    def _compare(self, cmp: Comparison, bound: dict[str, ValueType]) -> CompareStep:
        for name in _expr_vars(cmp.lhs) + _expr_vars(cmp.rhs):
            if name not in bound:
                raise AnalysisError(
                    f"variable {name!r} in comparison is not bound by an earlier literal"
                )
        return CompareStep(cmp, promote_comparison(cmp, bound))

    def _set_param_type(
        self, io_name: str, param: str, var: str | None, rule: Rule
    ) -> ValueType:
        t = STANDARD_SET_TYPES.get((io_name, param))
        if t is not None:
            return t
        if var is not None and not rule.head.is_io:
            decl = self.decls.get(rule.head.predicate)
            if decl is not None:
                for i, a in enumerate(rule.head.args):
                    if isinstance(a, Variable) and a.name == var and i < decl.arity:
                        return decl.arg_types[i]
        return ValueType.INT

    def _io_literal(
        self, rule: Rule, lit: Literal, bound: dict[str, ValueType]
    ) -> tuple[IoStep, list[CompareStep]]:
        definition = self.io_defs.get(lit.predicate)
        if definition is None:
            raise AnalysisError(f"unknown IO predicate #{lit.predicate}")
        if len(lit.args) != definition.arity:
            raise AnalysisError(
                f"#{lit.predicate} takes {definition.arity} argument(s), got {len(lit.args)}"
            )
        # fresh names must avoid every variable in the rule, bound or not,
        # so user variables can never capture a generated one
        used_names = set(bound) | _rule_variable_names(rule)
        read_values: list[tuple[str, Term]] = []
        set_bindings: list[tuple[str, str]] = []
        guards: list[CompareStep] = []
        new_args: list[Term] = list(lit.args)
        fresh_counter = 0

        def fresh() -> str:
            nonlocal fresh_counter
            while True:
                candidate = "V" if fresh_counter == 0 else f"V{fresh_counter}"
                fresh_counter += 1
                if candidate not in used_names:
                    used_names.add(candidate)
                    return candidate

        for i, param in enumerate(definition.params):
            arg = lit.args[i]
            if param.mode is ParamMode.READ:
                if isinstance(arg, Variable) and arg.name not in bound:
                    raise AnalysisError(
                        f"read parameter {param.name!r} of #{lit.predicate} requires a bound"
                        f" argument, but {arg.name!r} is unbound"
                    )
                read_values.append((param.name, arg))
            else:
                if isinstance(arg, Variable) and arg.name not in bound:
                    t = self._set_param_type(lit.predicate, param.name, arg.name, rule)
                    bound[arg.name] = t
                    set_bindings.append((param.name, arg.name))
                else:
                    # Bound-or-constant argument of a set parameter: read into a
                    # fresh variable and compare afterwards.
                    name = fresh()
                    t = self._set_param_type(lit.predicate, param.name, None, rule)
                    bound[name] = t
                    set_bindings.append((param.name, name))
                    new_args[i] = Variable(name)
                    guard = Comparison(Variable(name), "==", arg)
                    guards.append(CompareStep(guard, promote_comparison(guard, bound)))
        rewritten = replace(lit, args=tuple(new_args))
        return IoStep(rewritten, definition, tuple(read_values), tuple(set_bindings)), guards

    def _output_head(self, head: Literal, bound: dict[str, ValueType]) -> IoAction:
        definition = self.io_defs.get(head.predicate)
        if definition is None:
            raise AnalysisError(f"unknown IO predicate #{head.predicate}")
        if len(head.args) != definition.arity:
            raise AnalysisError(
                f"#{head.predicate} takes {definition.arity} argument(s), got {len(head.args)}"
            )
        read_values: list[tuple[str, Term]] = []
        for i, param in enumerate(definition.params):
            arg = head.args[i]
            if param.mode is ParamMode.SET:
                raise AnalysisError(
                    f"parameter {param.name!r} of #{head.predicate} is set by its definition"
                    " and cannot appear in a rule head"
                )
            if isinstance(arg, Variable) and arg.name not in bound:
                raise AnalysisError(
                    f"variable {arg.name!r} in IO head #{head.predicate} is not bound by the body"
                )
            read_values.append((param.name, arg))
        return IoAction(head, definition, tuple(read_values))

    def _head(self, rule: Rule, bound: dict[str, ValueType]) -> HeadPlan:
        decl = self._decl(rule.head)
        for i, arg in enumerate(rule.head.args):
            t = decl.arg_types[i]
            if isinstance(arg, IntConst):
                self._check_const(arg.value, t, rule.head.predicate)
            elif isinstance(arg, Variable):
                if arg.name not in bound:
                    raise AnalysisError(
                        f"head variable {arg.name!r} is not bound by a positive body literal"
                        " or an IO set parameter"
                    )
                self._check_var_type(arg.name, bound[arg.name], t, rule.head.predicate)
        to_next = rule.kind in (RuleKind.INDUCTIVE, RuleKind.INPUT)
        self._register(rule.head.predicate, "b" * decl.arity)
        return HeadPlan(rule.head.predicate, rule.head.args, to_next)


# ---------------------------------------------------------------------------
# Safety as a standalone check (plan construction performs it; this wrapper
# reports diagnostics without building anything else).


def _consumed_variables(
    steps: list[PlanStep], head: HeadPlan | None, io_action: IoAction | None
) -> frozenset[str]:
    """Variables whose bound value is actually read somewhere: by a later
    scan or probe, a comparison, an IO read, a within-literal repeat check,
    or the head.  Anything else is existential and its read is skipped."""
    used: set[str] = set()

    def add_term(term: Term) -> None:
        if isinstance(term, Variable):
            used.add(term.name)

    for step in steps:
        if isinstance(step, ScanStep):
            for _, term in step.bound_args:
                add_term(term)
            used.update(name for _, name in step.check_args)
        elif isinstance(step, NegationStep):
            for term in step.literal.args:
                add_term(term)
        elif isinstance(step, CompareStep):
            used.update(_expr_vars(step.comparison.lhs))
            used.update(_expr_vars(step.comparison.rhs))
        else:
            for _, term in step.read_values:
                add_term(term)
    if head is not None:
        for term in head.args:
            add_term(term)
    if io_action is not None:
        for _, term in io_action.read_values:
            add_term(term)
    return frozenset(used)


def check_safety(
    rule: Rule,
    declarations: dict[str, Declaration],
    io_definitions: dict[str, IoDefinition] | None = None,
) -> list[SourceDiagnostic]:
    io_defs = dict(STANDARD_IO)
    io_defs.update(io_definitions or {})
    builder = _PlanBuilder(declarations, io_defs, {})
    try:
        builder.build(rule)
    except AnalysisError as e:
        return [error(rule.line, rule.col, e.message)]
    return []


# ---------------------------------------------------------------------------
# Stratification.  Only deductive rules define predicates within a
# timestamp; a negated dependency must live in a strictly lower stratum.
# Output rules take part as consumers: they are assigned the stratum their
# body requires, after which they run with the completed minimal model.


@dataclass
class Stratification:
    rule_strata: dict[int, int]  # rule source_index -> stratum
    predicate_strata: dict[str, int]
    num_strata: int


def _sccs(graph: dict[str, set[str]]) -> list[set[str]]:
    """Tarjan's strongly connected components, iterative."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    result: list[set[str]] = []
    counter = 0

    for root in graph:
        if root in index:
            continue
        work = [(root, iter(sorted(graph[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(sorted(graph[succ]))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == node:
                        break
                result.append(comp)
    return result


def stratify(rules: list[Rule]) -> Stratification:
    """Compute strata for classified rules; raises AnalysisError on a cycle."""
    deductive = [r for r in rules if r.kind is RuleKind.DEDUCTIVE]
    outputs = [r for r in rules if r.kind is RuleKind.OUTPUT]
    preds: set[str] = set()
    for r in deductive + outputs:
        if not r.head.is_io:
            preds.add(r.head.predicate)
        for e in r.body:
            if isinstance(e, Literal) and not e.is_io:
                preds.add(e.predicate)
    # Dependency graph of the deductive fragment: head depends on each body
    # predicate, negations marked.  A negated edge inside a strongly
    # connected component is a recursion through negation.
    pos_edges: dict[str, set[str]] = {p: set() for p in preds}
    neg_edges: dict[str, set[str]] = {p: set() for p in preds}
    for r in deductive:
        for e in r.body:
            if isinstance(e, Literal) and not e.is_io:
                (neg_edges if e.negated else pos_edges)[r.head.predicate].add(e.predicate)
    components = _sccs({p: pos_edges[p] | neg_edges[p] for p in preds})
    comp_of = {p: i for i, comp in enumerate(components) for p in comp}
    for h in preds:
        for q in neg_edges[h]:
            if comp_of[h] == comp_of[q]:
                cycle = sorted(components[comp_of[h]])
                raise AnalysisError(
                    "stratified negation violated: negation cycle involving "
                    + ", ".join(cycle)
                )

    stratum = {p: 0 for p in preds}
    changed = True
    while changed:
        changed = False
        for r in deductive:
            h = r.head.predicate
            for e in r.body:
                if not isinstance(e, Literal) or e.is_io:
                    continue
                need = stratum[e.predicate] + (1 if e.negated else 0)
                if need > stratum[h]:
                    stratum[h] = need
                    changed = True

    def body_stratum(r: Rule) -> int:
        s = 0
        for e in r.body:
            if isinstance(e, Literal) and not e.is_io:
                s = max(s, stratum[e.predicate] + (1 if e.negated else 0))
        return s

    rule_strata: dict[int, int] = {}
    for r in deductive:
        rule_strata[r.source_index] = stratum[r.head.predicate]
    for r in outputs:
        rule_strata[r.source_index] = body_stratum(r)
    num = 1 + max((stratum[r.head.predicate] for r in deductive), default=-1)
    return Stratification(rule_strata, stratum, num)


# ---------------------------------------------------------------------------
# Whole-program analysis


@dataclass
class Analysis:
    program: Program
    layout: CompileLayout
    plans: dict[int, RulePlan]
    strata: list[list[RulePlan]]  # deductive plans grouped by stratum, ascending
    stratification: Stratification | None
    io_definitions: dict[str, IoDefinition]
    diagnostics: list[SourceDiagnostic]

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)


def analyze(program: Program, buffer_size: int = DEFAULT_BUFFER_SIZE) -> Analysis:
    diags: list[SourceDiagnostic] = []
    decls: dict[str, Declaration] = {}
    io_defs: dict[str, IoDefinition] = dict(STANDARD_IO)

    for d in program.io_definitions:
        if d.name in STANDARD_IO:
            diags.append(
                error(d.line, d.col, f"IO predicate #{d.name} is part of the standard"
                      " library and cannot be redefined")
            )
        else:
            io_defs[d.name] = d
    for d in program.declarations:
        if d.name in decls:
            diags.append(
                error(d.line, d.col, f"duplicate declaration of predicate {d.name!r}")
            )
            continue
        if d.name in io_defs:
            diags.append(
                error(d.line, d.col,
                      f"{d.name!r} is declared both as a predicate and an IO predicate")
            )
            continue
        decls[d.name] = d

    numbers: dict[str, int] = {}
    try:
        numbers = number_predicates(tuple(decls.values()))
    except AnalysisError as e:
        overflow = list(decls.values())[MAX_PREDICATES]
        diags.append(error(overflow.line, overflow.col, e.message))

    layout = CompileLayout(
        predicate_numbers=numbers,
        fact_sizes={name: fact_size(d) for name, d in decls.items()},
        binding_patterns={name: {"b" * d.arity} for name, d in decls.items()},
        buffer_size=buffer_size,
        declarations=decls,
    )

    # Facts: declared, typed, in range, and free of exact duplicates.
    seen_facts: set[Fact] = set()
    kept_facts: list[Fact] = []
    for f in program.facts:
        decl = decls.get(f.predicate)
        if decl is None:
            diags.append(error(f.line, f.col, f"undeclared predicate {f.predicate!r} in fact"))
            continue
        if len(f.args) != decl.arity:
            diags.append(
                error(
                    f.line,
                    f.col,
                    f"{f.predicate!r} takes {decl.arity} argument(s), got {len(f.args)}",
                )
            )
            continue
        bad = False
        for a, t in zip(f.args, decl.arg_types):
            lo, hi = value_range(t)
            if not (lo <= a.value <= hi):
                diags.append(
                    error(f.line, f.col, f"constant {a.value} is out of range for {t}")
                )
                bad = True
        if bad:
            continue
        if f in seen_facts:
            diags.append(warning(f.line, f.col, f"duplicate fact {format_fact(f)}"))
            continue
        seen_facts.add(f)
        kept_facts.append(f)

    if any(r.macro for r in program.rules):
        diags.append(error(0, 0, "program still contains macro prefixes; expand macros first"))
        return Analysis(program, layout, {}, [], None, io_defs, diags)

    builder = _PlanBuilder(decls, io_defs, layout.binding_patterns)
    plans: dict[int, RulePlan] = {}
    classified: list[Rule] = []
    for rule in program.rules:
        try:
            plan = builder.build(rule)
        except AnalysisError as e:
            diags.append(error(rule.line, rule.col, e.message))
            continue
        plans[rule.source_index] = plan
        classified.append(plan.rule)

    stratification = None
    strata: list[list[RulePlan]] = []
    if not has_errors(diags):
        try:
            stratification = stratify(classified)
        except AnalysisError as e:
            diags.append(error(0, 0, e.message))
        if stratification is not None:
            for idx, s in stratification.rule_strata.items():
                plans[idx].stratum = s
            strata = [[] for _ in range(stratification.num_strata)]
            for plan in sorted(plans.values(), key=lambda p: p.rule.source_index):
                if plan.kind is RuleKind.DEDUCTIVE:
                    strata[plan.stratum].append(plan)

    program = replace(program, facts=tuple(kept_facts), rules=tuple(classified))
    return Analysis(program, layout, plans, strata, stratification, io_defs, diags)
