"""Brute-force least-fixpoint oracle, independent of the engine under test.

Works directly on the AST: enumerates every ground instantiation of every
rule over the constants appearing in the program and iterates to a
fixpoint.  Only good for tiny programs, which is the point - it cannot
share bugs with the nested-loop join evaluator.

Also hosts the random program generator used for the oracle equivalence
and differential tests.
"""

from __future__ import annotations

import itertools
import random

from dedlog.ast import Comparison, IntConst, Literal, Program, Rule, Variable

GroundFact = tuple[str, tuple[int, ...]]


def _expr_value(e, env):
    if isinstance(e, Variable):
        return env[e.name]
    if isinstance(e, IntConst):
        return e.value
    raise NotImplementedError(f"oracle cannot evaluate {e!r}")


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _rule_vars(rule: Rule) -> list[str]:
    seen: list[str] = []

    def add(name):
        if name not in seen:
            seen.append(name)

    for elem in (rule.head, *rule.body):
        if isinstance(elem, Literal):
            for a in elem.args:
                if isinstance(a, Variable):
                    add(a.name)
        else:
            for side in (elem.lhs, elem.rhs):
                if isinstance(side, Variable):
                    add(side.name)
    return seen


def least_fixpoint(program: Program) -> set[GroundFact]:
    """Deductive least fixpoint of a negation-free, IO-free program over
    its timestamp-0 facts."""
    constants: set[int] = set()
    for f in program.facts:
        constants.update(a.value for a in f.args)
    for rule in program.rules:
        for elem in (rule.head, *rule.body):
            if isinstance(elem, Literal):
                constants.update(a.value for a in elem.args if isinstance(a, IntConst))
    universe = sorted(constants) or [0]

    rules = [r for r in program.rules if not r.head_next]
    for r in rules:
        assert not r.head.is_io
        for e in r.body:
            if isinstance(e, Literal):
                assert not e.negated and not e.is_io, "oracle handles positive programs only"

    model: set[GroundFact] = {
        (f.predicate, tuple(a.value for a in f.args)) for f in program.facts
    }
    changed = True
    while changed:
        changed = False
        for rule in rules:
            names = _rule_vars(rule)
            for values in itertools.product(universe, repeat=len(names)):
                env = dict(zip(names, values))

                def ground(lit: Literal) -> GroundFact:
                    return (
                        lit.predicate,
                        tuple(
                            env[a.name] if isinstance(a, Variable) else a.value
                            for a in lit.args
                        ),
                    )

                ok = True
                for elem in rule.body:
                    if isinstance(elem, Comparison):
                        if not _OPS[elem.op](
                            _expr_value(elem.lhs, env), _expr_value(elem.rhs, env)
                        ):
                            ok = False
                            break
                    elif ground(elem) not in model:
                        ok = False
                        break
                if ok:
                    fact = ground(rule.head)
                    if fact not in model:
                        model.add(fact)
                        changed = True
    return model


# ---------------------------------------------------------------------------
# Random programs.  All predicates are byte-typed with small constants so
# every generated program is well-typed and safe by construction.


def random_positive_program(rng: random.Random) -> str:
    """Negation-free, IO-free program: declarations, facts, deductive rules."""
    n_preds = rng.randint(2, 4)
    preds = [(f"p{i}", rng.randint(0, 2)) for i in range(n_preds)]
    lines = [f".decl {name}" if arity == 0 else f".decl {name}({', '.join(['byte'] * arity)})"
             for name, arity in preds]

    def pred_term(name, arity, vars_avail):
        args = []
        for _ in range(arity):
            if vars_avail and rng.random() < 0.7:
                args.append(rng.choice(vars_avail))
            else:
                args.append(str(rng.randint(0, 4)))
        return f"{name}({', '.join(args)})" if args else name

    for _ in range(rng.randint(1, 5)):
        name, arity = rng.choice(preds)
        args = ", ".join(str(rng.randint(0, 4)) for _ in range(arity))
        lines.append(f"{name}({args})@0." if arity else f"{name}@0.")

    var_pool = ["X", "Y", "Z"]
    for _ in range(rng.randint(1, 6)):
        body = []
        bound: list[str] = []
        for _ in range(rng.randint(1, 3)):
            name, arity = rng.choice(preds)
            args = []
            for _ in range(arity):
                if rng.random() < 0.6:
                    v = rng.choice(var_pool)
                    args.append(v)
                    if v not in bound:
                        bound.append(v)
                else:
                    args.append(str(rng.randint(0, 4)))
            body.append(f"{name}({', '.join(args)})" if args else name)
        if bound and rng.random() < 0.4:
            a = rng.choice(bound)
            b = rng.choice(bound + [str(rng.randint(0, 4))])
            op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
            body.append(f"{a} {op} {b}")
        hname, harity = rng.choice(preds)
        hargs = ", ".join(
            rng.choice(bound) if bound and rng.random() < 0.8 else str(rng.randint(0, 4))
            for _ in range(harity)
        )
        head = f"{hname}({hargs})" if harity else hname
        lines.append(f"{head} :- {', '.join(body)}.")
    return "\n".join(lines) + "\n"


def random_io_program(rng: random.Random) -> tuple[str, str]:
    """A program using the standard IO predicates plus a matching trace.

    Structure: a setup stage configures one input and one output pin, an
    input rule samples the input pin, a few deductive rules shuffle state,
    inductive rules carry facts forward, and output rules drive the LED.
    """
    in_pin = rng.randint(2, 7)
    out_pin = rng.randint(8, 13)
    lines = [
        ".decl setup",
        ".decl sensed",
        ".decl state(byte)",
        ".decl blink",
        "setup@0.",
        f"state({rng.randint(0, 3)})@0.",
        f"#pinIn({in_pin}) :- setup.",
        f"#pinOut({out_pin}) :- setup.",
        f"sensed@next :- #digitalRead({in_pin}, #HIGH).",
    ]
    for _ in range(rng.randint(1, 3)):
        a = rng.randint(0, 3)
        b = rng.randint(0, 3)
        lines.append(f"blink :- state({a}), sensed." if rng.random() < 0.5
                     else f"blink :- state({a}), state({b}).")
    lines.append("state(X)@next :- state(X), !blink.")
    nxt = rng.randint(0, 3)
    lines.append(f"state({nxt})@next :- blink.")
    if rng.random() < 0.5:
        lines.append("state(X)@next :- sensed, state(X).")
    lines.append(f"#digitalWrite({out_pin}, #HIGH) :- blink.")
    lines.append(f"#digitalWrite({out_pin}, #LOW) :- !blink.")

    events = []
    t = 0
    level = "high"
    end = rng.randint(500, 1500)
    while True:
        t += rng.randint(30, 300)
        if t >= end:
            break
        events.append(f"at {t} pin {in_pin} {level}")
        level = "low" if level == "high" else "high"
    trace = "tick 10\n" + "\n".join(events) + (f"\nend {end}\n" if events else f"end {end}\n")
    return "\n".join(lines) + "\n", trace
