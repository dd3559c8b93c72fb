import pytest

from dedlog.ast import format_program, format_rule
from dedlog.diagnostics import Severity
from dedlog.macros import expand_macros
from dedlog.parser import parse_program

from conftest import CORPUS


def expand(src: str):
    result = parse_program(src)
    assert result.ok, result.diagnostics
    return expand_macros(result.program)


def errors_of(diags):
    return [d for d in diags if d.severity is Severity.ERROR]


class TestSetupMacro:
    def test_bodiless_rewrite(self):
        p, diags = expand(".decl t\n[setup]t.\n")
        assert not errors_of(diags)
        (rule,) = p.rules
        assert format_rule(rule) == "t :- setup."
        assert any(d.name == "setup" for d in p.declarations)
        assert any(f.predicate == "setup" for f in p.facts)

    def test_io_head_rewrite(self):
        p, _ = expand("[setup]#pinOut(13).\n")
        (rule,) = p.rules
        assert format_rule(rule) == "#pinOut(13) :- setup."

    def test_nonempty_body_appends_setup(self):
        p, _ = expand(".decl a\n.decl b\nb@0.\n[setup]a :- b.\n")
        (rule,) = p.rules
        assert format_rule(rule) == "a :- b, setup."

    def test_two_setup_rules_share_one_fact(self):
        p, _ = expand(".decl a\n.decl b\n[setup]a.\n[setup]b.\n")
        assert sum(1 for f in p.facts if f.predicate == "setup") == 1
        assert sum(1 for d in p.declarations if d.name == "setup") == 1

    def test_existing_explicit_setup_reused(self):
        p, diags = expand(".decl setup\n.decl a\nsetup@0.\n[setup]a.\n")
        assert not errors_of(diags)
        assert sum(1 for f in p.facts if f.predicate == "setup") == 1

    def test_setup_with_arity_conflict(self):
        _, diags = expand(".decl setup(int)\n.decl a\n[setup]a.\n")
        assert errors_of(diags)


class TestDelayMacro:
    SRC = ".decl turn_on\n.decl turn_off\n[delay:1000]turn_on :- turn_off.\n"

    def test_rewrite_set(self):
        p, diags = expand(self.SRC)
        assert not errors_of(diags)
        texts = [format_rule(r) for r in p.rules]
        assert texts == [
            "now(T)@next :- #millis(T).",
            "delayed_turn_on(Curr) :- turn_off, now(Curr).",
            "turn_on :- delayed_turn_on(Await), now(Curr), Await+1000 <= Curr.",
            "delayed_turn_on(Await)@next :- delayed_turn_on(Await), now(Curr), Await+1000 > Curr.",
        ]
        assert any(f.predicate == "now" and f.args[0].value == 0 for f in p.facts)
        decls = {d.name: d for d in p.declarations}
        assert str(decls["now"].arg_types[0]) == "unsigned long"
        assert [str(t) for t in decls["delayed_turn_on"].arg_types] == ["unsigned long"]

    def test_head_arguments_carried(self):
        p, _ = expand(
            ".decl s(byte)\n.decl go(byte)\ns(1)@0.\n[delay:50]go(X) :- s(X).\n"
        )
        texts = [format_rule(r) for r in p.rules]
        assert "delayed_go(X, Curr) :- s(X), now(Curr)." in texts
        assert "go(X) :- delayed_go(X, Await), now(Curr), Await+50 <= Curr." in texts

    def test_two_delays_share_now_machinery(self):
        src = (
            ".decl a\n.decl b\n[delay:10]a :- b.\n[delay:20]b :- a.\n"
        )
        p, _ = expand(src)
        texts = [format_rule(r) for r in p.rules]
        assert texts.count("now(T)@next :- #millis(T).") == 1
        assert sum(1 for f in p.facts if f.predicate == "now") == 1

    def test_nonpositive_delay_rejected(self):
        _, diags = expand(".decl a\n[delay:0]a :- a.\n")
        assert errors_of(diags)

    def test_delay_on_next_head_rejected(self):
        _, diags = expand(".decl a\n[delay:10]a@next :- a.\n")
        assert errors_of(diags)

    def test_incompatible_now_declaration_rejected(self):
        _, diags = expand(".decl now(byte)\n.decl a\n[delay:10]a :- a.\n")
        assert any("incompatible" in d.message for d in errors_of(diags))

    def test_incompatible_delayed_declaration_rejected(self):
        _, diags = expand(
            ".decl delayed_a(byte)\n.decl a\n[delay:10]a :- a.\n"
        )
        assert any("incompatible" in d.message for d in errors_of(diags))

    def test_undeclared_head_rejected(self):
        _, diags = expand(".decl b\nb@0.\n[delay:10]a :- b.\n")
        assert any("undeclared" in d.message for d in errors_of(diags))

    def test_variable_collision_freshened(self):
        p, _ = expand(
            ".decl s(byte)\n.decl go(byte)\n[delay:10]go(Curr) :- s(Curr).\n"
        )
        texts = "\n".join(format_rule(r) for r in p.rules)
        assert "now(Curr2)" in texts


class TestExpansionProperties:
    def test_macro_free_program_unchanged(self):
        src = (CORPUS / "blink.dl").read_text()
        result = parse_program(src)
        p, diags = expand_macros(result.program)
        assert p == result.program
        assert diags == []

    def test_idempotent(self):
        result = parse_program((CORPUS / "macroblink.dl").read_text())
        once, diags1 = expand_macros(result.program)
        assert not errors_of(diags1)
        twice, diags2 = expand_macros(once)
        assert twice == once
        assert diags2 == []

    def test_user_rules_keep_relative_order(self):
        src = (CORPUS / "macroblink.dl").read_text()
        result = parse_program(src)
        p, _ = expand_macros(result.program)
        texts = [format_rule(r) for r in p.rules]
        user_rules = [
            "#pinOut(13) :- setup.",
            "#digitalWrite(13, #HIGH) :- turn_on.",
            "turn_off :- setup.",
            "#digitalWrite(13, #LOW) :- turn_off.",
        ]
        positions = [texts.index(t) for t in user_rules]
        assert positions == sorted(positions)

    def test_expanded_output_reparses(self):
        result = parse_program((CORPUS / "macroblink.dl").read_text())
        p, _ = expand_macros(result.program)
        text = format_program(p)
        again = parse_program(text)
        assert again.ok
        assert again.program == p

    def test_unknown_macro_rejected(self):
        _, diags = expand(".decl a\na@0.\n[frobnicate]a :- a.\n")
        assert any("unknown macro" in d.message for d in errors_of(diags))

    def test_duplicate_user_now_rule_warns(self):
        src = (
            ".decl now(unsigned long)\n.decl a\nnow(0)@0.\n"
            "now(T)@next :- #millis(T).\n[delay:10]a :- a.\n"
        )
        _, diags = expand(src)
        warnings = [d for d in diags if d.severity is Severity.WARNING]
        assert warnings
