"""Parser for `.dl` source files.

The grammar is whitespace-insensitive and line comments start with `//`.
Statements are declarations (`.decl p(int)`), IO predicate definitions
(`#name(P, Val) = { ... }`, body captured verbatim up to the matching
brace), facts (`p(5)@0.`), and rules (`head :- body.`), optionally
prefixed with a macro tag in square brackets.

Errors are collected as diagnostics; after a bad statement the parser
skips to the next statement boundary so a single run reports as many
problems as possible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    BinOp,
    BodyElem,
    Comparison,
    Declaration,
    Expr,
    Fact,
    IntConst,
    IoDefinition,
    IoParam,
    Literal,
    MacroTag,
    NamedConst,
    Negate,
    ParamMode,
    Program,
    Rule,
    Term,
    ValueType,
    Variable,
)
from .diagnostics import SourceDiagnostic, error, has_errors

_CMP_OPS = {"<", "<=", ">", ">=", "==", "!="}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    value: int | None = None


class _LexError(Exception):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(message)
        self.line = line
        self.col = col
        self.message = message


class _ParseError(Exception):
    def __init__(self, tok: Token, message: str):
        super().__init__(message)
        self.tok = tok
        self.message = message


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def tokenize(source: str) -> list[Token]:
    """Lex the whole source.  Raises _LexError on malformed input."""
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "/" and source[i : i + 2] == "//":
            while i < n and source[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if c == ".":
            # ".decl" directive vs statement-terminating dot
            j = i + 1
            word = ""
            while j < n and _is_ident_char(source[j]):
                word += source[j]
                j += 1
            if word == "decl":
                toks.append(Token("decl", ".decl", start_line, start_col))
                advance(5)
            else:
                toks.append(Token("dot", ".", start_line, start_col))
                advance()
            continue
        if _is_ident_start(c):
            j = i
            while j < n and _is_ident_char(source[j]):
                j += 1
            text = source[i:j]
            toks.append(Token("ident", text, start_line, start_col))
            advance(j - i)
            continue
        if c == "#":
            j = i + 1
            if j >= n or not _is_ident_start(source[j]):
                raise _LexError(line, col, "expected identifier after '#'")
            while j < n and _is_ident_char(source[j]):
                j += 1
            toks.append(Token("hashident", source[i + 1 : j], start_line, start_col))
            advance(j - i)
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            toks.append(Token("int", text, start_line, start_col, value=int(text)))
            advance(j - i)
            continue
        if c == "@":
            j = i + 1
            if source[j : j + 4] == "next" and (
                j + 4 >= n or not _is_ident_char(source[j + 4])
            ):
                toks.append(Token("atnext", "@next", start_line, start_col))
                advance(5)
                continue
            k = j
            while k < n and source[k].isdigit():
                k += 1
            if k == j:
                raise _LexError(line, col, "expected 'next' or a timestamp after '@'")
            toks.append(
                Token("at", source[i:k], start_line, start_col, value=int(source[j:k]))
            )
            advance(k - i)
            continue
        if c == ":" and source[i : i + 2] == ":-":
            toks.append(Token("implies", ":-", start_line, start_col))
            advance(2)
            continue
        if c == "{":
            body, consumed = _capture_body(source, i, line, col)
            toks.append(Token("body", body, start_line, start_col))
            advance(consumed)
            continue
        two = source[i : i + 2]
        if two in ("<=", ">=", "==", "!="):
            toks.append(Token("cmp", two, start_line, start_col))
            advance(2)
            continue
        if c in "<>":
            toks.append(Token("cmp", c, start_line, start_col))
            advance()
            continue
        if c == "!":
            toks.append(Token("bang", "!", start_line, start_col))
            advance()
            continue
        if c == "=":
            toks.append(Token("equals", "=", start_line, start_col))
            advance()
            continue
        simple = {
            ",": "comma",
            "(": "lparen",
            ")": "rparen",
            "[": "lbracket",
            "]": "rbracket",
            ":": "colon",
            "+": "plus",
            "-": "minus",
            "*": "star",
        }
        if c in simple:
            toks.append(Token(simple[c], c, start_line, start_col))
            advance()
            continue
        raise _LexError(line, col, f"unexpected character {c!r}")
    toks.append(Token("eof", "", line, col))
    return toks


def _capture_body(source: str, i: int, line: int, col: int) -> tuple[str, int]:
    """Capture a brace-delimited verbatim body starting at source[i] == '{'.

    Nested braces are tracked; string and character literals may contain
    braces without closing the body.  Returns (inner text, chars consumed).
    """
    depth = 0
    j = i
    n = len(source)
    in_str: str | None = None
    while j < n:
        c = source[j]
        if in_str:
            if c == "\\":
                j += 2
                continue
            if c == in_str:
                in_str = None
        elif c in "\"'":
            in_str = c
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                return source[i + 1 : j], j - i + 1
        j += 1
    raise _LexError(line, col, "unterminated '{' in IO definition body")


@dataclass
class ParseResult:
    program: Program | None
    diagnostics: list[SourceDiagnostic]

    @property
    def ok(self) -> bool:
        return self.program is not None and not has_errors(self.diagnostics)


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0
        self.diags: list[SourceDiagnostic] = []
        self.declarations: list[Declaration] = []
        self.io_definitions: list[IoDefinition] = []
        self.facts: list[Fact] = []
        self.rules: list[Rule] = []

    # -- token plumbing --------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise _ParseError(tok, f"expected {what}, found {tok.text or 'end of input'!r}")
        return self.next()

    def err(self, tok: Token, message: str) -> None:
        self.diags.append(error(tok.line, tok.col, message))

    def _recover(self) -> None:
        """Skip to just past the next statement boundary ('.' or an IO body)."""
        while True:
            tok = self.next()
            if tok.kind in ("dot", "body", "eof"):
                return

    # -- grammar ---------------------------------------------------------

    def parse(self) -> ParseResult:
        while self.peek().kind != "eof":
            try:
                self.statement()
            except _ParseError as e:
                self.err(e.tok, e.message)
                self._recover()
        program = Program(
            declarations=tuple(self.declarations),
            io_definitions=tuple(self.io_definitions),
            facts=tuple(self.facts),
            rules=tuple(self.rules),
        )
        return ParseResult(None if has_errors(self.diags) else program, self.diags)

    def statement(self) -> None:
        tok = self.peek()
        if tok.kind == "decl":
            self.declaration()
        elif tok.kind == "hashident" and self._looks_like_io_definition():
            self.io_definition()
        elif tok.kind in ("ident", "hashident", "lbracket"):
            self.fact_or_rule()
        else:
            raise _ParseError(tok, f"unexpected {tok.text!r} at statement start")

    def _looks_like_io_definition(self) -> bool:
        # #name ( ... ) =   distinguishes a definition from a rule head
        if self.peek(1).kind != "lparen":
            return False
        depth = 0
        k = 1
        while True:
            tok = self.peek(k)
            if tok.kind == "eof":
                return False
            if tok.kind == "lparen":
                depth += 1
            elif tok.kind == "rparen":
                depth -= 1
                if depth == 0:
                    return self.peek(k + 1).kind == "equals"
            k += 1

    def declaration(self) -> None:
        self.expect("decl", "'.decl'")
        name_tok = self.expect("ident", "predicate name")
        if not name_tok.text[0].islower():
            self.err(name_tok, "predicate names must start with a lowercase letter")
        arg_types: list[ValueType] = []
        if self.peek().kind == "lparen":
            self.next()
            if self.peek().kind != "rparen":
                arg_types.append(self.value_type())
                while self.peek().kind == "comma":
                    self.next()
                    arg_types.append(self.value_type())
            self.expect("rparen", "')'")
        if self.peek().kind == "dot":  # trailing dot is optional on declarations
            self.next()
        self.declarations.append(
            Declaration(
                name_tok.text, tuple(arg_types), line=name_tok.line, col=name_tok.col
            )
        )

    def value_type(self) -> ValueType:
        tok = self.expect("ident", "a type name")
        if tok.text == "byte":
            return ValueType.BYTE
        if tok.text == "int":
            return ValueType.INT
        if tok.text == "unsigned":
            follow = self.expect("ident", "'long' after 'unsigned'")
            if follow.text != "long":
                raise _ParseError(follow, "expected 'long' after 'unsigned'")
            return ValueType.UNSIGNED_LONG
        raise _ParseError(tok, f"unknown type {tok.text!r} (expected byte, int, or unsigned long)")

    def io_definition(self) -> None:
        name_tok = self.expect("hashident", "IO predicate name")
        if not name_tok.text[0].islower():
            self.err(name_tok, "IO predicate names must start with a lowercase letter")
        self.expect("lparen", "'('")
        params: list[str] = []
        if self.peek().kind != "rparen":
            params.append(self.expect("ident", "parameter name").text)
            while self.peek().kind == "comma":
                self.next()
                params.append(self.expect("ident", "parameter name").text)
        self.expect("rparen", "')'")
        self.expect("equals", "'='")
        body_tok = self.expect("body", "'{' body '}'")
        definition = _classify_io_params(name_tok, params, body_tok.text, self.diags)
        if definition is not None:
            if any(d.name == definition.name for d in self.io_definitions):
                self.err(name_tok, f"duplicate definition for IO predicate #{definition.name}")
            else:
                self.io_definitions.append(definition)

    def macro_prefix(self) -> MacroTag:
        self.expect("lbracket", "'['")
        name_tok = self.expect("ident", "macro name")
        arg = None
        if self.peek().kind == "colon":
            self.next()
            negative = False
            if self.peek().kind == "minus":
                self.next()
                negative = True
            arg_tok = self.expect("int", "macro argument")
            arg = -arg_tok.value if negative else arg_tok.value
        self.expect("rbracket", "']'")
        return MacroTag(name_tok.text, arg)

    def fact_or_rule(self) -> None:
        macro = None
        start = self.peek()
        if start.kind == "lbracket":
            macro = self.macro_prefix()
            start = self.peek()
        head = self.head_literal()
        head_next = False
        at_tok = None
        if self.peek().kind == "atnext":
            self.next()
            head_next = True
        elif self.peek().kind == "at":
            at_tok = self.next()
        body: list[BodyElem] = []
        if self.peek().kind == "implies":
            self.next()
            body.append(self.body_elem())
            while self.peek().kind == "comma":
                self.next()
                body.append(self.body_elem())
        self.expect("dot", "'.' at end of statement")

        if at_tok is not None:
            if at_tok.value != 0:
                raise _ParseError(at_tok, "facts are allowed at timestamp 0 only")
            if body:
                raise _ParseError(at_tok, "a fact cannot have a rule body")
            if macro:
                raise _ParseError(start, "a macro cannot prefix a fact")
            if head.is_io:
                raise _ParseError(start, "an IO predicate cannot be asserted as a fact")
            args = []
            for a in head.args:
                if not isinstance(a, IntConst):
                    raise _ParseError(start, "fact arguments must be integer constants")
                args.append(a)
            self.facts.append(
                Fact(head.predicate, tuple(args), line=start.line, col=start.col)
            )
            return

        if not body and macro is None:
            raise _ParseError(
                start, "a bodiless statement must be a fact (use '@0') or carry a macro"
            )
        if head_next and not body:
            raise _ParseError(start, "a rule with '@next' requires a body")
        self.rules.append(
            Rule(
                head=head,
                body=tuple(body),
                head_next=head_next,
                macro=macro,
                source_index=len(self.rules),
                line=start.line,
                col=start.col,
            )
        )

    def head_literal(self) -> Literal:
        tok = self.peek()
        if tok.kind == "bang":
            raise _ParseError(tok, "a rule head cannot be negated")
        return self.literal(negated=False)

    def literal(self, negated: bool) -> Literal:
        tok = self.next()
        if tok.kind not in ("ident", "hashident"):
            raise _ParseError(tok, f"expected a predicate, found {tok.text!r}")
        is_io = tok.kind == "hashident"
        if not tok.text[0].islower():
            self.err(tok, "predicate names must start with a lowercase letter")
        args: list[Term] = []
        if self.peek().kind == "lparen":
            self.next()
            if self.peek().kind != "rparen":
                args.append(self.term())
                while self.peek().kind == "comma":
                    self.next()
                    args.append(self.term())
            self.expect("rparen", "')'")
        return Literal(tok.text, tuple(args), negated=negated, is_io=is_io)

    def term(self) -> Term:
        tok = self.next()
        if tok.kind == "int":
            return IntConst(tok.value)
        if tok.kind == "minus":
            num = self.expect("int", "an integer after '-'")
            return IntConst(-num.value)
        if tok.kind == "hashident":
            return NamedConst(tok.text)
        if tok.kind == "ident":
            if not (tok.text[0].isupper() or tok.text[0] == "_"):
                raise _ParseError(
                    tok,
                    f"{tok.text!r} is not a valid argument (variables start uppercase;"
                    " constants are integers or #NAME)",
                )
            return Variable(tok.text)
        raise _ParseError(tok, f"expected an argument, found {tok.text!r}")

    def body_elem(self) -> BodyElem:
        tok = self.peek()
        if tok.kind == "bang":
            self.next()
            return self.literal(negated=True)
        if tok.kind == "hashident":
            return self.literal(negated=False)
        if tok.kind == "ident":
            nxt = self.peek(1).kind
            if nxt == "lparen":
                return self.literal(negated=False)
            if nxt in ("comma", "dot"):
                return self.literal(negated=False)
            return self.comparison()
        if tok.kind in ("int", "minus", "lparen"):
            return self.comparison()
        raise _ParseError(tok, f"expected a literal or comparison, found {tok.text!r}")

    def comparison(self) -> Comparison:
        lhs = self.expr()
        tok = self.expect("cmp", "a comparison operator")
        rhs = self.expr()
        return Comparison(lhs, tok.text, rhs)

    def expr(self) -> Expr:
        e = self.mul_expr()
        while self.peek().kind in ("plus", "minus"):
            op = self.next().text
            e = BinOp(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> Expr:
        e = self.atom_expr()
        while self.peek().kind == "star":
            self.next()
            e = BinOp("*", e, self.atom_expr())
        return e

    def atom_expr(self) -> Expr:
        tok = self.next()
        if tok.kind == "int":
            return IntConst(tok.value)
        if tok.kind == "minus":
            inner = self.atom_expr()
            if isinstance(inner, IntConst):
                return IntConst(-inner.value)
            return Negate(inner)
        if tok.kind == "lparen":
            e = self.expr()
            self.expect("rparen", "')'")
            return e
        if tok.kind == "hashident":
            return NamedConst(tok.text)
        if tok.kind == "ident":
            if not (tok.text[0].isupper() or tok.text[0] == "_"):
                raise _ParseError(tok, f"{tok.text!r} is not a variable (variables start uppercase)")
            return Variable(tok.text)
        raise _ParseError(tok, f"expected an expression, found {tok.text!r}")


# IO parameter classification: a parameter is READ when `#Name` occurs in
# the body and SET when the body contains a C-style declaration of the form
# `<type words> Name = ...` at the start of a statement.
import re as _re


def _classify_io_params(
    name_tok: Token,
    params: list[str],
    body: str,
    diags: list[SourceDiagnostic],
) -> IoDefinition | None:
    seen: set[str] = set()
    classified: list[IoParam] = []
    ok = True
    statements = [s for s in body.split(";")]
    for param in params:
        if param in seen:
            diags.append(error(name_tok.line, name_tok.col, f"duplicate parameter {param!r}"))
            ok = False
            continue
        seen.add(param)
        is_read = _re.search(rf"#{param}\b", body) is not None
        decl_re = _re.compile(rf"^\s*(?:[A-Za-z_]\w*\s+)+{param}\s*=")
        is_set = any(decl_re.match(s) for s in statements)
        if is_read and is_set:
            diags.append(
                error(
                    name_tok.line,
                    name_tok.col,
                    f"parameter {param!r} of #{name_tok.text} is both read and set in the body",
                )
            )
            ok = False
        elif not is_read and not is_set:
            diags.append(
                error(
                    name_tok.line,
                    name_tok.col,
                    f"parameter {param!r} of #{name_tok.text} is neither read nor set in the body",
                )
            )
            ok = False
        else:
            classified.append(IoParam(param, ParamMode.READ if is_read else ParamMode.SET))
    if not ok:
        return None
    return IoDefinition(
        name_tok.text,
        tuple(classified),
        body,
        line=name_tok.line,
        col=name_tok.col,
    )


def parse_program(source: str) -> ParseResult:
    """Parse full program text into a Program plus diagnostics."""
    try:
        toks = tokenize(source)
    except _LexError as e:
        return ParseResult(None, [error(e.line, e.col, e.message)])
    return _Parser(toks).parse()


def parse_io_definition(text: str) -> IoDefinition:
    """Parse a single `#name(args) = { body }` definition.

    Raises ValueError with the first diagnostic message on malformed input.
    """
    toks = tokenize(text)
    p = _Parser(toks)
    try:
        p.io_definition()
    except _ParseError as e:
        raise ValueError(e.message) from None
    if p.diags:
        raise ValueError(p.diags[0].message)
    return p.io_definitions[0]
