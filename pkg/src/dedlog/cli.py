"""Command-line interface.

    dedlog check <file.dl>
    dedlog expand <file.dl>
    dedlog compile <file.dl> -o <out.c> [--buffer-size N] [--no-arduino-header]
    dedlog run <file.dl> --trace <file.trace> [--buffer-size N]
                         [--max-steps K] [--dump-facts]

Exit codes: 0 success, 1 diagnostics or runtime faults, 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .analyzer import DEFAULT_BUFFER_SIZE, Analysis, analyze
from .ast import Program, format_program
from .board import FaultEvent, TraceError, parse_trace
from .codegen import CodegenError, emit_program
from .diagnostics import SourceDiagnostic, has_errors
from .macros import expand_macros
from .parser import parse_program
from .simulator import Simulator


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as e:
        print(f"dedlog: cannot read {path}: {e.strerror}", file=sys.stderr)
        raise SystemExit(1)


def _report(diags: list[SourceDiagnostic], filename: str) -> None:
    for d in diags:
        print(d.render(filename), file=sys.stderr)


def _load(path: str, buffer_size: int) -> tuple[Analysis | None, list[SourceDiagnostic]]:
    source = _read_file(path)
    result = parse_program(source)
    diags = list(result.diagnostics)
    if result.program is None:
        return None, diags
    expanded, expand_diags = expand_macros(result.program)
    diags += expand_diags
    if has_errors(diags):
        return None, diags
    analysis = analyze(expanded, buffer_size)
    diags += analysis.diagnostics
    if has_errors(diags):
        return None, diags
    return analysis, diags


def _expand_only(path: str) -> tuple[Program | None, list[SourceDiagnostic]]:
    source = _read_file(path)
    result = parse_program(source)
    diags = list(result.diagnostics)
    if result.program is None:
        return None, diags
    expanded, expand_diags = expand_macros(result.program)
    return expanded, diags + expand_diags


def cmd_check(args) -> int:
    analysis, diags = _load(args.file, args.buffer_size)
    _report(diags, args.file)
    return 0 if analysis is not None and not has_errors(diags) else 1


def cmd_expand(args) -> int:
    program, diags = _expand_only(args.file)
    _report(diags, args.file)
    if program is None or has_errors(diags):
        return 1
    sys.stdout.write(format_program(program))
    return 0


def cmd_compile(args) -> int:
    analysis, diags = _load(args.file, args.buffer_size)
    _report(diags, args.file)
    if analysis is None:
        return 1
    try:
        unit = emit_program(analysis, arduino_header=not args.no_arduino_header)
    except CodegenError as e:
        print(f"{args.file}: error: {e}", file=sys.stderr)
        return 1
    try:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(unit.source_text)
    except OSError as e:
        print(f"dedlog: cannot write {args.output}: {e.strerror}", file=sys.stderr)
        return 1
    return 0


def cmd_run(args) -> int:
    analysis, diags = _load(args.file, args.buffer_size)
    _report(diags, args.file)
    if analysis is None:
        return 1
    try:
        trace = parse_trace(_read_file(args.trace), args.trace)
    except TraceError as e:
        print(f"{e}", file=sys.stderr)
        return 1
    sim = Simulator(analysis, trace)
    sim.run(args.max_steps)
    sys.stdout.write(sim.log.render())
    if args.dump_facts:
        for line in sim.dumps:
            print(line, file=sys.stderr)
    return 1 if sim.log.of_type(FaultEvent) else 0


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dedlog",
        description="Compile or simulate temporal Datalog programs for microcontrollers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("file", help="program source (.dl)")
        p.add_argument(
            "--buffer-size",
            type=int,
            default=DEFAULT_BUFFER_SIZE,
            help="bytes per state buffer (default %(default)s)",
        )

    p = sub.add_parser("check", help="parse, expand, and analyze a program")
    add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("expand", help="print the macro-expanded program")
    p.add_argument("file", help="program source (.dl)")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("compile", help="emit C source for the program")
    add_common(p)
    p.add_argument("-o", "--output", required=True, help="output C file")
    p.add_argument(
        "--no-arduino-header",
        action="store_true",
        help="include the host harness shim instead of Arduino.h",
    )
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="simulate the program against a pin trace")
    add_common(p)
    p.add_argument("--trace", required=True, help="trace script file")
    p.add_argument("--max-steps", type=int, default=None, help="stop after K steps")
    p.add_argument(
        "--dump-facts",
        action="store_true",
        help="print per-step fact dumps to standard error",
    )
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
