"""Command-line front end: check, compile, render, and extract.

Diagnostics print as ``file:line:col: severity: message`` on stderr. Exit
codes: 0 = no errors (warnings allowed unless --strict), 1 = errors,
2 = usage or IO failure.
"""

from __future__ import annotations

import argparse
import sys

from . import compiler, i18n, web
from .diagnostics import (
    CompositionError,
    PlanError,
    RenderError,
    Severity,
    TableError,
)
from .frontend import desugar, parse_template
from .runtime import Bindings, render, render_full

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_USAGE = 2


def _print_diags(diags, strict: bool) -> int:
    worst = EXIT_OK
    for d in diags:
        severity = d.severity
        if strict and severity is Severity.WARNING:
            severity = Severity.ERROR
        print(f"{d.position}: {severity.value}: {d.message}", file=sys.stderr)
        if severity is Severity.ERROR:
            worst = EXIT_ERRORS
    return worst


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise SystemExit2(f"cannot read {path}: {exc.strerror or exc}")


class SystemExit2(Exception):
    """Usage or IO failure; maps to exit code 2."""


def _machine_for(tag: str, tables_dir):
    try:
        return web.machine_for_tag(tag, tables_dir)
    except KeyError as exc:
        raise SystemExit2(str(exc.args[0])) from None


def cmd_check(args) -> int:
    source = _read(args.template)
    ir, parse_diags = parse_template(source, args.template)
    if ir is None:
        _print_diags(parse_diags, args.strict)
        return EXIT_USAGE
    machine = _machine_for(ir.tag, args.tables)
    annotated = compiler.propagate(desugar(ir), machine)
    return _print_diags(parse_diags + annotated.diagnostics, args.strict)


def cmd_compile(args) -> int:
    source = _read(args.template)
    ir, parse_diags = parse_template(source, args.template)
    if ir is None:
        _print_diags(parse_diags, args.strict)
        return EXIT_USAGE
    machine = _machine_for(ir.tag, args.tables)
    annotated = compiler.propagate(desugar(ir), machine)
    code = _print_diags(parse_diags + annotated.diagnostics, args.strict)
    if code == EXIT_ERRORS:
        return EXIT_ERRORS
    payload = compiler.erase(annotated).to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return code


def _looks_like_plan(text: str) -> bool:
    head = text.lstrip()
    return head.startswith("{")


def cmd_render(args) -> int:
    source = _read(args.input)
    bindings = Bindings.from_json(_read(args.bindings))
    if _looks_like_plan(source):
        if args.mode == "dynamic":
            raise SystemExit2("dynamic mode needs a template, not a compiled plan")
        plan = compiler.plan_from_json(source)
        value, _ = compiler.execute_plan(plan, bindings)
        sys.stdout.write(value.text)
        return EXIT_OK
    ir, parse_diags = parse_template(source, args.input)
    if ir is None:
        _print_diags(parse_diags, args.strict)
        return EXIT_USAGE
    program = desugar(ir)
    machine = _machine_for(ir.tag, args.tables)
    if args.mode == "static":
        annotated = compiler.propagate(program, machine)
        code = _print_diags(parse_diags + annotated.diagnostics, args.strict)
        if code == EXIT_ERRORS:
            return EXIT_ERRORS
        value, _ = compiler.execute_plan(compiler.erase(annotated), bindings)
        sys.stdout.write(value.text)
        return code
    value, render_diags = render(program, bindings, machine)
    code = _print_diags(parse_diags + render_diags, args.strict)
    if code == EXIT_ERRORS:
        return EXIT_ERRORS
    sys.stdout.write(value.text)
    return code


def cmd_extract(args) -> int:
    source = _read(args.template)
    bindings = Bindings.from_json(_read(args.bindings))
    ir, diags = parse_template(source, args.template)
    if ir is None:
        _print_diags(diags, args.strict)
        return EXIT_USAGE
    program = desugar(ir)
    machine = _machine_for(ir.tag, args.tables)
    value, marks, render_diags = render_full(program, bindings, machine)
    _print_diags(diags + render_diags, False)
    bundle = i18n.extract_messages(value.text, marks)
    sys.stdout.write(i18n.bundle_to_json(bundle))
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strict", action="store_true",
                   help="treat warnings as errors")
    p.add_argument("--tables", metavar="DIR", default=None,
                   help="load transition table data files from DIR")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxesc",
        description="Contextual autoescaping template compiler and renderer.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and analyze a template; print diagnostics")
    p.add_argument("template")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compile", help="compile a template to a plan JSON document")
    p.add_argument("template")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="write the plan here instead of stdout")
    _add_common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("render", help="render a template or compiled plan with bindings")
    p.add_argument("input", help="template file or compiled plan JSON")
    p.add_argument("--bindings", required=True, metavar="PATH")
    p.add_argument("--mode", choices=("static", "dynamic"), default="static",
                   help="static executes a compiled plan; dynamic runs the context machine")
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("extract", help="extract the translatable message bundle")
    p.add_argument("template")
    p.add_argument("--bindings", required=True, metavar="PATH")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"ctxesc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RenderError as exc:
        pos = f"{exc.position}: " if exc.position else ""
        print(f"{pos}error: {exc.message}", file=sys.stderr)
        return EXIT_ERRORS
    except (TableError, PlanError) as exc:
        # bad table data or a malformed plan input file
        print(f"ctxesc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CompositionError as exc:
        print(f"ctxesc: error: {exc}", file=sys.stderr)
        return EXIT_ERRORS
    except (OSError, ValueError) as exc:
        print(f"ctxesc: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
