#!/usr/bin/env python3
"""Measure compiled-plan rendering against naive concatenation-with-escaping.

The plan executor should cost only the escaper functions plus appends; this
prints both timings and their ratio for a list template with N items.
"""

import argparse
import time

from ctxesc import machine as machine_mod
from ctxesc.compiler import compile_template, execute_plan
from ctxesc.escapers import escape_html_attr, escape_pcdata, filter_url_prefix
from ctxesc.runtime import Bindings

TEMPLATE = """tag: html
"<ul>
:for item of items {
"  <li><a href=${item.url}>${item.label}</a></li>
:}
"</ul>
"""


def naive(items):
    parts = ["<ul>\n"]
    append = parts.append
    for item in items:
        append('  <li><a href="')
        append(escape_html_attr(filter_url_prefix(item["url"])))
        append('">')
        append(escape_pcdata(item["label"]))
        append("</a></li>\n")
    append("</ul>\n")
    return "".join(parts)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", "--items", type=int, default=10_000)
    ap.add_argument("-r", "--repeat", type=int, default=5)
    args = ap.parse_args()

    plan, diags = compile_template(TEMPLATE)
    assert plan is not None, diags
    items = [{"url": f"https://example.com/item/{i}?q=a b",
              "label": f"label <{i}> & more"} for i in range(args.items)]
    bindings = Bindings({"items": items})

    execute_plan(plan, bindings)  # warm-up
    ops_before = machine_mod.transition_op_count()

    plan_best = min(_time(lambda: execute_plan(plan, bindings)) for _ in range(args.repeat))
    naive_best = min(_time(lambda: naive(items)) for _ in range(args.repeat))

    assert machine_mod.transition_op_count() == ops_before, "plan touched the machine"
    plan_out, _ = execute_plan(plan, bindings)
    assert plan_out.text == naive(items)

    print(f"items:        {args.items}")
    print(f"plan render:  {plan_best * 1e3:8.2f} ms")
    print(f"naive concat: {naive_best * 1e3:8.2f} ms")
    print(f"ratio:        {plan_best / naive_best:8.2f}x")
    print("transition-table operations during plan render: 0")


def _time(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


if __name__ == "__main__":
    main()
