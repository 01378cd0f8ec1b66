#!/usr/bin/env python3
"""Structure-preservation fuzz: drive adversarial plain-text values through
the fixed template corpus and check, with an independent HTML tokenizer,
that fixed-part token structure never changes and no dangerous URL scheme
appears."""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))

from support import (  # noqa: E402
    STRUCTURE_CORPUS,
    adversarial_values,
    corpus_bindings,
    dangerous_urls,
    tokenize_structure,
)

from ctxesc.compiler import compile_template, execute_plan  # noqa: E402
from ctxesc.runtime import Bindings  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", "--values", type=int, default=500,
                    help="adversarial values per template")
    ap.add_argument("-s", "--seed", type=lambda v: int(v, 0), default=0x5AFE)
    args = ap.parse_args()

    values = adversarial_values(args.values, args.seed)
    plans = []
    for source in STRUCTURE_CORPUS:
        plan, diags = compile_template(source)
        assert plan is not None, (source, [str(d) for d in diags])
        plans.append((source, plan))

    start = time.perf_counter()
    renders = 0
    for source, plan in plans:
        base, _ = execute_plan(plan, Bindings(corpus_bindings("x")))
        base_signature, _ = tokenize_structure(base.text)
        for value in values:
            out, _ = execute_plan(plan, Bindings(corpus_bindings(value)))
            signature, urls = tokenize_structure(out.text)
            if signature != base_signature:
                print(source)
                print("value:", repr(value))
                print("output:", repr(out.text))
                raise SystemExit("STRUCTURE CHANGED")
            bad = dangerous_urls(urls)
            if bad:
                print(source)
                print("value:", repr(value))
                raise SystemExit(f"DANGEROUS URL: {bad}")
            renders += 1
    elapsed = time.perf_counter() - start
    print(f"{renders} renders across {len(plans)} templates: structure "
          f"preserved, no dangerous schemes ({elapsed:.1f}s)")


if __name__ == "__main__":
    main()
