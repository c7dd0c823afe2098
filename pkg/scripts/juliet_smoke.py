#!/usr/bin/env python3
"""End-to-end smoke run over a user-supplied compiled corpus.

Point this at a directory tree of textual IR (.ll) files compiled from a
labeled test-case suite (e.g. NIST Juliet 1.3 built with -S -emit-llvm).
It extracts both feature granularities, assembles datasets, trains both
model families, and prints held-out metrics. No expected values are
asserted: published numbers depend on the exact corpus build.

Usage:
    python scripts/juliet_smoke.py /path/to/ll-tree --out-dir smoke_out
"""

import argparse
import sys
from pathlib import Path

from fuzzdistill.cli import main as cli_main


def run(argv: list[str]) -> int:
    code = cli_main(argv)
    if code != 0:
        print(f"step failed ({code}): fuzzdistill {' '.join(argv)}", file=sys.stderr)
    return code


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("corpus", help="directory tree containing .ll files")
    parser.add_argument("--out-dir", default="smoke_out")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"not a directory: {corpus}", file=sys.stderr)
        return 1
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    for kind in ("function", "block"):
        fragments = out / f"{kind}_fragments"
        dataset = out / f"{kind}_features.ssv"
        if run(["extract", str(corpus), "--out-dir", str(fragments), "--kind", kind]):
            return 1
        if run(["assemble", "--fragments", str(fragments), "--out", str(dataset),
                "--kind", kind]):
            return 1
        for model_kind in ("gbdt", "mlp"):
            print(f"\n=== {model_kind} on {kind} features ===")
            code = run([
                "train", "--dataset", str(dataset), "--kind", kind,
                "--model", model_kind,
                "--out", str(out / f"{model_kind}_{kind}.json"),
                "--report-dir", str(out / f"{model_kind}_{kind}_report"),
                "--seed", str(args.seed),
            ])
            if code:
                return 1
    print(f"\nall artifacts under {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
