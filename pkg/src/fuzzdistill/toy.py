"""Synthetic labeled corpora for end-to-end tests and demos.

Real training data comes from user-compiled test suites; these generators
stand in where such a corpus cannot ship: a small labeled IR corpus with
injected density differences between `bad` and `good` variants, and a
separable feature table shaped like the real extraction output.
"""

from __future__ import annotations

import random
from pathlib import Path

from .dataset import BLOCK_HEADER, FUNCTION_HEADER, FeatureTable


def _function_ir(
    name: str,
    rng: random.Random,
    allocas: int,
    mallocs: int,
    memops: int,
    loops: int,
    callees: list[str],
    indirect_calls: int,
) -> str:
    lines = [f"define i32 @{name}(i32 %x) {{", "entry:"]
    reg = 0

    def fresh() -> str:
        nonlocal reg
        reg += 1
        return f"%v{reg}"

    for _ in range(allocas):
        lines.append(f"  {fresh()} = alloca i32, align 4")
    for _ in range(mallocs):
        lines.append(f"  {fresh()} = call i8* @malloc(i64 32)")
    for _ in range(memops):
        lines.append(
            "  call void @llvm.memcpy.p0.p0.i64(i8* %x1, i8* %x2, i64 16, i1 false)"
        )
    for callee in callees:
        lines.append(f"  {fresh()} = call i32 @{callee}(i32 %x)")
    for _ in range(indirect_calls):
        lines.append(f"  {fresh()} = call i32 %fptr(i32 %x)")
    cond = fresh()
    lines.append(f"  {cond} = icmp sgt i32 %x, {rng.randint(0, 9)}")
    lines.append(f"  br i1 {cond}, label %then, label %else")
    lines.append("then:")
    lines.append("  br label %loop0" if loops else "  br label %end")
    for i in range(loops):
        tail = f"loop{i + 1}" if i + 1 < loops else "end"
        lines.append(f"loop{i}:")
        lines.append(f"  %lc{i} = icmp slt i32 %x, {10 + i}")
        lines.append(f"  br i1 %lc{i}, label %loop{i}, label %{tail}")
    lines.append("else:")
    lines.append("  br label %end")
    lines.append("end:")
    lines.append("  ret i32 0")
    lines.append("}")
    return "\n".join(lines)


_DECLARATIONS = """declare i8* @malloc(i64)
declare void @llvm.memcpy.p0.p0.i64(i8*, i8*, i64, i1)
declare i32 @external_sink(i32)
"""


def generate_toy_corpus(
    out_dir: str | Path, pairs: int = 100, seed: int = 42
) -> list[Path]:
    """Write `pairs` files, each holding one `bad` and one `good` variant.

    Bad variants carry denser allocation/memop/loop profiles and more call
    traffic, so extracted datasets are learnable but not trivial.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    paths = []
    names = [f"case_{i:04d}" for i in range(pairs)]
    for i, case in enumerate(names):
        cross = [f"{names[(i + 1) % pairs]}_bad"] if pairs > 1 and rng.random() < 0.6 else []
        bad = _function_ir(
            f"{case}_bad",
            rng,
            allocas=rng.randint(4, 9),
            mallocs=rng.randint(2, 5),
            memops=rng.randint(1, 4),
            loops=rng.randint(1, 2),
            callees=["external_sink"] * rng.randint(1, 3) + cross,
            indirect_calls=rng.randint(0, 2),
        )
        good = _function_ir(
            f"{case}_good",
            rng,
            allocas=rng.randint(0, 2),
            mallocs=0,
            memops=0,
            loops=rng.randint(0, 1),
            callees=["external_sink"] if rng.random() < 0.3 else [],
            indirect_calls=0,
        )
        path = out / f"{case}.ll"
        path.write_text(_DECLARATIONS + "\n" + bad + "\n\n" + good + "\n")
        paths.append(path)
    return paths


def make_separable_table(
    n_rows: int, kind: str = "function", seed: int = 42
) -> FeatureTable:
    """Feature table with the production column set whose two classes are
    cleanly separated in several count columns."""
    rng = random.Random(seed)
    rows = []
    for i in range(n_rows):
        label = i % 2
        if label == 1:
            in_degree = rng.randint(6, 14)
            static_allocs = rng.randint(5, 12)
            dynamic_allocs = rng.randint(3, 8)
            mem_ops = rng.randint(2, 6)
            direct_calls = rng.randint(3, 8)
            loops = rng.randint(1, 3)
        else:
            in_degree = rng.randint(0, 2)
            static_allocs = rng.randint(0, 2)
            dynamic_allocs = rng.randint(0, 1)
            mem_ops = rng.randint(0, 1)
            direct_calls = rng.randint(0, 2)
            loops = 0
        bbs = rng.randint(1, 6) + 2 * loops
        instructions = bbs + static_allocs + dynamic_allocs + mem_ops + direct_calls + rng.randint(1, 10)
        cond = rng.randint(0, bbs // 2)
        uncond = bbs - cond if bbs > cond else 0
        if kind == "function":
            rows.append([
                i, f"fn_{'bad' if label else 'good'}_{i}", instructions, bbs,
                in_degree, direct_calls, loops, static_allocs, dynamic_allocs,
                mem_ops, cond, uncond, direct_calls, 0, label,
            ])
        else:
            term_cond = rng.randint(0, 1)
            rows.append([
                i, f"BB_0_fn_{'bad' if label else 'good'}_{i}", instructions,
                in_degree, direct_calls, static_allocs, dynamic_allocs, mem_ops,
                term_cond, 1 - term_cond, direct_calls, 0, label,
            ])
    header = FUNCTION_HEADER if kind == "function" else BLOCK_HEADER
    return FeatureTable(header=header, rows=rows, kind=kind)
