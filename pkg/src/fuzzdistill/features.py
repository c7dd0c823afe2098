"""Per-block and per-function feature records plus training-label derivation.

Block-level branch flags obey a structural constraint used as a dataset
sanity check: a block terminator is either conditional (N=1) or
unconditional (M=1) but never both, so N,M are 0/1 and N*M = 0.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from . import ir
from .graphs import CallGraph, Cfg, DomTree, count_natural_loops

logger = logging.getLogger(__name__)


class IdCounter:
    """Run-scoped monotone id source, safe to share across threads."""

    def __init__(self, start: int = 0):
        self._next = start
        self._lock = threading.Lock()

    def take(self) -> int:
        with self._lock:
            value = self._next
            self._next += 1
            return value


@dataclass
class BlockFeatures:
    block_id: int
    block_name: str
    instructions: int
    in_degree: int
    out_degree: int
    static_allocs: int
    dynamic_allocs: int
    mem_ops: int
    cond_branches: int
    uncond_branches: int
    direct_calls: int
    indirect_calls: int
    vulnerable: int

    def to_row(self) -> list:
        return [
            self.block_id, self.block_name, self.instructions, self.in_degree,
            self.out_degree, self.static_allocs, self.dynamic_allocs, self.mem_ops,
            self.cond_branches, self.uncond_branches, self.direct_calls,
            self.indirect_calls, self.vulnerable,
        ]


@dataclass
class FunctionFeatures:
    function_id: int
    function_name: str
    instructions: int
    bbs: int
    in_degree: int
    out_degree: int
    num_loops: int
    static_allocs: int
    dynamic_allocs: int
    mem_ops: int
    cond_branches: int
    uncond_branches: int
    direct_calls: int
    indirect_calls: int
    vulnerable: int

    def to_row(self) -> list:
        return [
            self.function_id, self.function_name, self.instructions, self.bbs,
            self.in_degree, self.out_degree, self.num_loops, self.static_allocs,
            self.dynamic_allocs, self.mem_ops, self.cond_branches,
            self.uncond_branches, self.direct_calls, self.indirect_calls,
            self.vulnerable,
        ]


def derive_label(function_name: str, override: int | None = None) -> int:
    """Label from Juliet-style name markers: `bad` -> 1, `good` -> 0.

    Both markers present is reported but resolved to 1; neither marker
    yields 0 with a warning. An explicit override wins unconditionally.
    """
    if override is not None:
        return int(override)
    has_bad = "bad" in function_name
    has_good = "good" in function_name
    if has_bad and has_good:
        logger.warning("ambiguous label markers in %r; labelling 1", function_name)
        return 1
    if has_bad:
        return 1
    if has_good:
        return 0
    logger.warning("no label marker in %r; defaulting to 0", function_name)
    return 0


def _block_counts(block: ir.IrBlock, config: ir.ExtractionConfig) -> dict[str, int]:
    static_allocs = 0
    dynamic_allocs = 0
    mem_ops = 0
    direct_calls = 0
    indirect_calls = 0
    for instr in block.instructions:
        if instr.kind == ir.ALLOCA:
            static_allocs += 1
        elif instr.kind == ir.MEMOP:
            mem_ops += 1
        elif instr.kind == ir.CALL and instr.callee is not None:
            if instr.callee.is_indirect:
                indirect_calls += 1
            else:
                direct_calls += 1
                if config.is_dynalloc_symbol(instr.callee.symbol):
                    dynamic_allocs += 1
    term = block.terminator
    cond = 1 if term.kind in (ir.COND_BRANCH, ir.SWITCH) else 0
    uncond = 1 if term.kind in (ir.UNCOND_BRANCH, ir.RETURN) else 0
    return {
        "instructions": len(block.instructions),
        "static_allocs": static_allocs,
        "dynamic_allocs": dynamic_allocs,
        "mem_ops": mem_ops,
        "cond_branches": cond,
        "uncond_branches": uncond,
        "direct_calls": direct_calls,
        "indirect_calls": indirect_calls,
    }


def extract_block_features(
    module: ir.IrModule,
    fn: ir.IrFunction,
    block: ir.IrBlock,
    cfg: Cfg,
    id_counter: IdCounter,
    label: int,
    config: ir.ExtractionConfig = ir.DEFAULT_CONFIG,
) -> BlockFeatures:
    counts = _block_counts(block, config)
    return BlockFeatures(
        block_id=id_counter.take(),
        block_name=f"BB_{block.ordinal}_{fn.normalized_name}",
        in_degree=cfg.in_degree(block.label),
        out_degree=cfg.out_degree(block.label),
        vulnerable=label,
        **counts,
    )


def extract_function_features(
    module: ir.IrModule,
    fn: ir.IrFunction,
    cfg: Cfg,
    dom: DomTree,
    cg: CallGraph,
    id_counter: IdCounter,
    label: int,
    config: ir.ExtractionConfig = ir.DEFAULT_CONFIG,
) -> FunctionFeatures:
    totals = {
        "instructions": 0, "static_allocs": 0, "dynamic_allocs": 0, "mem_ops": 0,
        "cond_branches": 0, "uncond_branches": 0, "direct_calls": 0,
        "indirect_calls": 0,
    }
    for block in fn.blocks:
        for key, value in _block_counts(block, config).items():
            totals[key] += value
    return FunctionFeatures(
        function_id=id_counter.take(),
        function_name=fn.normalized_name,
        bbs=len(fn.blocks),
        in_degree=cg.in_degree(fn.name),
        out_degree=totals["direct_calls"] + totals["indirect_calls"],
        num_loops=count_natural_loops(cfg, dom),
        vulnerable=label,
        **totals,
    )
