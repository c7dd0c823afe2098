"""Corpus-level extraction driver: parsed modules in, feature rows out.

The call graph spans the whole corpus handed in, so cross-module call
traffic contributes to function in-degrees; ids increase across the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import (
    BLOCK_HEADER,
    BLOCK_KIND,
    FUNCTION_HEADER,
    FUNCTION_KIND,
    FeatureTable,
    sanitize_name,
)
from .features import (
    IdCounter,
    derive_label,
    extract_block_features,
    extract_function_features,
)
from .graphs import build_callgraph, build_cfg, compute_dominators
from .ir import DEFAULT_CONFIG, ExtractionConfig, IrModule


@dataclass
class ModuleRows:
    source_path: str
    function_rows: list[list] = field(default_factory=list)
    block_rows: list[list] = field(default_factory=list)


def extract_rows(
    modules: list[IrModule],
    config: ExtractionConfig = DEFAULT_CONFIG,
    label_override: int | None = None,
) -> list[ModuleRows]:
    callgraph = build_callgraph(modules)
    fn_ids = IdCounter()
    block_ids = IdCounter()
    results = []
    for module in modules:
        rows = ModuleRows(source_path=module.source_path)
        for fn in module.functions:
            cfg = build_cfg(fn)
            dom = compute_dominators(cfg)
            label = derive_label(fn.name, label_override)
            record = extract_function_features(
                module, fn, cfg, dom, callgraph, fn_ids, label, config
            )
            record.function_name = sanitize_name(record.function_name)
            rows.function_rows.append(record.to_row())
            for block in fn.blocks:
                block_record = extract_block_features(
                    module, fn, block, cfg, block_ids, label, config
                )
                block_record.block_name = sanitize_name(block_record.block_name)
                rows.block_rows.append(block_record.to_row())
        results.append(rows)
    return results


def rows_to_table(module_rows: list[ModuleRows], kind: str) -> FeatureTable:
    if kind == FUNCTION_KIND:
        rows = [row for m in module_rows for row in m.function_rows]
        return FeatureTable(header=FUNCTION_HEADER, rows=rows, kind=kind)
    rows = [row for m in module_rows for row in m.block_rows]
    return FeatureTable(header=BLOCK_HEADER, rows=rows, kind=BLOCK_KIND)
