import logging

from fuzzdistill.dataset import BLOCK_KIND, FUNCTION_KIND, sanity_check_blocks
from fuzzdistill.features import (
    IdCounter,
    derive_label,
    extract_block_features,
    extract_function_features,
)
from fuzzdistill.graphs import build_callgraph, build_cfg, compute_dominators
from fuzzdistill.ir import parse_module
from fuzzdistill.pipeline import extract_rows, rows_to_table


def _function_record(module, name, label=0):
    fn = module.function(name)
    cfg = build_cfg(fn)
    dom = compute_dominators(cfg)
    cg = build_callgraph([module])
    return extract_function_features(module, fn, cfg, dom, cg, IdCounter(), label)


def test_s1_function_record(s1_module):
    record = _function_record(s1_module, "f")
    assert record.bbs == 4
    assert record.instructions == 5
    assert record.cond_branches == 1
    assert record.uncond_branches == 3
    assert record.num_loops == 0
    assert record.direct_calls == 0
    assert record.out_degree == 0


def test_s2_function_record(s2_module):
    record = _function_record(s2_module, "g")
    assert record.bbs == 3
    assert record.num_loops == 1


def test_single_ret_function_record():
    module = parse_module("define void @h() {\n  ret void\n}\n", "h.ll")
    record = _function_record(module, "h")
    assert record.bbs == 1
    assert record.instructions == 1
    assert record.static_allocs == record.dynamic_allocs == 0
    assert record.direct_calls == record.indirect_calls == 0


def test_s1_block_records(s1_module):
    fn = s1_module.function("f")
    cfg = build_cfg(fn)
    ids = IdCounter()
    records = {
        b.label: extract_block_features(s1_module, fn, b, cfg, ids, 0)
        for b in fn.blocks
    }
    entry = records["entry"]
    assert (entry.instructions, entry.cond_branches, entry.uncond_branches) == (2, 1, 0)
    assert entry.out_degree == 2
    end = records["end"]
    assert (end.cond_branches, end.uncond_branches, end.in_degree) == (0, 1, 2)
    for record in records.values():
        assert record.cond_branches * record.uncond_branches == 0
    assert records["entry"].block_name == "BB_0_f"
    assert records["end"].block_name == "BB_3_f"


def test_dynamic_allocs_counted_as_direct_calls():
    source = (
        "define void @h() {\n"
        "entry:\n"
        "  %p = call i8* @malloc(i64 8)\n"
        "  %q = call i8* @_Znwm(i64 8)\n"
        "  call void @llvm.memcpy.p0.p0.i64(i8* %p, i8* %q, i64 8, i1 false)\n"
        "  ret void\n"
        "}\n"
    )
    module = parse_module(source, "h.ll")
    record = _function_record(module, "h")
    assert record.dynamic_allocs == 2
    assert record.direct_calls == 2  # memops do not count as calls
    assert record.mem_ops == 1
    assert record.out_degree == 2


def test_function_sums_equal_block_sums(toy_modules):
    module_rows = extract_rows(toy_modules)
    fn_table = rows_to_table(module_rows, FUNCTION_KIND)
    blk_table = rows_to_table(module_rows, BLOCK_KIND)
    summable = [
        ("Instructions", "Instructions"),
        ("StaticAllocations", "StaticAllocations"),
        ("DynamicAllocations", "DynamicAllocations"),
        ("MemOps", "MemOps"),
        ("DirectCalls", "DirectCalls"),
        ("InDirectCalls", "InDirectCalls"),
        ("CondBranches", "CondBranches"),
        ("UnCondBranches", "UnCondBranches"),
    ]
    name_idx = blk_table.column_index("BlockName")
    per_function: dict[str, dict[str, int]] = {}
    for row in blk_table.rows:
        parent = row[name_idx].split("_", 2)[2]
        acc = per_function.setdefault(parent, {col: 0 for _, col in summable})
        for _, col in summable:
            acc[col] += row[blk_table.column_index(col)]
    fn_name_idx = fn_table.column_index("FunctionName")
    for row in fn_table.rows:
        acc = per_function[row[fn_name_idx]]
        for fn_col, blk_col in summable:
            assert row[fn_table.column_index(fn_col)] == acc[blk_col]


def test_block_invariants_hold_corpus_wide(toy_modules):
    blk_table = rows_to_table(extract_rows(toy_modules), BLOCK_KIND)
    assert sanity_check_blocks(blk_table).clean
    n_idx = blk_table.column_index("CondBranches")
    m_idx = blk_table.column_index("UnCondBranches")
    for row in blk_table.rows:
        assert row[n_idx] in (0, 1)
        assert row[m_idx] in (0, 1)
        assert row[n_idx] * row[m_idx] == 0
        assert row[blk_table.column_index("Instructions")] >= 1


def test_ids_strictly_increasing(toy_modules):
    fn_table = rows_to_table(extract_rows(toy_modules), FUNCTION_KIND)
    ids = fn_table.column("FunctionID")
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)
    assert ids[0] == 0


class TestDeriveLabel:
    def test_bad_marker(self):
        assert derive_label("CWE121_memcpy_01_bad") == 1

    def test_good_marker(self):
        assert derive_label("goodG2B") == 0

    def test_override_wins(self):
        assert derive_label("anything", override=1) == 1
        assert derive_label("bad_thing", override=0) == 0

    def test_both_markers_resolve_to_one(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert derive_label("bad_goodG2B") == 1
        assert "ambiguous" in caplog.text

    def test_no_marker_defaults_to_zero(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert derive_label("helper") == 0
        assert "no label marker" in caplog.text

    def test_case_sensitive(self):
        assert derive_label("BAD_thing") == 0  # uppercase marker does not match
