import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzdistill import ir
from tests.conftest import S1, S2


def test_s1_structure(s1_module):
    assert len(s1_module.functions) == 1
    fn = s1_module.function("f")
    assert [b.label for b in fn.blocks] == ["entry", "then", "else", "end"]
    assert sum(len(b.instructions) for b in fn.blocks) == 5


def test_empty_source_is_empty_module():
    module = ir.parse_module("", "empty.ll")
    assert module.functions == []


def test_s2_structure(s2_module):
    fn = s2_module.function("g")
    assert len(fn.blocks) == 3
    loop = fn.blocks[1]
    assert loop.label == "loop"
    assert loop.terminator.kind == ir.COND_BRANCH


def test_parse_is_idempotent_on_boundaries():
    assert ir.parse_module(S1, "a.ll") == ir.parse_module(S1, "a.ll")
    assert ir.parse_module(S2, "b.ll") == ir.parse_module(S2, "b.ll")


def test_blocks_partition_instructions(s1_module):
    fn = s1_module.function("f")
    for block in fn.blocks:
        terminators = [i for i in block.instructions if i.is_terminator]
        assert terminators == [block.instructions[-1]]


def test_declare_registers_global_only():
    module = ir.parse_module("declare i8* @malloc(i64)\n", "d.ll")
    assert module.functions == []
    assert "malloc" in module.global_names


def test_implicit_entry_label_synthesized():
    source = "define void @h() {\n  ret void\n}\n"
    fn = ir.parse_module(source, "h.ll").function("h")
    assert fn.blocks[0].label == "entry"
    assert fn.blocks[0].ordinal == 0


def test_unbalanced_body_reports_line():
    source = "\ndefine void @h() {\n  ret void\n"
    with pytest.raises(ir.UnbalancedBodyError) as exc:
        ir.parse_module(source, "bad.ll")
    assert exc.value.line == 2


def test_malformed_terminator_reports_line():
    source = "define void @h() {\nentry:\n  %v = add i32 1, 2\n}\n"
    with pytest.raises(ir.MalformedTerminatorError) as exc:
        ir.parse_module(source, "bad.ll")
    assert exc.value.line == 3


def test_terminator_mid_block_rejected():
    source = "define void @h() {\nentry:\n  ret void\n  %v = add i32 1, 2\n}\n"
    with pytest.raises(ir.MalformedTerminatorError):
        ir.parse_module(source, "bad.ll")


class TestClassify:
    def test_cond_branch(self):
        instr = ir.classify_instruction("br i1 %c, label %a, label %b")
        assert instr.kind == ir.COND_BRANCH
        assert instr.targets == ("a", "b")

    def test_uncond_branch(self):
        instr = ir.classify_instruction("br label %next")
        assert instr.kind == ir.UNCOND_BRANCH
        assert instr.targets == ("next",)

    def test_switch_collects_default_and_cases(self):
        instr = ir.classify_instruction(
            "switch i32 %v, label %default [ i32 0, label %a i32 1, label %b ]"
        )
        assert instr.kind == ir.SWITCH
        assert set(instr.targets) == {"default", "a", "b"}

    def test_memcpy_intrinsic_is_memop(self):
        instr = ir.classify_instruction(
            "call void @llvm.memcpy.p0.p0.i64(i8* %d, i8* %s, i64 8, i1 false)"
        )
        assert instr.kind == ir.MEMOP
        assert instr.intrinsic_name == "llvm.memcpy"

    def test_plain_strcpy_is_memop(self):
        instr = ir.classify_instruction("%r = call i8* @strcpy(i8* %d, i8* %s)")
        assert instr.kind == ir.MEMOP
        assert instr.intrinsic_name == "strcpy"

    def test_indirect_call(self):
        instr = ir.classify_instruction("%r = call i32 %fp(i32 1)")
        assert instr.kind == ir.CALL
        assert instr.callee.is_indirect

    def test_direct_call_with_global_args(self):
        instr = ir.classify_instruction(
            "%r = call i32 @printf(i8* getelementptr (@.str, i64 0))"
        )
        assert instr.callee.symbol == "printf"

    def test_vararg_function_type_callee(self):
        instr = ir.classify_instruction("%r = call i32 (i8*, ...) @printf(i8* %s)")
        assert instr.kind == ir.CALL
        assert instr.callee.symbol == "printf"

    def test_alloca(self):
        assert ir.classify_instruction("%p = alloca i32, align 4").kind == ir.ALLOCA

    def test_ret_and_unreachable(self):
        assert ir.classify_instruction("ret i32 0").kind == ir.RETURN
        assert ir.classify_instruction("unreachable").kind == ir.UNREACHABLE

    def test_invoke_is_call_with_targets(self):
        instr = ir.classify_instruction(
            "invoke void @may_throw() to label %ok unwind label %err"
        )
        assert instr.kind == ir.CALL
        assert instr.callee.symbol == "may_throw"
        assert instr.targets == ("ok", "err")
        assert instr.is_terminator

    def test_unknown_becomes_other(self):
        instr = ir.classify_instruction("%v = fancyop i32 %a, %b")
        assert instr.kind == ir.OTHER
        assert instr.opcode == "fancyop"

    @given(st.text(alphabet=st.characters(codec="ascii"), max_size=120))
    def test_total_and_deterministic(self, line):
        first = ir.classify_instruction(line)
        second = ir.classify_instruction(line)
        assert first.kind == second.kind
        assert first.targets == second.targets


def test_invoke_spanning_two_lines():
    source = (
        "define void @h() {\n"
        "entry:\n"
        "  invoke void @may_throw()\n"
        "          to label %ok unwind label %err\n"
        "ok:\n"
        "  ret void\n"
        "err:\n"
        "  ret void\n"
        "}\n"
    )
    fn = ir.parse_module(source, "inv.ll").function("h")
    assert len(fn.blocks) == 3
    assert fn.blocks[0].terminator.targets == ("ok", "err")


def test_normalize_name_identity_default():
    assert ir.normalize_name("main") == "main"
    assert ir.normalize_name("_ZN3fooC2Ev") == "_ZN3fooC2Ev"
    # label markers stay detectable through the identity transform
    assert "bad" in ir.normalize_name("_Z8CWE121_badv")


def test_normalize_name_honors_hook():
    config = ir.ExtractionConfig(name_transform=str.upper)
    assert ir.normalize_name("main", config) == "MAIN"


def test_custom_memop_list():
    config = ir.ExtractionConfig.from_dict({"memop_symbols": ["copy_all"], "memop_prefixes": []})
    assert ir.classify_instruction("call void @copy_all()", config).kind == ir.MEMOP
    assert ir.classify_instruction("call void @memcpy()", config).kind == ir.CALL
