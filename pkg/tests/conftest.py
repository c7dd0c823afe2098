import pytest

from fuzzdistill.ir import parse_module

S1 = """\
define i32 @f(i32 %x) {
entry:
  %c = icmp sgt i32 %x, 0
  br i1 %c, label %then, label %else
then:
  br label %end
else:
  br label %end
end:
  ret i32 0
}
"""

S2 = """\
define void @g() {
entry:
  br label %loop
loop:
  br i1 true, label %loop, label %exit
exit:
  ret void
}
"""


@pytest.fixture
def s1_module():
    return parse_module(S1, "s1.ll")


@pytest.fixture
def s2_module():
    return parse_module(S2, "s2.ll")


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    from fuzzdistill.toy import generate_toy_corpus

    root = tmp_path_factory.mktemp("toy_corpus")
    generate_toy_corpus(root, pairs=100, seed=7)
    return root


@pytest.fixture(scope="session")
def toy_modules(toy_corpus):
    return [
        parse_module(path.read_text(), source_path=str(path))
        for path in sorted(toy_corpus.glob("*.ll"))
    ]


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory):
    """Small trained models of both families for the service tests."""
    from fuzzdistill import dnn, gbdt
    from fuzzdistill.dataset import apply_feature_profile, get_profile
    from fuzzdistill.toy import make_separable_table

    root = tmp_path_factory.mktemp("models")
    fn_table = apply_feature_profile(
        make_separable_table(120, "function", seed=1), get_profile("function-default")
    )
    bb_table = apply_feature_profile(
        make_separable_table(120, "block", seed=2), get_profile("block-default")
    )
    gbdt_config = gbdt.GbdtConfig(n_estimators=15, max_depth=3)
    mlp_config = dnn.MlpConfig(hidden_units=(16, 8), max_epochs=6, seed=5)
    (root / "gbdtfn.json").write_bytes(gbdt.save_model(gbdt.train_gbdt(fn_table, gbdt_config)))
    (root / "gbdtbb.json").write_bytes(gbdt.save_model(gbdt.train_gbdt(bb_table, gbdt_config)))
    (root / "dnnfn.json").write_bytes(dnn.save_model(dnn.train_mlp(fn_table, mlp_config)[0]))
    (root / "dnnbb.json").write_bytes(dnn.save_model(dnn.train_mlp(bb_table, mlp_config)[0]))
    return root
