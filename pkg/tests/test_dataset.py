import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzzdistill import dataset
from fuzzdistill.dataset import (
    BLOCK_HEADER,
    BLOCK_KIND,
    FUNCTION_HEADER,
    FUNCTION_KIND,
    DegenerateClassError,
    FeatureTable,
    HeaderMismatchError,
    IllegalCellError,
    RaggedRowError,
    UnknownColumnError,
    apply_feature_profile,
    assemble_corpus,
    get_profile,
    read_table,
    sanity_check_blocks,
    stratified_split,
    write_ssv,
)


def make_function_table(rows=None):
    rows = rows if rows is not None else [
        [0, "fn_a", 10, 3, 1, 2, 0, 1, 0, 0, 1, 2, 2, 0, 1],
        [1, "fn_b", 5, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0],
    ]
    return FeatureTable(header=FUNCTION_HEADER, rows=rows, kind=FUNCTION_KIND)


def make_block_table(rows):
    return FeatureTable(header=BLOCK_HEADER, rows=rows, kind=BLOCK_KIND)


def test_write_ssv_shape():
    table = make_function_table(rows=[[0, "fn_a", 10, 3, 1, 2, 0, 1, 0, 0, 1, 2, 2, 0, 1]])
    text = write_ssv(table, with_header=True)
    lines = text.splitlines()
    assert len(lines) == 2
    assert all(len(line.split(";")) == 15 for line in lines)


def test_write_ssv_empty_no_header():
    table = make_function_table(rows=[])
    assert write_ssv(table, with_header=False) == ""


def test_block_header_spelling():
    table = make_block_table([])
    text = write_ssv(table, with_header=True)
    assert text.startswith("BlockID;BlockName;")


def test_illegal_cell_rejected():
    table = make_function_table(rows=[[0, "fn;evil", 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0]])
    with pytest.raises(IllegalCellError):
        write_ssv(table)


def test_round_trip_identity():
    table = make_function_table()
    text = write_ssv(table, with_header=True)
    parsed = read_table(text, FUNCTION_KIND)
    assert parsed == table
    assert write_ssv(parsed, with_header=True) == text


def test_comma_separated_upload_parses_identically():
    table = make_function_table()
    ssv = write_ssv(table, with_header=True)
    csv = ssv.replace(";", ",")
    assert read_table(csv, FUNCTION_KIND) == table


def test_missing_feature_column_is_header_mismatch():
    header = [c for c in FUNCTION_HEADER if c != "InDegree"]
    text = ";".join(header) + "\n"
    with pytest.raises(HeaderMismatchError):
        read_table(text, FUNCTION_KIND)


def test_missing_label_column_allowed_only_when_requested():
    header = ";".join(FUNCTION_HEADER[:-1])
    text = header + "\n" + ";".join(["0", "fn_a"] + ["1"] * 12) + "\n"
    with pytest.raises(HeaderMismatchError):
        read_table(text, FUNCTION_KIND)
    table = read_table(text, FUNCTION_KIND, allow_missing_label=True)
    assert not table.has_label


def test_ragged_row_reports_line():
    text = write_ssv(make_function_table()) + "1;2;3\n"
    with pytest.raises(RaggedRowError) as exc:
        read_table(text, FUNCTION_KIND)
    assert exc.value.line_no == 4


def test_non_numeric_cell_rejected():
    rows = [[0, "fn_a", "ten", 3, 1, 2, 0, 1, 0, 0, 1, 2, 2, 0, 1]]
    text = write_ssv(make_function_table(rows))
    with pytest.raises(dataset.NonNumericCellError):
        read_table(text, FUNCTION_KIND)


class TestAssemble:
    def write_fragments(self, root, order):
        rows = {
            "a": "0;fn_a;5;1;0;0;0;0;0;0;0;1;0;0;1\n1;fn_b;5;1;0;0;0;0;0;0;0;1;0;0;0\n",
            "b": "2;fn_c;5;1;0;0;0;0;0;0;0;1;0;0;1\n3;fn_d;5;1;0;0;0;0;0;0;0;1;0;0;0\n",
            "c": "4;fn_e;5;1;0;0;0;0;0;0;0;1;0;0;1\n5;fn_f;5;1;0;0;0;0;0;0;0;1;0;0;0\n",
        }
        for name in order:
            (root / f"{name}.ssv").write_text(rows[name])

    def test_concatenation(self, tmp_path):
        self.write_fragments(tmp_path, ["a", "b", "c"])
        table = assemble_corpus(tmp_path, FUNCTION_KIND)
        assert len(table.rows) == 6
        assert table.header == FUNCTION_HEADER

    def test_empty_directory(self, tmp_path):
        table = assemble_corpus(tmp_path, FUNCTION_KIND)
        assert table.rows == []
        assert table.header == FUNCTION_HEADER

    def test_order_invariance(self, tmp_path):
        first = tmp_path / "one"
        second = tmp_path / "two"
        first.mkdir()
        second.mkdir()
        self.write_fragments(first, ["c", "a", "b"])
        self.write_fragments(second, ["a", "b", "c"])
        bytes_first = write_ssv(assemble_corpus(first, FUNCTION_KIND))
        bytes_second = write_ssv(assemble_corpus(second, FUNCTION_KIND))
        assert bytes_first == bytes_second

    def test_ragged_fragment_attributed(self, tmp_path):
        (tmp_path / "bad.ssv").write_text("1;2;3\n")
        with pytest.raises(RaggedRowError) as exc:
            assemble_corpus(tmp_path, FUNCTION_KIND)
        assert "bad.ssv" in str(exc.value)


class TestProfiles:
    def test_function_default_keeps_twelve_columns(self):
        table = apply_feature_profile(make_function_table(), get_profile("function-default"))
        assert len(table.header) == 12
        assert "VULNERABLE" in table.header
        assert "FunctionName" not in table.header
        assert "InDirectCalls" not in table.header

    def test_function_nomem_also_drops_memops(self):
        table = apply_feature_profile(make_function_table(), get_profile("function-nomem"))
        assert len(table.header) == 11
        assert "MemOps" not in table.header

    def test_block_default_drops_six_columns(self):
        block = make_block_table([[0, "BB_0_f", 2, 0, 2, 0, 0, 0, 1, 0, 0, 0, 1]])
        table = apply_feature_profile(block, get_profile("block-default"))
        assert len(table.header) == len(BLOCK_HEADER) - 6
        assert set(table.header) == {
            "Instructions", "InDegree", "OutDegree", "StaticAllocations",
            "DynamicAllocations", "DirectCalls", "VULNERABLE",
        }

    def test_empty_profile_identity(self):
        table = make_function_table()
        assert apply_feature_profile(table, get_profile("none")) == table

    def test_unknown_column_rejected(self):
        profile = dataset.FeatureProfile("odd", frozenset({"NoSuchColumn"}))
        with pytest.raises(UnknownColumnError):
            apply_feature_profile(make_function_table(), profile)


class TestSanityCheck:
    def row(self, n, m):
        return [0, "BB_0_f", 2, 0, 2, 0, 0, 0, n, m, 0, 0, 1]

    def test_clean_row(self):
        assert sanity_check_blocks(make_block_table([self.row(1, 0)])).clean

    def test_both_set_violates(self):
        report = sanity_check_blocks(make_block_table([self.row(1, 1)]))
        assert [i for i, _ in report.violations] == [0]

    def test_out_of_range_violates(self):
        report = sanity_check_blocks(make_block_table([self.row(2, 0)]))
        assert not report.clean


class TestStratifiedSplit:
    def balanced_table(self, n_pos, n_neg):
        rows = []
        for i in range(n_pos + n_neg):
            label = 1 if i < n_pos else 0
            rows.append([i, f"fn_{i}", 5, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, label])
        return make_function_table(rows)

    def test_proportions_60_40(self):
        table = self.balanced_table(60, 40)
        train, test = stratified_split(table, 0.2, seed=42)
        assert len(test.rows) == 20
        assert sum(test.labels()) == 12
        assert len(train.rows) == 80
        assert sum(train.labels()) == 48

    def test_deterministic(self):
        table = self.balanced_table(30, 30)
        first = stratified_split(table, 0.2, seed=42)
        second = stratified_split(table, 0.2, seed=42)
        assert first[0] == second[0]
        assert first[1] == second[1]

    def test_disjoint_exhaustive(self):
        table = self.balanced_table(25, 35)
        train, test = stratified_split(table, 0.3, seed=1)
        train_ids = {row[0] for row in train.rows}
        test_ids = {row[0] for row in test.rows}
        assert not train_ids & test_ids
        assert len(train_ids | test_ids) == 60

    def test_extreme_fraction_keeps_one_train_row_per_class(self):
        table = self.balanced_table(5, 5)
        train, test = stratified_split(table, 0.999, seed=3)
        assert sum(train.labels()) == 1
        assert len(train.rows) == 2

    def test_degenerate_class_rejected(self):
        rows = [[i, f"fn_{i}", 5, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1] for i in range(4)]
        with pytest.raises(DegenerateClassError):
            stratified_split(make_function_table(rows), 0.5)


@settings(max_examples=30)
@given(
    n_pos=st.integers(min_value=2, max_value=40),
    n_neg=st.integers(min_value=2, max_value=40),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_split_proportions_within_one_row(n_pos, n_neg, seed):
    rows = []
    for i in range(n_pos + n_neg):
        label = 1 if i < n_pos else 0
        rows.append([i, f"fn_{i}", 5, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, label])
    table = FeatureTable(FUNCTION_HEADER, rows, FUNCTION_KIND)
    train, test = stratified_split(table, 0.25, seed=seed)
    assert abs(sum(test.labels()) - 0.25 * n_pos) <= 1
    assert abs((len(test.rows) - sum(test.labels())) - 0.25 * n_neg) <= 1
    assert len(train.rows) + len(test.rows) == n_pos + n_neg
