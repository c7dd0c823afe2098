"""Semicolon-separated feature tables: serialization, corpus assembly,
feature-selection profiles, sanity checks and splitting."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

FUNCTION_KIND = "function"
BLOCK_KIND = "block"

FUNCTION_HEADER = (
    "FunctionID", "FunctionName", "Instructions", "BBs", "InDegree", "OutDegree",
    "NumLoops", "StaticAllocations", "DynamicAllocations", "MemOps", "CondBranches",
    "UnCondBranches", "DirectCalls", "InDirectCalls", "VULNERABLE",
)
BLOCK_HEADER = (
    "BlockID", "BlockName", "Instructions", "InDegree", "OutDegree",
    "StaticAllocations", "DynamicAllocations", "MemOps", "CondBranches",
    "UnCondBranches", "DirectCalls", "InDirectCalls", "VULNERABLE",
)
CANONICAL_HEADERS = {FUNCTION_KIND: FUNCTION_HEADER, BLOCK_KIND: BLOCK_HEADER}
LABEL_COLUMN = "VULNERABLE"
NAME_COLUMNS = {"FunctionName", "BlockName"}


class TableError(Exception):
    pass


class IllegalCellError(TableError):
    pass


class HeaderMismatchError(TableError):
    pass


class RaggedRowError(TableError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NonNumericCellError(TableError):
    pass


class UnknownColumnError(TableError):
    pass


class DegenerateClassError(TableError):
    pass


@dataclass
class FeatureTable:
    header: tuple[str, ...]
    rows: list[list]
    kind: str

    def __post_init__(self):
        self.header = tuple(self.header)
        for row in self.rows:
            if len(row) != len(self.header):
                raise RaggedRowError(
                    f"row has {len(row)} cells, header has {len(self.header)}", 0
                )

    def column_index(self, name: str) -> int:
        try:
            return self.header.index(name)
        except ValueError:
            raise UnknownColumnError(name) from None

    def column(self, name: str) -> list:
        idx = self.column_index(name)
        return [row[idx] for row in self.rows]

    @property
    def has_label(self) -> bool:
        return LABEL_COLUMN in self.header

    def labels(self) -> list[int]:
        return [int(v) for v in self.column(LABEL_COLUMN)]

    def feature_columns(self) -> list[str]:
        return [c for c in self.header if c != LABEL_COLUMN and c not in NAME_COLUMNS
                and not c.endswith("ID")]

    def select_rows(self, indices: list[int]) -> "FeatureTable":
        return FeatureTable(self.header, [list(self.rows[i]) for i in indices], self.kind)


@dataclass(frozen=True)
class FeatureProfile:
    name: str
    dropped_columns: frozenset[str] = field(default_factory=frozenset)


# Built-in feature-selection profiles: id/name columns never help, and the
# block-level branch flags are sanity checks rather than signal.
BUILTIN_PROFILES = {
    "none": FeatureProfile("none"),
    "function-default": FeatureProfile(
        "function-default", frozenset({"FunctionID", "FunctionName", "InDirectCalls"})
    ),
    "function-nomem": FeatureProfile(
        "function-nomem",
        frozenset({"FunctionID", "FunctionName", "InDirectCalls", "MemOps"}),
    ),
    "block-default": FeatureProfile(
        "block-default",
        frozenset({"BlockID", "BlockName", "CondBranches", "InDirectCalls",
                   "UnCondBranches", "MemOps"}),
    ),
}

DEFAULT_PROFILES = {FUNCTION_KIND: "function-default", BLOCK_KIND: "block-default"}


def _format_cell(cell) -> str:
    text = str(cell)
    if ";" in text or "\n" in text or "\r" in text:
        raise IllegalCellError(f"cell {text!r} contains a delimiter or newline")
    return text


def write_ssv(table: FeatureTable, with_header: bool = True) -> str:
    lines = []
    if with_header:
        lines.append(";".join(_format_cell(c) for c in table.header))
    for row in table.rows:
        lines.append(";".join(_format_cell(c) for c in row))
    return "".join(line + "\n" for line in lines)


def sanitize_name(name: str) -> str:
    """Names land in SSV cells, so the delimiter is replaced upstream."""
    return name.replace(";", ",").replace("\n", " ").replace("\r", " ")


def _sniff_delimiter(header_line: str) -> str:
    return "," if header_line.count(",") > header_line.count(";") else ";"


def _parse_cell(text: str, column: str):
    if column in NAME_COLUMNS:
        return text
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise NonNumericCellError(
            f"column {column} expects a number, got {text!r}"
        ) from None
    return int(value) if value.is_integer() else value


def read_table(
    text: str, expected_kind: str, allow_missing_label: bool = False
) -> FeatureTable:
    """Parse a delimited table with a header line.

    The delimiter is sniffed: comma wins only when the header line contains
    more commas than semicolons. The header must match the canonical column
    sequence for `expected_kind`; prediction-time tables may omit the label
    column when `allow_missing_label` is set.
    """
    canonical = CANONICAL_HEADERS[expected_kind]
    lines = text.splitlines()
    if not lines:
        raise HeaderMismatchError("empty input, expected a header line")
    delimiter = _sniff_delimiter(lines[0])
    header = tuple(cell.strip() for cell in lines[0].split(delimiter))
    if header != canonical:
        if not (allow_missing_label and header == canonical[:-1]):
            raise HeaderMismatchError(
                f"expected {expected_kind} header {';'.join(canonical)}, "
                f"got {';'.join(header)}"
            )
    rows: list[list] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(delimiter)
        if len(cells) != len(header):
            raise RaggedRowError(
                f"expected {len(header)} cells, got {len(cells)}", line_no
            )
        row = [_parse_cell(cell, col) for cell, col in zip(cells, header)]
        if LABEL_COLUMN in header:
            label = row[header.index(LABEL_COLUMN)]
            if label not in (0, 1):
                raise NonNumericCellError(
                    f"line {line_no}: label must be 0 or 1, got {label!r}"
                )
        rows.append(row)
    return FeatureTable(header=header, rows=rows, kind=expected_kind)


def read_fragment(text: str, kind: str, source: str = "<memory>") -> list[list]:
    """Parse one header-less SSV fragment into canonical-arity rows."""
    canonical = CANONICAL_HEADERS[kind]
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cells = line.split(";")
        if len(cells) != len(canonical):
            raise RaggedRowError(
                f"{source}: expected {len(canonical)} cells, got {len(cells)}", line_no
            )
        rows.append([_parse_cell(cell, col) for cell, col in zip(cells, canonical)])
    return rows


def assemble_corpus(root_dir: str | Path, kind: str) -> FeatureTable:
    """Concatenate every `.ssv` fragment under `root_dir` (recursively, in
    lexicographic path order) and prepend the canonical header."""
    root = Path(root_dir)
    fragments = sorted(root.rglob("*.ssv"), key=lambda p: p.as_posix())
    rows: list[list] = []
    for path in fragments:
        rows.extend(read_fragment(path.read_text(), kind, source=str(path)))
    return FeatureTable(header=CANONICAL_HEADERS[kind], rows=rows, kind=kind)


def apply_feature_profile(table: FeatureTable, profile: FeatureProfile) -> FeatureTable:
    for column in profile.dropped_columns:
        if column not in table.header:
            raise UnknownColumnError(column)
    keep = [i for i, c in enumerate(table.header) if c not in profile.dropped_columns]
    header = tuple(table.header[i] for i in keep)
    rows = [[row[i] for i in keep] for row in table.rows]
    return FeatureTable(header=header, rows=rows, kind=table.kind)


def get_profile(name: str) -> FeatureProfile:
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        raise UnknownColumnError(f"unknown profile {name!r}") from None


@dataclass
class SanityReport:
    violations: list[tuple[int, str]] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.violations


def sanity_check_blocks(table: FeatureTable) -> SanityReport:
    """Check the block-table branch-flag constraints: N and M are 0/1 and
    never both 1. A clean extractor run yields an empty report."""
    n_idx = table.column_index("CondBranches")
    m_idx = table.column_index("UnCondBranches")
    report = SanityReport()
    for i, row in enumerate(table.rows):
        n, m = row[n_idx], row[m_idx]
        if n not in (0, 1):
            report.violations.append((i, f"CondBranches={n} outside {{0,1}}"))
        if m not in (0, 1):
            report.violations.append((i, f"UnCondBranches={m} outside {{0,1}}"))
        if n in (0, 1) and m in (0, 1) and n * m != 0:
            report.violations.append((i, "CondBranches and UnCondBranches both set"))
    return report


def _per_class_indices(labels: list[int]) -> dict[int, list[int]]:
    by_class: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    return by_class


def stratified_split(
    table: FeatureTable, test_fraction: float, seed: int = 42
) -> tuple[FeatureTable, FeatureTable]:
    """Deterministic stratified train/test partition. Per-class test counts
    are rounded to the nearest row and clamped so neither side is empty."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0,1), got {test_fraction}")
    labels = table.labels()
    by_class = _per_class_indices(labels)
    if len(by_class) < 2:
        raise DegenerateClassError("both classes must be present")
    rng = random.Random(seed)
    test_idx: list[int] = []
    for label in sorted(by_class):
        indices = by_class[label]
        if len(indices) < 2:
            raise DegenerateClassError(f"class {label} has fewer than 2 rows")
        shuffled = indices[:]
        rng.shuffle(shuffled)
        take = min(max(round(len(indices) * test_fraction), 1), len(indices) - 1)
        test_idx.extend(shuffled[:take])
    test_set = set(test_idx)
    train = table.select_rows([i for i in range(len(table.rows)) if i not in test_set])
    test = table.select_rows(sorted(test_set))
    return train, test


def stratified_kfold(labels: list[int], folds: int, seed: int = 42) -> list[list[int]]:
    """Deterministic stratified fold assignment; returns one index list per
    fold, jointly disjoint and exhaustive."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = random.Random(seed)
    fold_indices: list[list[int]] = [[] for _ in range(folds)]
    for label in sorted(set(labels)):
        indices = [i for i, y in enumerate(labels) if y == label]
        rng.shuffle(indices)
        for pos, idx in enumerate(indices):
            fold_indices[pos % folds].append(idx)
    return [sorted(fold) for fold in fold_indices]


def stratified_subsample(labels: list[int], fraction: float, seed: int = 42) -> list[int]:
    """Seeded per-class subsample of row indices, at least one row per class."""
    rng = random.Random(seed)
    chosen: list[int] = []
    for label in sorted(set(labels)):
        indices = [i for i, y in enumerate(labels) if y == label]
        rng.shuffle(indices)
        take = max(1, round(len(indices) * fraction))
        chosen.extend(indices[:take])
    return sorted(chosen)
