"""Textual LLVM IR (.ll) parsing into a minimal module/function/block model.

Only the subset needed for feature extraction is interpreted: function
definitions, block labels, and the instruction classes below. Types,
attributes, metadata and constant expressions are skipped textually.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable

# Instruction kinds.
COND_BRANCH = "cond_branch"
UNCOND_BRANCH = "uncond_branch"
SWITCH = "switch"
RETURN = "return"
UNREACHABLE = "unreachable"
CALL = "call"
ALLOCA = "alloca"
MEMOP = "memop"
OTHER = "other"

# Non-branching terminator opcodes outside the modelled subset; they end a
# block but contribute no CFG edges and no branch counts.
_OTHER_TERMINATORS = {"resume", "cleanupret", "catchret", "catchswitch"}


class IrParseError(Exception):
    """Base for .ll parse failures; carries a 1-based source line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnbalancedBodyError(IrParseError):
    """A `define` without a closing brace."""


class MalformedTerminatorError(IrParseError):
    """A block whose last instruction is not its sole terminator."""


@dataclass(frozen=True)
class CalleeRef:
    """Call target: a resolved symbol, or None for indirect calls."""

    symbol: str | None

    @property
    def is_indirect(self) -> bool:
        return self.symbol is None

    @classmethod
    def direct(cls, symbol: str) -> "CalleeRef":
        if not symbol:
            raise ValueError("direct callee symbol must be non-empty")
        return cls(symbol)

    @classmethod
    def indirect(cls) -> "CalleeRef":
        return cls(None)


@dataclass(frozen=True)
class IrInstruction:
    kind: str
    raw_text: str
    targets: tuple[str, ...] = ()
    callee: CalleeRef | None = None
    intrinsic_name: str = ""
    opcode: str = ""
    line: int = 0

    @property
    def is_terminator(self) -> bool:
        if self.kind in (COND_BRANCH, UNCOND_BRANCH, SWITCH, RETURN, UNREACHABLE):
            return True
        # `invoke` folds into the CFG as a call carrying its two targets.
        if self.kind == CALL and self.targets:
            return True
        return self.kind == OTHER and self.opcode in _OTHER_TERMINATORS


@dataclass
class IrBlock:
    label: str
    instructions: list[IrInstruction]
    ordinal: int

    @property
    def terminator(self) -> IrInstruction:
        return self.instructions[-1]


@dataclass
class IrFunction:
    name: str
    normalized_name: str
    blocks: list[IrBlock]
    is_definition: bool = True

    @property
    def entry(self) -> IrBlock:
        return self.blocks[0]


@dataclass
class IrModule:
    source_path: str
    functions: list[IrFunction] = field(default_factory=list)
    global_names: set[str] = field(default_factory=set)

    def function(self, name: str) -> IrFunction:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)


def _identity(name: str) -> str:
    return name


@dataclass(frozen=True)
class ExtractionConfig:
    """Symbol lists driving MemOp / dynamic-allocation classification.

    All lists are configurable; prefixes cover intrinsic families such as
    llvm.memcpy.* and the operator-new mangling family.
    """

    memop_symbols: frozenset[str] = frozenset(
        {"memcpy", "memmove", "memset", "strcpy", "strncpy", "strcat", "strncat", "memcmp"}
    )
    memop_prefixes: tuple[str, ...] = ("llvm.memcpy", "llvm.memmove", "llvm.memset")
    dynalloc_symbols: frozenset[str] = frozenset(
        {"malloc", "calloc", "realloc", "aligned_alloc"}
    )
    dynalloc_prefixes: tuple[str, ...] = ("_Znw", "_Zna")
    name_transform: Callable[[str], str] = _identity

    def is_memop_symbol(self, symbol: str) -> bool:
        return symbol in self.memop_symbols or symbol.startswith(self.memop_prefixes)

    def is_dynalloc_symbol(self, symbol: str) -> bool:
        return symbol in self.dynalloc_symbols or symbol.startswith(self.dynalloc_prefixes)

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionConfig":
        kwargs = {}
        if "memop_symbols" in data:
            kwargs["memop_symbols"] = frozenset(data["memop_symbols"])
        if "memop_prefixes" in data:
            kwargs["memop_prefixes"] = tuple(data["memop_prefixes"])
        if "dynalloc_symbols" in data:
            kwargs["dynalloc_symbols"] = frozenset(data["dynalloc_symbols"])
        if "dynalloc_prefixes" in data:
            kwargs["dynalloc_prefixes"] = tuple(data["dynalloc_prefixes"])
        return cls(**kwargs)


DEFAULT_CONFIG = ExtractionConfig()


def normalize_name(raw: str, config: ExtractionConfig = DEFAULT_CONFIG) -> str:
    """Apply the configured name transform (identity unless overridden)."""
    return config.name_transform(raw)


def _strip_comment(line: str) -> str:
    # `;` starts a comment unless inside a quoted string (c"..." constants).
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == ";" and not in_string:
            return line[:i]
    return line


def _unquote(symbol: str) -> str:
    if len(symbol) >= 2 and symbol.startswith('"') and symbol.endswith('"'):
        return symbol[1:-1]
    return symbol


_SYMBOL = r'(?:"[^"]*"|[-\w$.]+)'
_DEFINE_RE = re.compile(r"^define\s.*?@(" + _SYMBOL + r")\s*\(")
_DECLARE_RE = re.compile(r"^declare\s.*?@(" + _SYMBOL + r")\s*\(")
_LABEL_RE = re.compile(r"^(" + _SYMBOL + r"):(.*)$")
_BRANCH_TARGET_RE = re.compile(r"label\s+%(" + _SYMBOL + r")")
_CALLEE_PAREN_RE = re.compile(r"([%@]" + _SYMBOL + r")\s*\(")
_ANY_GLOBAL_RE = re.compile(r"@(" + _SYMBOL + r")")
_ASSIGN_RE = re.compile(r"^%" + _SYMBOL + r"\s*=\s*")


def _branch_targets(text: str) -> tuple[str, ...]:
    return tuple(_unquote(m) for m in _BRANCH_TARGET_RE.findall(text))


def _intrinsic_name(symbol: str) -> str:
    # llvm.memcpy.p0.p0.i64 -> llvm.memcpy; plain libc names pass through.
    if symbol.startswith("llvm."):
        return ".".join(symbol.split(".")[:2])
    return symbol


def _resolve_callee(text: str) -> CalleeRef:
    # The callee is the (possibly register) operand directly before the
    # argument list. Old-style constexpr callees (`bitcast (...) (args)`)
    # have no such operand; fall back to the first global mentioned.
    m = _CALLEE_PAREN_RE.search(text)
    if m is not None:
        token = m.group(1)
        if token.startswith("@"):
            return CalleeRef.direct(_unquote(token[1:]))
        return CalleeRef.indirect()
    m = _ANY_GLOBAL_RE.search(text)
    if m is not None:
        return CalleeRef.direct(_unquote(m.group(1)))
    return CalleeRef.indirect()


def classify_instruction(
    line: str, config: ExtractionConfig = DEFAULT_CONFIG, line_no: int = 0
) -> IrInstruction:
    """Classify one trimmed, comment-free instruction line. Total: unknown
    text becomes Other rather than failing."""
    raw = line
    text = _ASSIGN_RE.sub("", line.strip())
    for marker in ("tail ", "musttail ", "notail "):
        if text.startswith(marker + "call"):
            text = text[len(marker):]
            break
    opcode = text.split(None, 1)[0] if text.split() else ""

    if opcode == "br":
        targets = _branch_targets(text)
        if text.startswith("br label") and len(targets) == 1:
            return IrInstruction(UNCOND_BRANCH, raw, targets=targets, line=line_no)
        if len(targets) >= 2:
            return IrInstruction(COND_BRANCH, raw, targets=targets, line=line_no)
        return IrInstruction(OTHER, raw, opcode="br", line=line_no)
    if opcode == "switch":
        return IrInstruction(SWITCH, raw, targets=_branch_targets(text), line=line_no)
    if opcode == "indirectbr":
        return IrInstruction(
            OTHER, raw, targets=_branch_targets(text), opcode="indirectbr", line=line_no
        )
    if opcode == "ret":
        return IrInstruction(RETURN, raw, line=line_no)
    if opcode == "unreachable":
        return IrInstruction(UNREACHABLE, raw, line=line_no)
    if opcode == "alloca":
        return IrInstruction(ALLOCA, raw, line=line_no)
    if opcode in ("call", "invoke"):
        callee = _resolve_callee(text)
        targets = _branch_targets(text) if opcode == "invoke" else ()
        if callee.symbol is not None and config.is_memop_symbol(callee.symbol):
            return IrInstruction(
                MEMOP,
                raw,
                targets=targets,
                callee=callee,
                intrinsic_name=_intrinsic_name(callee.symbol),
                line=line_no,
            )
        return IrInstruction(CALL, raw, targets=targets, callee=callee, line=line_no)
    return IrInstruction(OTHER, raw, opcode=opcode, line=line_no)


def _fresh_entry_label(taken: Iterable[str]) -> str:
    taken = set(taken)
    label = "entry"
    while label in taken:
        label = "_" + label
    return label


class _FunctionAccumulator:
    def __init__(self, name: str, define_line: int):
        self.name = name
        self.define_line = define_line
        # list of (label | None, label_line, [(line_no, text), ...])
        self.groups: list[tuple[str | None, int, list[tuple[int, str]]]] = [(None, define_line, [])]
        self._bracket_depth = 0

    def add_label(self, label: str, line_no: int) -> None:
        self.groups.append((label, line_no, []))
        self._bracket_depth = 0

    def add_instruction(self, text: str, line_no: int) -> None:
        lines = self.groups[-1][2]
        # llvm-dis splits some instructions across physical lines: switch
        # case lists in brackets, invoke `to label ...`, landingpad clauses.
        if lines and self._continues_previous(text, lines[-1][1]):
            lines[-1] = (lines[-1][0], lines[-1][1] + " " + text)
        else:
            lines.append((line_no, text))
        self._bracket_depth = max(
            0, self._bracket_depth + text.count("[") - text.count("]")
        )

    def _continues_previous(self, text: str, prev: str) -> bool:
        if self._bracket_depth > 0:
            return True
        if text.startswith("to label"):
            return True
        if "landingpad" in prev and (
            text == "cleanup" or text.startswith(("catch ", "filter "))
        ):
            return True
        return False

    def finish(self, config: ExtractionConfig) -> IrFunction:
        groups = self.groups
        if groups[0][0] is None and not groups[0][2]:
            groups = groups[1:]  # no implicit entry block
        if not groups:
            raise MalformedTerminatorError(
                f"function @{self.name} has an empty body", self.define_line
            )
        explicit = [g[0] for g in groups if g[0] is not None]
        blocks: list[IrBlock] = []
        seen: set[str] = set()
        for ordinal, (label, label_line, lines) in enumerate(groups):
            if label is None:
                label = _fresh_entry_label(explicit)
            if label in seen:
                raise IrParseError(
                    f"duplicate block label %{label} in @{self.name}", label_line
                )
            seen.add(label)
            instrs = [classify_instruction(t, config, line_no=n) for n, t in lines]
            if not instrs:
                raise MalformedTerminatorError(
                    f"block %{label} in @{self.name} is empty", label_line
                )
            for ins in instrs[:-1]:
                if ins.is_terminator:
                    raise MalformedTerminatorError(
                        f"terminator is not the last instruction of block %{label}",
                        ins.line,
                    )
            if not instrs[-1].is_terminator:
                raise MalformedTerminatorError(
                    f"block %{label} in @{self.name} does not end with a terminator",
                    instrs[-1].line,
                )
            blocks.append(IrBlock(label=label, instructions=instrs, ordinal=ordinal))
        return IrFunction(
            name=self.name,
            normalized_name=normalize_name(self.name, config),
            blocks=blocks,
        )


def parse_module(
    source: str, source_path: str = "<memory>", config: ExtractionConfig = DEFAULT_CONFIG
) -> IrModule:
    """Parse one translation unit of textual IR.

    `define` bodies become functions with blocks split at labels; `declare`
    lines register global names only; anything else is skipped.
    """
    module = IrModule(source_path=source_path)
    current: _FunctionAccumulator | None = None

    for line_no, raw_line in enumerate(source.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue

        if current is None:
            if line.startswith("define"):
                m = _DEFINE_RE.match(line)
                if m is None:
                    continue  # unparseable define header: skip textually
                name = _unquote(m.group(1))
                if any(fn.name == name for fn in module.functions):
                    raise IrParseError(f"duplicate function definition @{name}", line_no)
                if not line.rstrip().endswith("{"):
                    raise UnbalancedBodyError(
                        f"define @{name} missing opening brace", line_no
                    )
                current = _FunctionAccumulator(name, line_no)
                module.global_names.add(name)
            elif line.startswith("declare"):
                m = _DECLARE_RE.match(line)
                if m is not None:
                    module.global_names.add(_unquote(m.group(1)))
            continue

        if line == "}":
            module.functions.append(current.finish(config))
            current = None
            continue
        m = _LABEL_RE.match(line)
        # A colon-suffixed symbol is a label; `label: instr` also tolerated.
        if m is not None and _looks_like_label(m, line):
            current.add_label(_unquote(m.group(1)), line_no)
            rest = m.group(2).strip()
            if rest:
                current.add_instruction(rest, line_no)
        else:
            current.add_instruction(line, line_no)

    if current is not None:
        raise UnbalancedBodyError(
            f"define @{current.name} is never closed", current.define_line
        )
    return module


def _looks_like_label(m: re.Match, line: str) -> bool:
    # Distinguish `loop:` / `loop: br label %x` from instruction text that
    # merely contains a colon. The rest must be empty or whitespace-separated.
    head = m.group(1)
    return len(line) == len(head) + 1 or line[len(head) + 1].isspace()
