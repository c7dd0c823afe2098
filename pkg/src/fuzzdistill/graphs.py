"""Control-flow graphs, call graphs, dominators and natural-loop counting."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .ir import CALL, IrFunction, IrModule


class UnknownTargetError(Exception):
    """A terminator branches to a label not defined in its function."""


@dataclass
class Cfg:
    entry: str
    successors: dict[str, list[str]]
    predecessors: dict[str, list[str]]

    @property
    def node_count(self) -> int:
        return len(self.successors)

    def in_degree(self, label: str) -> int:
        return len(self.predecessors[label])

    def out_degree(self, label: str) -> int:
        return len(self.successors[label])


@dataclass
class DomTree:
    """Immediate dominators over the entry-reachable subgraph; the entry
    block maps to itself."""

    immediate_dominator: dict[str, str]

    def dominates(self, a: str, b: str) -> bool:
        idom = self.immediate_dominator
        if b not in idom:
            return False
        node = b
        while True:
            if node == a:
                return True
            parent = idom[node]
            if parent == node:
                return False
            node = parent


@dataclass
class CallGraph:
    nodes: set[str] = field(default_factory=set)
    direct_edges: list[tuple[str, str]] = field(default_factory=list)
    indirect_sites: dict[str, int] = field(default_factory=dict)

    def in_degree(self, name: str) -> int:
        return sum(1 for _, callee in self.direct_edges if callee == name)

    def edge_multiset(self) -> Counter:
        return Counter(self.direct_edges)


def build_cfg(function: IrFunction) -> Cfg:
    """Derive block-level edges from terminators. Conditional branches and
    switches contribute one edge per distinct target; invoke contributes
    both of its targets."""
    if not function.is_definition:
        raise ValueError(f"@{function.name} is not a definition")
    labels = {block.label for block in function.blocks}
    successors: dict[str, list[str]] = {b.label: [] for b in function.blocks}
    predecessors: dict[str, list[str]] = {b.label: [] for b in function.blocks}

    for block in function.blocks:
        term = block.terminator
        targets: list[str] = []
        seen: set[str] = set()
        for target in term.targets:
            if target not in labels:
                raise UnknownTargetError(
                    f"block %{block.label} of @{function.name} branches to "
                    f"unknown label %{target}"
                )
            if target not in seen:
                seen.add(target)
                targets.append(target)
        successors[block.label] = targets
        for target in targets:
            predecessors[target].append(block.label)

    return Cfg(entry=function.entry.label, successors=successors, predecessors=predecessors)


def _reverse_postorder(cfg: Cfg) -> list[str]:
    order: list[str] = []
    visited: set[str] = set()
    # Iterative DFS; post-position tracked so large CFGs do not recurse.
    stack: list[tuple[str, int]] = [(cfg.entry, 0)]
    visited.add(cfg.entry)
    while stack:
        node, idx = stack.pop()
        succs = cfg.successors[node]
        if idx < len(succs):
            stack.append((node, idx + 1))
            child = succs[idx]
            if child not in visited:
                visited.add(child)
                stack.append((child, 0))
        else:
            order.append(node)
    order.reverse()
    return order


def compute_dominators(cfg: Cfg) -> DomTree:
    """Iterative idom fixpoint over reverse postorder (Cooper-Harvey-Kennedy).
    Unreachable blocks are excluded."""
    rpo = _reverse_postorder(cfg)
    index = {label: i for i, label in enumerate(rpo)}
    idom: dict[str, str | None] = {label: None for label in rpo}
    idom[cfg.entry] = cfg.entry

    def intersect(a: str, b: str) -> str:
        while a != b:
            while index[a] > index[b]:
                a = idom[a]  # type: ignore[assignment]
            while index[b] > index[a]:
                b = idom[b]  # type: ignore[assignment]
        return a

    changed = True
    while changed:
        changed = False
        for label in rpo:
            if label == cfg.entry:
                continue
            preds = [p for p in cfg.predecessors[label] if p in index and idom[p] is not None]
            if not preds:
                continue
            new_idom = preds[0]
            for pred in preds[1:]:
                new_idom = intersect(new_idom, pred)
            if idom[label] != new_idom:
                idom[label] = new_idom
                changed = True

    return DomTree(immediate_dominator={k: v for k, v in idom.items() if v is not None})


def count_natural_loops(cfg: Cfg, dom: DomTree) -> int:
    """Number of distinct loop headers: targets h of back edges t->h where h
    dominates t. Multiple back edges into one header count once."""
    headers: set[str] = set()
    for tail, succs in cfg.successors.items():
        for head in succs:
            if dom.dominates(head, tail):
                headers.add(head)
    return len(headers)


def build_callgraph(modules: list[IrModule]) -> CallGraph:
    """One direct edge per direct call site (duplicates preserved); indirect
    call sites tallied per caller. Deterministic regardless of module order."""
    cg = CallGraph()
    edges: list[tuple[str, str]] = []
    indirect: Counter = Counter()
    for module in modules:
        for fn in module.functions:
            cg.nodes.add(fn.name)
            for block in fn.blocks:
                for instr in block.instructions:
                    if instr.kind != CALL or instr.callee is None:
                        continue
                    if instr.callee.is_indirect:
                        indirect[fn.name] += 1
                    else:
                        edges.append((fn.name, instr.callee.symbol))
    cg.direct_edges = sorted(edges)
    cg.indirect_sites = dict(sorted(indirect.items()))
    return cg
