"""Progression DAGs: nodes (events and pattern clauses), a parent function,
and the probability labeling."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .formulas import Clause


@dataclass
class DagNode:
    key: str  # event name, or canonical clause string
    kind: str  # 'event' | 'clause'
    clause: Clause | None = None
    alpha: float = 0.0
    marginal: float = 0.0


@dataclass
class ProgressionDag:
    """Directed graph child <- parents. Clause nodes never have parents."""

    nodes: dict[str, DagNode] = field(default_factory=dict)
    parents: dict[str, set[str]] = field(default_factory=dict)

    def add_node(self, node: DagNode) -> None:
        self.nodes[node.key] = node
        self.parents.setdefault(node.key, set())

    def add_edge(self, parent: str, child: str) -> None:
        self.parents[child].add(parent)

    def remove_edge(self, parent: str, child: str) -> None:
        self.parents[child].discard(parent)

    def edges(self) -> list[tuple[str, str]]:
        out = [(p, c) for c, ps in self.parents.items() for p in ps]
        out.sort()
        return out

    def children_of(self, key: str) -> list[str]:
        return sorted(c for c, ps in self.parents.items() if key in ps)

    def has_path(self, src: str, dst: str) -> bool:
        """True if dst is reachable from src along directed edges."""
        if src == dst:
            return True
        stack = [src]
        seen = {src}
        kids: dict[str, list[str]] = {k: [] for k in self.nodes}
        for c, ps in self.parents.items():
            for p in ps:
                kids[p].append(c)
        while stack:
            cur = stack.pop()
            for nxt in kids[cur]:
                if nxt == dst:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def is_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except ValueError:
            return False

    def topological_order(self) -> list[str]:
        """Kahn's algorithm with lexicographic tie-breaking (deterministic)."""
        indeg = {k: len(ps) for k, ps in self.parents.items()}
        kids: dict[str, list[str]] = {k: [] for k in self.nodes}
        for c, ps in self.parents.items():
            for p in ps:
                kids[p].append(c)
        ready = [k for k, d in indeg.items() if d == 0]
        heapq.heapify(ready)
        order: list[str] = []
        while ready:
            cur = heapq.heappop(ready)
            order.append(cur)
            for nxt in kids[cur]:
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    heapq.heappush(ready, nxt)
        if len(order) != len(self.nodes):
            raise ValueError("graph contains a cycle")
        return order

    def copy(self) -> "ProgressionDag":
        dup = ProgressionDag()
        for node in self.nodes.values():
            dup.add_node(DagNode(node.key, node.kind, node.clause, node.alpha, node.marginal))
        for child, ps in self.parents.items():
            dup.parents[child] = set(ps)
        return dup

    def event_edges(self) -> set[tuple[str, str]]:
        """Directed edges projected onto atomic events: a clause parent is
        replaced by one edge per positive event it mentions."""
        out: set[tuple[str, str]] = set()
        for child, ps in self.parents.items():
            for p in ps:
                node = self.nodes[p]
                if node.kind == "event":
                    out.add((p, child))
                elif node.clause is not None:
                    for lit in node.clause.literals:
                        if not lit.negated:
                            out.add((lit.name, child))
        return out
