"""Dominator trees (Lengauer-Tarjan, simple link/eval) and a brute-force oracle.

Graphs are handled internally as integer vertices ``0..n-1`` with successor
lists; :class:`Digraph` maps arbitrary hashable labels onto that range.
"""

from __future__ import annotations

from collections.abc import Hashable, Iterable
from dataclasses import dataclass

import numpy as np

from .epidemic import ROOT, Dendrogram

NONE = -1


class Digraph:
    """Directed graph with a designated root.

    >>> g = Digraph([("a", "b"), ("b", "c")], root="a")
    >>> build_dominator_tree(g).idom_of("c")
    'b'
    """

    def __init__(self, edges: Iterable[tuple[Hashable, Hashable]], root: Hashable, nodes: Iterable[Hashable] = ()):
        self.labels: list[Hashable] = []
        self.index: dict[Hashable, int] = {}
        for x in nodes:
            self._intern(x)
        pairs = [(self._intern(a), self._intern(b)) for a, b in edges]
        if root not in self.index:
            raise KeyError(f"root {root!r} is not a node of the graph")
        self.root = self.index[root]
        self.succ: list[list[int]] = [[] for _ in self.labels]
        for a, b in pairs:
            self.succ[a].append(b)

    def _intern(self, x) -> int:
        i = self.index.get(x)
        if i is None:
            i = self.index[x] = len(self.labels)
            self.labels.append(x)
        return i

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(eq=False)
class DominatorTree:
    """Immediate dominators over integer vertices.

    ``idom[v]`` is ``NONE`` for the root and for vertices unreachable from
    it; ``depth[v]`` is the number of tree edges from the root (-1 when
    unreachable).
    """

    idom: np.ndarray
    depth: np.ndarray
    root: int
    labels: list | None = None

    def _ix(self, x) -> int:
        if self.labels is None:
            return int(x)
        return self._index[x]

    def __post_init__(self):
        if self.labels is not None:
            self._index = {lab: i for i, lab in enumerate(self.labels)}

    def _lab(self, i: int):
        return i if self.labels is None else self.labels[i]

    def reachable(self, x) -> bool:
        return self.depth[self._ix(x)] >= 0

    def idom_of(self, x):
        i = self._ix(x)
        if i == self.root or self.depth[i] < 0:
            return None
        return self._lab(int(self.idom[i]))

    def dominators_of(self, y) -> list:
        """All dominators of ``y`` from ``y`` itself up to the root."""
        i = self._ix(y)
        if self.depth[i] < 0:
            return []
        out = [i]
        while i != self.root:
            i = int(self.idom[i])
            out.append(i)
        return [self._lab(j) for j in out]

    def dominates(self, x, y) -> bool:
        """``x`` dominates ``y`` (reflexive) on vertices reachable from the root."""
        ix, iy = self._ix(x), self._ix(y)
        if self.depth[ix] < 0 or self.depth[iy] < 0:
            return False
        while self.depth[iy] > self.depth[ix]:
            iy = int(self.idom[iy])
        return iy == ix

    def dumps(self) -> str:
        """Debug dump: ``node idom depth`` per reachable vertex, root idom as -1."""
        rows = []
        for i in np.flatnonzero(self.depth >= 0).tolist():
            parent = self.idom[i]
            rows.append(f"{self._lab(i)} {self._lab(int(parent)) if parent != NONE else -1} {self.depth[i]}")
        return "\n".join(rows) + "\n"


def _lengauer_tarjan(succ: list[list[int]], root: int) -> list[int]:
    n = len(succ)
    # iterative DFS, preorder numbering from 0
    semi = [-1] * n  # holds the DFS number until replaced by the semidominator number
    vertex: list[int] = []
    parent = [NONE] * n
    pred: list[list[int]] = [[] for _ in range(n)]
    semi[root] = 0
    vertex.append(root)
    stack = [(root, iter(succ[root]))]
    while stack:
        v, it = stack[-1]
        for w in it:
            pred[w].append(v)
            if semi[w] < 0:
                semi[w] = len(vertex)
                vertex.append(w)
                parent[w] = v
                stack.append((w, iter(succ[w])))
                break
        else:
            stack.pop()

    ancestor = [NONE] * n
    label = list(range(n))
    idom = [NONE] * n
    bucket: list[list[int]] = [[] for _ in range(n)]

    def evaluate(v: int) -> int:
        if ancestor[v] == NONE:
            return v
        # collect the path up to the forest root, then compress it top-down
        path = []
        x = v
        while ancestor[ancestor[x]] != NONE:
            path.append(x)
            x = ancestor[x]
        for x in reversed(path):
            a = ancestor[x]
            if semi[label[a]] < semi[label[x]]:
                label[x] = label[a]
            ancestor[x] = ancestor[a]
        return label[v]

    for i in range(len(vertex) - 1, 0, -1):
        w = vertex[i]
        for v in pred[w]:
            if semi[v] < 0:
                continue
            u = evaluate(v)
            if semi[u] < semi[w]:
                semi[w] = semi[u]
        bucket[vertex[semi[w]]].append(w)
        p = parent[w]
        ancestor[w] = p
        for v in bucket[p]:
            u = evaluate(v)
            idom[v] = u if semi[u] < semi[v] else p
        bucket[p].clear()

    for i in range(1, len(vertex)):
        w = vertex[i]
        if idom[w] != vertex[semi[w]]:
            idom[w] = idom[idom[w]]
    idom[root] = NONE
    return idom, vertex


def _tree_from_idom(idom: list[int], order: list[int], root: int, n: int, labels=None) -> DominatorTree:
    depth = np.full(n, -1, dtype=np.int64)
    depth[root] = 0
    # DFS preorder lists every dominator before the vertices it dominates
    for w in order[1:]:
        depth[w] = depth[idom[w]] + 1
    return DominatorTree(np.asarray(idom, dtype=np.int64), depth, root, labels)


def dominator_tree_from_succ(succ: list[list[int]], root: int, labels=None) -> DominatorTree:
    if not 0 <= root < len(succ):
        raise KeyError(f"root {root} is not a vertex")
    idom, order = _lengauer_tarjan(succ, root)
    return _tree_from_idom(idom, order, root, len(succ), labels)


def build_dominator_tree(g: Digraph) -> DominatorTree:
    """Immediate-dominator tree of ``g`` from its root (Lengauer-Tarjan)."""
    return dominator_tree_from_succ(g.succ, g.root, g.labels)


def _reachable(succ, root, removed=NONE) -> np.ndarray:
    seen = np.zeros(len(succ), dtype=bool)
    if root == removed:
        return seen
    seen[root] = True
    todo = [root]
    while todo:
        v = todo.pop()
        for w in succ[v]:
            if w != removed and not seen[w]:
                seen[w] = True
                todo.append(w)
    return seen


def dominator_sets_bruteforce(succ: list[list[int]], root: int) -> list[set[int]]:
    """``x`` dominates ``v`` iff ``v`` is reachable and deleting ``x`` cuts it off.

    Returns, per vertex, its full (reflexive) dominator set; empty when the
    vertex is unreachable.
    """
    n = len(succ)
    base = _reachable(succ, root)
    doms = [({v} if base[v] else set()) for v in range(n)]
    for x in range(n):
        if not base[x]:
            continue
        cut = _reachable(succ, root, removed=x)
        for v in np.flatnonzero(base & ~cut).tolist():
            doms[v].add(x)
    return doms


def idom_bruteforce(succ: list[list[int]], root: int) -> list[int]:
    """Immediate dominators from the brute-force dominator sets.

    The immediate dominator is the strict dominator with the most dominators
    of its own (the closest one on the chain).
    """
    doms = dominator_sets_bruteforce(succ, root)
    idom = [NONE] * len(succ)
    for v, ds in enumerate(doms):
        strict = ds - {v}
        if strict:
            idom[v] = max(strict, key=lambda x: len(doms[x]))
    return idom


def dendrogram_digraph(den: Dendrogram) -> tuple[list[list[int]], int]:
    """Successor lists of a dendrogram plus a virtual super-source.

    The super-source is vertex ``den.n`` and points to every seed.
    """
    n = den.n
    succ: list[list[int]] = [[] for _ in range(n + 1)]
    succ[n] = [int(s) for s in den.seed_nodes]
    child = np.flatnonzero(den.infector != ROOT)
    for p, c in zip(den.infector[child].tolist(), child.tolist()):
        succ[p].append(c)
    return succ, n


def build_from_dendrograms(dens: list[Dendrogram]) -> list[DominatorTree]:
    """Dominator tree of each dendrogram, rooted at a virtual super-source.

    The super-source is vertex ``n`` of each tree; use
    :func:`dendrogram_dominator_depths` for per-node depths with it excluded.
    """
    if not dens:
        raise ValueError("need at least one dendrogram")
    return [dominator_tree_from_succ(*dendrogram_digraph(d)) for d in dens]


def dendrogram_dominator_depths(tree: DominatorTree) -> np.ndarray:
    """Depth of each real node below the super-source (seeds 0, uninfected -1)."""
    d = tree.depth[:-1].copy()
    d[d > 0] -= 1
    return d
