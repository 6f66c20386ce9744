"""Phylogenies: construction, quartet derivation, generation and decoding.

An :class:`UnrootedPhylogeny` stores an adjacency list in which nodes
``0..n-1`` are the leaves (node ``i`` carries taxon ``i``) and higher ids
are internal nodes of degree three.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    QuartetSet,
    QuartetTopology,
    TaxonSet,
    UltrametricMatrix,
    canonical_topology,
    is_complete,
    violating_triple,
)
from .rng import Lcg

# alteration draws use a stream distinct from the tree-shape stream
ALTER_SALT = 0x9E3779B97F4A7C15


class InvalidTreeError(ValueError):
    pass


class DecodeError(ValueError):
    def __init__(self, message: str, triple: tuple[int, int, int] | None = None):
        super().__init__(message)
        self.triple = triple


@dataclass(frozen=True)
class UnrootedPhylogeny:
    taxa: TaxonSet
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        adj = tuple(tuple(sorted(nbrs)) for nbrs in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        n = self.taxa.n
        if n < 2:
            raise InvalidTreeError("a phylogeny needs at least two taxa")
        if len(adj) < n:
            raise InvalidTreeError("every taxon must be a node")
        n_edges = sum(len(a) for a in adj) // 2
        if n_edges != len(adj) - 1:
            raise InvalidTreeError("adjacency is not a tree")
        for v, nbrs in enumerate(adj):
            if any(v not in adj[u] for u in nbrs):
                raise InvalidTreeError("adjacency is not symmetric")
            want = 1 if v < n else 3
            if len(nbrs) != want:
                kind = "leaf" if v < n else "internal node"
                raise InvalidTreeError(f"{kind} {v} has degree {len(nbrs)}, expected {want}")
        seen = {0}
        stack = [0]
        while stack:
            for u in adj[stack.pop()]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if len(seen) != len(adj):
            raise InvalidTreeError("adjacency is not connected")

    @classmethod
    def from_edges(cls, taxa: TaxonSet, edges: Iterable[tuple[int, int]]) -> "UnrootedPhylogeny":
        edges = list(edges)
        size = max(max(e) for e in edges) + 1
        adj: list[list[int]] = [[] for _ in range(size)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        return cls(taxa, tuple(tuple(a) for a in adj))

    @property
    def n(self) -> int:
        return self.taxa.n

    @property
    def num_nodes(self) -> int:
        return len(self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def leaf_distances(self) -> np.ndarray:
        """Edge-count distance between every pair of leaves."""
        n = self.n
        dist = np.zeros((n, n), dtype=np.int64)
        for s in range(n):
            d = {s: 0}
            queue = deque([s])
            while queue:
                v = queue.popleft()
                for u in self.adjacency[v]:
                    if u not in d:
                        d[u] = d[v] + 1
                        queue.append(u)
            dist[s] = [d[x] for x in range(n)]
        return dist

    def splits(self) -> frozenset[frozenset[int]]:
        """Non-trivial bipartitions, each given by the side without taxon 0."""
        n = self.n
        below: dict[int, frozenset[int]] = {}
        order = []
        parent = {0: -1}
        stack = [0]
        while stack:
            v = stack.pop()
            order.append(v)
            for u in self.adjacency[v]:
                if u not in parent:
                    parent[u] = v
                    stack.append(u)
        for v in reversed(order):
            kids = [u for u in self.adjacency[v] if parent.get(u) == v]
            below[v] = frozenset([v]) if v < n and v != 0 else frozenset().union(*(below[u] for u in kids))
        return frozenset(s for v, s in below.items() if v != 0 and 2 <= len(s) <= n - 2)


@dataclass(frozen=True)
class RootedNode:
    children: tuple["RootedNode", ...] = ()
    taxon: int | None = None
    label: int | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.taxon]
        return [x for c in self.children for x in c.leaves()]

    def min_taxon(self) -> int:
        return min(self.leaves())


@dataclass(frozen=True)
class RootedPhylogeny:
    taxa: TaxonSet
    root: RootedNode

    def __post_init__(self):
        leaves = self.root.leaves()
        if sorted(leaves) != list(range(self.taxa.n)):
            raise InvalidTreeError("leaves must be in bijection with the taxa")

    @property
    def n(self) -> int:
        return self.taxa.n


@dataclass(frozen=True)
class GenSpec:
    n: int
    seed: int
    alter_percent: int = 0

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need at least 4 taxa, got {self.n}")
        if not 0 <= self.alter_percent <= 100:
            raise ValueError(f"alteration percentage must be in 0..100, got {self.alter_percent}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# quartet derivation


def _four_point(dist, a: int, b: int, c: int, d: int) -> QuartetTopology:
    s_ab = dist[a][b] + dist[c][d]
    s_ac = dist[a][c] + dist[b][d]
    s_ad = dist[a][d] + dist[b][c]
    if s_ab < s_ac and s_ab < s_ad:
        return canonical_topology(a, b, c, d)
    if s_ac < s_ab and s_ac < s_ad:
        return canonical_topology(a, c, b, d)
    if s_ad < s_ab and s_ad < s_ac:
        return canonical_topology(a, d, b, c)
    raise InvalidTreeError(f"quartet {(a, b, c, d)} is unresolved")


def derive_topology(t: UnrootedPhylogeny, quartet: Sequence[int]) -> QuartetTopology:
    """Topology that ``t`` induces on the given four taxa (four-point condition)."""
    a, b, c, d = quartet
    return _four_point(t.leaf_distances(), a, b, c, d)


def derive_all(t: UnrootedPhylogeny) -> QuartetSet:
    dist = t.leaf_distances()
    return QuartetSet(t.taxa, tuple(_four_point(dist, *qt) for qt in itertools.combinations(range(t.n), 4)))


def tree_satisfied_count(t: UnrootedPhylogeny, q: QuartetSet) -> int:
    if not len(q):
        return 0
    dist = t.leaf_distances()
    return sum(1 for top in q if _four_point(dist, *top.key) == top)


# ---------------------------------------------------------------------------
# generation


def tree_from_code(taxa: TaxonSet, code: Sequence[int]) -> UnrootedPhylogeny:
    """Build a tree by sequential leaf insertion.

    Leaves 0,1,2 start as a star; leaf ``k >= 3`` subdivides edge
    ``code[k-3]`` of the current edge list, which has ``2k-3`` entries.
    """
    n = taxa.n
    if n < 3:
        raise InvalidTreeError("insertion codes need at least three taxa")
    if len(code) != n - 3:
        raise ValueError(f"expected {n - 3} code digits, got {len(code)}")
    centre = n
    edges = [(centre, 0), (centre, 1), (centre, 2)]
    for k in range(3, n):
        e = code[k - 3]
        if not 0 <= e < len(edges):
            raise ValueError(f"code digit {e} out of range for leaf {k}")
        u, v = edges[e]
        w = n + k - 2
        edges[e] = (u, w)
        edges.append((w, v))
        edges.append((w, k))
    return UnrootedPhylogeny.from_edges(taxa, edges)


def code_radices(n: int) -> list[int]:
    return [2 * k - 3 for k in range(3, n)]


def random_tree(spec: GenSpec, taxa: TaxonSet | None = None) -> UnrootedPhylogeny:
    taxa = taxa or TaxonSet.numbered(spec.n)
    rng = Lcg(spec.seed)
    code = [rng.below(r) for r in code_radices(spec.n)]
    return tree_from_code(taxa, code)


def alter_quartets(q: QuartetSet, spec: GenSpec) -> QuartetSet:
    """Replace ``floor(alter_percent * |q| / 100)`` topologies by an alternative."""
    if not is_complete(q):
        raise ValueError("alteration requires a complete quartet set")
    m = len(q)
    k = spec.alter_percent * m // 100
    rng = Lcg(spec.seed ^ ALTER_SALT)
    order = list(range(m))
    for i in range(k):
        j = i + rng.below(m - i)
        order[i], order[j] = order[j], order[i]
    topologies = list(q.topologies)
    for idx in order[:k]:
        topologies[idx] = topologies[idx].alternatives()[rng.below(2)]
    return q.replace(topologies)


# ---------------------------------------------------------------------------
# ultrametric matrices <-> trees


def decode_matrix(m: UltrametricMatrix, taxa: TaxonSet) -> RootedPhylogeny:
    """Rooted phylogeny whose lowest-common-ancestor labels reproduce ``m``."""
    if m.n != taxa.n:
        raise ValueError("matrix size does not match the taxon set")
    bad = violating_triple(m)
    if bad is not None:
        i, j, l = bad
        raise DecodeError(
            f"not ultrametric at triple {bad}: M={m(i, j)},{m(i, l)},{m(j, l)}", bad)

    def build(members: list[int]) -> RootedNode:
        if len(members) == 1:
            return RootedNode(taxon=members[0])
        top = max(m(i, j) for i, j in itertools.combinations(members, 2))
        classes: list[list[int]] = []
        for x in members:
            for cls in classes:
                if m(cls[0], x) < top:
                    cls.append(x)
                    break
            else:
                classes.append([x])
        return RootedNode(children=tuple(build(c) for c in classes), label=top)

    return RootedPhylogeny(taxa, build(list(range(taxa.n))))


def lca_matrix(t: RootedPhylogeny) -> UltrametricMatrix:
    """Matrix of lowest-common-ancestor labels of a labelled rooted tree."""
    values: dict[tuple[int, int], int] = {}

    def walk(node: RootedNode) -> list[int]:
        if node.is_leaf:
            return [node.taxon]
        groups = [walk(c) for c in node.children]
        for g1, g2 in itertools.combinations(groups, 2):
            for x in g1:
                for y in g2:
                    values[(min(x, y), max(x, y))] = node.label
        return [x for g in groups for x in g]

    walk(t.root)
    return UltrametricMatrix.from_dict(t.n, values)


def unroot(t: RootedPhylogeny) -> UnrootedPhylogeny:
    """Unrooted binary phylogeny displaying every resolved cluster of ``t``.

    Multifurcations become caterpillars over the children ordered by their
    smallest taxon; unary nodes are contracted and the root is suppressed.
    """
    edges: list[tuple[int, int]] = []
    next_id = t.n

    def join(a: int, b: int) -> int:
        nonlocal next_id
        x = next_id
        next_id += 1
        edges.extend([(x, a), (x, b)])
        return x

    def tops(node: RootedNode) -> list[int]:
        return [build(c) for c in sorted(node.children, key=RootedNode.min_taxon)]

    def build(node: RootedNode) -> int:
        if node.is_leaf:
            return node.taxon
        ids = tops(node)
        cur = ids[0]
        for other in ids[1:]:
            cur = join(cur, other)
        return cur

    root = t.root
    while len(root.children) == 1:
        root = root.children[0]
    if root.is_leaf:
        raise InvalidTreeError("a single leaf cannot be unrooted")
    ids = tops(root)
    cur = ids[0]
    for other in ids[1:-1]:
        cur = join(cur, other)
    edges.append((cur, ids[-1]))
    return _relabel(t.taxa, edges)


def _relabel(taxa: TaxonSet, edges: list[tuple[int, int]]) -> UnrootedPhylogeny:
    n = taxa.n
    internal = sorted({v for e in edges for v in e if v >= n})
    remap = {v: n + i for i, v in enumerate(internal)}
    remap.update({i: i for i in range(n)})
    return UnrootedPhylogeny.from_edges(taxa, [(remap[u], remap[v]) for u, v in edges])


def rooted_at_centre(t: UnrootedPhylogeny) -> RootedPhylogeny:
    """Root ``t`` on the edge giving the shortest height, labelling internal
    nodes by height (leaves 0, parents one more than their tallest child)."""
    best = None
    for u, v in t.edges():
        root = RootedNode(children=(_hang(t, u, v), _hang(t, v, u)))
        root = _label_heights(root)
        if best is None or root.label < best.label:
            best = root
    return RootedPhylogeny(t.taxa, best)


def _hang(t: UnrootedPhylogeny, v: int, parent: int) -> RootedNode:
    if v < t.n:
        return RootedNode(taxon=v)
    return RootedNode(children=tuple(_hang(t, u, v) for u in t.adjacency[v] if u != parent))


def _label_heights(node: RootedNode) -> RootedNode:
    if node.is_leaf:
        return node
    kids = tuple(_label_heights(c) for c in node.children)
    h = 1 + max(c.label or 0 for c in kids)
    return RootedNode(children=kids, label=h)


def canonical_matrix(t: UnrootedPhylogeny) -> UltrametricMatrix:
    """Ultrametric matrix of ``t`` rooted at its centre with height labels."""
    return lca_matrix(rooted_at_centre(t))


def trees_isomorphic(t1: UnrootedPhylogeny, t2: UnrootedPhylogeny) -> bool:
    if set(t1.taxa.names) != set(t2.taxa.names) or t1.n != t2.n:
        raise ValueError("trees are on different taxon sets")
    if t1.taxa.names == t2.taxa.names:
        return t1.splits() == t2.splits()
    to1 = [t1.taxa.index(s) for s in t2.taxa.names]
    full = frozenset(range(t1.n))
    s2 = set()
    for s in t2.splits():
        mapped = frozenset(to1[x] for x in s)
        s2.add(full - mapped if 0 in mapped else mapped)
    return t1.splits() == s2


def tree_count(n: int) -> int:
    """Number of unrooted binary trees on ``n`` labelled leaves, (2n-5)!!."""
    return math.prod(code_radices(n)) if n >= 3 else 1
