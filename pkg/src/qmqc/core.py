"""Quartets, quartet sets and ultrametric matrices.

Taxa are addressed by 0-based index into a :class:`TaxonSet`.  A quartet
topology ``[a,b|c,d]`` says the path joining ``a`` and ``b`` is disjoint from
the path joining ``c`` and ``d``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class InvalidQuartetError(ValueError):
    pass


class IncompleteQuartetSetError(ValueError):
    pass


@dataclass(frozen=True)
class TaxonSet:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if any(not isinstance(s, str) or not s or any(c.isspace() for c in s) for s in names):
            raise ValueError("taxon names must be non-empty strings without whitespace")
        if len(set(names)) != len(names):
            raise ValueError("taxon names must be unique")

    @classmethod
    def numbered(cls, n: int, prefix: str = "t") -> "TaxonSet":
        return cls(tuple(f"{prefix}{i + 1}" for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._lookup[name]
        except KeyError:
            raise KeyError(f"unknown taxon {name!r}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {s: i for i, s in enumerate(self.names)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache


@dataclass(frozen=True, order=True)
class QuartetTopology:
    """A canonical pairing ``[left | right]``.

    Canonical form: each pair ascending, pairs ordered by their smaller
    element.  Build instances through :func:`canonical_topology`.
    """

    left: tuple[int, int]
    right: tuple[int, int]

    @property
    def key(self) -> tuple[int, int, int, int]:
        return self.left + self.right

    @property
    def quartet(self) -> tuple[int, int, int, int]:
        """The underlying 4-subset, sorted."""
        return tuple(sorted(self.key))  # type: ignore[return-value]

    def alternatives(self) -> tuple["QuartetTopology", "QuartetTopology"]:
        """The two other topologies on the same four taxa, in canonical order."""
        a, b, c, d = self.quartet
        options = [canonical_topology(a, b, c, d), canonical_topology(a, c, b, d),
                   canonical_topology(a, d, b, c)]
        others = [t for t in options if t != self]
        return others[0], others[1]

    def partner(self, x: int) -> int:
        """The taxon paired with ``x`` in this topology."""
        (a, b), (c, d) = self.left, self.right
        return {a: b, b: a, c: d, d: c}[x]

    def __str__(self) -> str:
        return f"[{self.left[0]},{self.left[1]}|{self.right[0]},{self.right[1]}]"


def canonical_topology(a: int, b: int, c: int, d: int) -> QuartetTopology:
    if len({a, b, c, d}) != 4:
        raise InvalidQuartetError(f"quartet indices must be distinct: {(a, b, c, d)}")
    p = (a, b) if a < b else (b, a)
    r = (c, d) if c < d else (d, c)
    if r[0] < p[0]:
        p, r = r, p
    return QuartetTopology(p, r)


def quartets(n: int) -> Iterator[tuple[int, int, int, int]]:
    return itertools.combinations(range(n), 4)


@dataclass(frozen=True)
class QuartetSet:
    """At most one topology per 4-subset of ``taxa``, kept in sorted order."""

    taxa: TaxonSet
    topologies: tuple[QuartetTopology, ...] = ()
    _by_quartet: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        topos = tuple(sorted(self.topologies))
        n = self.taxa.n
        by_quartet: dict[tuple[int, int, int, int], QuartetTopology] = {}
        for t in topos:
            if max(t.key) >= n:
                raise InvalidQuartetError(f"topology {t} outside taxon range 0..{n - 1}")
            q = t.quartet
            if q in by_quartet:
                raise InvalidQuartetError(f"duplicate quartet {q}")
            by_quartet[q] = t
        object.__setattr__(self, "topologies", topos)
        object.__setattr__(self, "_by_quartet", by_quartet)

    @property
    def n(self) -> int:
        return self.taxa.n

    def __len__(self) -> int:
        return len(self.topologies)

    def __iter__(self) -> Iterator[QuartetTopology]:
        return iter(self.topologies)

    def get(self, a: int, b: int, c: int, d: int) -> QuartetTopology | None:
        """Topology stored for the 4-subset ``{a,b,c,d}``, if any."""
        return self._by_quartet.get(tuple(sorted((a, b, c, d))))

    def replace(self, topologies: Iterable[QuartetTopology]) -> "QuartetSet":
        return QuartetSet(self.taxa, tuple(topologies))


def is_complete(q: QuartetSet) -> bool:
    return len(q) == math.comb(q.n, 4)


@dataclass(frozen=True)
class UltrametricMatrix:
    """Upper triangle of a symmetric integer matrix; the diagonal is 0.

    ``entries`` lists ``M(i,j)`` for ``i < j`` in lexicographic pair order.
    """

    n: int
    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(v) for v in self.entries))
        if len(self.entries) != self.n * (self.n - 1) // 2:
            raise ValueError(f"expected {self.n * (self.n - 1) // 2} entries, got {len(self.entries)}")

    @classmethod
    def from_function(cls, n: int, f) -> "UltrametricMatrix":
        return cls(n, tuple(f(i, j) for i, j in itertools.combinations(range(n), 2)))

    @classmethod
    def from_dict(cls, n: int, values: dict[tuple[int, int], int]) -> "UltrametricMatrix":
        return cls.from_function(n, lambda i, j: values[(i, j)] if (i, j) in values else values[(j, i)])

    def _pos(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * (2 * self.n - i - 1) // 2 + (j - i - 1)

    def __call__(self, i: int, j: int) -> int:
        if i == j:
            return 0
        return self.entries[self._pos(i, j)]

    def pairs(self) -> Iterator[tuple[int, int, int]]:
        for (i, j), v in zip(itertools.combinations(range(self.n), 2), self.entries):
            yield i, j, v

    def to_rows(self) -> list[list[int]]:
        return [[self(i, j) for j in range(self.n)] for i in range(self.n)]


def violating_triple(m: UltrametricMatrix) -> tuple[int, int, int] | None:
    """First triple ``i<j<l`` whose maximum entry is attained only once."""
    for i, j, l in itertools.combinations(range(m.n), 3):
        vals = sorted((m(i, j), m(i, l), m(j, l)))
        if vals[1] != vals[2]:
            return i, j, l
    return None


def is_ultrametric(m: UltrametricMatrix) -> bool:
    return violating_triple(m) is None


def matrix_consistency(m: UltrametricMatrix, t: QuartetTopology) -> bool:
    (i, j), (l, k) = t.left, t.right
    mij, mlk = m(i, j), m(l, k)
    mil, mjk = m(i, l), m(j, k)
    return (mil > mij and mjk > mij) or (mil > mlk and mjk > mlk)


def matrix_satisfied_count(m: UltrametricMatrix, q: QuartetSet) -> int:
    return sum(1 for t in q if matrix_consistency(m, t))


@dataclass(frozen=True)
class SiblingsReport:
    pair: tuple[int, int]
    p1: int
    p2: int
    is_sibling: bool


def sibling_report(q: QuartetSet, i: int, j: int) -> SiblingsReport:
    n = q.n
    others = [y for y in range(n) if y not in (i, j)]
    p1 = 0
    for y1, y2 in itertools.combinations(others, 2):
        if q.get(i, j, y1, y2) != canonical_topology(i, j, y1, y2):
            p1 += 1
    # a 2-subset {i,y1,y2,y3}, {j,y1,y2,y3} is exchangeable iff i and j
    # have the same partner in their two topologies
    p2 = 0
    for ys in itertools.combinations(others, 3):
        ti, tj = q.get(i, *ys), q.get(j, *ys)
        if ti.partner(i) != tj.partner(j):
            p2 += 1
    return SiblingsReport((i, j), p1, p2, 2 * p1 + p2 <= n - 3)


def detect_siblings(q: QuartetSet) -> list[SiblingsReport]:
    """Test the sibling criterion ``2*p1 + p2 <= n - 3`` for every pair of taxa.

    Requires a complete quartet set.
    """
    if not is_complete(q):
        raise IncompleteQuartetSetError("sibling detection requires a complete quartet set")
    return [sibling_report(q, i, j) for i, j in itertools.combinations(range(q.n), 2)]


def topologies_from_pairs(taxa: TaxonSet, pairs: Sequence[tuple[int, int, int, int]]) -> QuartetSet:
    return QuartetSet(taxa, tuple(canonical_topology(*p) for p in pairs))
