"""PB models of maximum quartet consistency over ultrametric matrices.

Each pair ``i<j`` of taxa gets an integer ``M(i,j)`` in ``1..ceil(n/2)``:

* ``basic`` -- one-hot selector bits with an exactly-one constraint;
* ``fst``   -- one-hot bits, at-most-one through a sequential counter whose
  registers are reused for every ``<`` comparison;
* ``scd``   -- binary bits, bounded above by a reified ``<= ceil(n/2)`` test.

Every triple must satisfy one of the strict ultrametric patterns, and each
topology ``t = [i,j|l,m]`` gets a flag ``q_t`` that holds iff the matrix
resolves it.  The objective minimises ``-sum(q_t)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, TextIO

from .core import (
    QuartetSet,
    SiblingsReport,
    TaxonSet,
    UltrametricMatrix,
    detect_siblings,
)
from .pb import BinaryInt, CircuitBuilder, Constraint, CounterRegs, PBInstance, UnaryInt, lit_value, normalize

VARIANTS = ("basic", "fst", "scd")

Pair = tuple[int, int]


class EncodingError(ValueError):
    pass


class AssignmentDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class ModelVariant:
    kind: str = "basic"
    siblings: bool = False

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValueError(f"unknown model {self.kind!r}; expected one of {', '.join(VARIANTS)}")

    @property
    def binary(self) -> bool:
        return self.kind == "scd"

    @property
    def name(self) -> str:
        return self.kind + ("+trd" if self.siblings else "")


@dataclass
class VarMap:
    variant: ModelVariant
    taxa: TaxonSet
    width: int
    num_vars: int
    values: dict[Pair, tuple[int, ...]]
    q_vars: tuple[int, ...]
    counters: dict[Pair, tuple[int, ...]] = field(default_factory=dict)
    ltb: dict[Pair, int] = field(default_factory=dict)
    gates: dict[str, int] = field(default_factory=dict)
    roles: tuple[str | None, ...] = ()
    fixed_pairs: tuple[Pair, ...] = ()

    @property
    def n(self) -> int:
        return self.taxa.n

    @property
    def upper(self) -> int:
        return math.ceil(self.n / 2)

    def value_of(self, pair: Pair, assignment: Mapping[int, bool]) -> int:
        bits = self.values[pair]
        if self.variant.binary:
            return BinaryInt(bits).value(assignment)
        on = [k for k, b in enumerate(bits, start=1) if lit_value(assignment, b)]
        if len(on) != 1:
            raise AssignmentDecodeError(f"pair {pair} selects {len(on)} values, expected exactly one")
        return on[0]


def value_width(n: int, binary: bool) -> int:
    upper = math.ceil(n / 2)
    return upper.bit_length() if binary else upper


class _Model:
    def __init__(self, q: QuartetSet, variant: ModelVariant):
        self.q = q
        self.variant = variant
        self.b = CircuitBuilder()
        self.n = q.n
        self.upper = math.ceil(self.n / 2)
        self.width = value_width(self.n, variant.binary)
        self.values: dict[Pair, UnaryInt | BinaryInt] = {}
        self.counters: dict[Pair, CounterRegs] = {}
        self.ltb: dict[Pair, int] = {}
        self.gates: dict[str, int] = {}
        self._memo: dict[tuple, int] = {}

    @staticmethod
    def pair(a: int, b: int) -> Pair:
        return (a, b) if a < b else (b, a)

    def build(self) -> tuple[PBInstance, VarMap]:
        b = self.b
        pairs = list(itertools.combinations(range(self.n), 2))
        start = 0 if self.variant.binary else 1
        for i, j in pairs:
            bits = tuple(b.new_var(f"M {i} {j} {k}") for k in range(start, start + self.width))
            self.values[(i, j)] = BinaryInt(bits) if self.variant.binary else UnaryInt(bits)
        for p in pairs:
            self._domain(p)
        for i, j, l in itertools.combinations(range(self.n), 3):
            self._triple(i, j, l)
        conds = [self._conditions(t) for t in self.q]
        q_vars = []
        for t, (d1, d2) in zip(self.q, conds):
            tag = "%d %d %d %d" % t.key
            q_vars.append(b.or_gate([d1, d2], role=f"q {tag}"))
        b.minimize((-1, v) for v in q_vars)
        inst = b.freeze()
        vmap = VarMap(
            variant=self.variant,
            taxa=self.q.taxa,
            width=self.width,
            num_vars=inst.num_vars,
            values={p: x.bits for p, x in self.values.items()},
            q_vars=tuple(q_vars),
            counters={p: c.regs for p, c in self.counters.items()},
            ltb=dict(self.ltb),
            gates=dict(self.gates),
            roles=tuple(b.roles),
        )
        return inst, vmap

    def _domain(self, p: Pair) -> None:
        b = self.b
        x = self.values[p]
        tag = "%d %d" % p
        b.at_least(x.bits, 1)
        if self.variant.kind == "basic":
            b.at_most(x.bits, 1)
        elif self.variant.kind == "fst":
            self.counters[p] = b.seq_counter_at_most_one(x, role=f"reg {tag}")
        else:
            ltb = b.le_const(x, self.upper, role=f"ltb {tag}")
            self.ltb[p] = ltb
            b.add([(1, ltb)], 1)

    # comparators are shared between all gates that need them
    def gt(self, a: Pair, c: Pair) -> int:
        """Literal for ``M(a) > M(c)``."""
        kind = self.variant.kind
        key = ("lt", c, a) if kind == "fst" else ("gt", a, c)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        role = "%s %d,%d %d,%d" % (key[0], *key[1], *key[2])
        b = self.b
        if kind == "basic":
            g = b.gt_unary(self.values[a], self.values[c], role=role)
        elif kind == "fst":
            g = b.lt_from_counters(self.counters[c], self.counters[a], role=role)
        else:
            g = b.gt_binary(self.values[a], self.values[c], role=role)
        self._memo[key] = g
        return g

    def eq(self, a: Pair, c: Pair) -> int:
        """Literal for ``M(a) == M(c)``."""
        a, c = min(a, c), max(a, c)
        key = ("eq", a, c)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        role = "eq %d,%d %d,%d" % (*a, *c)
        b = self.b
        if self.variant.kind == "basic":
            g = b.eq_unary(self.values[a], self.values[c], role=role)
        elif self.variant.kind == "fst":
            g = b.eq_counters(self.counters[a], self.counters[c], role=role)
        else:
            g = b.eq_binary(self.values[a], self.values[c], role=role)
        self._memo[key] = g
        return g

    def _triple(self, i: int, j: int, l: int) -> None:
        ij, il, jl = (i, j), (i, l), (j, l)
        b = self.b
        # every comparison between pairs sharing a taxon is built here, so
        # model size does not depend on which topologies are present
        for a, c in itertools.permutations((ij, il, jl), 2):
            if a < c:
                self.eq(a, c)
            self.gt(a, c)
        tag = f"{i} {j} {l}"
        # c1: M(i,j) = M(i,l) > M(j,l)
        c1 = b.and_gate([self.eq(ij, il), self.gt(il, jl)], role=f"c1 {tag}")
        # c2: M(i,j) = M(j,l) > M(i,l)
        c2 = b.and_gate([self.eq(ij, jl), self.gt(jl, il)], role=f"c2 {tag}")
        # c3: M(j,l) = M(i,l) > M(i,j)
        c3 = b.and_gate([self.eq(jl, il), self.gt(il, ij)], role=f"c3 {tag}")
        self.gates.update({f"c1 {tag}": c1, f"c2 {tag}": c2, f"c3 {tag}": c3})
        b.add_clause([c1, c2, c3])

    def _conditions(self, t) -> tuple[int, int]:
        (i, j), (l, m) = t.left, t.right
        P = self.pair
        b = self.b
        tag = "%d %d %d %d" % t.key
        # d1: M(i,l) > M(i,j) and M(j,m) > M(i,j)
        d1 = b.and_gate([self.gt(P(i, l), P(i, j)), self.gt(P(j, m), P(i, j))], role=f"d1 {tag}")
        # d2: M(i,l) > M(l,m) and M(j,m) > M(l,m)
        d2 = b.and_gate([self.gt(P(i, l), P(l, m)), self.gt(P(j, m), P(l, m))], role=f"d2 {tag}")
        self.gates.update({f"d1 {tag}": d1, f"d2 {tag}": d2})
        return d1, d2


def encode(q: QuartetSet, variant: ModelVariant | str = "basic", siblings: bool | None = None
           ) -> tuple[PBInstance, VarMap]:
    """Build the PB model for ``q``.

    With ``siblings`` (or ``variant.siblings``) the sibling test is run on
    ``q`` and every detected pair is fixed to ``M(i,j) = 1``.
    """
    if isinstance(variant, str):
        variant = ModelVariant(variant, bool(siblings))
    elif siblings is not None:
        variant = ModelVariant(variant.kind, siblings)
    if q.n < 4:
        raise EncodingError(f"need at least 4 taxa, got {q.n}")
    inst, vmap = _Model(q, variant).build()
    if variant.siblings:
        inst = apply_siblings(inst, vmap, detect_siblings(q))
    return inst, vmap


def sibling_constraints(vmap: VarMap, pair: Pair) -> list[Constraint]:
    """Constraints forcing ``M(i,j) = 1``."""
    if pair not in vmap.values:
        raise EncodingError(f"pair {pair} out of range for {vmap.n} taxa")
    bits = vmap.values[pair]
    # unary: bit for value 1 set, others clear; binary: bit 0 set, others clear
    return [normalize([(1, bits[0])], 1)] + [normalize([(-1, v)], 0) for v in bits[1:]]


def apply_siblings(inst: PBInstance, vmap: VarMap, reports: Iterable[SiblingsReport]) -> PBInstance:
    """Fix ``M(i,j) = 1`` for every reported sibling pair.

    A pair sharing a taxon with an already fixed pair is skipped: two
    overlapping cherries cannot coexist, and fixing both would make the
    model infeasible.
    """
    extra: list[Constraint] = []
    used: set[int] = set()
    fixed = []
    for rep in reports:
        if not rep.is_sibling:
            continue
        i, j = rep.pair
        if i in used or j in used:
            continue
        extra.extend(sibling_constraints(vmap, (min(i, j), max(i, j))))
        used.update((i, j))
        fixed.append((min(i, j), max(i, j)))
    vmap.fixed_pairs = tuple(fixed)
    if not extra:
        return inst
    return inst.with_constraints(extra)


def decode_assignment(vmap: VarMap, assignment: Mapping[int, bool]
                      ) -> tuple[UltrametricMatrix, tuple[bool, ...]]:
    """Matrix entries and per-topology satisfaction flags from a model."""
    values = {p: vmap.value_of(p, assignment) for p in vmap.values}
    matrix = UltrametricMatrix.from_dict(vmap.n, values)
    flags = tuple(lit_value(assignment, v) for v in vmap.q_vars)
    return matrix, flags


# -- sidecar map files --------------------------------------------------------

MAP_MAGIC = "qmqc-varmap 1"


def format_varmap(vmap: VarMap) -> str:
    start = 0 if vmap.variant.binary else 1
    lines = [
        MAP_MAGIC,
        f"numVars {vmap.num_vars}",
        f"variant {vmap.variant.kind}",
        f"siblings {int(vmap.variant.siblings)}",
        f"n {vmap.n}",
        f"width {vmap.width}",
        "taxa " + " ".join(vmap.taxa.names),
    ]
    for (i, j), bits in sorted(vmap.values.items()):
        for k, v in enumerate(bits, start=start):
            lines.append(f"M {i} {j} {k} {v}")
    for t, v in enumerate(vmap.q_vars):
        lines.append(f"q {t} {v}")
    return "\n".join(lines) + "\n"


def parse_varmap(text: str) -> VarMap:
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAP_MAGIC:
        raise ValueError("not a qmqc variable map")
    header: dict[str, str] = {}
    values: dict[Pair, dict[int, int]] = {}
    q_vars: dict[int, int] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "M":
                i, j, k, v = map(int, parts[1:])
                values.setdefault((i, j), {})[k] = v
            elif parts[0] == "q":
                t, v = map(int, parts[1:])
                q_vars[t] = v
            else:
                header[parts[0]] = " ".join(parts[1:])
        except ValueError:
            raise ValueError(f"line {lineno}: malformed record {raw!r}") from None
    variant = ModelVariant(header["variant"], header.get("siblings", "0") == "1")
    taxa = TaxonSet(tuple(header["taxa"].split()))
    return VarMap(
        variant=variant,
        taxa=taxa,
        width=int(header["width"]),
        num_vars=int(header["numVars"]),
        values={p: tuple(ks[k] for k in sorted(ks)) for p, ks in values.items()},
        q_vars=tuple(q_vars[t] for t in sorted(q_vars)),
    )


def write_varmap(vmap: VarMap, out: TextIO) -> None:
    out.write(format_varmap(vmap))
