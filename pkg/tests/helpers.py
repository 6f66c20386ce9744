"""Fixtures and independent checkers shared by the test modules."""
from __future__ import annotations

import itertools
import random

from qmqc.core import QuartetSet, TaxonSet, UltrametricMatrix, canonical_topology, quartets
from qmqc.pb import PBInstance, normalize, normalize_objective
from qmqc.trees import RootedNode, RootedPhylogeny

# rooted phylogeny on a..g and its LCA matrix, rows a..g
EXAMPLE_TAXA = TaxonSet(tuple("abcdefg"))
EXAMPLE_ROWS = [
    [0, 1, 4, 4, 4, 4, 2],
    [1, 0, 4, 4, 4, 4, 2],
    [4, 4, 0, 2, 2, 3, 4],
    [4, 4, 2, 0, 1, 3, 4],
    [4, 4, 2, 1, 0, 3, 4],
    [4, 4, 3, 3, 3, 0, 4],
    [2, 2, 4, 4, 4, 4, 0],
]


def example_matrix() -> UltrametricMatrix:
    return UltrametricMatrix.from_function(7, lambda i, j: EXAMPLE_ROWS[i][j])


def random_pb(rng: random.Random, max_vars: int = 18, max_cons: int = 30) -> PBInstance:
    """Random instance with a mix of clauses, cardinality and weighted rows."""
    nv = rng.randint(1, max_vars)
    cons = []
    for _ in range(rng.randint(0, max_cons)):
        vs = rng.sample(range(1, nv + 1), rng.randint(min(nv, 2), min(nv, 6)))
        terms = [(rng.choice((1, 1, 2, 3, 5)), v if rng.random() < 0.5 else -v) for v in vs]
        total = sum(c for c, _ in terms)
        bound = rng.randint(1, max(1, total // 3 + 1))
        cons.append(normalize(terms, bound))
    obj = [(rng.randint(-5, 5), v) for v in rng.sample(range(1, nv + 1), rng.randint(0, nv))]
    o, off = normalize_objective(obj)
    return PBInstance(nv, tuple(cons), o, off)


def random_quartets(rng: random.Random, n: int) -> QuartetSet:
    taxa = TaxonSet.numbered(n)
    tops = []
    for a, b, c, d in quartets(n):
        pairing = rng.randrange(3)
        tops.append([canonical_topology(a, b, c, d), canonical_topology(a, c, b, d),
                     canonical_topology(a, d, b, c)][pairing])
    return QuartetSet(taxa, tuple(tops))


def random_hierarchy(rng: random.Random, n: int) -> RootedPhylogeny:
    """Random rooted tree (multifurcations allowed) with labels growing toward the root."""
    pool = [RootedNode(taxon=i) for i in range(n)]
    rng.shuffle(pool)
    height = {id(x): 0 for x in pool}
    while len(pool) > 1:
        k = rng.randint(2, min(3, len(pool)))
        picked = [pool.pop(rng.randrange(len(pool))) for _ in range(k)]
        label = max(height[id(x)] for x in picked) + rng.randint(1, 2)
        node = RootedNode(children=tuple(picked), label=label)
        height[id(node)] = label
        pool.append(node)
    return RootedPhylogeny(TaxonSet.numbered(n), pool[0])


def brute_ultrametric(m: UltrametricMatrix) -> bool:
    for i, j, k in itertools.combinations(range(m.n), 3):
        a, b, c = m(i, j), m(i, k), m(j, k)
        top = max(a, b, c)
        if [a, b, c].count(top) < 2:
            return False
    return True


def extensions(inst: PBInstance, fixed: dict[int, bool]) -> list[dict[int, bool]]:
    """Every model of ``inst`` agreeing with ``fixed``.

    Plain depth-first enumeration over the unfixed variables in index
    order; a constraint is checked once its highest variable is assigned.
    """
    nv = inst.num_vars
    due: list[list] = [[] for _ in range(nv + 1)]
    for con in inst.constraints:
        last = max((abs(l) for _, l in con.terms), default=0)
        due[last].append(con)
    if any(not con.satisfied({}) for con in due[0]):
        return []
    out: list[dict[int, bool]] = []
    a: dict[int, bool] = {}

    def walk(v: int):
        if v > nv:
            out.append(dict(a))
            return
        for b in ((fixed[v],) if v in fixed else (False, True)):
            a[v] = b
            if all(con.satisfied(a) for con in due[v]):
                walk(v + 1)
        del a[v]

    walk(1)
    return out


def forced_values(b, fixed: dict[int, bool], outs: list[int]) -> set[tuple[bool, ...]]:
    """Values ``outs`` take across all models of builder ``b`` extending ``fixed``."""
    rows = extensions(b.freeze(), fixed)
    return {tuple(r[abs(o)] == (o > 0) for o in outs) for r in rows}


def unary_fix(bits, value: int) -> dict[int, bool]:
    return {v: k == value for k, v in enumerate(bits, start=1)}


def binary_fix(bits, value: int) -> dict[int, bool]:
    return {v: bool(value >> k & 1) for k, v in enumerate(bits)}


def circuit_failures() -> list[str]:
    """Exhaustively check every gate and comparator builder; returns problems found."""
    from qmqc.pb import BinaryInt, CircuitBuilder, UnaryInt

    bad: list[str] = []

    def expect(name, b, fixed, out, want):
        got = forced_values(b, fixed, [out])
        if got != {(want,)}:
            bad.append(f"{name} {fixed}: got {sorted(got)}, want {want}")

    for k in range(1, 5):
        for kind in ("and", "or"):
            b = CircuitBuilder()
            xs = b.new_vars(k, "x")
            lits = [x if i % 2 == 0 else -x for i, x in enumerate(xs)]
            g = b.and_gate(lits) if kind == "and" else b.or_gate(lits)
            for mask in range(1 << k):
                fixed = {x: bool(mask >> i & 1) for i, x in enumerate(xs)}
                vals = [fixed[x] if lit > 0 else not fixed[x] for x, lit in zip(xs, lits)]
                expect(f"{kind}{k}", b, fixed, g, all(vals) if kind == "and" else any(vals))

    b = CircuitBuilder()
    x, y = b.new_var("a"), b.new_var("b")
    g = b.xnor_gate(x, y)
    for va in (False, True):
        for vb in (False, True):
            expect("xnor", b, {x: va, y: vb}, g, va == vb)

    w = 5
    b = CircuitBuilder()
    x = UnaryInt(tuple(b.new_vars(w, "x")))
    y = UnaryInt(tuple(b.new_vars(w, "y")))
    eq, gt, lt = b.eq_unary(x, y), b.gt_unary(x, y), b.gt_unary(y, x)
    for vx in range(1, w + 1):
        for vy in range(1, w + 1):
            fixed = {**unary_fix(x.bits, vx), **unary_fix(y.bits, vy)}
            got = forced_values(b, fixed, [eq, gt, lt])
            if got != {(vx == vy, vx > vy, vx < vy)}:
                bad.append(f"unary {vx},{vy}: {sorted(got)}")

    b = CircuitBuilder()
    x = UnaryInt(tuple(b.new_vars(w, "x")))
    y = UnaryInt(tuple(b.new_vars(w, "y")))
    sx, sy = b.seq_counter_at_most_one(x), b.seq_counter_at_most_one(y)
    lt, gt, eq = b.lt_from_counters(sx, sy), b.lt_from_counters(sy, sx), b.eq_counters(sx, sy)
    for vx in range(1, w + 1):
        for vy in range(1, w + 1):
            fixed = {**unary_fix(x.bits, vx), **unary_fix(y.bits, vy)}
            got = forced_values(b, fixed, [lt, gt, eq])
            if got != {(vx < vy, vx > vy, vx == vy)}:
                bad.append(f"counter {vx},{vy}: {sorted(got)}")
            regs = forced_values(b, fixed, list(sx.regs))
            if regs != {tuple(k >= vx for k in range(1, w + 1))}:
                bad.append(f"registers for {vx}: {sorted(regs)}")

    b = CircuitBuilder()
    x = UnaryInt(tuple(b.new_vars(3, "x")))
    sx = b.seq_counter_at_most_one(x)
    for mask in range(8):
        fixed = {v: bool(mask >> i & 1) for i, v in enumerate(x.bits)}
        ok = bool(forced_values(b, fixed, []))
        if ok != (bin(mask).count("1") <= 1):
            bad.append(f"at-most-one accepts {mask:03b}: {ok}")

    b = CircuitBuilder()
    x = BinaryInt(tuple(b.new_vars(3, "x")))
    y = BinaryInt(tuple(b.new_vars(3, "y")))
    eq, gt, lt = b.eq_binary(x, y), b.gt_binary(x, y), b.gt_binary(y, x)
    les = {c: b.le_const(x, c) for c in range(0, 9)}
    for vx in range(8):
        for vy in range(8):
            fixed = {**binary_fix(x.bits, vx), **binary_fix(y.bits, vy)}
            got = forced_values(b, fixed, [eq, gt, lt])
            if got != {(vx == vy, vx > vy, vx < vy)}:
                bad.append(f"binary {vx},{vy}: {sorted(got)}")
        for c, le in les.items():
            expect(f"le_const {c}", b, binary_fix(x.bits, vx), le, vx <= c)
    return bad
