"""Linear pseudo-Boolean constraints and reified circuit builders.

Variables are positive integers allocated densely from 1; a literal is
``+v`` or ``-v``.  Every constraint is kept in the normal form
``sum(coef * lit) >= bound`` with positive coefficients, one term per
variable, terms sorted by variable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

Term = tuple[int, int]  # (coefficient, literal)


@dataclass(frozen=True)
class Constraint:
    terms: tuple[Term, ...]
    bound: int

    def slack(self, assignment: Mapping[int, bool]) -> int:
        """``lhs - bound`` under a total assignment; negative means violated."""
        return sum(c for c, lit in self.terms if lit_value(assignment, lit)) - self.bound

    def satisfied(self, assignment: Mapping[int, bool]) -> bool:
        return self.slack(assignment) >= 0

    @property
    def is_clause(self) -> bool:
        return self.bound == 1


def lit_value(assignment: Mapping[int, bool], lit: int) -> bool:
    value = assignment[abs(lit)]
    return bool(value) if lit > 0 else not value


def normalize(terms: Iterable[Term], bound: int) -> Constraint:
    """Bring ``sum(coef * lit) >= bound`` into normal form.

    Terms on the same variable are merged (``c*~x == c - c*x``), zero
    coefficients dropped and negative coefficients moved onto the negated
    literal.
    """
    per_var: dict[int, int] = {}
    for coef, lit in terms:
        if lit == 0:
            raise ValueError("literal 0 is not a variable")
        v = abs(lit)
        if lit < 0:
            bound -= coef
            coef = -coef
        per_var[v] = per_var.get(v, 0) + coef
    out = []
    for v in sorted(per_var):
        c = per_var[v]
        if c > 0:
            out.append((c, v))
        elif c < 0:
            out.append((-c, -v))
            bound -= c
    return Constraint(tuple(out), bound)


def normalize_objective(terms: Iterable[Term]) -> tuple[tuple[Term, ...], int]:
    """Objective as signed coefficients on positive literals, plus a constant."""
    per_var: dict[int, int] = {}
    offset = 0
    for coef, lit in terms:
        v = abs(lit)
        if lit < 0:
            offset += coef
            coef = -coef
        per_var[v] = per_var.get(v, 0) + coef
    return tuple((per_var[v], v) for v in sorted(per_var) if per_var[v]), offset


@dataclass(frozen=True)
class PBInstance:
    """Minimise ``sum(objective) + offset`` subject to ``constraints``."""

    num_vars: int
    constraints: tuple[Constraint, ...]
    objective: tuple[Term, ...] = ()
    offset: int = 0

    def __post_init__(self):
        for con in self.constraints:
            for _, lit in con.terms:
                if abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} exceeds num_vars={self.num_vars}")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def objective_value(self, assignment: Mapping[int, bool]) -> int:
        return self.offset + sum(c for c, lit in self.objective if lit_value(assignment, lit))

    def violated(self, assignment: Mapping[int, bool]) -> int | None:
        """Index of the first violated constraint, or ``None``."""
        for i, con in enumerate(self.constraints):
            if not con.satisfied(assignment):
                return i
        return None

    def with_constraints(self, extra: Iterable[Constraint]) -> "PBInstance":
        return PBInstance(self.num_vars, self.constraints + tuple(extra), self.objective, self.offset)


@dataclass(frozen=True)
class UnaryInt:
    """One-hot integer: ``bits[k-1]`` is true iff the value is ``k``."""
    bits: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.bits)

    def value(self, assignment: Mapping[int, bool]) -> int:
        return sum(k for k, b in enumerate(self.bits, start=1) if lit_value(assignment, b))


@dataclass(frozen=True)
class CounterRegs:
    """Sequential-counter registers; ``regs[k-1]`` holds ``x_1 or ... or x_k``."""
    regs: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.regs)


@dataclass(frozen=True)
class BinaryInt:
    """Little-endian bit vector: value ``sum(2**k * bits[k])``."""
    bits: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.bits)

    def value(self, assignment: Mapping[int, bool]) -> int:
        return sum(1 << k for k, b in enumerate(self.bits) if lit_value(assignment, b))


class WidthMismatchError(ValueError):
    pass


def _same_width(x, y):
    if x.width != y.width:
        raise WidthMismatchError(f"operand widths differ: {x.width} vs {y.width}")


class CircuitBuilder:
    """Accumulates variables and constraints for one instance.

    Every variable is created with a role string, so the finished instance
    can account for each of its variables.
    """

    def __init__(self):
        self.roles: list[str | None] = [None]
        self.constraints: list[Constraint] = []
        self.objective: list[Term] = []
        self._prefix_cache: dict[tuple[int, ...], list[int]] = {}
        self._xnor_cache: dict[tuple[int, int], int] = {}

    @property
    def num_vars(self) -> int:
        return len(self.roles) - 1

    def new_var(self, role: str) -> int:
        self.roles.append(role)
        return len(self.roles) - 1

    def new_vars(self, count: int, role: str) -> list[int]:
        return [self.new_var(f"{role} {k}") for k in range(count)]

    def add(self, terms: Iterable[Term], bound: int) -> Constraint:
        con = normalize(terms, bound)
        self.constraints.append(con)
        return con

    def add_clause(self, lits: Iterable[int]) -> Constraint:
        return self.add([(1, lit) for lit in lits], 1)

    def at_least(self, lits: Sequence[int], k: int) -> Constraint:
        return self.add([(1, lit) for lit in lits], k)

    def at_most(self, lits: Sequence[int], k: int) -> Constraint:
        return self.add([(-1, lit) for lit in lits], -k)

    def minimize(self, terms: Iterable[Term]) -> None:
        self.objective.extend(terms)

    def freeze(self) -> PBInstance:
        objective, offset = normalize_objective(self.objective)
        return PBInstance(self.num_vars, tuple(self.constraints), objective, offset)

    # -- gates --------------------------------------------------------------

    def and_gate(self, lits: Sequence[int], role: str = "and") -> int:
        """Fresh ``g`` with ``g <-> all(lits)``."""
        if not lits:
            raise ValueError("AND gate needs at least one input")
        g = self.new_var(role)
        k = len(lits)
        # g -> each input
        self.add([(1, lit) for lit in lits] + [(k, -g)], k)
        # all inputs -> g
        self.add_clause([g] + [-lit for lit in lits])
        return g

    def or_gate(self, lits: Sequence[int], role: str = "or") -> int:
        """Fresh ``g`` with ``g <-> any(lits)``."""
        if not lits:
            raise ValueError("OR gate needs at least one input")
        g = self.new_var(role)
        k = len(lits)
        # g -> some input
        self.add_clause([-g] + list(lits))
        # each input -> g
        self.add([(k, g)] + [(1, -lit) for lit in lits], k)
        return g

    def xnor_gate(self, a: int, b: int, role: str = "xnor") -> int:
        key = (min(a, b), max(a, b))
        if key in self._xnor_cache:
            return self._xnor_cache[key]
        g = self.new_var(role)
        self.add_clause([-g, -a, b])
        self.add_clause([-g, a, -b])
        self.add_clause([g, a, b])
        self.add_clause([g, -a, -b])
        self._xnor_cache[key] = g
        return g

    # -- unary (one-hot) comparators ---------------------------------------

    def prefix_or(self, y: UnaryInt) -> list[int]:
        """Shared prefix ORs ``P_k <-> y_1 or ... or y_k`` for ``k < width``."""
        cached = self._prefix_cache.get(y.bits)
        if cached is not None:
            return cached
        prefix: list[int] = []
        for k, bit in enumerate(y.bits[:-1]):
            inputs = [bit] if k == 0 else [prefix[-1], bit]
            prefix.append(self.or_gate(inputs, role=f"prefix {k + 1}"))
        self._prefix_cache[y.bits] = prefix
        return prefix

    def eq_unary(self, x: UnaryInt, y: UnaryInt, role: str = "eq") -> int:
        _same_width(x, y)
        conj = [self.and_gate([a, b], role=f"{role} and") for a, b in zip(x.bits, y.bits)]
        return self.or_gate(conj, role=role)

    def gt_unary(self, x: UnaryInt, y: UnaryInt, role: str = "gt") -> int:
        _same_width(x, y)
        if x.width < 2:
            return self._const(False, role)
        prefix = self.prefix_or(y)
        conj = [self.and_gate([x.bits[k], prefix[k - 1]], role=f"{role} and")
                for k in range(1, x.width)]
        return self.or_gate(conj, role=role)

    def _const(self, value: bool, role: str) -> int:
        g = self.new_var(role)
        self.add_clause([g if value else -g])
        return g

    # -- sequential counter --------------------------------------------------

    def seq_counter_at_most_one(self, x: UnaryInt, role: str = "reg") -> CounterRegs:
        """At most one bit of ``x`` true, with registers ``s_k <-> x_1 or ... or x_k``."""
        regs = [self.new_var(f"{role} {k + 1}") for k in range(x.width)]
        for k, (bit, s) in enumerate(zip(x.bits, regs)):
            self.add_clause([-bit, s])
            if k > 0:
                prev = regs[k - 1]
                self.add_clause([-prev, s])
                self.add_clause([-bit, -prev])
                self.add_clause([-s, bit, prev])
            else:
                self.add_clause([-s, bit])
        return CounterRegs(tuple(regs))

    def lt_from_counters(self, sx: CounterRegs, sy: CounterRegs, role: str = "lt") -> int:
        """``value(x) < value(y)``: some register set for ``x`` but not for ``y``."""
        _same_width(sx, sy)
        conj = [self.and_gate([a, -b], role=f"{role} e{k + 1}")
                for k, (a, b) in enumerate(zip(sx.regs, sy.regs))]
        return self.or_gate(conj, role=role)

    def eq_counters(self, sx: CounterRegs, sy: CounterRegs, role: str = "eq") -> int:
        _same_width(sx, sy)
        same = [self.xnor_gate(a, b, role=f"{role} xnor") for a, b in zip(sx.regs, sy.regs)]
        return self.and_gate(same, role=role)

    # -- binary comparators --------------------------------------------------

    def eq_binary(self, x: BinaryInt, y: BinaryInt, role: str = "eq") -> int:
        _same_width(x, y)
        same = [self.xnor_gate(a, b, role=f"{role} xnor") for a, b in zip(x.bits, y.bits)]
        return self.and_gate(same, role=role)

    def gt_binary(self, x: BinaryInt, y: BinaryInt, role: str = "gt") -> int:
        _same_width(x, y)
        w = x.width
        same = [self.xnor_gate(a, b, role=f"{role} xnor") for a, b in zip(x.bits, y.bits)]
        conj = [self.and_gate([x.bits[k], -y.bits[k]] + same[k + 1:], role=f"{role} and")
                for k in range(w)]
        return self.or_gate(conj, role=role)

    def le_const(self, x: BinaryInt, c: int, role: str = "le") -> int:
        """Fresh literal true iff ``value(x) <= c``."""
        if c < 0:
            raise ValueError("constant must be non-negative")
        w = x.width
        cbits = [(c >> k) & 1 for k in range(w)]
        if c >> w:
            return self._const(True, role)
        # x > c iff at some bit where c has 0, x has 1 and all higher bits agree
        above = []
        for k in range(w):
            if cbits[k]:
                continue
            higher = [x.bits[j] if cbits[j] else -x.bits[j] for j in range(k + 1, w)]
            if higher:
                above.append(self.and_gate([x.bits[k]] + higher, role=f"{role} above"))
            else:
                above.append(x.bits[k])
        if not above:
            return self._const(True, role)
        return self.and_gate([-a for a in above], role=role)


def enumerate_assignments(num_vars: int):
    """All total assignments over ``1..num_vars`` as dicts, in binary order."""
    for mask in range(1 << num_vars):
        yield {v: bool(mask >> (v - 1) & 1) for v in range(1, num_vars + 1)}
