"""Exact pseudo-Boolean optimisation.

The search is DPLL with conflict-driven clause learning.  Binary clauses
live in implication lists, longer clauses are watched with two literals,
and all other constraints keep a running slack
(``sum of non-false coefficients - bound``) and force every unassigned
literal whose coefficient exceeds it.  Optimisation is a linear search:
each solution with objective ``z`` adds ``objective <= z - 1`` and the
search resumes, so the last solution found is optimal.

Branching is static: lowest-index unassigned variable, objective-decreasing
polarity first (false when the variable has no objective weight).  There
are no restarts, so results are fully deterministic.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

from .pb import Constraint, PBInstance, normalize

OPTIMAL = "Optimal"
UNSATISFIABLE = "Unsatisfiable"
TIMEOUT = "Timeout"


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float | None = None
    learning: bool = True
    minimize_learnt: bool = True


@dataclass(frozen=True)
class SolveStats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    solutions: int = 0
    elapsed: float = 0.0


@dataclass(frozen=True)
class SolveResult:
    status: str
    assignment: dict[int, bool] | None = None
    objective: int | None = None
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class ModelCheck:
    ok: bool
    violated: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_model(inst: PBInstance, assignment: Mapping[int, bool]) -> ModelCheck:
    """Whether a total assignment satisfies every constraint of ``inst``."""
    missing = [v for v in range(1, inst.num_vars + 1) if v not in assignment]
    if missing:
        raise ValueError(f"assignment is partial: {len(missing)} variables unset (first x{missing[0]})")
    bad = inst.violated(assignment)
    return ModelCheck(bad is None, bad)


class _Unsat(Exception):
    pass


class _Timeout(Exception):
    pass


def _code(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


class _Engine:
    def __init__(self, inst: PBInstance, config: SolverConfig):
        nv = inst.num_vars
        self.nv = nv
        self.config = config
        size = 2 * nv + 2
        self.val = [0] * size
        self.level = [0] * (nv + 1)
        self.reason: list[int | None] = [None] * (nv + 1)
        self.tpos = [0] * (nv + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.flipped: list[bool] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.watches: list[list[int]] = [[] for _ in range(size)]
        # bins[a] lists (b, clause) for binary clauses (a or b)
        self.bins: list[list[tuple[int, int]]] = [[] for _ in range(size)]
        self.pb_terms: list[list[tuple[int, int]]] = []
        self.pb_slack: list[int] = []
        self.pb_max: list[int] = []
        self.occ: list[list[tuple[int, int]]] = [[] for _ in range(size)]
        self.seen = [0] * (nv + 1)
        self.next_var = 1
        self.decisions = 0
        self.propagations = 0
        self.conflicts = 0
        weight = [0] * (nv + 1)
        for c, v in inst.objective:
            weight[abs(v)] += c if v > 0 else -c
        # preferred literal per variable: the one that does not increase the objective
        self.phase = [_code(-v) if weight[v] >= 0 else _code(v) for v in range(nv + 1)]
        self.deadline = None if config.time_limit is None else time.monotonic() + config.time_limit
        for con in inst.constraints:
            self.add_constraint(con)

    # -- assignment ---------------------------------------------------------

    def enqueue(self, c: int, reason: int | None) -> None:
        val = self.val
        val[c] = 1
        val[c ^ 1] = -1
        v = c >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.tpos[v] = len(self.trail)
        self.trail.append(c)
        slack = self.pb_slack
        for ci, coef in self.occ[c ^ 1]:
            slack[ci] -= coef

    def backtrack(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        lim = self.trail_lim[lvl]
        val = self.val
        slack = self.pb_slack
        occ = self.occ
        reason = self.reason
        low = self.next_var
        for c in self.trail[lim:]:
            val[c] = 0
            val[c ^ 1] = 0
            v = c >> 1
            reason[v] = None
            if v < low:
                low = v
            for ci, coef in occ[c ^ 1]:
                slack[ci] += coef
        self.next_var = low
        del self.trail[lim:]
        del self.trail_lim[lvl:]
        del self.flipped[lvl:]
        self.qhead = min(self.qhead, lim)

    # -- constraint database ------------------------------------------------

    def add_constraint(self, con: Constraint) -> None:
        """Add a constraint while at decision level 0."""
        assert not self.trail_lim
        bound = con.bound
        terms = []
        for coef, lit in con.terms:
            c = _code(lit)
            if self.val[c] == 1:
                bound -= coef
            elif self.val[c] == 0:
                terms.append((coef, c))
        if bound <= 0:
            return
        terms = [(min(coef, bound), c) for coef, c in terms]
        total = sum(coef for coef, _ in terms)
        if total < bound:
            raise _Unsat
        if all(coef >= bound for coef, _ in terms):
            self.add_clause([c for _, c in terms])
            return
        terms.sort(key=lambda t: -t[0])
        if terms[0][0] == bound and total == 2 * bound and terms[1][0] < bound:
            # K*b + sum(c_i*l_i) >= K with sum(c_i) == K: b or every l_i
            big = terms[0][1]
            for _, c in terms[1:]:
                self.add_clause([big, c])
            return
        ci = len(self.pb_terms)
        self.pb_terms.append(terms)
        self.pb_slack.append(total - bound)
        self.pb_max.append(terms[0][0])
        for coef, c in terms:
            self.occ[c].append((ci, coef))
        slack = total - bound
        for coef, c in terms:
            if coef <= slack:
                break
            if self.val[c] == 0:
                self.enqueue(c, ~ci)

    def add_clause(self, lits: list[int]) -> None:
        if len(lits) == 1:
            if self.val[lits[0]] == 0:
                self.enqueue(lits[0], None)
            return
        self._attach(lits)

    def _attach(self, lits: list[int]) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        if len(lits) == 2:
            self.bins[lits[0]].append((lits[1], ci))
            self.bins[lits[1]].append((lits[0], ci))
        else:
            self.watches[lits[0]].append(ci)
            self.watches[lits[1]].append(ci)
        return ci

    # -- propagation ----------------------------------------------------------

    def propagate(self) -> list[int] | None:
        """Run unit propagation; return the literals of a conflict, if any."""
        val = self.val
        trail = self.trail
        occ = self.occ
        slack = self.pb_slack
        pb_max = self.pb_max
        pb_terms = self.pb_terms
        watches = self.watches
        clauses = self.clauses
        bins = self.bins
        level = self.level
        reason = self.reason
        tpos = self.tpos
        lvl = len(self.trail_lim)
        enqueue = self.enqueue
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            self.propagations += 1
            false_lit = p ^ 1
            for other, ci in bins[false_lit]:
                vo = val[other]
                if vo == 1:
                    continue
                if vo == -1:
                    return [other, false_lit]
                val[other] = 1
                val[other ^ 1] = -1
                v = other >> 1
                level[v] = lvl
                reason[v] = ci
                tpos[v] = len(trail)
                trail.append(other)
                for cj, coef in occ[other ^ 1]:
                    slack[cj] -= coef
            for ci, _ in occ[false_lit]:
                s = slack[ci]
                if s < 0:
                    return [c for _, c in pb_terms[ci] if val[c] == -1]
                if s < pb_max[ci]:
                    for coef, c in pb_terms[ci]:
                        if coef <= s:
                            break
                        if val[c] == 0:
                            enqueue(c, ~ci)
            ws = watches[false_lit]
            keep = []
            n_ws = len(ws)
            k = 0
            while k < n_ws:
                ci = ws[k]
                k += 1
                cl = clauses[ci]
                if cl[0] == false_lit:
                    cl[0] = cl[1]
                    cl[1] = false_lit
                first = cl[0]
                if val[first] == 1:
                    keep.append(ci)
                    continue
                for idx in range(2, len(cl)):
                    other = cl[idx]
                    if val[other] != -1:
                        cl[1] = other
                        cl[idx] = false_lit
                        watches[other].append(ci)
                        break
                else:
                    keep.append(ci)
                    if val[first] == -1:
                        keep.extend(ws[k:])
                        watches[false_lit] = keep
                        return list(cl)
                    enqueue(first, ci)
            watches[false_lit] = keep
        return None

    def reason_lits(self, c: int) -> list[int]:
        """False literals that forced the true literal ``c``."""
        v = c >> 1
        r = self.reason[v]
        if r >= 0:
            return [x for x in self.clauses[r] if x != c]
        pos = self.tpos[v]
        val = self.val
        tpos = self.tpos
        return [x for _, x in self.pb_terms[~r] if val[x] == -1 and tpos[x >> 1] < pos]

    # -- conflict analysis ----------------------------------------------------

    def analyze(self, confl: list[int]) -> tuple[list[int], int]:
        seen = self.seen
        level = self.level
        trail = self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        marked = []
        counter = 0
        idx = len(trail) - 1
        lits = confl
        while True:
            for q in lits:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = 1
                    marked.append(v)
                    if level[v] >= cur:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            seen[p >> 1] = 0
            counter -= 1
            if counter <= 0:
                break
            lits = self.reason_lits(p)
        learnt[0] = p ^ 1
        if self.config.minimize_learnt and len(learnt) > 2:
            learnt = self._minimize(learnt)
        for v in marked:
            seen[v] = 0
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda i: level[learnt[i] >> 1])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[learnt[1] >> 1]

    def _minimize(self, learnt: list[int]) -> list[int]:
        # drop literals implied by the rest of the clause (one level of reasons)
        seen = self.seen
        out = [learnt[0]]
        for q in learnt[1:]:
            v = q >> 1
            if self.reason[v] is None:
                out.append(q)
                continue
            if all(seen[x >> 1] or self.level[x >> 1] == 0 for x in self.reason_lits(q ^ 1)):
                continue
            out.append(q)
        return out

    # -- search ---------------------------------------------------------------

    def pick(self) -> int | None:
        val = self.val
        v = self.next_var
        nv = self.nv
        while v <= nv and val[2 * v] != 0:
            v += 1
        self.next_var = v
        return None if v > nv else v

    def search(self) -> bool:
        """Extend the current partial assignment to a model; False if none exists."""
        while True:
            confl = self.propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    return False
                if self.deadline is not None and self.conflicts % 256 == 0 \
                        and time.monotonic() > self.deadline:
                    raise _Timeout
                if self.config.learning:
                    learnt, bt = self.analyze(confl)
                    self.backtrack(bt)
                    if len(learnt) == 1:
                        self.enqueue(learnt[0], None)
                    else:
                        self.enqueue(learnt[0], self._attach(learnt))
                else:
                    self._flip_last_decision()
                continue
            v = self.pick()
            if v is None:
                return True
            self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self.flipped.append(False)
            self.enqueue(self.phase[v], None)

    def _flip_last_decision(self) -> None:
        # chronological backtracking: flip the deepest decision not yet flipped
        while self.flipped and self.flipped[-1]:
            self.backtrack(len(self.trail_lim) - 1)
        if not self.trail_lim:
            raise _Unsat
        d = self.trail[self.trail_lim[-1]]
        self.backtrack(len(self.trail_lim) - 1)
        self.trail_lim.append(len(self.trail))
        self.flipped.append(True)
        self.enqueue(d ^ 1, None)

    def model(self) -> dict[int, bool]:
        return {v: self.val[2 * v] == 1 for v in range(1, self.nv + 1)}


def solve(inst: PBInstance, config: SolverConfig | None = None) -> SolveResult:
    """Minimise ``inst``'s objective; returns the optimum or UNSAT."""
    config = config or SolverConfig()
    start = time.monotonic()
    best: dict[int, bool] | None = None
    best_obj: int | None = None
    solutions = 0
    status = UNSATISFIABLE
    engine = None
    try:
        engine = _Engine(inst, config)
        while engine.search():
            best = engine.model()
            best_obj = inst.objective_value(best)
            solutions += 1
            engine.backtrack(0)
            # objective <= best - 1, i.e. -sum(obj) >= 1 - best + offset
            bound = normalize([(-c, v) for c, v in inst.objective], 1 - best_obj + inst.offset)
            engine.add_constraint(bound)
        status = OPTIMAL if best is not None else UNSATISFIABLE
    except _Unsat:
        status = OPTIMAL if best is not None else UNSATISFIABLE
    except _Timeout:
        status = TIMEOUT
    stats = SolveStats(
        decisions=engine.decisions if engine else 0,
        propagations=engine.propagations if engine else 0,
        conflicts=engine.conflicts if engine else 0,
        solutions=solutions,
        elapsed=time.monotonic() - start,
    )
    return SolveResult(status, best, best_obj, stats)
