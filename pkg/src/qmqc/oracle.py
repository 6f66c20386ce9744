"""Brute-force ground truth.

Nothing here prunes or bounds: the MQC oracle scores every unrooted binary
tree, the PB oracle every assignment.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import QuartetSet
from .pb import PBInstance
from .trees import UnrootedPhylogeny, code_radices, tree_from_code

MAX_ORACLE_TAXA = 9
MAX_ENUM_VARS = 20


class OracleBoundError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimum: int
    witness: UnrootedPhylogeny
    trees_examined: int

    def errors(self, q: QuartetSet) -> int:
        return len(q) - self.optimum


def _pairing_arrays(q: QuartetSet):
    key = np.array([t.key for t in q], dtype=np.int64).reshape(-1, 4)
    return key[:, 0], key[:, 1], key[:, 2], key[:, 3]


def mqc_oracle(q: QuartetSet) -> OracleResult:
    """Best tree for ``q`` by scoring all ``(2n-5)!!`` unrooted binary trees.

    Trees are visited in lexicographic order of their leaf-insertion code;
    the witness is the first tree reaching the optimum.
    """
    n = q.n
    if n < 4:
        raise OracleBoundError(f"need at least 4 taxa, got {n}")
    if n > MAX_ORACLE_TAXA:
        raise OracleBoundError(f"exhaustive search is limited to {MAX_ORACLE_TAXA} taxa, got {n}")
    a, b, c, d = _pairing_arrays(q)
    best = -1
    best_tree = None
    examined = 0
    for code in itertools.product(*(range(r) for r in code_radices(n))):
        tree = tree_from_code(q.taxa, code)
        examined += 1
        dist = tree.leaf_distances()
        paired = dist[a, b] + dist[c, d]
        score = int(np.count_nonzero((paired < dist[a, c] + dist[b, d]) & (paired < dist[a, d] + dist[b, c])))
        if score > best:
            best, best_tree = score, tree
    return OracleResult(best, best_tree, examined)


def enumerate_pb(inst: PBInstance) -> tuple[str, int | None]:
    """Minimum objective over all ``2**num_vars`` assignments.

    Returns ``("Optimal", value)`` or ``("Unsatisfiable", None)``.
    """
    nv = inst.num_vars
    if nv > MAX_ENUM_VARS:
        raise OracleBoundError(f"enumeration is limited to {MAX_ENUM_VARS} variables, got {nv}")
    # rows: all assignments; column v-1 holds variable v
    masks = np.arange(1 << nv, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(nv, dtype=np.int64)) & 1).astype(np.int64)

    def lit_column(lit: int) -> np.ndarray:
        col = bits[:, abs(lit) - 1]
        return col if lit > 0 else 1 - col

    feasible = np.ones(1 << nv, dtype=bool)
    for con in inst.constraints:
        lhs = np.zeros(1 << nv, dtype=np.int64)
        for coef, lit in con.terms:
            lhs += coef * lit_column(lit)
        feasible &= lhs >= con.bound
    if not feasible.any():
        return "Unsatisfiable", None
    obj = np.full(1 << nv, inst.offset, dtype=np.int64)
    for coef, lit in inst.objective:
        obj += coef * lit_column(lit)
    return "Optimal", int(obj[feasible].min())
