"""OPB instance files and solver solution files.

Emitted instances use only ``>=`` rows over positive literals::

    * #variable= 2 #constraint= 1
    min: -1 x1 ;
    +1 x1 +1 x2 >= 1 ;

Solutions follow the usual competition output: ``s`` status line, ``v``
literal lines and ``o`` objective lines.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TextIO

from .pb import Constraint, PBInstance, normalize, normalize_objective


class OpbParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _positive_terms(con: Constraint) -> tuple[list[tuple[int, int]], int]:
    bound = con.bound
    out = []
    for c, lit in con.terms:
        if lit > 0:
            out.append((c, lit))
        else:
            out.append((-c, -lit))
            bound -= c
    return out, bound


def _fmt_terms(terms) -> str:
    return " ".join(f"{c:+d} x{v}" for c, v in terms)


def format_opb(inst: PBInstance) -> str:
    if inst.offset:
        raise ValueError("OPB objectives cannot carry a constant offset")
    lines = [f"* #variable= {inst.num_vars} #constraint= {inst.num_constraints}"]
    obj = _fmt_terms(inst.objective)
    lines.append(f"min: {obj} ;" if obj else "min: ;")
    for con in inst.constraints:
        terms, bound = _positive_terms(con)
        body = _fmt_terms(terms)
        lines.append(f"{body} >= {bound} ;" if body else f">= {bound} ;")
    return "\n".join(lines) + "\n"


def emit_opb(inst: PBInstance, out: TextIO) -> None:
    out.write(format_opb(inst))


_HEADER = re.compile(r"#variable=\s*(\d+)")


def _parse_terms(tokens: list[str], lineno: int) -> list[tuple[int, int]]:
    terms = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        try:
            coef = int(tok)
        except ValueError:
            raise OpbParseError(f"expected a coefficient, got {tok!r}", lineno) from None
        if i + 1 >= len(tokens):
            raise OpbParseError("coefficient without a literal", lineno)
        lit_tok = tokens[i + 1]
        neg = lit_tok.startswith("~")
        body = lit_tok[1:] if neg else lit_tok
        if not (body.startswith("x") and body[1:].isdigit() and int(body[1:]) > 0):
            raise OpbParseError(f"bad literal {lit_tok!r}", lineno)
        if i + 2 < len(tokens) and not _is_int(tokens[i + 2]):
            raise OpbParseError("non-linear terms are not supported", lineno)
        v = int(body[1:])
        terms.append((coef, -v if neg else v))
        i += 2
    return terms


def _is_int(tok: str) -> bool:
    try:
        int(tok)
        return True
    except ValueError:
        return False


def parse_opb(text: str) -> PBInstance:
    num_vars = 0
    constraints: list[Constraint] = []
    objective: list[tuple[int, int]] = []
    seen_objective = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("*"):
            m = _HEADER.search(line)
            if m:
                num_vars = max(num_vars, int(m.group(1)))
            continue
        if not line.endswith(";"):
            raise OpbParseError("missing ';'", lineno)
        line = line[:-1].strip()
        if line.startswith("min:"):
            if seen_objective:
                raise OpbParseError("multiple objective lines", lineno)
            seen_objective = True
            objective = _parse_terms(line[4:].split(), lineno)
            continue
        tokens = line.split()
        rel_at = next((k for k, t in enumerate(tokens) if t in (">=", "<=", "=")), None)
        if rel_at is None or rel_at != len(tokens) - 2:
            raise OpbParseError("expected '<terms> >= <bound> ;'", lineno)
        rel = tokens[rel_at]
        try:
            bound = int(tokens[-1])
        except ValueError:
            raise OpbParseError(f"bad bound {tokens[-1]!r}", lineno) from None
        terms = _parse_terms(tokens[:rel_at], lineno)
        if rel in (">=", "="):
            constraints.append(normalize(terms, bound))
        if rel in ("<=", "="):
            constraints.append(normalize([(-c, lit) for c, lit in terms], -bound))
    used = [abs(lit) for con in constraints for _, lit in con.terms] + [abs(v) for _, v in objective]
    num_vars = max([num_vars] + used)
    obj, offset = normalize_objective(objective)
    return PBInstance(num_vars, tuple(constraints), obj, offset)


def read_opb(path) -> PBInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_opb(fh.read())


def write_opb(inst: PBInstance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        emit_opb(inst, fh)


@dataclass
class Solution:
    status: str
    assignment: dict[int, bool] = field(default_factory=dict)
    objective: int | None = None


_STATUS = {
    "OPTIMUM FOUND": "Optimal",
    "UNSATISFIABLE": "Unsatisfiable",
    "SATISFIABLE": "Satisfiable",
    "UNKNOWN": "Unknown",
}


def parse_solution(text: str) -> Solution:
    status = "Unknown"
    assignment: dict[int, bool] = {}
    objective = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        kind, _, rest = line.partition(" ")
        if kind == "s":
            if rest.strip() not in _STATUS:
                raise OpbParseError(f"unknown status {rest.strip()!r}", lineno)
            status = _STATUS[rest.strip()]
        elif kind == "o":
            try:
                objective = int(rest)
            except ValueError:
                raise OpbParseError(f"bad objective {rest!r}", lineno) from None
        elif kind == "v":
            for tok in rest.split():
                neg = tok.startswith("-") or tok.startswith("~")
                body = tok[1:] if neg else tok
                if not (body.startswith("x") and body[1:].isdigit()):
                    raise OpbParseError(f"bad literal {tok!r}", lineno)
                assignment[int(body[1:])] = not neg
        else:
            raise OpbParseError(f"unexpected line {line!r}", lineno)
    return Solution(status, assignment, objective)


def format_solution(status: str, assignment: dict[int, bool] | None = None,
                    objective: int | None = None, per_line: int = 20) -> str:
    inverse = {v: k for k, v in _STATUS.items()}
    lines = []
    if objective is not None:
        lines.append(f"o {objective}")
    lines.append(f"s {inverse.get(status, 'UNKNOWN')}")
    if assignment:
        lits = [f"x{v}" if assignment[v] else f"-x{v}" for v in sorted(assignment)]
        for k in range(0, len(lits), per_line):
            lines.append("v " + " ".join(lits[k:k + per_line]))
    return "\n".join(lines) + "\n"
