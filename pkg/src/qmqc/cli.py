"""Command-line front end: ``qmqc <command> ...``.

Exit codes: 0 success, 2 usage or parse error, 3 internal invariant
violation (unsatisfiable encoding, recount mismatch, bad model).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .core import IncompleteQuartetSetError, QuartetSet
from .encoder import VARIANTS, ModelVariant, VarMap, decode_assignment, encode, format_varmap, parse_varmap
from .newick import NewickParseError, emit_newick, parse_newick
from .opb import OpbParseError, format_opb, format_solution, parse_opb, parse_solution
from .oracle import OracleBoundError, mqc_oracle
from .qrt import QrtParseError, format_qrt, parse_qrt
from .solver import OPTIMAL, SolverConfig, SolveResult, check_model, solve
from .trees import (DecodeError, GenSpec, InvalidTreeError, UnrootedPhylogeny, alter_quartets, decode_matrix,
                    derive_all, random_tree, tree_satisfied_count, unroot)

EXIT_USAGE = 2
EXIT_INTERNAL = 3
REPORT_SCHEMA = 1


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunReport:
    n: int
    quartets: int
    model: str
    siblings: bool
    numVars: int
    numConstraints: int
    satisfied: int
    quartetErrors: int
    recount: int
    status: str
    solver: dict
    newick: str
    fixedPairs: list = field(default_factory=list)
    provenance: list = field(default_factory=list)
    schema: int = REPORT_SCHEMA

    def to_json(self) -> str:
        d = asdict(self)
        d["|Q|"] = d.pop("quartets")
        d["objective"] = "minimize sum(-q_t); satisfied = -objective"
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# pipeline pieces shared by the subcommands


def generate(n: int, seed: int, percent: int) -> tuple[UnrootedPhylogeny, QuartetSet, str]:
    """Source tree, altered quartet set and its ``.qrt`` text."""
    spec = GenSpec(n, seed, percent)
    tree = random_tree(spec)
    exact = derive_all(tree)
    q = alter_quartets(exact, spec)
    names = q.taxa.names

    def fmt(t):
        (a, b), (c, d) = t.left, t.right
        return f"{names[a]} {names[b]} | {names[c]} {names[d]}"

    changed = [(old, q.get(*old.quartet)) for old in exact if q.get(*old.quartet) != old]
    comments = [f"generator taxa={n} seed={seed} alter={percent}",
                f"altered {len(changed)} of {len(q)}"]
    comments += [f"altered {fmt(new)} (was {fmt(old)})" for old, new in changed]
    return tree, q, format_qrt(q, comments)


def decode_model(vmap: VarMap, assignment) -> tuple[UnrootedPhylogeny, int]:
    """Unrooted tree and the number of topologies the model claims."""
    try:
        matrix, flags = decode_assignment(vmap, assignment)
        tree = unroot(decode_matrix(matrix, vmap.taxa))
    except (DecodeError, ValueError) as exc:
        raise CliError(f"model does not decode to a tree: {exc}", EXIT_INTERNAL) from None
    return tree, sum(flags)


def solve_checked(inst, config: SolverConfig | None = None) -> SolveResult:
    res = solve(inst, config)
    if res.status != OPTIMAL:
        raise CliError(f"solver returned {res.status}", EXIT_INTERNAL)
    if not check_model(inst, res.assignment):
        raise CliError("solver model violates a constraint", EXIT_INTERNAL)
    return res


def run_pipeline(q: QuartetSet, model: str, siblings: bool, time_limit: float | None = None,
                 provenance: Sequence[str] = ()) -> RunReport:
    inst, vmap = encode(q, ModelVariant(model, siblings))
    res = solve_checked(inst, SolverConfig(time_limit=time_limit))
    tree, satisfied = decode_model(vmap, res.assignment)
    if satisfied != -res.objective:
        raise CliError(f"flags count {satisfied} but objective is {res.objective}", EXIT_INTERNAL)
    recount = tree_satisfied_count(tree, q)
    if recount < satisfied:
        raise CliError(f"tree satisfies {recount} topologies, model claims {satisfied}", EXIT_INTERNAL)
    return RunReport(
        n=q.n,
        quartets=len(q),
        model=model,
        siblings=siblings,
        numVars=inst.num_vars,
        numConstraints=inst.num_constraints,
        satisfied=satisfied,
        quartetErrors=len(q) - satisfied,
        recount=recount,
        status=res.status,
        solver=asdict(res.stats),
        newick=emit_newick(tree),
        fixedPairs=[[q.taxa.names[i], q.taxa.names[j]] for i, j in vmap.fixed_pairs],
        provenance=list(provenance),
    )


# ---------------------------------------------------------------------------
# file helpers


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_USAGE) from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_qrt(path: str) -> tuple[QuartetSet, list[str]]:
    text = _read(path)
    try:
        q = parse_qrt(text)
    except QrtParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None
    comments = [ln.strip()[1:].strip() for ln in text.splitlines() if ln.strip().startswith("#")]
    return q, [c for c in comments if c.startswith("generator")]


def _default_seed() -> int:
    raw = os.environ.get("QMQC_SEED")
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise CliError(f"QMQC_SEED is not an integer: {raw!r}", EXIT_USAGE) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        tree, _, text = generate(args.taxa, seed, args.alter)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    _write(args.out, text)
    if args.tree:
        _write(args.tree, emit_newick(tree) + "\n")
    return 0


def cmd_run(args) -> int:
    q, provenance = _load_qrt(args.inp)
    report = run_pipeline(q, args.model, args.siblings, args.time_limit, provenance)
    _write(args.out, report.newick + "\n")
    if args.report:
        _write(args.report, report.to_json())
    else:
        print(f"satisfied {report.satisfied} of {report.quartets}", file=sys.stderr)
    return 0


def cmd_encode(args) -> int:
    q, _ = _load_qrt(args.inp)
    inst, vmap = encode(q, ModelVariant(args.model, args.siblings))
    _write(args.out, format_opb(inst))
    _write(args.map, format_varmap(vmap))
    return 0


def cmd_solve(args) -> int:
    try:
        inst = parse_opb(_read(args.inp))
    except OpbParseError as exc:
        raise CliError(f"{args.inp}: {exc}", EXIT_USAGE) from None
    res = solve(inst, SolverConfig(time_limit=args.time_limit))
    if res.assignment is not None and not check_model(inst, res.assignment):
        raise CliError("solver model violates a constraint", EXIT_INTERNAL)
    _write(args.out, format_solution(res.status, res.assignment, res.objective))
    return 0


def cmd_decode(args) -> int:
    try:
        vmap = parse_varmap(_read(args.map))
        sol = parse_solution(_read(args.sol))
    except (ValueError, KeyError) as exc:
        raise CliError(f"cannot parse inputs: {exc}", EXIT_USAGE) from None
    if sol.status != OPTIMAL:
        raise CliError(f"solution status is {sol.status}", EXIT_INTERNAL)
    missing = [v for v in range(1, vmap.num_vars + 1) if v not in sol.assignment]
    if missing:
        raise CliError(f"solution leaves x{missing[0]} unassigned", EXIT_USAGE)
    tree, _ = decode_model(vmap, sol.assignment)
    _write(args.out, emit_newick(tree) + "\n")
    return 0


def cmd_check(args) -> int:
    q, _ = _load_qrt(args.inp)
    try:
        tree = parse_newick(_read(args.tree), taxa=q.taxa)
    except (NewickParseError, InvalidTreeError, ValueError) as exc:
        raise CliError(f"{args.tree}: {exc}", EXIT_USAGE) from None
    sat = tree_satisfied_count(tree, q)
    print(f"satisfied {sat}")
    print(f"errors {len(q) - sat}")
    print(f"quartets {len(q)}")
    return 0


def cmd_oracle(args) -> int:
    q, _ = _load_qrt(args.inp)
    try:
        res = mqc_oracle(q)
    except (OracleBoundError, IncompleteQuartetSetError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    print(f"optimum {res.optimum}")
    print(f"errors {res.errors(q)}")
    print(f"witness {emit_newick(res.witness)}")
    return 0


BENCH_FIELDS = ["n", "percent", "seed", "model", "siblings", "numVars", "numConstraints",
                "satisfied", "quartetErrors", "status", "seconds"]


def bench_one(key: tuple[int, int, int, str, bool], time_limit: float | None) -> dict:
    n, percent, seed, model, sib = key
    _, q, _ = generate(n, seed, percent)
    rep = run_pipeline(q, model, sib, time_limit)
    return {"n": n, "percent": percent, "seed": seed, "model": model, "siblings": int(sib),
            "numVars": rep.numVars, "numConstraints": rep.numConstraints, "satisfied": rep.satisfied,
            "quartetErrors": rep.quartetErrors, "status": rep.status,
            "seconds": f"{rep.solver['elapsed']:.3f}"}


def bench_rows(taxa: Sequence[int], percents: Sequence[int], seeds: Sequence[int], models: Sequence[str],
               siblings: Sequence[bool], jobs: int = 1, time_limit: float | None = None) -> list[dict]:
    keys = [(n, p, s, m, b) for n in taxa for p in percents for s in seeds for m in models for b in siblings]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(bench_one, keys, [time_limit] * len(keys)))
    else:
        rows = [bench_one(k, time_limit) for k in keys]
    rows.sort(key=lambda r: (r["n"], r["percent"], r["seed"], r["model"], r["siblings"]))
    return rows


def cmd_bench(args) -> int:
    sib = {"no": [False], "yes": [True], "both": [False, True]}[args.siblings]
    rows = bench_rows(args.taxa, args.alter, range(args.seed, args.seed + args.seeds), args.models, sib,
                      args.jobs, args.time_limit)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    _write(args.out, buf.getvalue())
    return 0


# ---------------------------------------------------------------------------


def _percent(text: str) -> int:
    v = int(text)
    if not 0 <= v <= 100:
        raise argparse.ArgumentTypeError("must be in 0..100")
    return v


def _taxa_count(text: str) -> int:
    v = int(text)
    if v < 4:
        raise argparse.ArgumentTypeError("need at least 4 taxa")
    return v


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmqc", description="Maximum quartet consistency via pseudo-Boolean optimization")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random benchmark instance")
    g.add_argument("--taxa", type=_taxa_count, required=True)
    g.add_argument("--seed", type=_seed, default=None, help="defaults to $QMQC_SEED, else 0")
    g.add_argument("--alter", type=_percent, default=0, help="percentage of topologies to alter")
    g.add_argument("--out", required=True)
    g.add_argument("--tree", help="also write the source tree as Newick")
    g.set_defaults(func=cmd_gen)

    def model_flags(sp):
        sp.add_argument("--model", choices=VARIANTS, default="basic")
        sp.add_argument("--siblings", action="store_true", help="fix detected sibling pairs")

    r = sub.add_parser("run", help="encode, solve and decode in one step")
    model_flags(r)
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--report")
    r.add_argument("--time-limit", type=float)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("encode", help="write the OPB instance and variable map")
    model_flags(e)
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--map", required=True)
    e.set_defaults(func=cmd_encode)

    s = sub.add_parser("solve", help="solve an OPB instance")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--time-limit", type=float)
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("decode", help="turn a solution into a Newick tree")
    d.add_argument("--map", required=True)
    d.add_argument("--sol", required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_decode)

    c = sub.add_parser("check", help="count the topologies a tree satisfies")
    c.add_argument("--in", dest="inp", required=True)
    c.add_argument("--tree", required=True)
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("oracle", help="exhaustive optimum for small instances")
    o.add_argument("--in", dest="inp", required=True)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bench", help="run a grid of generated instances, CSV output")
    b.add_argument("--taxa", type=_taxa_count, nargs="+", required=True)
    b.add_argument("--alter", type=_percent, nargs="+", default=[0])
    b.add_argument("--models", choices=VARIANTS, nargs="+", default=list(VARIANTS))
    b.add_argument("--siblings", choices=("no", "yes", "both"), default="no")
    b.add_argument("--seed", type=_seed, default=0, help="first seed")
    b.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--time-limit", type=float)
    b.add_argument("--out", default="-")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"qmqc: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
