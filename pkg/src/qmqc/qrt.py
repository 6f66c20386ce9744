"""Reading and writing quartet files (``.qrt``).

::

    taxa: a b c d e
    # comment
    a b | c d
    a c | d e
"""
from __future__ import annotations

from typing import Iterable, TextIO

from .core import InvalidQuartetError, QuartetSet, TaxonSet, canonical_topology


class QrtParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def parse_qrt(text: str) -> QuartetSet:
    taxa = None
    topologies = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if taxa is None:
            if not line.startswith("taxa:"):
                raise QrtParseError("expected 'taxa:' header", lineno)
            try:
                taxa = TaxonSet(tuple(line[len("taxa:"):].split()))
            except ValueError as exc:
                raise QrtParseError(str(exc), lineno) from None
            continue
        left, sep, right = line.partition("|")
        names = left.split() + right.split()
        if not sep or len(left.split()) != 2 or len(right.split()) != 2:
            raise QrtParseError(f"expected 'a b | c d', got {line!r}", lineno)
        try:
            idx = [taxa.index(s) for s in names]
            t = canonical_topology(*idx)
        except (KeyError, InvalidQuartetError) as exc:
            raise QrtParseError(str(exc), lineno) from None
        if t.quartet in seen:
            raise QrtParseError(f"duplicate quartet {{{', '.join(sorted(names))}}}", lineno)
        seen.add(t.quartet)
        topologies.append(t)
    if taxa is None:
        raise QrtParseError("missing 'taxa:' header", 1)
    return QuartetSet(taxa, tuple(topologies))


def format_qrt(q: QuartetSet, comments: Iterable[str] = ()) -> str:
    names = q.taxa.names
    lines = ["taxa: " + " ".join(names)]
    lines += [f"# {c}" for c in comments]
    for t in q:
        (a, b), (c, d) = t.left, t.right
        lines.append(f"{names[a]} {names[b]} | {names[c]} {names[d]}")
    return "\n".join(lines) + "\n"


def read_qrt(path) -> QuartetSet:
    with open(path, encoding="utf-8") as fh:
        return parse_qrt(fh.read())


def write_qrt(q: QuartetSet, path_or_file: str | TextIO, comments: Iterable[str] = ()) -> None:
    text = format_qrt(q, comments)
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
