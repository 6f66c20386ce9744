"""Newick reading and writing.

Branch lengths, internal labels and ``[...]`` comments are accepted on input
and dropped.  Output never carries lengths or internal labels.
"""
from __future__ import annotations

from .core import TaxonSet
from .trees import RootedNode, RootedPhylogeny, UnrootedPhylogeny, unroot

_DELIMS = set("(),:;[]")


class NewickParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        where = "end of input" if self.pos >= len(self.text) else repr(self.text[self.pos])
        raise NewickParseError(f"{message} (found {where})", self.pos)

    def skip(self):
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif ch == "[":
                end = text.find("]", self.pos)
                if end < 0:
                    self.error("unterminated comment")
                self.pos = end + 1
            else:
                break

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def name(self) -> str:
        self.skip()
        text = self.text
        if self.pos < len(text) and text[self.pos] == "'":
            out = []
            self.pos += 1
            while True:
                if self.pos >= len(text):
                    self.error("unterminated quoted label")
                ch = text[self.pos]
                if ch == "'":
                    if text.startswith("''", self.pos):
                        out.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    return "".join(out)
                out.append(ch)
                self.pos += 1
        start = self.pos
        while self.pos < len(text) and text[self.pos] not in _DELIMS and not text[self.pos].isspace():
            self.pos += 1
        return text[start:self.pos]

    def length(self):
        if self.peek() == ":":
            self.pos += 1
            self.skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS \
                    and not self.text[self.pos].isspace():
                self.pos += 1
            try:
                float(self.text[start:self.pos])
            except ValueError:
                self.pos = start
                self.error("bad branch length")

    def subtree(self):
        if self.peek() == "(":
            self.pos += 1
            kids = [self.subtree()]
            while self.peek() == ",":
                self.pos += 1
                kids.append(self.subtree())
            self.expect(")")
            self.name()
            self.length()
            return kids
        start = self.pos
        label = self.name()
        if not label:
            self.pos = start
            self.error("expected a leaf name or '('")
        self.length()
        return label

    def parse(self):
        tree = self.subtree()
        self.expect(";")
        if self.peek():
            self.error("trailing text after ';'")
        return tree


def _leaf_names(tree) -> list[str]:
    if isinstance(tree, str):
        return [tree]
    return [x for kid in tree for x in _leaf_names(kid)]


def parse_newick_rooted(text: str, taxa: TaxonSet | None = None) -> RootedPhylogeny:
    raw = _Parser(text).parse()
    names = _leaf_names(raw)
    if len(set(names)) != len(names):
        raise NewickParseError("repeated leaf name", len(text))
    if taxa is None:
        taxa = TaxonSet(tuple(names))
    if sorted(names) != sorted(taxa.names):
        raise NewickParseError("leaf names do not match the taxon set", len(text))

    def convert(node) -> RootedNode:
        if isinstance(node, str):
            return RootedNode(taxon=taxa.index(node))
        return RootedNode(children=tuple(convert(k) for k in node))

    return RootedPhylogeny(taxa, convert(raw))


def parse_newick(text: str, taxa: TaxonSet | None = None, rooted: bool = False):
    """Parse Newick text into an unrooted phylogeny (or a rooted one on request).

    Without ``taxa`` the taxon order is the order of first appearance.
    """
    t = parse_newick_rooted(text, taxa)
    return t if rooted else unroot(t)


def _quote(name: str) -> str:
    if any(c in _DELIMS or c == "'" for c in name):
        return "'" + name.replace("'", "''") + "'"
    return name


def emit_newick(tree: UnrootedPhylogeny | RootedPhylogeny) -> str:
    names = [_quote(s) for s in tree.taxa.names]
    if isinstance(tree, RootedPhylogeny):
        def fmt(node: RootedNode) -> str:
            if node.is_leaf:
                return names[node.taxon]
            kids = sorted(node.children, key=RootedNode.min_taxon)
            return "(" + ",".join(fmt(k) for k in kids) + ")"
        text = fmt(tree.root)
        return (text if not tree.root.is_leaf else f"({text})") + ";"

    adj = tree.adjacency
    n = tree.n
    if n == 2:
        return f"({names[0]},{names[1]});"

    def fmt_u(v: int, parent: int) -> tuple[int, str]:
        if v < n:
            return v, names[v]
        parts = sorted(fmt_u(u, v) for u in adj[v] if u != parent)
        return parts[0][0], "(" + ",".join(p for _, p in parts) + ")"

    centre = adj[0][0]
    parts = sorted(fmt_u(u, centre) for u in adj[centre])
    return "(" + ",".join(p for _, p in parts) + ");"
