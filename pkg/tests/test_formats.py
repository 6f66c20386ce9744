import pytest
from hypothesis import given, settings, strategies as st

from qmqc.core import QuartetSet, TaxonSet, canonical_topology
from qmqc.newick import NewickParseError, emit_newick, parse_newick, parse_newick_rooted
from qmqc.qrt import QrtParseError, format_qrt, parse_qrt
from qmqc.trees import GenSpec, alter_quartets, derive_all, random_tree, trees_isomorphic


# -- newick ---------------------------------------------------------------


def test_newick_parses_lengths_labels_and_comments():
    t = parse_newick("((a:1.5,b:2)x:0.1,[note](c,'d:e'),f)root;")
    assert t.taxa.names == ("a", "b", "c", "d:e", "f")
    assert emit_newick(t) == "(a,b,((c,'d:e'),f));"


def test_newick_rooted_emission_orders_children():
    t = parse_newick_rooted("((e,d),(c,(b,a)));", taxa=TaxonSet(tuple("abcde")))
    assert emit_newick(t) == "(((a,b),c),(d,e));"


@pytest.mark.parametrize("text", ["(a,b", "(a,b);x", "(a,,b);", "((a,b),a);", "(a,b)", "(a,'b);"])
def test_newick_errors(text):
    with pytest.raises(NewickParseError):
        parse_newick(text)


def test_newick_taxa_must_match():
    with pytest.raises(NewickParseError):
        parse_newick("(a,b,c);", taxa=TaxonSet(("a", "b", "d")))


def test_newick_quotes_delimiters():
    taxa = TaxonSet(("a(1)", "b", "c", "it's"))
    t = parse_newick("(('a(1)',b),(c,'it''s'));", taxa=taxa)
    text = emit_newick(t)
    assert text == "('a(1)',b,(c,'it''s'));"
    assert trees_isomorphic(parse_newick(text, taxa=taxa), t)


@settings(max_examples=50, deadline=None)
@given(st.integers(4, 12), st.integers(0, 2**64 - 1))
def test_newick_round_trip(n, seed):
    t = random_tree(GenSpec(n, seed))
    text = emit_newick(t)
    back = parse_newick(text, taxa=t.taxa)
    assert trees_isomorphic(back, t)
    assert emit_newick(back) == text


# -- qrt --------------------------------------------------------------------


def test_qrt_round_trip_with_comments():
    spec = GenSpec(6, 2, 30)
    q = alter_quartets(derive_all(random_tree(spec)), spec)
    text = format_qrt(q, ["generator taxa=6 seed=2 alter=30"])
    assert text.splitlines()[1] == "# generator taxa=6 seed=2 alter=30"
    assert parse_qrt(text) == q
    assert format_qrt(parse_qrt(text), ["generator taxa=6 seed=2 alter=30"]) == text


def test_qrt_line_format():
    q = QuartetSet(TaxonSet(("x", "y", "z", "w")), (canonical_topology(0, 3, 1, 2),))
    assert format_qrt(q) == "taxa: x y z w\nx w | y z\n"


@pytest.mark.parametrize("text,line", [
    ("a b | c d\n", 1),
    ("taxa: a b c d\na b c d\n", 2),
    ("taxa: a b c d\na b | c e\n", 2),
    ("taxa: a b c d\na b | c d\na c | b d\n", 3),
    ("taxa: a b c d\n# ok\na a | c d\n", 3),
])
def test_qrt_errors_carry_line(text, line):
    with pytest.raises(QrtParseError) as info:
        parse_qrt(text)
    assert info.value.line == line


def test_newick_error_position_at_end():
    with pytest.raises(NewickParseError) as info:
        parse_newick("((a,b)")
    assert info.value.position == len("((a,b)")


def test_newick_four_leaf_tree():
    from qmqc.trees import derive_topology
    t = parse_newick("((a,b),(c,d));")
    assert derive_topology(t, (0, 1, 2, 3)) == canonical_topology(0, 1, 2, 3)
