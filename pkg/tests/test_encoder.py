import io
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_quartets
from qmqc.core import QuartetSet, TaxonSet, detect_siblings, is_ultrametric, matrix_satisfied_count
from qmqc.encoder import (VARIANTS, AssignmentDecodeError, EncodingError, ModelVariant, apply_siblings,
                          decode_assignment, encode, format_varmap, parse_varmap, sibling_constraints, value_width,
                          write_varmap)
from qmqc.oracle import mqc_oracle
from qmqc.pb import normalize
from qmqc.solver import check_model, solve
from qmqc.trees import GenSpec, alter_quartets, canonical_matrix, derive_all, random_tree

COMBOS = [(k, s) for k in VARIANTS for s in (False, True)]


def _instance(n, seed, p):
    spec = GenSpec(n, seed, p)
    return alter_quartets(derive_all(random_tree(spec)), spec)


def test_value_width():
    assert value_width(10, False) == 5
    assert value_width(10, True) == 3
    assert value_width(7, True) == 3
    assert value_width(8, True) == 3
    assert value_width(4, True) == 2


def test_variant_validation():
    with pytest.raises(ValueError):
        ModelVariant("fourth")
    assert ModelVariant("scd", True).name == "scd+trd"
    with pytest.raises(EncodingError):
        encode(QuartetSet(TaxonSet.numbered(3)), "basic")


@pytest.mark.parametrize("kind", VARIANTS)
def test_every_variable_is_used_and_named(kind):
    inst, vmap = encode(_instance(6, 2, 10), kind)
    used = {abs(l) for c in inst.constraints for _, l in c.terms} | {v for _, v in inst.objective}
    assert used == set(range(1, inst.num_vars + 1))
    assert len(vmap.roles) == inst.num_vars + 1 and all(vmap.roles[1:])
    assert len(vmap.q_vars) == 15
    assert inst.objective == tuple((-1, v) for v in sorted(vmap.q_vars))


def test_counts_for_ten_taxa_are_frozen():
    # regression values for this encoder; fst must not depend on the alteration level
    got = {}
    for kind in VARIANTS:
        for p in (1, 10, 30):
            inst, _ = encode(_instance(10, 0, p), kind)
            got[(kind, p)] = (inst.num_vars, inst.num_constraints)
    assert {got[("fst", p)] for p in (1, 10, 30)} == {(7920, 19515)}
    assert got[("scd", 1)] == (5535, 13170)
    assert got[("basic", 1)] == (7155, 14070)


def test_sibling_constraints_fix_value_one():
    q = _instance(6, 1, 0)
    for kind in VARIANTS:
        inst, vmap = encode(q, kind)
        cons = sibling_constraints(vmap, (0, 1))
        assert len(cons) == vmap.width
        res = solve(inst.with_constraints(cons))
        assert vmap.value_of((0, 1), res.assignment) == 1
    with pytest.raises(EncodingError):
        sibling_constraints(vmap, (0, 9))


def test_apply_siblings_skips_overlapping_pairs():
    q = _instance(6, 1, 0)
    inst, vmap = encode(q, "basic")
    reports = [r for r in detect_siblings(q) if r.is_sibling]
    fake = reports + [type(reports[0])((reports[0].pair[0], 5 if reports[0].pair[0] != 5 else 4), 0, 0, True)]
    out = apply_siblings(inst, vmap, fake)
    assert len(vmap.fixed_pairs) == len(reports)
    assert out.num_constraints == inst.num_constraints + len(reports) * vmap.width


@pytest.mark.parametrize("n,seed,p", [(5, 0, 30), (6, 3, 30), (6, 4, 10), (7, 5, 10)])
def test_variants_agree_with_oracle(n, seed, p):
    q = _instance(n, seed, p)
    best = mqc_oracle(q).optimum
    for kind, sib in COMBOS:
        inst, vmap = encode(q, kind, sib)
        res = solve(inst)
        assert res.optimal
        m, flags = decode_assignment(vmap, res.assignment)
        assert -res.objective == sum(flags) == best
        assert is_ultrametric(m)
        assert matrix_satisfied_count(m, q) == best
        assert all(1 <= v <= math.ceil(n / 2) for v in m.entries)


@settings(max_examples=6, deadline=None)
@given(st.integers(5, 6), st.integers(0, 2**32))
def test_random_quartet_sets(n, seed):
    q = random_quartets(random.Random(seed), n)
    best = mqc_oracle(q).optimum
    for kind in VARIANTS:
        res = solve(encode(q, kind)[0])
        assert -res.objective == best


@pytest.mark.parametrize("kind", VARIANTS)
@pytest.mark.parametrize("seed", range(3))
def test_generator_matrix_extends_to_a_model(kind, seed):
    # fixing M to the source tree's matrix must leave a model satisfying every topology
    t = random_tree(GenSpec(8, seed))
    q = derive_all(t)
    m = canonical_matrix(t)
    inst, vmap = encode(q, kind)
    fix = []
    for i, j, v in m.pairs():
        bits = vmap.values[(i, j)]
        want = [k == v for k in range(1, len(bits) + 1)] if not vmap.variant.binary \
            else [bool(v >> k & 1) for k in range(len(bits))]
        fix += [normalize([(1, b if w else -b)], 1) for b, w in zip(bits, want)]
    res = solve(inst.with_constraints(fix))
    assert res.optimal and -res.objective == 70
    assert decode_assignment(vmap, res.assignment)[0] == m


def test_decode_rejects_broken_one_hot():
    inst, vmap = encode(_instance(5, 0, 0), "basic")
    res = solve(inst)
    bad = dict(res.assignment)
    for v in vmap.values[(0, 1)]:
        bad[v] = True
    assert not check_model(inst, bad)
    with pytest.raises(AssignmentDecodeError):
        decode_assignment(vmap, bad)


@pytest.mark.parametrize("kind,sib", COMBOS)
def test_varmap_round_trip(kind, sib):
    inst, vmap = encode(_instance(6, 2, 10), kind, sib)
    text = format_varmap(vmap)
    back = parse_varmap(text)
    assert format_varmap(back) == text
    assert back.values == vmap.values and back.q_vars == vmap.q_vars
    assert back.num_vars == inst.num_vars
    res = solve(inst)
    assert decode_assignment(back, res.assignment) == decode_assignment(vmap, res.assignment)
    buf = io.StringIO()
    write_varmap(vmap, buf)
    assert buf.getvalue() == text


def test_varmap_rejects_garbage():
    with pytest.raises(ValueError):
        parse_varmap("hello\n")
    with pytest.raises(ValueError):
        parse_varmap("qmqc-varmap 1\nM 0 1 x 4\n")


def test_selection_variable_counts():
    _, vmap = encode(_instance(7, 0, 0), "basic")
    assert sum(len(b) for b in vmap.values.values()) == 21 * 4 == 84
    _, vmap = encode(_instance(10, 0, 0), "scd")
    assert {len(b) for b in vmap.values.values()} == {3}


def test_empty_quartet_set_has_constant_objective():
    inst, vmap = encode(QuartetSet(TaxonSet.numbered(5)), "fst")
    assert inst.objective == () and vmap.q_vars == ()
    assert solve(inst).objective == 0


@pytest.mark.parametrize("kind", VARIANTS)
def test_example_tree_siblings_fixed_and_optimum_kept(kind):
    from helpers import EXAMPLE_TAXA, example_matrix
    from qmqc.trees import decode_matrix, unroot
    q = derive_all(unroot(decode_matrix(example_matrix(), EXAMPLE_TAXA)))
    inst, vmap = encode(q, kind, True)
    assert vmap.fixed_pairs == ((0, 1), (3, 4))
    res = solve(inst)
    assert -res.objective == 35
    assert vmap.value_of((0, 1), res.assignment) == vmap.value_of((3, 4), res.assignment) == 1


def test_value_readout_examples():
    inst, vmap = encode(_instance(7, 0, 0), "basic")
    a = {v: False for v in range(1, inst.num_vars + 1)}
    a[vmap.values[(0, 1)][2]] = True
    assert vmap.value_of((0, 1), a) == 3
    inst, vmap = encode(_instance(10, 0, 0), "scd")
    a = {v: False for v in range(1, inst.num_vars + 1)}
    bits = vmap.values[(0, 1)]
    a[bits[0]] = a[bits[2]] = True
    assert vmap.value_of((0, 1), a) == 5
