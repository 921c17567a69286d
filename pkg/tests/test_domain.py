"""Predicate domain: alpha/gamma, minterms, approximation operators."""

import itertools
import random

import pytest

from bernabs import bdd as bddm
from bernabs import concrete as cc
from bernabs import formula as fm
from bernabs import parsing, randgen, theory
from bernabs.domain import PredicateList
from bernabs.errors import PredicateBoundError


def single_pred_domain():
    ctx = theory.TheoryContext([cc.VarDecl("x", -2, 3)])
    preds = PredicateList([("x<0", parsing.parse_cond("x < 0", ["x"]))], ctx)
    return ctx, preds


def two_pred_domain():
    ctx = theory.TheoryContext([cc.VarDecl("x", -8, 8)])
    preds = PredicateList(
        parsing.parse_preds("x<-4: x < -4\nx<3: x < 3"), ctx
    )
    return ctx, preds


def test_alpha_examples():
    _, preds = single_pred_domain()
    assert preds.alpha({"x": -1}) == (True,)
    _, preds2 = two_pred_domain()
    assert preds2.alpha({"x": 0}) == (False, True)
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 2)])
    empty = PredicateList([], ctx)
    assert empty.alpha({"x": 1}) == ()


def test_gamma_lower_examples():
    _, preds = single_pred_domain()
    assert [z["x"] for z in preds.gamma_lower((True,))] == [-2, -1]
    _, preds2 = two_pred_domain()
    assert preds2.gamma_lower((True, False)) == []  # x<-4 and not x<3
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 3)])
    empty = PredicateList([], ctx)
    assert len(empty.gamma_lower(())) == 3


def test_predicate_bound():
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 2)])
    many = [(f"p{i}", parsing.parse_cond("x < 1", ["x"])) for i in range(3)]
    with pytest.raises(PredicateBoundError):
        PredicateList(
            [(f"p{i}", parsing.parse_cond("x < 1", ["x"])) for i in range(17)], ctx
        )
    # duplicates of the same condition are fine as long as labels differ
    PredicateList(many, ctx)


def test_strongest_implied_examples():
    _, preds = two_pred_domain()
    guard = parsing.parse_cond("x < 0", ["x"])
    p_t = preds.strongest_implied(guard)
    p_f = preds.strongest_implied(cc.CNot(guard))
    assert preds.to_bdd(p_t).equiv(bddm.var_bdd(preds.universe, preds.var("x<3")))
    assert preds.to_bdd(p_f).equiv(~bddm.var_bdd(preds.universe, preds.var("x<-4")))
    assert preds.to_bdd(preds.strongest_implied(cc.CFalse())).is_false


def test_weakest_sufficient_examples():
    _, preds = two_pred_domain()
    x_plus_1 = cc.Add(cc.IntVar("x"), cc.IntConst(1))
    t = preds.weakest_sufficient(
        theory.wp_subst("x", x_plus_1, preds.cond_of("x<3"))
    )
    f = preds.weakest_sufficient(
        theory.wp_subst("x", x_plus_1, cc.CNot(preds.cond_of("x<3")))
    )
    b1 = fm.Ref(preds.var("x<-4"))
    b2 = fm.Ref(preds.var("x<3"))
    assert preds.equivalent_mod_invariant(t, b1)
    assert preds.equivalent_mod_invariant(f, fm.Not(b2))
    # target T: all feasible minterms, i.e. the invariant
    top = preds.weakest_sufficient(cc.CTrue())
    assert preds.to_bdd(top).equiv(preds.invariant_bdd())


def test_invariant_examples():
    _, preds = two_pred_domain()
    b1 = fm.Ref(preds.var("x<-4"))
    b2 = fm.Ref(preds.var("x<3"))
    assert preds.invariant_bdd().equiv(preds.to_bdd(fm.Implies(b1, b2)))

    ctx, single = single_pred_domain()[0], single_pred_domain()[1]
    assert single.invariant_bdd().is_true

    ctx2 = theory.TheoryContext([cc.VarDecl("x", -2, 3)])
    dup = PredicateList(
        [("a", parsing.parse_cond("x < 0", ["x"])), ("b", parsing.parse_cond("x < 0", ["x"]))],
        ctx2,
    )
    va, vb = (fm.Ref(dup.var(n)) for n in ("a", "b"))
    assert dup.invariant_bdd().equiv(dup.to_bdd(fm.Iff(va, vb)))


def test_compatibility_properties():
    rng = random.Random(4)
    for _ in range(25):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 3), ctx)
        cells = {}
        for key in ctx.states():
            z = dict(zip(ctx.names, key))
            bits = preds.alpha(z)
            cells.setdefault(bits, set()).add(key)
            # compatibility: z lies in the cell of its own abstraction
            assert any(
                tuple(w[n] for n in ctx.names) == key
                for w in preds.gamma_lower(bits)
            )
        # strong compatibility: distinct cells are disjoint by construction
        seen = {}
        for bits, keys in cells.items():
            for k in keys:
                assert k not in seen
                seen[k] = bits


def test_strongest_implied_is_strongest():
    rng = random.Random(6)
    for _ in range(20):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 2), ctx)
        c = randgen.rand_cond(rng, decls)
        formula = preds.strongest_implied(c)
        d = preds.to_bdd(formula)
        # implied by c: every satisfying state abstracts into the formula
        for key in ctx.states():
            z = dict(zip(ctx.names, key))
            if cc.eval_cond(c, z):
                bits = preds.alpha(z)
                assert not (d & preds.to_bdd(preds.minterm_formula(bits))).is_false
        # strongest: every included minterm is witnessed by some c-state
        for m in preds.minterms():
            inc = not (d & preds.to_bdd(preds.minterm_formula(m.bits))).is_false
            witnessed = ctx.satisfiable(cc.CAnd(m.cond, c))
            assert inc == witnessed


def test_weakest_sufficient_is_weakest():
    rng = random.Random(13)
    for _ in range(20):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 2), ctx)
        t = randgen.rand_cond(rng, decls)
        d = preds.to_bdd(preds.weakest_sufficient(t))
        for m in preds.feasible_minterms():
            inc = not (d & preds.to_bdd(preds.minterm_formula(m.bits))).is_false
            # sufficiency for the included, maximality for the excluded
            assert inc == ctx.entails(m.cond, t)


def test_duality_on_feasible_minterms():
    rng = random.Random(21)
    for _ in range(20):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 2), ctx)
        t = randgen.rand_cond(rng, decls)
        inv = preds.invariant_bdd()
        ws = preds.to_bdd(preds.weakest_sufficient(t))
        si = preds.to_bdd(preds.strongest_implied(cc.CNot(t)))
        assert (ws & inv).equiv(~si & inv)


def test_preds_serialization_round_trip():
    _, preds = two_pred_domain()
    from bernabs.domain import predicate_list_text

    text = predicate_list_text(preds)
    again = parsing.parse_preds(text)
    assert [lbl for lbl, _ in again] == list(preds.labels)
