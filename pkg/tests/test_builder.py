"""Abstraction builder: branch/assignment/draw translation, invariants."""

import random
from fractions import Fraction

import pytest

from bernabs import bdd as bddm
from bernabs import bern
from bernabs import builder as bld
from bernabs import concrete as cc
from bernabs import formula as fm
from bernabs import parsing, randgen, theorems, theory
from bernabs.domain import PredicateList
from bernabs.engine import expr_to_bdd

FIXED_HALF = bld.ParamPolicy.fixed(Fraction(1, 2))


def expr_bdd_over(preds, expr, extra_flips=8):
    """Build a Bdd of a BERN expression over predicate vars plus flip slots."""
    specs = [(lbl, fm.VarKind.PREDICATE) for lbl in preds.labels]
    specs += [(f"f{i}", fm.VarKind.FLIP, Fraction(1, 2)) for i in range(extra_flips)]
    specs += [(f"s{i}", fm.VarKind.AUX) for i in range(extra_flips)]
    u = fm.make_universe(specs)
    return u, expr_to_bdd(
        u,
        expr,
        lambda name: u.var(name),
        flip_var=lambda e: u.var(f"f{e.site}"),
        star_var=lambda e: u.var(f"s{e.occurrence}"),
    )


def inv_bdd(preds, universe):
    return bddm.build(universe, _relabel(preds.invariant_formula(), universe))


def _relabel(formula, universe):
    if isinstance(formula, fm.TrueF) or isinstance(formula, fm.FalseF):
        return formula
    if isinstance(formula, fm.Ref):
        return fm.Ref(universe.var(formula.var.label))
    if isinstance(formula, fm.Not):
        return fm.Not(_relabel(formula.operand, universe))
    return type(formula)(_relabel(formula.left, universe), _relabel(formula.right, universe))


def test_branch_scaffold_nondet(branch_reset):
    prog, ctx, preds = branch_reset
    worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
    stmt = prog.body[0]
    scaffold = worker.abstract_branch(stmt.cond)
    assert isinstance(scaffold.cond, bern.Star)
    then_assume, else_assume = scaffold.then[0], scaffold.els[0]
    b1 = fm.Ref(preds.var("x<-4"))
    b2 = fm.Ref(preds.var("x<3"))
    u, then_b = expr_bdd_over(preds, then_assume.cond)
    assert then_b.equiv(bddm.build(u, _relabel(b2, u)))
    u2, else_b = expr_bdd_over(preds, else_assume.cond)
    assert else_b.equiv(bddm.build(u2, _relabel(fm.Not(b1), u2)))


def test_branch_guard_probabilistic(branch_reset):
    prog, ctx, preds = branch_reset
    worker = bld.Abstractor(preds, bld.AbstractionConfig("prob", "none", FIXED_HALF))
    scaffold = worker.abstract_branch(prog.body[0].cond)
    # guard is {x<-4} || ({x<3} && flip(theta))
    u, got = expr_bdd_over(preds, scaffold.cond)
    b1 = bddm.var_bdd(u, u.var("x<-4"))
    b2 = bddm.var_bdd(u, u.var("x<3"))
    f0 = bddm.var_bdd(u, u.var("f0"))
    assert got.equiv(b1 | (b2 & f0))


def test_branch_guard_trivial():
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 4)])
    preds = PredicateList([("p", parsing.parse_cond("x < 2", ["x"]))], ctx)
    worker = bld.Abstractor(preds, bld.AbstractionConfig("prob", "none", FIXED_HALF))
    scaffold = worker.abstract_branch(cc.CTrue())
    assert scaffold.cond == bern.BTrue()
    assert worker.sites == []


def test_assignment_updates(branch_reset):
    prog, ctx, preds = branch_reset
    worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
    incr = cc.Assign("x", cc.Add(cc.IntVar("x"), cc.IntConst(1)))
    pa = worker.abstract_assignment(incr)
    assert pa.targets == ("x<-4", "x<3")
    values = dict(zip(pa.targets, pa.exprs))
    inv_expr = preds.invariant_formula()
    # x<3 gets choose({x<-4}, !{x<3}); x<-4 gets choose(F, !{x<3} || !{x<-4})
    # star occurrences allocate in predicate order: x<-4 gets s0, x<3 gets s1
    u, got3 = expr_bdd_over(preds, values["x<3"])
    b1 = bddm.var_bdd(u, u.var("x<-4"))
    b2 = bddm.var_bdd(u, u.var("x<3"))
    s1 = bddm.var_bdd(u, u.var("s1"))
    inv = bddm.build(u, _relabel(inv_expr, u))
    want3 = b1 | (b2 & s1)  # choose({x<-4}, !{x<3}) desugared
    assert (got3 & inv).equiv(want3 & inv)
    u2, got4 = expr_bdd_over(preds, values["x<-4"])
    b1_2 = bddm.var_bdd(u2, u2.var("x<-4"))
    b2_2 = bddm.var_bdd(u2, u2.var("x<3"))
    s0_2 = bddm.var_bdd(u2, u2.var("s0"))
    inv2 = bddm.build(u2, _relabel(inv_expr, u2))
    want4 = (b1_2 & b2_2) & s0_2  # choose(F, !{x<3} || !{x<-4}) desugared
    assert (got4 & inv2).equiv(want4 & inv2)


def test_assignment_to_constants(branch_reset):
    prog, ctx, preds = branch_reset
    worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
    zero = cc.Assign("x", cc.IntConst(0))
    pa = worker.abstract_assignment(zero)
    values = dict(zip(pa.targets, pa.exprs))
    assert values["x<3"] == bern.BTrue()
    assert values["x<-4"] == bern.BFalse()


def test_assignment_untracked_variable():
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 4), cc.VarDecl("y", 0, 4)])
    preds = PredicateList([("p", parsing.parse_cond("x < 2", ["x"]))], ctx)
    worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
    pa = worker.abstract_assignment(cc.Assign("y", cc.IntConst(1)))
    assert pa.targets == ()


def test_uniform_draw_fitted_shape(chain_draws):
    prog, ctx, preds = chain_draws
    worker = bld.Abstractor(preds, bld.AbstractionConfig("prob", "none", FIXED_HALF))
    pa = worker.abstract_uniform(cc.Draw("a", 0, 10))
    assert pa.targets == ("a<5",)
    assert isinstance(pa.exprs[0], bern.Flip)


def test_uniform_draw_forced_constant():
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 32)])
    preds = PredicateList([("x<20", parsing.parse_cond("x < 20", ["x"]))], ctx)
    worker = bld.Abstractor(preds, bld.AbstractionConfig("prob", "none", FIXED_HALF))
    pa = worker.abstract_uniform(cc.Draw("x", 0, 10))
    assert pa.exprs == (bern.BTrue(),)
    worker2 = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
    pa2 = worker2.abstract_uniform(cc.Draw("x", 25, 32))
    assert pa2.exprs == (bern.BFalse(),)


def test_enforce_observe_counts(shift_ten):
    prog, ctx, preds = shift_ten
    cfg = bld.AbstractionConfig("prob", "observe", FIXED_HALF)
    aprog, _ = bld.abstract_program(prog, preds, cfg)
    observes = [s for s in bern.walk_stmts(aprog.body) if isinstance(s, bern.BObserve)]
    passigns = [s for s in bern.walk_stmts(aprog.body) if isinstance(s, bern.PAssign)]
    assert len(observes) == len(passigns) == 1
    # the observed invariant is {x<-4} => {x<3}
    u, got = expr_bdd_over(preds, observes[0].cond)
    b1 = bddm.var_bdd(u, u.var("x<-4"))
    b2 = bddm.var_bdd(u, u.var("x<3"))
    assert got.equiv(b1.implies(b2))


def test_enforce_observe_inserts_after_every_assignment(chain_draws):
    prog, ctx, preds = chain_draws
    cfg = bld.AbstractionConfig("prob", "observe", FIXED_HALF)
    aprog, _ = bld.abstract_program(prog, preds, cfg)
    body = list(bern.walk_stmts(aprog.body))
    observes = [s for s in body if isinstance(s, bern.BObserve)]
    passigns = [s for s in body if isinstance(s, bern.PAssign)]
    assert len(observes) == len(passigns) == 5


def test_structural_shape(shift_ten):
    prog, ctx, preds = shift_ten
    cfg = bld.AbstractionConfig("prob", "structural", FIXED_HALF)
    aprog, sites = bld.abstract_program(prog, preds, cfg)
    # no observes, one single-target assignment per predicate
    assert not any(isinstance(s, bern.BObserve) for s in bern.walk_stmts(aprog.body))
    passigns = [s for s in bern.walk_stmts(aprog.body) if isinstance(s, bern.PAssign)]
    per_pred = [s for s in passigns if len(s.targets) == 1 and not s.targets[0].endswith("@pre")]
    assert [s.targets[0] for s in per_pred] == ["x<-4", "x<3"]
    assert all(s.role == "structural" for s in sites)


def test_structural_outputs_satisfy_invariant(shift_ten):
    prog, ctx, preds = shift_ten
    cfg = bld.AbstractionConfig("prob", "structural", FIXED_HALF)
    aprog, _ = bld.abstract_program(prog, preds, cfg)
    lowered = theorems.lower(aprog)
    feasible = {m.bits for m in preds.feasible_minterms()}
    for m in preds.feasible_minterms():
        start = theorems._aux_padded(aprog.decls, preds.labels, m.bits)
        reach = theorems._project(
            bern.interp_nondet(lowered, {start}), aprog.decls, preds.labels
        )
        assert reach <= feasible


def test_structural_single_predicate_plain_form():
    ctx = theory.TheoryContext([cc.VarDecl("x", -16, 16)])
    preds = PredicateList([("x<3", parsing.parse_cond("x < 3", ["x"]))], ctx)
    cfg = bld.AbstractionConfig("prob", "structural", FIXED_HALF)
    prog = cc.ConcreteProgram(ctx.decls, (cc.Assign("x", cc.Add(cc.IntVar("x"), cc.IntConst(10))),))
    aprog, sites = bld.abstract_program(prog, preds, cfg)
    assert aprog.decls == ("x<3",)  # no snapshot needed
    assert len(aprog.body) == 1
    text = bern.to_text(aprog)
    assert "{x<3} = {x<3} && flip(1/2)" in text


def test_branch_coverage_property():
    # !alpha && !beta is infeasible: the two branch conditions cover I
    rng = random.Random(31)
    for _ in range(25):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 2), ctx)
        worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
        guard = randgen.rand_cond(rng, decls)
        alpha = preds.to_bdd(preds.strongest_implied(guard))
        beta = preds.to_bdd(preds.strongest_implied(cc.CNot(guard)))
        assert ((alpha | beta) & preds.invariant_bdd()).equiv(preds.invariant_bdd())


def test_choose_guard_disjointness():
    rng = random.Random(37)
    for _ in range(25):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 2), ctx)
        worker = bld.Abstractor(preds, bld.AbstractionConfig("nondet", "none"))
        stmt = randgen.rand_safe_assign(rng, decls)
        for i in range(len(preds)):
            if stmt.name not in cc.cond_vars(preds.conds[i]):
                continue
            t, f = worker.choose_pair(stmt, i)
            both = preds.to_bdd(t) & preds.to_bdd(f) & preds.invariant_bdd()
            assert both.is_false


def test_concrete_observe_becomes_observe():
    ctx = theory.TheoryContext([cc.VarDecl("x", 0, 8)])
    preds = PredicateList([("x<4", parsing.parse_cond("x < 4", ["x"]))], ctx)
    prog = cc.ConcreteProgram(ctx.decls, (cc.Observe(parsing.parse_cond("x < 2", ["x"])),))
    aprog, _ = bld.abstract_program(prog, preds, bld.AbstractionConfig("prob", "none", FIXED_HALF))
    assert isinstance(aprog.body[0], bern.BObserve)
    nprog, _ = bld.abstract_program(prog, preds, bld.AbstractionConfig("nondet", "none"))
    assert isinstance(nprog.body[0], bern.BAssume)


def test_empty_program_abstracts_to_empty(branch_reset):
    prog, ctx, preds = branch_reset
    empty = cc.ConcreteProgram(prog.decls, ())
    aprog, sites = bld.abstract_program(empty, preds, bld.AbstractionConfig("nondet", "none"))
    assert aprog.body == ()
    assert len(sites) == 0


def test_config_validation():
    with pytest.raises(ValueError):
        bld.AbstractionConfig("nondet", "structural")
    with pytest.raises(ValueError):
        bld.ParamPolicy.fixed(Fraction(3, 2))
    with pytest.raises(ValueError):
        bld.AbstractionConfig("maybe")


def test_site_table_json(chain_draws):
    prog, ctx, preds = chain_draws
    cfg = bld.AbstractionConfig("prob", "observe", bld.ParamPolicy.symbolic())
    _, sites = bld.abstract_program(prog, preds, cfg)
    blob = sites.to_json()
    assert len(blob) == 5
    assert blob[1]["context"] == ["a<5"]
    assert blob[2]["context"] == ["!a<5"]
    assert all(entry["theta"].get("symbolic") for entry in blob)
