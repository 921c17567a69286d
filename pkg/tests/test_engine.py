"""Symbolic inference: transfer functions, reachability, queries."""

import random
from fractions import Fraction

import pytest

from bernabs import bdd as bddm
from bernabs import bern, corpus, engine, parsing, randgen
from bernabs.errors import ConditionOnImpossibleError, ModeError


def test_transfer_golden_flip_conjunction():
    # from Delta = {x<4}, the statement {x<4} = {x<4} && flip(theta) gives
    # Delta' = ({x<4} && f) || (!{x<4} && !f)
    prog = parsing.parse_bern("bool {x<4}\n{x<4} = {x<4} && flip(1/2)")
    ctx = engine.SymbolicContext(prog)
    init = ctx.state_bdd(bern.BVar("x<4"))
    out = engine.transfer(ctx, engine.SymbolicState(init, 0), ctx.program.body[0])
    x = bddm.var_bdd(ctx.universe, ctx.state_vars["x<4"])
    f = bddm.var_bdd(ctx.universe, ctx.flip_vars[0])
    assert out.delta.equiv((x & f) | (~x & ~f))


def test_transfer_observe_false():
    prog = parsing.parse_bern("bool a\nobserve(F)")
    run = engine.run_symbolic(prog)
    assert run.at("end").delta.is_false


def test_transfer_identity_assignment():
    prog = parsing.parse_bern("bool a\na = a")
    run = engine.run_symbolic(prog)
    assert run.at("end").delta.is_true


def test_run_symbolic_empty_program():
    prog = parsing.parse_bern("bool a\n")
    run = engine.run_symbolic(prog)
    assert len(run.points) == 1
    assert run.at(0).delta.is_true


def test_chain_draws_query():
    prog = parsing.parse_bern(corpus.CHAIN_DRAWS_BERN)
    result = engine.query(prog, parsing.parse_event("{c<5}", prog.decls))
    assert result.probability == Fraction(11, 32)
    assert result.survival == 1
    # five flip variables and three predicate variables in the final Delta
    run = engine.run_symbolic(prog)
    assert len(run.ctx.flip_vars) == 5
    assert len(run.ctx.state_vars) == 3


def test_query_trivial_event():
    prog = parsing.parse_bern(corpus.CHAIN_DRAWS_BERN)
    assert engine.query(prog, bern.BTrue()).probability == 1


def test_bayes_net_conditional_query():
    prog = parsing.parse_bern(corpus.BAYES_NET_BERN)
    result = engine.query(prog, bern.BVar("a"), init={"a": False, "b": False})
    assert result.probability == Fraction(1, 2)
    assert result.survival == Fraction(1, 2)


def test_query_conditioning_on_impossible():
    prog = parsing.parse_bern("bool a\nobserve(F)")
    with pytest.raises(ConditionOnImpossibleError):
        engine.query(prog, bern.BVar("a"))
    unnorm = engine.query(prog, bern.BVar("a"), normalized=False)
    assert unnorm.probability == 0 and unnorm.survival == 0


def test_star_rejected():
    prog = parsing.parse_bern("bool a\na = *")
    with pytest.raises(ModeError):
        engine.run_symbolic(prog)


def test_functional_dependency_from_point_init():
    rng = random.Random(3)
    for _ in range(20):
        prog = randgen.rand_bern_program(rng, ("v0", "v1"), max_flips=4, max_stmts=5)
        init = {n: rng.random() < 0.5 for n in prog.decls}
        run = engine.run_symbolic(prog, init=init)
        assert run.functional_dependency_ok()


def test_monotone_survival():
    rng = random.Random(29)
    for _ in range(20):
        prog = randgen.rand_bern_program(rng, ("v0", "v1"), max_flips=5, max_stmts=6)
        init = {n: rng.random() < 0.5 for n in prog.decls}
        run = engine.run_symbolic(prog, init=init)
        masses = [run.survival(k) for k in range(len(run.points))]
        assert all(a >= b for a, b in zip(masses, masses[1:]))


def test_query_json_shape():
    prog = parsing.parse_bern(corpus.CHAIN_DRAWS_BERN)
    blob = engine.query(prog, parsing.parse_event("{c<5}", prog.decls)).to_json()
    assert blob == {
        "point": "end",
        "event": "{c<5}",
        "numerator": 11,
        "denominator": 32,
        "survival_numerator": 1,
        "survival_denominator": 1,
    }


def test_backend_parity_on_queries():
    from bernabs import kernel

    if "compiled" not in kernel.available_backends():
        pytest.skip("compiled kernel not built")
    prog = parsing.parse_bern(corpus.CHAIN_DRAWS_BERN)
    event = parsing.parse_event("{c<5} && !{a<5}", prog.decls)
    r1 = engine.query(prog, event, backend="pure")
    r2 = engine.query(prog, event, backend="compiled")
    assert r1.probability == r2.probability
