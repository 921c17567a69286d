import pytest

from bernabs import corpus, parsing, theory
from bernabs.domain import PredicateList


@pytest.fixture
def branch_reset():
    prog = parsing.parse_concrete(corpus.BRANCH_RESET_CP)
    ctx = theory.TheoryContext.of_program(prog)
    preds = PredicateList(parsing.parse_preds(corpus.BRANCH_RESET_PREDS), ctx)
    return prog, ctx, preds


@pytest.fixture
def chain_draws():
    prog = parsing.parse_concrete(corpus.CHAIN_DRAWS_CP)
    ctx = theory.TheoryContext.of_program(prog)
    preds = PredicateList(parsing.parse_preds(corpus.CHAIN_DRAWS_PREDS), ctx)
    return prog, ctx, preds


@pytest.fixture
def shift_ten():
    prog = parsing.parse_concrete(corpus.SHIFT_TEN_CP)
    ctx = theory.TheoryContext.of_program(prog)
    preds = PredicateList(parsing.parse_preds(corpus.SHIFT_TEN_PREDS), ctx)
    return prog, ctx, preds
