"""Backend parity and canonical-form invariants of the node stores."""

import itertools
import random

import pytest

from bernabs import kernel
from bernabs._pynodes import OP_AND, OP_IFF, OP_IMP, OP_OR, OP_XOR

BACKENDS = kernel.available_backends()


def eval_node(table, u, assignment):
    while u >= 2:
        level, lo, hi = table.node(u)
        u = hi if assignment[level] else lo
    return u == 1


def random_ops(table, rng, num_vars, steps):
    pool = [table.var(i) for i in range(num_vars)]
    for _ in range(steps):
        op = rng.choice((OP_AND, OP_OR, OP_XOR, OP_IMP, OP_IFF))
        a, b = rng.choice(pool), rng.choice(pool)
        pool.append(table.apply(op, a, b))
        if rng.random() < 0.3:
            pool.append(table.not_(rng.choice(pool)))
        if rng.random() < 0.2:
            pool.append(table.exists(rng.choice(pool), (rng.randrange(num_vars),)))
        if rng.random() < 0.2:
            pool.append(table.restrict(rng.choice(pool), rng.randrange(num_vars), rng.random() < 0.5))
    return pool


@pytest.mark.parametrize("backend", BACKENDS)
def test_reduced_and_ordered(backend):
    table = kernel.get_node_table_class(backend)(4)
    random_ops(table, random.Random(0), 4, 120)
    seen = set()
    for u in range(2, len(table)):
        level, lo, hi = table.node(u)
        assert lo != hi, "node with equal children survived"
        assert (level, lo, hi) not in seen, "duplicate node survived"
        seen.add((level, lo, hi))
        for child in (lo, hi):
            assert child < 2 or table.node(child)[0] > level, "order violated"


def test_backends_agree_semantically():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    rng1, rng2 = random.Random(42), random.Random(42)
    t1 = kernel.get_node_table_class("pure")(5)
    t2 = kernel.get_node_table_class("compiled")(5)
    pool1 = random_ops(t1, rng1, 5, 200)
    pool2 = random_ops(t2, rng2, 5, 200)
    assert len(pool1) == len(pool2)
    for u1, u2 in zip(pool1, pool2):
        for bits in itertools.product((False, True), repeat=5):
            assert eval_node(t1, u1, bits) == eval_node(t2, u2, bits)


def test_backends_agree_on_node_counts():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernel not built")
    t1 = kernel.get_node_table_class("pure")(6)
    t2 = kernel.get_node_table_class("compiled")(6)
    random_ops(t1, random.Random(9), 6, 300)
    random_ops(t2, random.Random(9), 6, 300)
    assert len(t1) == len(t2)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rename_swaps_levels(backend):
    table = kernel.get_node_table_class(backend)(3)
    a, b = table.var(0), table.var(1)
    conj = table.apply(OP_AND, a, table.not_(b))
    swapped = table.rename(conj, {0: 1, 1: 0})
    for bits in itertools.product((False, True), repeat=3):
        want = bits[1] and not bits[0]
        assert eval_node(table, swapped, bits) == want


@pytest.mark.parametrize("backend", BACKENDS)
def test_ite_matches_apply(backend):
    table = kernel.get_node_table_class(backend)(4)
    rng = random.Random(3)
    pool = random_ops(table, rng, 4, 60)
    for _ in range(40):
        f, g, h = (rng.choice(pool) for _ in range(3))
        r = table.ite(f, g, h)
        for bits in itertools.product((False, True), repeat=4):
            want = eval_node(table, g if eval_node(table, f, bits) else h, bits)
            assert eval_node(table, r, bits) == want
