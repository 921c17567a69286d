"""Predicate domains: abstraction, concretization, and formula approximation.

A predicate list (p_1, ..., p_n) induces the abstract domain of total truth
assignments (b_1, ..., b_n).  Both approximation operators enumerate full
minterms — 2^n theory queries — trading speed for maximal precision, which
is why n is capped.  Returned formulas are canonicalized through the Bdd
engine so tests can compare semantics rather than syntax.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from bernabs import bdd as bddm
from bernabs import concrete as cc
from bernabs import formula as fm
from bernabs.errors import PredicateBoundError
from bernabs.theory import TheoryContext

DEFAULT_MAX_PREDICATES = 16


@dataclass(frozen=True)
class Minterm:
    bits: tuple
    cond: cc.Cond
    feasible: bool


class PredicateList:
    def __init__(self, preds, ctx: TheoryContext, max_predicates=DEFAULT_MAX_PREDICATES, backend=None):
        preds = list(preds)
        if len(preds) > max_predicates:
            raise PredicateBoundError(
                f"{len(preds)} predicates exceed the bound {max_predicates}"
            )
        labels = [label for label, _ in preds]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate predicate labels")
        for _, cond in preds:
            ctx.check_closed(cond)
        self.ctx = ctx
        self.labels = tuple(labels)
        self.conds = tuple(cond for _, cond in preds)
        self.universe = fm.make_universe(
            [(label, fm.VarKind.PREDICATE) for label in labels], backend=backend
        )
        self._minterms = None

    def __len__(self):
        return len(self.labels)

    def var(self, label) -> fm.BoolVar:
        return self.universe.var(label)

    def cond_of(self, label) -> cc.Cond:
        return self.conds[self.labels.index(label)]

    # --- minterm machinery -------------------------------------------------

    def minterm_cond(self, bits) -> cc.Cond:
        lits = [
            cond if bit else cc.CNot(cond)
            for cond, bit in zip(self.conds, bits)
        ]
        return cc.cond_and_all(lits)

    def minterm_formula(self, bits) -> fm.BoolFormula:
        lits = [
            fm.Ref(v) if bit else fm.Not(fm.Ref(v))
            for v, bit in zip(self.universe.variables, bits)
        ]
        return fm.and_all(lits)

    def minterms(self):
        if self._minterms is None:
            out = []
            for bits in itertools.product((False, True), repeat=len(self)):
                cond = self.minterm_cond(bits)
                out.append(Minterm(bits, cond, self.ctx.satisfiable(cond)))
            self._minterms = tuple(out)
        return self._minterms

    def feasible_minterms(self):
        return tuple(m for m in self.minterms() if m.feasible)

    # --- abstraction / concretization ----------------------------------------

    def alpha(self, state: dict) -> tuple:
        """Componentwise predicate evaluation at a total concrete state."""
        return tuple(cc.eval_cond(cond, state) for cond in self.conds)

    def gamma_lower(self, bits) -> list:
        """All concrete states whose abstraction is exactly `bits`."""
        bits = tuple(bool(b) for b in bits)
        fns = [self.ctx.compile(cond) for cond in self.conds]
        names = self.ctx.names
        out = []
        for key in self.ctx.states():
            if tuple(fn(key) for fn in fns) == bits:
                out.append(dict(zip(names, key)))
        return out

    # --- formula approximation -------------------------------------------------

    def _canonical(self, minterm_list) -> fm.BoolFormula:
        f = fm.or_all(self.minterm_formula(m.bits) for m in minterm_list)
        return bddm.build(self.universe, f).to_formula()

    def strongest_implied(self, cond) -> fm.BoolFormula:
        """Strongest formula over the predicates implied (modulo theory) by cond.

        Disjunction of the minterms consistent with cond: any weaker set
        would miss a reachable abstract state, any stronger set would not
        be implied.
        """
        hits = [
            m
            for m in self.minterms()
            if self.ctx.satisfiable(cc.CAnd(m.cond, cond))
        ]
        return self._canonical(hits)

    def weakest_sufficient(self, target) -> fm.BoolFormula:
        """Weakest formula over the predicates that guarantees `target`.

        Disjunction of the feasible minterms entailing target.
        """
        hits = [
            m
            for m in self.feasible_minterms()
            if self.ctx.entails(m.cond, target)
        ]
        return self._canonical(hits)

    def invariant_formula(self) -> fm.BoolFormula:
        """I: the disjunction of theory-feasible minterms."""
        return self._canonical(self.feasible_minterms())

    def invariant_bdd(self) -> bddm.Bdd:
        return bddm.build(self.universe, self.invariant_formula())

    def to_bdd(self, f: fm.BoolFormula) -> bddm.Bdd:
        return bddm.build(self.universe, f)

    def equivalent_mod_invariant(self, f: fm.BoolFormula, g: fm.BoolFormula) -> bool:
        """Semantic equality restricted to feasible abstract states."""
        inv = self.invariant_bdd()
        return (self.to_bdd(f) & inv).equiv(self.to_bdd(g) & inv)


def predicate_list_text(preds: PredicateList) -> str:
    """Serialize back to the .preds line format."""
    return "\n".join(f"{label}: {cond}" for label, cond in zip(preds.labels, preds.conds)) + "\n"
