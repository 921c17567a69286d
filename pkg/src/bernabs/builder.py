"""Translate a concrete program plus predicates into a BERN program.

Branches follow the two-step recipe: compute the strongest formulas
implied by the guard and its negation, then either branch on ``*`` with
``assume`` statements (non-deterministic mode) or fold the choice into the
guard ``!beta || (alpha && flip(theta))`` (probabilistic mode).
Assignments update every predicate mentioning the assigned variable
simultaneously through ``choose(t, f)`` pairs built from weakest
preconditions; uniform draws become flips (or stars) per predicate, with
entailed polarities emitted as constants.

Invariant enforcement comes in two styles.  `observe` inserts
observe(I)/assume(I) after every parallel assignment.  `structural`
rewrites each assignment into a sequential per-predicate chain whose
updates branch on the values already chosen, so that every reachable
joint state is a feasible minterm and no observe is needed; pre-state
reads of already-updated predicates go through snapshot variables.

Flips whose value the canonical form does not depend on are never
allocated, which is what turns `a = unif [0, 10)` with predicate a<5 into
a plain `{a<5} = flip(theta)` and an exactly-representable branch guard
into a flip-free condition.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

from bernabs import bdd as bddm
from bernabs import bern
from bernabs import concrete as cc
from bernabs import formula as fm
from bernabs.domain import PredicateList
from bernabs.errors import EnumerationCapError
from bernabs.theory import wp_subst

MODES = ("nondet", "prob")
INVARIANT_STYLES = ("none", "observe", "structural")
PARAM_POLICIES = ("symbolic", "fixed", "fit")

SNAPSHOT_SUFFIX = "@pre"


@dataclass(frozen=True)
class ParamPolicy:
    kind: str
    value: Fraction | None = None

    def __post_init__(self):
        if self.kind not in PARAM_POLICIES:
            raise ValueError(f"unknown parameter policy {self.kind!r}")
        if self.kind == "fixed":
            if self.value is None or not 0 <= self.value <= 1:
                raise ValueError("fixed policy needs a rational in [0, 1]")
        elif self.value is not None:
            raise ValueError(f"{self.kind} policy takes no value")

    @classmethod
    def symbolic(cls):
        return cls("symbolic")

    @classmethod
    def fixed(cls, value):
        return cls("fixed", Fraction(value))

    @classmethod
    def fit(cls):
        return cls("fit")


@dataclass(frozen=True)
class AbstractionConfig:
    mode: str = "nondet"
    invariant_style: str = "observe"
    params: ParamPolicy = field(default_factory=ParamPolicy.symbolic)
    structural_bound: int = 8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.invariant_style not in INVARIANT_STYLES:
            raise ValueError(f"unknown invariant style {self.invariant_style!r}")
        if self.invariant_style == "structural" and self.mode != "prob":
            raise ValueError("structural invariants require probabilistic mode")


@dataclass
class FlipSite:
    site: int
    role: str  # 'branch' | 'assign' | 'draw' | 'structural'
    path: tuple
    loc: int
    predicate: str | None
    context: tuple  # ((label, polarity), ...) literals known at the site
    theta: object  # Fraction | str
    flagged: bool = False
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def to_json(self):
        if isinstance(self.theta, str):
            theta = {"symbolic": self.theta}
        else:
            theta = {"num": self.theta.numerator, "den": self.theta.denominator}
        return {
            "site": self.site,
            "role": self.role,
            "path": list(self.path),
            "line": self.loc,
            "predicate": self.predicate,
            "context": [lbl if pol else "!" + lbl for lbl, pol in self.context],
            "theta": theta,
            "flagged": self.flagged,
        }


class FlipSiteTable:
    def __init__(self, sites):
        self.sites = list(sites)

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def by_id(self, site):
        for s in self.sites:
            if s.site == site:
                return s
        raise KeyError(site)

    def theta_map(self):
        return {s.site: s.theta for s in self.sites}

    def to_json(self):
        return [s.to_json() for s in self.sites]

    def dumps(self):
        return json.dumps(self.to_json(), indent=2) + "\n"


class Abstractor:
    """One-shot translator; create per (predicates, config) pair."""

    def __init__(self, preds: PredicateList, config: AbstractionConfig):
        self.preds = preds
        self.ctx = preds.ctx
        self.config = config
        self.sites = []
        self._flip_counter = itertools.count()
        self._star_counter = itertools.count()
        self.aux_decls = []
        self._draw_forced_memo = {}
        self._inv = preds.invariant_bdd()

    # --- small helpers ---------------------------------------------------

    def _pred_bdd(self, f: fm.BoolFormula) -> bddm.Bdd:
        return self.preds.to_bdd(f)

    def _expr_of_bdd(self, b: bddm.Bdd) -> bern.BernExpr:
        return formula_to_expr(b.to_formula())

    def _new_theta(self, site):
        if self.config.params.kind == "fixed":
            return self.config.params.value
        return f"theta{site}"

    def _alloc_leaf(self, role, path, loc, predicate, context, meta):
        """Fresh flip (probabilistic) or star (non-deterministic) leaf."""
        if self.config.mode == "prob":
            site = next(self._flip_counter)
            theta = self._new_theta(site)
            self.sites.append(
                FlipSite(site, role, path, loc, predicate, tuple(context), theta, meta=meta)
            )
            return bern.Flip(site, theta)
        return bern.Star(next(self._star_counter))

    def _smallest_rep(self, b: bddm.Bdd, care: bddm.Bdd) -> bddm.Bdd:
        """Smallest of the natural representatives of b's care-equivalence
        class; states outside `care` are don't-cares."""
        candidates = (b, b & care, b | ~care)
        sizes = [c.size() for c in candidates]
        return candidates[sizes.index(min(sizes))]

    def _guarded_value(self, force_true: bddm.Bdd, force_false: bddm.Bdd, leaf_factory, care=None):
        """value = force_true OR (NOT force_false AND <leaf>); the leaf is
        elided when the value cannot depend on it within the care set."""
        if care is not None:
            absorbed = (care & ~(force_true | force_false)).is_false
            force_true = self._smallest_rep(force_true, care)
            force_false = self._smallest_rep(force_false, care)
        else:
            absorbed = (force_true | force_false).is_true
        if absorbed:
            return self._expr_of_bdd(force_true), False
        t_expr = self._expr_of_bdd(force_true)
        free_expr = self._expr_of_bdd(~force_false)
        leaf = leaf_factory()
        if force_false.is_false:  # no constraint against the leaf
            rhs = leaf
        else:
            rhs = bern.BAnd(free_expr, leaf)
        if force_true.is_false:
            return rhs, True
        return bern.BOr(t_expr, rhs), True

    def _implied_literals(self, b: bddm.Bdd):
        """Predicate literals entailed by b on feasible states."""
        scope = b & self._inv
        out = []
        for label in self.preds.labels:
            v = bddm.var_bdd(self.preds.universe, self.preds.var(label))
            if (scope & ~v).is_false:
                out.append((label, True))
            elif (scope & v).is_false:
                out.append((label, False))
        return tuple(out)

    def _mentioning(self, name):
        return [
            i
            for i, cond in enumerate(self.preds.conds)
            if name in cc.cond_vars(cond)
        ]

    # --- branch abstraction -----------------------------------------------

    def branch_parts(self, guard: cc.Cond, path=(), loc=0, context=()):
        """alpha/beta formulas plus the mode-specific branch scaffolding.

        Returns (cond_expr, then_prefix, else_prefix, then_ctx, else_ctx):
        non-deterministic mode branches on * with assume prefixes, the
        probabilistic mode folds the flip into the returned guard.
        """
        alpha = self.preds.strongest_implied(guard)
        beta = self.preds.strongest_implied(cc.CNot(guard))
        alpha_b = self._pred_bdd(alpha)
        beta_b = self._pred_bdd(beta)
        if self.config.mode == "nondet":
            cond = bern.Star(next(self._star_counter))
            then_prefix = (bern.BAssume(formula_to_expr(alpha), loc),)
            else_prefix = (bern.BAssume(formula_to_expr(beta), loc),)
            then_ctx = context + self._implied_literals(alpha_b)
            else_ctx = context + self._implied_literals(beta_b)
            return cond, then_prefix, else_prefix, then_ctx, else_ctx

        # if(!beta || (alpha && flip(theta))) { ... } else { ... }
        meta = {"guard": guard, "alpha": alpha, "beta": beta}
        cond, used = self._guarded_value(
            ~beta_b,
            ~alpha_b,
            lambda: self._alloc_leaf("branch", path, loc, None, context, meta),
            care=self._inv,
        )
        then_ctx = context + self._implied_literals(alpha_b | ~beta_b)
        else_ctx = context + self._implied_literals(beta_b)
        return cond, (), (), then_ctx, else_ctx

    def abstract_branch(self, guard: cc.Cond, then=(), els=(), path=(), loc=0, context=()):
        cond, then_prefix, else_prefix, _, _ = self.branch_parts(guard, path, loc, context)
        return bern.BIf(cond, then_prefix + tuple(then), else_prefix + tuple(els), loc)

    # --- assignment abstraction ---------------------------------------------

    def choose_pair(self, stmt: cc.Assign, pred_index: int):
        """(t, f) for predicate i under x = e: weakest sufficient formulas
        for the post-assignment truth and falsity of the predicate."""
        p = self.preds.conds[pred_index]
        t = self.preds.weakest_sufficient(wp_subst(stmt.name, stmt.expr, p))
        f = self.preds.weakest_sufficient(wp_subst(stmt.name, stmt.expr, cc.CNot(p)))
        return t, f

    def abstract_assignment(self, stmt: cc.Assign, path=(), context=()) -> bern.PAssign:
        """x = e  ->  parallel `{p_i} = choose(t_i, f_i)`, desugared per mode."""
        targets = []
        exprs = []
        for i in self._mentioning(stmt.name):
            label = self.preds.labels[i]
            t, f = self.choose_pair(stmt, i)
            meta = {"stmt": stmt, "t": t, "f": f, "predicate": label}
            value, _ = self._guarded_value(
                self._pred_bdd(t),
                self._pred_bdd(f),
                lambda m=meta, lbl=label: self._alloc_leaf(
                    "assign", path, stmt.loc, lbl, context, m
                ),
                care=self._inv,
            )
            targets.append(label)
            exprs.append(value)
        return bern.PAssign(tuple(targets), tuple(exprs), stmt.loc)

    # --- uniform draw abstraction ----------------------------------------------

    def _draw_cond(self, stmt: cc.Draw) -> cc.Cond:
        x = cc.IntVar(stmt.name)
        return cc.CAnd(
            cc.Cmp("<=", cc.IntConst(stmt.lo), x), cc.Cmp("<", x, cc.IntConst(stmt.hi))
        )

    def abstract_uniform(self, stmt: cc.Draw, path=(), context=()) -> bern.PAssign:
        """x = unif [lo, hi)  ->  one flip/star per predicate mentioning x,
        degenerating to a constant when the draw entails one polarity."""
        draw = self._draw_cond(stmt)
        targets = []
        exprs = []
        for i in self._mentioning(stmt.name):
            label = self.preds.labels[i]
            p = self.preds.conds[i]
            if self.ctx.entails(draw, p):
                value = bern.BTrue()
            elif not self.ctx.satisfiable(cc.CAnd(draw, p)):
                value = bern.BFalse()
            else:
                meta = {"stmt": stmt, "predicate": label}
                value = self._alloc_leaf("draw", path, stmt.loc, label, context, meta)
            targets.append(label)
            exprs.append(value)
        return bern.PAssign(tuple(targets), tuple(exprs), stmt.loc)

    # --- structurally dependent construction --------------------------------------

    def _forced(self, m, stmt, pred_index, pair_cache):
        """'T' / 'F' / None for predicate pred_index after stmt from pre-cell m.

        Draw verdicts are pre-state independent (the same entailment checks
        abstract_uniform uses), keeping the structural support equal to the
        observe-style support.
        """
        if isinstance(stmt, cc.Assign):
            t, f = pair_cache[pred_index]
            assignment = {
                self.preds.var(lbl): bit
                for lbl, bit in zip(self.preds.labels, m.bits)
            }
            if fm.eval_formula(t, assignment):
                return "T"
            if fm.eval_formula(f, assignment):
                return "F"
            return None
        key = (stmt.name, stmt.lo, stmt.hi, pred_index)
        hit = self._draw_forced_memo.get(key)
        if hit is None:
            draw = self._draw_cond(stmt)
            p = self.preds.conds[pred_index]
            if self.ctx.entails(draw, p):
                hit = "T"
            elif not self.ctx.satisfiable(cc.CAnd(draw, p)):
                hit = "F"
            else:
                hit = "free"
            self._draw_forced_memo[key] = hit
        return None if hit == "free" else hit

    def build_structural(self, stmt, path=(), context=()) -> tuple:
        """Sequential per-predicate updates whose control flow keeps every
        reachable joint state feasible, with no observe statements.

        For each feasible pre-cell m the admissible results S(m) are the
        feasible minterms that agree with m on untouched predicates and
        respect the deterministically forced polarities.  Updating in
        declaration order, a predicate is forced whenever only one polarity
        extends the already-chosen prefix inside S(m); otherwise it flips.
        Pre-state reads of already-updated predicates go through snapshot
        variables, preserving the parallel-assignment reads of the
        original statement.
        """
        n = len(self.preds)
        if n > self.config.structural_bound:
            raise EnumerationCapError(
                f"structural construction over {n} predicates exceeds bound "
                f"{self.config.structural_bound}"
            )
        target_idx = self._mentioning(stmt.name)
        if not target_idx:
            return (bern.PAssign((), (), stmt.loc),)
        pair_cache = {}
        if isinstance(stmt, cc.Assign):
            for i in target_idx:
                pair_cache[i] = self.choose_pair(stmt, i)
        untouched_idx = [i for i in range(n) if i not in target_idx]
        feasible = self.preds.feasible_minterms()
        feasible_bits = {m.bits for m in feasible}

        admissible = {}
        for m in feasible:
            forced = {i: self._forced(m, stmt, i, pair_cache) for i in target_idx}
            cell = []
            for bits in feasible_bits:
                if any(bits[j] != m.bits[j] for j in untouched_idx):
                    continue
                ok = True
                for i in target_idx:
                    if forced[i] == "T" and not bits[i]:
                        ok = False
                    elif forced[i] == "F" and bits[i]:
                        ok = False
                if ok:
                    cell.append(bits)
            admissible[m.bits] = sorted(cell)

        labels = self.preds.labels
        # scratch universe: pre-values of all predicates, then the post-values
        # of the targets in update order
        specs = [(f"pre {lbl}", fm.VarKind.PREDICATE) for lbl in labels]
        specs += [(f"cur {labels[i]}", fm.VarKind.PREDICATE) for i in target_idx]
        scratch = fm.make_universe(specs)
        pre_vars = [scratch.var(f"pre {lbl}") for lbl in labels]
        cur_vars = {i: scratch.var(f"cur {labels[i]}") for i in target_idx}

        def pair_formula(m_bits, chosen):
            lits = [
                fm.Ref(v) if bit else fm.Not(fm.Ref(v))
                for v, bit in zip(pre_vars, m_bits)
            ]
            for j, bit in chosen:
                v = cur_vars[j]
                lits.append(fm.Ref(v) if bit else fm.Not(fm.Ref(v)))
            return fm.and_all(lits)

        updates = []
        needed_snapshots = set()
        for k, i in enumerate(target_idx):
            earlier = target_idx[:k]
            must_true = []
            must_false = []
            for m in feasible:
                cell = admissible[m.bits]
                prefixes = sorted({tuple(bits[j] for j in earlier) for bits in cell})
                for prefix in prefixes:
                    ext_true = any(
                        bits[i] and tuple(bits[j] for j in earlier) == prefix
                        for bits in cell
                    )
                    ext_false = any(
                        (not bits[i]) and tuple(bits[j] for j in earlier) == prefix
                        for bits in cell
                    )
                    chosen = tuple(zip(earlier, prefix))
                    if ext_true and not ext_false:
                        must_true.append(pair_formula(m.bits, chosen))
                    elif ext_false and not ext_true:
                        must_false.append(pair_formula(m.bits, chosen))
            mt_b = bddm.build(scratch, fm.or_all(must_true))
            mf_b = bddm.build(scratch, fm.or_all(must_false))

            def leaf(meta_i=i):
                meta = {
                    "stmt": stmt,
                    "predicate": labels[meta_i],
                    "must_true": mt_b.to_formula(),
                    "must_false": mf_b.to_formula(),
                    "earlier_targets": tuple(earlier),
                }
                return self._alloc_leaf(
                    "structural", path, stmt.loc, labels[meta_i], context, meta
                )

            value, _ = self._guarded_value(mt_b, mf_b, leaf)
            value = _substitute_structural_vars(
                value, labels, target_idx[:k], needed_snapshots
            )
            updates.append(bern.PAssign((labels[i],), (value,), stmt.loc))

        stmts = []
        if needed_snapshots:
            snap_order = [labels[j] for j in sorted(needed_snapshots)]
            for lbl in snap_order:
                name = lbl + SNAPSHOT_SUFFIX
                if name not in self.aux_decls:
                    self.aux_decls.append(name)
            stmts.append(
                bern.PAssign(
                    tuple(lbl + SNAPSHOT_SUFFIX for lbl in snap_order),
                    tuple(bern.BVar(lbl) for lbl in snap_order),
                    stmt.loc,
                )
            )
        stmts.extend(updates)
        return tuple(stmts)

    # --- observes and whole programs ------------------------------------------

    def abstract_observe(self, stmt: cc.Observe, context=()) -> bern.BernStmt:
        body = formula_to_expr(self.preds.strongest_implied(stmt.cond))
        if self.config.mode == "prob":
            return bern.BObserve(body, stmt.loc)
        return bern.BAssume(body, stmt.loc)

    def abstract_block(self, body, path, context):
        out = []
        for idx, stmt in enumerate(body):
            at = path + (idx,)
            if isinstance(stmt, cc.Assign):
                if self.config.invariant_style == "structural":
                    out.extend(self.build_structural(stmt, at, context))
                else:
                    out.append(self.abstract_assignment(stmt, at, context))
            elif isinstance(stmt, cc.Draw):
                if self.config.invariant_style == "structural":
                    out.extend(self.build_structural(stmt, at, context))
                else:
                    out.append(self.abstract_uniform(stmt, at, context))
            elif isinstance(stmt, cc.Observe):
                out.append(self.abstract_observe(stmt, context))
            elif isinstance(stmt, cc.If):
                cond, tp, ep, tctx, ectx = self.branch_parts(
                    stmt.cond, at, stmt.loc, context
                )
                then_body = tp + self.abstract_block(stmt.then, at + ("then",), tctx)
                else_body = ep + self.abstract_block(stmt.els, at + ("else",), ectx)
                out.append(bern.BIf(cond, then_body, else_body, stmt.loc))
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return tuple(out)


def _substitute_structural_vars(expr, labels, earlier_targets, needed_snapshots):
    """Rewrite scratch-universe names: `cur X` reads the live variable, and
    `pre X` reads a snapshot when X was already updated (live otherwise)."""
    earlier = {labels[j] for j in earlier_targets}

    def walk(e):
        if isinstance(e, bern.BVar):
            if e.name.startswith("cur "):
                return bern.BVar(e.name[4:])
            if e.name.startswith("pre "):
                base = e.name[4:]
                if base in earlier:
                    needed_snapshots.add(labels.index(base))
                    return bern.BVar(base + SNAPSHOT_SUFFIX)
                return bern.BVar(base)
            return e
        if isinstance(e, bern.BNot):
            return bern.BNot(walk(e.operand))
        if isinstance(e, (bern.BAnd, bern.BOr, bern.BImp, bern.BIff)):
            return type(e)(walk(e.left), walk(e.right))
        return e

    return walk(expr)


def formula_to_expr(f: fm.BoolFormula) -> bern.BernExpr:
    if isinstance(f, fm.TrueF):
        return bern.BTrue()
    if isinstance(f, fm.FalseF):
        return bern.BFalse()
    if isinstance(f, fm.Ref):
        return bern.BVar(f.var.label)
    if isinstance(f, fm.Not):
        return bern.BNot(formula_to_expr(f.operand))
    table = {fm.And: bern.BAnd, fm.Or: bern.BOr, fm.Implies: bern.BImp, fm.Iff: bern.BIff}
    return table[type(f)](formula_to_expr(f.left), formula_to_expr(f.right))


def enforce_invariants_observe(
    program: bern.BernProgram, preds: PredicateList, mode=None
) -> bern.BernProgram:
    """Insert observe(I) (or assume(I) in non-deterministic mode) after
    every parallel assignment; I is the feasible-minterm invariant."""
    mode = mode or program.mode or "prob"
    inv = formula_to_expr(preds.invariant_formula())
    guard_cls = bern.BObserve if mode == "prob" else bern.BAssume

    def walk(body):
        out = []
        for stmt in body:
            if isinstance(stmt, bern.PAssign):
                out.append(stmt)
                out.append(guard_cls(inv, stmt.loc))
            elif isinstance(stmt, bern.BIf):
                out.append(bern.BIf(stmt.cond, walk(stmt.then), walk(stmt.els), stmt.loc))
            else:
                out.append(stmt)
        return tuple(out)

    return bern.BernProgram(program.decls, walk(program.body), program.mode)


def abstract_program(
    program: cc.ConcreteProgram, preds: PredicateList, config: AbstractionConfig
):
    """Full pipeline: returns (BernProgram, FlipSiteTable)."""
    if preds.ctx.decls != program.decls:
        raise ValueError("predicate context does not match the program's declarations")
    worker = Abstractor(preds, config)
    body = worker.abstract_block(program.body, (), ())
    decls = preds.labels + tuple(worker.aux_decls)
    out = bern.BernProgram(decls, body, config.mode)
    if config.invariant_style == "observe":
        out = enforce_invariants_observe(out, preds, config.mode)
    return out, FlipSiteTable(worker.sites)


def resolve_parameters(program: bern.BernProgram, theta_by_site) -> bern.BernProgram:
    """Substitute concrete flip parameters for symbolic ones."""

    def on_expr(e):
        if isinstance(e, bern.Flip):
            theta = theta_by_site.get(e.site, e.theta)
            return bern.Flip(e.site, Fraction(theta) if not isinstance(theta, str) else theta)
        if isinstance(e, bern.BNot):
            return bern.BNot(on_expr(e.operand))
        if isinstance(e, (bern.BAnd, bern.BOr, bern.BImp, bern.BIff)):
            return type(e)(on_expr(e.left), on_expr(e.right))
        if isinstance(e, bern.Choose):
            return bern.Choose(on_expr(e.when_true), on_expr(e.when_false))
        return e

    def walk(body):
        out = []
        for stmt in body:
            if isinstance(stmt, bern.PAssign):
                out.append(
                    bern.PAssign(stmt.targets, tuple(on_expr(x) for x in stmt.exprs), stmt.loc)
                )
            elif isinstance(stmt, bern.BIf):
                out.append(bern.BIf(on_expr(stmt.cond), walk(stmt.then), walk(stmt.els), stmt.loc))
            elif isinstance(stmt, bern.BObserve):
                out.append(bern.BObserve(on_expr(stmt.cond), stmt.loc))
            elif isinstance(stmt, bern.BAssume):
                out.append(bern.BAssume(on_expr(stmt.cond), stmt.loc))
        return tuple(out)

    return bern.BernProgram(program.decls, walk(program.body), program.mode)
