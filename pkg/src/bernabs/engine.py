"""Symbolic inference on probabilistic BERN programs.

The reachable-knowledge base Δ at each program point is a Bdd over the
current predicate variables plus one weighted variable per flip site
encountered so far; flips stay unconstrained so that weighted model
counting over them recovers path probabilities.  Parallel assignments are
relational images: rename state variables to primed copies, conjoin the
update constraints, quantify the primed copies out.

Program points are prefix points of the top-level statement sequence:
point 0 is the initial Δ, point k is after the k-th statement; "end" names
the last one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from bernabs import bdd as bddm
from bernabs import bern
from bernabs import formula as fm
from bernabs.errors import ConditionOnImpossibleError, ModeError

PRIME_SUFFIX = "'"


def expr_to_bdd(universe, expr, var_of_name, flip_var=None, star_var=None) -> bddm.Bdd:
    """Evaluate a BERN expression to a Bdd.

    `var_of_name` maps a variable name to a BoolVar (callers pass primed
    copies when evaluating pre-state reads).  Flip sites and star
    occurrences resolve through the optional callbacks.
    """

    def walk(e):
        if isinstance(e, bern.BTrue):
            return bddm.true_bdd(universe)
        if isinstance(e, bern.BFalse):
            return bddm.false_bdd(universe)
        if isinstance(e, bern.BVar):
            return bddm.var_bdd(universe, var_of_name(e.name))
        if isinstance(e, bern.BNot):
            return ~walk(e.operand)
        if isinstance(e, bern.BAnd):
            return walk(e.left) & walk(e.right)
        if isinstance(e, bern.BOr):
            return walk(e.left) | walk(e.right)
        if isinstance(e, bern.BImp):
            return walk(e.left).implies(walk(e.right))
        if isinstance(e, bern.BIff):
            return walk(e.left).iff(walk(e.right))
        if isinstance(e, bern.Flip):
            if flip_var is None:
                raise ModeError("flip not allowed in this context")
            return bddm.var_bdd(universe, flip_var(e))
        if isinstance(e, bern.Star):
            if star_var is None:
                raise ModeError("* encountered in probabilistic symbolic execution")
            return bddm.var_bdd(universe, star_var(e))
        if isinstance(e, bern.Choose):
            raise ModeError("choose must be desugared before symbolic execution")
        raise TypeError(f"not a BERN expression: {e!r}")

    return walk(expr)


class SymbolicContext:
    """Variable universe for one program: v, v' pairs, then flip variables."""

    def __init__(self, program: bern.BernProgram, backend=None):
        program = bern.desugar_program(program, program.mode or "prob")
        if any(isinstance(e, bern.Star) for e in bern.walk_exprs(program.body)):
            raise ModeError(
                "symbolic inference needs a probabilistic program; "
                "run non-deterministic programs through interp_nondet"
            )
        sites = program.flip_sites()
        for site, theta in sites:
            if isinstance(theta, str):
                raise ModeError(f"flip site {site} has unresolved parameter {theta!r}")
        self.program = program
        specs = []
        for name in program.decls:
            specs.append((name, fm.VarKind.PREDICATE))
            specs.append((name + PRIME_SUFFIX, fm.VarKind.AUX))
        for site, theta in sites:
            specs.append((f"flip#{site}", fm.VarKind.FLIP, Fraction(theta)))
        self.universe = fm.make_universe(specs, backend=backend)
        self.state_vars = {n: self.universe.var(n) for n in program.decls}
        self.primed_vars = {n: self.universe.var(n + PRIME_SUFFIX) for n in program.decls}
        self.flip_vars = {site: self.universe.var(f"flip#{site}") for site, _ in sites}

    def unprimed(self, name):
        return self.state_vars[name]

    def flip_var(self, e: bern.Flip):
        return self.flip_vars[e.site]

    def state_bdd(self, e: bern.BernExpr) -> bddm.Bdd:
        return expr_to_bdd(self.universe, e, self.unprimed, self.flip_var)

    def formula_bdd(self, f: fm.BoolFormula | None) -> bddm.Bdd:
        if f is None:
            return bddm.true_bdd(self.universe)
        return bddm.build(self.universe, f)

    def point_state_bdd(self, state: dict) -> bddm.Bdd:
        acc = bddm.true_bdd(self.universe)
        for name in self.program.decls:
            v = bddm.var_bdd(self.universe, self.state_vars[name])
            acc = acc & (v if state[name] else ~v)
        return acc


@dataclass(frozen=True)
class SymbolicState:
    delta: bddm.Bdd
    point: int


class SymbolicRun:
    def __init__(self, ctx: SymbolicContext, points):
        self.ctx = ctx
        self.points = points  # list of SymbolicState, index = prefix length

    def at(self, point) -> SymbolicState:
        if point in (None, "end"):
            return self.points[-1]
        index = int(point)
        if not 0 <= index < len(self.points):
            raise IndexError(f"no program point {point!r}")
        return self.points[index]

    def survival(self, point="end") -> Fraction:
        return _survival(self.ctx, self.at(point).delta)

    def functional_dependency_ok(self, point="end") -> bool:
        """Each flip assignment in Δ determines exactly one state assignment.

        Holds whenever the initial Δ is a single state; it justifies
        normalizing by the flip-projected mass.
        """
        delta = self.at(point).delta
        preds = list(self.ctx.state_vars.values())
        flips = list(self.ctx.flip_vars.values())
        lhs = delta.count_models(preds + flips)
        rhs = delta.exists(preds).count_models(flips)
        return lhs == rhs


def transfer(ctx: SymbolicContext, state: SymbolicState, stmt) -> SymbolicState:
    return SymbolicState(_transfer_delta(ctx, state.delta, stmt), state.point + 1)


def _transfer_delta(ctx: SymbolicContext, delta, stmt):
    if isinstance(stmt, bern.PAssign):
        if not stmt.targets:
            return delta
        rename_map = {ctx.state_vars[n]: ctx.primed_vars[n] for n in ctx.program.decls}
        moved = delta.rename(rename_map)
        cons = bddm.true_bdd(ctx.universe)
        updates = dict(zip(stmt.targets, stmt.exprs))
        for name in ctx.program.decls:
            v = bddm.var_bdd(ctx.universe, ctx.state_vars[name])
            if name in updates:
                rhs = expr_to_bdd(
                    ctx.universe,
                    updates[name],
                    lambda n: ctx.primed_vars[n],
                    ctx.flip_var,
                )
            else:
                rhs = bddm.var_bdd(ctx.universe, ctx.primed_vars[name])
            cons = cons & v.iff(rhs)
        return (moved & cons).exists(ctx.primed_vars.values())
    if isinstance(stmt, (bern.BObserve, bern.BAssume)):
        return delta & ctx.state_bdd(stmt.cond)
    if isinstance(stmt, bern.BIf):
        guard = ctx.state_bdd(stmt.cond)
        then_out = _run_block(ctx, delta & guard, stmt.then)
        else_out = _run_block(ctx, delta & ~guard, stmt.els)
        return then_out | else_out
    raise TypeError(f"not a statement: {stmt!r}")


def _run_block(ctx, delta, body):
    for stmt in body:
        delta = _transfer_delta(ctx, delta, stmt)
    return delta


def run_symbolic(program: bern.BernProgram, init=None, backend=None) -> SymbolicRun:
    """Δ at every top-level prefix point, starting from `init`.

    `init` may be a BoolFormula over the program variables, a state dict,
    or None for T (callers with a theory in hand pass the predicate
    invariant to exclude infeasible inputs).
    """
    ctx = SymbolicContext(program, backend=backend)
    if init is None:
        delta = bddm.true_bdd(ctx.universe)
    elif isinstance(init, bern.BernExpr):
        delta = ctx.state_bdd(init)
    elif isinstance(init, fm.BoolFormula):
        delta = ctx.formula_bdd(init)
    elif isinstance(init, dict):
        delta = ctx.point_state_bdd(init)
    elif isinstance(init, bddm.Bdd):
        delta = init
    else:
        raise TypeError(f"bad init {init!r}")
    points = [SymbolicState(delta, 0)]
    for stmt in ctx.program.body:
        points.append(transfer(ctx, points[-1], stmt))
    return SymbolicRun(ctx, points)


def _survival(ctx: SymbolicContext, delta) -> Fraction:
    flips_only = delta.exists(
        list(ctx.state_vars.values()) + list(ctx.primed_vars.values())
    )
    weights = {v: v.weights() for v in ctx.flip_vars.values()}
    return flips_only.wmc(weights)


@dataclass(frozen=True)
class QueryResult:
    point: object
    event_text: str
    probability: Fraction
    survival: Fraction

    def to_json(self):
        return {
            "point": self.point,
            "event": self.event_text,
            "numerator": self.probability.numerator,
            "denominator": self.probability.denominator,
            "survival_numerator": self.survival.numerator,
            "survival_denominator": self.survival.denominator,
        }


def query(
    program_or_run,
    event: bern.BernExpr,
    point="end",
    init=None,
    normalized=True,
    backend=None,
) -> QueryResult:
    """Exact marginal of `event` at a program point.

    The marginal is conditioned on observe-survival unless
    ``normalized=False``.  `event` is a plain Boolean expression over the
    program variables.
    """
    if isinstance(program_or_run, SymbolicRun):
        run = program_or_run
    else:
        run = run_symbolic(program_or_run, init=init, backend=backend)
    ctx = run.ctx
    delta = run.at(point).delta
    event_bdd = ctx.state_bdd(event)
    weights = {v: v.weights() for v in ctx.flip_vars.values()}
    for v in ctx.state_vars.values():
        weights[v] = (Fraction(1), Fraction(1))
    mass = (delta & event_bdd).wmc(weights)
    survival = _survival(ctx, delta)
    if not normalized:
        return QueryResult(point, bern.expr_text(event), mass, survival)
    if survival == 0:
        raise ConditionOnImpossibleError("no surviving executions at this point")
    return QueryResult(point, bern.expr_text(event), mass / survival, survival)
