"""Executable soundness, lowering, invariance, and parameter fitting.

The checks here connect the three semantics: concrete execution, the
non-deterministic Boolean program, and the probabilistic one.  Lowering
turns flips into unconstrained choices (supports only); soundness checks
sweep the whole bounded concrete domain; invariance checks verify that
abstract-event probabilities do not depend on the concretization
distribution.  Parameter fitting evaluates each flip's conditional
probability on a fragment of the concrete program, which is the step that
reproduces hand-computed abstraction parameters exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction

from bernabs import bern
from bernabs import builder as bld
from bernabs import concrete as cc
from bernabs import engine
from bernabs import formula as fm
from bernabs.domain import PredicateList
from bernabs.errors import ModeError
from bernabs.theory import wp_subst


# --- lowering -----------------------------------------------------------------


def lower(program: bern.BernProgram) -> bern.BernProgram:
    """Non-deterministic shadow of a probabilistic program.

    flip(theta) with 0 < theta < 1 becomes *; the degenerate parameters 1
    and 0 become the constants T and F; observe becomes assume.
    """
    program = bern.desugar_program(program, program.mode or "prob")
    counter = itertools.count()

    def on_expr(e):
        if isinstance(e, bern.Flip):
            if isinstance(e.theta, str):
                raise ModeError(f"flip site {e.site} has unresolved parameter {e.theta!r}")
            if e.theta == 1:
                return bern.BTrue()
            if e.theta == 0:
                return bern.BFalse()
            return bern.Star(next(counter))
        if isinstance(e, bern.BNot):
            return bern.BNot(on_expr(e.operand))
        if isinstance(e, (bern.BAnd, bern.BOr, bern.BImp, bern.BIff)):
            return type(e)(on_expr(e.left), on_expr(e.right))
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
            elif isinstance(stmt, (bern.BObserve, bern.BAssume)):
                out.append(bern.BAssume(on_expr(stmt.cond), stmt.loc))
        return tuple(out)

    return bern.BernProgram(program.decls, walk(program.body), "nondet")


# --- reports -------------------------------------------------------------------


@dataclass
class CheckReport:
    check: str
    counterexamples: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.counterexamples

    @property
    def status(self):
        return "pass" if self.ok else "fail"

    def to_json(self):
        return {
            "check": self.check,
            "status": self.status,
            "counterexamples": self.counterexamples,
            "stats": self.stats,
        }


def _aux_padded(decls, pred_labels, bits):
    """Total state over all declared variables; auxiliaries start False."""
    by_label = dict(zip(pred_labels, bits))
    return tuple(bool(by_label.get(name, False)) for name in decls)


def _project(states, decls, pred_labels):
    idx = [decls.index(lbl) for lbl in pred_labels]
    return {tuple(s[i] for i in idx) for s in states}


def _state_json(state):
    return {k: v for k, v in sorted(state.items())}


def _bits_json(pred_labels, bits):
    return {lbl: bool(b) for lbl, b in zip(pred_labels, bits)}


# --- soundness -----------------------------------------------------------------


def check_sound_nondet(
    cprog: cc.ConcreteProgram,
    aprog: bern.BernProgram,
    preds: PredicateList,
    inputs=None,
) -> CheckReport:
    """Def-style sweep: alpha(C(z)) must be reachable from {alpha(z)}.

    `inputs` restricts the sweep (dicts); default is the whole bounded
    domain.  Inputs whose concrete run blocks on an observe impose no
    requirement and are counted separately.
    """
    if not cprog.is_deterministic():
        raise ValueError("soundness sweeps need a draw-free concrete program")
    report = CheckReport("sound-nondet")
    reach_memo = {}
    checked = blocked = 0
    if inputs is None:
        inputs = (dict(zip(preds.ctx.names, key)) for key in preds.ctx.states())
    for z in inputs:
        out = cc.eval_det(cprog, z)
        if out is cc.BLOCKED:
            blocked += 1
            continue
        checked += 1
        a_in = preds.alpha(z)
        hit = reach_memo.get(a_in)
        if hit is None:
            start = _aux_padded(aprog.decls, preds.labels, a_in)
            hit = _project(interp_nondet_states(aprog, {start}), aprog.decls, preds.labels)
            reach_memo[a_in] = hit
        a_out = preds.alpha(out)
        if a_out not in hit:
            report.counterexamples.append(
                {
                    "z": _state_json(z),
                    "expected": _bits_json(preds.labels, a_out),
                    "got": sorted(
                        str(_bits_json(preds.labels, b)) for b in hit
                    ),
                }
            )
    report.stats = {"checked": checked, "blocked": blocked, "abstract_inputs": len(reach_memo)}
    return report


def interp_nondet_states(aprog, starts):
    return bern.interp_nondet(aprog, starts)


def check_sound_prob(
    cprog: cc.ConcreteProgram,
    aprog: bern.BernProgram,
    preds: PredicateList,
    inputs=None,
    direct="sample",
) -> CheckReport:
    """Probabilistic soundness: Pr at alpha(C(z)) from alpha(z) is positive.

    Decided through the lowered program (the lowering theorem makes the
    verdicts coincide); `direct` adds positive-probability checks through
    the exact interpreter on every distinct abstract input ("all"), a
    handful of them ("sample"), or not at all (None).
    """
    lowered = lower(aprog)
    report = check_sound_nondet(cprog, lowered, preds, inputs=inputs)
    report.check = "sound-prob"
    if direct:
        budget = None if direct == "all" else 8
        # enumeration over flip assignments is exponential in the site
        # count; larger programs get their positive-mass check from the
        # symbolic engine instead
        use_engine = len(aprog.flip_sites()) > 12
        seen = {}
        dist_memo = {}
        run_memo = {}
        if inputs is None:
            inputs = (dict(zip(preds.ctx.names, key)) for key in preds.ctx.states())
        for z in inputs:
            out = cc.eval_det(cprog, z)
            if out is cc.BLOCKED:
                continue
            a_in = preds.alpha(z)
            a_out = preds.alpha(out)
            if (a_in, a_out) in seen:
                continue
            if budget is not None and len(seen) >= budget:
                break
            seen[(a_in, a_out)] = True
            start = dict(zip(aprog.decls, _aux_padded(aprog.decls, preds.labels, a_in)))
            if use_engine:
                if a_in not in run_memo:
                    run_memo[a_in] = engine.run_symbolic(aprog, init=start)
                event = _cube_expr(preds.labels, a_out)
                mass = engine.query(
                    run_memo[a_in], event, point="end", normalized=False
                ).probability
            else:
                if a_in not in dist_memo:
                    dist_memo[a_in] = bern.interp_exact(
                        aprog, bern.AbstractDistribution.point(aprog.decls, start)
                    ).marginal(preds.labels)
                mass = dist_memo[a_in].mass_of(dict(zip(preds.labels, a_out)))
            if mass <= 0:
                report.counterexamples.append(
                    {
                        "z": _state_json(z),
                        "expected": _bits_json(preds.labels, a_out),
                        "got": "zero probability in exact interpretation",
                    }
                )
        report.stats["direct_checks"] = len(seen)
    return report


def _cube_expr(labels, bits) -> bern.BernExpr:
    expr = None
    for lbl, bit in zip(labels, bits):
        lit = bern.BVar(lbl) if bit else bern.BNot(bern.BVar(lbl))
        expr = lit if expr is None else bern.BAnd(expr, lit)
    return expr if expr is not None else bern.BTrue()


# --- concretization distributions ------------------------------------------------


class ConcretizationDistribution:
    """Per-abstract-state distribution over that state's concrete cell."""

    def __init__(self, name, rows, var_names):
        self.name = name
        self.rows = rows  # bits -> {state key tuple -> Fraction}
        self.var_names = tuple(var_names)

    @classmethod
    def _build(cls, name, preds: PredicateList, weigher):
        rows = {}
        for m in preds.feasible_minterms():
            cell = preds.gamma_lower(m.bits)
            keys = [tuple(z[n] for n in preds.ctx.names) for z in cell]
            keys.sort()
            weights = weigher(keys)
            total = sum(weights, Fraction(0))
            rows[m.bits] = {
                k: w / total for k, w in zip(keys, weights) if w > 0
            }
        return cls(name, rows, preds.ctx.names)

    @classmethod
    def uniform(cls, preds):
        return cls._build("uniform", preds, lambda keys: [Fraction(1)] * len(keys))

    @classmethod
    def rank_weighted(cls, preds):
        return cls._build(
            "rank-weighted", preds, lambda keys: [Fraction(i + 1) for i in range(len(keys))]
        )

    @classmethod
    def point_mass_min(cls, preds):
        return cls._build(
            "point-mass-min",
            preds,
            lambda keys: [Fraction(1)] + [Fraction(0)] * (len(keys) - 1),
        )

    def row(self, bits):
        return self.rows.get(tuple(bits), {})

    def support(self, bits):
        return set(self.row(bits))

    def validate_strong(self, preds: PredicateList):
        """Row-normalized and confined to the matching cell (the two
        properties the invariance theorem actually uses)."""
        for bits, row in self.rows.items():
            total = sum(row.values(), Fraction(0))
            if total != 1:
                raise ValueError(f"{self.name}: row {bits} sums to {total}, not 1")
            for key in row:
                state = dict(zip(self.var_names, key))
                if preds.alpha(state) != bits:
                    raise ValueError(
                        f"{self.name}: mass on {state} outside the cell of {bits}"
                    )

    def is_compatible(self, preds: PredicateList) -> bool:
        """Def-8 compatibility: every concrete state has positive mass in
        its own cell (fails for point-mass rows over multi-state cells)."""
        for key in preds.ctx.states():
            state = dict(zip(self.var_names, key))
            bits = preds.alpha(state)
            if self.row(bits).get(key, Fraction(0)) <= 0:
                return False
        return True


GAMMA_FAMILIES = (
    ConcretizationDistribution.uniform,
    ConcretizationDistribution.rank_weighted,
    ConcretizationDistribution.point_mass_min,
)


def abstract_output_distribution(aprog, preds, a_in_bits) -> bern.AbstractDistribution:
    """Pr_A(. | a_in): unnormalized transition distribution (observe losses
    shrink the total mass), marginalized onto the predicate variables."""
    start = _aux_padded(aprog.decls, preds.labels, a_in_bits)
    dist = bern.interp_exact(
        aprog, bern.AbstractDistribution.point(aprog.decls, dict(zip(aprog.decls, start)))
    )
    return dist.marginal(preds.labels)


def concrete_semantics(
    aprog,
    preds: PredicateList,
    gamma: ConcretizationDistribution,
    z_i: dict,
    collapse=True,
    pr_a=None,
):
    """Pr over concrete outputs from z_i: sum over abstract outputs of
    Pr_gamma(z_o | a_o) * Pr_A(a_o | alpha(z_i)).

    With a strongly compatible gamma the inner sum has one nonzero term
    per z_o; `collapse=False` computes the full sum anyway (used to verify
    exactly that).
    """
    gamma.validate_strong(preds)
    if pr_a is None:
        pr_a = abstract_output_distribution(aprog, preds, preds.alpha(z_i))
    out = {}
    for a_state, p in pr_a.items():
        bits = tuple(a_state[lbl] for lbl in preds.labels)
        for key, q in gamma.row(bits).items():
            out[key] = out.get(key, Fraction(0)) + q * p
    if not collapse:
        # full double sum: every (z_o, a_o) pair, zero terms included
        full = {}
        for a_state, p in pr_a.items():
            bits = tuple(a_state[lbl] for lbl in preds.labels)
            row = gamma.row(bits)
            for key in {k for r in gamma.rows.values() for k in r}:
                full[key] = full.get(key, Fraction(0)) + row.get(key, Fraction(0)) * p
        out = {k: v for k, v in full.items() if v > 0}
    return cc.ConcreteDistribution(preds.ctx.names, out)


def check_invariance(
    aprog, preds: PredicateList, gammas, inputs=None, outputs=None
) -> CheckReport:
    """Concretization invariance: for every input state and abstract event,
    the concrete mass of the event's cell equals the abstract probability,
    for every supplied gamma.  Exact equality."""
    report = CheckReport("invariance")
    if inputs is None:
        inputs = [dict(zip(preds.ctx.names, key)) for key in preds.ctx.states()]
    pairs = 0
    pr_a_memo = {}
    for gamma in gammas:
        gamma.validate_strong(preds)
        for z_i in inputs:
            a_in = preds.alpha(z_i)
            if a_in not in pr_a_memo:
                pr_a_memo[a_in] = abstract_output_distribution(aprog, preds, a_in)
            pr_a = pr_a_memo[a_in]
            dist = concrete_semantics(aprog, preds, gamma, z_i, pr_a=pr_a)
            outs = outputs if outputs is not None else [m.bits for m in preds.feasible_minterms()]
            for a_o in outs:
                pairs += 1
                lhs = Fraction(0)
                for key in gamma.support(a_o):
                    lhs += dist.mass_of(dict(zip(preds.ctx.names, key)))
                rhs = pr_a.mass_of(dict(zip(preds.labels, a_o)))
                if lhs != rhs:
                    report.counterexamples.append(
                        {
                            "gamma": gamma.name,
                            "z_i": _state_json(z_i),
                            "a_o": _bits_json(preds.labels, a_o),
                            "expected": str(rhs),
                            "got": str(lhs),
                        }
                    )
    report.stats = {"gammas": len(list(gammas)), "pairs": pairs}
    return report


# --- parameter fitting ------------------------------------------------------------


def locate(body, path):
    """(prefix statements on the path, the statement at the path)."""
    prefix = []
    cur = body
    stmt = None
    it = iter(path)
    for part in it:
        if isinstance(part, int):
            prefix.extend(cur[:part])
            stmt = cur[part]
        else:
            cur = stmt.then if part == "then" else stmt.els
    return prefix, stmt


def _reads_writes(body):
    """(vars possibly read before written, vars definitely written)."""
    rbw = set()
    dw = set()
    for stmt in body:
        if isinstance(stmt, cc.Assign):
            rbw |= cc.expr_vars(stmt.expr) - dw
            dw.add(stmt.name)
        elif isinstance(stmt, cc.Draw):
            dw.add(stmt.name)
        elif isinstance(stmt, cc.Observe):
            rbw |= cc.cond_vars(stmt.cond) - dw
        elif isinstance(stmt, cc.If):
            rbw |= cc.cond_vars(stmt.cond) - dw
            r1, w1 = _reads_writes(stmt.then)
            r2, w2 = _reads_writes(stmt.els)
            rbw |= (r1 | r2) - dw
            dw |= w1 & w2
    return rbw, dw


def _seeded_joint(program, uniform_vars) -> cc.ConcreteDistribution:
    """Uniform over `uniform_vars`, point mass at the range minimum for the
    rest (sound whenever the other initial values cannot be observed)."""
    import itertools as _it

    axes = []
    weight = Fraction(1)
    for d in program.decls:
        if d.name in uniform_vars:
            axes.append(range(d.lo, d.hi))
            weight /= d.size
        else:
            axes.append((d.lo,))
    mass = {key: weight for key in _it.product(*axes)}
    return cc.ConcreteDistribution(program.var_names, mass)


def _fragment_base(cprog, prefix, stmt, site, preds) -> cc.ConcreteDistribution:
    """Fragment output distribution with a minimal initial joint: only
    variables whose initial value can reach a downstream read get a
    uniform prior."""
    rbw, dw = _reads_writes(prefix)
    downstream = cc.cond_vars(_context_cond(site, preds))
    if site.role == "branch":
        downstream |= cc.cond_vars(site.meta["guard"])
        downstream |= cc.cond_vars(_concretize(site.meta["alpha"], preds))
        downstream |= cc.cond_vars(_concretize(site.meta["beta"], preds))
    elif site.role == "assign":
        downstream |= cc.cond_vars(_concretize(site.meta["t"], preds))
        downstream |= cc.cond_vars(_concretize(site.meta["f"], preds))
        downstream |= cc.cond_vars(
            wp_subst(stmt.name, stmt.expr, preds.cond_of(site.predicate))
        )
    elif site.role == "draw":
        downstream |= cc.cond_vars(preds.cond_of(site.predicate)) - {stmt.name}
    else:  # structural reads every predicate at both pre and post state
        for cond in preds.conds:
            downstream |= cc.cond_vars(cond)
        if isinstance(stmt, cc.Assign):
            downstream |= cc.expr_vars(stmt.expr)
    uniform_vars = rbw | (downstream - dw)
    fragment = cc.ConcreteProgram(cprog.decls, tuple(prefix))
    return cc.eval_dist(fragment, _seeded_joint(fragment, uniform_vars))


def _concretize(f: fm.BoolFormula, preds: PredicateList) -> cc.Cond:
    if isinstance(f, fm.TrueF):
        return cc.CTrue()
    if isinstance(f, fm.FalseF):
        return cc.CFalse()
    if isinstance(f, fm.Ref):
        return preds.cond_of(f.var.label)
    if isinstance(f, fm.Not):
        return cc.CNot(_concretize(f.operand, preds))
    if isinstance(f, fm.And):
        return cc.CAnd(_concretize(f.left, preds), _concretize(f.right, preds))
    if isinstance(f, fm.Or):
        return cc.COr(_concretize(f.left, preds), _concretize(f.right, preds))
    if isinstance(f, fm.Implies):
        return cc.COr(cc.CNot(_concretize(f.left, preds)), _concretize(f.right, preds))
    if isinstance(f, fm.Iff):
        a, b = _concretize(f.left, preds), _concretize(f.right, preds)
        return cc.COr(cc.CAnd(a, b), cc.CAnd(cc.CNot(a), cc.CNot(b)))
    raise TypeError(f"not a formula: {f!r}")


def _context_cond(site, preds) -> cc.Cond:
    lits = [
        preds.cond_of(lbl) if pol else cc.CNot(preds.cond_of(lbl))
        for lbl, pol in site.context
    ]
    return cc.cond_and_all(lits)


def _structural_free_mass(site, preds, base: cc.ConcreteDistribution, stmt):
    """(mass where the flip decides, mass where it decides True)."""
    pred_idx = preds.labels.index(site.predicate)
    must_true = site.meta["must_true"]
    must_false = site.meta["must_false"]

    def formula_holds(f, pre_bits, post_bits):
        assignment = {}
        for v in fm.formula_vars(f):
            kind, _, lbl = v.label.partition(" ")
            i = preds.labels.index(lbl)
            assignment[v] = pre_bits[i] if kind == "pre" else post_bits[i]
        return fm.eval_formula(f, assignment)

    denom = num = Fraction(0)
    for z, w in base.items():
        pre_bits = preds.alpha(z)
        if isinstance(stmt, cc.Assign):
            value = cc.eval_int(stmt.expr, z)
            outcomes = [(value, Fraction(1))]
        else:
            share = Fraction(1, stmt.hi - stmt.lo)
            outcomes = [(v, share) for v in range(stmt.lo, stmt.hi)]
        for value, q in outcomes:
            post = dict(z)
            post[stmt.name] = value
            post_bits = preds.alpha(post)
            if formula_holds(must_true, pre_bits, post_bits):
                continue
            if formula_holds(must_false, pre_bits, post_bits):
                continue
            denom += w * q
            if post_bits[pred_idx]:
                num += w * q
    return denom, num


def fit_parameters(
    cprog: cc.ConcreteProgram,
    aprog: bern.BernProgram,
    sites: bld.FlipSiteTable,
    preds: PredicateList,
):
    """Evaluate each flip parameter on the matching concrete fragment.

    Each site's fragment is the statement path leading to it; the fragment
    runs from the uniform joint distribution and is conditioned on the
    predicate literals known at the site.  Sites whose conditioning event
    has zero mass keep theta = 1/2 and are flagged.

    Returns (program with parameters substituted, updated site table).
    """
    fitted = []
    theta_map = {}
    for site in sites:
        prefix, stmt = locate(cprog.body, site.path)
        base = _fragment_base(cprog, prefix, stmt, site, preds)
        base = base.filtered(_context_cond(site, preds))
        theta = None
        flagged = False
        if site.role == "branch":
            both = cc.CAnd(
                _concretize(site.meta["alpha"], preds),
                _concretize(site.meta["beta"], preds),
            )
            scoped = base.filtered(both)
            denom = scoped.survival
            if denom == 0:
                flagged = True
            else:
                theta = scoped.filtered(site.meta["guard"]).survival / denom
        elif site.role == "assign":
            free = cc.CAnd(
                cc.CNot(_concretize(site.meta["t"], preds)),
                cc.CNot(_concretize(site.meta["f"], preds)),
            )
            scoped = base.filtered(free)
            denom = scoped.survival
            if denom == 0:
                flagged = True
            else:
                post_true = wp_subst(stmt.name, stmt.expr, preds.cond_of(site.predicate))
                theta = scoped.filtered(post_true).survival / denom
        elif site.role == "draw":
            denom = base.survival
            if denom == 0:
                flagged = True
            else:
                pushed = cc.eval_dist(cc.ConcreteProgram(cprog.decls, (stmt,)), base)
                hit = Fraction(0)
                p = preds.cond_of(site.predicate)
                for z, w in pushed.items():
                    if cc.eval_cond(p, z):
                        hit += w
                theta = hit / denom
        elif site.role == "structural":
            denom, num = _structural_free_mass(site, preds, base, stmt)
            if denom == 0:
                flagged = True
            else:
                theta = num / denom
        else:
            raise ValueError(f"unknown site role {site.role!r}")
        if flagged:
            theta = Fraction(1, 2)
        theta_map[site.site] = theta
        fitted.append(replace(site, theta=theta, flagged=flagged))
    resolved = bld.resolve_parameters(aprog, theta_map)
    return resolved, bld.FlipSiteTable(fitted)


def end_to_end_decomposed_query(
    cprog: cc.ConcreteProgram,
    preds: PredicateList,
    event: bern.BernExpr,
    config: bld.AbstractionConfig | None = None,
) -> Fraction:
    """Abstract, fit the parameters, and query the abstraction."""
    if config is None:
        config = bld.AbstractionConfig(
            mode="prob", invariant_style="observe", params=bld.ParamPolicy.fit()
        )
    aprog, sites = bld.abstract_program(cprog, preds, config)
    resolved, _ = fit_parameters(cprog, aprog, sites, preds)
    init = bld.formula_to_expr(preds.invariant_formula())
    return engine.query(resolved, event, init=init).probability
