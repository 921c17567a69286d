"""Randomized property suites.

Each suite is an executable statement of one of the core theorems or
engine-equivalence properties, run over seeded random instances.  The
acceptance tests and the `selftest` CLI subcommand both call these.
"""

from __future__ import annotations

import functools
import random
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction

from bernabs import bern
from bernabs import builder as bld
from bernabs import concrete as cc
from bernabs import engine, randgen, theorems, theory
from bernabs.domain import PredicateList
from bernabs.errors import ConditionOnImpossibleError


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    skipped: bool = False

    @property
    def ok(self):
        return not self.failures

    def line(self):
        if self.skipped:
            return f"SKIP {self.name}: {self.failures[0] if self.failures else 'unavailable'}"
        word = "PASS" if self.ok else "FAIL"
        detail = f" ({len(self.failures)} failures)" if self.failures else ""
        return f"{word} {self.name}: {self.cases} cases in {self.seconds:.1f}s{detail}"


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(seed=0, cases=None, **kw):
        t0 = time.monotonic()
        result = fn(seed=seed, **({} if cases is None else {"cases": cases}), **kw)
        result.seconds = time.monotonic() - t0
        return result

    return wrapper


def _pair(rng, max_preds=3):
    """Random (concrete program, predicate list) with a matching context."""
    prog = randgen.rand_concrete_program(rng, draws=False)
    ctx = theory.TheoryContext.of_program(prog)
    preds = PredicateList(randgen.rand_predicates(rng, prog.decls, max_preds), ctx)
    return prog, preds


def _exact_support(aprog, preds, a_in):
    start = theorems._aux_padded(aprog.decls, preds.labels, a_in)
    dist = bern.interp_exact(
        aprog, bern.AbstractDistribution.point(aprog.decls, dict(zip(aprog.decls, start)))
    )
    marg = dist.marginal(preds.labels)
    return {tuple(s[lbl] for lbl in preds.labels) for s, w in marg.items() if w > 0}


def _nondet_reach(aprog_lowered, preds, a_in):
    start = theorems._aux_padded(aprog_lowered.decls, preds.labels, a_in)
    reach = bern.interp_nondet(aprog_lowered, {start})
    return theorems._project(reach, aprog_lowered.decls, preds.labels)


@_timed
def suite_theorem1(seed=0, cases=200):
    """Probabilistic soundness holds iff non-deterministic soundness of the
    lowered program holds, with identical per-input verdicts."""
    rng = random.Random(seed)
    result = SuiteResult("theorem-1 lowering equivalence", cases)
    for case in range(cases):
        prog, preds = _pair(rng)
        aprog = randgen.rand_bern_program(
            rng, preds.labels, max_flips=5, max_stmts=6, degenerate_share=0.15
        )
        lowered = theorems.lower(aprog)
        support_memo = {}
        reach_memo = {}
        for key in preds.ctx.states():
            z = dict(zip(preds.ctx.names, key))
            out = cc.eval_det(prog, z)
            if out is cc.BLOCKED:
                continue
            a_in, a_out = preds.alpha(z), preds.alpha(out)
            if a_in not in support_memo:
                support_memo[a_in] = _exact_support(aprog, preds, a_in)
                reach_memo[a_in] = _nondet_reach(lowered, preds, a_in)
            prob_ok = a_out in support_memo[a_in]
            nondet_ok = a_out in reach_memo[a_in]
            if prob_ok != nondet_ok:
                result.failures.append(
                    f"case {case}: z={z} prob={prob_ok} nondet={nondet_ok}"
                )
                break
    return result


@_timed
def suite_theorem2(seed=0, cases=100):
    """Abstract-event marginals of the concrete semantics equal the abstract
    distribution for every strongly confined gamma family, exactly."""
    rng = random.Random(seed)
    result = SuiteResult("theorem-2 concretization invariance", cases)
    for case in range(cases):
        prog, preds = _pair(rng, max_preds=2)
        aprog = randgen.rand_bern_program(
            rng, preds.labels, max_flips=3, max_stmts=4, degenerate_share=0.1
        )
        gammas = [g(preds) for g in theorems.GAMMA_FAMILIES]
        inputs = [dict(zip(preds.ctx.names, key)) for key in preds.ctx.states()]
        rng.shuffle(inputs)
        report = theorems.check_invariance(aprog, preds, gammas, inputs=inputs[:6])
        if not report.ok:
            result.failures.append(f"case {case}: {report.counterexamples[0]}")
    return result


@_timed
def suite_engine_equivalence(seed=0, cases=200):
    """Symbolic queries equal the flip-enumeration interpreter at every
    top-level program point, as exact rationals."""
    rng = random.Random(seed)
    result = SuiteResult("symbolic engine vs exact interpreter", cases)
    for case in range(cases):
        names = tuple(f"v{i}" for i in range(rng.randint(1, 3)))
        aprog = randgen.rand_bern_program(rng, names, max_flips=6, max_stmts=6)
        inits = [tuple(rng.random() < 0.5 for _ in names) for _ in range(2)]
        for init_bits in inits:
            init = dict(zip(names, init_bits))
            run = engine.run_symbolic(aprog, init=init)
            for k in range(len(aprog.body) + 1):
                prefix = bern.BernProgram(names, aprog.body[:k], "prob")
                ref = bern.interp_exact(
                    prefix, bern.AbstractDistribution.point(names, init)
                )
                sym_survival = run.survival(k)
                if sym_survival != ref.survival:
                    result.failures.append(
                        f"case {case}: survival at {k}: {sym_survival} vs {ref.survival}"
                    )
                    break
                if ref.survival == 0:
                    continue
                for name in names:
                    got = engine.query(run, bern.BVar(name), point=k).probability
                    want = ref.prob(lambda s, n=name: s[n]) / ref.survival
                    if got != want:
                        result.failures.append(
                            f"case {case}: Pr({name}) at {k}: {got} vs {want}"
                        )
                        break
    return result


@_timed
def suite_invariant_styles(seed=0, cases=100):
    """Observe-style and structural abstractions of one assignment have the
    same lowered support from every feasible initial abstract state."""
    rng = random.Random(seed)
    result = SuiteResult("observe vs structural invariant styles", cases)
    for case in range(cases):
        decls = randgen.rand_decls(rng)
        ctx = theory.TheoryContext(decls)
        preds = PredicateList(randgen.rand_predicates(rng, decls, 3), ctx)
        if rng.random() < 0.3:
            stmt = randgen.rand_draw(rng, decls)
        else:
            stmt = randgen.rand_safe_assign(rng, decls)
        prog = cc.ConcreteProgram(decls, (stmt,))
        fixed = bld.ParamPolicy.fixed(Fraction(1, 2))
        obs, _ = bld.abstract_program(
            prog, preds, bld.AbstractionConfig("prob", "observe", fixed)
        )
        struct, _ = bld.abstract_program(
            prog, preds, bld.AbstractionConfig("prob", "structural", fixed)
        )
        lo_obs, lo_struct = theorems.lower(obs), theorems.lower(struct)
        for m in preds.feasible_minterms():
            a = _nondet_reach(lo_obs, preds, m.bits)
            b = _nondet_reach(lo_struct, preds, m.bits)
            if a != b:
                result.failures.append(
                    f"case {case}: from {m.bits}: observe {sorted(a)} vs structural {sorted(b)}"
                )
                break
    return result


@_timed
def suite_generated_soundness(seed=0, cases=100):
    """Generated probabilistic abstractions with theta = 1/2 are sound for
    their concrete programs (no violations over the whole domain)."""
    rng = random.Random(seed)
    result = SuiteResult("soundness of generated abstractions", cases)
    styles = ("observe", "structural", "none")
    for case in range(cases):
        prog, preds = _pair(rng)
        style = styles[case % len(styles)]
        cfg = bld.AbstractionConfig("prob", style, bld.ParamPolicy.fixed(Fraction(1, 2)))
        aprog, _ = bld.abstract_program(prog, preds, cfg)
        report = theorems.check_sound_prob(prog, aprog, preds, direct="sample")
        if not report.ok:
            result.failures.append(
                f"case {case} [{style}]: {report.counterexamples[0]}"
            )
    return result


@_timed
def suite_oracle_crosscheck(seed=0, cases=500):
    """Theory-oracle verdicts match an independent truth-table evaluator."""
    rng = random.Random(seed)
    result = SuiteResult("theory oracle vs truth-table evaluation", cases)

    def naive_int(e, env):
        if isinstance(e, cc.IntConst):
            return e.value
        if isinstance(e, cc.IntVar):
            return env[e.name]
        if isinstance(e, cc.Add):
            return naive_int(e.left, env) + naive_int(e.right, env)
        if isinstance(e, cc.Sub):
            return naive_int(e.left, env) - naive_int(e.right, env)
        if isinstance(e, cc.Scale):
            return e.coeff * naive_int(e.operand, env)
        raise AssertionError(e)

    def naive_cond(c, env):
        if isinstance(c, cc.CTrue):
            return True
        if isinstance(c, cc.CFalse):
            return False
        if isinstance(c, cc.Cmp):
            import operator

            ops = {
                "<": operator.lt,
                "<=": operator.le,
                "==": operator.eq,
                "!=": operator.ne,
                ">": operator.gt,
                ">=": operator.ge,
            }
            return ops[c.op](naive_int(c.left, env), naive_int(c.right, env))
        if isinstance(c, cc.CNot):
            return not naive_cond(c.operand, env)
        if isinstance(c, cc.CAnd):
            return naive_cond(c.left, env) and naive_cond(c.right, env)
        return naive_cond(c.left, env) or naive_cond(c.right, env)

    for case in range(cases):
        decls = randgen.rand_decls(rng, max_vars=3, max_range=6)
        ctx = theory.TheoryContext(decls)
        a = randgen.rand_cond(rng, decls, depth=2)
        b = randgen.rand_cond(rng, decls, depth=2)
        naive = all(
            naive_cond(b, dict(zip(ctx.names, key)))
            for key in ctx.states()
            if naive_cond(a, dict(zip(ctx.names, key)))
        )
        if ctx.entails(a, b) != naive:
            result.failures.append(f"case {case}: entails({a}, {b})")
        if ctx.satisfiable(a) != any(
            naive_cond(a, dict(zip(ctx.names, key))) for key in ctx.states()
        ):
            result.failures.append(f"case {case}: satisfiable({a})")
    return result


def find_smt_solver():
    for name in ("z3", "cvc5"):
        path = shutil.which(name)
        if path:
            return name, path
    return None, None


@_timed
def suite_smt_crosscheck(seed=0, cases=20):
    """External solver agreement on emitted SMT-LIB2 scripts (skips when no
    solver is installed)."""
    rng = random.Random(seed)
    result = SuiteResult("SMT-LIB2 export vs external solver", cases)
    name, path = find_smt_solver()
    if path is None:
        result.skipped = True
        result.failures = []
        return result
    for case in range(cases):
        decls = randgen.rand_decls(rng, max_vars=2, max_range=6)
        ctx = theory.TheoryContext(decls)
        a = randgen.rand_cond(rng, decls, depth=1)
        b = randgen.rand_cond(rng, decls, depth=1)
        script = theory.emit_smtlib(ctx, "entails", a, b)
        proc = subprocess.run(
            [path, "-"] if name == "z3" else [path, "--lang=smt2"],
            input=script.encode(),
            capture_output=True,
            timeout=30,
        )
        verdict = proc.stdout.decode().strip().splitlines()[-1]
        expected = "unsat" if ctx.entails(a, b) else "sat"
        if verdict != expected:
            result.failures.append(f"case {case}: solver said {verdict}, oracle {expected}")
    return result


ALL_SUITES = (
    suite_theorem1,
    suite_theorem2,
    suite_engine_equivalence,
    suite_invariant_styles,
    suite_generated_soundness,
    suite_oracle_crosscheck,
    suite_smt_crosscheck,
)


def run_all(seed=0, scale=1.0, emit=print):
    results = []
    for suite in ALL_SUITES:
        cases = max(1, int(_default_cases(suite) * scale))
        result = suite(seed=seed, cases=cases)
        results.append(result)
        emit(result.line())
    return results


def _default_cases(suite):
    defaults = {
        "suite_theorem1": 200,
        "suite_theorem2": 100,
        "suite_engine_equivalence": 200,
        "suite_invariant_styles": 100,
        "suite_generated_soundness": 100,
        "suite_oracle_crosscheck": 500,
        "suite_smt_crosscheck": 20,
    }
    return defaults[suite.__name__]
