"""BERN: the Boolean target language with Bernoulli flips.

One language serves two modes.  Probabilistic programs use ``flip(theta)``
and ``observe``; the non-deterministic Boolean-program mode replaces flips
by the unconstrained choice ``*`` and filters with ``assume``.  A program
never mixes ``flip`` and ``*``.  ``observe`` and ``assume`` filter
executions identically; they stay distinct node kinds because abstraction
reporting distinguishes branch information from invariant conditioning.

The exact interpreter here is the reference oracle: it enumerates total
assignments to the flip sites and runs the program deterministically for
each, so smarter engines can be checked against it.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

from bernabs.errors import EnumerationCapError, ModeError

DEFAULT_FLIP_CAP = 24


# --- expressions -----------------------------------------------------------


class BernExpr:
    __slots__ = ()


@dataclass(frozen=True)
class BTrue(BernExpr):
    pass


@dataclass(frozen=True)
class BFalse(BernExpr):
    pass


@dataclass(frozen=True)
class BVar(BernExpr):
    name: str


@dataclass(frozen=True)
class BNot(BernExpr):
    operand: BernExpr


@dataclass(frozen=True)
class BAnd(BernExpr):
    left: BernExpr
    right: BernExpr


@dataclass(frozen=True)
class BOr(BernExpr):
    left: BernExpr
    right: BernExpr


@dataclass(frozen=True)
class BImp(BernExpr):
    left: BernExpr
    right: BernExpr


@dataclass(frozen=True)
class BIff(BernExpr):
    left: BernExpr
    right: BernExpr


@dataclass(frozen=True)
class Flip(BernExpr):
    site: int
    theta: object  # Fraction, or str for a symbolic parameter

    def __post_init__(self):
        if isinstance(self.theta, Fraction) and not 0 <= self.theta <= 1:
            raise ModeError(f"flip parameter {self.theta} outside [0, 1]")


@dataclass(frozen=True)
class Star(BernExpr):
    occurrence: int


@dataclass(frozen=True)
class Choose(BernExpr):
    when_true: BernExpr
    when_false: BernExpr


# --- statements --------------------------------------------------------------


class BernStmt:
    __slots__ = ()


@dataclass(frozen=True)
class PAssign(BernStmt):
    targets: tuple
    exprs: tuple
    loc: int = field(default=0, compare=False)

    def __post_init__(self):
        if len(self.targets) != len(self.exprs):
            raise ValueError("parallel assignment arity mismatch")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("parallel assignment targets must be distinct")


@dataclass(frozen=True)
class BIf(BernStmt):
    cond: BernExpr
    then: tuple
    els: tuple
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BObserve(BernStmt):
    cond: BernExpr
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BAssume(BernStmt):
    cond: BernExpr
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BernProgram:
    decls: tuple  # variable names, in declaration order
    body: tuple
    mode: str | None = None  # 'prob' | 'nondet' | None (no flips and no stars)

    def __post_init__(self):
        if len(set(self.decls)) != len(self.decls):
            raise ValueError("duplicate Boolean variable declaration")
        declared = set(self.decls)
        flips = {}
        stars = set()
        for e in walk_exprs(self.body):
            if isinstance(e, BVar) and e.name not in declared:
                raise ValueError(f"undeclared variable {e.name!r}")
            if isinstance(e, Flip):
                if e.site in flips:
                    raise ValueError(f"duplicate flip site id {e.site}")
                flips[e.site] = e.theta
            if isinstance(e, Star):
                if e.occurrence in stars:
                    raise ValueError(f"duplicate star occurrence id {e.occurrence}")
                stars.add(e.occurrence)
        for s in walk_stmts(self.body):
            if isinstance(s, PAssign):
                for t in s.targets:
                    if t not in declared:
                        raise ValueError(f"undeclared variable {t!r}")
        if flips and stars:
            raise ModeError("flip and * cannot appear in one program")
        if self.mode == "prob" and stars:
            raise ModeError("* is not allowed in probabilistic mode")
        if self.mode == "nondet" and flips:
            raise ModeError("flip is not allowed in non-deterministic mode")

    def flip_sites(self):
        """(site id, theta) pairs in traversal order."""
        return [(e.site, e.theta) for e in walk_exprs(self.body) if isinstance(e, Flip)]

    def has_symbolic_params(self):
        return any(isinstance(theta, str) for _, theta in self.flip_sites())


def walk_stmts(body):
    for stmt in body:
        yield stmt
        if isinstance(stmt, BIf):
            yield from walk_stmts(stmt.then)
            yield from walk_stmts(stmt.els)


def walk_exprs(body):
    def sub(e):
        yield e
        if isinstance(e, BNot):
            yield from sub(e.operand)
        elif isinstance(e, (BAnd, BOr, BImp, BIff)):
            yield from sub(e.left)
            yield from sub(e.right)
        elif isinstance(e, Choose):
            yield from sub(e.when_true)
            yield from sub(e.when_false)

    for stmt in walk_stmts(body):
        if isinstance(stmt, PAssign):
            for e in stmt.exprs:
                yield from sub(e)
        elif isinstance(stmt, (BIf, BObserve, BAssume)):
            yield from sub(stmt.cond)


# --- choose desugaring --------------------------------------------------------


def desugar_choose(expr: Choose, mode: str, alloc) -> BernExpr:
    """choose(a, b)  ->  a || (!b && <fresh>).

    The fresh leaf is ``*`` in non-deterministic mode and a flip with a new
    site parameter in probabilistic mode; ``alloc()`` supplies it.
    """
    if mode not in ("prob", "nondet"):
        raise ModeError("choose needs a resolved program mode to desugar")
    return BOr(expr.when_true, BAnd(BNot(expr.when_false), alloc()))


def desugar_program(program: BernProgram, mode=None) -> BernProgram:
    """Replace every choose node; fresh ids continue after existing ones."""
    mode = mode or program.mode
    if mode is None:
        raise ModeError("cannot desugar choose without a program mode")
    next_site = max((s for s, _ in program.flip_sites()), default=-1) + 1
    next_star = max(
        (e.occurrence for e in walk_exprs(program.body) if isinstance(e, Star)),
        default=-1,
    ) + 1
    counter = itertools.count(next_site if mode == "prob" else next_star)

    def alloc():
        n = next(counter)
        if mode == "prob":
            return Flip(n, f"theta{n}")
        return Star(n)

    def on_expr(e):
        if isinstance(e, BNot):
            return BNot(on_expr(e.operand))
        if isinstance(e, (BAnd, BOr, BImp, BIff)):
            return type(e)(on_expr(e.left), on_expr(e.right))
        if isinstance(e, Choose):
            return on_expr(desugar_choose(e, mode, alloc))
        return e

    def on_body(body):
        out = []
        for stmt in body:
            if isinstance(stmt, PAssign):
                out.append(
                    PAssign(stmt.targets, tuple(on_expr(x) for x in stmt.exprs), stmt.loc)
                )
            elif isinstance(stmt, BIf):
                out.append(BIf(on_expr(stmt.cond), on_body(stmt.then), on_body(stmt.els), stmt.loc))
            elif isinstance(stmt, BObserve):
                out.append(BObserve(on_expr(stmt.cond), stmt.loc))
            elif isinstance(stmt, BAssume):
                out.append(BAssume(on_expr(stmt.cond), stmt.loc))
        return tuple(out)

    return BernProgram(program.decls, on_body(program.body), mode)


# --- exact probabilistic interpretation ---------------------------------------


class AbstractDistribution:
    """Exact sub-distribution over total assignments to the declared variables."""

    def __init__(self, var_names, mass):
        self.var_names = tuple(var_names)
        self._mass = {k: v for k, v in mass.items() if v > 0}

    @classmethod
    def point(cls, var_names, state):
        key = tuple(bool(state[n]) for n in var_names)
        return cls(var_names, {key: Fraction(1)})

    @classmethod
    def uniform(cls, var_names):
        names = tuple(var_names)
        w = Fraction(1, 2 ** len(names))
        return cls(names, {k: w for k in itertools.product((False, True), repeat=len(names))})

    @property
    def survival(self) -> Fraction:
        return sum(self._mass.values(), Fraction(0))

    def __len__(self):
        return len(self._mass)

    def items(self):
        for key, w in sorted(self._mass.items()):
            yield dict(zip(self.var_names, key)), w

    def mass_of(self, state) -> Fraction:
        key = tuple(bool(state[n]) for n in self.var_names)
        return self._mass.get(key, Fraction(0))

    def support(self):
        return {k for k in self._mass}

    def marginal(self, names) -> "AbstractDistribution":
        names = tuple(names)
        idx = [self.var_names.index(n) for n in names]
        out = {}
        for key, w in self._mass.items():
            nk = tuple(key[i] for i in idx)
            out[nk] = out.get(nk, Fraction(0)) + w
        return AbstractDistribution(names, out)

    def prob(self, predicate) -> Fraction:
        """Unnormalized mass of states satisfying `predicate(state_dict)`."""
        total = Fraction(0)
        for state, w in self.items():
            if predicate(state):
                total += w
        return total


def eval_expr(e, state, flips) -> bool:
    """Deterministic evaluation with all flip/star choices resolved."""
    if isinstance(e, BTrue):
        return True
    if isinstance(e, BFalse):
        return False
    if isinstance(e, BVar):
        return state[e.name]
    if isinstance(e, BNot):
        return not eval_expr(e.operand, state, flips)
    if isinstance(e, BAnd):
        return eval_expr(e.left, state, flips) and eval_expr(e.right, state, flips)
    if isinstance(e, BOr):
        return eval_expr(e.left, state, flips) or eval_expr(e.right, state, flips)
    if isinstance(e, BImp):
        return (not eval_expr(e.left, state, flips)) or eval_expr(e.right, state, flips)
    if isinstance(e, BIff):
        return eval_expr(e.left, state, flips) == eval_expr(e.right, state, flips)
    if isinstance(e, Flip):
        return flips[e.site]
    if isinstance(e, Star):
        return flips[("star", e.occurrence)]
    if isinstance(e, Choose):
        raise ModeError("choose must be desugared before interpretation")
    raise TypeError(f"not a BERN expression: {e!r}")


def _run_deterministic(program, state, flips):
    """Returns the end state dict, or None when an observe/assume fails."""

    def run(body, st):
        for stmt in body:
            if isinstance(stmt, PAssign):
                values = [eval_expr(e, st, flips) for e in stmt.exprs]
                st = dict(st)
                for t, v in zip(stmt.targets, values):
                    st[t] = v
            elif isinstance(stmt, BIf):
                st = run(stmt.then if eval_expr(stmt.cond, st, flips) else stmt.els, st)
                if st is None:
                    return None
            elif isinstance(stmt, (BObserve, BAssume)):
                if not eval_expr(stmt.cond, st, flips):
                    return None
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return st

    return run(program.body, dict(state))


def interp_exact(
    program: BernProgram,
    dist: AbstractDistribution | None = None,
    cap=DEFAULT_FLIP_CAP,
) -> AbstractDistribution:
    """Exact output distribution by enumerating all flip-site assignments.

    For every input state and every total assignment to the flip sites the
    (now deterministic) program is run once; the run's weight is the
    product of theta / (1 - theta) factors, and runs failing an observe or
    assume are dropped.
    """
    program = desugar_program(program, program.mode or "prob")
    if program.mode == "nondet" or any(
        isinstance(e, Star) for e in walk_exprs(program.body)
    ):
        raise ModeError("interp_exact needs a probabilistic program (no *)")
    sites = program.flip_sites()
    for site, theta in sites:
        if isinstance(theta, str):
            raise ModeError(f"flip site {site} has unresolved parameter {theta!r}")
    if len(sites) > cap:
        raise EnumerationCapError(f"{len(sites)} flip sites exceed cap {cap}")
    if dist is None:
        dist = AbstractDistribution.uniform(program.decls)

    out = {}
    site_ids = [s for s, _ in sites]
    thetas = {s: t for s, t in sites}
    for state, w0 in dist.items():
        for bits in itertools.product((False, True), repeat=len(site_ids)):
            weight = w0
            flips = {}
            for site, bit in zip(site_ids, bits):
                theta = thetas[site]
                weight *= theta if bit else 1 - theta
                flips[site] = bit
            if weight == 0:
                continue
            end = _run_deterministic(program, state, flips)
            if end is None:
                continue
            key = tuple(end[n] for n in program.decls)
            out[key] = out.get(key, Fraction(0)) + weight
    return AbstractDistribution(program.decls, out)


# --- non-deterministic interpretation -------------------------------------------


def eval_expr_set(e, state) -> frozenset:
    """Set of possible values; each syntactic * occurrence is independent."""
    if isinstance(e, (BTrue, BFalse)):
        return frozenset((isinstance(e, BTrue),))
    if isinstance(e, BVar):
        return frozenset((state[e.name],))
    if isinstance(e, BNot):
        return frozenset(not v for v in eval_expr_set(e.operand, state))
    if isinstance(e, (BAnd, BOr, BImp, BIff)):
        ls = eval_expr_set(e.left, state)
        rs = eval_expr_set(e.right, state)
        op = {
            BAnd: lambda a, b: a and b,
            BOr: lambda a, b: a or b,
            BImp: lambda a, b: (not a) or b,
            BIff: lambda a, b: a == b,
        }[type(e)]
        return frozenset(op(a, b) for a in ls for b in rs)
    if isinstance(e, Star):
        return frozenset((False, True))
    if isinstance(e, Flip):
        raise ModeError("flip encountered in non-deterministic interpretation")
    if isinstance(e, Choose):
        raise ModeError("choose must be desugared before interpretation")
    raise TypeError(f"not a BERN expression: {e!r}")


def interp_nondet(program: BernProgram, states) -> set:
    """All reachable end states over every resolution of *, assume-filtered.

    `states` holds total assignments as bool tuples in declaration order;
    the result is a set of the same shape.
    """
    program = desugar_program(program, program.mode or "nondet")
    names = program.decls

    def to_dict(key):
        return dict(zip(names, key))

    def run(body, current):
        for stmt in body:
            if isinstance(stmt, PAssign):
                nxt = set()
                for key in current:
                    st = to_dict(key)
                    value_sets = [eval_expr_set(e, st) for e in stmt.exprs]
                    for combo in itertools.product(*value_sets):
                        st2 = dict(st)
                        for t, v in zip(stmt.targets, combo):
                            st2[t] = v
                        nxt.add(tuple(st2[n] for n in names))
                current = nxt
            elif isinstance(stmt, BIf):
                then_in, else_in = set(), set()
                for key in current:
                    vals = eval_expr_set(stmt.cond, to_dict(key))
                    if True in vals:
                        then_in.add(key)
                    if False in vals:
                        else_in.add(key)
                current = run(stmt.then, then_in) | run(stmt.els, else_in)
            elif isinstance(stmt, (BObserve, BAssume)):
                current = {
                    key for key in current if True in eval_expr_set(stmt.cond, to_dict(key))
                }
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return current

    return run(program.body, {tuple(bool(v) for v in key) for key in states})


def all_states(var_names):
    return [tuple(bits) for bits in itertools.product((False, True), repeat=len(tuple(var_names)))]


# --- serialization ---------------------------------------------------------------

IDENT_OK = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")
RESERVED_WORDS = {"bool", "if", "else", "observe", "assume", "flip", "choose", "T", "F"}


def name_text(name):
    if IDENT_OK.match(name) and name not in RESERVED_WORDS:
        return name
    return "{" + name + "}"


def _theta_text(theta):
    if isinstance(theta, str):
        return theta
    f = Fraction(theta)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def expr_text(e, prec=0) -> str:
    # precedence: <=> 1, => 2, || 3, && 4, ! 5, atoms 6
    if isinstance(e, BTrue):
        return "T"
    if isinstance(e, BFalse):
        return "F"
    if isinstance(e, BVar):
        return name_text(e.name)
    if isinstance(e, Flip):
        return f"flip({_theta_text(e.theta)})"
    if isinstance(e, Star):
        return "*"
    if isinstance(e, Choose):
        return f"choose({expr_text(e.when_true)}, {expr_text(e.when_false)})"
    if isinstance(e, BNot):
        return f"!{expr_text(e.operand, 5)}"
    table = {BIff: (1, "<=>"), BImp: (2, "=>"), BOr: (3, "||"), BAnd: (4, "&&")}
    level, sym = table[type(e)]
    # => is right-associative, the rest left-associative; the off side gets
    # a higher binding level so tree shapes survive a parse round trip
    if type(e) is BImp:
        text = f"{expr_text(e.left, level + 1)} {sym} {expr_text(e.right, level)}"
    else:
        text = f"{expr_text(e.left, level)} {sym} {expr_text(e.right, level + 1)}"
    return f"({text})" if level < prec else text


def to_text(program: BernProgram) -> str:
    lines = [f"bool {name_text(n)}" for n in program.decls]

    def emit(body, indent):
        pad = "  " * indent
        for stmt in body:
            if isinstance(stmt, PAssign):
                if not stmt.targets:
                    continue
                lhs = ", ".join(name_text(t) for t in stmt.targets)
                rhs = ", ".join(expr_text(e) for e in stmt.exprs)
                lines.append(f"{pad}{lhs} = {rhs}")
            elif isinstance(stmt, BIf):
                lines.append(f"{pad}if ({expr_text(stmt.cond)}) {{")
                emit(stmt.then, indent + 1)
                if stmt.els:
                    lines.append(f"{pad}}} else {{")
                    emit(stmt.els, indent + 1)
                lines.append(f"{pad}}}")
            elif isinstance(stmt, BObserve):
                lines.append(f"{pad}observe({expr_text(stmt.cond)})")
            elif isinstance(stmt, BAssume):
                lines.append(f"{pad}assume({expr_text(stmt.cond)})")
    emit(program.body, 0)
    return "\n".join(lines) + "\n"
