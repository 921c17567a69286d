"""Concrete language: loop-free imperative programs over bounded integers.

Semantics are exact.  Deterministic evaluation maps a state to a state (or
to ``BLOCKED`` when an observe fails); distribution evaluation enumerates
every draw outcome with uniform rational weights and drops observe-failing
paths, recording the lost mass in the survival total.  Arithmetic escaping
a variable's declared range is a hard error, never wrapping or clamping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from bernabs.errors import (
    ConditionOnImpossibleError,
    EnumerationCapError,
    RangeViolationError,
)

DEFAULT_STATE_CAP = 2**20


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int  # half-open: values lo .. hi-1

    def __post_init__(self):
        if self.lo >= self.hi:
            raise ValueError(f"empty range for {self.name!r}: [{self.lo}, {self.hi})")

    @property
    def size(self):
        return self.hi - self.lo

    def contains(self, value):
        return self.lo <= value < self.hi


# --- integer expressions (linear) -----------------------------------------


class IntExpr:
    __slots__ = ()


@dataclass(frozen=True)
class IntConst(IntExpr):
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class IntVar(IntExpr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add(IntExpr):
    left: IntExpr
    right: IntExpr

    def __str__(self):
        return f"{self.left} + {self.right}"


@dataclass(frozen=True)
class Sub(IntExpr):
    left: IntExpr
    right: IntExpr

    def __str__(self):
        rhs = f"({self.right})" if isinstance(self.right, (Add, Sub)) else str(self.right)
        return f"{self.left} - {rhs}"


@dataclass(frozen=True)
class Scale(IntExpr):
    coeff: int
    operand: IntExpr

    def __str__(self):
        inner = f"({self.operand})" if isinstance(self.operand, (Add, Sub)) else str(self.operand)
        return f"{self.coeff}*{inner}"


# --- conditions ------------------------------------------------------------

CMP_OPS = ("<", "<=", "==", "!=", ">", ">=")


class Cond:
    __slots__ = ()


@dataclass(frozen=True)
class CTrue(Cond):

    def __str__(self):
        return "T"


@dataclass(frozen=True)
class CFalse(Cond):

    def __str__(self):
        return "F"


@dataclass(frozen=True)
class Cmp(Cond):
    op: str
    left: IntExpr
    right: IntExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class CNot(Cond):
    operand: Cond

    def __str__(self):
        return f"!({self.operand})"


@dataclass(frozen=True)
class CAnd(Cond):
    left: Cond
    right: Cond

    def __str__(self):
        return f"({self.left}) && ({self.right})"


@dataclass(frozen=True)
class COr(Cond):
    left: Cond
    right: Cond

    def __str__(self):
        return f"({self.left}) || ({self.right})"


def cond_and_all(conds):
    out = CTrue()
    for i, c in enumerate(conds):
        out = c if i == 0 else CAnd(out, c)
    return out


# --- statements -------------------------------------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Assign(Stmt):
    name: str
    expr: IntExpr
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Draw(Stmt):
    name: str
    lo: int
    hi: int
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Observe(Stmt):
    cond: Cond
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If(Stmt):
    cond: Cond
    then: tuple
    els: tuple
    loc: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ConcreteProgram:
    decls: tuple
    body: tuple

    def __post_init__(self):
        names = [d.name for d in self.decls]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable declaration")

    def decl(self, name) -> VarDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def var_names(self):
        return tuple(d.name for d in self.decls)

    def joint_size(self):
        n = 1
        for d in self.decls:
            n *= d.size
        return n

    def is_deterministic(self):
        return not any(isinstance(s, Draw) for s in walk_statements(self.body))


def walk_statements(body):
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_statements(stmt.then)
            yield from walk_statements(stmt.els)


# --- expression / condition evaluation -------------------------------------


def eval_int(e, state) -> int:
    if isinstance(e, IntConst):
        return e.value
    if isinstance(e, IntVar):
        return state[e.name]
    if isinstance(e, Add):
        return eval_int(e.left, state) + eval_int(e.right, state)
    if isinstance(e, Sub):
        return eval_int(e.left, state) - eval_int(e.right, state)
    if isinstance(e, Scale):
        return e.coeff * eval_int(e.operand, state)
    raise TypeError(f"not an integer expression: {e!r}")


def eval_cond(c, state) -> bool:
    if isinstance(c, CTrue):
        return True
    if isinstance(c, CFalse):
        return False
    if isinstance(c, Cmp):
        a, b = eval_int(c.left, state), eval_int(c.right, state)
        return {
            "<": a < b,
            "<=": a <= b,
            "==": a == b,
            "!=": a != b,
            ">": a > b,
            ">=": a >= b,
        }[c.op]
    if isinstance(c, CNot):
        return not eval_cond(c.operand, state)
    if isinstance(c, CAnd):
        return eval_cond(c.left, state) and eval_cond(c.right, state)
    if isinstance(c, COr):
        return eval_cond(c.left, state) or eval_cond(c.right, state)
    raise TypeError(f"not a condition: {c!r}")


def expr_vars(e):
    out = set()

    def walk(e):
        if isinstance(e, IntVar):
            out.add(e.name)
        elif isinstance(e, (Add, Sub)):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, Scale):
            walk(e.operand)

    walk(e)
    return out


def cond_vars(c):
    out = set()

    def walk_c(c):
        if isinstance(c, Cmp):
            out.update(expr_vars(c.left))
            out.update(expr_vars(c.right))
        elif isinstance(c, CNot):
            walk_c(c.operand)
        elif isinstance(c, (CAnd, COr)):
            walk_c(c.left)
            walk_c(c.right)

    walk_c(c)
    return out


# --- deterministic semantics ------------------------------------------------


class _Blocked:
    def __repr__(self):
        return "BLOCKED"


BLOCKED = _Blocked()


def eval_det(program: ConcreteProgram, state: dict):
    """Run a draw-free program; returns the output state or BLOCKED."""

    def run(body, st):
        for stmt in body:
            if isinstance(stmt, Assign):
                value = eval_int(stmt.expr, st)
                decl = program.decl(stmt.name)
                if not decl.contains(value):
                    raise RangeViolationError(
                        f"{stmt.name} = {value} escapes [{decl.lo}, {decl.hi})"
                    )
                st = dict(st)
                st[stmt.name] = value
            elif isinstance(stmt, Observe):
                if not eval_cond(stmt.cond, st):
                    return None
            elif isinstance(stmt, If):
                st = run(stmt.then if eval_cond(stmt.cond, st) else stmt.els, st)
                if st is None:
                    return None
            elif isinstance(stmt, Draw):
                raise ValueError("eval_det requires a draw-free program")
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return st

    out = run(program.body, dict(state))
    return BLOCKED if out is None else out


# --- distribution semantics ---------------------------------------------------


class ConcreteDistribution:
    """Exact finite map from states to positive rational mass.

    States are dicts name->int; stored keyed by value tuples in declaration
    order.  The survival mass is the total mass (inputs are often 1; after
    observe statements it may be smaller).
    """

    def __init__(self, var_names, mass):
        self.var_names = tuple(var_names)
        self._mass = {k: v for k, v in mass.items() if v > 0}

    @classmethod
    def point(cls, program: ConcreteProgram, state: dict):
        key = tuple(state[n] for n in program.var_names)
        for d, v in zip(program.decls, key):
            if not d.contains(v):
                raise RangeViolationError(f"{d.name} = {v} escapes [{d.lo}, {d.hi})")
        return cls(program.var_names, {key: Fraction(1)})

    @classmethod
    def uniform_joint(cls, program: ConcreteProgram, cap=DEFAULT_STATE_CAP):
        n = program.joint_size()
        if n > cap:
            raise EnumerationCapError(f"joint domain has {n} states (cap {cap})")
        w = Fraction(1, n)
        mass = {
            key: w
            for key in itertools.product(*(range(d.lo, d.hi) for d in program.decls))
        }
        return cls(program.var_names, mass)

    @property
    def survival(self) -> Fraction:
        return sum(self._mass.values(), Fraction(0))

    def __len__(self):
        return len(self._mass)

    def items(self):
        for key, w in sorted(self._mass.items()):
            yield dict(zip(self.var_names, key)), w

    def mass_of(self, state: dict) -> Fraction:
        key = tuple(state[n] for n in self.var_names)
        return self._mass.get(key, Fraction(0))

    def filtered(self, cond) -> "ConcreteDistribution":
        keep = {}
        for key, w in self._mass.items():
            if eval_cond(cond, dict(zip(self.var_names, key))):
                keep[key] = w
        return ConcreteDistribution(self.var_names, keep)


def eval_dist(
    program: ConcreteProgram,
    dist: ConcreteDistribution | None = None,
    cap=DEFAULT_STATE_CAP,
) -> ConcreteDistribution:
    """Exact output distribution by exhaustive enumeration of draw outcomes."""
    if dist is None:
        dist = ConcreteDistribution.point(
            program, {d.name: d.lo for d in program.decls}
        )
    if dist.var_names != program.var_names:
        raise ValueError("input distribution does not match the program's variables")
    names = program.var_names
    index = {n: i for i, n in enumerate(names)}

    def state_of(key):
        return dict(zip(names, key))

    def step(body, mass):
        for stmt in body:
            if isinstance(stmt, Assign):
                decl = program.decl(stmt.name)
                i = index[stmt.name]
                out = {}
                for key, w in mass.items():
                    value = eval_int(stmt.expr, state_of(key))
                    if not decl.contains(value):
                        raise RangeViolationError(
                            f"{stmt.name} = {value} escapes [{decl.lo}, {decl.hi})"
                        )
                    nk = key[:i] + (value,) + key[i + 1 :]
                    out[nk] = out.get(nk, Fraction(0)) + w
                mass = out
            elif isinstance(stmt, Draw):
                decl = program.decl(stmt.name)
                if not (decl.lo <= stmt.lo < stmt.hi <= decl.hi):
                    raise RangeViolationError(
                        f"draw [{stmt.lo}, {stmt.hi}) escapes {stmt.name}'s range"
                    )
                i = index[stmt.name]
                share = Fraction(1, stmt.hi - stmt.lo)
                out = {}
                for key, w in mass.items():
                    for value in range(stmt.lo, stmt.hi):
                        nk = key[:i] + (value,) + key[i + 1 :]
                        out[nk] = out.get(nk, Fraction(0)) + w * share
                    if len(out) > cap:
                        raise EnumerationCapError(f"more than {cap} states in flight")
                mass = out
            elif isinstance(stmt, Observe):
                mass = {k: w for k, w in mass.items() if eval_cond(stmt.cond, state_of(k))}
            elif isinstance(stmt, If):
                then_in, else_in = {}, {}
                for key, w in mass.items():
                    (then_in if eval_cond(stmt.cond, state_of(key)) else else_in)[key] = w
                mass = step(stmt.then, then_in)
                for key, w in step(stmt.els, else_in).items():
                    mass[key] = mass.get(key, Fraction(0)) + w
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return mass

    final = step(program.body, {tuple(k[n] for n in names): w for k, w in dist.items()})
    return ConcreteDistribution(names, final)


def query_prob(dist: ConcreteDistribution, cond) -> Fraction:
    """Normalized probability of `cond` under the surviving mass."""
    total = dist.survival
    if total == 0:
        raise ConditionOnImpossibleError("no surviving executions to condition on")
    hit = Fraction(0)
    for state, w in dist.items():
        if eval_cond(cond, state):
            hit += w
    return hit / total
