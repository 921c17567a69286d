"""Canonical example programs used by tests, docs, and the self-test CLI."""

# Branching integer program: then-branch resets, else-branch increments.
# x = 7 is excluded from soundness sweeps because x + 1 would escape the
# declared range (range escapes are hard errors, not wrapping).
BRANCH_RESET_CP = """\
var x in [-8, 8)
if (x < 0) {
  x = 0
} else {
  x = x + 1
}
"""

BRANCH_RESET_PREDS = """\
x<-4: x < -4
x<3: x < 3
"""

# Its Boolean-program abstraction over {x<-4}, {x<3}, written by hand.
BRANCH_RESET_BERN = """\
bool {x<-4}
bool {x<3}
if (*) {
  assume({x<3})
  {x<-4}, {x<3} = F, T
} else {
  assume(!{x<-4})
  {x<-4}, {x<3} = choose(F, !{x<3} || !{x<-4}), choose({x<-4}, !{x<3})
}
"""

# Three-variable chain of uniform draws (a -> b -> c).
CHAIN_DRAWS_CP = """\
var a in [0, 32)
var b in [0, 32)
var c in [0, 32)
a = unif [0, 10)
if (a < 5) { b = unif [0, 10) } else { b = unif [0, 20) }
if (b < 5) { c = unif [0, 10) } else { c = unif [0, 20) }
"""

CHAIN_DRAWS_PREDS = """\
a<5: a < 5
b<5: b < 5
c<5: c < 5
"""

# Hand-fitted probabilistic abstraction of the chain.
CHAIN_DRAWS_BERN = """\
bool {a<5}
bool {b<5}
bool {c<5}
{a<5} = flip(1/2)
if ({a<5}) { {b<5} = flip(1/2) } else { {b<5} = flip(1/4) }
if ({b<5}) { {c<5} = flip(1/2) } else { {c<5} = flip(1/4) }
"""

# Two-node Bayesian network with evidence on b.
BAYES_NET_BERN = """\
bool a
bool b
a = flip(1/2)
if (a) { b = flip(1/2) } else { b = flip(1/2) }
observe(b)
"""

# Single large increment; classic subject for invariant enforcement.
SHIFT_TEN_CP = """\
var x in [-16, 16)
x = x + 10
"""

SHIFT_TEN_PREDS = """\
x<-4: x < -4
x<3: x < 3
"""
