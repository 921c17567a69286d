"""Probabilistic predicate abstraction of bounded integer programs.

Builds Bernoulli Boolean programs from small loop-free imperative programs,
runs exact inference on them through symbolic model checking and weighted
model counting, and checks the soundness/invariance properties against a
brute-force concrete oracle.
"""

__version__ = "0.1.0"

from bernabs.kernel import DEFAULT_BACKEND, available_backends

__all__ = ["DEFAULT_BACKEND", "available_backends", "__version__"]
