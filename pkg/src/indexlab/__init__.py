"""Numerical index laboratory for operators of the form D + i * potential.

Computes the Fredholm index two independent ways, analytically by counting
zero modes of discretized model operators and topologically through corner
eigenbundle invariants, and certifies that the two routes agree.
"""

from .errors import IndexLabError

__all__ = ["IndexLabError"]
__version__ = "1.0.0"
