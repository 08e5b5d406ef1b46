"""Operator models on truncated Fock spaces.

A desk-scale laboratory for row contractions in the unit domain of an
invertible polynomial tuple f: universal models, characteristic functions,
Poisson kernels, dilations, constrained varieties, Beurling factorization,
commutant lifting, and the commutative reproducing-kernel picture.
"""

__version__ = "0.1.0"
