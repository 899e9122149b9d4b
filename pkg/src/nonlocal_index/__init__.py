"""Index theory for first-order operators with non-local boundary conditions on
finite cyclic coverings: discretized operators, eta invariants, boundary value
problems, mod-n invariants and K-theoretic projection families."""

__version__ = "0.1.0"
