"""Sample-based Krylov diagonalization for XXZ Heisenberg models on small lattices."""

__version__ = "0.1.0"
