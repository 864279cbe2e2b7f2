"""Exact diagonalization in the Sz = 0 sector, sparsity curves and sector scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bits
from .hamiltonian import PauliSum
from .subspace import ProjectedOperator, Subspace, ground_state, project

ED_MAX_SITES = 24
_CHUNK = 1 << 22


class CapacityError(RuntimeError):
    """The requested sector is larger than the configured memory cap."""


def sector_dimension(n: int) -> int:
    """Central binomial coefficient ``C(n, n/2)`` (exact Python integer)."""
    if n < 1 or n % 2:
        raise ValueError(f"sector dimension needs an even positive n, got {n}")
    if n > 128:
        raise ValueError(f"n={n} is above the supported range (<= 128)")
    return math.comb(n, n // 2)


def scaling_table(ns) -> list[tuple[int, int, float]]:
    """Rows ``(n, C(n, n/2), C(n, n/2) / (2^n / sqrt(pi n / 2)))``."""
    rows = []
    for n in ns:
        dim = sector_dimension(n)
        # C(128, 64) ~ 2.4e37, comfortably inside float range
        ratio = dim * math.sqrt(math.pi * n / 2.0) / 2.0**n
        rows.append((n, dim, ratio))
    return rows


def sector_basis(n: int, max_sites: int = ED_MAX_SITES) -> Subspace:
    """All weight-``n/2`` bitstrings, in lexicographic order."""
    if n < 2 or n % 2:
        raise ValueError(f"Sz = 0 sector needs an even number of sites, got {n}")
    if n > max_sites:
        raise CapacityError(
            f"Sz = 0 sector for {n} sites has dimension {sector_dimension(n):,}; cap is {max_sites} sites"
        )
    chunks = []
    for lo in range(0, 1 << n, _CHUNK):
        block = np.arange(lo, min(lo + _CHUNK, 1 << n), dtype=np.int64)
        chunks.append(block[bits.popcount(block) == n // 2])
    return Subspace(np.concatenate(chunks), n)


@dataclass
class ExactResult:
    energy: float
    vector: np.ndarray
    basis: Subspace
    residual: float = 0.0

    def __iter__(self):
        return iter((self.energy, self.vector))


def exact_ground_state(h: PauliSum, max_sites: int = ED_MAX_SITES, tol: float = 1e-10) -> ExactResult:
    basis = sector_basis(h.n_sites, max_sites)
    op = ProjectedOperator(h, basis) if len(basis) > 20000 else project(h, basis)
    gs = ground_state(op, tol=tol)
    return ExactResult(gs.energy, gs.vector, basis, gs.residual)


def _top_order(exact: ExactResult) -> np.ndarray:
    """Basis positions by descending |amplitude|; ties in lexicographic order."""
    # basis.states is already lexicographic, so a stable sort keeps ties ordered
    return np.argsort(-np.abs(exact.vector), kind="stable")


def sparsity_curve(
    h: PauliSum,
    fractions,
    exact: ExactResult | None = None,
    max_sites: int = ED_MAX_SITES,
) -> list[tuple[float, float]]:
    """Relative projection error when keeping the top fraction of sector bitstrings."""
    exact = exact or exact_ground_state(h, max_sites)
    order = _top_order(exact)
    dim = len(exact.basis)
    out = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction must lie in (0, 1], got {f}")
        count = min(dim, max(1, math.ceil(f * dim - 1e-9)))
        if count == dim:
            out.append((float(f), 0.0))
            continue
        sub = Subspace(exact.basis.states[order[:count]], h.n_sites)
        energy = ground_state(project(h, sub), tol=1e-10).energy
        out.append((float(f), abs(energy - exact.energy) / abs(exact.energy)))
    return out
