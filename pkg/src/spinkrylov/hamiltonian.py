"""XXZ J1-J2 Hamiltonian as a weighted Pauli sum, plus Z-basis matrix elements.

Matrix elements are evaluated per bond rather than by Pauli algebra: on a
bond with couplings ``(jxy, jzz)`` the diagonal contribution is
``jzz * z_i * z_j`` and an antiparallel pair hops to its swapped partner with
amplitude ``2 * jxy`` (the XX + YY flip).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from . import bits
from .lattice import BondClass, BondList

PAULI_SYMBOLS = frozenset("IXYZ")


@dataclass(frozen=True)
class ModelParams:
    j1: float = 1.0
    j2: float = 0.0
    delta: float = 2.0

    def __post_init__(self):
        if not self.j1 > 0:
            raise ValueError(f"j1 must be positive (antiferromagnetic), got {self.j1}")
        if self.j2 < 0:
            raise ValueError(f"j2 must be non-negative, got {self.j2}")

    def coupling(self, cls: BondClass) -> float:
        return self.j1 if BondClass(cls) is BondClass.J1 else self.j2


@dataclass(frozen=True)
class XXZCouplings:
    """Per-pair couplings extracted from a two-site XX/YY/ZZ Pauli sum."""

    i: np.ndarray
    j: np.ndarray
    jxy: np.ndarray
    jzz: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def pairs(self) -> Iterator[tuple[int, int, float, float]]:
        for a, b, xy, zz in zip(self.i, self.j, self.jxy, self.jzz):
            yield int(a), int(b), float(xy), float(zz)


@dataclass(frozen=True)
class PauliSum:
    """Sum of ``coefficient * string`` where ``string[k]`` acts on site ``k``."""

    n_sites: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        for coeff, string in self.terms:
            if len(string) != self.n_sites:
                raise ValueError(f"Pauli string {string!r} does not have length {self.n_sites}")
            if not set(string) <= PAULI_SYMBOLS:
                raise ValueError(f"Pauli string {string!r} has symbols outside IXYZ")
            if not math.isfinite(coeff):
                raise ValueError(f"non-finite coefficient {coeff}")

    def __len__(self) -> int:
        return len(self.terms)

    def coefficient_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    @cached_property
    def couplings(self) -> XXZCouplings:
        """Aggregate terms into XXZ bond couplings.

        Raises ``ValueError`` for anything that is not a two-site XX/YY/ZZ term
        or for a pair whose XX and YY coefficients differ.
        """
        acc: dict[tuple[int, int], dict[str, float]] = {}
        for coeff, string in self.terms:
            sites = [k for k, p in enumerate(string) if p != "I"]
            if len(sites) != 2 or string[sites[0]] != string[sites[1]]:
                raise ValueError(f"term {string!r} is not a two-site XX, YY or ZZ string")
            entry = acc.setdefault((sites[0], sites[1]), {"X": 0.0, "Y": 0.0, "Z": 0.0})
            entry[string[sites[0]]] += coeff
        pairs = sorted(acc)
        for p in pairs:
            if not math.isclose(acc[p]["X"], acc[p]["Y"], rel_tol=1e-12, abs_tol=1e-15):
                raise ValueError(f"pair {p} has unequal XX and YY couplings")
        return XXZCouplings(
            i=np.array([p[0] for p in pairs], dtype=np.int64),
            j=np.array([p[1] for p in pairs], dtype=np.int64),
            jxy=np.array([acc[p]["X"] for p in pairs], dtype=float),
            jzz=np.array([acc[p]["Z"] for p in pairs], dtype=float),
        )


def _two_site(n_sites: int, i: int, j: int, p: str) -> str:
    chars = ["I"] * n_sites
    chars[i] = chars[j] = p
    return "".join(chars)


def build_xxz(bonds: BondList, params: ModelParams) -> PauliSum:
    terms = []
    for b in bonds:
        jc = params.coupling(b.cls)
        terms.append((jc, _two_site(bonds.n_sites, b.i, b.j, "X")))
        terms.append((jc, _two_site(bonds.n_sites, b.i, b.j, "Y")))
        terms.append((jc * params.delta, _two_site(bonds.n_sites, b.i, b.j, "Z")))
    return PauliSum(bonds.n_sites, tuple(terms))


def timestep(h: PauliSum) -> float:
    """Krylov timestep ``pi / sum_j |c_j|``."""
    norm = h.coefficient_norm()
    if len(h) == 0 or norm == 0.0:
        raise ValueError("timestep undefined for an empty Hamiltonian")
    return math.pi / norm


def matrix_element(h: PauliSum, bra: str, ket: str) -> float:
    n = h.n_sites
    bits.check_bitstring(bra, n)
    bits.check_bitstring(ket, n)
    cpl = h.couplings
    if bra == ket:
        return sum(zz * (1.0 if ket[a] == ket[b] else -1.0) for a, b, _, zz in cpl.pairs())
    diff = [k for k in range(n) if bra[k] != ket[k]]
    if len(diff) != 2:
        return 0.0
    a, b = diff
    if ket[a] == ket[b]:
        return 0.0
    for p, q, xy, _ in cpl.pairs():
        if (p, q) == (a, b):
            return 2.0 * xy
    return 0.0


def connected_states(h: PauliSum, ket: str) -> list[tuple[str, float]]:
    """Diagonal entry first, then one flip partner per antiparallel bond."""
    bits.check_bitstring(ket, h.n_sites)
    out = [(ket, matrix_element(h, ket, ket))]
    for a, b, xy, _ in h.couplings.pairs():
        if ket[a] != ket[b] and xy != 0.0:
            chars = list(ket)
            chars[a], chars[b] = ket[b], ket[a]
            out.append(("".join(chars), 2.0 * xy))
    return out


# Vectorized forms of the rules above, used for large bases.

def diagonal(h: PauliSum, states: np.ndarray) -> np.ndarray:
    n = h.n_sites
    states = np.asarray(states, dtype=np.int64)
    out = np.zeros(len(states))
    cpl = h.couplings
    for a, b, _, zz in cpl.pairs():
        if zz == 0.0:
            continue
        par = ((states >> bits.site_shift(a, n)) ^ (states >> bits.site_shift(b, n))) & 1
        out += zz * (1.0 - 2.0 * par)
    return out


def flip_moves(h: PauliSum, states: np.ndarray) -> Iterator[tuple[np.ndarray, np.ndarray, float]]:
    """Yield ``(rows, partners, value)`` per bond: ``states[rows]`` hop to ``partners``."""
    n = h.n_sites
    states = np.asarray(states, dtype=np.int64)
    for a, b, xy, _ in h.couplings.pairs():
        if xy == 0.0:
            continue
        sa, sb = bits.site_shift(a, n), bits.site_shift(b, n)
        rows = np.flatnonzero(((states >> sa) ^ (states >> sb)) & 1)
        yield rows, states[rows] ^ ((1 << sa) | (1 << sb)), 2.0 * xy
