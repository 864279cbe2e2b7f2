"""Open-boundary lattices: chain, kagome, and J1-J2 square.

Each builder returns a ``(LatticeSpec, BondList)`` pair. Bonds are stored with
``i < j`` and sorted lexicographically so that downstream Trotter layers are
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator


class Geometry(str, Enum):
    CHAIN = "chain"
    KAGOME = "kagome"
    SQUARE_J1J2 = "square"


class BondClass(str, Enum):
    J1 = "J1"
    J2 = "J2"


class LatticeSizeError(ValueError):
    """Raised when lattice dimensions are outside the supported range."""


@dataclass(frozen=True)
class Bond:
    i: int
    j: int
    cls: BondClass = BondClass.J1

    def __iter__(self):
        return iter((self.i, self.j, self.cls))


@dataclass(frozen=True)
class LatticeSpec:
    geometry: Geometry
    n_sites: int
    dims: tuple[int, ...]
    coords: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.coords) != self.n_sites:
            raise ValueError("one coordinate per site required")


@dataclass(frozen=True)
class BondList:
    """Edges of a lattice, each tagged with its coupling class."""

    bonds: tuple[Bond, ...]
    n_sites: int

    def __post_init__(self):
        seen = set()
        for b in self.bonds:
            if not 0 <= b.i < b.j < self.n_sites:
                raise ValueError(f"invalid bond {b}: need 0 <= i < j < {self.n_sites}")
            key = (b.i, b.j, b.cls)
            if key in seen:
                raise ValueError(f"duplicate bond {b}")
            seen.add(key)

    def __iter__(self) -> Iterator[Bond]:
        return iter(self.bonds)

    def __len__(self) -> int:
        return len(self.bonds)

    def count(self, cls: BondClass) -> int:
        return sum(1 for b in self.bonds if b.cls == cls)


def _bond_list(pairs, n_sites: int) -> BondList:
    bonds = sorted({(min(i, j), max(i, j), BondClass(c)) for i, j, c in pairs},
                   key=lambda t: (t[0], t[1], t[2].value))
    return BondList(tuple(Bond(i, j, c) for i, j, c in bonds), n_sites)


def build_chain(L: int) -> tuple[LatticeSpec, BondList]:
    if L < 2:
        raise LatticeSizeError(f"chain length must be >= 2, got {L}")
    spec = LatticeSpec(Geometry.CHAIN, L, (L,), tuple((float(k), 0.0) for k in range(L)))
    return spec, _bond_list(((k, k + 1, BondClass.J1) for k in range(L - 1)), L)


KAGOME_A1 = (2.0, 0.0)
KAGOME_A2 = (1.0, math.sqrt(3.0))
KAGOME_BASIS = ((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3.0) / 2.0))


def build_kagome(nx: int, ny: int) -> tuple[LatticeSpec, BondList]:
    """Kagome supercell of ``nx * ny`` three-site triangles (``2 x N x 3`` means nx=2, ny=N).

    Sites are numbered cell by cell (``iy`` outer, ``ix`` inner, then the three
    basis sites). Bonds connect every pair of sites at unit distance.
    """
    if nx < 1 or ny < 1:
        raise LatticeSizeError(f"kagome dims must be positive, got ({nx}, {ny})")
    coords = []
    for iy in range(ny):
        for ix in range(nx):
            ox = ix * KAGOME_A1[0] + iy * KAGOME_A2[0]
            oy = ix * KAGOME_A1[1] + iy * KAGOME_A2[1]
            coords.extend((ox + bx, oy + by) for bx, by in KAGOME_BASIS)
    n = len(coords)
    pairs = [
        (i, j, BondClass.J1)
        for i in range(n)
        for j in range(i + 1, n)
        if abs(math.dist(coords[i], coords[j]) - 1.0) < 1e-9
    ]
    spec = LatticeSpec(Geometry.KAGOME, n, (nx, ny, 3), tuple(coords))
    return spec, _bond_list(pairs, n)


def build_square_j1j2(rows: int, cols: int) -> tuple[LatticeSpec, BondList]:
    """Square grid, site ``r * cols + c`` at ``(c, r)``; J2 bonds on both plaquette diagonals."""
    if rows < 2 or cols < 2:
        raise LatticeSizeError(f"square dims must be >= 2, got ({rows}, {cols})")

    def idx(r: int, c: int) -> int:
        return r * cols + c

    pairs = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                pairs.append((idx(r, c), idx(r, c + 1), BondClass.J1))
            if r + 1 < rows:
                pairs.append((idx(r, c), idx(r + 1, c), BondClass.J1))
            if r + 1 < rows and c + 1 < cols:
                pairs.append((idx(r, c), idx(r + 1, c + 1), BondClass.J2))
                pairs.append((idx(r, c + 1), idx(r + 1, c), BondClass.J2))
    coords = tuple((float(c), float(r)) for r in range(rows) for c in range(cols))
    spec = LatticeSpec(Geometry.SQUARE_J1J2, rows * cols, (rows, cols), coords)
    return spec, _bond_list(pairs, rows * cols)


def build_lattice(geometry: Geometry | str, dims) -> tuple[LatticeSpec, BondList]:
    """Dispatch on geometry. Kagome accepts ``(nx, ny)`` or ``(nx, ny, 3)``."""
    geometry = Geometry(geometry)
    dims = tuple(int(d) for d in dims)
    if geometry is Geometry.CHAIN:
        if len(dims) != 1:
            raise LatticeSizeError(f"chain takes one dimension, got {dims}")
        return build_chain(dims[0])
    if geometry is Geometry.KAGOME:
        if len(dims) == 3 and dims[2] == 3:
            dims = dims[:2]
        if len(dims) != 2:
            raise LatticeSizeError(f"kagome takes (nx, ny) or (nx, ny, 3), got {dims}")
        return build_kagome(*dims)
    if len(dims) != 2:
        raise LatticeSizeError(f"square takes (rows, cols), got {dims}")
    return build_square_j1j2(*dims)


def to_dict(spec: LatticeSpec, bonds: BondList) -> dict:
    """JSON-compatible geometry export for plotting."""
    return {
        "geometry": spec.geometry.value,
        "dims": list(spec.dims),
        "n_sites": spec.n_sites,
        "sites": [{"index": k, "x": x, "y": y} for k, (x, y) in enumerate(spec.coords)],
        "bonds": [{"i": b.i, "j": b.j, "class": b.cls.value} for b in bonds],
    }
