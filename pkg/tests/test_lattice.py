import math

import pytest
from hypothesis import given, strategies as st

from spinkrylov.lattice import (
    BondClass,
    Geometry,
    LatticeSizeError,
    build_chain,
    build_kagome,
    build_lattice,
    build_square_j1j2,
    to_dict,
)


def test_chain_smallest():
    spec, bonds = build_chain(2)
    assert [tuple(b) for b in bonds] == [(0, 1, BondClass.J1)]
    assert spec.coords == ((0.0, 0.0), (1.0, 0.0))


def test_chain_12_bond_count():
    spec, bonds = build_chain(12)
    assert spec.n_sites == 12
    assert len(bonds) == 11
    assert bonds.count(BondClass.J1) == 11


@pytest.mark.parametrize("bad", [0, 1, -3])
def test_chain_invalid(bad):
    with pytest.raises(LatticeSizeError):
        build_chain(bad)


def test_kagome_single_triangle():
    spec, bonds = build_kagome(1, 1)
    assert spec.n_sites == 3
    assert [(b.i, b.j) for b in bonds] == [(0, 1), (0, 2), (1, 2)]


def test_kagome_2x2():
    spec, bonds = build_kagome(2, 2)
    assert spec.n_sites == 12
    assert spec.dims == (2, 2, 3)
    # 4 up-triangles plus the down-triangle links between cells
    assert len(bonds) == 17
    assert bonds.count(BondClass.J2) == 0


def test_kagome_sites_have_at_most_four_neighbours():
    _, bonds = build_kagome(2, 4)
    degree = [0] * bonds.n_sites
    for b in bonds:
        degree[b.i] += 1
        degree[b.j] += 1
    assert max(degree) == 4


@pytest.mark.parametrize("dims", [(0, 2), (2, 0)])
def test_kagome_invalid(dims):
    with pytest.raises(LatticeSizeError):
        build_kagome(*dims)


def test_square_single_plaquette():
    _, bonds = build_square_j1j2(2, 2)
    assert bonds.count(BondClass.J1) == 4
    assert bonds.count(BondClass.J2) == 2


def test_square_3x4():
    spec, bonds = build_square_j1j2(3, 4)
    assert spec.n_sites == 12
    assert bonds.count(BondClass.J1) == 17
    assert bonds.count(BondClass.J2) == 12


@pytest.mark.parametrize("dims", [(1, 4), (4, 1)])
def test_square_invalid(dims):
    with pytest.raises(LatticeSizeError):
        build_square_j1j2(*dims)


@given(st.integers(2, 7), st.integers(2, 7))
def test_square_bond_count_formula(rows, cols):
    _, bonds = build_square_j1j2(rows, cols)
    assert bonds.count(BondClass.J1) == rows * (cols - 1) + cols * (rows - 1)
    assert bonds.count(BondClass.J2) == 2 * (rows - 1) * (cols - 1)


LATTICES = [("chain", (9,)), ("kagome", (2, 3)), ("kagome", (3, 2)), ("square", (3, 5))]


@pytest.mark.parametrize("geometry,dims", LATTICES)
def test_bond_lengths_match_class(geometry, dims):
    spec, bonds = build_lattice(geometry, dims)
    for b in bonds:
        d = math.dist(spec.coords[b.i], spec.coords[b.j])
        expected = 1.0 if b.cls is BondClass.J1 else math.sqrt(2.0)
        assert d == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("geometry,dims", LATTICES)
def test_bonds_sorted_unique_and_deterministic(geometry, dims):
    _, a = build_lattice(geometry, dims)
    _, b = build_lattice(geometry, dims)
    assert a == b
    keys = [(x.i, x.j, x.cls.value) for x in a]
    assert keys == sorted(set(keys))
    assert all(x.i < x.j for x in a)


@given(st.integers(1, 4), st.integers(1, 4))
def test_kagome_site_count(nx, ny):
    spec, bonds = build_kagome(nx, ny)
    assert spec.n_sites == 3 * nx * ny
    assert len(spec.coords) == spec.n_sites
    assert bonds.count(BondClass.J1) == len(bonds)


def test_build_lattice_accepts_kagome_triple():
    spec, _ = build_lattice(Geometry.KAGOME, (2, 2, 3))
    assert spec.n_sites == 12


def test_export_roundtrip_shape():
    spec, bonds = build_square_j1j2(2, 3)
    data = to_dict(spec, bonds)
    assert data["geometry"] == "square"
    assert len(data["sites"]) == 6
    assert {b["class"] for b in data["bonds"]} == {"J1", "J2"}
