import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from oracles import all_bitstrings, dense_hamiltonian
from spinkrylov import bits
from spinkrylov.baselines import sector_basis
from spinkrylov.hamiltonian import ModelParams, build_xxz
from spinkrylov.lattice import build_chain, build_kagome, build_square_j1j2
from spinkrylov.subspace import (
    EigensolverError,
    ProjectedGroundState,
    ProjectedOperator,
    Subspace,
    ground_state,
    lanczos,
    occupancy,
    project,
)


def _h(builder, *args, **params):
    _, bonds = builder(*args)
    return build_xxz(bonds, ModelParams(**params))


def _gram_oracle(h, basis):
    """Dense restriction of the full Pauli-built matrix to the basis rows/columns."""
    dense = dense_hamiltonian(h).real
    idx = basis.states
    return dense[np.ix_(idx, idx)]


def test_subspace_sorts_and_dedups():
    s = Subspace.from_bitstrings(["10", "01", "10"])
    assert s.basis == ["01", "10"]
    assert len(s) == 2 and "01" in s and "11" not in s
    assert list(s.lookup(np.array([2, 3, 1]))) == [1, -1, 0]


def test_subspace_rejects_wide_states():
    with pytest.raises(ValueError):
        Subspace(np.array([8]), 3)
    with pytest.raises(ValueError):
        Subspace.from_bitstrings(["01", "011"])


def test_empty_lookup():
    assert list(Subspace(np.zeros(0, dtype=np.int64), 4).lookup(np.array([1, 2]))) == [-1, -1]


def test_two_state_projection():
    h = _h(build_chain, 2, delta=2.0)
    mat = project(h, Subspace.from_bitstrings(["01", "10"])).toarray()
    assert np.array_equal(mat, [[-2.0, 2.0], [2.0, -2.0]])
    gs = ground_state(mat)
    assert gs.energy == pytest.approx(-4.0)
    assert np.allclose(np.abs(gs.vector), 1 / np.sqrt(2))


def test_one_state_projection():
    h = _h(build_chain, 4, delta=2.0)
    mat = project(h, Subspace.from_bitstrings(["0101"]))
    assert mat.shape == (1, 1)
    assert mat[0, 0] == pytest.approx(-6.0)


def test_empty_basis_rejected():
    h = _h(build_chain, 4)
    with pytest.raises(ValueError):
        project(h, Subspace(np.zeros(0, dtype=np.int64), 4))


@pytest.mark.parametrize(
    "h",
    [_h(build_chain, 6, delta=2.0), _h(build_square_j1j2, 2, 3, j2=0.5), _h(build_kagome, 2, 1, delta=1.0)],
    ids=["chain6", "square2x3", "kagome2x1"],
)
def test_projection_matches_dense_gram_oracle(h):
    rng = np.random.default_rng(4)
    for size in (1, 5, 17, 1 << h.n_sites):
        states = rng.choice(1 << h.n_sites, size=size, replace=False)
        basis = Subspace(states, h.n_sites)
        expected = _gram_oracle(h, basis)
        assert np.allclose(project(h, basis).toarray(), expected)
        assert np.allclose(ProjectedOperator(h, basis).toarray(), expected)


def test_projected_operator_matvec_matches_csr():
    h = _h(build_kagome, 2, 2, delta=2.0)
    basis = sector_basis(12)
    csr = project(h, basis)
    op = ProjectedOperator(h, basis)
    x = np.random.default_rng(0).standard_normal(len(basis))
    assert np.allclose(op @ x, csr @ x, atol=1e-12)
    assert np.array_equal(op.diagonal(), csr.diagonal())


def _random_symmetric(n, seed, density=1.0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    if density < 1.0:
        a *= rng.random((n, n)) < density
    return 0.5 * (a + a.T)


@pytest.mark.parametrize("n,seed", [(50, 0), (120, 1), (200, 2), (200, 3)])
def test_lanczos_matches_dense(n, seed):
    a = _random_symmetric(n, seed)
    w, v = np.linalg.eigh(a)
    gs = lanczos(a, tol=1e-10)
    assert gs.energy == pytest.approx(w[0], abs=1e-8)
    assert abs(abs(gs.vector @ v[:, 0]) - 1.0) < 1e-8
    assert gs.residual <= 1e-10 * max(1.0, abs(gs.energy))


def test_lanczos_small_basis_restarts():
    a = _random_symmetric(150, 7)
    gs = lanczos(sp.csr_matrix(a), tol=1e-9, max_basis=12)
    assert gs.energy == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-8)


def test_lanczos_budget_error():
    a = _random_symmetric(200, 9)
    with pytest.raises(EigensolverError) as info:
        lanczos(a, tol=1e-14, max_matvecs=20, max_basis=10)
    assert np.isfinite(info.value.energy)


def test_lanczos_invariant_subspace_start():
    # start vector already an eigenvector: the Krylov space closes after one step
    a = np.diag(np.arange(100, dtype=float))
    v0 = np.zeros(100)
    v0[0] = 1.0
    gs = lanczos(a, v0=v0)
    assert gs.energy == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**32 - 1))
def test_ground_state_matches_dense_property(n, seed):
    a = _random_symmetric(n, seed, density=0.2)
    gs = ground_state(a, tol=1e-10)
    assert gs.energy == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-8)


def test_ground_state_shape_checks():
    with pytest.raises(ValueError):
        ground_state(np.zeros((2, 3)))


def test_occupancy_single_state():
    basis = Subspace.from_bitstrings(["0110"])
    occ = occupancy(ProjectedGroundState(-1.0, np.array([1.0])), basis)
    assert np.array_equal(occ, [0, 1, 1, 0])


def test_occupancy_complement_pair_is_half():
    basis = Subspace.from_bitstrings(["0101", "1010"])
    occ = occupancy(ProjectedGroundState(-1.0, np.array([0.6, 0.8])), basis)
    assert np.allclose(occ, [0.64, 0.36, 0.64, 0.36])
    occ = occupancy(ProjectedGroundState(-1.0, np.array([1, 1]) / np.sqrt(2)), basis)
    assert np.allclose(occ, 0.5)


@pytest.mark.parametrize(
    "h", [_h(build_chain, 10, delta=2.0), _h(build_kagome, 2, 2, delta=2.0), _h(build_square_j1j2, 3, 4, j2=0.5)],
    ids=["chain10", "kagome12", "square12"],
)
def test_complement_closed_basis_forces_half_occupancy(h):
    n = h.n_sites
    rng = np.random.default_rng(1)
    full = sector_basis(n).states
    picks = rng.choice(full, size=min(len(full), 120), replace=False)
    basis = Subspace(np.union1d(picks, bits.complement(picks, n)), n)
    gs = ground_state(project(h, basis), tol=1e-12)
    assert np.allclose(occupancy(gs, basis), 0.5, atol=1e-10)


@pytest.mark.parametrize(
    "h", [_h(build_chain, 12, delta=2.0), _h(build_kagome, 2, 2, delta=1.0), _h(build_square_j1j2, 3, 4, j2=0.5)],
    ids=["chain12", "kagome12", "square12"],
)
def test_variational_nesting(h):
    n = h.n_sites
    full = sector_basis(n).states
    rng = np.random.default_rng(2)
    order = rng.permutation(full)
    exact = ground_state(project(h, Subspace(full, n)), tol=1e-12).energy
    energies = [ground_state(project(h, Subspace(order[:m], n)), tol=1e-12).energy for m in (10, 60, 200, 500)]
    assert all(a >= b - 1e-9 for a, b in zip(energies, energies[1:]))
    assert energies[-1] >= exact - 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 60))
def test_spin_flip_spectrum_invariance(seed, size):
    h = _h(build_kagome, 2, 1, delta=1.5)
    rng = np.random.default_rng(seed)
    states = rng.choice(1 << 6, size=size, replace=False)
    a = ground_state(project(h, Subspace(states, 6)), tol=1e-12).energy
    b = ground_state(project(h, Subspace(bits.complement(states, 6), 6)), tol=1e-12).energy
    assert a == pytest.approx(b, abs=1e-9)


def test_permutation_of_input_order_irrelevant():
    h = _h(build_chain, 8)
    strings = [s for s in all_bitstrings(8) if s.count("1") == 4][:40]
    a = ground_state(project(h, Subspace.from_bitstrings(strings))).energy
    b = ground_state(project(h, Subspace.from_bitstrings(strings[::-1]))).energy
    assert a == b
