import itertools

import numpy as np
import pytest

from oracles import dense_hamiltonian
from spinkrylov.hamiltonian import ModelParams, build_xxz
from spinkrylov.lattice import build_chain, build_kagome, build_square_j1j2
from spinkrylov.simulator import prepare_product
from spinkrylov.warmstart import ProductState, coordinate_descent, optimize, product_energy


def _expectation(state, bonds, params):
    psi = prepare_product(state).amplitudes
    return float(np.real(psi.conj() @ dense_hamiltonian(build_xxz(bonds, params)) @ psi))


def test_neel_pair_energy():
    _, bonds = build_chain(2)
    assert product_energy(ProductState.neel(2), bonds, ModelParams(delta=2.0)) == pytest.approx(-2.0)


def test_all_up_pair_energy():
    _, bonds = build_chain(2)
    up = ProductState(np.zeros(2), np.zeros(2))
    assert product_energy(up, bonds, ModelParams(delta=2.0)) == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(5))
def test_product_energy_matches_statevector_expectation(seed):
    rng = np.random.default_rng(seed)
    _, bonds = build_chain(4)
    params = ModelParams(delta=2.0)
    state = ProductState(rng.uniform(0, np.pi, 4), rng.uniform(0, 2 * np.pi, 4))
    assert product_energy(state, bonds, params) == pytest.approx(_expectation(state, bonds, params), abs=1e-12)


@pytest.mark.parametrize(
    "bonds,params",
    [
        (build_kagome(1, 2)[1], ModelParams(delta=1.0)),
        (build_square_j1j2(2, 3)[1], ModelParams(j2=0.5, delta=2.0)),
        (build_chain(9)[1], ModelParams(delta=0.5)),
    ],
)
def test_product_energy_spot_checks(bonds, params):
    rng = np.random.default_rng(11)
    for _ in range(3):
        n = bonds.n_sites
        state = ProductState(rng.uniform(0, np.pi, n), rng.uniform(0, 2 * np.pi, n))
        assert product_energy(state, bonds, params) == pytest.approx(_expectation(state, bonds, params), abs=1e-10)


def test_single_bond_optimum_matches_exhaustive_grid():
    _, bonds = build_chain(2)
    params = ModelParams(delta=2.0)
    grid = 8
    thetas = np.linspace(0, np.pi, grid)
    phis = np.linspace(0, 2 * np.pi, grid, endpoint=False)
    best = min(
        product_energy(ProductState([t1, t2], [p1, p2]), bonds, params)
        for t1, t2, p1, p2 in itertools.product(thetas, thetas, phis, phis)
    )
    assert best == pytest.approx(-2.0)
    res = coordinate_descent(bonds, params, grid_points=grid)
    assert res.energy == pytest.approx(best)


def test_chain_12_not_above_neel():
    _, bonds = build_chain(12)
    params = ModelParams(delta=2.0)
    res = coordinate_descent(bonds, params)
    assert res.energy <= -22.0 + 1e-12
    assert res.history[0] == pytest.approx(-22.0)


@pytest.mark.parametrize(
    "bonds,params",
    [
        (build_kagome(2, 2)[1], ModelParams(delta=2.0)),
        (build_square_j1j2(3, 4)[1], ModelParams(j2=0.5, delta=2.0)),
        (build_kagome(2, 2)[1], ModelParams(delta=1.0)),
    ],
)
def test_descent_is_monotone_and_deterministic(bonds, params):
    a = coordinate_descent(bonds, params, grid_points=12)
    b = coordinate_descent(bonds, params, grid_points=12)
    assert np.all(np.diff(a.history) < 0)
    neel = product_energy(ProductState.neel(bonds.n_sites), bonds, params)
    assert a.energy <= neel
    assert a.history[0] == pytest.approx(neel)
    assert a.energy == pytest.approx(a.history[-1], abs=1e-9)
    assert np.array_equal(a.state.theta, b.state.theta) and np.array_equal(a.state.phi, b.state.phi)


def test_kagome_warm_start_improves_on_neel():
    _, bonds = build_kagome(2, 2)
    params = ModelParams(delta=2.0)
    res = coordinate_descent(bonds, params)
    assert res.energy < product_energy(ProductState.neel(12), bonds, params)


def test_optimize_returns_state_and_validates_grid():
    _, bonds = build_chain(4)
    state = optimize(bonds, ModelParams(), grid_points=4, max_sweeps=3)
    assert state.n_sites == 4
    with pytest.raises(ValueError):
        optimize(bonds, ModelParams(), grid_points=1)


def test_angle_count_mismatch():
    _, bonds = build_chain(4)
    with pytest.raises(ValueError):
        product_energy(ProductState.neel(3), bonds, ModelParams())
