"""Bitstring subspaces, projected Hamiltonians and their ground states."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from . import bits
from .hamiltonian import PauliSum, diagonal, flip_moves

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DENSE_CUTOFF = 64
LANCZOS_MEMORY_BYTES = 1 << 30


def _pair_update_numpy(y, x, r, c, value):
    y[r] += value * x[c]
    y[c] += value * x[r]


if numba is not None:

    @numba.njit(cache=True)
    def _pair_update(y, x, r, c, value):
        for k in range(r.shape[0]):
            a = r[k]
            b = c[k]
            y[a] += value * x[b]
            y[b] += value * x[a]

else:  # pragma: no cover
    _pair_update = _pair_update_numpy


class EigensolverError(RuntimeError):
    """Lanczos did not reach the residual tolerance."""

    def __init__(self, message: str, residual: float, energy: float):
        super().__init__(f"{message} (best residual {residual:.3e}, energy {energy:.10f})")
        self.residual = residual
        self.energy = energy


@dataclass
class Subspace:
    """Sorted, deduplicated basis of bitstrings stored as integer codes."""

    states: np.ndarray
    n_sites: int

    def __post_init__(self):
        states = np.unique(np.asarray(self.states, dtype=np.int64))
        if len(states) and (states[0] < 0 or states[-1] >> self.n_sites):
            raise ValueError(f"states do not fit in {self.n_sites} bits")
        self.states = states

    @classmethod
    def from_bitstrings(cls, bitstrings: Iterable[str], n_sites: int | None = None) -> "Subspace":
        bitstrings = list(bitstrings)
        if n_sites is None:
            if not bitstrings:
                raise ValueError("n_sites required for an empty basis")
            n_sites = len(bitstrings[0])
        for s in bitstrings:
            bits.check_bitstring(s, n_sites)
        return cls(bits.strings_to_ints(bitstrings), n_sites)

    def __len__(self) -> int:
        return len(self.states)

    def __contains__(self, bitstring: str) -> bool:
        return bitstring in self.index

    @property
    def basis(self) -> list[str]:
        return bits.ints_to_strings(self.states, self.n_sites)

    @cached_property
    def index(self) -> dict[str, int]:
        return {s: k for k, s in enumerate(self.basis)}

    def lookup(self, states: np.ndarray) -> np.ndarray:
        """Positions of ``states`` in the basis, ``-1`` where absent."""
        states = np.asarray(states, dtype=np.int64)
        if len(self.states) == 0:
            return np.full(states.shape, -1, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self.states, states), len(self.states) - 1)
        return np.where(self.states[pos] == states, pos, -1)


def project(h: PauliSum, basis: Subspace) -> sp.csr_matrix:
    """Restriction of ``h`` to ``basis``: entries ``<b_r|H|b_c>`` for basis pairs only."""
    if len(basis) == 0:
        raise ValueError("cannot project onto an empty basis")
    if basis.n_sites != h.n_sites:
        raise ValueError("basis and Hamiltonian disagree on n_sites")
    dim = len(basis)
    diag = diagonal(h, basis.states)
    rows, cols, vals = [np.arange(dim)], [np.arange(dim)], [diag]
    for r, partners, value in flip_moves(h, basis.states):
        c = basis.lookup(partners)
        keep = c >= 0
        rows.append(r[keep])
        cols.append(c[keep])
        vals.append(np.full(int(keep.sum()), value))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return mat.tocsr()


class ProjectedOperator:
    """Matrix-free form of ``project`` with one index pair array per bond.

    Each bond's flip is an involution, so its pair list touches every basis
    state at most once; that keeps the fancy-indexed updates race-free.
    """

    def __init__(self, h: PauliSum, basis: Subspace):
        if len(basis) == 0:
            raise ValueError("cannot project onto an empty basis")
        self.shape = (len(basis), len(basis))
        self.dtype = np.dtype(float)
        self.diag = diagonal(h, basis.states)
        idx_type = np.int32 if len(basis) < 2**31 else np.int64
        self.pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
        for r, partners, value in flip_moves(h, basis.states):
            c = basis.lookup(partners)
            keep = c > r
            self.pairs.append((r[keep].astype(idx_type), c[keep].astype(idx_type), value))

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=float)
        y = self.diag * x
        for r, c, value in self.pairs:
            _pair_update(y, x, r, c, value)
        return y

    def diagonal(self) -> np.ndarray:
        return self.diag.copy()

    def toarray(self) -> np.ndarray:
        out = np.diag(self.diag)
        for r, c, value in self.pairs:
            out[r, c] += value
            out[c, r] += value
        return out


@dataclass
class ProjectedGroundState:
    energy: float
    vector: np.ndarray
    residual: float = 0.0
    matvecs: int = 0
    info: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.vector)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _as_dense(mat) -> np.ndarray:
    if isinstance(mat, np.ndarray):
        return mat
    return mat.toarray()


def _dense_ground_state(mat) -> ProjectedGroundState:
    a = _as_dense(mat).astype(float)
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    vec = _fix_sign(v[:, 0])
    res = float(np.linalg.norm(a @ vec - w[0] * vec))
    return ProjectedGroundState(float(w[0]), vec, res, 0, {"method": "dense"})


def lanczos(
    mat,
    *,
    tol: float = 1e-8,
    max_matvecs: int | None = None,
    max_basis: int | None = None,
    v0: np.ndarray | None = None,
    seed: int = 0,
) -> ProjectedGroundState:
    """Lowest eigenpair by thick-restart Lanczos with full reorthogonalization.

    Every new vector is orthogonalized twice against the whole stored basis
    (classical Gram-Schmidt with one repeat). When the basis reaches
    ``max_basis`` vectors, the lowest half of the Ritz vectors are kept and the
    projected matrix becomes their Ritz values plus one coupling row.
    Converges when ``||H v - E v|| <= tol * max(1, |E|)``.
    """
    n = mat.shape[0]
    if max_basis is None:
        max_basis = int(np.clip(LANCZOS_MEMORY_BYTES // (8 * max(n, 1)), 12, 80))
    m = max(2, min(n, max_basis))
    keep = max(1, m // 2)
    if max_matvecs is None:
        max_matvecs = min(10 * n, 20000)
    max_matvecs = max(max_matvecs, m)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) if v0 is None else np.asarray(v0, dtype=float).copy()
    v /= np.linalg.norm(v)

    V = np.empty((m + 1, n))
    T = np.zeros((m + 1, m + 1))
    V[0] = v
    start = 0
    matvecs = 0
    best = (np.inf, np.nan)
    while True:
        for j in range(start, m):
            w = mat @ V[j]
            matvecs += 1
            basis = V[: j + 1]
            coef = basis @ w
            w -= coef @ basis
            extra = basis @ w
            w -= extra @ basis
            T[: j + 1, j] = coef + extra
            beta = float(np.linalg.norm(w))

            tj = T[: j + 1, : j + 1]
            theta, S = np.linalg.eigh(0.5 * (tj + tj.T))
            est = beta * abs(S[j, 0])
            scale = max(1.0, abs(theta[0]))
            if est < best[0]:
                best = (est, float(theta[0]))
            invariant = beta <= 1e-12 * max(scale, float(np.abs(theta).max()))
            if est <= tol * scale or invariant:
                vec = S[:, 0] @ basis
                vec /= np.linalg.norm(vec)
                hv = mat @ vec
                matvecs += 1
                energy = float(vec @ hv)
                res = float(np.linalg.norm(hv - energy * vec))
                if res <= tol * max(1.0, abs(energy)):
                    return ProjectedGroundState(
                        energy, _fix_sign(vec), res, matvecs, {"method": "lanczos", "basis": m}
                    )
                # orthogonality drift: restart from the Ritz vector
                V[0] = vec
                T[:] = 0.0
                start = 0
                break
            if matvecs >= max_matvecs:
                raise EigensolverError(f"Lanczos not converged after {matvecs} matvecs", best[0], best[1])
            if j + 1 < m:
                T[j + 1, j] = beta
                V[j + 1] = w / beta
            else:
                V[m] = w / beta
        else:
            # thick restart
            ritz = S[:, :keep].T @ V[:m]
            V[:keep] = ritz
            V[keep] = V[m]
            coupling = beta * S[m - 1, :keep]
            T[:] = 0.0
            T[np.arange(keep), np.arange(keep)] = theta[:keep]
            T[keep, :keep] = coupling
            T[:keep, keep] = coupling
            start = keep
            continue
        if start == 0 and matvecs >= max_matvecs:
            raise EigensolverError(f"Lanczos not converged after {matvecs} matvecs", best[0], best[1])


def ground_state(mat, *, tol: float = 1e-8, dense_cutoff: int = DENSE_CUTOFF, **kwargs) -> ProjectedGroundState:
    """Lowest eigenpair of a real symmetric matrix or :class:`ProjectedOperator`."""
    dim = mat.shape[0]
    if dim < 1 or mat.shape != (dim, dim):
        raise ValueError(f"need a non-empty square matrix, got shape {mat.shape}")
    if dim <= dense_cutoff:
        return _dense_ground_state(mat)
    return lanczos(mat, tol=tol, **kwargs)


def occupancy(gs: ProjectedGroundState, basis: Subspace) -> np.ndarray:
    """Probability that each site reads 1, weighting basis states by squared amplitude."""
    if gs.dim != len(basis):
        raise ValueError(f"vector length {gs.dim} does not match basis size {len(basis)}")
    weights = gs.vector**2
    weights = weights / weights.sum()
    n = basis.n_sites
    occ = np.array([weights @ ((basis.states >> bits.site_shift(i, n)) & 1) for i in range(n)], dtype=float)
    return np.clip(occ, 0.0, 1.0)
