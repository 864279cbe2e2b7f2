"""Statevector stand-in for the quantum processor.

Amplitude index ``k`` corresponds to the bitstring ``format(k, f"0{n}b")``, so
site 0 is the most significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import bits
from .hamiltonian import PauliSum, timestep
from .warmstart import ProductState

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

MAX_SITES = 24


class SimulatorCapacityError(ValueError):
    """Raised when a statevector would exceed the configured site cap."""


def _check_size(n_sites: int, max_sites: int = MAX_SITES) -> None:
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    if n_sites > max_sites:
        raise SimulatorCapacityError(
            f"{n_sites} sites exceeds the statevector cap of {max_sites} (2^{max_sites} amplitudes)"
        )


@dataclass
class Statevector:
    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_sites,):
            raise ValueError(f"expected {1 << self.n_sites} amplitudes, got {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "Statevector":
        return Statevector(self.amplitudes.copy(), self.n_sites)

    def amplitude(self, bitstring: str) -> complex:
        return complex(self.amplitudes[bits.to_int(bitstring)])


@dataclass
class SampleSet:
    """Multiset of measured bitstrings."""

    counts: dict[str, int]
    n_sites: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, c in self.counts.items():
            if len(key) != self.n_sites:
                raise ValueError(f"bitstring {key!r} does not have length {self.n_sites}")
            if c < 0:
                raise ValueError(f"negative count for {key!r}")

    @property
    def total_shots(self) -> int:
        return sum(self.counts.values())

    def __len__(self) -> int:
        return len(self.counts)

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "total_shots": self.total_shots,
            "metadata": self.metadata,
            "counts": dict(sorted(self.counts.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SampleSet":
        counts = {str(k): int(v) for k, v in data["counts"].items()}
        out = cls(counts, int(data["n_sites"]), dict(data.get("metadata", {})))
        if "total_shots" in data and int(data["total_shots"]) != out.total_shots:
            raise ValueError("total_shots does not match the sum of counts")
        return out

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_arrays(cls, states: np.ndarray, counts: np.ndarray, n_sites: int, metadata=None) -> "SampleSet":
        keys = bits.ints_to_strings(states, n_sites)
        return cls({k: int(c) for k, c in zip(keys, counts) if c > 0}, n_sites, dict(metadata or {}))

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted integer codes and their counts."""
        states = bits.strings_to_ints(self.counts.keys())
        counts = np.fromiter(self.counts.values(), dtype=np.int64, count=len(self.counts))
        order = np.argsort(states, kind="stable")
        return states[order], counts[order]


@dataclass(frozen=True)
class NoiseModel:
    """Independent readout bit flips."""

    flip_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.flip_prob < 1.0:
            raise ValueError(f"flip_prob must lie in [0, 1), got {self.flip_prob}")


def prepare_dimer(n_sites: int) -> Statevector:
    """Singlets (|01> - |10>)/sqrt(2) on pairs (0,1), (2,3), ..."""
    if n_sites % 2 or n_sites < 2:
        raise ValueError(f"dimer state needs an even number of sites, got {n_sites}")
    _check_size(n_sites)
    singlet = np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / np.sqrt(2.0)
    amps = np.ones(1, dtype=np.complex128)
    for _ in range(n_sites // 2):
        amps = np.kron(amps, singlet)
    return Statevector(amps, n_sites)


def prepare_product(state: ProductState) -> Statevector:
    """Tensor product of ``cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`` (an Rz.Ry circuit up to phase)."""
    _check_size(state.n_sites)
    amps = np.ones(1, dtype=np.complex128)
    for t, p in zip(state.theta, state.phi):
        amps = np.kron(amps, np.array([np.cos(t / 2.0), np.exp(1j * p) * np.sin(t / 2.0)]))
    return Statevector(amps, state.n_sites)


def bond_layers(h: PauliSum) -> list[list[int]]:
    """Greedy edge colouring of the coupled pairs, in sorted pair order.

    Returns lists of indices into ``h.couplings``; bonds in one layer share no site.
    """
    cpl = h.couplings
    layers: list[list[int]] = []
    used: list[set[int]] = []
    for k, (a, b, _, _) in enumerate(cpl.pairs()):
        for layer, sites in zip(layers, used):
            if a not in sites and b not in sites:
                layer.append(k)
                sites.update((a, b))
                break
        else:
            layers.append([k])
            used.append({a, b})
    return layers


def bond_unitary(jxy: float, jzz: float, dt: float) -> np.ndarray:
    """Exact ``exp(-i dt (jxy XX + jxy YY + jzz ZZ))`` in the {00, 01, 10, 11} basis."""
    u = np.zeros((4, 4), dtype=np.complex128)
    outer = np.exp(-1j * dt * jzz)
    inner = np.exp(1j * dt * jzz)
    c, s = np.cos(2.0 * jxy * dt), np.sin(2.0 * jxy * dt)
    u[0, 0] = u[3, 3] = outer
    u[1, 1] = u[2, 2] = inner * c
    u[1, 2] = u[2, 1] = -1j * inner * s
    return u


def _apply_bond_numpy(amps: np.ndarray, n: int, a: int, b: int, u: np.ndarray) -> None:
    view = amps.reshape(1 << a, 2, 1 << (b - a - 1), 2, 1 << (n - 1 - b))
    v00 = view[:, 0, :, 0, :]
    v11 = view[:, 1, :, 1, :]
    v01 = view[:, 0, :, 1, :]
    v10 = view[:, 1, :, 0, :]
    v00 *= u[0, 0]
    v11 *= u[3, 3]
    new01 = u[1, 1] * v01 + u[1, 2] * v10
    v10 *= u[2, 2]
    v10 += u[2, 1] * v01
    v01[...] = new01


if numba is not None:

    @numba.njit(cache=True)
    def _bond_kernel(amps, ma, mb, u):
        both = ma | mb
        for base in range(amps.shape[0]):
            if base & both:
                continue
            i01 = base | mb
            i10 = base | ma
            x01 = amps[i01]
            x10 = amps[i10]
            amps[base] *= u[0, 0]
            amps[base | both] *= u[3, 3]
            amps[i01] = u[1, 1] * x01 + u[1, 2] * x10
            amps[i10] = u[2, 1] * x01 + u[2, 2] * x10


def _apply_bond(amps: np.ndarray, n: int, a: int, b: int, u: np.ndarray) -> None:
    """Apply the Sz-conserving two-site unitary ``u`` to sites ``a < b`` in place."""
    if numba is None or n < 10:
        _apply_bond_numpy(amps, n, a, b, u)
    else:
        _bond_kernel(amps, 1 << (n - 1 - a), 1 << (n - 1 - b), u)


def trotter_step(state: Statevector, h: PauliSum, dt: float, layers=None) -> Statevector:
    """One first-order Trotter block: exact bond unitaries, layer by layer."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    out = state.copy()
    if dt == 0:
        return out
    cpl = h.couplings
    if layers is None:
        layers = bond_layers(h)
    n = state.n_sites
    for layer in layers:
        for k in layer:
            u = bond_unitary(cpl.jxy[k], cpl.jzz[k], dt)
            _apply_bond(out.amplitudes, n, int(cpl.i[k]), int(cpl.j[k]), u)
    return out


def krylov_states(v: Statevector, h: PauliSum, kmax: int, dt: float | None = None) -> Iterator[tuple[int, Statevector]]:
    """Yield ``(k, U^k v)`` for ``k = 0..kmax`` with ``U`` one Trotter block of length ``dt``."""
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    dt = timestep(h) if dt is None else dt
    layers = bond_layers(h)
    state = v
    yield 0, state
    for k in range(1, kmax + 1):
        state = trotter_step(state, h, dt, layers)
        yield k, state


def krylov_state(v: Statevector, h: PauliSum, k: int, dt: float | None = None) -> Statevector:
    if k < 0:
        raise ValueError("k must be non-negative")
    for _, state in krylov_states(v, h, k, dt):
        pass
    return state


def sample(state: Statevector, shots: int, noise: NoiseModel | None = None, seed: int = 0) -> SampleSet:
    """Born-rule sampling by inverse CDF, then independent readout flips."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    noise = noise or NoiseModel()
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(state.probabilities())
    draws = np.searchsorted(cdf, rng.random(shots) * cdf[-1], side="right")
    draws = np.minimum(draws, len(cdf) - 1).astype(np.int64)
    if noise.flip_prob > 0:
        flips = rng.random((shots, state.n_sites)) < noise.flip_prob
        draws ^= bits.from_bit_matrix(flips)
    states, counts = np.unique(draws, return_counts=True)
    meta = {"shots": shots, "seed": seed, "noise": noise.flip_prob}
    return SampleSet.from_arrays(states, counts, state.n_sites, meta)
