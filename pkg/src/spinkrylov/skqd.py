"""The sample-based Krylov diagonalization loop.

Each iteration projects the Hamiltonian onto the physical (Sz = 0) sampled
bitstrings plus whatever configuration recovery has produced, diagonalizes,
and turns the ground vector into a per-site occupancy that drives the next
round of recovery.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import bits
from .hamiltonian import PauliSum
from .simulator import SampleSet
from .subspace import EigensolverError, ProjectedGroundState, Subspace, ground_state, occupancy, project

RECOVERY_EPS = 1e-6
TRACE_COLUMNS = ("iteration", "energy", "subspace_dim", "n_recovered", "relative_error", "n_carry_over")


@dataclass
class SkqdConfig:
    """Loop settings. ``degeneracy_expansion`` switches both complement
    expansion before projection and canonical compression before the
    occupancy estimate; ``carry_over_mode`` is ``"replace"`` or ``"accumulate"``.
    ``occupancy_mode="resolve"`` re-diagonalizes on the compressed basis to get
    the occupancy; ``"restrict"`` reads it off the ground vector restricted to
    that basis, saving one eigensolve.
    """

    max_iterations: int = 20
    carry_over_fraction: float = 0.30
    degeneracy_expansion: bool = True
    carry_over_enabled: bool = True
    carry_over_mode: str = "replace"
    recovery_enabled: bool = True
    batch_size: int | None = None
    seed: int = 0
    convergence_tol: float = 1e-8
    occupancy_mode: str = "resolve"
    eig_tol: float = 1e-10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 <= self.carry_over_fraction <= 1.0:
            raise ValueError("carry_over_fraction must lie in [0, 1]")
        if self.carry_over_mode not in ("replace", "accumulate"):
            raise ValueError(f"unknown carry_over_mode {self.carry_over_mode!r}")
        if self.occupancy_mode not in ("restrict", "resolve"):
            raise ValueError(f"unknown occupancy_mode {self.occupancy_mode!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")


@dataclass
class IterationRecord:
    iteration: int
    energy: float
    subspace_dim: int
    n_recovered: int
    relative_error: float | None = None
    n_carry_over: int = 0


@dataclass
class SkqdResult:
    ground_state: ProjectedGroundState
    trace: list[IterationRecord]
    basis: Subspace
    occupancy: np.ndarray
    converged: bool = False
    carry_over: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter((self.ground_state, self.trace))

    @property
    def energy(self) -> float:
        return self.ground_state.energy


def pool(samples: Iterable[SampleSet]) -> SampleSet:
    samples = list(samples)
    if not samples:
        raise ValueError("no sample sets given")
    n = samples[0].n_sites
    merged: dict[str, int] = {}
    for s in samples:
        if s.n_sites != n:
            raise ValueError("sample sets disagree on n_sites")
        for k, c in s.counts.items():
            merged[k] = merged.get(k, 0) + c
    return SampleSet(merged, n)


def filter_sz0(samples: SampleSet) -> tuple[SampleSet, SampleSet]:
    """Split into Hamming weight ``N/2`` (physical) and everything else."""
    n = samples.n_sites
    if n % 2:
        raise ValueError(f"Sz = 0 filtering needs an even number of sites, got {n}")
    physical, unphysical = {}, {}
    for k, c in samples.counts.items():
        (physical if k.count("1") == n // 2 else unphysical)[k] = c
    return SampleSet(physical, n), SampleSet(unphysical, n)


def _complements_present(states: np.ndarray, n: int) -> np.ndarray:
    states = np.unique(states)
    comp = bits.complement(states, n)
    pos = np.minimum(np.searchsorted(states, comp), len(states) - 1)
    return states, states[pos] == comp


def _expand(states: np.ndarray, n: int) -> np.ndarray:
    return np.union1d(states, bits.complement(states, n))


def _canonical_mask(states: np.ndarray, n: int) -> np.ndarray:
    """True for members to keep: drop the leading-1 member of each complement pair."""
    if len(states) == 0:
        return np.zeros(0, dtype=bool)
    sorted_states, paired = _complements_present(states, n)
    assert np.array_equal(sorted_states, states), "states must be sorted and unique"
    leading_one = (states >> (n - 1)) & 1
    return ~(paired & (leading_one == 1))


def expand_complements(basis: set[str]) -> set[str]:
    out = set(basis)
    table = str.maketrans("01", "10")
    out.update(s.translate(table) for s in basis)
    return out


def canonical_compress(basis: set[str]) -> set[str]:
    table = str.maketrans("01", "10")
    return {s for s in basis if not (s[0] == "1" and s.translate(table) in basis)}


def recover(unphysical: SampleSet, occ: np.ndarray, seed=0, eps: float = RECOVERY_EPS) -> SampleSet:
    """Repair each bitstring to Hamming weight ``N/2`` using the occupancy estimate.

    Overweight strings lose 1s one at a time, choosing among set bits with
    probability proportional to ``1 - occ[i] + eps``; underweight strings gain
    1s with probability proportional to ``occ[i] + eps``. The sequential draw
    is realized in one shot: each eligible bit gets an exponential clock with
    rate equal to its weight and the earliest clocks flip, which has the same
    law as repeated weighted selection without replacement.
    """
    n = unphysical.n_sites
    occ = np.asarray(occ, dtype=float)
    if occ.shape != (n,):
        raise ValueError(f"occupancy has shape {occ.shape}, expected ({n},)")
    if not unphysical.counts:
        return SampleSet({}, n)
    states, counts = unphysical.to_arrays()
    b = bits.bit_matrix(states, n)
    weight = b.sum(axis=1).astype(np.int64)
    need = np.abs(weight - n // 2)
    down = (weight > n // 2)[:, None]
    eligible = np.where(down, b == 1, b == 0)
    rate = np.where(down, 1.0 - occ + eps, occ + eps)
    rng = np.random.default_rng(seed)
    clocks = rng.exponential(size=b.shape) / rate
    clocks[~eligible] = np.inf
    order = np.argsort(clocks, axis=1, kind="stable")
    rank = np.empty_like(order)
    np.put_along_axis(rank, order, np.arange(n)[None, :].repeat(len(states), axis=0), axis=1)
    repaired = bits.from_bit_matrix(b ^ (rank < need[:, None]).astype(np.uint8))
    out_states, inverse = np.unique(repaired, return_inverse=True)
    out_counts = np.bincount(inverse, weights=counts).astype(np.int64)
    return SampleSet.from_arrays(out_states, out_counts, n)


def _top_fraction(states: np.ndarray, freq: np.ndarray, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Most frequent ``ceil(fraction * len)`` entries; ties go to the smaller code."""
    if len(states) == 0 or fraction <= 0:
        return states[:0], freq[:0]
    k = min(len(states), math.ceil(fraction * len(states) - 1e-12))
    order = np.lexsort((states, -freq))[:k]
    return states[order], freq[order]


def _merge(*parts: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    states = np.concatenate([p[0] for p in parts]).astype(np.int64)
    weights = np.concatenate([p[1] for p in parts]).astype(float)
    if len(states) == 0:
        return states, weights
    uniq, inverse = np.unique(states, return_inverse=True)
    return uniq, np.bincount(inverse, weights=weights)


def _sample_occupancy(samples: SampleSet) -> np.ndarray:
    states, counts = samples.to_arrays()
    return (bits.bit_matrix(states, samples.n_sites).T @ counts) / counts.sum()


def _restricted_occupancy(gs: ProjectedGroundState, basis: Subspace, mask: np.ndarray) -> np.ndarray:
    vec = gs.vector[mask]
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        return occupancy(gs, basis)
    sub = Subspace(basis.states[mask], basis.n_sites)
    return occupancy(ProjectedGroundState(gs.energy, vec / norm), sub)


def run(
    h: PauliSum,
    samples_by_circuit: Sequence[SampleSet],
    config: SkqdConfig | None = None,
    reference_energy: float | None = None,
) -> SkqdResult:
    """Iterate recovery and projected diagonalization on pooled circuit samples.

    Iteration ``t`` uses: the physical samples, the strings recovered with the
    occupancy from iteration ``t-1``, and (if enabled) the carry-over, the top
    fraction of the recovered strings from the round before. With degeneracy
    expansion on, complements are added before projection and the occupancy is
    taken on the canonical (compressed) basis.
    """
    config = config or SkqdConfig()
    pooled = pool(samples_by_circuit)
    if pooled.total_shots == 0:
        raise ValueError("sample sets are empty")
    n = h.n_sites
    if pooled.n_sites != n:
        raise ValueError("samples and Hamiltonian disagree on n_sites")
    physical, unphysical = filter_sz0(pooled)
    phys = physical.to_arrays()
    empty_int = np.zeros(0, dtype=np.int64)
    carry = (empty_int, np.zeros(0))
    occ = None
    if len(physical) == 0:
        occ = _sample_occupancy(pooled)

    trace: list[IterationRecord] = []
    gs = sub = None
    prev_energy = None
    converged = False
    for t in range(config.max_iterations):
        rec = (empty_int, np.zeros(0))
        if occ is not None and config.recovery_enabled and len(unphysical):
            repaired = recover(unphysical, occ, seed=[config.seed, t])
            rec = repaired.to_arrays()
        states, weights = _merge(phys, rec, carry if config.carry_over_enabled else (empty_int, np.zeros(0)))
        if len(states) == 0:
            raise ValueError("no physical bitstrings available to build a subspace")

        if config.degeneracy_expansion:
            comp = bits.complement(states, n)
            states, weights = _merge((states, weights), (comp, weights))
        if config.batch_size is not None and len(states) > config.batch_size:
            keep = np.lexsort((states, -weights))[: config.batch_size]
            states, weights = states[keep], weights[keep]

        sub = Subspace(states, n)
        try:
            gs = ground_state(project(h, sub), tol=config.eig_tol)
        except EigensolverError as exc:
            raise EigensolverError(f"iteration {t}: {exc}", exc.residual, exc.energy) from exc

        if config.degeneracy_expansion:
            mask = _canonical_mask(sub.states, n)
            if config.occupancy_mode == "restrict":
                occ = _restricted_occupancy(gs, sub, mask)
            else:
                small = Subspace(sub.states[mask], n)
                occ = occupancy(ground_state(project(h, small), tol=config.eig_tol), small)
        else:
            occ = occupancy(gs, sub)

        n_carry = len(carry[0]) if config.carry_over_enabled else 0
        if config.carry_over_enabled:
            top = _top_fraction(rec[0], rec[1], config.carry_over_fraction)
            carry = top if config.carry_over_mode == "replace" else _merge(carry, top)

        rel = None
        if reference_energy is not None:
            rel = abs(gs.energy - reference_energy) / abs(reference_energy)
        trace.append(IterationRecord(t, gs.energy, len(sub), len(rec[0]), rel, n_carry))

        if prev_energy is not None and abs(gs.energy - prev_energy) < config.convergence_tol:
            converged = True
            break
        prev_energy = gs.energy

    return SkqdResult(
        gs, trace, sub, occ, converged, bits.ints_to_strings(carry[0], n) if config.carry_over_enabled else []
    )


def trace_csv(trace: Sequence[IterationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in trace:
        writer.writerow([
            r.iteration,
            repr(r.energy),
            r.subspace_dim,
            r.n_recovered,
            "" if r.relative_error is None else repr(r.relative_error),
            r.n_carry_over,
        ])
    return buf.getvalue()


def summary(result: SkqdResult, config: SkqdConfig, reference_energy: float | None = None) -> dict:
    final = result.trace[-1]
    return {
        "final_energy": result.energy,
        "reference_energy": reference_energy,
        "relative_error": final.relative_error,
        "iterations": len(result.trace),
        "converged": result.converged,
        "subspace_dim": final.subspace_dim,
        "config": asdict(config),
        "trace": [asdict(r) for r in result.trace],
    }
