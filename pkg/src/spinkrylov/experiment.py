"""Experiment configuration and the end-to-end runners behind the CLI."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import baselines, lattice, simulator, skqd, warmstart
from .hamiltonian import ModelParams, PauliSum, build_xxz, timestep

INITIAL_STATES = ("dimer", "warmstart")


class ConfigError(ValueError):
    """Rejected before any computation starts."""


@dataclass
class ExperimentConfig:
    geometry: str = "chain"
    dims: tuple[int, ...] = (12,)
    j1: float = 1.0
    j2: float = 0.0
    delta: float = 2.0
    kmax: int = 20
    krylov_orders: tuple[int, ...] | None = None
    initial_states: tuple[str, ...] = INITIAL_STATES
    shots: int = 100_000
    noise: float = 0.0
    grid_points: int = warmstart.DEFAULT_GRID_POINTS
    max_sweeps: int = 50
    max_iterations: int = 20
    carry_over_fraction: float = 0.30
    degeneracy_expansion: bool = True
    carry_over_enabled: bool = True
    carry_over_mode: str = "replace"
    recovery_enabled: bool = True
    batch_size: int | None = None
    convergence_tol: float = 1e-8
    occupancy_mode: str = "resolve"
    ed_max_sites: int = baselines.ED_MAX_SITES
    seed: int = 0
    out: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("dims", "krylov_orders", "initial_states"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("dims", "krylov_orders", "initial_states"):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(range(self.kmax + 1)) if self.krylov_orders is None else tuple(self.krylov_orders)

    def params(self) -> ModelParams:
        return ModelParams(self.j1, self.j2, self.delta)

    def skqd_config(self) -> skqd.SkqdConfig:
        return skqd.SkqdConfig(
            max_iterations=self.max_iterations,
            carry_over_fraction=self.carry_over_fraction,
            degeneracy_expansion=self.degeneracy_expansion,
            carry_over_enabled=self.carry_over_enabled,
            carry_over_mode=self.carry_over_mode,
            recovery_enabled=self.recovery_enabled,
            batch_size=self.batch_size,
            seed=self.seed,
            convergence_tol=self.convergence_tol,
            occupancy_mode=self.occupancy_mode,
        )

    def build(self):
        """Lattice, bonds and Hamiltonian; raises ConfigError on bad geometry."""
        try:
            spec, bonds = lattice.build_lattice(self.geometry, self.dims)
            h = build_xxz(bonds, self.params())
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return spec, bonds, h

    def validate(self, simulate: bool = False) -> None:
        spec, _, _ = self.build()
        if spec.n_sites % 2:
            raise ConfigError(f"{spec.n_sites} sites: the Sz = 0 sector needs an even site count")
        if not simulate:
            return
        if spec.n_sites > simulator.MAX_SITES:
            raise ConfigError(f"{spec.n_sites} sites exceeds the statevector cap of {simulator.MAX_SITES}")
        bad = set(self.initial_states) - set(INITIAL_STATES)
        if bad or not self.initial_states:
            raise ConfigError(f"initial_states must be a non-empty subset of {INITIAL_STATES}, got {self.initial_states}")
        if self.kmax < 0 or any(k < 0 for k in self.orders) or not self.orders:
            raise ConfigError("Krylov orders must be non-negative")
        n_circuits = len(self.initial_states) * len(self.orders)
        if self.shots < n_circuits:
            raise ConfigError(f"{self.shots} shots cannot cover {n_circuits} circuits")
        if not 0.0 <= self.noise < 1.0:
            raise ConfigError("noise flip probability must lie in [0, 1)")
        if self.grid_points < 2 or self.max_sweeps < 1:
            raise ConfigError("grid_points must be >= 2 and max_sweeps >= 1")
        try:
            self.skqd_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def shot_split(total: int, n_states: int, orders) -> dict[tuple[int, int], int]:
    """Even split over ``(k, state)`` circuits; the remainder goes to the lowest k first."""
    circuits = [(k, s) for k in sorted(orders) for s in range(n_states)]
    base, rem = divmod(total, len(circuits))
    return {c: base + (1 if idx < rem else 0) for idx, c in enumerate(circuits)}


def circuit_seed(seed: int, state_index: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, state_index, k]).generate_state(1)[0])


def initial_state(name: str, bonds, params: ModelParams, config: ExperimentConfig):
    if name == "dimer":
        return simulator.prepare_dimer(bonds.n_sites), {}
    res = warmstart.coordinate_descent(bonds, params, config.grid_points, config.max_sweeps)
    meta = {"energy": res.energy, "sweeps": res.sweeps, "grid_points": res.grid_points, "visit_order": "index"}
    return simulator.prepare_product(res.state), meta


def generate_samples(config: ExperimentConfig, bonds=None, h: PauliSum | None = None) -> list[simulator.SampleSet]:
    """Sample every ``(initial_state, k)`` Krylov circuit."""
    if bonds is None or h is None:
        _, bonds, h = config.build()
    params = config.params()
    split = shot_split(config.shots, len(config.initial_states), config.orders)
    noise = simulator.NoiseModel(config.noise)
    orders = set(config.orders)
    dt = timestep(h)
    out = []
    for si, name in enumerate(config.initial_states):
        v, prep_meta = initial_state(name, bonds, params, config)
        for k, state in simulator.krylov_states(v, h, max(orders), dt):
            if k not in orders:
                continue
            seed = circuit_seed(config.seed, si, k)
            s = simulator.sample(state, split[(k, si)], noise, seed)
            s.metadata.update(
                geometry=config.geometry, dims=list(config.dims), delta=config.delta, j2=config.j2,
                k=k, initial_state=name, dt=dt, prep=prep_meta,
            )
            out.append(s)
    return out


def _header(config: ExperimentConfig) -> str:
    return "# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n"


def _write(out: str | None, name: str, text: str) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)
    return path / name


def cmd_ed(config: ExperimentConfig) -> dict:
    config.validate()
    spec, _, h = config.build()
    t0 = time.perf_counter()
    res = baselines.exact_ground_state(h, max_sites=config.ed_max_sites)
    report = {
        "geometry": config.geometry,
        "dims": list(config.dims),
        "n_sites": spec.n_sites,
        "energy": res.energy,
        "sector_dimension": baselines.sector_dimension(spec.n_sites),
        "residual": res.residual,
        "wall_time_s": time.perf_counter() - t0,
        "config": config.to_dict(),
    }
    _write(config.out, "ed.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_warmstart(config: ExperimentConfig) -> dict:
    config.validate()
    _, bonds, _ = config.build()
    res = warmstart.coordinate_descent(bonds, config.params(), config.grid_points, config.max_sweeps)
    report = {
        "energy": res.energy,
        "neel_energy": warmstart.product_energy(warmstart.ProductState.neel(bonds.n_sites), bonds, config.params()),
        "sweeps": res.sweeps,
        "grid_points": res.grid_points,
        "visit_order": "index",
        "angles": res.state.to_dict(),
        "history": res.history,
        "config": config.to_dict(),
    }
    _write(config.out, "warmstart.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_skqd(config: ExperimentConfig, reference_energy: float | None = None) -> dict:
    """Simulate the Krylov circuits, run the loop, write trace and summary.

    The ED reference is computed when the sector fits under ``ed_max_sites``
    and no reference is passed in.
    """
    config.validate(simulate=True)
    spec, bonds, h = config.build()
    t0 = time.perf_counter()
    samples = generate_samples(config, bonds, h)
    t_sample = time.perf_counter() - t0
    if reference_energy is None and spec.n_sites <= config.ed_max_sites:
        reference_energy = baselines.exact_ground_state(h, max_sites=config.ed_max_sites).energy
    t1 = time.perf_counter()
    scfg = config.skqd_config()
    result = skqd.run(h, samples, scfg, reference_energy)
    t_loop = time.perf_counter() - t1

    trace = _header(config) + skqd.trace_csv(result.trace)
    summ = skqd.summary(result, scfg, reference_energy)
    summ["experiment"] = config.to_dict()
    summ["n_circuits"] = len(samples)
    summ["n_physical_shots"] = sum(
        c for s in samples for b, c in s.counts.items() if b.count("1") == spec.n_sites // 2
    )
    summ["timing_s"] = {"sampling": t_sample, "skqd": t_loop}
    _write(config.out, "trace.csv", trace)
    _write(config.out, "summary.json", json.dumps(summ, indent=2, sort_keys=True) + "\n")
    _write(config.out, "lattice.json", json.dumps(lattice.to_dict(spec, bonds), indent=2) + "\n")
    summ["trace_csv"] = trace
    return summ


def cmd_sparsity(config: ExperimentConfig, deltas, fractions) -> list[tuple[float, float, float]]:
    config.validate()
    rows = []
    for delta in deltas:
        cfg = ExperimentConfig.from_dict({**config.to_dict(), "delta": float(delta)})
        _, _, h = cfg.build()
        for f, err in baselines.sparsity_curve(h, fractions, max_sites=config.ed_max_sites):
            rows.append((float(delta), f, err))
    text = _header(config) + "delta,fraction,relative_error\n"
    text += "".join(f"{d!r},{f!r},{e!r}\n" for d, f, e in rows)
    _write(config.out, "sparsity.csv", text)
    return rows


def cmd_scaling(start: int, stop: int, step: int = 2, out: str | None = None) -> list[tuple[int, int, float]]:
    rows = baselines.scaling_table(range(start, stop + 1, step))
    text = "# config: " + json.dumps({"start": start, "stop": stop, "step": step}) + "\n"
    text += "n_sites,sector_dimension,asymptotic_ratio\n"
    text += "".join(f"{n},{d},{r!r}\n" for n, d, r in rows)
    _write(out, "scaling.csv", text)
    return rows
