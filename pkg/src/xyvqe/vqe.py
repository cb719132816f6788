"""VQE driver: ansatz -> energy objective -> multi-start optimizer -> result."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import measure
from .ansatz import AnsatzSpec, Circuit, build, run_circuit
from .model import XYModel, exact_ground_energy_per_site, exact_ground_states
from .optimize import OptimizerConfig, RestartSummary, multi_start
from .qstate import fidelity
from .rng import child_rng, child_seeds

DEFAULT_RESTARTS = 10


def default_optimizer(mode: str) -> OptimizerConfig:
    if mode == "SAMPLED":
        return OptimizerConfig(method="SPSA", max_evals=4000)
    return OptimizerConfig(method="NELDER_MEAD", max_evals=20000, tolerance_f=1e-8, tolerance_x=1e-6)


@dataclass(frozen=True)
class VqeConfig:
    model: XYModel
    ansatz: AnsatzSpec
    mode: str = "EXACT"
    shots_per_setting: int = measure.DEFAULT_SHOTS
    optimizer: OptimizerConfig | None = None
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    grouping: str = "grouped"

    def __post_init__(self) -> None:
        if self.mode not in ("EXACT", "SAMPLED"):
            raise ValueError(f"mode must be EXACT or SAMPLED, got {self.mode!r}")
        if self.mode == "SAMPLED" and self.shots_per_setting < 1:
            raise ValueError("SAMPLED mode needs shots_per_setting >= 1")
        if self.ansatz.num_qubits != self.model.N:
            raise ValueError(f"ansatz has {self.ansatz.num_qubits} qubits but model has N={self.model.N}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")

    def optimizer_config(self) -> OptimizerConfig:
        opt = self.optimizer if self.optimizer is not None else default_optimizer(self.mode)
        return replace(opt, seed=self.seed)


@dataclass
class VqeResult:
    energy_per_site: float
    params: np.ndarray
    fidelity_vs_exact: float
    degenerate_reference: bool
    exact_energy_per_site: float
    history: list[tuple[int, float]]
    restarts_summary: list[RestartSummary]
    evals_used: int
    std_error: float = 0.0
    wall_time: float = field(default=0.0, compare=False)


class EnergyObjective:
    """Picklable energy function of the circuit parameters.

    In SAMPLED mode every call draws fresh shots from its own generator;
    :meth:`spawn` hands each restart an independent stream.
    """

    def __init__(self, circuit: Circuit, model: XYModel, mode: str, shots: int, grouping: str, seed: int, stream: int = 0):
        self.circuit = circuit
        self.model = model
        self.mode = mode
        self.shots = shots
        self.grouping = grouping
        self.seed = seed
        self.stream = stream
        self.rng = child_rng(seed, stream, 2) if mode == "SAMPLED" else None

    def spawn(self, index: int) -> "EnergyObjective":
        return EnergyObjective(self.circuit, self.model, self.mode, self.shots, self.grouping, self.seed, index)

    def estimate(self, x) -> measure.EnergyEstimate:
        return measure.energy_estimate(self.circuit, x, self.model, self.mode, self.shots, self.rng, self.grouping)

    def __call__(self, x) -> float:
        if self.mode == "EXACT":
            return measure.energy_exact(self.circuit, x, self.model)
        return self.estimate(x).value


def best_fidelity(state, model: XYModel) -> tuple[float, bool]:
    """Fidelity against the exact ground state, maximized over a degenerate pair."""
    refs = exact_ground_states(model.N, model.J, model.h)
    return max(fidelity(state, r) for r in refs), len(refs) > 1


def run(cfg: VqeConfig, jobs: int = 1, initial_points=None) -> VqeResult:
    t0 = time.perf_counter()
    circuit = build(cfg.ansatz)
    m = cfg.model
    objective = EnergyObjective(circuit, m, cfg.mode, cfg.shots_per_setting, cfg.grouping, cfg.seed)
    opt_cfg = cfg.optimizer_config()
    if cfg.mode == "SAMPLED" and opt_cfg.method == "SPSA" and opt_cfg.noise_floor is None:
        # streams 0..restarts-1 feed the restarts, `restarts` the final estimate
        probe = objective.spawn(cfg.restarts + 1).estimate(child_rng(cfg.seed, 0).uniform(-math.pi, math.pi, circuit.num_params))
        opt_cfg = replace(opt_cfg, noise_floor=probe.std_error)
    opt = multi_start(objective, circuit.num_params, cfg.restarts, opt_cfg, jobs=jobs, initial_points=initial_points)
    params = circuit.wrap_params(opt.best_params)
    state = run_circuit(circuit, params)
    if cfg.mode == "EXACT":
        energy, err = measure.expectation(state, m), 0.0
    else:
        est = objective.spawn(cfg.restarts).estimate(params)
        energy, err = est.value, est.std_error
    fid, degenerate = best_fidelity(state, m)
    exact = exact_ground_energy_per_site(m.N, m.J, m.h).energy
    return VqeResult(
        energy_per_site=energy / m.N,
        params=params,
        fidelity_vs_exact=fid,
        degenerate_reference=degenerate,
        exact_energy_per_site=exact,
        history=opt.history,
        restarts_summary=opt.restarts,
        evals_used=sum(r.evals_used for r in opt.restarts),
        std_error=err / m.N,
        wall_time=time.perf_counter() - t0,
    )


def point_seed(seed: int, index: int) -> int:
    """Seed for grid point ``index``, independent of the other points."""
    return int(child_seeds(seed, index).generate_state(1, dtype=np.uint32)[0])


def _sweep_job(args) -> VqeResult:
    cfg, h, index = args
    return run(replace(cfg, model=replace(cfg.model, h=float(h)), seed=point_seed(cfg.seed, index)))


def sweep(cfg: VqeConfig, h_values, jobs: int = 1, warm_start: bool = False) -> list[VqeResult]:
    """One independent VQE run per field value; seeds derive from ``cfg.seed`` and the index."""
    h_values = list(h_values)
    if not h_values:
        raise ValueError("h_values must be non-empty")
    if warm_start:
        out: list[VqeResult] = []
        prev = None
        for i, h in enumerate(h_values):
            point = replace(cfg, model=replace(cfg.model, h=float(h)), seed=point_seed(cfg.seed, i))
            out.append(run(point, initial_points=None if prev is None else [prev]))
            prev = out[-1].params
        return out
    tasks = [(cfg, h, i) for i, h in enumerate(h_values)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            return list(pool.map(_sweep_job, tasks))
    return [_sweep_job(t) for t in tasks]
