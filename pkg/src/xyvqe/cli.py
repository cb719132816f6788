"""Batch experiment runner.

Each subcommand runs one experiment over a grid and writes a single CSV.
The first lines of every CSV are ``#`` comments carrying the toolkit
version and the fully resolved configuration as JSON; passing that CSV
back through ``--config`` reruns the experiment and reproduces the file
byte for byte (wall-clock columns are only emitted with ``--timing``).

Configuration is a JSON object.  Every scalar field can also be given as a
flag (``--N 4 --family CRX --h=-4:4:41``); flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Callable

import numpy as np

from . import __version__
from .ansatz import FAMILIES, AnsatzSpec, Range, connectivity_label, enumerate_gate_orders, parse_connectivity
from .entropylab import (
    DEFAULT_RESTARTS as ENTROPY_RESTARTS,
    SNAPSHOT_PRESETS,
    default_entropy_optimizer,
    half_chain_entropy,
    maximize_half_chain_entropy,
)
from .errors import ConfigError, NumericalError, SizeError, ValidationError
from .measure import DEFAULT_SHOTS
from .model import XYModel, exact_ground_energy_per_site, exact_ground_state, mf_ground_energy_per_site
from .optimize import METHODS, OptimizerConfig
from .rng import child_rng
from .vqe import DEFAULT_RESTARTS, VqeConfig, default_optimizer, point_seed, run

EXPERIMENTS = (
    "exact-sweep",
    "mf-sweep",
    "vqe-sweep",
    "gate-orders",
    "layers",
    "entropy-max",
    "entropy-range",
    "entropy-growth",
)
GRID_EXPERIMENTS = {"exact-sweep", "mf-sweep", "vqe-sweep", "gate-orders", "layers"}
ENTROPY_EXPERIMENTS = {"entropy-max", "entropy-range", "entropy-growth"}
MODES = ("EXACT", "SAMPLED")
GROUPINGS = ("grouped", "per_term")

DEFAULT_CATALOG = ("MF:full", "CNOT:linear", "CNOT:full", "CRX:linear", "CRX:full", "TQR:linear", "TQR:full")
JOBS_ENV = "XYVQE_JOBS"
# stream reserved for sampling gate orders; grid points use (seed, index)
ORDER_STREAM = 2**32 - 1
# largest register whose half-chain entropy the exact sweep reports
ENTROPY_MAX_QUBITS = 16


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    N: int
    J: float = 1.0
    h: tuple[float, ...] = ()
    family: str = "TQR"
    connectivity: str | tuple[tuple[int, int], ...] = "full"
    layers: int = 1
    interleave_mf: bool = False
    mode: str = "EXACT"
    shots: int = DEFAULT_SHOTS
    grouping: str = "grouped"
    method: str | None = None
    max_evals: int | None = None
    tolerance_f: float | None = None
    tolerance_x: float | None = None
    restarts: int | None = None
    seed: int = 0
    warm_start: bool = False
    orders: int = 10
    layer_counts: tuple[int, ...] = (1, 2, 3, 4)
    r_values: tuple[int, ...] = ()
    ansatze: tuple[str, ...] = DEFAULT_CATALOG
    snapshots: tuple[int, ...] | None = None

    def ansatz_spec(self, family: str | None = None, connectivity=None, layers: int | None = None) -> AnsatzSpec:
        return AnsatzSpec(
            family or self.family,
            self.N,
            parse_connectivity(self.connectivity if connectivity is None else connectivity),
            self.layers if layers is None else layers,
            self.interleave_mf,
        )

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.method,
            max_evals=self.max_evals,
            tolerance_f=self.tolerance_f,
            tolerance_x=self.tolerance_x,
            seed=self.seed,
        )

    def vqe(self, h: float, seed: int, **ansatz) -> VqeConfig:
        return VqeConfig(
            model=XYModel(self.J, float(h), self.N),
            ansatz=self.ansatz_spec(**ansatz),
            mode=self.mode,
            shots_per_setting=self.shots,
            optimizer=self.optimizer(),
            restarts=self.restarts,
            seed=seed,
            grouping=self.grouping,
        )


REQUIRED = ("experiment", "N")
_FIELD_NAMES = tuple(f.name for f in fields(ExperimentConfig))


# --- parsing -----------------------------------------------------------------------


def _expect(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{name}: {message}")


def _as_int(value: Any, name: str) -> int:
    _expect(isinstance(value, int) and not isinstance(value, bool), name, f"expected an integer, got {value!r}")
    return value


def _as_float(value: Any, name: str) -> float:
    _expect(
        isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value),
        name,
        f"expected a finite number, got {value!r}",
    )
    return float(value)


def _as_bool(value: Any, name: str) -> bool:
    _expect(isinstance(value, bool), name, f"expected true or false, got {value!r}")
    return value


def _as_choice(value: Any, name: str, choices) -> str:
    _expect(value in choices, name, f"must be one of {', '.join(choices)}; got {value!r}")
    return value


def _as_int_list(value: Any, name: str) -> tuple[int, ...]:
    _expect(isinstance(value, (list, tuple)), name, f"expected a list of integers, got {value!r}")
    return tuple(_as_int(v, name) for v in value)


def _h_grid(value: Any) -> tuple[float, ...]:
    """A number, a list of numbers, or ``{"start", "stop", "num"}``."""
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "num"}
        _expect(not extra and len(value) == 3, "h", "grid object needs exactly start, stop and num")
        num = _as_int(value["num"], "h.num")
        _expect(num >= 1, "h.num", f"must be >= 1, got {num}")
        grid = np.linspace(_as_float(value["start"], "h.start"), _as_float(value["stop"], "h.stop"), num)
        return tuple(float(x) for x in grid)
    if isinstance(value, (list, tuple)):
        return tuple(_as_float(v, "h") for v in value)
    return (_as_float(value, "h"),)


def _connectivity(value: Any) -> str | tuple[tuple[int, int], ...]:
    try:
        label = connectivity_label(parse_connectivity(value))
    except (ValidationError, ValueError, TypeError) as exc:
        raise ConfigError(f"connectivity: {exc}") from None
    if isinstance(label, list):
        return tuple((a, b) for a, b in label)
    return label


def _get(raw: dict, key: str, default: Any) -> Any:
    value = raw.get(key)
    return default if value is None else value


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate ``raw`` and fill every default, including the mode-dependent ones."""
    _expect(isinstance(raw, dict), "config", "top level must be a JSON object")
    unknown = sorted(set(raw) - set(_FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    required = REQUIRED + (("h",) if raw.get("experiment") in GRID_EXPERIMENTS else ())
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    experiment = _as_choice(raw["experiment"], "experiment", EXPERIMENTS)
    N = _as_int(raw["N"], "N")
    _expect(N >= 2, "N", f"must be >= 2, got {N}")

    v: dict[str, Any] = {"experiment": experiment, "N": N}
    v["J"] = _as_float(raw.get("J", 1.0), "J")
    _expect(v["J"] > 0, "J", "must be positive")
    v["h"] = _h_grid(raw["h"]) if "h" in raw else ((0.0,) if experiment == "entropy-range" else ())
    _expect(all(a < b for a, b in zip(v["h"], v["h"][1:])), "h", "grid must be strictly increasing")
    v["family"] = _as_choice(raw.get("family", "TQR"), "family", FAMILIES)
    v["connectivity"] = _connectivity(raw.get("connectivity", "full"))
    v["layers"] = _as_int(raw.get("layers", 1), "layers")
    _expect(v["layers"] >= 1, "layers", "must be >= 1")
    v["interleave_mf"] = _as_bool(raw.get("interleave_mf", False), "interleave_mf")
    v["mode"] = _as_choice(raw.get("mode", "EXACT"), "mode", MODES)
    v["shots"] = _as_int(raw.get("shots", DEFAULT_SHOTS), "shots")
    _expect(v["shots"] >= 1, "shots", "must be >= 1")
    v["grouping"] = _as_choice(raw.get("grouping", "grouped"), "grouping", GROUPINGS)

    entropy = experiment in ENTROPY_EXPERIMENTS and experiment != "entropy-range"
    base = default_entropy_optimizer() if entropy else default_optimizer(v["mode"])
    v["method"] = _as_choice(_get(raw, "method", base.method), "method", METHODS)
    if v["method"] != base.method:
        base = default_optimizer("SAMPLED" if v["method"] == "SPSA" else "EXACT")
    v["max_evals"] = _as_int(_get(raw, "max_evals", base.max_evals), "max_evals")
    _expect(v["max_evals"] >= 1, "max_evals", "must be >= 1")
    for key in ("tolerance_f", "tolerance_x"):
        v[key] = _as_float(_get(raw, key, getattr(base, key)), key)
        _expect(v[key] > 0, key, "must be positive")
    v["restarts"] = _as_int(_get(raw, "restarts", ENTROPY_RESTARTS if entropy else DEFAULT_RESTARTS), "restarts")
    _expect(v["restarts"] >= 1, "restarts", "must be >= 1")
    v["seed"] = _as_int(raw.get("seed", 0), "seed")
    _expect(v["seed"] >= 0, "seed", "must be non-negative")
    v["warm_start"] = _as_bool(raw.get("warm_start", False), "warm_start")
    v["orders"] = _as_int(raw.get("orders", 10), "orders")
    _expect(v["orders"] >= 1, "orders", "must be >= 1")
    v["layer_counts"] = _as_int_list(raw.get("layer_counts", [1, 2, 3, 4]), "layer_counts")
    _expect(bool(v["layer_counts"]) and min(v["layer_counts"]) >= 1, "layer_counts", "need positive layer counts")
    v["r_values"] = _as_int_list(_get(raw, "r_values", list(range(1, N))), "r_values")
    _expect(bool(v["r_values"]), "r_values", "need at least one range")
    _expect(all(1 <= r <= N - 1 for r in v["r_values"]), "r_values", f"each r must lie in [1, {N - 1}]")

    ansatze = raw.get("ansatze", list(DEFAULT_CATALOG))
    _expect(isinstance(ansatze, (list, tuple)) and ansatze, "ansatze", "expected a non-empty list")
    for item in ansatze:
        _expect(isinstance(item, str) and ":" in item, "ansatze", f"entries look like 'TQR:full', got {item!r}")
        fam, conn = item.split(":", 1)
        _as_choice(fam, "ansatze", FAMILIES)
        _connectivity(conn)
    v["ansatze"] = tuple(ansatze)

    snapshots = raw.get("snapshots")
    if snapshots is None and experiment == "entropy-growth":
        snapshots = list(SNAPSHOT_PRESETS.get(v["family"], ())) if N == 4 else []
    v["snapshots"] = None if snapshots is None else _as_int_list(snapshots, "snapshots")

    if experiment in ENTROPY_EXPERIMENTS:
        _expect(N % 2 == 0, "N", f"{experiment} needs an even register, got {N}")
    try:
        cfg = ExperimentConfig(**v)
        cfg.ansatz_spec()  # pair validity against N
    except (ValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_raw(text: str) -> dict:
    """JSON object from a config file, or from the ``# config:`` line of a CSV."""
    stripped = text.lstrip()
    if stripped.startswith("#"):
        for line in stripped.splitlines():
            if line.startswith("# config:"):
                stripped = line[len("# config:") :]
                break
        else:
            raise ConfigError("config: no '# config:' line in the CSV header")
    try:
        raw = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    _expect(isinstance(raw, dict), "config", "top level must be a JSON object")
    return raw


def parse_config(text: str) -> ExperimentConfig:
    return config_from_dict(load_raw(text))


def serialize_config(cfg: ExperimentConfig) -> str:
    data = asdict(cfg)
    for key, value in data.items():
        if isinstance(value, tuple):
            data[key] = [list(x) if isinstance(x, tuple) else x for x in value]
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


# --- experiments ---------------------------------------------------------------------


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    failures: list[str]


def _safe(job: Callable, args) -> tuple[bool, Any]:
    try:
        return True, job(*args)
    except (NumericalError, SizeError, ValidationError, ValueError, ArithmeticError) as exc:
        return False, f"{type(exc).__name__}: {exc}"


def _call(payload):
    job, args = payload
    return _safe(job, args)


def _map(job: Callable, tasks: list[tuple], jobs: int) -> list[tuple[bool, Any]]:
    """Run ``job(*t)`` for every task; results come back in task order."""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            return list(pool.map(_call, [(job, t) for t in tasks]))
    return [_safe(job, t) for t in tasks]


def _profile_columns(N: int) -> list[str]:
    return [f"s_{x}" for x in range(N + 1)]


def _exact_row(cfg: ExperimentConfig, h: float) -> list[Any]:
    g = exact_ground_energy_per_site(cfg.N, cfg.J, h)
    entropy: Any = ""
    if cfg.N % 2 == 0 and cfg.N <= ENTROPY_MAX_QUBITS:
        state, _ = exact_ground_state(cfg.N, cfg.J, h)
        entropy = half_chain_entropy(state)
    return [h, g.energy, mf_ground_energy_per_site(cfg.N, cfg.J, h), g.n_star, int(g.degenerate), entropy]


def exact_sweep(cfg: ExperimentConfig, jobs: int) -> Table:
    cols = ["h", "energy_per_site", "mf_energy_per_site", "excitations", "degenerate", "half_chain_entropy"]
    out = _map(_exact_row, [(cfg, h) for h in cfg.h], jobs)
    return _collect(cols, out, [f"h={h!r}" for h in cfg.h])


def _vqe_point(cfg: ExperimentConfig, h: float, index: int, ansatz: dict, start=None) -> dict:
    res = run(cfg.vqe(h, point_seed(cfg.seed, index), **ansatz), initial_points=None if start is None else [start])
    return {
        "energy_per_site": res.energy_per_site,
        "std_error": res.std_error,
        "exact_energy_per_site": res.exact_energy_per_site,
        "mf_energy_per_site": mf_ground_energy_per_site(cfg.N, cfg.J, h),
        "fidelity": res.fidelity_vs_exact,
        "degenerate_reference": int(res.degenerate_reference),
        "restarts_used": len(res.restarts_summary),
        "evals": res.evals_used,
        "wall_ms": res.wall_time * 1e3,
        "params": res.params,
    }


def _vqe_grid(cfg: ExperimentConfig, jobs: int, ansatz: dict) -> list[tuple[bool, Any]]:
    if not cfg.warm_start:
        return _map(_vqe_point, [(cfg, h, i, ansatz) for i, h in enumerate(cfg.h)], jobs)
    # warm start chains the grid, so points run in order
    out, prev = [], None
    for i, h in enumerate(cfg.h):
        ok, value = _safe(_vqe_point, (cfg, h, i, ansatz, prev))
        out.append((ok, value))
        prev = value["params"] if ok else None
    return out


def _collect(cols: list[str], results, labels: list[str], row: Callable | None = None) -> Table:
    rows, failures = [], []
    for (ok, value), label in zip(results, labels):
        if ok:
            rows.append(row(value) if row else value)
        else:
            failures.append(f"{label}: {value}")
    return Table(cols, rows, failures)


def vqe_sweep(cfg: ExperimentConfig, jobs: int, timing: bool = False) -> Table:
    cols = [
        "h",
        "energy_per_site",
        "std_error",
        "exact_energy_per_site",
        "mf_energy_per_site",
        "fidelity",
        "degenerate_reference",
        "restarts_used",
        "evals",
    ] + (["wall_ms"] if timing else [])
    results = _vqe_grid(cfg, jobs, {})
    rows = []
    for h, (ok, r) in zip(cfg.h, results):
        if ok:
            rows.append((True, [h] + [r[c] for c in cols[1:]]))
        else:
            rows.append((False, r))
    return _collect(cols, rows, [f"h={h!r}" for h in cfg.h])


def mf_sweep(cfg: ExperimentConfig, jobs: int) -> Table:
    cols = ["h", "mf_energy_per_site", "vqe_energy_per_site", "exact_energy_per_site", "fidelity", "evals"]
    results = _vqe_grid(cfg, jobs, {"family": "MF"})
    rows = []
    for h, (ok, r) in zip(cfg.h, results):
        if ok:
            row = [h, r["mf_energy_per_site"], r["energy_per_site"], r["exact_energy_per_site"], r["fidelity"], r["evals"]]
            rows.append((True, row))
        else:
            rows.append((False, r))
    return _collect(cols, rows, [f"h={h!r}" for h in cfg.h])


def _order_point(cfg: ExperimentConfig, h: float, index: int, pairs) -> list[Any]:
    r = _vqe_point(cfg, h, index, {"connectivity": pairs})
    return [r["energy_per_site"], r["exact_energy_per_site"], r["fidelity"], r["evals"]]


def gate_orders(cfg: ExperimentConfig, jobs: int) -> Table:
    """Every sampled order runs with the same per-h seeds, so only the order varies."""
    cols = ["order_index", "order", "h", "energy_per_site", "exact_energy_per_site", "fidelity", "evals"]
    orders = enumerate_gate_orders(cfg.N, child_rng(cfg.seed, ORDER_STREAM), cfg.orders)
    tasks, meta = [], []
    for k, order in enumerate(orders):
        for i, h in enumerate(cfg.h):
            tasks.append((cfg, h, i, order.pairs))
            meta.append((k, order.label(), h))
    results = _map(_order_point, tasks, jobs)
    rows = [(ok, list(m) + v if ok else v) for (ok, v), m in zip(results, meta)]
    return _collect(cols, rows, [f"order={k} h={h!r}" for k, _, h in meta])


def _layer_point(cfg: ExperimentConfig, h: float, index: int, layers: int) -> list[Any]:
    r = _vqe_point(cfg, h, index, {"layers": layers})
    return [r["energy_per_site"], r["exact_energy_per_site"], r["fidelity"], r["evals"]]


def layers(cfg: ExperimentConfig, jobs: int) -> Table:
    cols = ["layers", "h", "energy_per_site", "exact_energy_per_site", "fidelity", "evals"]
    tasks = [(cfg, h, i, L) for L in cfg.layer_counts for i, h in enumerate(cfg.h)]
    results = _map(_layer_point, tasks, jobs)
    rows = [(ok, [t[3], t[1]] + v if ok else v) for (ok, v), t in zip(results, tasks)]
    return _collect(cols, rows, [f"layers={t[3]} h={t[1]!r}" for t in tasks])


def _entropy_point(cfg: ExperimentConfig, family: str, conn) -> list[Any]:
    res = maximize_half_chain_entropy(
        cfg.ansatz_spec(family=family, connectivity=conn), cfg.optimizer(), cfg.restarts, snapshots=()
    )
    return [res.max_value] + list(res.final_profile.values) + [res.evals_used]


def entropy_max(cfg: ExperimentConfig, jobs: int) -> Table:
    cols = ["family", "connectivity", "max_half_chain_entropy"] + _profile_columns(cfg.N) + ["evals"]
    pairs = [item.split(":", 1) for item in cfg.ansatze]
    results = _map(_entropy_point, [(cfg, f, c) for f, c in pairs], jobs)
    rows = [(ok, [f, c] + v if ok else v) for (ok, v), (f, c) in zip(results, pairs)]
    return _collect(cols, rows, list(cfg.ansatze))


def _entropy_cfg(cfg: ExperimentConfig) -> ExperimentConfig:
    """Same config with the entropy-maximization optimizer defaults."""
    base = default_entropy_optimizer()
    return replace(
        cfg,
        method=base.method,
        max_evals=base.max_evals,
        tolerance_f=base.tolerance_f,
        tolerance_x=base.tolerance_x,
        restarts=ENTROPY_RESTARTS,
    )


def _range_point(cfg: ExperimentConfig, r: int) -> list[list[Any]]:
    conn = connectivity_label(Range(r))
    ent = _entropy_point(_entropy_cfg(cfg), "TQR", conn)
    rows = []
    for i, h in enumerate(cfg.h):
        v = _vqe_point(cfg, h, i, {"family": "TQR", "connectivity": conn})
        rows.append([r, h, ent[0], v["energy_per_site"], v["exact_energy_per_site"], v["fidelity"], v["evals"]])
    return rows


def entropy_range(cfg: ExperimentConfig, jobs: int) -> Table:
    """Per r: the maximal half-chain entropy and the VQE energy at each grid h.

    The optimizer fields configure the VQE runs; entropy maximization keeps
    its own Powell defaults.
    """
    cols = ["r", "h", "max_half_chain_entropy", "energy_per_site", "exact_energy_per_site", "fidelity", "evals"]
    table = Table(cols, [], [])
    for r, (ok, value) in zip(cfg.r_values, _map(_range_point, [(cfg, r) for r in cfg.r_values], jobs)):
        if ok:
            table.rows.extend(value)
        else:
            table.failures.append(f"r={r}: {value}")
    return table


def entropy_growth(cfg: ExperimentConfig, jobs: int) -> Table:
    """Incumbent S(N/2) per evaluation of the best restart, with cut profiles at snapshots."""
    cols = ["eval_index", "half_chain_entropy"] + _profile_columns(cfg.N)
    spec = cfg.ansatz_spec()
    ok, res = _safe(
        lambda: maximize_half_chain_entropy(spec, cfg.optimizer(), cfg.restarts, cfg.snapshots or (), jobs), ()
    )
    if not ok:
        return Table(cols, [], [f"{cfg.family}: {res}"])
    rows = []
    for k, s in res.trajectory:
        profile = res.profiles.get(k)
        rows.append([k, s] + (list(profile.values) if profile else [""] * (cfg.N + 1)))
    return Table(cols, rows, [])


RUNNERS: dict[str, Callable[..., Table]] = {
    "exact-sweep": exact_sweep,
    "mf-sweep": mf_sweep,
    "vqe-sweep": vqe_sweep,
    "gate-orders": gate_orders,
    "layers": layers,
    "entropy-max": entropy_max,
    "entropy-range": entropy_range,
    "entropy-growth": entropy_growth,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, timing: bool = False) -> tuple[str, list[str]]:
    """CSV text and the list of failed grid points."""
    runner = RUNNERS[cfg.experiment]
    table = runner(cfg, jobs, timing) if cfg.experiment == "vqe-sweep" else runner(cfg, jobs)
    return to_csv(cfg, table), table.failures


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def to_csv(cfg: ExperimentConfig, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# xyvqe {__version__}\r\n")
    buf.write(f"# config: {serialize_config(cfg)}\r\n")
    writer = csv.writer(buf)
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


# --- command line ------------------------------------------------------------------


def _flag_value(text: str, name: str) -> Any:
    """Flag strings -> JSON-like values; ``h`` also accepts ``start:stop:num``."""
    if name == "h":
        if text.count(":") == 2:
            start, stop, num = text.split(":")
            return {"start": float(start), "stop": float(stop), "num": int(num)}
        return [float(x) for x in text.split(",")]
    if name in ("layer_counts", "r_values", "snapshots"):
        return [int(x) for x in text.split(",") if x]
    if name == "ansatze":
        return text.split(",")
    if name == "connectivity" and text.lstrip().startswith("["):
        return json.loads(text)
    kind = {f.name: f.type for f in fields(ExperimentConfig)}[name]
    if kind == "bool":
        word = text.lower()
        if word not in ("1", "true", "yes", "0", "false", "no"):
            raise ValueError(word)
        return word in ("1", "true", "yes")
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xyvqe",
        description="Run VQE and expressibility experiments on the long-range XY model; writes CSV.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file, or a CSV written by an earlier run")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--jobs", type=int, default=None, help=f"worker processes (default: ${JOBS_ENV} or 1)")
        p.add_argument("--timing", action="store_true", help="add a wall_ms column (vqe-sweep; breaks byte-exact reruns)")
        for f in fields(ExperimentConfig):
            if f.name == "experiment":
                continue
            p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None, metavar="VALUE")
    return parser


def _jobs(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{JOBS_ENV}: expected an integer, got {env!r}") from None
    return 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw: dict[str, Any] = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = load_raw(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config!r}: {exc.strerror}") from None
            if raw.get("experiment", args.experiment) != args.experiment:
                raise ConfigError(f"experiment: config is for {raw['experiment']!r}, command is {args.experiment!r}")
        raw["experiment"] = args.experiment
        for f in fields(ExperimentConfig):
            text = getattr(args, f.name, None)
            if f.name != "experiment" and text is not None:
                try:
                    raw[f.name] = _flag_value(text, f.name)
                except (ValueError, json.JSONDecodeError):
                    raise ConfigError(f"{f.name}: cannot parse {text!r}") from None
        cfg = config_from_dict(raw)
        jobs = _jobs(args.jobs)
    except ConfigError as exc:
        print(f"xyvqe: config error: {exc}", file=sys.stderr)
        return 2

    t0 = time.perf_counter()
    text, failures = run_experiment(cfg, jobs, args.timing)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"xyvqe: cannot write {args.out!r}: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    for line in failures:
        print(f"xyvqe: failed {line}", file=sys.stderr)
    if args.timing:
        print(f"xyvqe: {cfg.experiment} finished in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
