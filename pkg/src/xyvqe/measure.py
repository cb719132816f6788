"""Exact and shot-based energy estimation.

Shot-based estimates rotate every qubit into the measured basis and count
computational-basis outcomes.  In the default grouped mode three settings
(all-X, all-Y, all-Z) cover every term of the XY Hamiltonian, since each
group is simultaneously diagonal after the rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _fastsim, qstate
from .ansatz import Circuit, run_circuit
from .model import PauliString, XYModel, term_list
from .qstate import StateVector

DEFAULT_SHOTS = 2**14

# basis -> rotation U appended before a Z measurement, with U^dag Z U = basis
BASIS_ROTATION = {
    "X": qstate.ry(-math.pi / 2),
    "Y": qstate.rx(math.pi / 2),
    "Z": None,
}


@dataclass(frozen=True)
class MeasurementSetting:
    basis: str

    def __post_init__(self) -> None:
        if self.basis not in BASIS_ROTATION:
            raise ValueError(f"basis must be X, Y or Z, got {self.basis!r}")

    @property
    def rotation(self) -> np.ndarray | None:
        return BASIS_ROTATION[self.basis]


@dataclass(frozen=True)
class EnergyEstimate:
    value: float
    std_error: float
    shots_per_setting: int
    mode: str  # "EXACT" or "SAMPLED"


def _check_counts(counts: dict[int, int], shots: int) -> None:
    if not counts or shots <= 0:
        raise ValueError("empty histogram")
    total = sum(counts.values())
    if total != shots:
        raise ValueError(f"histogram holds {total} shots, expected {shots}")


def estimate_z(counts: dict[int, int], j: int, shots: int) -> float:
    _check_counts(counts, shots)
    ones = sum(c for b, c in counts.items() if (b >> j) & 1)
    return (shots - 2 * ones) / shots


def estimate_zz(counts: dict[int, int], i: int, j: int, shots: int) -> float:
    if i == j:
        raise ValueError("estimate_zz needs two distinct qubits")
    _check_counts(counts, shots)
    odd = sum(c for b, c in counts.items() if ((b >> i) ^ (b >> j)) & 1)
    return (shots - 2 * odd) / shots


def rotate_to_basis(state: StateVector, bases: str) -> StateVector:
    """Copy of ``state`` with ``bases[q]`` (X/Y/Z/I) rotated onto Z for every qubit."""
    out = state.copy()
    for q, b in enumerate(bases):
        rot = BASIS_ROTATION.get(b)
        if rot is not None:
            qstate.apply_1q(out, rot, q)
    return out


# --- exact expectations ---------------------------------------------------------


@lru_cache(maxsize=256)
def _encode(letters_tuple: tuple[str, ...]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xmask, yzmask, ny = [], [], []
    for letters in letters_tuple:
        x = yz = y = 0
        for q, c in enumerate(letters):
            if c in "XY":
                x |= 1 << q
            if c in "YZ":
                yz |= 1 << q
            y += c == "Y"
        xmask.append(x)
        yzmask.append(yz)
        ny.append(y)
    return (np.array(xmask, dtype=np.int64), np.array(yzmask, dtype=np.int64), np.array(ny, dtype=np.int64))


@lru_cache(maxsize=256)
def _model_tables(m: XYModel) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    terms = term_list(m)
    coeffs = np.array([t.coefficient for t in terms])
    return coeffs, _encode(tuple(t.letters for t in terms))


def pauli_expectations(state: StateVector, strings: list[PauliString] | list[str]) -> np.ndarray:
    letters = tuple(s.letters if isinstance(s, PauliString) else s for s in strings)
    if any(len(l) != state.num_qubits for l in letters):
        raise ValueError("Pauli string length differs from qubit count")
    return _fastsim.pauli_expectations(state.amplitudes, *_encode(letters))


def expectation(state: StateVector, m: XYModel) -> float:
    """<psi|H|psi> by applying each Pauli term to the amplitudes."""
    if state.num_qubits != m.N:
        raise ValueError(f"state has {state.num_qubits} qubits, model has N={m.N}")
    coeffs, enc = _model_tables(m)
    return float(coeffs @ _fastsim.pauli_expectations(state.amplitudes, *enc))


def energy_exact(c: Circuit, params, m: XYModel) -> float:
    return expectation(run_circuit(c, params), m)


# --- shot-based estimation ---------------------------------------------------


def _term_from_counts(letters: str, counts: dict[int, int], shots: int) -> float:
    """Parity average over the support of ``letters`` after basis rotation."""
    support = [q for q, c in enumerate(letters) if c != "I"]
    if len(support) == 1:
        return estimate_z(counts, support[0], shots)
    if len(support) == 2:
        return estimate_zz(counts, support[0], support[1], shots)
    mask = sum(1 << q for q in support)
    odd = sum(c for b, c in counts.items() if bin(b & mask).count("1") & 1)
    return (shots - 2 * odd) / shots


def energy_sampled(
    c: Circuit,
    params,
    m: XYModel,
    shots_per_setting: int,
    rng: np.random.Generator,
    grouping: str = "grouped",
) -> EnergyEstimate:
    """Shot-based energy with a binomial standard error.

    ``grouping="grouped"`` uses three settings (all-X, all-Y, all-Z);
    ``"per_term"`` measures every Pauli string in its own setting.  The
    error treats terms as independent, ignoring covariances inside one
    setting.
    """
    if shots_per_setting <= 0:
        raise ValueError(f"shots_per_setting must be positive, got {shots_per_setting}")
    if grouping not in ("grouped", "per_term"):
        raise ValueError(f"unknown grouping {grouping!r}")
    state = run_circuit(c, params)
    terms = term_list(m)
    shots = shots_per_setting
    value = 0.0
    var = 0.0
    if grouping == "grouped":
        hist = {}
        for basis in "XYZ":
            rotated = rotate_to_basis(state, basis * m.N)
            hist[basis] = qstate.sample_counts(rotated, shots, rng)
        for t in terms:
            basis = next(ch for ch in t.letters if ch != "I")
            est = _term_from_counts(t.letters, hist[basis], shots)
            value += t.coefficient * est
            var += t.coefficient**2 * (1.0 - est * est) / shots
    else:
        for t in terms:
            rotated = rotate_to_basis(state, t.letters)
            counts = qstate.sample_counts(rotated, shots, rng)
            est = _term_from_counts(t.letters, counts, shots)
            value += t.coefficient * est
            var += t.coefficient**2 * (1.0 - est * est) / shots
    return EnergyEstimate(value, math.sqrt(var), shots, "SAMPLED")


def energy_estimate(
    c: Circuit,
    params,
    m: XYModel,
    mode: str = "EXACT",
    shots_per_setting: int = DEFAULT_SHOTS,
    rng: np.random.Generator | None = None,
    grouping: str = "grouped",
) -> EnergyEstimate:
    if mode == "EXACT":
        return EnergyEstimate(energy_exact(c, params, m), 0.0, 0, "EXACT")
    if mode == "SAMPLED":
        if rng is None:
            raise ValueError("SAMPLED mode needs an explicit generator")
        return energy_sampled(c, params, m, shots_per_setting, rng, grouping)
    raise ValueError(f"mode must be EXACT or SAMPLED, got {mode!r}")
