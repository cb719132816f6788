"""Long-range XY chain: Pauli decomposition, exact solution and mean-field analytics.

    H = -J sum_{i<j} (X_i X_j + Y_i Y_j) - h sum_i Z_i

The Hamiltonian conserves sum_i Z_i.  With computational labels, a state of
Hamming weight ``w`` has ``sum Z = N - 2w``; the "excitation number" used
for the symmetric-sector energies counts the qubits in ``|0>``, i.e.
``n = N - w``.  The lowest state of sector ``n`` is the Dicke state of
Hamming weight ``N - n``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SizeError
from .qstate import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, StateVector

DENSE_MAX_QUBITS = 8

_PAULI = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


@dataclass(frozen=True)
class PauliString:
    """``coefficient * P_0 (x) P_1 (x) ...``; ``letters[k]`` acts on qubit ``k``."""

    coefficient: float
    letters: str

    def __post_init__(self) -> None:
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.letters) if c != "I")


@dataclass(frozen=True)
class XYModel:
    J: float
    h: float
    N: int

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError(f"chain needs at least 2 sites, got N={self.N}")

    def terms(self) -> list[PauliString]:
        return term_list(self)


def _letters(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(k, "I") for k in range(n))


def term_list(m: XYModel) -> list[PauliString]:
    """All N^2 strings: XX pairs (i<j, lexicographic), then YY pairs, then single Z."""
    pairs = list(itertools.combinations(range(m.N), 2))
    out = [PauliString(-m.J, _letters(m.N, {i: "X", j: "X"})) for i, j in pairs]
    out += [PauliString(-m.J, _letters(m.N, {i: "Y", j: "Y"})) for i, j in pairs]
    out += [PauliString(-m.h, _letters(m.N, {i: "Z"})) for i in range(m.N)]
    return out


def pauli_matrix(letters: str) -> np.ndarray:
    """Dense matrix of a Pauli string (qubit 0 is the least significant bit)."""
    out = np.ones((1, 1), dtype=complex)
    for c in reversed(letters):
        out = np.kron(out, _PAULI[c])
    return out


def dense_hamiltonian(m: XYModel) -> np.ndarray:
    if m.N > DENSE_MAX_QUBITS:
        raise SizeError(f"dense Hamiltonian limited to N <= {DENSE_MAX_QUBITS}, got {m.N}")
    dim = 1 << m.N
    out = np.zeros((dim, dim), dtype=complex)
    for term in term_list(m):
        out += term.coefficient * pauli_matrix(term.letters)
    return out


def collective_hamiltonian(N: int, J: float, h: float) -> np.ndarray:
    """The same Hamiltonian assembled as -2J S+S- + (J-h) Sz + J N."""
    if N > DENSE_MAX_QUBITS:
        raise SizeError(f"dense Hamiltonian limited to N <= {DENSE_MAX_QUBITS}, got {N}")

    def collective(p: str) -> np.ndarray:
        return sum(pauli_matrix(_letters(N, {k: p})) for k in range(N))

    sx, sy, sz = collective("X"), collective("Y"), collective("Z")
    s_plus = 0.5 * (sx + 1j * sy)
    s_minus = 0.5 * (sx - 1j * sy)
    dim = 1 << N
    return -2 * J * s_plus @ s_minus + (J - h) * sz + J * N * np.eye(dim)


def sym_energy_per_site(n: int, N: int, J: float, h: float) -> float:
    """Energy per site of the symmetric state with ``n`` excitations."""
    if not 0 <= n <= N:
        raise ValueError(f"excitation count {n} outside [0, {N}]")
    return (1 - 2 * n / N) * h - 2 * J * n * (1 - n / N)


class GroundEnergy(NamedTuple):
    energy: float
    n_star: int
    degenerate: bool


def _degenerate_tol(e: float) -> float:
    return 1e-12 * max(1.0, abs(e))


def exact_ground_energy_per_site(N: int, J: float, h: float) -> GroundEnergy:
    """Minimum of the symmetric-sector energies; ties go to the smaller ``n``."""
    if J <= 0:
        raise ValueError(f"exact solution assumes J > 0, got J={J}")
    energies = [sym_energy_per_site(n, N, J, h) for n in range(N + 1)]
    e_min = min(energies)
    tied = [n for n, e in enumerate(energies) if e - e_min <= _degenerate_tol(e_min)]
    return GroundEnergy(energies[tied[0]], tied[0], len(tied) > 1)


def ground_sectors(N: int, J: float, h: float) -> list[int]:
    """Every excitation number attaining the minimum (two at a critical field)."""
    energies = [sym_energy_per_site(n, N, J, h) for n in range(N + 1)]
    e_min = min(energies)
    return [n for n, e in enumerate(energies) if e - e_min <= _degenerate_tol(e_min)]


def critical_fields(N: int, J: float) -> list[float]:
    return sorted(J * (2 * n + 1 - N) for n in range(N))


def dicke_state(N: int, n: int) -> StateVector:
    """Uniform superposition of all basis states with Hamming weight ``n``."""
    if not 0 <= n <= N:
        raise ValueError(f"Hamming weight {n} outside [0, {N}]")
    idx = np.arange(1 << N)
    weights = np.array([bin(b).count("1") for b in idx])
    amps = np.where(weights == n, 1.0 / math.sqrt(math.comb(N, n)), 0.0).astype(complex)
    return StateVector(N, amps)


def sector_state(N: int, n: int) -> StateVector:
    """Symmetric state of the ``n``-excitation sector (Hamming weight ``N - n``)."""
    return dicke_state(N, N - n)


def exact_ground_state(N: int, J: float, h: float) -> tuple[StateVector, bool]:
    g = exact_ground_energy_per_site(N, J, h)
    return sector_state(N, g.n_star), g.degenerate


def exact_ground_states(N: int, J: float, h: float) -> list[StateVector]:
    """All degenerate symmetric ground states (one away from critical fields)."""
    return [sector_state(N, n) for n in ground_sectors(N, J, h)]


def mf_energy(thetas, phis, J: float, h: float) -> float:
    """Energy of the product state with Bloch angles (theta_p, phi_p)."""
    t = np.asarray(thetas, dtype=float)
    p = np.asarray(phis, dtype=float)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"theta/phi length mismatch: {t.shape} vs {p.shape}")
    st = np.sin(t)
    # sum_{p<q} s_p s_q cos(phi_p - phi_q) = (|sum s e^{i phi}|^2 - sum s^2) / 2
    z = np.sum(st * np.exp(1j * p))
    pair = 0.5 * (abs(z) ** 2 - np.sum(st**2))
    return float(-J * pair - h * np.sum(np.cos(t)))


def bloch_vector(theta: float, phi: float) -> tuple[float, float, float]:
    return (
        math.sin(theta) * math.cos(phi),
        math.sin(theta) * math.sin(phi),
        math.cos(theta),
    )


def mf_ground_energy_per_site(N: int, J: float, h: float) -> float:
    """Closed-form minimum of the mean-field energy per site (J > 0).

    All Bloch vectors align in the XY plane and tilt together with
    ``cos(theta) = h / (J (N - 1))`` until the field saturates them.
    """
    if J <= 0:
        raise ValueError(f"mean-field closed form assumes J > 0, got J={J}")
    sat = J * (N - 1)
    if abs(h) >= sat:
        return -abs(h)
    return -0.5 * sat - h * h / (2 * sat)
