"""Dense statevector simulation, partial traces and entanglement entropy.

Bit convention: amplitude index ``b`` stores qubit ``q`` in bit ``q`` of
``b`` (qubit 0 is the least significant bit).  Ket labels are written in
qubit order, ``|q0 q1 ... q(N-1)>``, so ``|10>`` on two qubits is index 1.

Gate kernels mutate ``state.amplitudes`` in place and return the same
object, so a state should have a single owner while gates are applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError, SizeError, ValidationError

MAX_QUBITS = 24
ENTROPY_EPS = 1e-12
UNITARY_ATOL = 1e-10

# Flip to skip unitarity checks in hot loops.
CHECK_UNITARY = True

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    e = complex(math.cos(theta / 2), -math.sin(theta / 2))
    return np.array([[e, 0], [0, e.conjugate()]], dtype=complex)


@dataclass(eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        n = amps.size.bit_length() - 1
        if n < 1 or amps.size != 1 << n:
            raise ValueError(f"amplitude count {amps.size} is not a power of two >= 2")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps.copy())

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(eq=False)
class DensityMatrix:
    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def check(self, atol: float = 1e-10) -> None:
        m = self.entries
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
            raise ValidationError("density matrix is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > atol:
            raise ValidationError(f"density matrix trace {tr!r} != 1")


def _check_size(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count {n} outside [1, {MAX_QUBITS}]")


def _check_qubit(state: StateVector, q: int) -> None:
    if not 0 <= q < state.num_qubits:
        raise ValueError(f"qubit {q} out of range for {state.num_qubits}-qubit state")


def _check_unitary(u: np.ndarray) -> None:
    if u.shape != (2, 2):
        raise ValidationError(f"single-qubit gate must be 2x2, got {u.shape}")
    if not np.allclose(u.conj().T @ u, PAULI_I, atol=UNITARY_ATOL, rtol=0):
        raise ValidationError("gate matrix is not unitary")


def zero_state(n: int) -> StateVector:
    _check_size(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


def basis_state(n: int, index: int) -> StateVector:
    _check_size(n)
    amps = np.zeros(1 << n, dtype=complex)
    amps[index] = 1.0
    return StateVector(n, amps)


# --- raw kernels on flat complex arrays --------------------------------------


def _kernel_1q(amps: np.ndarray, u: np.ndarray, target: int) -> None:
    view = amps.reshape(-1, 2, 1 << target)
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _kernel_ctrl_1q(amps: np.ndarray, u: np.ndarray, control: int, target: int, n: int) -> None:
    tensor = amps.reshape((2,) * n)
    index: list = [slice(None)] * n
    index[n - 1 - control] = 1
    sub = tensor[tuple(index)]
    # control axis was removed; shift the target axis if it sat after it
    t_axis = n - 1 - target
    if t_axis > n - 1 - control:
        t_axis -= 1
    sub = np.moveaxis(sub, t_axis, 0)
    a0 = sub[0].copy()
    a1 = sub[1]
    sub[0] = u[0, 0] * a0 + u[0, 1] * a1
    sub[1] = u[1, 0] * a0 + u[1, 1] * a1


@lru_cache(maxsize=512)
def _pair_tables(n: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Partner index ``b ^ (1<<i | 1<<j)`` and the Y(x)Y sign for each basis index."""
    idx = np.arange(1 << n)
    partner = idx ^ ((1 << i) | (1 << j))
    same = ((idx >> i) & 1) == ((idx >> j) & 1)
    sign = np.where(same, -1.0, 1.0)
    partner.flags.writeable = False
    sign.flags.writeable = False
    return partner, sign


def _kernel_2q_rotation(amps: np.ndarray, axis: str, angle: float, i: int, j: int, n: int) -> None:
    partner, sign = _pair_tables(n, i, j)
    flipped = amps[partner]
    if axis == "YY":
        flipped *= sign
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    amps *= c
    amps += (-1j * s) * flipped


# --- public gate API ----------------------------------------------------------


def apply_1q(state: StateVector, u: np.ndarray, target: int) -> StateVector:
    _check_qubit(state, target)
    u = np.asarray(u, dtype=complex)
    if CHECK_UNITARY:
        _check_unitary(u)
    _kernel_1q(state.amplitudes, u, target)
    return state


def apply_ctrl_1q(state: StateVector, u: np.ndarray, control: int, target: int) -> StateVector:
    """Apply ``u`` to ``target`` on the subspace where ``control`` is 1."""
    if control == target:
        raise ValueError("control and target must differ")
    _check_qubit(state, control)
    _check_qubit(state, target)
    u = np.asarray(u, dtype=complex)
    if CHECK_UNITARY:
        _check_unitary(u)
    _kernel_ctrl_1q(state.amplitudes, u, control, target, state.num_qubits)
    return state


def apply_2q_rotation(state: StateVector, axis: str, angle: float, i: int, j: int) -> StateVector:
    """exp(-i angle A_i A_j / 2) with A = X or Y."""
    if axis not in ("XX", "YY"):
        raise ValueError(f"axis must be 'XX' or 'YY', got {axis!r}")
    if i == j:
        raise ValueError("two-qubit rotation needs distinct qubits")
    _check_qubit(state, i)
    _check_qubit(state, j)
    _kernel_2q_rotation(state.amplitudes, axis, float(angle), i, j, state.num_qubits)
    return state


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"size mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    f = abs(inner_product(a, b)) ** 2
    return min(max(f, 0.0), 1.0)


def sample_counts(state: StateVector, shots: int, rng: np.random.Generator) -> dict[int, int]:
    """Draw ``shots`` computational-basis outcomes; returns ``{index: count}`` for observed indices."""
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    nz = np.flatnonzero(counts)
    return {int(b): int(counts[b]) for b in nz}


def reduced_density_matrix(state: StateVector, cut: int) -> DensityMatrix:
    """Keep qubits ``0..cut-1`` and trace out the rest."""
    n = state.num_qubits
    if not 0 <= cut <= n:
        raise ValueError(f"cut {cut} outside [0, {n}]")
    m = state.amplitudes.reshape(1 << (n - cut), 1 << cut)
    return DensityMatrix(m.T @ m.conj())


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy in bits."""
    m = rho.entries
    if m.shape == (1, 1):
        return 0.0
    if not np.allclose(m, m.conj().T, atol=1e-10, rtol=0):
        raise ValidationError("density matrix is not Hermitian")
    evals, _ = hermitian_eigen(m)
    lam = evals[evals > ENTROPY_EPS]
    s = float(-np.sum(lam * np.log2(lam)))
    return s if s > 0.0 else 0.0


# --- eigensolver ----------------------------------------------------------------


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint (p, q) pairs covering every p < q exactly once per sweep."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        if ps:
            rounds.append((np.array(ps), np.array(qs)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


MAX_SWEEPS = 60


def hermitian_eigen(m: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    Each sweep visits every off-diagonal pair once, in round-robin order so
    that the rotations of one round touch disjoint rows and can be applied
    together.  Iteration stops when the off-diagonal Frobenius norm falls
    below ``tol * max(1, ||m||_F)``.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"matrix must be square, got {a.shape}")
    n = a.shape[0]
    if n > 256:
        raise SizeError(f"dimension {n} exceeds eigensolver cap 256")
    if not np.allclose(a, a.conj().T, atol=1e-10, rtol=0):
        raise ValidationError("matrix is not Hermitian")
    a = 0.5 * (a + a.conj().T)
    vt = np.eye(n, dtype=complex)  # transposed eigenvector matrix
    scale = max(1.0, float(np.linalg.norm(a)))
    threshold = tol * scale
    rounds = _round_robin(n)

    def off_norm() -> float:
        return float(np.linalg.norm(a - np.diag(np.diag(a))))

    sweeps = 0
    while off_norm() >= threshold:
        if sweeps >= MAX_SWEEPS:
            raise NumericalError(
                f"Jacobi did not converge in {MAX_SWEEPS} sweeps "
                f"(dim={n}, off-diagonal norm {off_norm():.3e}, threshold {threshold:.3e})"
            )
        for p, q in rounds:
            apq = a[p, q]
            mag = np.abs(apq)
            app = a[p, p].real
            aqq = a[q, q].real
            theta = 0.5 * np.arctan2(2.0 * mag, app - aqq)
            c = np.cos(theta)
            s = np.sin(theta)
            ph = np.where(mag > 0, np.conj(apq) / np.where(mag > 0, mag, 1.0), 1.0)
            # U = diag(1, e^{-i phi}) @ [[c, -s], [s, c]]
            u00, u01 = c, -s
            u10, u11 = s * ph, c * ph
            # rows only: A U = (U^H A)^H for Hermitian A, so two row passes suffice
            for _ in range(2):
                rp = a[p, :]
                rq = a[q, :]
                a[p, :] = u00[:, None] * rp + np.conj(u10)[:, None] * rq
                a[q, :] = u01[:, None] * rp + np.conj(u11)[:, None] * rq
                a = a.conj().T.copy()
            vp = vt[p, :]
            vq = vt[q, :]
            vt[p, :] = u00[:, None] * vp + u10[:, None] * vq
            vt[q, :] = u01[:, None] * vp + u11[:, None] * vq
        sweeps += 1

    evals = np.diag(a).real.copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], vt.T[:, order]
