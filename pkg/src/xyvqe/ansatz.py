"""Circuit IR and ansatz builders.

Families:

* ``MF``   - RY(theta_p) then RZ(phi_p) on every qubit.
* ``CNOT`` - mean-field block, then ``layers`` CNOT entanglers (no parameters).
* ``CRX``  - mean-field block, then ``layers`` controlled-RX entanglers.
* ``TQR``  - ``layers`` entanglers of RXX(alpha_ij) RYY(beta_ij), then the
  mean-field block.

Parameter slots are numbered in emission order, so for MF/CNOT/CRX the
mean-field angles come first and for TQR they come last.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import _fastsim, qstate
from .errors import ValidationError
from .qstate import StateVector

FAMILIES = ("MF", "CNOT", "CRX", "TQR")
GATE_ARITY = {"RY": 1, "RZ": 1, "RX": 1, "CNOT": 2, "CRX": 2, "RXX": 2, "RYY": 2}
PARAMETRIC = {"RY", "RZ", "RX", "CRX", "RXX", "RYY"}


@dataclass(frozen=True)
class GateInstr:
    kind: str
    qubits: tuple[int, ...]
    param_slot: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_ARITY:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValidationError(f"{self.kind} acts on {GATE_ARITY[self.kind]} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"{self.kind} qubits must be distinct, got {self.qubits}")
        if (self.param_slot is None) == (self.kind in PARAMETRIC):
            raise ValidationError(f"{self.kind} parameter slot mismatch: {self.param_slot!r}")


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    instrs: tuple[GateInstr, ...]
    num_params: int

    def __post_init__(self) -> None:
        used = set()
        for ins in self.instrs:
            if any(not 0 <= q < self.num_qubits for q in ins.qubits):
                raise ValidationError(f"{ins} touches a qubit outside [0, {self.num_qubits})")
            if ins.param_slot is not None:
                if not 0 <= ins.param_slot < self.num_params:
                    raise ValidationError(f"{ins} slot outside [0, {self.num_params})")
                used.add(ins.param_slot)
        if len(used) != self.num_params:
            missing = sorted(set(range(self.num_params)) - used)
            raise ValidationError(f"parameter slots never referenced: {missing}")

    @cached_property
    def program(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat opcode arrays consumed by the compiled executor."""
        ops = np.array([_fastsim.OPCODES[i.kind] for i in self.instrs], dtype=np.int64)
        qa = np.array([i.qubits[0] for i in self.instrs], dtype=np.int64)
        qb = np.array([i.qubits[-1] for i in self.instrs], dtype=np.int64)
        slots = np.array([-1 if i.param_slot is None else i.param_slot for i in self.instrs], dtype=np.int64)
        return ops, qa, qb, slots

    def param_periods(self) -> np.ndarray:
        """Period of the output state (up to global phase) in each parameter.

        Single-qubit and XX/YY rotations are 2*pi periodic up to a sign;
        a controlled rotation picks up a relative sign instead, so CRX
        angles are only 4*pi periodic.
        """
        periods = np.full(self.num_params, 2 * math.pi)
        for ins in self.instrs:
            if ins.kind == "CRX":
                periods[ins.param_slot] = 4 * math.pi
        return periods

    def wrap_params(self, params) -> np.ndarray:
        """Map parameters into (-period/2, period/2] without changing the state."""
        p = np.asarray(params, dtype=float)
        per = self.param_periods()
        half = per / 2
        return half - np.mod(half - p, per)

    def to_text(self) -> str:
        lines = [f"# num_qubits={self.num_qubits} num_params={self.num_params}"]
        for ins in self.instrs:
            parts = [ins.kind, *map(str, ins.qubits)]
            if ins.param_slot is not None:
                parts.append(str(ins.param_slot))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        num_qubits = num_params = None
        instrs = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "num_qubits":
                        num_qubits = int(val)
                    elif key == "num_params":
                        num_params = int(val)
                continue
            kind, *rest = line.split()
            if kind not in GATE_ARITY:
                raise ValidationError(f"line {lineno}: unknown gate kind {kind!r}")
            arity = GATE_ARITY[kind]
            expected = arity + (kind in PARAMETRIC)
            if len(rest) != expected:
                raise ValidationError(f"line {lineno}: {kind} expects {expected} integers, got {len(rest)}")
            nums = [int(t) for t in rest]
            slot = nums[arity] if kind in PARAMETRIC else None
            instrs.append(GateInstr(kind, tuple(nums[:arity]), slot))
        if num_qubits is None:
            num_qubits = 1 + max((q for ins in instrs for q in ins.qubits), default=0)
        if num_params is None:
            num_params = 1 + max((ins.param_slot for ins in instrs if ins.param_slot is not None), default=-1)
        return cls(num_qubits, tuple(instrs), num_params)


# --- connectivity -------------------------------------------------------------


@dataclass(frozen=True)
class Linear:
    pass


@dataclass(frozen=True)
class Full:
    pass


@dataclass(frozen=True)
class Range:
    r: int

    def __post_init__(self) -> None:
        if self.r < 1:
            raise ValidationError(f"range must be a positive integer, got {self.r}")


@dataclass(frozen=True)
class Explicit:
    """Ordered, directed pairs ``(control, target)``."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))

    def label(self) -> str:
        return "".join(f"({a},{b})" for a, b in self.pairs)


Connectivity = Union[Linear, Full, Range, Explicit]


def pair_set(conn: Connectivity, n: int) -> list[tuple[int, int]]:
    if isinstance(conn, Linear):
        return [(i, i + 1) for i in range(n - 1)]
    if isinstance(conn, Full):
        return list(itertools.combinations(range(n), 2))
    if isinstance(conn, Range):
        return [(i, j) for i, j in itertools.combinations(range(n), 2) if j - i <= conn.r]
    if isinstance(conn, Explicit):
        for a, b in conn.pairs:
            if a == b or not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"invalid pair ({a},{b}) for {n} qubits")
        return list(conn.pairs)
    raise TypeError(f"unknown connectivity {conn!r}")


def parse_connectivity(text: str | Sequence) -> Connectivity:
    """``"linear"``, ``"full"``, ``"range:2"`` or a list of pairs."""
    if not isinstance(text, str):
        return Explicit(tuple(tuple(p) for p in text))
    key = text.strip().lower()
    if key == "linear":
        return Linear()
    if key == "full":
        return Full()
    if key.startswith("range:"):
        return Range(int(key.split(":", 1)[1]))
    raise ValidationError(f"unknown connectivity {text!r}")


def connectivity_label(conn: Connectivity) -> str | list:
    if isinstance(conn, Linear):
        return "linear"
    if isinstance(conn, Full):
        return "full"
    if isinstance(conn, Range):
        return f"range:{conn.r}"
    return [list(p) for p in conn.pairs]


@dataclass(frozen=True)
class AnsatzSpec:
    family: str
    num_qubits: int
    connectivity: Connectivity = field(default_factory=Full)
    layers: int = 1
    interleave_mf: bool = False

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.num_qubits < 1:
            raise ValidationError(f"num_qubits must be >= 1, got {self.num_qubits}")
        if self.layers < 1:
            raise ValidationError(f"layers must be >= 1, got {self.layers}")


# --- builders -------------------------------------------------------------------


def build(spec: AnsatzSpec) -> Circuit:
    n = spec.num_qubits
    instrs: list[GateInstr] = []
    slot = 0

    def mf_block() -> None:
        nonlocal slot
        for q in range(n):
            instrs.append(GateInstr("RY", (q,), slot))
            instrs.append(GateInstr("RZ", (q,), slot + 1))
            slot += 2

    def entangler(pairs) -> None:
        nonlocal slot
        for a, b in pairs:
            if spec.family == "CNOT":
                instrs.append(GateInstr("CNOT", (a, b)))
            elif spec.family == "CRX":
                instrs.append(GateInstr("CRX", (a, b), slot))
                slot += 1
            else:
                instrs.append(GateInstr("RXX", (a, b), slot))
                instrs.append(GateInstr("RYY", (a, b), slot + 1))
                slot += 2

    if spec.family == "MF":
        mf_block()
        return Circuit(n, tuple(instrs), slot)

    pairs = pair_set(spec.connectivity, n)
    if spec.family == "TQR":
        for layer in range(spec.layers):
            if spec.interleave_mf and layer > 0:
                mf_block()
            entangler(pairs)
        mf_block()
    else:
        mf_block()
        for layer in range(spec.layers):
            if spec.interleave_mf and layer > 0:
                mf_block()
            entangler(pairs)
    return Circuit(n, tuple(instrs), slot)


def param_count(spec: AnsatzSpec) -> int:
    mf = 2 * spec.num_qubits
    if spec.family == "MF":
        return mf
    per_pair = {"CNOT": 0, "CRX": 1, "TQR": 2}[spec.family]
    per_layer = per_pair * len(pair_set(spec.connectivity, spec.num_qubits))
    mf_blocks = spec.layers if spec.interleave_mf else 1
    return mf * mf_blocks + spec.layers * per_layer


def gate_order_space_size(n: int) -> int:
    m = math.comb(n, 2)
    return math.factorial(m) * 2**m


def enumerate_gate_orders(n: int, rng: np.random.Generator, count: int) -> list[Explicit]:
    """Sample ``count`` distinct orderings/directions of the full pair set."""
    m = math.comb(n, 2)
    if m > 12:
        raise ValueError(f"{m} pairs is too many for order enumeration (max 12)")
    space = gate_order_space_size(n)
    if count > space:
        raise ValueError(f"requested {count} orders but only {space} exist")
    base = list(itertools.combinations(range(n), 2))
    seen: set[tuple] = set()
    out: list[Explicit] = []
    while len(out) < count:
        perm = rng.permutation(m)
        flips = rng.integers(0, 2, size=m)
        pairs = tuple(base[k][::-1] if f else base[k] for k, f in zip(perm, flips))
        if pairs in seen:
            continue
        seen.add(pairs)
        out.append(Explicit(pairs))
    return out


# --- execution ------------------------------------------------------------------


def _check_params(c: Circuit, params) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    if p.shape != (c.num_params,):
        raise ValueError(f"expected {c.num_params} parameters, got shape {p.shape}")
    return p


def run_circuit(c: Circuit, params) -> StateVector:
    """Apply the circuit to |0...0> with the given parameter vector (compiled path)."""
    p = _check_params(c, params)
    ops, qa, qb, slots = c.program
    return StateVector(c.num_qubits, _fastsim.run_program(ops, qa, qb, slots, p, c.num_qubits))


def run_circuit_numpy(c: Circuit, params) -> StateVector:
    """Same as :func:`run_circuit` through the numpy gate kernels; used as a cross-check."""
    p = _check_params(c, params)
    state = qstate.zero_state(c.num_qubits)
    for ins in c.instrs:
        k = ins.kind
        theta = p[ins.param_slot] if ins.param_slot is not None else 0.0
        if k in ("RY", "RZ", "RX"):
            qstate.apply_1q(state, _ROT[k](theta), ins.qubits[0])
        elif k == "CNOT":
            qstate.apply_ctrl_1q(state, qstate.PAULI_X, *ins.qubits)
        elif k == "CRX":
            qstate.apply_ctrl_1q(state, qstate.rx(theta), *ins.qubits)
        else:
            qstate.apply_2q_rotation(state, k[1:], theta, *ins.qubits)
    return state


_ROT = {"RY": qstate.ry, "RZ": qstate.rz, "RX": qstate.rx}
