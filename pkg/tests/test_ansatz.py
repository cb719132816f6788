import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from xyvqe.ansatz import (
    AnsatzSpec,
    Circuit,
    Explicit,
    Full,
    GateInstr,
    Linear,
    Range,
    build,
    connectivity_label,
    enumerate_gate_orders,
    gate_order_space_size,
    pair_set,
    param_count,
    parse_connectivity,
    run_circuit,
    run_circuit_numpy,
)
from xyvqe.errors import ValidationError
from xyvqe.measure import expectation
from xyvqe.model import XYModel
from xyvqe.qstate import fidelity
from xyvqe.rng import make_rng

ALL_SPECS = [
    AnsatzSpec("MF", 4),
    AnsatzSpec("CNOT", 4, Linear()),
    AnsatzSpec("CNOT", 4, Full(), layers=2),
    AnsatzSpec("CRX", 4, Full()),
    AnsatzSpec("CRX", 4, Full(), layers=4),
    AnsatzSpec("CRX", 5, Range(2), layers=2, interleave_mf=True),
    AnsatzSpec("TQR", 4, Linear()),
    AnsatzSpec("TQR", 4, Full(), layers=3),
    AnsatzSpec("TQR", 3, Explicit(((2, 0), (0, 1)))),
]


def counts(c: Circuit) -> dict[str, int]:
    out: dict[str, int] = {}
    for ins in c.instrs:
        out[ins.kind] = out.get(ins.kind, 0) + 1
    return out


# --- builders ----------------------------------------------------------------------


def test_mf_layout():
    c = build(AnsatzSpec("MF", 4))
    assert len(c.instrs) == 8 and c.num_params == 8
    assert [(i.kind, i.qubits, i.param_slot) for i in c.instrs[:2]] == [("RY", (0,), 0), ("RZ", (0,), 1)]


def test_full_crx_layout():
    c = build(AnsatzSpec("CRX", 4, Full()))
    assert counts(c) == {"RY": 4, "RZ": 4, "CRX": 6}
    assert c.num_params == 14
    # mean-field first, then lexicographic pairs with the lower index as control
    assert [i.qubits for i in c.instrs[8:]] == list(itertools.combinations(range(4), 2))


def test_full_tqr_layout():
    c = build(AnsatzSpec("TQR", 4, Full()))
    assert counts(c) == {"RXX": 6, "RYY": 6, "RY": 4, "RZ": 4}
    assert c.num_params == 20
    # entangler first, RXX then RYY per pair, mean-field last
    assert [i.kind for i in c.instrs[:4]] == ["RXX", "RYY", "RXX", "RYY"]
    assert c.instrs[0].qubits == c.instrs[1].qubits == (0, 1)
    assert {i.kind for i in c.instrs[12:]} == {"RY", "RZ"}


def test_mf_ignores_connectivity_and_layers():
    assert build(AnsatzSpec("MF", 3, Linear(), layers=5)) == build(AnsatzSpec("MF", 3))


@pytest.mark.parametrize("n", [2, 3, 4, 6])
def test_range_pair_sets(n):
    assert pair_set(Range(1), n) == pair_set(Linear(), n)
    assert pair_set(Range(n - 1), n) == pair_set(Full(), n)
    assert pair_set(Range(n + 3), n) == pair_set(Full(), n)
    for fam in ("CRX", "TQR"):
        assert build(AnsatzSpec(fam, n, Range(n - 1))).instrs == build(AnsatzSpec(fam, n, Full())).instrs


def test_range_pairs_within_distance():
    assert pair_set(Range(2), 4) == [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]


def test_explicit_validation():
    with pytest.raises(ValidationError):
        build(AnsatzSpec("CRX", 3, Explicit(((0, 3),))))
    with pytest.raises(ValidationError):
        build(AnsatzSpec("CRX", 3, Explicit(((1, 1),))))


def test_spec_validation():
    with pytest.raises(ValidationError):
        AnsatzSpec("CZX", 4)
    with pytest.raises(ValidationError):
        AnsatzSpec("TQR", 4, layers=0)
    with pytest.raises(ValidationError):
        Range(0)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
def test_param_count_matches_build(spec):
    assert param_count(spec) == build(spec).num_params


def test_param_count_examples():
    for L in (1, 2, 5):
        assert param_count(AnsatzSpec("CNOT", 4, Full(), layers=L)) == 8
    assert param_count(AnsatzSpec("TQR", 4, Linear())) == 14
    assert param_count(AnsatzSpec("CRX", 4, Full(), layers=4)) == 32


def test_layers_get_independent_slots():
    c = build(AnsatzSpec("CRX", 4, Full(), layers=3))
    slots = [i.param_slot for i in c.instrs if i.kind == "CRX"]
    assert len(set(slots)) == 18


def test_parse_connectivity():
    assert parse_connectivity("linear") == Linear()
    assert parse_connectivity("FULL") == Full()
    assert parse_connectivity("range:2") == Range(2)
    assert parse_connectivity([[1, 0], [2, 1]]) == Explicit(((1, 0), (2, 1)))
    with pytest.raises(ValidationError):
        parse_connectivity("ring")
    for conn in (Linear(), Full(), Range(3), Explicit(((0, 2),))):
        assert parse_connectivity(connectivity_label(conn)) == conn


def test_gate_instr_validation():
    with pytest.raises(ValidationError):
        GateInstr("RY", (0, 1), 0)
    with pytest.raises(ValidationError):
        GateInstr("CNOT", (0, 1), 3)
    with pytest.raises(ValidationError):
        GateInstr("RXX", (2, 2), 0)
    with pytest.raises(ValidationError):
        Circuit(2, (GateInstr("RY", (0,), 1),), 2)  # slot 0 unused


# --- gate orders ---------------------------------------------------------------------


def test_gate_order_space_sizes():
    assert gate_order_space_size(4) == 46080
    assert gate_order_space_size(2) == 2
    assert gate_order_space_size(3) == 48


def test_enumerate_gate_orders_distinct_and_complete():
    orders = enumerate_gate_orders(4, make_rng(0), 25)
    assert len({o.pairs for o in orders}) == 25
    for o in orders:
        assert sorted(tuple(sorted(p)) for p in o.pairs) == list(itertools.combinations(range(4), 2))


def test_enumerate_gate_orders_exhausts_small_space():
    orders = enumerate_gate_orders(2, make_rng(1), 2)
    assert {o.pairs for o in orders} == {((0, 1),), ((1, 0),)}
    with pytest.raises(ValueError):
        enumerate_gate_orders(2, make_rng(1), 3)
    with pytest.raises(ValueError):
        enumerate_gate_orders(6, make_rng(1), 1)  # 15 pairs


def test_enumerate_gate_orders_deterministic():
    a = enumerate_gate_orders(4, make_rng(7), 10)
    b = enumerate_gate_orders(4, make_rng(7), 10)
    assert a == b


def test_gate_order_sampling_is_uniform_enough():
    # N=3: 48 orders; 4800 single draws should hit each about 100 times
    rng = make_rng(3)
    seen: dict = {}
    for _ in range(4800):
        o = enumerate_gate_orders(3, rng, 1)[0].pairs
        seen[o] = seen.get(o, 0) + 1
    assert len(seen) == 48
    assert max(seen.values()) < 100 + 5 * 10 and min(seen.values()) > 100 - 5 * 10


# --- execution -----------------------------------------------------------------------


def test_mf_plus_state():
    c = build(AnsatzSpec("MF", 3))
    p = np.zeros(6)
    p[0::2] = math.pi / 2
    assert_allclose(run_circuit(c, p).amplitudes, np.full(8, 1 / math.sqrt(8)), atol=1e-15)


def test_zero_params_tqr_gives_zero_state():
    c = build(AnsatzSpec("TQR", 4))
    assert_allclose(run_circuit(c, np.zeros(c.num_params)).amplitudes, np.eye(16)[0])


def test_cnot_after_plus_states():
    c = build(AnsatzSpec("CNOT", 2))
    psi = run_circuit(c, [math.pi / 2, 0, math.pi / 2, 0]).amplitudes
    # |++> is invariant under CNOT, so all four amplitudes stay 1/2
    assert_allclose(psi, [0.5] * 4, atol=1e-15)
    # control in |1>, target |+>: CNOT swaps target amplitudes
    psi = run_circuit(c, [math.pi, 0, math.pi / 3, 0]).amplitudes
    assert_allclose(np.abs(psi), [0, math.sin(math.pi / 6), 0, math.cos(math.pi / 6)], atol=1e-15)


def test_param_length_checked():
    c = build(AnsatzSpec("MF", 2))
    with pytest.raises(ValueError):
        run_circuit(c, np.zeros(3))


@pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
def test_compiled_matches_numpy_kernels(spec):
    c = build(spec)
    rng = np.random.default_rng(0)
    for _ in range(5):
        p = rng.uniform(-4, 4, c.num_params)
        assert_allclose(run_circuit(c, p).amplitudes, run_circuit_numpy(c, p).amplitudes, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), which=st.integers(0, len(ALL_SPECS) - 1))
def test_output_normalized(seed, which):
    c = build(ALL_SPECS[which])
    p = np.random.default_rng(seed).uniform(-10, 10, c.num_params)
    assert abs(run_circuit(c, p).norm_sq() - 1) <= 1e-10


@pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
def test_wrap_params_preserves_state(spec):
    c = build(spec)
    p = np.random.default_rng(1).uniform(-20, 20, c.num_params)
    w = c.wrap_params(p)
    half = c.param_periods() / 2
    assert np.all((w > -half - 1e-12) & (w <= half + 1e-12))
    assert fidelity(run_circuit(c, p), run_circuit(c, w)) == pytest.approx(1.0, abs=1e-12)


def test_crx_period_is_four_pi():
    c = build(AnsatzSpec("CRX", 2))
    p = np.array([1.0, 0.2, 2.0, 0.3, 0.7])
    q = p.copy()
    q[4] += 2 * math.pi
    assert fidelity(run_circuit(c, p), run_circuit(c, q)) < 0.99
    q[4] += 2 * math.pi
    assert fidelity(run_circuit(c, p), run_circuit(c, q)) == pytest.approx(1.0, abs=1e-12)


def _shift_derivative(f, p, k, kind):
    e = np.zeros_like(p)
    e[k] = 1.0
    if kind == "CRX":
        # four-term rule for generators with eigenvalues {0, +-1/2}
        cp = (math.sqrt(2) + 1) / (4 * math.sqrt(2))
        cm = (math.sqrt(2) - 1) / (4 * math.sqrt(2))
        a = f(p + math.pi / 2 * e) - f(p - math.pi / 2 * e)
        b = f(p + 3 * math.pi / 2 * e) - f(p - 3 * math.pi / 2 * e)
        return cp * a - cm * b
    return 0.5 * (f(p + math.pi / 2 * e) - f(p - math.pi / 2 * e))


@pytest.mark.parametrize("family", ["CRX", "TQR"])
def test_parameter_shift_matches_finite_differences(family):
    c = build(AnsatzSpec(family, 4, Full()))
    m = XYModel(1.0, 0.6, 4)

    def f(x):
        return expectation(run_circuit(c, x), m)

    rng = np.random.default_rng(5)
    p = rng.uniform(-np.pi, np.pi, c.num_params)
    kinds = {i.param_slot: i.kind for i in c.instrs if i.param_slot is not None}
    step = 1e-5
    for k in range(c.num_params):
        e = np.zeros_like(p)
        e[k] = step
        fd = (f(p + e) - f(p - e)) / (2 * step)
        assert _shift_derivative(f, p, k, kinds[k]) == pytest.approx(fd, abs=1e-6)


# --- serialization ---------------------------------------------------------------


@pytest.mark.parametrize("spec", ALL_SPECS, ids=repr)
def test_text_round_trip(spec):
    c = build(spec)
    text = c.to_text()
    again = Circuit.from_text(text)
    assert again == c
    assert again.to_text() == text


def test_text_format_lines():
    lines = build(AnsatzSpec("CRX", 2)).to_text().splitlines()
    assert lines[0] == "# num_qubits=2 num_params=5"
    assert lines[1:] == ["RY 0 0", "RZ 0 1", "RY 1 2", "RZ 1 3", "CRX 0 1 4"]
    assert build(AnsatzSpec("CNOT", 2)).to_text().splitlines()[-1] == "CNOT 0 1"


def test_text_errors():
    with pytest.raises(ValidationError, match="line 2"):
        Circuit.from_text("RY 0 0\nFOO 1 2\n")
    with pytest.raises(ValidationError, match="expects"):
        Circuit.from_text("CRX 0 1\n")
