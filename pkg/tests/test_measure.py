import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from xyvqe import measure
from xyvqe.ansatz import AnsatzSpec, Full, build, run_circuit
from xyvqe.measure import (
    BASIS_ROTATION,
    EnergyEstimate,
    MeasurementSetting,
    energy_estimate,
    energy_exact,
    energy_sampled,
    estimate_z,
    estimate_zz,
    expectation,
    pauli_expectations,
    rotate_to_basis,
)
from xyvqe.model import XYModel, dense_hamiltonian, mf_energy, pauli_matrix
from xyvqe.qstate import PAULI_X, PAULI_Y, PAULI_Z, StateVector, zero_state
from xyvqe.rng import make_rng

TQR4 = build(AnsatzSpec("TQR", 4, Full()))


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector.from_amplitudes(v, normalize=True)


# --- basis rotations -----------------------------------------------------------------


def test_basis_rotations_map_onto_z():
    # measuring Z after U is measuring U^dag Z U before it
    for basis, pauli in (("X", PAULI_X), ("Y", PAULI_Y)):
        u = BASIS_ROTATION[basis]
        assert_allclose(u.conj().T @ PAULI_Z @ u, pauli, atol=1e-15)
    assert BASIS_ROTATION["Z"] is None


def test_measurement_setting_validation():
    assert MeasurementSetting("X").rotation is BASIS_ROTATION["X"]
    with pytest.raises(ValueError):
        MeasurementSetting("W")


def test_grouped_settings_diagonalize_pairs():
    # after the all-X (all-Y) rotation every XX (YY) term becomes ZZ
    u = {b: BASIS_ROTATION[b] for b in "XY"}
    for b, p in (("X", PAULI_X), ("Y", PAULI_Y)):
        uu = np.kron(u[b], u[b])
        assert_allclose(uu.conj().T @ np.kron(PAULI_Z, PAULI_Z) @ uu, np.kron(p, p), atol=1e-14)


# --- counting estimators ---------------------------------------------------------------


def test_estimate_z_examples():
    assert estimate_z({0: 100}, 0, 100) == 1.0
    assert estimate_z({0: 50, 1: 50}, 0, 100) == 0.0
    assert estimate_z({0: 3, 1: 1}, 0, 4) == 0.5


def test_estimate_zz_examples():
    assert estimate_zz({0: 10}, 0, 1, 10) == 1.0
    # |01> has qubit 1 set: index 2
    assert estimate_zz({2: 10}, 0, 1, 10) == -1.0
    assert estimate_zz({0: 8192, 3: 8192}, 0, 1, 16384) == 1.0


def test_estimators_validate():
    with pytest.raises(ValueError):
        estimate_z({}, 0, 10)
    with pytest.raises(ValueError):
        estimate_z({0: 5}, 0, 10)
    with pytest.raises(ValueError):
        estimate_zz({0: 10}, 1, 1, 10)


@settings(max_examples=60, deadline=None)
@given(
    counts=st.dictionaries(st.integers(0, 15), st.integers(1, 1000), min_size=1, max_size=16),
    i=st.integers(0, 3),
    j=st.integers(0, 3),
)
def test_estimators_in_range(counts, i, j):
    shots = sum(counts.values())
    assert -1 <= estimate_z(counts, i, shots) <= 1
    if i != j:
        assert -1 <= estimate_zz(counts, i, j, shots) <= 1


# --- exact expectations -----------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_expectation_matches_dense(n):
    m = XYModel(0.8, -0.45, n)
    H = dense_hamiltonian(m)
    for seed in range(3):
        psi = random_state(n, seed)
        oracle = np.vdot(psi.amplitudes, H @ psi.amplitudes).real
        assert expectation(psi, m) == pytest.approx(oracle, abs=1e-10)


def test_pauli_expectations_match_dense():
    psi = random_state(3, 9)
    strings = ["XYZ", "IIY", "ZZI", "YXI", "III", "XXX"]
    got = pauli_expectations(psi, strings)
    for s, v in zip(strings, got):
        oracle = np.vdot(psi.amplitudes, pauli_matrix(s) @ psi.amplitudes).real
        assert v == pytest.approx(oracle, abs=1e-12)
    with pytest.raises(ValueError):
        pauli_expectations(psi, ["XX"])


def test_mf_circuit_matches_analytic():
    c = build(AnsatzSpec("MF", 4))
    rng = np.random.default_rng(3)
    for _ in range(5):
        p = rng.uniform(-np.pi, np.pi, 8)
        m = XYModel(1.1, 0.37, 4)
        assert energy_exact(c, p, m) == pytest.approx(mf_energy(p[0::2], p[1::2], m.J, m.h), abs=1e-10)


def test_zero_params_tqr():
    m = XYModel(1.0, 0.8, 4)
    assert energy_exact(TQR4, np.zeros(TQR4.num_params), m) == pytest.approx(-0.8 * 4)


def test_expectation_size_mismatch():
    with pytest.raises(ValueError):
        expectation(zero_state(3), XYModel(1.0, 0.0, 4))


def test_exact_estimate_has_zero_error():
    est = energy_estimate(TQR4, np.zeros(TQR4.num_params), XYModel(1.0, 0.5, 4))
    assert est.std_error == 0.0 and est.mode == "EXACT"


# --- sampled estimation ------------------------------------------------------------------


def test_rotate_to_basis_matches_gate():
    psi = random_state(2, 4)
    r = rotate_to_basis(psi, "XY")
    u = np.kron(BASIS_ROTATION["Y"], BASIS_ROTATION["X"])
    assert_allclose(r.amplitudes, u @ psi.amplitudes, atol=1e-14)


@pytest.mark.parametrize("grouping", ["grouped", "per_term"])
def test_zero_state_sampled_is_exact_in_z(grouping):
    m = XYModel(1.0, 0.7, 4)
    est = energy_sampled(TQR4, np.zeros(TQR4.num_params), m, 1000, make_rng(0), grouping)
    # Z terms are deterministic; XX/YY histograms on |0000> rotated average near zero
    assert abs(est.value - (-0.7 * 4)) <= 5 * est.std_error + 1e-12


def test_zero_state_z_only_model_is_exact():
    m = XYModel(0.0, 0.7, 4)
    est = energy_sampled(TQR4, np.zeros(TQR4.num_params), m, 1000, make_rng(0))
    assert est.value == pytest.approx(-2.8) and est.std_error == 0.0


def test_std_error_per_z_term_at_half():
    # one qubit in |+>: <Z> = 0, binomial error 1/sqrt(shots) for a unit coefficient
    c = build(AnsatzSpec("MF", 2))
    m = XYModel(0.0, -1.0, 2)
    shots = 2**14
    p = [math.pi / 2, 0, 0, 0]
    est = energy_sampled(c, p, m, shots, make_rng(1))
    assert est.std_error == pytest.approx(1 / math.sqrt(shots), rel=0.01)


def test_sampled_rejects_bad_args():
    m = XYModel(1.0, 0.0, 4)
    with pytest.raises(ValueError):
        energy_sampled(TQR4, np.zeros(20), m, 0, make_rng(0))
    with pytest.raises(ValueError):
        energy_sampled(TQR4, np.zeros(20), m, 10, make_rng(0), grouping="greedy")
    with pytest.raises(ValueError):
        energy_estimate(TQR4, np.zeros(20), m, mode="SAMPLED")
    with pytest.raises(ValueError):
        energy_estimate(TQR4, np.zeros(20), m, mode="NOISY")


@pytest.mark.parametrize("grouping", ["grouped", "per_term"])
def test_sampled_agrees_with_exact(grouping):
    m = XYModel(1.0, 0.6, 4)
    rng = np.random.default_rng(11)
    shot_rng = make_rng(12)
    for _ in range(30):
        p = rng.uniform(-np.pi, np.pi, TQR4.num_params)
        est = energy_sampled(TQR4, p, m, 2**12, shot_rng, grouping)
        assert abs(est.value - energy_exact(TQR4, p, m)) <= 5 * est.std_error


def test_sampled_unbiased_over_seeds():
    m = XYModel(1.0, -0.4, 4)
    p = np.random.default_rng(2).uniform(-np.pi, np.pi, TQR4.num_params)
    exact = energy_exact(TQR4, p, m)
    values, errors = [], []
    for seed in range(200):
        est = energy_sampled(TQR4, p, m, 2**10, make_rng(seed))
        values.append(est.value)
        errors.append(est.std_error)
    assert abs(np.mean(values) - exact) <= 3 * np.mean(errors) / math.sqrt(200)


def test_sampled_deterministic_given_seed():
    m = XYModel(1.0, 0.3, 4)
    p = np.linspace(-1, 1, TQR4.num_params)
    a = energy_sampled(TQR4, p, m, 500, make_rng(5))
    b = energy_sampled(TQR4, p, m, 500, make_rng(5))
    assert a == b
    assert isinstance(a, EnergyEstimate) and a.mode == "SAMPLED"


def test_pauli_tables_are_cached():
    m = XYModel(1.0, 0.3, 4)
    assert measure._model_tables(m) is measure._model_tables(XYModel(1.0, 0.3, 4))
