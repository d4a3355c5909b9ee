import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from mqcotoc.hilbert import basis_state, magnetization, random_phase_state
from mqcotoc.lattice import CouplingTable, RingSpec, build_couplings
from mqcotoc.propagator import (
    TrotterPlan,
    dense_hamiltonian,
    dq_pair_gate,
    energy,
    evolve,
    exact_evolve,
    exact_propagator,
    step_count,
    step_unitary_blocks,
    parity_blocks,
    trotter_step,
    trotter_unitary_series,
    zeeman_gate,
)

from oracles import hamiltonian, trotter_step_matrix, dq_pair

UPUP, DOWNDOWN, UPDOWN = 0b11, 0b00, 0b01


def plan_for(N, alpha=3.0, seed=0, dt=0.01, **kw):
    return TrotterPlan(build_couplings(RingSpec(N, alpha, seed=seed, **kw)), dt)


def test_pair_gate_zero_quantum_untouched():
    psi = basis_state(2, UPDOWN)
    np.testing.assert_array_equal(dq_pair_gate(psi, 0, 1, 0.83), psi)


def test_pair_gate_two_level_solution():
    D, dt = 1.3, 0.2
    theta = D * dt
    out = dq_pair_gate(basis_state(2, UPUP), 0, 1, theta)
    expected = np.cos(theta / 2) * basis_state(2, UPUP) - 1j * np.sin(theta / 2) * basis_state(2, DOWNDOWN)
    np.testing.assert_allclose(out, expected, atol=1e-15)
    # against the 4x4 matrix exponential of the pair Hamiltonian
    U = expm(-1j * D * dt * dq_pair(0, 1, 2))
    for s in range(4):
        np.testing.assert_allclose(dq_pair_gate(basis_state(2, s), 0, 1, theta), U[:, s], atol=1e-14)


def test_pair_gate_identity_and_errors():
    psi = random_phase_state(4, 0)
    np.testing.assert_array_equal(dq_pair_gate(psi, 1, 3, 0.0), psi)
    with pytest.raises(ValueError):
        dq_pair_gate(psi, 2, 2, 0.1)


@given(st.integers(3, 7), st.data())
def test_pair_gate_matches_dense(N, data):
    i, j = data.draw(st.lists(st.integers(0, N - 1), min_size=2, max_size=2, unique=True))
    theta = data.draw(st.floats(-3, 3))
    psi = random_phase_state(N, N + i)
    U = expm(-1j * theta * dq_pair(i, j, N))
    np.testing.assert_allclose(dq_pair_gate(psi, i, j, theta), U @ psi, atol=1e-13)


def test_zeeman_examples():
    psi = random_phase_state(4, 3)
    np.testing.assert_array_equal(zeeman_gate(psi, np.zeros(4), 0.1), psi)
    h = np.array([0.3, -0.2, 0.1, 0.7])
    back = zeeman_gate(zeeman_gate(psi, h, 0.05, 1), h, 0.05, -1)
    assert np.max(np.abs(back - psi)) < 1e-14
    up = basis_state(1, 1)
    np.testing.assert_allclose(zeeman_gate(up, [0.4], 0.5), np.exp(-1j * 0.4 * 0.5 / 2) * up)
    with pytest.raises(ValueError):
        zeeman_gate(psi, h, 0.1, direction=2)


def test_step_inverse_and_norm():
    plan = plan_for(6, 2.0, seed=2)
    psi = random_phase_state(6, 4)
    fwd = trotter_step(psi, plan, 1)
    assert abs(np.linalg.norm(fwd) - 1) < 1e-13
    assert np.max(np.abs(trotter_step(fwd, plan, -1) - psi)) < 1e-13


def test_step_matches_literal_product():
    c = build_couplings(RingSpec(5, 1.5, seed=7, sign_mode="random"))
    plan = TrotterPlan(c, 0.05)
    S = trotter_step_matrix(c.D, c.h, 0.05)
    psi = random_phase_state(5, 1)
    np.testing.assert_allclose(trotter_step(psi, plan), S @ psi, atol=1e-13)


def test_evolve_group_property_and_zero():
    plan = plan_for(6, seed=1)
    psi = random_phase_state(6, 9)
    np.testing.assert_array_equal(evolve(psi, plan, 0.0), psi)
    a = evolve(evolve(psi, plan, 0.3), plan, 0.5)
    b = evolve(psi, plan, 0.8)
    assert np.max(np.abs(a - b)) < 1e-12


def test_evolve_reversibility():
    plan = plan_for(7, 1.0, seed=3)
    psi = random_phase_state(7, 2)
    out = evolve(evolve(psi, plan, 2.0, 1), plan, 2.0, -1)
    assert np.max(np.abs(out - psi)) < 1e-12
    assert abs(np.linalg.norm(evolve(psi, plan, 3.0)) - 1) < 1e-12


def test_evolve_errors():
    plan = plan_for(4)
    with pytest.raises(ValueError):
        evolve(basis_state(4, 0), plan, -0.1)
    with pytest.raises(ValueError):
        step_count(0.015, 0.01)
    assert step_count(0.3, 0.01) == 30


def test_parity_conservation():
    plan = plan_for(6, 1.0)
    M = magnetization(6)
    odd = (np.round(M * 2).astype(int) // 2) % 2 != 0
    for s in (0, 5, 21):
        psi = evolve(basis_state(6, s), plan, 2.0)
        parity = bool(odd[s])
        assert np.max(np.abs(psi[odd != parity])) < 1e-14


def test_step_unitary_blocks_match_step():
    plan = plan_for(5, 2.0, seed=4)
    blocks = step_unitary_blocks(plan)
    psi = random_phase_state(5, 0)
    out = np.zeros_like(psi)
    for idx, B in zip(parity_blocks(5), blocks):
        out[idx] = B @ psi[idx]
    np.testing.assert_allclose(out, trotter_step(psi, plan), atol=1e-14)


def test_unitary_series_powers():
    plan = plan_for(4, 3.0, seed=1)
    psi = random_phase_state(4, 3)
    for n, blocks in trotter_unitary_series(plan, [0, 3, 3, 10, 37]):
        out = np.zeros_like(psi)
        for idx, B in zip(parity_blocks(4), blocks):
            out[idx] = B @ psi[idx]
        np.testing.assert_allclose(out, evolve(psi, plan, n * plan.dt), atol=1e-12)
    with pytest.raises(ValueError):
        list(trotter_unitary_series(plan, [5, 2]))


def test_dense_hamiltonian_matches_kron_oracle():
    c = build_couplings(RingSpec(5, 2.0, seed=6, sign_mode="random"))
    np.testing.assert_allclose(dense_hamiltonian(c), hamiltonian(c.D, c.h), atol=1e-15)


def test_oracle_properties():
    c = build_couplings(RingSpec(6, 3.0, seed=2))
    prop = exact_propagator(c)
    U = prop.unitary(1.7)
    np.testing.assert_allclose(U @ prop.unitary(1.7, -1), np.eye(64), atol=1e-10)
    H = dense_hamiltonian(c)
    np.testing.assert_allclose(H, H.conj().T)
    psi = random_phase_state(6, 1)
    e0 = energy(c, psi)
    assert abs(energy(c, exact_evolve(prop, psi, 4.2)) - e0) < 1e-10


def test_oracle_refuses_large_rings():
    c = build_couplings(RingSpec(11, 3.0))
    with pytest.raises(ValueError):
        exact_propagator(c)


def _state_error(N, dt, t=1.0):
    c = build_couplings(RingSpec(N, 3.0, seed=0))
    psi = random_phase_state(N, 0)
    exact = exact_evolve(exact_propagator(c), psi, t)
    return np.linalg.norm(evolve(psi, TrotterPlan(c, dt), t) - exact)


def test_trotter_error_ratio_on_halving():
    e1, e2, e3 = (_state_error(6, dt) for dt in (0.04, 0.02, 0.01))
    assert 3.6 < e1 / e2 < 4.4
    assert 3.6 < e2 / e3 < 4.4


def test_trotter_second_order_slope():
    dts = np.array([0.04, 0.02, 0.01])
    errs = np.array([_state_error(6, dt) for dt in dts])
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.1


def test_ghz_state_against_oracle():
    N = 8
    c = build_couplings(RingSpec(N, 3.0, seed=0))
    ghz = (basis_state(N, 0) + basis_state(N, (1 << N) - 1)) / np.sqrt(2)
    exact = exact_evolve(exact_propagator(c), ghz, 5.0)
    trot = evolve(ghz, TrotterPlan(c, 0.01), 5.0)
    assert 1 - abs(np.vdot(exact, trot)) ** 2 < 1e-6


def test_plan_validation():
    c = build_couplings(RingSpec(4, 3.0))
    with pytest.raises(ValueError):
        TrotterPlan(c, 0.0)
    zero = CouplingTable(np.zeros((3, 3)), np.zeros(3))
    assert TrotterPlan(zero).pairs == ()
