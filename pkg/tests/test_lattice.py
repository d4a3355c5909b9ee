import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mqcotoc.lattice import (
    CouplingTable,
    RingSpec,
    bond_distance,
    build_couplings,
    coupling_second_moment,
    load_couplings_csv,
)

specs = st.builds(
    RingSpec,
    N=st.integers(2, 12),
    alpha=st.floats(0.5, 4.0),
    J=st.floats(0.1, 3.0),
    sign_mode=st.sampled_from(["uniform", "random"]),
    disorder_width=st.floats(0.0, 3.0),
    seed=st.integers(0, 2**32),
)


@pytest.mark.parametrize("i,j,N,expected", [(0, 1, 8, 1), (1, 6, 8, 3), (0, 4, 8, 4)])
def test_bond_distance_examples(i, j, N, expected):
    assert bond_distance(i, j, N) == expected


def test_bond_distance_out_of_range():
    with pytest.raises(IndexError):
        bond_distance(0, 8, 8)
    with pytest.raises(IndexError):
        bond_distance(-1, 2, 8)


@given(st.integers(2, 30), st.data())
def test_bond_distance_symmetric(N, data):
    i = data.draw(st.integers(0, N - 1))
    j = data.draw(st.integers(0, N - 1))
    d = bond_distance(i, j, N)
    assert d == bond_distance(j, i, N)
    assert (d == 0) == (i == j)
    assert 0 <= d <= N // 2


def test_dipolar_couplings():
    D = build_couplings(RingSpec(8, 3.0, J=1.0)).D
    assert D[0, 1] == 1.0
    assert D[0, 2] == 1 / 8
    assert D[0, 4] == 1 / 64
    assert np.all(D[np.triu_indices(8, 1)] > 0)


def test_random_sign_magnitudes():
    table = build_couplings(RingSpec(8, 1.0, sign_mode="random", seed=3))
    for i in range(8):
        for j in range(8):
            if i != j:
                assert abs(table.D[i, j]) == 1.0 / bond_distance(i, j, 8)
    signs = np.sign(table.D[np.triu_indices(8, 1)])
    assert set(signs) == {-1.0, 1.0}


def test_same_spec_same_tables():
    a = build_couplings(RingSpec(10, 2.0, sign_mode="random", seed=99))
    b = build_couplings(RingSpec(10, 2.0, sign_mode="random", seed=99))
    assert a.D.tobytes() == b.D.tobytes()
    assert a.h.tobytes() == b.h.tobytes()
    c = build_couplings(RingSpec(10, 2.0, sign_mode="random", seed=100))
    assert c.h.tobytes() != a.h.tobytes()


def test_fields_within_width():
    table = build_couplings(RingSpec(12, 3.0, disorder_width=0.6, seed=5))
    assert np.all(np.abs(table.h) <= 0.3)
    assert np.all(build_couplings(RingSpec(6, 3.0, disorder_width=0.0)).h == 0)


def test_second_moment_two_spins():
    D = 0.7
    table = CouplingTable(np.array([[0.0, D], [D, 0.0]]), np.zeros(2))
    assert coupling_second_moment(table) == pytest.approx(2 * D**2, rel=1e-15)


def test_second_moment_brute_force():
    table = build_couplings(RingSpec(8, 3.0))
    total = 0.0
    count = 0
    for i in range(8):
        for j in range(8):
            if i == j:
                continue
            r = min(abs(i - j), 8 - abs(i - j))
            total += (1.0 / r**3) ** 2
            count += 1
    assert count == 56
    assert coupling_second_moment(table) == pytest.approx(total, rel=1e-14)


def test_second_moment_ignores_signs():
    u = build_couplings(RingSpec(9, 1.5, sign_mode="uniform", seed=4))
    r = build_couplings(RingSpec(9, 1.5, sign_mode="random", seed=4))
    assert coupling_second_moment(u) == pytest.approx(coupling_second_moment(r), rel=1e-14)


@given(specs)
def test_table_invariants(spec):
    t = build_couplings(spec)
    N = spec.N
    assert np.array_equal(t.D, t.D.T)
    assert np.all(np.diag(t.D) == 0)
    for i in range(N):
        for j in range(i + 1, N):
            assert abs(t.D[i, j]) == pytest.approx(spec.J / bond_distance(i, j, N) ** spec.alpha, rel=1e-15)
    assert np.all(np.abs(t.h) <= spec.disorder_width / 2 + 1e-15)


@given(specs)
def test_uniform_rows_are_translates(spec):
    if spec.sign_mode != "uniform":
        return
    D = build_couplings(spec).D
    base = np.sort(D[0])
    for i in range(spec.N):
        np.testing.assert_array_equal(np.sort(D[i]), base)


@given(specs, st.integers(0, 11))
def test_second_moment_rotation_invariant(spec, shift):
    t = build_couplings(spec)
    perm = np.roll(np.arange(spec.N), shift % spec.N)
    rotated = CouplingTable(t.D[np.ix_(perm, perm)], t.h[perm])
    assert coupling_second_moment(rotated) == pytest.approx(coupling_second_moment(t), rel=1e-13)


@pytest.mark.parametrize("kwargs", [
    dict(N=1, alpha=3.0), dict(N=4, alpha=0.0), dict(N=4, alpha=-1.0),
    dict(N=4, alpha=1.0, disorder_width=-0.1), dict(N=4, alpha=1.0, sign_mode="alternating"),
    dict(N=4, alpha=1.0, seed=-1),
])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        RingSpec(**kwargs)


def test_table_validation():
    with pytest.raises(ValueError):
        CouplingTable(np.array([[0.0, 1.0], [0.5, 0.0]]), np.zeros(2))
    with pytest.raises(ValueError):
        CouplingTable(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        CouplingTable(np.zeros((2, 2)), np.zeros(3))


def test_tables_read_only():
    t = build_couplings(RingSpec(4, 3.0))
    with pytest.raises(ValueError):
        t.D[0, 1] = 5.0


def test_csv_round_trip(tmp_path):
    t = build_couplings(RingSpec(7, 2.0, sign_mode="random", seed=11))
    t.to_csv(tmp_path / "c.csv", tmp_path / "h.csv")
    back = load_couplings_csv(tmp_path / "c.csv", tmp_path / "h.csv")
    assert back.D.tobytes() == t.D.tobytes()
    assert back.h.tobytes() == t.h.tobytes()
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "i,j,D_ij"
    assert (tmp_path / "h.csv").read_text().splitlines()[0] == "i,h_i"
