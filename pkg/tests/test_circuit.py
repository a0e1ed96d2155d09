import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpgorge.circuit import (
    ControlledPhase,
    FixedUnitary,
    ParameterizedCircuit,
    Rotation,
    apply,
    apply_batch,
    build_hea,
    hea_slot,
    layer_slot,
    split_at,
    unitary,
)
from bpgorge.statevector import PauliString, StateVector, expectation, z_string
from oracles import dense_unitary_oracle


def ry_circuit():
    return ParameterizedCircuit(1, (Rotation(PauliString.parse("Y0"), 0),))


def random_state(n, rng):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def cz_ladder(n):
    k = np.arange(2**n)
    d = np.ones(2**n)
    for q in range(n - 1):
        d *= 1 - 2 * (((k >> q) & 1) & ((k >> (q + 1)) & 1))
    return np.diag(d)


class TestBuildHea:
    def test_counts(self):
        c = build_hea(2, 1)
        assert c.num_parameters == 6
        assert sum(isinstance(g, ControlledPhase) for g in c.gates) == 1
        assert build_hea(4, 3).num_parameters == 36

    def test_zero_angles_give_two_ladders(self):
        c = build_hea(3, 2)
        w = cz_ladder(3)
        assert np.allclose(unitary(c, np.zeros(c.num_parameters)), w @ w, atol=1e-12)

    def test_rejects_small(self):
        with pytest.raises(ValueError):
            build_hea(1, 2)
        with pytest.raises(ValueError):
            build_hea(2, 0)

    def test_slot_order(self):
        c = build_hea(3, 2)
        g = c.rotation(hea_slot(3, 1, 2, "Y"))
        assert g.generator.ops == ((2, "Y"),)
        assert c.labels[hea_slot(3, 1, 2, "Y")] == (1, 2, "Y")
        # layer l: Rx, Ry, Rz on each qubit in turn, then the ladder
        assert [str(x.generator) for x in c.gates[:3]] == ["X0", "Y0", "Z0"]

    def test_layer_slots(self):
        c = build_hea(2, 5)
        assert layer_slot(c, "first") == 0
        assert layer_slot(c, "middle") == hea_slot(2, 2, 0, "X")
        assert layer_slot(c, "last") == hea_slot(2, 4, 0, "X")
        d1 = build_hea(2, 1)
        assert layer_slot(d1, "first") == layer_slot(d1, "middle") == layer_slot(d1, "last") == 0


class TestApply:
    def test_empty_circuit(self):
        psi = random_state(2, np.random.default_rng(0))
        out = apply(ParameterizedCircuit(2, ()), np.zeros(0), psi)
        assert np.array_equal(out.amplitudes, psi.amplitudes)

    def test_ry(self):
        out = apply(ry_circuit(), [np.pi / 3], StateVector.zero(1))
        assert expectation(out, z_string(1, [0])) == pytest.approx(0.5, abs=1e-12)

    def test_hea_matches_dense_oracle(self):
        c = build_hea(2, 1)
        theta = np.random.default_rng(42).uniform(0, 2 * np.pi, c.num_parameters)
        psi = random_state(2, np.random.default_rng(1))
        got = apply(c, theta, psi).amplitudes
        assert np.allclose(got, dense_unitary_oracle(c, theta) @ psi.amplitudes, atol=1e-10)

    @given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 2**32 - 1))
    def test_hea_unitary_matches_oracle(self, n, depth, seed):
        c = build_hea(n, depth)
        theta = np.random.default_rng(seed).uniform(0, 2 * np.pi, c.num_parameters)
        assert np.allclose(unitary(c, theta), dense_unitary_oracle(c, theta), atol=1e-10)

    def test_fixed_and_multi_qubit_gates(self):
        rng = np.random.default_rng(5)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
        h, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        c = ParameterizedCircuit(3, (
            Rotation(PauliString.parse("X0 Y2"), 1),
            FixedUnitary(q, (2, 0)),
            Rotation(PauliString.parse("Z1"), 0),
            FixedUnitary(h, (1,)),
            ControlledPhase(2, 1),
            Rotation(PauliString.parse("Y0 Y1 Z2"), 2),
        ))
        theta = rng.uniform(0, 6, 3)
        assert np.allclose(unitary(c, theta), dense_unitary_oracle(c, theta), atol=1e-10)

    def test_parameter_mismatch(self):
        with pytest.raises(ValueError):
            apply(build_hea(2, 1), np.zeros(5), StateVector.zero(2))

    def test_periodic(self):
        c = build_hea(3, 2)
        rng = np.random.default_rng(9)
        theta = rng.uniform(0, 6, c.num_parameters)
        psi = random_state(3, rng)
        obs = z_string(3, [0, 2])
        for j in (0, 7, 17):
            shifted = theta.copy()
            shifted[j] += 2 * np.pi
            assert expectation(apply(c, theta, psi), obs) == pytest.approx(
                expectation(apply(c, shifted, psi), obs), abs=1e-10)

    def test_batch_rows_independent(self):
        c = build_hea(3, 2)
        rng = np.random.default_rng(2)
        thetas = rng.uniform(0, 6, (7, c.num_parameters))
        psi = random_state(3, rng)
        out = apply_batch(c, thetas, psi.amplitudes)
        for i in range(7):
            assert np.array_equal(out[i], apply_batch(c, thetas[i], psi.amplitudes)[0])


class TestValidation:
    def test_duplicate_slots(self):
        with pytest.raises(ValueError):
            ParameterizedCircuit(1, (Rotation(PauliString.parse("X0"), 0), Rotation(PauliString.parse("Y0"), 0)))

    def test_gap_in_slots(self):
        with pytest.raises(ValueError):
            ParameterizedCircuit(1, (Rotation(PauliString.parse("X0"), 1),))

    def test_qubit_range(self):
        with pytest.raises(ValueError):
            ParameterizedCircuit(2, (ControlledPhase(0, 2),))


class TestSplit:
    def test_last_slot_leaves_empty_left(self):
        c = build_hea(2, 2)
        s = split_at(c, c.num_parameters - 1)
        assert s.left.num_parameters == 0
        # the final ladder is parameter free and stays on the left
        assert all(isinstance(g, ControlledPhase) for g in s.left.gates)

    def test_first_slot(self):
        c = build_hea(2, 2)
        s = split_at(c, 0)
        assert s.right.gates == (Rotation(PauliString.parse("X0"), 0),)
        assert s.left.num_parameters == c.num_parameters - 1

    def test_out_of_range(self):
        c = build_hea(2, 1)
        with pytest.raises(IndexError):
            split_at(c, 6)
        with pytest.raises(IndexError):
            split_at(c, -1)

    def test_recomposition_seed7(self):
        c = build_hea(3, 2)
        rng = np.random.default_rng(7)
        theta = rng.uniform(0, 2 * np.pi, c.num_parameters)
        psi = random_state(3, rng)
        full = apply(c, theta, psi).amplitudes
        for j in range(c.num_parameters):
            s = split_at(c, j)
            lp, rp = s.split_params(theta)
            out = apply(s.left, lp, apply(s.right, rp, psi))
            assert np.allclose(out.amplitudes, full, atol=1e-10)

    @given(st.integers(2, 3), st.integers(1, 3), st.data())
    def test_recomposition_property(self, n, depth, data):
        c = build_hea(n, depth)
        j = data.draw(st.integers(0, c.num_parameters - 1))
        rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
        theta = rng.uniform(0, 2 * np.pi, c.num_parameters)
        s = split_at(c, j)
        lp, rp = s.split_params(theta)
        assert np.allclose(unitary(s.left, lp) @ unitary(s.right, rp), unitary(c, theta), atol=1e-10)

    def test_perturbing_one_slot_touches_one_gate(self):
        c = build_hea(2, 2)
        theta = np.random.default_rng(3).uniform(0, 6, c.num_parameters)
        j = 4
        s = split_at(c, j)
        bumped = theta.copy()
        bumped[j] += 0.37
        lp, rp = s.split_params(theta)
        lp2, rp2 = s.split_params(bumped)
        assert np.array_equal(lp, lp2)
        assert np.flatnonzero(rp != rp2).tolist() == [s.right_slots.index(j)]


def test_json_roundtrip():
    rng = np.random.default_rng(1)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    c = ParameterizedCircuit(3, build_hea(3, 1).gates + (FixedUnitary(q, (0, 2)),))
    back = ParameterizedCircuit.from_json(c.to_json())
    theta = rng.uniform(0, 6, c.num_parameters)
    assert np.allclose(unitary(back, theta), unitary(c, theta), atol=1e-12)
    assert c.to_records()[0] == {"kind": "rotation", "qubits": [0], "generator": "X0", "slot": 0}
