"""Parameterized circuits built from involutory-generator rotations and fixed gates.

Each rotation is ``exp(-i theta H / 2)`` with ``H`` a Pauli string, bound to
exactly one parameter slot. Slots are 0-based in this API. A circuit is an
ordered gate list applied left to right to the input state, so ``gates[0]``
acts first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .statevector import (
    PauliString,
    StateVector,
    apply_diagonal_batch,
    apply_matrix_batch,
    apply_rotation_batch,
    apply_single_qubit_batch,
    check_num_qubits,
    controlled_phase_diagonal,
    rotation_matrices,
)


@dataclass(frozen=True)
class Rotation:
    generator: PauliString
    slot: int


@dataclass(frozen=True)
class ControlledPhase:
    control: int
    target: int


@dataclass(frozen=True, eq=False)
class FixedUnitary:
    matrix: np.ndarray
    qubits: tuple[int, ...]


Gate = Union[Rotation, ControlledPhase, FixedUnitary]


@dataclass(frozen=True)
class ParameterizedCircuit:
    num_qubits: int
    gates: tuple[Gate, ...] = ()
    # slot -> (layer, qubit, axis); only filled in by build_hea
    labels: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        slots = [g.slot for g in self.gates if isinstance(g, Rotation)]
        if sorted(slots) != list(range(len(slots))):
            raise ValueError(
                "every parameter slot 0..m-1 must be bound to exactly one rotation"
            )
        for g in self.gates:
            if isinstance(g, Rotation):
                qubits = g.generator.qubits
            elif isinstance(g, ControlledPhase):
                qubits = (g.control, g.target)
                if g.control == g.target:
                    raise ValueError("controlled phase needs distinct qubits")
            else:
                qubits = g.qubits
                dim = 2 ** len(qubits)
                if len(qubits) > 2 or g.matrix.shape != (dim, dim):
                    raise ValueError("fixed unitaries act on at most two qubits")
            if any(not 0 <= q < self.num_qubits for q in qubits):
                raise ValueError(f"gate {g} acts outside {self.num_qubits} qubits")
        object.__setattr__(self, "_program", _compile(self))

    @property
    def num_parameters(self) -> int:
        return sum(1 for g in self.gates if isinstance(g, Rotation))

    def rotation(self, slot: int) -> Rotation:
        for g in self.gates:
            if isinstance(g, Rotation) and g.slot == slot:
                return g
        raise IndexError(f"parameter slot {slot} out of range (m = {self.num_parameters})")

    def gate_position(self, slot: int) -> int:
        for i, g in enumerate(self.gates):
            if isinstance(g, Rotation) and g.slot == slot:
                return i
        raise IndexError(f"parameter slot {slot} out of range (m = {self.num_parameters})")

    def to_records(self) -> list[dict]:
        records = []
        for g in self.gates:
            if isinstance(g, Rotation):
                records.append(
                    {"kind": "rotation", "qubits": list(g.generator.qubits),
                     "generator": str(g.generator), "slot": g.slot}
                )
            elif isinstance(g, ControlledPhase):
                records.append(
                    {"kind": "controlled_phase", "qubits": [g.control, g.target], "slot": None}
                )
            else:
                m = np.asarray(g.matrix)
                records.append(
                    {"kind": "fixed_unitary", "qubits": list(g.qubits), "slot": None,
                     "matrix": [[[z.real, z.imag] for z in row] for row in m]}
                )
        return records

    def to_json(self) -> str:
        return json.dumps({"num_qubits": self.num_qubits, "gates": self.to_records()}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ParameterizedCircuit":
        doc = json.loads(text)
        gates: list[Gate] = []
        for rec in doc["gates"]:
            kind = rec["kind"]
            if kind == "rotation":
                gates.append(Rotation(PauliString.parse(rec["generator"]), int(rec["slot"])))
            elif kind == "controlled_phase":
                gates.append(ControlledPhase(*rec["qubits"]))
            elif kind == "fixed_unitary":
                m = np.array([[complex(re, im) for re, im in row] for row in rec["matrix"]])
                gates.append(FixedUnitary(m, tuple(rec["qubits"])))
            else:
                raise ValueError(f"unknown gate kind {kind!r}")
        return cls(doc["num_qubits"], tuple(gates))


@dataclass(frozen=True)
class CircuitSplit:
    """``right`` holds gates through the rotation bound to slot ``j``; ``left`` the rest.

    ``right_slots[k]`` / ``left_slots[k]`` give the original slot of each side's
    local slot ``k``.
    """

    left: ParameterizedCircuit
    right: ParameterizedCircuit
    split_index: int
    left_slots: tuple[int, ...]
    right_slots: tuple[int, ...]

    def split_params(self, params) -> tuple[np.ndarray, np.ndarray]:
        params = np.asarray(params, dtype=float)
        return params[..., list(self.left_slots)], params[..., list(self.right_slots)]


# ------------------------------------------------------------ compilation
# A program is a list of ops: ("fused", qubit, [(letter, slot), ...]),
# ("diag", vector), ("pauli", PauliString, slot), ("fixed", matrix, qubits).


def _compile(circuit: ParameterizedCircuit) -> list[tuple]:
    n = circuit.num_qubits
    program: list[tuple] = []
    for g in circuit.gates:
        last = program[-1] if program else None
        if isinstance(g, Rotation) and len(g.generator.ops) == 1:
            q, letter = g.generator.ops[0]
            if last is not None and last[0] == "fused" and last[1] == q:
                last[2].append((letter, g.slot))
            else:
                program.append(("fused", q, [(letter, g.slot)]))
        elif isinstance(g, Rotation):
            program.append(("pauli", g.generator, g.slot))
        elif isinstance(g, ControlledPhase):
            diag = controlled_phase_diagonal(n, g.control, g.target)
            if last is not None and last[0] == "diag":
                program[-1] = ("diag", last[1] * diag)
            else:
                program.append(("diag", diag))
        else:
            program.append(("fixed", np.asarray(g.matrix, dtype=complex), g.qubits))
    return program


def _fused_matrices(run: list[tuple[str, int]], params: np.ndarray) -> np.ndarray:
    mats = None
    for letter, slot in run:
        r = rotation_matrices(letter, params[:, slot])
        mats = r if mats is None else _mul2x2(r, mats)
    return mats


def _mul2x2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit products keep rounding independent of batch size
    out = np.empty_like(b)
    for i in range(2):
        for k in range(2):
            out[:, i, k] = a[:, i, 0] * b[:, 0, k] + a[:, i, 1] * b[:, 1, k]
    return out


def apply_batch(circuit: ParameterizedCircuit, params, amps) -> np.ndarray:
    """Apply ``U(theta_b)`` to each row.

    ``params`` has shape (B, m) or (m,); ``amps`` has shape (B, 2**n) or
    (2**n,). Either side broadcasts against the other.
    """
    params = np.atleast_2d(np.asarray(params, dtype=float))
    m = circuit.num_parameters
    if params.shape[1] != m:
        raise ValueError(f"expected {m} parameters, got {params.shape[1]}")
    amps = np.atleast_2d(np.asarray(amps, dtype=complex))
    if amps.shape[1] != 2**circuit.num_qubits:
        raise ValueError(f"state dimension {amps.shape[1]} does not match {circuit.num_qubits} qubits")
    batch = max(params.shape[0], amps.shape[0])
    if amps.shape[0] != batch:
        amps = np.broadcast_to(amps, (batch, amps.shape[1]))
    out = np.array(amps, dtype=complex)
    for op in circuit._program:
        kind = op[0]
        if kind == "fused":
            out = apply_single_qubit_batch(out, _fused_matrices(op[2], params), op[1])
        elif kind == "diag":
            out = apply_diagonal_batch(out, op[1])
        elif kind == "pauli":
            out = apply_rotation_batch(out, op[1], params[:, op[2]])
        else:
            out = apply_matrix_batch(out, op[1], op[2])
    return out


def apply(circuit: ParameterizedCircuit, params, state: StateVector) -> StateVector:
    if state.num_qubits != circuit.num_qubits:
        raise ValueError(f"state on {state.num_qubits} qubits, circuit on {circuit.num_qubits}")
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_parameters,):
        raise ValueError(
            f"expected {circuit.num_parameters} parameters, got shape {params.shape}"
        )
    return StateVector(state.num_qubits, apply_batch(circuit, params, state.amplitudes)[0])


def unitary(circuit: ParameterizedCircuit, params) -> np.ndarray:
    dim = 2**circuit.num_qubits
    return apply_batch(circuit, params, np.eye(dim, dtype=complex)).T


def unitaries(circuit: ParameterizedCircuit, params) -> np.ndarray:
    """Stack of unitaries, shape (N, d, d), for parameter rows (N, m)."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    dim = 2**circuit.num_qubits
    count = params.shape[0]
    columns = np.tile(np.eye(dim, dtype=complex), (count, 1))
    out = apply_batch(circuit, np.repeat(params, dim, axis=0), columns)
    return np.swapaxes(out.reshape(count, dim, dim), 1, 2)


# ------------------------------------------------------------- builders

AXES = ("X", "Y", "Z")


def hea_slot(num_qubits: int, layer: int, qubit: int, axis: str) -> int:
    """Slot of the ``axis`` rotation on ``qubit`` in ``layer`` (all 0-based)."""
    return layer * 3 * num_qubits + qubit * 3 + AXES.index(axis.upper())


def build_rotation_layers(
    num_qubits: int, depth: int, entangle: bool = False, max_qubits: int | None = None
) -> ParameterizedCircuit:
    check_num_qubits(num_qubits, max_qubits)
    if depth < 0:
        raise ValueError("depth must be non-negative")
    gates: list[Gate] = []
    labels = {}
    slot = 0
    for layer in range(depth):
        for q in range(num_qubits):
            for axis in AXES:
                gates.append(Rotation(PauliString(((q, axis),)), slot))
                labels[slot] = (layer, q, axis)
                slot += 1
        if entangle:
            gates.extend(ControlledPhase(q, q + 1) for q in range(num_qubits - 1))
    return ParameterizedCircuit(num_qubits, tuple(gates), labels)


def build_hea(num_qubits: int, depth: int, max_qubits: int | None = None) -> ParameterizedCircuit:
    """Layered hardware-efficient ansatz.

    Each of the ``depth`` layers applies R_x, R_y, R_z on every qubit (in that
    order, qubit by qubit) followed by a CZ ladder over (q, q+1). There are
    ``3 * depth * num_qubits`` parameters, ordered layer, qubit, axis.
    """
    if num_qubits < 2:
        raise ValueError("the hardware-efficient ansatz needs at least 2 qubits")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return build_rotation_layers(num_qubits, depth, entangle=True, max_qubits=max_qubits)


def split_at(circuit: ParameterizedCircuit, j: int) -> CircuitSplit:
    m = circuit.num_parameters
    if not 0 <= j < m:
        raise IndexError(f"split index {j} out of range for m = {m}")
    pos = circuit.gate_position(j)
    right_gates = circuit.gates[: pos + 1]
    left_gates = circuit.gates[pos + 1:]

    def renumber(gates):
        order = [g.slot for g in gates if isinstance(g, Rotation)]
        local = {s: k for k, s in enumerate(order)}
        out = tuple(Rotation(g.generator, local[g.slot]) if isinstance(g, Rotation) else g
                    for g in gates)
        return out, tuple(order)

    rg, right_slots = renumber(right_gates)
    lg, left_slots = renumber(left_gates)
    return CircuitSplit(
        left=ParameterizedCircuit(circuit.num_qubits, lg),
        right=ParameterizedCircuit(circuit.num_qubits, rg),
        split_index=j,
        left_slots=left_slots,
        right_slots=right_slots,
    )


def layer_slot(circuit: ParameterizedCircuit, position: str, qubit: int = 0, axis: str = "X") -> int:
    """Slot in the first, middle or last layer of a layered circuit."""
    if not circuit.labels:
        raise ValueError("layer selection needs a circuit built by build_hea")
    depth = 1 + max(layer for layer, _, _ in circuit.labels.values())
    layer = {"first": 0, "middle": (depth - 1) // 2, "last": depth - 1}[position]
    return hea_slot(circuit.num_qubits, layer, qubit, axis)
