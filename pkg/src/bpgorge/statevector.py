"""Dense statevector simulation over n qubits.

Amplitudes are stored as complex128 with qubit 0 as the least significant bit
of the basis index. The kernels below accept either a single amplitude vector
of shape ``(2**n,)`` or a batch of shape ``(B, 2**n)``; per-sample gate
angles are passed as arrays of shape ``(B,)``. The batched path is what the
ensemble drivers use, and the single-state functions are thin wrappers around
it so both produce bit-identical numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_QUBITS = 26

_PAULI_LETTERS = ("X", "Y", "Z")


def check_num_qubits(num_qubits: int, max_qubits: int | None = None) -> None:
    cap = MAX_QUBITS if max_qubits is None else max_qubits
    if num_qubits < 1:
        raise ValueError(f"num_qubits must be >= 1, got {num_qubits}")
    if num_qubits > cap:
        raise MemoryError(
            f"{num_qubits} qubits exceeds the configured cap of {cap} "
            f"({2 ** num_qubits * 16} bytes per statevector)"
        )


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis; the empty string is the identity."""

    ops: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        ops = tuple(sorted((int(q), str(p).upper()) for q, p in self.ops))
        qubits = [q for q, _ in ops]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in Pauli string {ops}")
        for q, p in ops:
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if p not in _PAULI_LETTERS:
                raise ValueError(f"unknown Pauli letter {p!r}")
        object.__setattr__(self, "ops", ops)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse ``"Z0 Z1"``-style text. ``"I"`` or ``""`` gives the identity."""
        ops = []
        for token in text.replace("*", " ").split():
            if token.upper() == "I":
                continue
            ops.append((int(token[1:]), token[0]))
        return cls(tuple(ops))

    @classmethod
    def from_dict(cls, mapping: Mapping[int, str]) -> "PauliString":
        return cls(tuple(mapping.items()))

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.ops)

    @property
    def max_qubit(self) -> int:
        return max(self.qubits, default=-1)

    @property
    def x_mask(self) -> int:
        return sum(1 << q for q, p in self.ops if p in "XY")

    @property
    def z_mask(self) -> int:
        return sum(1 << q for q, p in self.ops if p in "YZ")

    @property
    def y_count(self) -> int:
        return sum(1 for _, p in self.ops if p == "Y")

    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    def __str__(self) -> str:
        return " ".join(f"{p}{q}" for q, p in self.ops) or "I"

    def matrix(self, num_qubits: int) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix (qubit 0 least significant)."""
        single = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        letters = dict(self.ops)
        out = np.ones((1, 1), dtype=complex)
        # kron builds most-significant first
        for q in reversed(range(num_qubits)):
            out = np.kron(out, single[letters.get(q, "I")])
        return out


def _popcount(values: np.ndarray) -> np.ndarray:
    counts = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        counts += v & 1
        v >>= 1
    return counts


def pauli_action(pauli: PauliString, num_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(source, phase)`` with ``(P psi)[k] = phase[k] * psi[source[k]]``.

    Uses ``P = i**nY X^x Z^z`` so ``P|b> = i**nY (-1)**popcount(b & z) |b ^ x>``.
    """
    k = np.arange(2**num_qubits, dtype=np.int64)
    source = k ^ pauli.x_mask
    signs = 1 - 2 * (_popcount(source & pauli.z_mask) & 1)
    phase = (1j**pauli.y_count) * signs.astype(complex)
    return source, phase


def pauli_diagonal(pauli: PauliString, num_qubits: int) -> np.ndarray:
    """Real +-1 diagonal of a Z-type Pauli string."""
    if not pauli.is_diagonal():
        raise ValueError(f"{pauli} is not diagonal")
    k = np.arange(2**num_qubits, dtype=np.int64)
    return (1 - 2 * (_popcount(k & pauli.z_mask) & 1)).astype(float)


@dataclass
class Observable:
    """Real linear combination of Pauli strings, hence Hermitian."""

    num_qubits: int
    terms: list[tuple[float, PauliString]]

    def __post_init__(self):
        terms = []
        for coef, pauli in self.terms:
            if isinstance(pauli, str):
                pauli = PauliString.parse(pauli)
            elif isinstance(pauli, Mapping):
                pauli = PauliString.from_dict(pauli)
            if pauli.max_qubit >= self.num_qubits:
                raise ValueError(
                    f"Pauli string {pauli} acts outside {self.num_qubits} qubits"
                )
            coef = float(coef)
            if not np.isfinite(coef):
                raise ValueError("observable coefficients must be finite reals")
            terms.append((coef, pauli))
        self.terms = terms

    @classmethod
    def from_pauli(cls, num_qubits: int, pauli: str | PauliString, coef: float = 1.0):
        return cls(num_qubits, [(coef, pauli)])

    @classmethod
    def identity(cls, num_qubits: int) -> "Observable":
        return cls(num_qubits, [(1.0, PauliString())])

    @property
    def norm_bound(self) -> float:
        """Upper bound on the operator norm: sum of absolute coefficients."""
        return float(sum(abs(c) for c, _ in self.terms))

    def merged(self) -> dict[PauliString, float]:
        out: dict[PauliString, float] = {}
        for c, p in self.terms:
            out[p] = out.get(p, 0.0) + c
        return out

    def hs_norm_sq(self) -> float:
        """Hilbert-Schmidt norm squared, Tr[O^2] = 2**n * sum of squared coefficients."""
        return float(2**self.num_qubits * sum(c * c for c in self.merged().values()))

    def matrix(self) -> np.ndarray:
        dim = 2**self.num_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for c, p in self.terms:
            out += c * p.matrix(self.num_qubits)
        return out

    def scaled(self, factor: float) -> "Observable":
        return Observable(self.num_qubits, [(factor * c, p) for c, p in self.terms])


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2 ** self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int, max_qubits: int | None = None) -> "StateVector":
        check_num_qubits(num_qubits, max_qubits)
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def prepare_product_state(
    num_qubits: int, single_qubit_angle: float, max_qubits: int | None = None
) -> StateVector:
    """n-fold tensor power of ``exp(-i * angle * Y)|0> = cos(angle)|0> + sin(angle)|1>``."""
    check_num_qubits(num_qubits, max_qubits)
    single = np.array([np.cos(single_qubit_angle), np.sin(single_qubit_angle)], dtype=complex)
    amps = np.ones(1, dtype=complex)
    for _ in range(num_qubits):
        amps = np.kron(single, amps)
    return StateVector(num_qubits, amps)


# ---------------------------------------------------------------- kernels


def _as_batch(amps: np.ndarray) -> np.ndarray:
    return amps[None, :] if amps.ndim == 1 else amps


def apply_single_qubit_batch(amps: np.ndarray, mats: np.ndarray, qubit: int) -> np.ndarray:
    """Apply per-sample 2x2 matrices ``mats`` (shape (B,2,2) or (2,2)) on ``qubit``."""
    amps = _as_batch(amps)
    batch, dim = amps.shape
    n = dim.bit_length() - 1
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    mats = np.asarray(mats, dtype=complex)
    if mats.ndim == 2:
        mats = mats[None]
    # elementwise products rather than matmul: BLAS/SIMD matmul kernels round
    # differently depending on alignment, which breaks batch/single equality
    lo = 1 << qubit
    view = amps.reshape(batch, dim // (2 * lo), 2, lo)
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    m = np.broadcast_to(mats, (batch, 2, 2))[:, :, :, None, None]
    out = np.empty_like(view)
    out[:, :, 0, :] = m[:, 0, 0] * a0 + m[:, 0, 1] * a1
    out[:, :, 1, :] = m[:, 1, 0] * a0 + m[:, 1, 1] * a1
    return out.reshape(batch, dim)


def apply_diagonal_batch(amps: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    return _as_batch(amps) * diagonal


def apply_pauli_batch(amps: np.ndarray, pauli: PauliString) -> np.ndarray:
    amps = _as_batch(amps)
    n = amps.shape[1].bit_length() - 1
    if pauli.max_qubit >= n:
        raise IndexError(f"Pauli string {pauli} acts outside {n} qubits")
    source, phase = pauli_action(pauli, n)
    return amps[:, source] * phase


def rotation_matrices(letter: str, angles: np.ndarray) -> np.ndarray:
    """Stack of ``exp(-i angle P / 2)`` for a single-qubit Pauli letter, shape (B,2,2)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    out = np.zeros((angles.shape[0], 2, 2), dtype=complex)
    if letter == "X":
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -1j * s
        out[:, 1, 0] = -1j * s
    elif letter == "Y":
        out[:, 0, 0] = c
        out[:, 1, 1] = c
        out[:, 0, 1] = -s
        out[:, 1, 0] = s
    elif letter == "Z":
        out[:, 0, 0] = c - 1j * s
        out[:, 1, 1] = c + 1j * s
    else:
        raise ValueError(f"unknown Pauli letter {letter!r}")
    return out


def apply_rotation_batch(amps: np.ndarray, generator: PauliString, angles) -> np.ndarray:
    """``(cos(a/2) I - i sin(a/2) P) psi`` with per-sample angles."""
    amps = _as_batch(amps)
    angles = np.broadcast_to(np.asarray(angles, dtype=float), (amps.shape[0],))
    if len(generator.ops) == 0:
        phase = np.exp(-0.5j * angles)
        return amps * phase[:, None]
    if len(generator.ops) == 1:
        q, letter = generator.ops[0]
        return apply_single_qubit_batch(amps, rotation_matrices(letter, angles), q)
    c = np.cos(angles / 2)[:, None]
    s = np.sin(angles / 2)[:, None]
    return c * amps - 1j * s * apply_pauli_batch(amps, generator)


def controlled_phase_diagonal(num_qubits: int, control: int, target: int) -> np.ndarray:
    if control == target:
        raise ValueError("control and target must differ")
    for q in (control, target):
        if not 0 <= q < num_qubits:
            raise IndexError(f"qubit {q} out of range for {num_qubits} qubits")
    k = np.arange(2**num_qubits, dtype=np.int64)
    both = ((k >> control) & 1) & ((k >> target) & 1)
    return 1.0 - 2.0 * both


def apply_matrix_batch(amps: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a fixed unitary on 1 or 2 qubits; ``qubits[0]`` is the matrix's low bit."""
    amps = _as_batch(amps)
    qubits = list(qubits)
    if len(qubits) == 1:
        return apply_single_qubit_batch(amps, matrix, qubits[0])
    if len(qubits) != 2 or qubits[0] == qubits[1]:
        raise ValueError("fixed unitaries act on one or two distinct qubits")
    dim = amps.shape[1]
    q0, q1 = qubits
    k = np.arange(dim, dtype=np.int64)
    base = k[(((k >> q0) & 1) == 0) & (((k >> q1) & 1) == 0)]
    idx = np.stack([base, base | (1 << q0), base | (1 << q1), base | (1 << q0) | (1 << q1)])
    matrix = np.asarray(matrix, dtype=complex)
    out = amps.copy()
    block = amps[:, idx]  # (B, 4, dim/4)
    for r in range(4):
        acc = matrix[r, 0] * block[:, 0]
        for c in range(1, 4):
            acc = acc + matrix[r, c] * block[:, c]
        out[:, idx[r]] = acc
    return out


def _row_sum(x: np.ndarray) -> np.ndarray:
    """Sum over the last (power-of-two) axis by halving, so each row's rounding
    does not depend on how many rows are reduced together."""
    while x.shape[-1] > 1:
        h = x.shape[-1] // 2
        x = x[..., :h] + x[..., h:]
    return x[..., 0]


def expectation_batch(amps: np.ndarray, obs: Observable, check: bool = True) -> np.ndarray:
    """Per-row real expectation values; the imaginary residue is asserted small."""
    amps = _as_batch(amps)
    n = amps.shape[1].bit_length() - 1
    if obs.num_qubits != n:
        raise ValueError(f"observable on {obs.num_qubits} qubits, state on {n}")
    probs = None
    total = np.zeros(amps.shape[0], dtype=complex)
    for coef, pauli in obs.terms:
        if pauli.is_diagonal():
            if probs is None:
                probs = (amps.real**2 + amps.imag**2)
            total += coef * _row_sum(probs * pauli_diagonal(pauli, n))
        else:
            total += coef * _row_sum(amps.conj() * apply_pauli_batch(amps, pauli))
    if check:
        scale = max(obs.norm_bound, 1.0)
        worst = float(np.max(np.abs(total.imag), initial=0.0))
        if worst > 1e-10 * scale:
            raise FloatingPointError(f"expectation has imaginary residue {worst:.3e}")
    return total.real


# ---------------------------------------------------- single-state wrappers


def apply_rotation(state: StateVector, generator: PauliString | str, angle: float) -> StateVector:
    if isinstance(generator, str):
        generator = PauliString.parse(generator)
    if generator.max_qubit >= state.num_qubits:
        raise IndexError(f"generator {generator} acts outside {state.num_qubits} qubits")
    amps = apply_rotation_batch(state.amplitudes, generator, np.array([angle]))
    return StateVector(state.num_qubits, amps[0])


def apply_controlled_phase(state: StateVector, control: int, target: int) -> StateVector:
    diag = controlled_phase_diagonal(state.num_qubits, control, target)
    return StateVector(state.num_qubits, state.amplitudes * diag)


def expectation(state: StateVector, obs: Observable) -> float:
    if obs.num_qubits != state.num_qubits:
        raise ValueError(
            f"observable on {obs.num_qubits} qubits, state on {state.num_qubits}"
        )
    return float(expectation_batch(state.amplitudes, obs)[0])


def z_string(num_qubits: int, qubits: Iterable[int], coef: float = 1.0) -> Observable:
    """Convenience: coefficient times the product of Z on ``qubits``."""
    return Observable(num_qubits, [(coef, PauliString(tuple((q, "Z") for q in qubits)))])
