"""Second-moment expressibility of circuit ensembles.

Two-copy operators live on ``C^d (x) C^d`` with ``d = 2**n`` and the first
copy as the major index, so ``kron(O, O)`` is the two-copy lift of ``O``.
Everything here is dense and capped at :data:`MAX_TWIRL_QUBITS`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import ParameterizedCircuit, split_at, unitaries
from .cost import CostSpec
from .seeding import stream, uniform_parameters
from .stats import EnsembleStats, ensemble_stats

MAX_TWIRL_QUBITS = 5
MIN_SAMPLES = 100
BOOTSTRAP_GROUPS = 10
BOOTSTRAP_REPLICATES = 200
# samples x d**4 amplitudes held at once while twirling
_CHUNK = 1 << 22


def _check_cap(n: int, cap: int | None = None) -> None:
    cap = MAX_TWIRL_QUBITS if cap is None else cap
    if n < 1:
        raise ValueError("need at least one qubit")
    if n > cap:
        raise ValueError(f"{n} qubits exceeds the dense two-copy cap of {cap}")


@dataclass(frozen=True, eq=False)
class TwoCopyOperator:
    num_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_cap(self.num_qubits)
        dim = 4**self.num_qubits
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2**self.num_qubits

    def __sub__(self, other: "TwoCopyOperator") -> "TwoCopyOperator":
        return TwoCopyOperator(self.num_qubits, self.matrix - other.matrix)

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol))


def two_copy(single) -> TwoCopyOperator:
    """``X (x) X`` for a single-copy matrix ``X``."""
    x = np.asarray(single, dtype=complex)
    n = int(round(np.log2(x.shape[0])))
    if x.shape != (2**n, 2**n):
        raise ValueError(f"not a qubit operator: shape {x.shape}")
    return TwoCopyOperator(n, np.kron(x, x))


def swap_operator(n: int) -> np.ndarray:
    d = 2**n
    s = np.zeros((d * d, d * d))
    idx = np.arange(d)
    a, b = np.meshgrid(idx, idx, indexing="ij")
    s[(a * d + b).ravel(), (b * d + a).ravel()] = 1.0
    return s


def haar_twirl(a: TwoCopyOperator) -> TwoCopyOperator:
    """Exact Haar average of ``V^{(x)2} A V^{dag (x)2}``: ``c_I I + c_S SWAP``."""
    d = a.dim
    s = swap_operator(a.num_qubits)
    tr_a = np.trace(a.matrix)
    tr_as = np.sum(a.matrix * s.T)
    c_i = (tr_a - tr_as / d) / (d * d - 1)
    c_s = (tr_as - tr_a / d) / (d * d - 1)
    return TwoCopyOperator(a.num_qubits, c_i * np.eye(d * d) + c_s * s)


def haar_unitaries(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """``count`` Haar-random ``dim x dim`` unitaries (QR of a Ginibre matrix, phases fixed)."""
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def conjugate_two_copy(us: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``(U (x) U) A (U (x) U)^dag`` for each ``U`` in ``us``, shape (B, d*d, d*d).

    Contracts one tensor leg at a time, O(d^5) per sample instead of O(d^6).
    """
    b, d, _ = us.shape
    x = np.broadcast_to(a.reshape(d, d**3), (b, d, d**3))
    x = (us @ x).reshape(b, d, d, d * d)
    x = (us[:, None] @ x).reshape(b, d * d, d, d)
    x = (us.conj()[:, None] @ x).reshape(b, d**3, d)
    x = x @ np.swapaxes(us.conj(), 1, 2)
    return x.reshape(b, d * d, d * d)


def _group_sums(us_iter, a: np.ndarray, groups: int, total: int):
    """Per-group sums of conjugated ``a``; groups are contiguous sample ranges."""
    edges = np.linspace(0, total, groups + 1).astype(int)
    sums = np.zeros((groups,) + a.shape, dtype=complex)
    pos = 0
    for us in us_iter:
        y = conjugate_two_copy(us, a)
        for g in range(groups):
            lo, hi = max(edges[g], pos), min(edges[g + 1], pos + len(us))
            if lo < hi:
                sums[g] += y[lo - pos: hi - pos].sum(axis=0)
        pos += len(us)
    return sums, np.diff(edges)


def _unitary_chunks(circuit: ParameterizedCircuit, params: np.ndarray, adjoint: bool):
    d = 2**circuit.num_qubits
    step = max(1, _CHUNK // d**4)
    for start in range(0, len(params), step):
        us = unitaries(circuit, params[start: start + step])
        yield np.swapaxes(us.conj(), 1, 2) if adjoint else us


@dataclass(frozen=True)
class EnsembleTwirl:
    operator: TwoCopyOperator
    group_means: np.ndarray
    group_sizes: np.ndarray


def _ensemble_twirl(
    circuit: ParameterizedCircuit,
    a: TwoCopyOperator,
    params: np.ndarray,
    adjoint: bool,
    groups: int = BOOTSTRAP_GROUPS,
) -> EnsembleTwirl:
    if circuit.num_qubits != a.num_qubits:
        raise ValueError("operator and circuit act on different qubit counts")
    total = len(params)
    if circuit.num_parameters == 0:
        # point ensemble: every sample is the same unitary
        us = next(_unitary_chunks(circuit, params[:1], adjoint))
        y = conjugate_two_copy(us, a.matrix)[0]
        return EnsembleTwirl(TwoCopyOperator(a.num_qubits, y), y[None], np.array([total]))
    sums, sizes = _group_sums(_unitary_chunks(circuit, params, adjoint), a.matrix, groups, total)
    mean = sums.sum(axis=0) / total
    return EnsembleTwirl(TwoCopyOperator(a.num_qubits, mean), sums / sizes[:, None, None], sizes)


def _draw(circuit: ParameterizedCircuit, sample_count: int, seed: int, key) -> np.ndarray:
    if sample_count < MIN_SAMPLES:
        raise ValueError(f"sample_count must be >= {MIN_SAMPLES}, got {sample_count}")
    rng = stream(seed, "twirl", *key)
    return uniform_parameters(rng, sample_count, circuit.num_parameters)


def ensemble_twirl(
    circuit: ParameterizedCircuit,
    a: TwoCopyOperator,
    sample_count: int,
    seed: int,
    *key,
    adjoint: bool = False,
) -> TwoCopyOperator:
    """Monte Carlo average of ``U^{(x)2} A U^{dag (x)2}`` over uniform parameters.

    With ``adjoint`` the conjugation is by ``U^dag`` instead (Heisenberg picture,
    the action seen by an observable measured after the circuit).
    """
    _check_cap(circuit.num_qubits)
    params = _draw(circuit, sample_count, seed, key)
    return _ensemble_twirl(circuit, a, params, adjoint).operator


@dataclass(frozen=True)
class Epsilon:
    value: float
    std_error: float
    sample_count: int


def _bootstrap_norm(haar: np.ndarray, tw: EnsembleTwirl, rng: np.random.Generator) -> Epsilon:
    diffs = haar[None] - tw.group_means
    flat = diffs.reshape(len(diffs), -1)
    gram = np.real(flat.conj() @ flat.T)
    sizes = tw.group_sizes.astype(float)
    total = int(sizes.sum())
    w = sizes / sizes.sum()
    value = float(np.sqrt(max(w @ gram @ w, 0.0)))
    if len(sizes) < 2:
        return Epsilon(value, 0.0, total)
    counts = rng.multinomial(len(sizes), np.full(len(sizes), 1 / len(sizes)), size=BOOTSTRAP_REPLICATES)
    bw = counts * sizes
    bw /= bw.sum(axis=1, keepdims=True)
    reps = np.sqrt(np.maximum(np.einsum("rg,gh,rh->r", bw, gram, bw), 0.0))
    return Epsilon(value, float(np.std(reps, ddof=1)), total)


def epsilon(
    circuit: ParameterizedCircuit,
    a: TwoCopyOperator,
    sample_count: int,
    seed: int,
    *key,
    adjoint: bool = False,
    params: np.ndarray | None = None,
) -> Epsilon:
    """``|| haar_twirl(A) - ensemble_twirl(A) ||_HS`` with a bootstrap standard error.

    The bootstrap resamples batch means of :data:`BOOTSTRAP_GROUPS` contiguous
    groups of samples. ``params`` overrides the seeded draw.
    """
    _check_cap(circuit.num_qubits)
    if params is None:
        params = _draw(circuit, sample_count, seed, key)
    tw = _ensemble_twirl(circuit, a, np.asarray(params, dtype=float), adjoint)
    return _bootstrap_norm(haar_twirl(a).matrix, tw, stream(seed, "bootstrap", *key))


def variance_bound_rhs(eps_o, eps_rho, f_tilde: float, o_norm_sq, rho_norm_sq, n: int) -> float:
    """``F~ + sum_i [4 eO eR + 2^(n+2) (eO |O|^2 + eR |rho|^2) / (4^n - 1)]``.

    Per-pair arguments may be scalars or equal-length sequences.
    """
    eo, er, on, rn = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (eps_o, eps_rho, o_norm_sq, rho_norm_sq))
    if np.any(eo < 0) or np.any(er < 0):
        raise ValueError("expressibility values must be non-negative")
    k = 2.0 ** (n + 2) / (4.0**n - 1)
    return float(f_tilde + np.sum(4 * eo * er + k * (eo * on + er * rn)))


def _pair_vectors(spec: CostSpec):
    return [(p.weight, p.state.amplitudes, p.observable.matrix()) for p in spec.pairs]


def haar_gradient_samples(spec: CostSpec, j: int, sample_count: int, seed: int, *key) -> np.ndarray:
    """``dC/dtheta_j`` with both sides of the split replaced by independent Haar unitaries.

    For a pure input ``phi = V_R psi`` the derivative is
    ``Im <V_L phi| O |V_L H phi>`` with ``H`` the generator of rotation ``j``.
    """
    n = spec.num_qubits
    _check_cap(n)
    if not 0 <= j < spec.num_parameters:
        raise IndexError(f"parameter index {j} out of range")
    if sample_count < 2:
        raise ValueError("need at least 2 samples")
    gate = spec.circuit.rotation(j)
    h = gate.generator.matrix(n)
    d = 2**n
    rng = stream(seed, "haar-gradient", *key)
    out = np.zeros(sample_count)
    step = max(1, _CHUNK // (d * d * 4))
    for start in range(0, sample_count, step):
        b = min(step, sample_count - start)
        v_right = haar_unitaries(rng, b, d)
        v_left = haar_unitaries(rng, b, d)
        for weight, psi, obs in _pair_vectors(spec):
            phi = v_right @ psi
            u = np.einsum("bij,bj->bi", v_left, phi)
            w = np.einsum("bij,bj->bi", v_left, phi @ h.T)
            out[start: start + b] += weight * np.imag(np.einsum("bi,ij,bj->b", u.conj(), obs, w))
    return out


def haar_gradient_variance(spec: CostSpec, j: int, sample_count: int, seed: int, *key) -> EnsembleStats:
    """Gradient variance for a maximally expressive circuit; ``.variance`` is the estimate."""
    return ensemble_stats(haar_gradient_samples(spec, j, sample_count, seed, *key))


@dataclass(frozen=True)
class ExpressibilityReport:
    epsilon_o: tuple[Epsilon, ...]
    epsilon_rho: tuple[Epsilon, ...]
    sample_count: int
    haar_variance: EnsembleStats
    bound_rhs: float
    bound_std_error: float
    parameter: int


def expressibility_report(
    spec: CostSpec, j: int, sample_count: int, seed: int, haar_samples: int | None = None, key: tuple = ()
) -> ExpressibilityReport:
    """Expressibility of both sides of the split at ``j`` and the resulting variance bound.

    Left and right sides are evaluated on one shared parameter draw.
    """
    n = spec.num_qubits
    _check_cap(n)
    split = split_at(spec.circuit, j)
    params = _draw(spec.circuit, sample_count, seed, key)
    left_params, right_params = split.split_params(params)
    eo, er, on, rn = [], [], [], []
    for i, pair in enumerate(spec.pairs):
        obs = pair.observable.matrix()
        rho = np.outer(pair.state.amplitudes, pair.state.amplitudes.conj())
        eo.append(epsilon(split.left, two_copy(obs), sample_count, seed, "left", i, *key,
                          adjoint=True, params=left_params))
        er.append(epsilon(split.right, two_copy(rho), sample_count, seed, "right", i, *key,
                          params=right_params))
        on.append(float(np.sum(np.abs(obs) ** 2)))
        rn.append(float(np.sum(np.abs(rho) ** 2)))
    haar = haar_gradient_variance(spec, j, haar_samples or sample_count, seed, *key)
    vo = np.array([e.value for e in eo])
    vr = np.array([e.value for e in er])
    rhs = variance_bound_rhs(vo, vr, haar.variance, on, rn, n)
    k = 2.0 ** (n + 2) / (4.0**n - 1)
    d_o = (4 * vr + k * np.array(on)) * np.array([e.std_error for e in eo])
    d_r = (4 * vo + k * np.array(rn)) * np.array([e.std_error for e in er])
    se = float(np.sqrt(haar.variance_std_error**2 + np.sum(d_o**2) + np.sum(d_r**2)))
    return ExpressibilityReport(tuple(eo), tuple(er), sample_count, haar, rhs, se, j)
