"""Stochastic Pauli noise simulation and the global depolarizing model.

Every gate is followed, with probability r_k for a k-qubit gate, by a
uniformly random non-identity Pauli on the gate's operands.  Averaged over
trajectories this reproduces the per-gate depolarizing channel; a dense
density-matrix evolution of the same channel is kept as an oracle for up to
four qubits.

Trajectories are grouped: the binomially-distributed error-free majority is
sampled in one multinomial draw from the cached noiseless distribution, and
only trajectories with at least one injected Pauli are propagated.  For query
circuits there is a dedicated sampler that caches the dense block-encoding
matrix, the noiseless states at every segment boundary, and (below 128
dimensions) cumulative within-segment prefix products, so an errored
trajectory costs a handful of matrix-vector products instead of a full gate
walk.

Trajectory randomness is drawn from per-chunk substreams of the caller's
seed, so results are identical however chunks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hsbench import qsp
from hsbench.circuits import QuantumCircuit, circuit_unitary, gate_matrix
from hsbench.linalg import RandomSource, apply_1q, apply_2q, basis_state
from hsbench.mqsvt import OutputDistribution, rotation_angles

_CHUNK = 4096
_PREFIX_CACHE_DIM = 128

_PAULI_1Q = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

_PAULI_2Q = tuple(
    np.kron(a, b)
    for i, a in enumerate((np.eye(2, dtype=complex),) + _PAULI_1Q)
    for j, b in enumerate((np.eye(2, dtype=complex),) + _PAULI_1Q)
    if (i, j) != (0, 0)
)


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate depolarizing rates; the one-qubit rate defaults to r2/10."""

    r2: float
    r1: float | None = None

    def __post_init__(self):
        if self.r1 is None:
            object.__setattr__(self, "r1", self.r2 / 10.0)
        if not (0.0 <= self.r1 <= 1.0 and 0.0 <= self.r2 <= 1.0):
            raise ValueError(f"rates must lie in [0,1], got r1={self.r1}, r2={self.r2}")

    def clean_probability(self, n1: int, n2: int) -> float:
        return (1.0 - self.r1) ** n1 * (1.0 - self.r2) ** n2


@dataclass(frozen=True)
class Histogram:
    """Measured counts for every string of all n+1 qubits."""

    shots: int
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", c)
        if c.min() < 0:
            raise ValueError("negative count")
        if int(c.sum()) != self.shots:
            raise ValueError(f"counts sum to {int(c.sum())}, expected {self.shots}")

    @property
    def n_qubits(self) -> int:
        return int(self.counts.shape[0]).bit_length() - 1

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def merge(self, other: "Histogram") -> "Histogram":
        if other.counts.shape != self.counts.shape:
            raise ValueError("histograms cover different string sets")
        return Histogram(self.shots + other.shots, self.counts + other.counts)


def alpha_ref(g1: int, g2: int, d: int, noise: NoiseModel) -> float:
    """Reference circuit fidelity for d queries to an encoding with (g1, g2) gates.

    Each of the 2d encoding applications contributes g1 one-qubit gates plus
    one ancilla rotation and g2 two-qubit gates, all error-free with
    probability (1-r) per gate.
    """
    return (1.0 - noise.r1) ** (2 * d * (g1 + 1)) * (1.0 - noise.r2) ** (2 * d * g2)


def global_depolarize(dist: OutputDistribution, alpha: float) -> np.ndarray:
    """Mix the noiseless distribution with the uniform one at weight 1-alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"mixing weight must lie in [0,1], got {alpha}")
    full = dist.all_probs
    return alpha * full + (1.0 - alpha) / full.shape[0]


# -- trajectory machinery --------------------------------------------------------


def _cached_ops(gates):
    return [(gate_matrix(g), g.operands) for g in gates]


def _apply_op(state, op, m):
    mat, operands = op
    if len(operands) == 2:
        return apply_2q(state, mat, operands[0], operands[1], m)
    return apply_1q(state, mat, operands[0], m)


def _inject_pauli(state, operands, m, gen):
    if len(operands) == 2:
        mat = _PAULI_2Q[gen.integers(15)]
        return apply_2q(state, mat, operands[0], operands[1], m)
    mat = _PAULI_1Q[gen.integers(3)]
    return apply_1q(state, mat, operands[0], m)


def _sample_outcome(probs, gen):
    cum = np.cumsum(probs)
    return int(np.searchsorted(cum, gen.random() * cum[-1], side="right"))


def _conditioned_error_counts(gen, n1, r1, n2, r2):
    while True:
        k1 = gen.binomial(n1, r1) if n1 and r1 > 0 else 0
        k2 = gen.binomial(n2, r2) if n2 and r2 > 0 else 0
        if k1 + k2:
            return k1, k2


def simulate_noisy(
    circuit: QuantumCircuit, noise: NoiseModel, shots: int, rng: RandomSource
) -> Histogram:
    """Per-gate Pauli-trajectory sampler for an arbitrary circuit."""
    if shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    m = circuit.n
    dim = 1 << m
    ops = _cached_ops(circuit.gates)
    oneq = [i for i, g in enumerate(circuit.gates) if not g.is_two_qubit]
    twoq = [i for i, g in enumerate(circuit.gates) if g.is_two_qubit]
    state = basis_state(m)
    for op in ops:
        state = _apply_op(state, op, m)
    noiseless = np.abs(state) ** 2
    noiseless /= noiseless.sum()

    p0 = noise.clean_probability(len(oneq), len(twoq))
    gen0 = rng.child(0).generator
    n_clean = int(gen0.binomial(shots, p0)) if p0 > 0 else 0
    counts = gen0.multinomial(n_clean, noiseless).astype(np.int64)

    n_err = shots - n_clean
    done = 0
    chunk_index = 0
    while done < n_err:
        batch = min(_CHUNK, n_err - done)
        gen = rng.child(1 + chunk_index).generator
        for _ in range(batch):
            k1, k2 = _conditioned_error_counts(gen, len(oneq), noise.r1, len(twoq), noise.r2)
            hit = {oneq[i] for i in gen.choice(len(oneq), size=k1, replace=False)} if k1 else set()
            if k2:
                hit |= {twoq[i] for i in gen.choice(len(twoq), size=k2, replace=False)}
            state = basis_state(m)
            for idx, op in enumerate(ops):
                state = _apply_op(state, op, m)
                if idx in hit:
                    state = _inject_pauli(state, op[1], m, gen)
            counts[_sample_outcome(np.abs(state) ** 2, gen)] += 1
        done += batch
        chunk_index += 1
    return Histogram(shots=shots, counts=counts)


# -- query-circuit fast path -------------------------------------------------------


class MqsvtNoisySampler:
    """Noisy sampler for the expanded query circuit of one encoding + phase set.

    The first (global-phase-only) rotation is not part of the noisy circuit,
    so the gate slots are exactly 2d*(g1+1) one-qubit and 2d*g2 two-qubit
    positions, matching alpha_ref.  All noiseless structure is precomputed
    once; sampling at different noise rates reuses it.
    """

    def __init__(self, ua: QuantumCircuit, phases: qsp.PhaseFactorSequence):
        if ua.n < 2:
            raise ValueError("need an ancilla plus at least one system qubit")
        self.m = ua.n
        self.dim = 1 << ua.n
        self.d = phases.degree
        self.g1 = ua.g1
        self.g2 = ua.g2
        self.n1 = 2 * self.d * (self.g1 + 1)
        self.n2 = 2 * self.d * self.g2
        angles = rotation_angles(phases, include_final_rotation=False)
        self.rot_phase = np.exp(1j * angles)

        fwd, bwd = ua.gates, ua.dagger().gates
        self.ops = (_cached_ops(fwd), _cached_ops(bwd))
        self.oneq_pos = tuple(
            [i for i, g in enumerate(gs) if not g.is_two_qubit] for gs in (fwd, bwd)
        )
        self.twoq_pos = tuple(
            [i for i, g in enumerate(gs) if g.is_two_qubit] for gs in (fwd, bwd)
        )

        dense = circuit_unitary(ua)
        self.block_mat = (dense, dense.conj().T)

        self.prefixes = None
        if self.dim <= _PREFIX_CACHE_DIM:
            self.prefixes = []
            for ops in self.ops:
                cum = [np.eye(self.dim, dtype=complex)]
                acc = cum[0]
                for op in ops:
                    acc = _apply_op(acc, op, self.m)
                    cum.append(acc)
                self.prefixes.append(cum)

        state = basis_state(self.m)
        self.boundaries = [state]
        for b in range(2 * self.d):
            state = self.block_mat[b % 2] @ state
            state = self._rotate(state.copy(), b)
            self.boundaries.append(state)
        self.noiseless = np.abs(self.boundaries[-1]) ** 2
        self.noiseless /= self.noiseless.sum()

    def _rotate(self, state, block):
        half = self.dim // 2
        state[:half] *= self.rot_phase[block]
        state[half:] *= np.conj(self.rot_phase[block])
        return state

    def _slot_gate(self, block_type, is_twoq, offset):
        """Within-block gate index of a slot; one-qubit slot g1 is the rotation."""
        if is_twoq:
            return self.twoq_pos[block_type][offset]
        if offset == self.g1:
            return None  # the trailing ancilla rotation
        return self.oneq_pos[block_type][offset]

    def _walk_block(self, state, block, hits, gen):
        """Propagate through one errored block, injecting Paulis after hits."""
        btype = block % 2
        rotation_hit = None in hits
        gate_hits = sorted(h for h in hits if h is not None)
        ops = self.ops[btype]
        if self.prefixes is not None:
            cum = self.prefixes[btype]
            pos = 0
            for j in gate_hits:
                if pos == 0:
                    state = cum[j + 1] @ state
                else:
                    state = cum[j + 1] @ (cum[pos].conj().T @ state)
                state = _inject_pauli(state, ops[j][1], self.m, gen)
                pos = j + 1
            if pos == 0:
                state = cum[len(ops)] @ state
            else:
                state = cum[len(ops)] @ (cum[pos].conj().T @ state)
        else:
            hitset = set(gate_hits)
            for idx, op in enumerate(ops):
                state = _apply_op(state, op, self.m)
                if idx in hitset:
                    state = _inject_pauli(state, op[1], self.m, gen)
        state = self._rotate(state.copy(), block)
        if rotation_hit:
            state = _inject_pauli(state, (0,), self.m, gen)
        return state

    def _trajectory(self, gen, noise):
        k1, k2 = _conditioned_error_counts(gen, self.n1, noise.r1, self.n2, noise.r2)
        by_block: dict[int, list] = {}
        if k1:
            for slot in gen.choice(self.n1, size=k1, replace=False):
                block, offset = divmod(int(slot), self.g1 + 1)
                by_block.setdefault(block, []).append(
                    self._slot_gate(block % 2, False, offset)
                )
        if k2:
            for slot in gen.choice(self.n2, size=k2, replace=False):
                block, offset = divmod(int(slot), self.g2)
                by_block.setdefault(block, []).append(
                    self._slot_gate(block % 2, True, offset)
                )
        first = min(by_block)
        state = self.boundaries[first]
        for block in range(first, 2 * self.d):
            if block in by_block:
                state = self._walk_block(state, block, by_block[block], gen)
            else:
                state = self._rotate(self.block_mat[block % 2] @ state, block)
        return _sample_outcome(np.abs(state) ** 2, gen)

    def sample(self, noise: NoiseModel, shots: int, rng: RandomSource) -> Histogram:
        if shots < 1:
            raise ValueError(f"need at least one shot, got {shots}")
        p0 = noise.clean_probability(self.n1, self.n2)
        gen0 = rng.child(0).generator
        n_clean = int(gen0.binomial(shots, p0)) if p0 > 0 else 0
        counts = gen0.multinomial(n_clean, self.noiseless).astype(np.int64)
        n_err = shots - n_clean
        done = 0
        chunk_index = 0
        while done < n_err:
            batch = min(_CHUNK, n_err - done)
            gen = rng.child(1 + chunk_index).generator
            for _ in range(batch):
                counts[self._trajectory(gen, noise)] += 1
            done += batch
            chunk_index += 1
        return Histogram(shots=shots, counts=counts)


def simulate_mqsvt_noisy(
    ua: QuantumCircuit,
    phases: qsp.PhaseFactorSequence,
    noise: NoiseModel,
    shots: int,
    rng: RandomSource,
) -> Histogram:
    return MqsvtNoisySampler(ua, phases).sample(noise, shots, rng)


# -- density-matrix oracle ----------------------------------------------------------


def _embed(mat: np.ndarray, operands, m: int) -> np.ndarray:
    dim = 1 << m
    out = np.zeros((dim, dim), dtype=complex)
    k = len(operands)
    for row in range(dim):
        bits_r = [(row >> (m - 1 - q)) & 1 for q in range(m)]
        i_op = 0
        for q in operands:
            i_op = (i_op << 1) | bits_r[q]
        for j_op in range(1 << k):
            bits_c = list(bits_r)
            for pos, q in enumerate(operands):
                bits_c[q] = (j_op >> (k - 1 - pos)) & 1
            col = 0
            for q in range(m):
                col = (col << 1) | bits_c[q]
            out[row, col] = mat[i_op, j_op]
    return out


def exact_noisy_distribution(circuit: QuantumCircuit, noise: NoiseModel) -> np.ndarray:
    """Dense channel evolution of the same Pauli-injection model (≤ 4 qubits)."""
    m = circuit.n
    if m > 4:
        raise ValueError("density-matrix oracle capped at 4 qubits")
    dim = 1 << m
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    for gate in circuit.gates:
        g = _embed(gate_matrix(gate), gate.operands, m)
        rho = g @ rho @ g.conj().T
        if gate.is_two_qubit:
            paulis = [_embed(p, gate.operands, m) for p in _PAULI_2Q]
            rate = noise.r2
        else:
            paulis = [_embed(p, gate.operands, m) for p in _PAULI_1Q]
            rate = noise.r1
        if rate > 0:
            mixed = sum(p @ rho @ p.conj().T for p in paulis) / len(paulis)
            rho = (1.0 - rate) * rho + rate * mixed
    return np.diag(rho).real.copy()


# -- histogram files -----------------------------------------------------------------


def write_histogram(path, hist: Histogram, seed=None, noise: NoiseModel | None = None):
    lines = [f"# shots={hist.shots}"]
    lines.append(f"# seed={'' if seed is None else seed}")
    if noise is not None:
        lines.append(f"# r1={format(noise.r1, '.17g')}")
        lines.append(f"# r2={format(noise.r2, '.17g')}")
    lines.append("bitstring,count")
    width = hist.n_qubits
    for i, c in enumerate(hist.counts):
        lines.append(f"{i:0{width}b},{int(c)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_histogram(path) -> tuple[Histogram, dict]:
    meta = {}
    rows = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif line != "bitstring,count":
                bits, _, count = line.partition(",")
                rows[bits] = int(count)
    if not rows:
        raise ValueError("histogram file has no count rows")
    width = len(next(iter(rows)))
    counts = np.zeros(1 << width, dtype=np.int64)
    for bits, count in rows.items():
        if len(bits) != width:
            raise ValueError(f"inconsistent bitstring width in {bits!r}")
        counts[int(bits, 2)] = count
    shots = int(meta.get("shots", counts.sum()))
    return Histogram(shots=shots, counts=counts), meta
