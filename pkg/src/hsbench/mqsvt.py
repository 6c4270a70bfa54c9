"""Minimal singular-value-transform circuit: assembly and noiseless simulation.

The circuit makes d queries each to a block-encoding unitary U_A and its
inverse, interleaved with 2d+1 ancilla Z-rotations exp(i*phi*Z).  In matrix
order (leftmost acts last) it reads

    R(phi_0) U_A^dag R(phi_1) U_A R(phi_2) ... U_A^dag R(phi_2d-1) U_A R(phi_2d)

so the rotation with the last index acts first and, on the all-zeros input,
contributes only a global phase.  The ancilla is qubit 0 (most significant),
and the top-left 2^n block of the product implements the polynomial P of the
phase sequence evaluated at the singular values of the encoded block A.

One wrinkle is frozen here after an explicit numerical experiment: commuting
the d inverse queries into plain queries costs a factor (-1)^d, so the raw
alternating chain realizes -P when d is odd.  assemble() therefore adds pi to
the first rotation angle for odd d, which restores the encoded block to +P
exactly and is invisible in every probability.  Dropping that first rotation
(the flag below, used by noisy runs) changes the block only by a global
phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hsbench import qsp
from hsbench.circuits import GateSpec, QuantumCircuit, circuit_unitary
from hsbench.linalg import (
    CapacityError,
    SpectralDecomposition,
    basis_state,
    unitarity_defect,
)

_MAX_QUBITS = 13


@dataclass(frozen=True)
class MqsvtInstance:
    """A block-encoding unitary paired with a circuit-convention phase list."""

    u_a: np.ndarray
    phases: qsp.PhaseFactorSequence

    def __post_init__(self):
        if self.phases.convention != qsp.CIRCUIT:
            raise ValueError("instance phases must use the circuit convention")
        u = np.asarray(self.u_a, dtype=complex)
        object.__setattr__(self, "u_a", u)
        dim = u.shape[0] if u.ndim == 2 and u.shape[0] == u.shape[1] else 0
        if dim < 4 or dim & (dim - 1):
            raise ValueError(f"block-encoding unitary has invalid shape {u.shape}")
        if dim > (1 << _MAX_QUBITS):
            raise CapacityError(f"dense simulation capped at {_MAX_QUBITS} qubits")
        if unitarity_defect(u) > 1e-8:
            raise ValueError("block-encoding matrix is not unitary within 1e-8")

    @property
    def n(self) -> int:
        """System qubit count (total qubits minus the ancilla)."""
        return self.u_a.shape[0].bit_length() - 2

    @property
    def d(self) -> int:
        return self.phases.degree

    @property
    def t(self) -> float:
        return self.phases.target_time

    @property
    def eps(self) -> float:
        return self.phases.sup_error


def rotation_angles(phases: qsp.PhaseFactorSequence, include_final_rotation: bool = True):
    """Ancilla rotation angles in application order, sign-compensated.

    Entry k is the angle of exp(i*phi*Z) applied after k queries.  For odd
    query counts the first angle carries an extra pi (see the module
    docstring); with include_final_rotation=False that first, global-phase
    rotation is omitted entirely.
    """
    if phases.convention != qsp.CIRCUIT:
        raise ValueError("rotation angles are defined for the circuit convention")
    angles = np.array(phases.phases[::-1])
    if phases.degree % 2:
        angles[0] += math.pi
    return angles if include_final_rotation else angles[1:]


def assemble(
    ua: QuantumCircuit,
    phases: qsp.PhaseFactorSequence,
    include_final_rotation: bool = True,
) -> QuantumCircuit:
    """Expand the query circuit into a plain gate list on the same qubits.

    Alternates ancilla rotations (as U1 gates on qubit 0, with U1(-2*phi) =
    exp(i*phi*Z) up to nothing at all) with full copies of ua and its exact
    dagger, d copies of each.
    """
    if ua.n < 2:
        raise ValueError("the block-encoding circuit needs an ancilla plus a system")
    d = phases.degree
    angles = rotation_angles(phases, include_final_rotation)
    forward = ua.gates
    backward = ua.dagger().gates
    gates: list[GateSpec] = []
    offset = 0
    if include_final_rotation:
        gates.append(GateSpec("U1", (-2.0 * angles[0],), (0,)))
        offset = 1
    for k in range(2 * d):
        gates.extend(forward if k % 2 == 0 else backward)
        gates.append(GateSpec("U1", (-2.0 * angles[offset + k],), (0,)))
    return QuantumCircuit(ua.n, tuple(gates))


def _apply_rotation(state: np.ndarray, angle: float) -> None:
    half = state.shape[0] // 2
    state[:half] *= np.exp(1j * angle)
    state[half:] *= np.exp(-1j * angle)


def mqsvt_unitary(inst: MqsvtInstance, include_final_rotation: bool = True) -> np.ndarray:
    """Dense unitary of the query circuit, via cached matrix products."""
    dim = inst.u_a.shape[0]
    angles = rotation_angles(inst.phases, include_final_rotation)
    ua = inst.u_a
    ua_dag = ua.conj().T
    m = np.eye(dim, dtype=complex)
    offset = 0
    if include_final_rotation:
        _apply_rotation(m, angles[0])
        offset = 1
    for k in range(2 * inst.d):
        m = (ua if k % 2 == 0 else ua_dag) @ m
        _apply_rotation(m, angles[offset + k])
    return m


def encoded_block(inst: MqsvtInstance) -> np.ndarray:
    """Top-left system-dimension block of the full query-circuit unitary."""
    half = inst.u_a.shape[0] // 2
    return mqsvt_unitary(inst)[:half, :half]


@dataclass(frozen=True)
class OutputDistribution:
    """Raw bit-string probabilities with the ancilla measured as 0.

    probs[x] is the unnormalized probability of reading system string x with
    ancilla 0; total is their sum, bounded below by 1 - 2*eps.  all_probs
    covers every string of all n+1 qubits (ancilla-0 sector first) and sums
    to one.  conditional() renormalizes the ancilla-0 sector for
    post-selected sampling; raw values are the default everywhere.
    """

    probs: np.ndarray
    total: float
    eps: float
    all_probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.min() < -1e-15:
            raise ValueError("negative probability")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))
        full = np.clip(np.asarray(self.all_probs, dtype=float), 0.0, None)
        object.__setattr__(self, "all_probs", full)
        if full.shape[0] != 2 * p.shape[0]:
            raise ValueError("full-string vector must cover both ancilla sectors")
        if abs(full.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {full.sum()}, expected 1")
        if self.total > 1.0 + 1e-10:
            raise ValueError(f"ancilla-0 weight {self.total} exceeds 1")
        if self.total < 1.0 - 2.0 * self.eps - 1e-10:
            raise ValueError(
                f"ancilla-0 weight {self.total} below the 1-2*eps bound for eps={self.eps}"
            )

    def conditional(self) -> np.ndarray:
        return self.probs / self.total


def output_distribution(
    inst: MqsvtInstance, include_final_rotation: bool = True
) -> OutputDistribution:
    """Simulate on the all-zeros input and read the ancilla-0 sector."""
    dim = inst.u_a.shape[0]
    state = basis_state(inst.n + 1).astype(complex)
    angles = rotation_angles(inst.phases, include_final_rotation)
    offset = 0
    if include_final_rotation:
        _apply_rotation(state, angles[0])
        offset = 1
    ua_dag = inst.u_a.conj().T
    for k in range(2 * inst.d):
        state = (inst.u_a if k % 2 == 0 else ua_dag) @ state
        _apply_rotation(state, angles[offset + k])
    norm = float(np.vdot(state, state).real)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state norm drifted to {norm}")
    full = np.abs(state) ** 2
    probs = full[: dim // 2]
    return OutputDistribution(
        probs=probs, total=float(probs.sum()), eps=inst.eps, all_probs=full
    )


def exact_evolution(spec: SpectralDecomposition, t: float) -> np.ndarray:
    """Matrix exponential e^{-itH} from an eigendecomposition of H."""
    phase = np.exp(-1j * t * spec.eigenvalues)
    return (spec.eigenvectors * phase) @ spec.eigenvectors.conj().T


def block_reference(spec: SpectralDecomposition, seq: qsp.PhaseFactorSequence) -> np.ndarray:
    """Polynomial g(A) = V P(sqrt(lambda)) V^dag, the encoded-block oracle."""
    if seq.convention != qsp.QSP:
        raise ValueError("the block reference evaluates QSP-convention phases")
    p, _ = qsp.eval_pq(np.sqrt(spec.eigenvalues), seq.phases)
    return (spec.eigenvectors * p) @ spec.eigenvectors.conj().T
