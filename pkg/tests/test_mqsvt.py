"""Tests for query-circuit assembly against the polynomial block oracle."""

import math

import numpy as np
import pytest

from hsbench import qsp
from hsbench.circuits import QuantumCircuit, circuit_unitary, generate_rqc, make_coupling
from hsbench.linalg import RandomSource, SpectralDecomposition, block_and_spectrum, spectral_norm
from hsbench.mqsvt import (
    MqsvtInstance,
    assemble,
    block_reference,
    encoded_block,
    exact_evolution,
    mqsvt_unitary,
    output_distribution,
    rotation_angles,
)


def zero_phase_seq(d):
    return qsp.PhaseFactorSequence(
        phases=np.zeros(2 * d + 1),
        convention=qsp.CIRCUIT,
        degree=d,
        target_time=0.0,
        sup_error=0.0,
    )


@pytest.fixture(scope="module")
def solved_deg8():
    seq = qsp.solve_phases(1.0, 8, tol=2e-3, rng=RandomSource(101))
    return seq, qsp.convert_convention(seq, qsp.CIRCUIT)


@pytest.fixture(scope="module")
def solved_deg10():
    seq = qsp.solve_phases(1.0, 10, tol=2e-5, rng=RandomSource(103))
    return seq, qsp.convert_convention(seq, qsp.CIRCUIT)


def random_encoding(n, seed, gates=40):
    circ = generate_rqc(make_coupling("linear", n + 1), gates, 0.5, RandomSource(seed))
    return circ, circuit_unitary(circ)


# -- assembly structure ----------------------------------------------------------


def test_all_zero_phases_even_queries_is_identity():
    ua = QuantumCircuit(3, ())
    circ = assemble(ua, zero_phase_seq(2))
    assert np.max(np.abs(circuit_unitary(circ) - np.eye(8))) < 1e-12


def test_all_zero_phases_odd_queries_is_identity_up_to_sign():
    # Odd query counts compensate the intrinsic chain sign so that encoded
    # blocks match the polynomial; on the trivial instance that surfaces as a
    # global minus sign.
    ua = QuantumCircuit(3, ())
    circ = assemble(ua, zero_phase_seq(1))
    assert np.max(np.abs(circuit_unitary(circ) + np.eye(8))) < 1e-12


def test_gate_counts(solved_deg8):
    _, circ_seq = solved_deg8
    d = circ_seq.degree
    ua, _ = random_encoding(2, seed=5, gates=12)
    full = assemble(ua, circ_seq)
    assert len(full.gates) == 2 * d + 1 + 2 * d * len(ua.gates)
    trimmed = assemble(ua, circ_seq, include_final_rotation=False)
    assert len(trimmed.gates) == 2 * d + 2 * d * len(ua.gates)
    bare = assemble(QuantumCircuit(3, ()), circ_seq)
    assert len(bare.gates) == 2 * d + 1
    assert all(g.kind == "U1" and g.operands == (0,) for g in bare.gates)


def test_rotation_angle_order_and_compensation():
    seq = qsp.PhaseFactorSequence(
        phases=np.array([0.1, 0.2, 0.3]),
        convention=qsp.CIRCUIT,
        degree=1,
        target_time=0.0,
        sup_error=1.0,
    )
    angles = rotation_angles(seq)
    assert np.allclose(angles, [0.3 + math.pi, 0.2, 0.1])
    assert np.allclose(rotation_angles(seq, include_final_rotation=False), [0.2, 0.1])


def test_rejections(solved_deg8):
    qsp_seq, circ_seq = solved_deg8
    _, u = random_encoding(2, seed=6)
    with pytest.raises(ValueError):
        MqsvtInstance(u_a=u, phases=qsp_seq)  # wrong convention
    with pytest.raises(ValueError):
        MqsvtInstance(u_a=u[:4, :4], phases=circ_seq)  # not unitary after slicing
    with pytest.raises(ValueError):
        MqsvtInstance(u_a=np.eye(3), phases=circ_seq)  # not a qubit dimension


# -- the encoded-block identity ---------------------------------------------------


@pytest.mark.parametrize("n,seed", [(2, 11), (2, 12), (3, 13)])
def test_encoded_block_matches_polynomial_oracle(solved_deg10, n, seed):
    qsp_seq, circ_seq = solved_deg10
    ua_circ, u = random_encoding(n, seed)
    _, spec = block_and_spectrum(u, n)
    inst = MqsvtInstance(u_a=u, phases=circ_seq)
    block = encoded_block(inst)
    assert np.max(np.abs(block - block_reference(spec, qsp_seq))) < 1e-9
    err = spectral_norm(block - exact_evolution(spec, 1.0))
    assert err <= circ_seq.sup_error + 1e-9


def test_even_query_count_block(solved_deg8):
    qsp_seq, circ_seq = solved_deg8
    _, u = random_encoding(2, seed=21)
    _, spec = block_and_spectrum(u, 2)
    inst = MqsvtInstance(u_a=u, phases=circ_seq)
    block = encoded_block(inst)
    assert np.max(np.abs(block - block_reference(spec, qsp_seq))) < 1e-9
    assert spectral_norm(block - exact_evolution(spec, 1.0)) <= circ_seq.sup_error + 1e-9


def test_gate_level_and_dense_routes_agree(solved_deg8):
    _, circ_seq = solved_deg8
    ua_circ, u = random_encoding(2, seed=31, gates=20)
    inst = MqsvtInstance(u_a=u, phases=circ_seq)
    dense = mqsvt_unitary(inst)
    gate_level = circuit_unitary(assemble(ua_circ, circ_seq))
    assert np.max(np.abs(dense - gate_level)) < 1e-10
    dense_trimmed = mqsvt_unitary(inst, include_final_rotation=False)
    gate_trimmed = circuit_unitary(assemble(ua_circ, circ_seq, include_final_rotation=False))
    assert np.max(np.abs(dense_trimmed - gate_trimmed)) < 1e-10


def test_backward_time_gives_adjoint_block(solved_deg8):
    qsp_seq, circ_seq = solved_deg8
    back = qsp.solve_phases(-1.0, 8, tol=2e-3, rng=RandomSource(107))
    back_circ = qsp.convert_convention(back, qsp.CIRCUIT)
    _, u = random_encoding(2, seed=41)
    fwd_block = encoded_block(MqsvtInstance(u_a=u, phases=circ_seq))
    bwd_block = encoded_block(MqsvtInstance(u_a=u, phases=back_circ))
    tol = 2 * (circ_seq.sup_error + back_circ.sup_error)
    assert spectral_norm(bwd_block - fwd_block.conj().T) <= tol


# -- output distributions ----------------------------------------------------------


def test_zero_phases_concentrate_on_all_zeros():
    ua = QuantumCircuit(3, ())
    inst = MqsvtInstance(u_a=np.eye(8), phases=zero_phase_seq(2))
    dist = output_distribution(inst)
    assert dist.probs[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(dist.probs[1:] < 1e-15)
    assert dist.total == pytest.approx(1.0, abs=1e-12)


def test_ancilla_zero_weight_bounds(solved_deg10):
    _, circ_seq = solved_deg10
    for seed in range(5):
        _, u = random_encoding(2, seed=50 + seed)
        dist = output_distribution(MqsvtInstance(u_a=u, phases=circ_seq))
        assert dist.total <= 1.0 + 1e-10
        assert dist.total >= 1.0 - 2.0 * circ_seq.sup_error - 1e-10
        assert np.all(dist.probs >= 0.0)
        cond = dist.conditional()
        assert cond.sum() == pytest.approx(1.0, abs=1e-12)


def test_final_rotation_flag_does_not_change_probabilities(solved_deg8):
    _, circ_seq = solved_deg8
    _, u = random_encoding(2, seed=61)
    inst = MqsvtInstance(u_a=u, phases=circ_seq)
    full = output_distribution(inst)
    trimmed = output_distribution(inst, include_final_rotation=False)
    assert np.max(np.abs(full.probs - trimmed.probs)) < 1e-12


def test_dynamics_tracking_under_concatenation(solved_deg10):
    qsp_seq, _ = solved_deg10
    _, u = random_encoding(2, seed=71)
    _, spec = block_and_spectrum(u, 2)
    for r in (1, 2, 3):
        chained = qsp.concatenate(qsp_seq, r)
        circ_seq = qsp.convert_convention(chained, qsp.CIRCUIT)
        inst = MqsvtInstance(u_a=u, phases=circ_seq)
        dist = output_distribution(inst)
        col = exact_evolution(spec, chained.target_time)[:, 0]
        exact_tail = float(np.sum(np.abs(col[1:]) ** 2))
        assert abs(float(dist.probs[1:].sum()) - exact_tail) <= 2 * chained.sup_error


# -- exact evolution oracle ---------------------------------------------------------


def test_exact_evolution_at_zero_time():
    spec = SpectralDecomposition(
        eigenvalues=np.array([0.2, 0.8]), eigenvectors=np.eye(2, dtype=complex)
    )
    assert np.array_equal(exact_evolution(spec, 0.0), np.eye(2))


def test_exact_evolution_diagonal_case():
    spec = SpectralDecomposition(
        eigenvalues=np.array([0.0, 1.0]), eigenvectors=np.eye(2, dtype=complex)
    )
    out = exact_evolution(spec, math.pi)
    assert np.allclose(out, np.diag([1.0, -1.0]), atol=1e-15)


def test_exact_evolution_group_inverse():
    _, u = random_encoding(3, seed=81)
    _, spec = block_and_spectrum(u, 3)
    prod = exact_evolution(spec, 1.0) @ exact_evolution(spec, -1.0)
    assert np.max(np.abs(prod - np.eye(8))) < 1e-10


def test_exact_evolution_is_unitary():
    _, u = random_encoding(2, seed=91)
    _, spec = block_and_spectrum(u, 2)
    e = exact_evolution(spec, 2.7)
    assert np.max(np.abs(e.conj().T @ e - np.eye(4))) < 1e-11
