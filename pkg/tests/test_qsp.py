import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsbench.linalg import RandomSource
from hsbench import qsp
from hsbench.qsp import (
    CIRCUIT,
    QSP,
    MalformedSequenceError,
    PhaseFactorSequence,
    bundled_phase_sets,
    concatenate,
    convert_convention,
    eval_pq,
    measured_sup_error,
    objective,
    qsp_eval,
    read_phase_file,
    reduce_phases,
    solve_phases,
    target_value,
    write_phase_file,
)


def make_seq(phases, convention=QSP, t=1.0, eps=0.0):
    phases = np.asarray(phases, dtype=float)
    d = len(phases) - 1 if convention == QSP else (len(phases) - 1) // 2
    return PhaseFactorSequence(phases, convention, d, t, eps)


# -- evaluation ---------------------------------------------------------------


def test_single_w_factor_gives_identity_polynomials():
    for x in (-1.0, -0.4, 0.0, 0.7, 1.0):
        v = qsp_eval(x, make_seq([0.0, 0.0]))
        assert v.P == pytest.approx(x)
        assert v.Q == pytest.approx(1.0)


def test_two_w_factors_by_hand():
    # product of two W(0.3) matrices, multiplied out by hand
    v = qsp_eval(0.3, make_seq([0.0, 0.0, 0.0]))
    assert v.P == pytest.approx(2 * 0.3**2 - 1)
    assert v.Q == pytest.approx(0.6)


def test_x_equals_one_accumulates_phases():
    phases = [0.3, -1.1, 0.9, 2.0, -0.4]
    v = qsp_eval(1.0, make_seq(phases))
    assert v.P == pytest.approx(np.exp(1j * sum(phases)))


def test_eval_rejects_out_of_domain():
    with pytest.raises(ValueError):
        qsp_eval(1.2, make_seq([0.0, 0.0]))


def test_unitary_field_matches_pq():
    v = qsp_eval(0.5, make_seq([0.2, -0.7, 1.3]))
    s = math.sqrt(1 - 0.25)
    assert v.unitary[0, 0] == pytest.approx(v.P)
    assert v.unitary[0, 1] == pytest.approx(1j * s * v.Q)
    assert np.allclose(v.unitary @ v.unitary.conj().T, np.eye(2), atol=1e-12)


@given(
    st.integers(min_value=1, max_value=16),
    st.floats(min_value=-1.0, max_value=1.0),
    st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=60, deadline=None)
def test_pq_normalization_invariant(d, x, seed):
    phases = RandomSource(seed).generator.uniform(-math.pi, math.pi, d + 1)
    p, q = eval_pq(np.array([x]), phases)
    norm = abs(p[0]) ** 2 + (1 - x * x) * abs(q[0]) ** 2
    assert norm == pytest.approx(1.0, abs=1e-10)


@given(
    st.integers(min_value=1, max_value=8),
    st.floats(min_value=0.0, max_value=1.0),
    st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=40, deadline=None)
def test_even_degree_gives_even_polynomial(half_d, x, seed):
    d = 2 * half_d
    phases = RandomSource(seed).generator.uniform(-math.pi, math.pi, d + 1)
    p, _ = eval_pq(np.array([x, -x]), phases)
    assert abs(p[0] - p[1]) < 1e-10


# -- objective ----------------------------------------------------------------


def test_objective_zero_time_degree_zero():
    seq = make_seq([0.0], t=0.0)
    value, grad = objective(seq, 0.0)
    assert value == pytest.approx(0.0, abs=1e-30)
    assert grad.shape == (1,)


def test_objective_gradient_matches_finite_differences():
    d = 8
    rng = RandomSource(5150).generator
    phases = rng.uniform(-math.pi, math.pi, d + 1)
    seq = make_seq(phases)
    value, grad = objective(seq, 1.0)
    h = 1e-6
    for j in range(d + 1):
        bump = np.zeros(d + 1)
        bump[j] = h
        up, _ = qsp._value_and_gradient(
            phases + bump, qsp._objective_nodes(d), target_value(1.0, qsp._objective_nodes(d))
        )
        dn, _ = qsp._value_and_gradient(
            phases - bump, qsp._objective_nodes(d), target_value(1.0, qsp._objective_nodes(d))
        )
        fd = (up - dn) / (2 * h)
        assert abs(grad[j] - fd) <= 1e-5 * max(1.0, abs(fd))


def test_objective_at_solution_has_epsilon_squared_scale():
    seq = solve_phases(1.0, 10, 1.6e-5, RandomSource(77))
    value, _ = objective(seq, 1.0)
    assert value <= (1.6e-5) ** 2


# -- solver -------------------------------------------------------------------


def test_solve_rejects_odd_degree():
    with pytest.raises(ValueError):
        solve_phases(1.0, 7, 1e-3, RandomSource(0))


def test_solve_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        solve_phases(1.0, 6, 0.0, RandomSource(0))


def test_solve_t1_d10():
    seq = solve_phases(1.0, 10, 1.6e-5, RandomSource(2024))
    assert seq.sup_error <= 1.6e-5
    assert seq.degree == 10 and seq.convention == QSP
    assert len(seq.phases) == 11
    # certified value is reproducible from the phases alone
    assert measured_sup_error(seq.phases, 1.0, 10) == pytest.approx(seq.sup_error)


def test_solve_t4_8096_d10():
    seq = solve_phases(4.8096, 10, 3.1e-2, RandomSource(2024))
    assert seq.sup_error <= 3.1e-2


def test_no_convergence_report_carries_best():
    with pytest.raises(qsp.PhaseSolverDidNotConverge) as info:
        solve_phases(1.0, 4, 1e-12, RandomSource(3), restarts=1)
    best = info.value.best
    assert best.sup_error > 1e-12
    assert len(best.phases) == 5


# -- conversion ---------------------------------------------------------------


def test_convert_three_term_example():
    seq = make_seq([0.1, 0.2, 0.3])
    circ = convert_convention(seq, CIRCUIT)
    assert circ.convention == CIRCUIT
    assert circ.degree == 1
    assert np.allclose(
        circ.phases, [0.1 + math.pi / 4, 0.2 + math.pi / 2, 0.3 + math.pi / 4]
    )


@given(st.integers(min_value=1, max_value=10), st.integers(min_value=0, max_value=2**31))
@settings(max_examples=30, deadline=None)
def test_convert_round_trip(half_d, seed):
    d = 2 * half_d
    phases = RandomSource(seed).generator.uniform(-math.pi, math.pi, d + 1)
    seq = make_seq(phases)
    back = convert_convention(convert_convention(seq, CIRCUIT), QSP)
    assert np.allclose(reduce_phases(back.phases - seq.phases), 0.0, atol=1e-12)


def test_convert_rejects_same_direction():
    with pytest.raises(MalformedSequenceError):
        convert_convention(make_seq([0.0, 0.0]), QSP)


def test_convert_rejects_odd_degree_to_circuit():
    with pytest.raises(MalformedSequenceError):
        convert_convention(make_seq([0.0, 0.0]), CIRCUIT)


def test_bundled_sets_reproduce_certified_errors():
    published = {10: 3.027e-2, 18: 9.406e-5, 26: 1.644e-6}
    sets = bundled_phase_sets()
    assert [s.degree for s in sets] == [5, 9, 13]
    for seq in sets:
        degree = 2 * seq.degree
        sp = convert_convention(seq, QSP)
        eps = measured_sup_error(sp.phases, seq.target_time, degree)
        assert abs(eps - published[degree]) / published[degree] <= 0.05


def test_bundled_sets_are_palindromic():
    for seq in bundled_phase_sets():
        assert np.allclose(seq.phases, seq.phases[::-1])


# -- concatenation ------------------------------------------------------------


def test_concatenate_r1_is_identity():
    seq = solve_phases(1.0, 6, 1.7e-2, RandomSource(8))
    rep = concatenate(seq, 1)
    assert np.allclose(rep.phases, seq.phases)
    assert rep.target_time == seq.target_time
    assert rep.sup_error == pytest.approx(seq.sup_error)


def test_concatenate_layout_example():
    seq = make_seq([0.1, 0.2, 0.3])
    rep = concatenate(seq, 2)
    assert np.allclose(rep.phases, [0.1, 0.2, 0.3 + 0.1, 0.2, 0.3])
    assert rep.degree == 4
    assert rep.target_time == pytest.approx(2.0)


def test_concatenate_rejects_zero():
    with pytest.raises(ValueError):
        concatenate(make_seq([0.1, 0.2, 0.3]), 0)


def test_concatenate_quadratic_error_growth():
    seq = solve_phases(1.0, 14, 1e-5, RandomSource(99))
    for r in (2, 3, 4):
        rep = concatenate(seq, r)
        assert rep.sup_error <= r * r * seq.sup_error
        assert rep.degree == 14 * r


# -- file format --------------------------------------------------------------


def test_phase_file_round_trip(tmp_path):
    seq = solve_phases(1.0, 6, 1.7e-2, RandomSource(11))
    path = tmp_path / "phases.json"
    write_phase_file(path, seq)
    back = read_phase_file(path)
    assert np.array_equal(back.phases, seq.phases)  # 17 digits round-trips exactly
    assert back.degree == seq.degree
    assert back.target_time == seq.target_time
    assert back.sup_error == seq.sup_error
    assert back.meta["seed"] == 11


def test_phase_file_reader_validates(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({
        "t": 1.0, "d": 3, "convention": "QSP",
        "phases": [0.0, 0.0], "sup_error": 0.1,
        "solver_meta": {"seed": 0, "iterations": 0},
    }))
    with pytest.raises(MalformedSequenceError):
        read_phase_file(path)


def test_sequence_rejects_unreduced_phases():
    with pytest.raises(MalformedSequenceError):
        make_seq([0.0, 4.0])


def test_sequence_rejects_negative_error():
    with pytest.raises(MalformedSequenceError):
        PhaseFactorSequence(np.zeros(3), QSP, 2, 1.0, -1e-3)
