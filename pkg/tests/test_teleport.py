import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ejmtele import qmath, teleport
from ejmtele.ejm import LABELS
from ejmtele.errors import DomainError
from ejmtele.teleport import (
    InputState,
    branch,
    correction_matrix,
    correction_plan,
    success_probability,
    total_success_probability,
)

from conftest import THETA_GRID_50

S2, S3 = math.sqrt(2), math.sqrt(3)


def test_input_state_validation():
    with pytest.raises(ValueError):
        InputState(1, 1)
    st_ = InputState.from_angles(1.0, 0.5)
    assert abs(st_.alpha) ** 2 + abs(st_.beta) ** 2 == pytest.approx(1.0, abs=1e-15)


def test_input_angles_round_trip(rng):
    for _ in range(50):
        s = InputState.random(rng)
        zeta, xi = s.angles()
        assert qmath.fidelity(InputState.from_angles(zeta, xi).vector, s.vector) == pytest.approx(1.0, abs=1e-12)


def test_prepare_joint_state_basis_inputs():
    out = teleport.prepare_joint_state(InputState(1, 0))
    assert np.allclose(out, [0, 1 / S2, -1 / S2, 0, 0, 0, 0, 0], atol=1e-15)
    out = teleport.prepare_joint_state(InputState(0, 1))
    assert np.flatnonzero(np.abs(out) > 0).tolist() == [5, 6]
    assert out[5] == pytest.approx(1 / S2) and out[6] == pytest.approx(-1 / S2)


def test_prepare_joint_state_norm(rng):
    for _ in range(20):
        assert qmath.norm(teleport.prepare_joint_state(InputState.random(rng))) == pytest.approx(1.0, abs=1e-14)


def test_branch_states_agree_with_projection(rng):
    for _ in range(200):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        for k in LABELS:
            printed = teleport.branch_state(s, theta, k)
            projected = teleport.projected_branch_state(s, theta, k)
            assert qmath.max_abs_diff(printed, projected) <= 1e-12


def test_branch_probabilities_theta_zero_basis_input():
    probs = teleport.branch_probabilities(InputState(1, 0), 0.0)
    assert [probs[k] for k in LABELS] == pytest.approx([1 / 8, 1 / 8, 3 / 8, 3 / 8], abs=1e-12)


def test_branch_probabilities_half_pi(rng):
    for _ in range(20):
        s = InputState.random(rng)
        for k in LABELS:
            b = branch(s, math.pi / 2, k)
            assert b.branch_probability == pytest.approx(0.25, abs=1e-12)
            assert b.normalization == pytest.approx(1 / S2, abs=1e-12)


def test_branch_bookkeeping(rng):
    for _ in range(100):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        outs = [branch(s, theta, k) for k in LABELS]
        for o in outs:
            assert abs(o.normalization - 1 / qmath.norm(o.post_state_unnormalized)) <= 1e-12
            assert abs(o.branch_probability - 1 / (8 * o.normalization**2)) <= 1e-12
        assert abs(sum(o.branch_probability for o in outs) - 1) <= 1e-10


def test_branch_rejects_bad_label():
    with pytest.raises(ValueError):
        branch(InputState(1, 0), 0.1, "2")
    with pytest.raises(DomainError):
        branch(InputState(1, 0), -1.0, "00")


# --- correction matrices -----------------------------------------------------------


def test_correction_matrix_theta_zero():
    expected = (S2 / 2) * np.array([[-2, 1 + 1j], [1 - 1j, 0]])
    assert qmath.max_abs_diff(correction_matrix(0.0, "00"), expected) <= 1e-15


@pytest.mark.parametrize("label", LABELS)
def test_correction_matrix_half_pi_is_scaled_unitary(label):
    a = correction_matrix(math.pi / 2, label)
    assert qmath.max_abs_diff(a @ a.conj().T, np.eye(2) / 2) <= 1e-12
    assert qmath.max_abs_diff(a.conj().T @ a, np.eye(2) / 2) <= 1e-12


def test_proportional_unitarity_only_at_half_pi():
    for theta in THETA_GRID_50:
        for k in LABELS:
            a = correction_matrix(theta, k)
            g = a.conj().T @ a
            defect = np.max(np.abs(g - np.trace(g).real / 2 * np.eye(2)))
            if theta == math.pi / 2:
                assert defect <= 1e-12
            else:
                assert defect > 1e-12


def test_recovery_exact(rng):
    for _ in range(1000):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        k = LABELS[rng.integers(4)]
        out = correction_matrix(theta, k) @ teleport.branch_state(s, theta, k)
        assert qmath.max_abs_diff(out, s.vector) <= 1e-10
        assert qmath.fidelity(out, s.vector) == pytest.approx(1.0, abs=1e-10)


# --- SVD routes ------------------------------------------------------------------------


@pytest.mark.parametrize("theta", THETA_GRID_50)
def test_printed_svd_reconstructs(theta):
    c = teleport.correction_coefficient(theta)
    for k in LABELS:
        u, d, vd = teleport.printed_svd_factors(theta, k)
        assert qmath.unitarity_defect(u) <= 1e-12
        assert qmath.unitarity_defect(vd) <= 1e-12
        assert qmath.max_abs_diff(c * u @ d @ vd, correction_matrix(theta, k)) <= 1e-10


@pytest.mark.parametrize("theta", THETA_GRID_50)
def test_generic_svd_singulars(theta):
    scale = abs(teleport.correction_coefficient(theta))
    for k in LABELS:
        res = qmath.svd_2x2(correction_matrix(theta, k))
        assert abs(res.singulars[0] - scale * teleport.d_plus(theta)) <= 1e-10
        assert abs(res.singulars[1] - scale * teleport.d_minus(theta)) <= 1e-10
        assert qmath.max_abs_diff(res.reconstruct(), correction_matrix(theta, k)) <= 1e-10


def test_generic_svd_theta_zero_singulars():
    res = qmath.svd_2x2(correction_matrix(0.0, "00"))
    assert res.singulars == pytest.approx((S2 / 2 * (S3 + 1), S2 / 2 * (S3 - 1)), abs=1e-12)


# --- Kraus pair -----------------------------------------------------------------------------


@pytest.mark.parametrize("theta", [0.0, 0.2, 0.7, 1.1, math.pi / 2])
@pytest.mark.parametrize("label", LABELS)
def test_kraus_pair(theta, label):
    plan = correction_plan(theta, label)
    m0, m1 = plan.kraus_keep.data, plan.kraus_fail.data
    assert qmath.max_abs_diff(m0.conj().T @ m0 + m1.conj().T @ m1, np.eye(2)) <= 1e-12
    sv = np.linalg.svd(m0, compute_uv=False)
    assert abs(sv[0] - 1) <= 1e-12
    # M0 proportional to A
    a = plan.A
    scale = np.vdot(a, m0) / np.vdot(a, a)
    assert qmath.max_abs_diff(m0, scale * a) <= 1e-12
    assert plan.c_magnitude_sq == pytest.approx(2 - S3 * math.cos(theta), abs=1e-12)
    # the circuit realization implements M0
    assert qmath.max_abs_diff(plan.realization().kept_block(), m0) <= 1e-12


def test_kraus_half_pi_deterministic():
    for k in LABELS:
        plan = correction_plan(math.pi / 2, k)
        assert plan.kraus_keep.is_unitary
        assert np.max(np.abs(plan.kraus_fail.data)) <= 1e-7  # sqrt of rounding-level residue


def test_kraus_theta_zero_singulars():
    for k in LABELS:
        sv = np.linalg.svd(correction_plan(0.0, k).kraus_keep.data, compute_uv=False)
        assert sv == pytest.approx([1, 2 - S3], abs=1e-12)


# --- success probabilities -------------------------------------------------------------------


def test_success_half_pi(rng):
    for _ in range(10):
        s = InputState.random(rng)
        for k in LABELS:
            assert success_probability(s, math.pi / 2, k) == pytest.approx(1.0, abs=1e-12)


def test_success_theta_zero_branch_10():
    p = success_probability(InputState(1, 0), 0.0, "10")
    assert p == pytest.approx((2 - S3) / 3, abs=1e-12)
    assert p == pytest.approx(0.089316, abs=1e-6)


def test_expanded_branch_10_formula(rng):
    for _ in range(500):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        assert abs(teleport.success_probability_10_expanded(s, theta) - success_probability(s, theta, "10")) <= 1e-12


def test_success_equals_kraus_keep_probability(rng):
    for _ in range(100):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        for k in LABELS:
            psi = branch(s, theta, k).post_state
            m0 = correction_plan(theta, k).kraus_keep.data
            kept = m0 @ psi
            assert abs(np.vdot(kept, kept).real - success_probability(s, theta, k)) <= 1e-12
            assert abs(teleport.unnormalized_c_magnitude_sq(s, theta, k) - success_probability(s, theta, k)) <= 1e-12


def test_success_range_real_inputs():
    for theta in (0.0, 0.5, 1.0):
        lo, hi = teleport.success_range(theta)
        vals = [
            success_probability(InputState.from_angles(z), theta, k)
            for z in np.linspace(0, 2 * math.pi, 4001)
            for k in LABELS
        ]
        assert min(vals) == pytest.approx(lo, abs=1e-6)
        assert max(vals) == pytest.approx(hi, abs=1e-6)
        assert lo - 1e-12 <= min(vals) and max(vals) <= hi + 1e-12


def test_complex_inputs_exceed_real_range(rng):
    # with phases the outcome-10 denominator reaches 2 +- sqrt3 cos(theta)
    theta = 0.0
    lo, _ = teleport.success_range(theta)
    vals = [success_probability(InputState.random(rng), theta, "10") for _ in range(4000)]
    assert min(vals) < lo
    assert min(vals) >= (2 - S3) / (2 + S3) - 1e-12


def test_total_success_values():
    assert total_success_probability(math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert total_success_probability(0.0) == pytest.approx(0.1339746, abs=1e-7)
    assert total_success_probability(math.pi / 3) == pytest.approx(1 - S3 / 4, abs=1e-15)
    assert total_success_probability(math.pi / 3) == pytest.approx(0.5669873, abs=1e-7)


def test_total_success_consistency(rng):
    thetas = np.linspace(0, math.pi / 2, 20)
    for theta in thetas:
        totals = []
        for _ in range(100):
            s = InputState.random(rng)
            totals.append(sum(branch(s, theta, k).branch_probability * success_probability(s, theta, k) for k in LABELS))
        assert max(abs(t - total_success_probability(theta)) for t in totals) <= 1e-12
        assert np.var(totals) <= 1e-24


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 2 * math.pi), st.floats(-math.pi, math.pi), st.floats(0, math.pi / 2), st.sampled_from(LABELS)
)
def test_recovery_property(zeta, xi, theta, label):
    s = InputState.from_angles(zeta, xi)
    out = correction_matrix(theta, label) @ teleport.branch_state(s, theta, label)
    assert qmath.max_abs_diff(out, s.vector) <= 1e-10
    p = success_probability(s, theta, label)
    assert 0 < p <= 1 + 1e-12


def test_branch_norm_closed_form(rng):
    for _ in range(300):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        for k in LABELS:
            psi = teleport.branch_state(s, theta, k)
            assert abs(teleport.branch_norm_sq(s, theta, k) - np.vdot(psi, psi).real) <= 1e-13


def test_branch_axes_form_a_tetrahedron():
    axes = np.array([teleport.BRANCH_AXES[k] for k in LABELS])
    assert np.allclose(axes.sum(axis=0), 0)
    gram = axes @ axes.T / 3
    assert np.allclose(gram, np.where(np.eye(4) == 1, 1, -1 / 3))


def test_success_exactly_one_at_half_pi(rng):
    assert teleport.cos_theta(math.pi / 2) == 0.0
    for z in np.linspace(0, 2 * math.pi, 629):
        for k in LABELS:
            assert success_probability(InputState.from_angles(z), math.pi / 2, k) == 1.0
