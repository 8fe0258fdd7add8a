import math

import numpy as np
import pytest

from ejmtele import gates as g
from ejmtele import qmath
from ejmtele.errors import DomainError
from ejmtele.gates import GateKind, Unitarity, d_theta, matrix_of, u_of_d


def test_n_of_one_is_identity():
    m = matrix_of(g.nonunitary(1.0, 0))
    assert np.array_equal(m.data, np.eye(2))
    assert m.unitarity is Unitarity.UNITARY


def test_n_of_zero_is_projector():
    m = matrix_of(g.nonunitary(0.0, 0))
    assert np.array_equal(m.data, np.diag([1, 0]))
    assert m.unitarity is Unitarity.NONUNITARY


@pytest.mark.parametrize("d", [0.0, 0.3, 0.9])
def test_n_of_d_gram(d):
    m = matrix_of(g.nonunitary(d, 0)).data
    assert np.array_equal(m.conj().T @ m, np.diag([1, d * d]))


def test_n_rejects_out_of_domain():
    with pytest.raises(DomainError):
        g.nonunitary(1.5, 0)


def test_rz_keeps_printed_phase():
    # exp(i xi/2) exp(-i xi Z/2), multiplied out
    xi = 0.83
    printed = np.exp(0.5j * xi) * np.diag([np.exp(-0.5j * xi), np.exp(0.5j * xi)])
    assert qmath.max_abs_diff(matrix_of(g.rz(xi, 0)), printed) < 1e-15
    assert np.array_equal(matrix_of(g.rz(math.pi / 2, 0)).data.round(15), np.diag([1, 1j]))


def test_ry_matches_exponential():
    zeta = 1.1
    expected = math.cos(zeta / 2) * np.eye(2) - 1j * math.sin(zeta / 2) * qmath.PAULI_Y
    assert qmath.max_abs_diff(matrix_of(g.ry(zeta, 0)), expected) < 1e-15


def test_hadamard_is_pauli_sum():
    expected = (qmath.PAULI_X + qmath.PAULI_Z) / math.sqrt(2)
    assert qmath.max_abs_diff(matrix_of(g.h(0)), expected) < 1e-15


@pytest.mark.parametrize(
    "gate",
    [
        g.h(0), g.s(0), g.x(0), g.y(0), g.z(0), g.ry(0.4, 0), g.rz(-1.3, 0),
        g.rz_su2(2.2, 0), g.cnot(0, 1), g.crz(0.7, 0, 1), g.crz_su2(0.7, 0, 1),
        g.cu(0.1, 0.2, 0.3, 0.4, 0, 1), g.controlled_u(qmath.PAULI_Y, 0, 1), g.gphase(0.5),
    ],
)
def test_unitary_kinds(gate):
    m = matrix_of(gate)
    assert m.unitarity is Unitarity.UNITARY
    assert qmath.unitarity_defect(m) <= 1e-12


def test_controlled_layout():
    m = matrix_of(g.crz(0.5, 0, 1)).data
    assert np.allclose(m, np.diag([1, 1, 1, np.exp(0.5j)]))
    assert np.allclose(matrix_of(g.cnot(0, 1)).data[2:, 2:], qmath.PAULI_X)


def test_gate_arity_checked():
    with pytest.raises(ValueError):
        g.GateSpec(GateKind.CNOT, (0,))
    with pytest.raises(ValueError):
        g.GateSpec(GateKind.CNOT, (1,), (1,))
    with pytest.raises(ValueError):
        g.GateSpec(GateKind.RY, (0,))


def test_measure_has_no_matrix():
    with pytest.raises(ValueError):
        matrix_of(g.measure(0))


# --- d_theta and U(d) ----------------------------------------------------------


def test_d_theta_values():
    assert d_theta(math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    assert d_theta(0.0) == pytest.approx(2 - math.sqrt(3), abs=1e-15)
    assert d_theta(0.0) == pytest.approx((math.sqrt(3) - 1) / (math.sqrt(3) + 1), abs=1e-15)
    c = math.cos(math.pi / 3)
    assert d_theta(math.pi / 3) == pytest.approx(math.sqrt(4 - 3 * c * c) / (2 + math.sqrt(3) * c), abs=1e-15)
    assert d_theta(math.pi / 3) == pytest.approx(0.6290157, abs=1e-6)


def test_d_theta_both_forms_agree():
    for theta in np.linspace(0, math.pi / 2, 101):
        assert abs(d_theta(theta) - g.d_minus(theta) / g.d_plus(theta)) <= 1e-14


def test_d_theta_domain():
    with pytest.raises(DomainError):
        d_theta(-0.1)
    with pytest.raises(DomainError):
        d_theta(2.0)


def test_u_of_d_endpoints():
    assert np.array_equal(u_of_d(1.0).data, qmath.PAULI_Z)
    assert np.array_equal(u_of_d(0.0).data, qmath.PAULI_X)


@pytest.mark.parametrize("d", [0.0, 2 - math.sqrt(3), 0.5, 1.0])
def test_u_of_d_involution(d):
    u = u_of_d(d).data
    assert qmath.max_abs_diff(u @ u, np.eye(2)) <= 1e-14
    assert qmath.max_abs_diff(u, u.conj().T) == 0
    assert qmath.unitarity_defect(u) <= 1e-14


def test_u_of_d_domain():
    with pytest.raises(DomainError):
        u_of_d(1.2)


# --- the ancilla identity [I (x) N(0)] C_U(d) (psi (x) |0>) = N(d) psi ----------------


def _controlled_u_then_project(a, b, d):
    cu = np.eye(4, dtype=complex)
    cu[2:, 2:] = u_of_d(d).data
    out = np.kron(np.eye(2), np.diag([1, 0])) @ cu @ np.kron([a, b], [1, 0])
    return out


def test_ancilla_identity_random(rng):
    for _ in range(1000):
        a, b = qmath.random_state(rng, 2)
        d = rng.uniform(0, 1)
        out = _controlled_u_then_project(a, b, d)
        assert qmath.max_abs_diff(out[0::2], g.n_matrix(d) @ [a, b]) <= 1e-12
        assert qmath.max_abs_diff(out[1::2], 0) == 0
        # keep probability as the squared norm of the kept block
        assert abs(np.vdot(out, out).real - g.n_success_probability(d, a, b)) <= 1e-12


def test_u_of_one_acts_as_identity_on_ancilla_zero(rng):
    a, b = qmath.random_state(rng, 2)
    cu = np.eye(4, dtype=complex)
    cu[2:, 2:] = u_of_d(1.0).data
    psi = np.kron([a, b], [1, 0])
    assert qmath.max_abs_diff(cu @ psi, psi) == 0


# --- realize_nonunitary ----------------------------------------------------------


def test_realization_matches_decomposition(rng):
    from ejmtele.teleport import correction_matrix

    for theta in (0.0, 0.3, 0.7, 1.2, math.pi / 2):
        for label in ("00", "01", "10", "11"):
            a = correction_matrix(theta, label)
            svd = qmath.svd_2x2(a)
            real = g.realize_nonunitary(svd, theta)
            assert qmath.max_abs_diff(real.kept_block(), real.expected_block()) <= 1e-12
            assert qmath.max_abs_diff(real.kept_block(), a / svd.singulars[0]) <= 1e-12


def test_realization_at_half_pi_is_unitary():
    from ejmtele.teleport import correction_matrix

    for label in ("00", "01", "10", "11"):
        real = g.realize_nonunitary(qmath.svd_2x2(correction_matrix(math.pi / 2, label)), math.pi / 2)
        assert real.d == pytest.approx(1.0, abs=1e-15)
        # the controlled step leaves system (x) |0> untouched
        cu = np.asarray(matrix_of(real.controlled_step))
        assert qmath.max_abs_diff(cu[:, 0::2][0::2], np.eye(2)) < 1e-15
        assert qmath.unitarity_defect(real.kept_block()) <= 1e-12


def test_realization_on_zero_state():
    real = g.NonunitaryRealization(
        d=0.5,
        pre_rotation=g.custom(np.eye(2), 0),
        controlled_step=g.controlled_u(u_of_d(0.5).data, 0, 1),
        post_projection=g.nonunitary(0.0, 1),
        post_rotation=g.custom(np.eye(2), 0),
    )
    out = real.kept_block() @ [1, 0]
    assert qmath.fidelity(out, [1, 0]) == pytest.approx(1.0, abs=1e-15)
    assert np.vdot(out, out).real == pytest.approx(1.0, abs=1e-15)


def test_realization_random_state_theta_07(rng):
    from ejmtele.teleport import correction_matrix

    theta, label = 0.7, "01"
    a = correction_matrix(theta, label)
    real = g.realize_nonunitary(qmath.svd_2x2(a), theta)
    composite = real.composite()
    for _ in range(20):
        psi = qmath.random_state(rng, 2)
        full = composite @ np.kron(psi, [1, 0])
        kept = full[0::2]  # ancilla |0> block
        assert qmath.fidelity(kept, a @ psi) == pytest.approx(1.0, abs=1e-12)
