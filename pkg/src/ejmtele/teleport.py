"""Teleportation through the EJM: branch states, corrections, success probabilities.

Qubit 1 carries the input, qubits 2 and 3 share the singlet, qubit 1 is the
most significant index. Branch states are kept unnormalized with the
bookkeeping ``p_i = <psi_i|psi_i> / 8``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import gates
from .ejm import LABELS, build_basis, check_label, check_theta, r_minus, r_plus
from .gates import d_minus, d_plus
from .qmath import Operator, Svd2x2, Unitarity, svd_2x2

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
A_PLUS = math.sqrt(6 + 2 * SQRT3)
A_MINUS = math.sqrt(6 - 2 * SQRT3)
SINGLET = np.array([0, 1, -1, 0], dtype=complex) / SQRT2


def _phase(eighths: int) -> complex:
    """e^{i k pi/4}."""
    return cmath.exp(1j * eighths * math.pi / 4)


@dataclass(frozen=True)
class InputState:
    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        n2 = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n2 - 1) > 1e-12:
            raise ValueError(f"input state must be normalized, |alpha|^2+|beta|^2 = {n2}")

    @classmethod
    def from_angles(cls, zeta: float, xi: float = 0.0) -> InputState:
        """``Rz(xi) Ry(zeta) |0> = cos(zeta/2)|0> + e^{i xi} sin(zeta/2)|1>``."""
        return cls(math.cos(zeta / 2), cmath.exp(1j * xi) * math.sin(zeta / 2))

    @classmethod
    def random(cls, rng: np.random.Generator) -> InputState:
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        return cls(v[0], v[1])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])

    def angles(self) -> tuple[float, float]:
        """(zeta, xi) reproducing this state up to a global phase."""
        zeta = 2 * math.atan2(abs(self.beta), abs(self.alpha))
        if abs(self.beta) < 1e-15 or abs(self.alpha) < 1e-15:
            return zeta, 0.0
        return zeta, cmath.phase(self.beta) - cmath.phase(self.alpha)


def prepare_joint_state(state: InputState) -> np.ndarray:
    return np.kron(state.vector, SINGLET)


# --- branch states -------------------------------------------------------------


def branch_state(state: InputState, theta: float, label: str) -> np.ndarray:
    """Receiver's unnormalized state after outcome ``label``, written out term by term."""
    check_theta(theta)
    check_label(label)
    a, b = state.alpha, state.beta
    rp, rm = r_plus(theta), r_minus(theta)
    if label == "00":
        return np.array([-rm * a - _phase(-3) * b, _phase(-1) * a + rp * b])
    if label == "01":
        return np.array([-rm * a - _phase(1) * b, _phase(3) * a + rp * b])
    if label == "10":
        return np.array([rp * a - _phase(3) * b, _phase(1) * a - rm * b])
    return np.array([rp * a - _phase(-1) * b, _phase(-3) * a - rm * b])


def projected_branch_state(state: InputState, theta: float, label: str) -> np.ndarray:
    """``2 sqrt2 (<e_i| (x) I) |Phi>``, computed by contracting the joint state."""
    check_label(label)
    e = build_basis(theta)[label]
    joint = prepare_joint_state(state).reshape(4, 2)
    return 2 * SQRT2 * (e.conj() @ joint)


@dataclass(frozen=True, eq=False)
class BranchOutcome:
    label: str
    post_state_unnormalized: np.ndarray
    normalization: float
    branch_probability: float

    @property
    def post_state(self) -> np.ndarray:
        return self.post_state_unnormalized * self.normalization


def branch(state: InputState, theta: float, label: str) -> BranchOutcome:
    psi = branch_state(state, theta, label)
    norm2 = float(np.vdot(psi, psi).real)
    return BranchOutcome(label, psi, 1 / math.sqrt(norm2), norm2 / 8)


# |psi_i|^2 = 2 + cos(theta) m_i . n, with n the input's Bloch vector
BRANCH_AXES = {
    "00": (1.0, -1.0, -1.0),
    "01": (-1.0, 1.0, -1.0),
    "10": (1.0, 1.0, 1.0),
    "11": (-1.0, -1.0, 1.0),
}


def cos_theta(theta: float) -> float:
    """``cos(theta)`` as ``sin(pi/2 - theta)``: exactly 0 at ``theta = pi/2``."""
    return math.sin(math.pi / 2 - theta)


def input_bloch(state: InputState) -> tuple[float, float, float]:
    ab = state.alpha.conjugate() * state.beta
    return 2 * ab.real, 2 * ab.imag, abs(state.alpha) ** 2 - abs(state.beta) ** 2


def branch_norm_sq(state: InputState, theta: float, label: str) -> float:
    """``<psi_i|psi_i>`` in closed form, so ``1 / N_i^2``."""
    check_theta(theta)
    check_label(label)
    m = BRANCH_AXES[label]
    n = input_bloch(state)
    return 2 + cos_theta(theta) * (m[0] * n[0] + m[1] * n[1] + m[2] * n[2])


def branch_probabilities(state: InputState, theta: float) -> dict[str, float]:
    return {k: branch(state, theta, k).branch_probability for k in LABELS}


# --- correction matrices ----------------------------------------------------------


def correction_coefficient(theta: float) -> complex:
    """Common prefactor ``sqrt2 / (3 - e^{-2 i theta})`` of every correction matrix."""
    return SQRT2 / (3 - cmath.exp(-2j * theta))


def correction_matrix(theta: float, label: str) -> np.ndarray:
    """``A_i`` with ``A_i |psi_i> = |psi_0>`` for the unnormalized branch state."""
    check_theta(theta)
    check_label(label)
    e = cmath.exp(-1j * theta)
    body = {
        "00": [[-1 - e, 1 + 1j], [1 - 1j, 1 - e]],
        "01": [[-1 - e, -1 - 1j], [-1 + 1j, 1 - e]],
        "10": [[1 - e, 1 - 1j], [1 + 1j, -1 - e]],
        "11": [[1 - e, -1 + 1j], [-1 - 1j, -1 - e]],
    }[label]
    return correction_coefficient(theta) * np.array(body, dtype=complex)


def printed_svd_factors(theta: float, label: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form ``(U_i, D, V_i^dag)`` with ``A_i = coefficient * U_i D V_i^dag``.

    An independent route to the factors; its column phases differ from
    :func:`ejmtele.qmath.svd_2x2`'s convention.
    """
    check_theta(theta)
    check_label(label)
    ap, am = A_PLUS, A_MINUS
    dp, dm = d_plus(theta), d_minus(theta)
    e = cmath.exp(-1j * theta)
    if label == "00":
        u = [
            [(-(1 + e) * (SQRT3 + 1) - 2) / (ap * dp), ((1 + e) * (SQRT3 - 1) - 2) / (am * dm)],
            [SQRT2 * _phase(-1) * (SQRT3 + e) / (ap * dp), -SQRT2 * _phase(-1) * (SQRT3 - e) / (am * dm)],
        ]
        vd = [
            [(SQRT3 + 1) / ap, SQRT2 * _phase(-3) / ap],
            [-(SQRT3 - 1) / am, SQRT2 * _phase(-3) / am],
        ]
    elif label == "01":
        u = [
            [(-(1 + e) * (SQRT3 + 1) - 2) / (ap * dp), (-(1 + e) * (SQRT3 - 1) + 2) / (am * dm)],
            [SQRT2 * _phase(3) * (SQRT3 + e) / (ap * dp), SQRT2 * _phase(3) * (SQRT3 - e) / (am * dm)],
        ]
        vd = [
            [(SQRT3 + 1) / ap, SQRT2 * _phase(1) / ap],
            [(SQRT3 - 1) / am, -SQRT2 * _phase(1) / am],
        ]
    elif label == "10":
        u = [
            [(-(1 - e) * (SQRT3 - 1) + 2) / (am * dp), ((1 - e) * (SQRT3 + 1) + 2) / (ap * dm)],
            [-SQRT2 * _phase(1) * (SQRT3 + e) / (am * dp), SQRT2 * _phase(1) * (SQRT3 - e) / (ap * dm)],
        ]
        vd = [
            [-(SQRT3 - 1) / am, -SQRT2 * _phase(3) / am],
            [(SQRT3 + 1) / ap, -SQRT2 * _phase(3) / ap],
        ]
    else:
        u = [
            [((1 - e) * (SQRT3 - 1) - 2) / (am * dp), ((1 - e) * (SQRT3 + 1) + 2) / (ap * dm)],
            [SQRT2 * _phase(-3) * (SQRT3 + e) / (am * dp), SQRT2 * _phase(-3) * (SQRT3 - e) / (ap * dm)],
        ]
        vd = [
            [(SQRT3 - 1) / am, SQRT2 * _phase(-1) / am],
            [(SQRT3 + 1) / ap, -SQRT2 * _phase(-1) / ap],
        ]
    return np.array(u, dtype=complex), np.diag([dp, dm]).astype(complex), np.array(vd, dtype=complex)


@dataclass(frozen=True, eq=False)
class CorrectionPlan:
    """Everything the receiver needs for one EJM outcome.

    ``kraus_keep`` is ``A`` scaled to unit operator norm, which is what the
    ancilla circuit implements; ``c_magnitude_sq`` is that scale squared.
    """

    label: str
    theta: float
    A: np.ndarray
    svd: Svd2x2
    kraus_keep: Operator
    kraus_fail: Operator
    c_magnitude_sq: float

    def realization(self, system: int = 0, ancilla: int = 1) -> gates.NonunitaryRealization:
        return gates.realize_nonunitary(self.svd, self.theta, system, ancilla)

    def circuit(self, system: int = 0, ancilla: int = 1) -> list[gates.GateSpec]:
        return self.realization(system, ancilla).gates


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def correction_plan(theta: float, label: str) -> CorrectionPlan:
    a = correction_matrix(theta, label)
    svd = svd_2x2(a)
    s0 = svd.singulars[0]
    m0 = a / s0
    m1 = _psd_sqrt(np.eye(2) - m0.conj().T @ m0)
    return CorrectionPlan(
        label=label,
        theta=theta,
        A=a,
        svd=svd,
        kraus_keep=Operator.classify(m0),
        kraus_fail=Operator(m1, Unitarity.NONUNITARY if theta < math.pi / 2 else Unitarity.UNCHECKED),
        c_magnitude_sq=1 / (s0 * s0),
    )


# --- success probabilities ------------------------------------------------------------


def success_probability(state: InputState, theta: float, label: str) -> float:
    """Keep probability of the correction for outcome ``label``: ``N_i^2 (2 - sqrt3 cos)``."""
    return (2 - SQRT3 * cos_theta(theta)) / branch_norm_sq(state, theta, label)


def success_probability_10_expanded(state: InputState, theta: float) -> float:
    """Outcome-10 keep probability with ``N_10^2`` written out in the amplitudes."""
    check_theta(theta)
    a, b = state.alpha, state.beta
    c = math.cos(theta)
    denom = 2 + c * (abs(a) ** 2 - abs(b) ** 2) + 2 * c * ((1 - 1j) * a.conjugate() * b).real
    return (2 - SQRT3 * c) / denom


def success_range(theta: float) -> tuple[float, float]:
    """Smallest and largest keep probability over real-amplitude inputs
    ``cos(z/2)|0> + sin(z/2)|1>``, the same for every outcome."""
    check_theta(theta)
    c = cos_theta(theta)
    num = 2 - SQRT3 * c
    return num / (2 + SQRT2 * c), num / (2 - SQRT2 * c)


def total_success_probability(theta: float) -> float:
    check_theta(theta)
    return 1 - SQRT3 / 2 * cos_theta(theta)


def unnormalized_c_magnitude_sq(state: InputState, theta: float, label: str) -> float:
    """``|c_i|^2`` when ``M_0 = c_i A_i`` acts on the unnormalized branch state.

    Equal to :func:`success_probability`, since
    ``A_i |psi_i>`` is the normalized input.
    """
    n = branch(state, theta, label).normalization
    return n * n * (2 - SQRT3 * math.cos(theta))
