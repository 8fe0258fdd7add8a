"""The elegant joint measurement (EJM) basis and its measurement circuit."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import gates as g
from .errors import DomainError
from .qmath import (
    PAULI_Y,
    bloch_vector,
    density,
    embed,
    partial_trace,
)

LABELS = ("00", "01", "10", "11")
SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


def check_theta(theta: float) -> None:
    if not (0.0 <= theta <= math.pi / 2 + 1e-12):
        raise DomainError(f"theta must lie in [0, pi/2], got {theta}")


def check_label(label: str) -> None:
    if label not in LABELS:
        raise ValueError(f"unknown EJM outcome {label!r}; expected one of {LABELS}")


def r_plus(theta: float) -> complex:
    return (1 + cmath.exp(-1j * theta)) / SQRT2


def r_minus(theta: float) -> complex:
    return (1 - cmath.exp(-1j * theta)) / SQRT2


@dataclass(frozen=True, eq=False)
class EjmBasis:
    theta: float
    states: dict[str, np.ndarray]
    r_plus: complex
    r_minus: complex

    def __getitem__(self, label: str) -> np.ndarray:
        return self.states[label]

    def matrix(self) -> np.ndarray:
        """Rows are the basis kets in label order."""
        return np.array([self.states[k] for k in LABELS])

    def gram(self) -> np.ndarray:
        m = self.matrix()
        return m.conj() @ m.T

    def completeness(self) -> np.ndarray:
        return sum(density(v) for v in self.states.values())

    def probabilities(self, phi) -> np.ndarray:
        """Projector-rule outcome distribution ``|<e_i|phi>|^2`` for a two-qubit state."""
        phi = np.asarray(phi, dtype=complex)
        return np.abs(self.matrix().conj() @ phi) ** 2


def build_basis(theta: float) -> EjmBasis:
    """The four EJM kets at ``theta``, amplitudes over |00>, |01>, |10>, |11>.

    Each ket is half the complex conjugate of a printed row of phases and
    ``r_pm``.
    """
    check_theta(theta)
    rp, rm = r_plus(theta), r_minus(theta)
    e = lambda k: cmath.exp(1j * k * math.pi / 4)  # noqa: E731
    rows = {
        "00": (e(-1), rm, rp, e(-3)),
        "01": (e(3), rm, rp, e(1)),
        "10": (e(1), -rp, -rm, e(3)),
        "11": (e(-3), -rp, -rm, e(-1)),
    }
    states = {}
    for label, row in rows.items():
        v = np.conj(np.array(row, dtype=complex)) / 2
        v.setflags(write=False)
        states[label] = v
    return EjmBasis(theta, states, rp, rm)


class Side(enum.Enum):
    TRACE_OUT_FIRST = "trace_out_first"
    TRACE_OUT_SECOND = "trace_out_second"


@dataclass(frozen=True)
class TetrahedronReport:
    side: Side
    bloch_vectors: tuple[np.ndarray, ...]
    common_radius: float
    pairwise_cosines: tuple[float, ...] | None

    @property
    def degenerate(self) -> bool:
        """True when the vectors have collapsed to the origin (theta = pi/2)."""
        return self.pairwise_cosines is None


def reduced_tetrahedron(basis: EjmBasis, side: Side | str) -> TetrahedronReport:
    side = Side(side)
    keep = [1] if side is Side.TRACE_OUT_FIRST else [0]
    vecs = tuple(
        bloch_vector(partial_trace(density(basis[k]), keep, 2)) for k in LABELS
    )
    lengths = [float(np.linalg.norm(v)) for v in vecs]
    radius = float(np.mean(lengths))
    if radius < 1e-9:
        cosines = None
    else:
        cosines = tuple(
            float(vecs[i] @ vecs[j] / (lengths[i] * lengths[j]))
            for i in range(4)
            for j in range(i + 1, 4)
        )
    return TetrahedronReport(side, vecs, radius, cosines)


def tetrahedron_radius(theta: float) -> float:
    return SQRT3 / 2 * math.cos(theta)


_YY = np.kron(PAULI_Y, PAULI_Y)


def concurrence(state) -> float:
    """Pure-state concurrence ``|<psi*| Y (x) Y |psi>|``."""
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (4,):
        raise ValueError(f"concurrence needs a two-qubit state, got shape {psi.shape}")
    if abs(np.vdot(psi, psi).real - 1) > 1e-10:
        raise ValueError("concurrence needs a normalized state")
    return float(abs(psi @ _YY @ psi))


def ejm_concurrence(theta: float) -> float:
    """Common concurrence of the EJM kets, ``sqrt(1 - r^2)`` for reduced Bloch length r."""
    return math.sqrt(1 - 0.75 * math.cos(theta) ** 2)


def ejm_circuit(theta: float, first: int = 0, second: int = 1) -> list[g.GateSpec]:
    """Gates rotating each EJM ket onto its computational label (up to phase)."""
    check_theta(theta)
    return [
        g.cnot(first, second),
        g.h(first),
        g.crz(math.pi / 2 - theta, first, second),
        g.s(first),
        g.s(second),
        g.h(first),
        g.h(second),
    ]


def ejm_measurement_circuit(theta: float, first: int = 0, second: int = 1) -> list[g.GateSpec]:
    """:func:`ejm_circuit` followed by computational-basis readout, ``first`` giving m1."""
    return ejm_circuit(theta, first, second) + [g.measure(first), g.measure(second)]


def ejm_unitary(theta: float) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    for gate in ejm_circuit(theta):
        out = embed(g.matrix_of(gate), gate.qubits, 2) @ out
    return out


def outcome_phase(label: str) -> complex:
    """Phase ``(-1)^(m1 xor m2) i`` carried by the circuit output for ``label``."""
    check_label(label)
    m1, m2 = int(label[0]), int(label[1])
    return (-1) ** (m1 ^ m2) * 1j
