"""Gate library.

Conventions follow the teleportation circuits: ``Ry(z) = exp(-i z Y/2)`` and
``Rz(x) = e^{i x/2} exp(-i x Z/2) = diag(1, e^{i x})``, so ``Rz(pi/2)`` is
exactly ``S``. The OpenQASM-native kinds (``RZ_SU2``, ``CRZ_SU2``, ``CU``,
``GPHASE``, ``MEASURE``) use the OpenQASM 3 definitions and exist so parsed
programs round-trip without rewriting angles.

Controlled gates list their controls first: ``matrix_of`` returns the matrix
on ``controls + targets`` in that factor order.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NotUnitaryError
from .qmath import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    TOL,
    Operator,
    Svd2x2,
    Unitarity,
    embed,
    is_unitary,
    ry as _ry,
    rz_su2 as _rz_su2,
)

SQRT3 = math.sqrt(3.0)


class GateKind(enum.Enum):
    H = "h"
    S = "s"
    X = "x"
    Y = "y"
    Z = "z"
    RY = "ry"
    RZ = "rz"
    CNOT = "cnot"
    CRZ = "crz"
    CONTROLLED_U = "controlled_u"
    N = "n"
    CUSTOM = "custom"
    RZ_SU2 = "rz_su2"
    CRZ_SU2 = "crz_su2"
    CU = "cu"
    GPHASE = "gphase"
    MEASURE = "measure"


# kind -> (controls, targets, params)
_ARITY = {
    GateKind.H: (0, 1, 0),
    GateKind.S: (0, 1, 0),
    GateKind.X: (0, 1, 0),
    GateKind.Y: (0, 1, 0),
    GateKind.Z: (0, 1, 0),
    GateKind.RY: (0, 1, 1),
    GateKind.RZ: (0, 1, 1),
    GateKind.CNOT: (1, 1, 0),
    GateKind.CRZ: (1, 1, 1),
    GateKind.CONTROLLED_U: (1, 1, 0),
    GateKind.N: (0, 1, 1),
    GateKind.RZ_SU2: (0, 1, 1),
    GateKind.CRZ_SU2: (1, 1, 1),
    GateKind.CU: (1, 1, 4),
    GateKind.GPHASE: (0, 0, 1),
    GateKind.MEASURE: (0, 1, 0),
}

_FIXED = {
    GateKind.H: np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    GateKind.S: np.diag([1, 1j]),
    GateKind.X: PAULI_X,
    GateKind.Y: PAULI_Y,
    GateKind.Z: PAULI_Z,
}


@dataclass(frozen=True, eq=False)
class GateSpec:
    kind: GateKind
    targets: tuple[int, ...]
    controls: tuple[int, ...] = ()
    params: tuple[float, ...] = ()
    matrix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(self, "controls", tuple(int(q) for q in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if set(self.targets) & set(self.controls):
            raise ValueError(f"{self.kind.value}: targets and controls overlap")
        if len(set(self.qubits)) != len(self.qubits) or any(q < 0 for q in self.qubits):
            raise ValueError(f"{self.kind.value}: bad qubit indices {self.qubits}")
        if self.kind is GateKind.CUSTOM:
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (2 ** len(self.targets),) * 2 or self.controls or self.params:
                raise ValueError("custom gate: matrix shape does not match targets")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
            return
        nc, nt, npar = _ARITY[self.kind]
        if (len(self.controls), len(self.targets), len(self.params)) != (nc, nt, npar):
            raise ValueError(
                f"{self.kind.value}: expected {nc} control(s), {nt} target(s), {npar} param(s)"
            )
        if self.kind is GateKind.CONTROLLED_U:
            m = np.array(self.matrix, dtype=complex)
            if m.shape != (2, 2) or not is_unitary(m):
                raise NotUnitaryError("controlled_u needs a 2x2 unitary")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise ValueError(f"{self.kind.value}: takes no matrix")
        if self.kind is GateKind.N and not 0.0 <= self.params[0] <= 1.0:
            raise DomainError(f"N(d) needs 0 <= d <= 1, got {self.params[0]}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + self.targets

    def shifted(self, offset: int) -> GateSpec:
        """The same gate on qubit indices moved by ``offset``."""
        return GateSpec(
            self.kind,
            tuple(q + offset for q in self.targets),
            tuple(q + offset for q in self.controls),
            self.params,
            self.matrix,
        )

    def __repr__(self):
        parts = [self.kind.value]
        if self.params:
            parts.append("(" + ", ".join(f"{p:.6g}" for p in self.params) + ")")
        if self.controls:
            parts.append(f" c={list(self.controls)}")
        parts.append(f" t={list(self.targets)}")
        return "GateSpec<" + "".join(parts) + ">"


# --- constructors ------------------------------------------------------------


def h(q):
    return GateSpec(GateKind.H, (q,))


def s(q):
    return GateSpec(GateKind.S, (q,))


def x(q):
    return GateSpec(GateKind.X, (q,))


def y(q):
    return GateSpec(GateKind.Y, (q,))


def z(q):
    return GateSpec(GateKind.Z, (q,))


def ry(angle, q):
    return GateSpec(GateKind.RY, (q,), params=(angle,))


def rz(angle, q):
    return GateSpec(GateKind.RZ, (q,), params=(angle,))


def cnot(control, target):
    return GateSpec(GateKind.CNOT, (target,), (control,))


def crz(angle, control, target):
    return GateSpec(GateKind.CRZ, (target,), (control,), (angle,))


def controlled_u(u, control, target):
    return GateSpec(GateKind.CONTROLLED_U, (target,), (control,), matrix=np.asarray(u))


def nonunitary(d, q):
    return GateSpec(GateKind.N, (q,), params=(d,))


def custom(m, *targets):
    return GateSpec(GateKind.CUSTOM, targets, matrix=np.asarray(m))


def rz_su2(angle, q):
    return GateSpec(GateKind.RZ_SU2, (q,), params=(angle,))


def crz_su2(angle, control, target):
    return GateSpec(GateKind.CRZ_SU2, (target,), (control,), (angle,))


def cu(theta, phi, lam, gamma, control, target):
    return GateSpec(GateKind.CU, (target,), (control,), (theta, phi, lam, gamma))


def gphase(angle):
    return GateSpec(GateKind.GPHASE, (), params=(angle,))


def measure(q):
    return GateSpec(GateKind.MEASURE, (q,))


# --- matrices ----------------------------------------------------------------


def rz_matrix(xi: float) -> np.ndarray:
    """``e^{i xi/2} exp(-i xi Z/2)``, i.e. ``diag(1, e^{i xi})``."""
    return np.diag([1.0, cmath.exp(1j * xi)])


def n_matrix(d: float) -> np.ndarray:
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"N(d) needs 0 <= d <= 1, got {d}")
    return np.diag([1.0, d]).astype(complex)


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """OpenQASM 3 ``U(theta, phi, lambda)``."""
    c, sn = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * sn],
            [cmath.exp(1j * phi) * sn, cmath.exp(1j * (phi + lam)) * c],
        ]
    )


def _controlled(u: np.ndarray) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


def matrix_of(g: GateSpec) -> Operator:
    """Dense matrix of ``g`` on ``g.controls + g.targets``."""
    k = g.kind
    if k in _FIXED:
        return Operator(_FIXED[k], Unitarity.UNITARY)
    if k is GateKind.RY:
        return Operator(_ry(g.params[0]), Unitarity.UNITARY)
    if k is GateKind.RZ:
        return Operator(rz_matrix(g.params[0]), Unitarity.UNITARY)
    if k is GateKind.RZ_SU2:
        return Operator(_rz_su2(g.params[0]), Unitarity.UNITARY)
    if k is GateKind.CNOT:
        return Operator(_controlled(PAULI_X), Unitarity.UNITARY)
    if k is GateKind.CRZ:
        return Operator(_controlled(rz_matrix(g.params[0])), Unitarity.UNITARY)
    if k is GateKind.CRZ_SU2:
        return Operator(_controlled(_rz_su2(g.params[0])), Unitarity.UNITARY)
    if k is GateKind.CONTROLLED_U:
        return Operator(_controlled(g.matrix), Unitarity.UNITARY)
    if k is GateKind.CU:
        theta, phi, lam, gamma = g.params
        u = cmath.exp(1j * gamma) * u3_matrix(theta, phi, lam)
        return Operator(_controlled(u), Unitarity.UNITARY)
    if k is GateKind.N:
        d = g.params[0]
        return Operator(n_matrix(d), Unitarity.UNITARY if d == 1.0 else Unitarity.NONUNITARY)
    if k is GateKind.GPHASE:
        return Operator([[cmath.exp(1j * g.params[0])]], Unitarity.UNITARY)
    if k is GateKind.CUSTOM:
        return Operator.classify(g.matrix)
    raise ValueError(f"{k.value} has no matrix")


# --- the nonunitary gate N(d) and its ancilla realization -----------------------


def _check_theta(theta: float) -> None:
    if not (0.0 <= theta <= math.pi / 2 + 1e-12):
        raise DomainError(f"theta must lie in [0, pi/2], got {theta}")


def d_plus(theta: float) -> float:
    return math.sqrt(4 + 2 * SQRT3 * math.cos(theta))


def d_minus(theta: float) -> float:
    return math.sqrt(4 - 2 * SQRT3 * math.cos(theta))


def d_theta(theta: float) -> float:
    """Ratio of the two singular values of every correction matrix.

    Equal to ``d_minus / d_plus``; evaluated through the simplified form
    ``sqrt(4 - 3 cos^2) / (2 + sqrt3 cos)``.
    """
    _check_theta(theta)
    c = math.cos(theta)
    return math.sqrt(4 - 3 * c * c) / (2 + SQRT3 * c)


def u_of_d(d: float) -> Operator:
    """Real symmetric involution whose first column is ``(d, sqrt(1-d^2))``."""
    if not 0.0 <= d <= 1.0:
        raise DomainError(f"U(d) needs 0 <= d <= 1, got {d}")
    t = math.sqrt(1 - d * d)
    return Operator([[d, t], [t, -d]], Unitarity.UNITARY)


@dataclass(frozen=True)
class NonunitaryRealization:
    """``post . N(d) . pre`` on a system qubit, realized with one ancilla.

    The ancilla starts in |0>; ``post_projection`` keeps its |0> component.
    """

    d: float
    pre_rotation: GateSpec
    controlled_step: GateSpec
    post_projection: GateSpec
    post_rotation: GateSpec

    @property
    def gates(self) -> list[GateSpec]:
        return [self.pre_rotation, self.controlled_step, self.post_projection, self.post_rotation]

    @property
    def system(self) -> int:
        return self.pre_rotation.targets[0]

    @property
    def ancilla(self) -> int:
        return self.post_projection.targets[0]

    def composite(self) -> np.ndarray:
        """4x4 action on (system, ancilla), system as the more significant qubit."""
        pair = [self.system, self.ancilla]
        local = {q: i for i, q in enumerate(pair)}
        out = np.eye(4, dtype=complex)
        for g in self.gates:
            out = embed(matrix_of(g), [local[q] for q in g.qubits], 2) @ out
        return out

    def kept_block(self) -> np.ndarray:
        """2x2 map on the system: ancilla prepared in |0> and post-selected on |0>."""
        return self.composite()[0::2, 0::2]

    def expected_block(self) -> np.ndarray:
        return (
            np.asarray(matrix_of(self.post_rotation))
            @ n_matrix(self.d)
            @ np.asarray(matrix_of(self.pre_rotation))
        )


def realize_nonunitary(
    svd: Svd2x2, theta: float, system: int = 0, ancilla: int = 1
) -> NonunitaryRealization:
    """Ancilla circuit for ``svd.left . N(d_theta) . svd.right_dagger``.

    For the correction matrices this is ``A_i`` divided by its largest
    singular value.
    """
    d = d_theta(theta)
    if svd.singulars[0] > 0:
        ratio = svd.singulars[1] / svd.singulars[0]
        if abs(ratio - d) > 1e3 * TOL.equality:
            raise ValueError(f"SVD singular ratio {ratio} does not match d_theta {d}")
    return NonunitaryRealization(
        d=d,
        pre_rotation=custom(svd.right_dagger.data, system),
        controlled_step=controlled_u(u_of_d(d).data, system, ancilla),
        post_projection=nonunitary(0.0, ancilla),
        post_rotation=custom(svd.left.data, system),
    )


def n_success_probability(d: float, a: complex, b: complex) -> float:
    """Keep probability of ``N(d)`` on the normalized state ``a|0> + b|1>``."""
    return abs(a) ** 2 + d * d * abs(b) ** 2

