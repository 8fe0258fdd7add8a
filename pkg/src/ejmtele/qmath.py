"""Dense complex linear algebra for registers of a few qubits.

Vectors are plain 1-D complex numpy arrays. Matrices that need to carry a
unitarity verdict are wrapped in :class:`Operator`, which behaves like an
array for numpy purposes (``np.asarray(op)`` works).

The 2x2 SVD and the ZYZ decomposition are closed-form; nothing here calls
``numpy.linalg.svd``.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotUnitaryError


@dataclass(frozen=True)
class Tolerances:
    equality: float = 1e-10
    unitarity: float = 1e-12
    degenerate: float = 1e-12


TOL = Tolerances()


class Unitarity(enum.Enum):
    UNITARY = "unitary"
    NONUNITARY = "nonunitary"
    UNCHECKED = "unchecked"


def unitarity_defect(m) -> float:
    """Max-entry norm of M^dag M - I."""
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))))


def is_unitary(m, tol: float | None = None) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return unitarity_defect(m) <= (TOL.unitarity if tol is None else tol)


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex matrix with a unitarity flag.

    Passing ``unitarity=Unitarity.UNITARY`` is validated against
    ``TOL.unitarity``; use :meth:`classify` to have the flag computed.
    """

    data: np.ndarray
    unitarity: Unitarity = Unitarity.UNCHECKED

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2:
            raise DimensionError(f"operator must be 2-D, got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.unitarity is Unitarity.UNITARY and not is_unitary(data):
            raise NotUnitaryError(
                f"flagged unitary but ||M^dag M - I|| = {unitarity_defect(data):.3e}"
            )

    @classmethod
    def classify(cls, data) -> Operator:
        flag = Unitarity.UNITARY if is_unitary(data) else Unitarity.NONUNITARY
        return cls(data, flag)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_unitary(self) -> bool:
        return self.unitarity is Unitarity.UNITARY

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    def __matmul__(self, other):
        return self.data @ np.asarray(other)

    def __rmatmul__(self, other):
        return np.asarray(other) @ self.data

    def __repr__(self):
        return f"Operator({self.data!r}, {self.unitarity.value})"


def _flag_of(m) -> Unitarity:
    return m.unitarity if isinstance(m, Operator) else Unitarity.UNCHECKED


def tensor(a, b) -> Operator:
    """Kronecker product ``a (x) b`` with ``a`` as the more significant factor."""
    fa, fb = _flag_of(a), _flag_of(b)
    if fa is Unitarity.UNITARY and fb is Unitarity.UNITARY:
        flag = Unitarity.UNITARY
    elif Unitarity.UNITARY in (fa, fb) and Unitarity.NONUNITARY in (fa, fb):
        flag = Unitarity.NONUNITARY
    else:
        # nonunitary (x) nonunitary can still be unitary, e.g. 2I (x) I/2
        flag = Unitarity.UNCHECKED
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    return Operator(np.kron(a, b), flag)


def dagger(m) -> Operator | np.ndarray:
    if isinstance(m, Operator):
        return Operator(m.data.conj().T, m.unitarity)
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"dagger needs a matrix, got shape {m.shape}")
    return m.conj().T


def norm(v) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=complex).ravel()))


def matvec(m, v) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if m.ndim != 2 or v.ndim != 1 or m.shape[1] != v.shape[0]:
        raise DimensionError(f"cannot apply {m.shape} matrix to vector of shape {v.shape}")
    return m @ v


def fidelity(a, b) -> float:
    """Phase-insensitive overlap |<a|b>|^2 / (||a||^2 ||b||^2)."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"fidelity of vectors with shapes {a.shape} and {b.shape}")
    na = np.vdot(a, a).real
    nb = np.vdot(b, b).real
    if na == 0 or nb == 0:
        raise ValueError("fidelity undefined for a zero vector")
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))


def max_abs_diff(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def embed(op, qubits, n_qubits: int) -> np.ndarray:
    """Lift an operator on ``qubits`` (in the operator's own factor order)
    to the full ``n_qubits`` register, qubit 0 most significant."""
    op = np.asarray(op, dtype=complex)
    qubits = list(qubits)
    k = len(qubits)
    if op.shape != (2**k, 2**k):
        raise DimensionError(f"operator of shape {op.shape} does not act on {k} qubits")
    if len(set(qubits)) != k or any(not 0 <= q < n_qubits for q in qubits):
        raise DimensionError(f"bad qubit indices {qubits} for {n_qubits} qubits")
    rest = [q for q in range(n_qubits) if q not in qubits]
    full = np.kron(op, np.eye(2 ** len(rest))).reshape([2] * (2 * n_qubits))
    # axes of `full` are ordered (qubits + rest) for outputs then inputs
    inv = np.argsort(qubits + rest)
    perm = list(inv) + [n_qubits + i for i in inv]
    return full.transpose(perm).reshape(2**n_qubits, 2**n_qubits)


# --- partial trace and Bloch vectors -------------------------------------------

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def density(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def partial_trace(rho, keep, n_qubits: int) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (qubit 0 most significant)."""
    keep = sorted(keep)
    rho = np.asarray(rho, dtype=complex).reshape([2] * (2 * n_qubits))
    traced = [q for q in range(n_qubits) if q not in keep]
    # contract traced qubits one at a time, highest index first so axes stay valid
    n = n_qubits
    for q in sorted(traced, reverse=True):
        rho = np.trace(rho, axis1=q, axis2=q + n)
        n -= 1
    dim = 2 ** len(keep)
    return rho.reshape(dim, dim)


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([np.trace(rho @ p).real for p in (PAULI_X, PAULI_Y, PAULI_Z)])


# --- 2x2 SVD ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Svd2x2:
    """``source = left @ diag(singulars) @ right_dagger``.

    ``degenerate`` is set when the two singular values coincide within
    ``TOL.degenerate``; the factors are then one canonical choice among many.
    """

    left: Operator
    singulars: tuple[float, float]
    right_dagger: Operator
    degenerate: bool = False

    def reconstruct(self) -> np.ndarray:
        return self.left.data @ np.diag(self.singulars) @ self.right_dagger.data


def _phase_fix_columns(u: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        scale = np.max(np.abs(col))
        for x in col:
            if abs(x) > 1e-14 * max(scale, 1.0):
                u[:, k] = col * (abs(x) / x)
                break
    return u


def _complement(row: np.ndarray) -> np.ndarray:
    # unit vector orthogonal to a unit row vector (a, b): (-b*, a*)
    return np.array([-row[1].conjugate(), row[0].conjugate()])


def _top_eigvec(h: np.ndarray, lam: float) -> np.ndarray:
    """Unit eigenvector of a 2x2 Hermitian ``h`` for eigenvalue ``lam``."""
    a, b, d = h[0, 0].real, h[0, 1], h[1, 1].real
    c1 = np.array([b, lam - a])
    c2 = np.array([lam - d, b.conjugate()])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    nv = np.linalg.norm(v)
    if nv < 1e-300:
        return np.array([1.0, 0.0], dtype=complex)
    return v / nv


def svd_2x2(m) -> Svd2x2:
    """Closed-form SVD of a 2x2 complex matrix.

    Singular values are descending. Each column of ``left`` has its first
    nonzero entry real positive; ``right_dagger`` is then derived from
    ``left`` and the source, its second row completed orthogonally so it
    stays unitary when the smaller singular value vanishes.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise DimensionError(f"svd_2x2 needs a 2x2 matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("svd_2x2 needs finite entries")

    # eigenvalues of m m^dag = [[p, q], [q*, r]]; this discriminant has no cancellation
    p = float(abs(m[0, 0]) ** 2 + abs(m[0, 1]) ** 2)
    r = float(abs(m[1, 0]) ** 2 + abs(m[1, 1]) ** 2)
    q = m[0, 0] * m[1, 0].conjugate() + m[0, 1] * m[1, 1].conjugate()
    disc = math.hypot(p - r, 2.0 * abs(q))
    s0 = math.sqrt((p + r + disc) / 2.0)
    absdet = float(abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    s1 = min(absdet / s0, s0) if s0 > 0 else 0.0
    degenerate = abs(s0 - s1) <= TOL.degenerate

    if s0 == 0.0:
        eye = Operator(np.eye(2), Unitarity.UNITARY)
        return Svd2x2(eye, (0.0, 0.0), eye, degenerate=True)

    if degenerate:
        # m is s0 times a unitary; take that unitary (re-orthonormalized) as left
        w = m / s0
        c0 = w[:, 0] / np.linalg.norm(w[:, 0])
        c1 = w[:, 1] - np.vdot(c0, w[:, 1]) * c0
        nc1 = np.linalg.norm(c1)
        c1 = c1 / nc1 if nc1 > 1e-300 else np.array([-c0[1].conjugate(), c0[0].conjugate()])
        left = np.column_stack([c0, c1])
    else:
        u0 = _top_eigvec(m @ m.conj().T, s0 * s0)
        left = np.column_stack([u0, np.array([-u0[1].conjugate(), u0[0].conjugate()])])
    left = _phase_fix_columns(left)

    r0 = left[:, 0].conj() @ m / s0
    r0 = r0 / np.linalg.norm(r0)
    r1 = _complement(r0)
    if s1 > 0:
        target = left[:, 1].conj() @ m
        overlap = np.vdot(r1, target)
        if abs(overlap) > 0:
            r1 = r1 * (overlap / abs(overlap))
    right_dagger = np.vstack([r0, r1])

    return Svd2x2(
        Operator(left, Unitarity.UNITARY),
        (s0, s1),
        Operator(right_dagger, Unitarity.UNITARY),
        degenerate=degenerate,
    )


# --- ZYZ decomposition ------------------------------------------------------------


@dataclass(frozen=True)
class ZyzAngles:
    """``u = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)`` with the traceless
    rotations ``Rz(x) = exp(-i x Z/2)`` and ``Ry(x) = exp(-i x Y/2)``."""

    alpha: float
    beta: float
    gamma: float
    delta: float

    def matrix(self) -> np.ndarray:
        return cmath.exp(1j * self.alpha) * rz_su2(self.beta) @ ry(self.gamma) @ rz_su2(self.delta)


def rz_su2(x: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * x), 0], [0, cmath.exp(0.5j * x)]])


def ry(x: float) -> np.ndarray:
    c, s = math.cos(x / 2), math.sin(x / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _wrap(x: float) -> tuple[float, int]:
    """Map ``x`` into (-pi, pi]; also return how many 2*pi shifts that took."""
    k = math.ceil((x - math.pi) / (2 * math.pi))
    y = x - 2 * math.pi * k
    if y <= -math.pi:
        y += 2 * math.pi
        k -= 1
    return y, k


def zyz_decompose(u) -> ZyzAngles:
    """Euler angles of a single-qubit unitary.

    Ranges: gamma in [0, pi]; alpha, beta, delta in (-pi, pi]. When one of
    the rotations is redundant (gamma = 0 or pi) delta is set to 0.
    """
    if isinstance(u, Operator):
        if u.unitarity is Unitarity.NONUNITARY or not is_unitary(u.data):
            raise NotUnitaryError("zyz_decompose needs a unitary matrix")
        u = u.data
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise DimensionError(f"zyz_decompose needs a 2x2 matrix, got {u.shape}")
    if not is_unitary(u):
        raise NotUnitaryError(
            f"zyz_decompose needs a unitary matrix (defect {unitarity_defect(u):.3e})"
        )

    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    alpha = cmath.phase(det) / 2
    v = u * cmath.exp(-1j * alpha)  # now in SU(2): [[a, -b*], [b, a*]]
    a, b = v[0, 0], v[1, 0]
    gamma = 2 * math.atan2(abs(b), abs(a))
    tiny = 1e-14
    if abs(b) <= tiny:
        beta, delta = -2 * cmath.phase(a), 0.0
    elif abs(a) <= tiny:
        beta, delta = 2 * cmath.phase(b), 0.0
    else:
        beta = cmath.phase(b) - cmath.phase(a)
        delta = -cmath.phase(a) - cmath.phase(b)

    # each 2*pi shift of beta or delta flips the sign of Rz, absorbed into alpha
    beta, kb = _wrap(beta)
    delta, kd = _wrap(delta)
    if (kb + kd) % 2:
        alpha += math.pi
    alpha, _ = _wrap(alpha)
    return ZyzAngles(alpha, beta, gamma, delta)


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Unitary drawn from the ZYZ form with uniform angles."""
    alpha, beta, delta = rng.uniform(-math.pi, math.pi, size=3)
    gamma = rng.uniform(0, math.pi)
    return ZyzAngles(alpha, beta, gamma, delta).matrix()


def random_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unit vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
