"""Statevector execution for registers of up to four qubits.

Qubit 0 is the most significant bit of the amplitude index. In the
teleportation register qubits 0, 1, 2 are the input, the sender's half of the
singlet and the receiver's qubit; qubit 3 is the receiver's ancilla.

Randomness: every run draws from its own PCG64 stream seeded with
``SeedSequence(seed, spawn_key=(shot,))``, so shot ``k`` of a seed can be
reproduced on its own and shot ranges can be simulated independently and
merged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gates as g
from .ejm import LABELS, ejm_measurement_circuit
from .gates import GateKind, GateSpec
from .qmath import embed
from .teleport import InputState, correction_plan

MAX_QUBITS = 4
N_PROTOCOL_QUBITS = 4
RECEIVER, ANCILLA = 2, 3


def run_rng(seed: int, shot: int = 0) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(shot,))))


@dataclass(frozen=True, eq=False)
class Register:
    n_qubits: int
    state: np.ndarray
    keep_probability: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"register size must be 1..{MAX_QUBITS}, got {self.n_qubits}")
        state = np.array(self.state, dtype=complex)
        if state.shape != (2**self.n_qubits,):
            raise ValueError(f"state of shape {state.shape} does not fit {self.n_qubits} qubits")
        object.__setattr__(self, "state", state)

    @classmethod
    def zeros(cls, n_qubits: int) -> Register:
        state = np.zeros(2**n_qubits, dtype=complex)
        state[0] = 1
        return cls(n_qubits, state)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.state, self.state).real)

    def normalized(self) -> Register:
        """Rescale to unit norm, folding the lost weight into ``keep_probability``."""
        p = self.norm_sq
        if p == 0:
            raise ValueError("cannot normalize a zero state")
        return Register(self.n_qubits, self.state / math.sqrt(p), self.keep_probability * p)

    def reduced(self, qubit: int) -> np.ndarray:
        """Single-qubit reduced density matrix, normalized to unit trace."""
        t = self.state.reshape(2**qubit, 2, -1).transpose(1, 0, 2).reshape(2, -1)
        rho = t @ t.conj().T
        return rho / np.trace(rho).real


def _check_indices(reg: Register, gate: GateSpec) -> None:
    bad = [q for q in gate.qubits if q >= reg.n_qubits]
    if bad:
        raise IndexError(f"{gate!r} addresses qubit(s) {bad} of a {reg.n_qubits}-qubit register")


def gate_matrix(gate: GateSpec, n_qubits: int) -> np.ndarray:
    """Full-register matrix of ``gate``; controlled gates expanded densely."""
    return embed(g.matrix_of(gate), gate.qubits, n_qubits)


def apply(reg: Register, gate: GateSpec) -> Register:
    """Multiply the state by the gate; nonunitary gates leave the norm reduced."""
    if gate.kind is GateKind.MEASURE:
        raise ValueError("use measure() for readout")
    _check_indices(reg, gate)
    return Register(reg.n_qubits, gate_matrix(gate, reg.n_qubits) @ reg.state, reg.keep_probability)


def _marginal(reg: Register, qubits) -> np.ndarray:
    probs = np.abs(reg.state.reshape([2] * reg.n_qubits)) ** 2
    rest = tuple(q for q in range(reg.n_qubits) if q not in qubits)
    probs = probs.sum(axis=rest)
    # summed array has the kept axes in ascending order; reorder to `qubits`
    order = np.argsort(np.argsort(qubits))
    return np.transpose(probs, order).reshape(-1) if len(qubits) > 1 else probs.reshape(-1)


def project(reg: Register, qubits, bits) -> Register:
    """Zero every amplitude inconsistent with ``qubits`` reading ``bits`` (no renormalization)."""
    mask = np.ones([2] * reg.n_qubits, dtype=bool)
    for q, b in zip(qubits, bits):
        idx = [slice(None)] * reg.n_qubits
        idx[q] = 1 - b
        mask[tuple(idx)] = False
    return Register(reg.n_qubits, reg.state * mask.reshape(-1), reg.keep_probability)


def _sample_index(probs: np.ndarray, rng: np.random.Generator) -> int:
    total = probs.sum()
    cum = np.cumsum(probs)
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    nonzero = np.flatnonzero(probs > 0)
    return min(idx, int(nonzero[-1]))


def measure(reg: Register, qubits, rng: np.random.Generator):
    """Sample a computational-basis readout of ``qubits``.

    Returns ``(bits, collapsed_register, probability)``; the probability is
    the exact Born weight of the sampled outcome.
    """
    qubits = list(qubits)
    if any(not 0 <= q < reg.n_qubits for q in qubits):
        raise IndexError(f"qubits {qubits} out of range for {reg.n_qubits} qubits")
    probs = _marginal(reg, qubits)
    probs = probs / probs.sum()
    k = _sample_index(probs, rng)
    bits = tuple(int(b) for b in format(k, f"0{len(qubits)}b"))
    collapsed = project(reg, qubits, bits)
    collapsed = Register(reg.n_qubits, collapsed.state / math.sqrt(collapsed.norm_sq), reg.keep_probability)
    return bits, collapsed, float(probs[k])


# --- circuits ------------------------------------------------------------------


@dataclass(frozen=True)
class _Step:
    kind: str  # "matrix" | "measure" | "kraus"
    matrix: np.ndarray | None = None  # for "measure": mask of amplitudes reading 1
    fail: np.ndarray | None = None
    qubit: int = -1


def compile_circuit(gates, n_qubits: int, fuse: bool = True) -> tuple[_Step, ...]:
    """Turn a gate list into execution steps.

    With ``fuse`` consecutive unitary gates are multiplied into one matrix;
    readouts and nonunitary ``N(d)`` gates stay separate steps since they
    branch when sampled.
    """
    steps: list[_Step] = []
    pending: np.ndarray | None = None

    def flush():
        nonlocal pending
        if pending is not None:
            steps.append(_Step("matrix", pending))
            pending = None

    for gate in gates:
        if any(q >= n_qubits for q in gate.qubits):
            raise IndexError(f"{gate!r} addresses a qubit beyond {n_qubits}")
        if gate.kind is GateKind.MEASURE:
            flush()
            q = gate.targets[0]
            ones = ((np.arange(2**n_qubits) >> (n_qubits - 1 - q)) & 1).astype(bool)
            steps.append(_Step("measure", matrix=ones, qubit=q))
        elif gate.kind is GateKind.N and gate.params[0] < 1.0:
            flush()
            d = gate.params[0]
            keep = embed(g.n_matrix(d), gate.targets, n_qubits)
            fail = embed(np.diag([0.0, math.sqrt(1 - d * d)]), gate.targets, n_qubits)
            steps.append(_Step("kraus", keep, fail, gate.targets[0]))
        else:
            m = gate_matrix(gate, n_qubits)
            if not fuse:
                steps.append(_Step("matrix", m))
            else:
                pending = m if pending is None else m @ pending
    flush()
    return tuple(steps)


@dataclass
class ExecutionResult:
    register: Register
    bits: list[int] = field(default_factory=list)
    failed: bool = False


def _execute_steps(reg: Register, steps, rng: np.random.Generator | None) -> ExecutionResult:
    state = reg.state
    keep = reg.keep_probability
    bits: list[int] = []
    n = reg.n_qubits
    for step in steps:
        if step.kind == "matrix":
            state = step.matrix @ state
        elif step.kind == "measure":
            if rng is None:
                raise ValueError("circuit contains a readout; pass an rng to sample it")
            w = np.abs(state) ** 2
            p1 = w[step.matrix].sum()
            p0 = w.sum() - p1
            # zero-weight outcomes are never chosen
            b = 1 if p0 <= 0 or (p1 > 0 and rng.random() * (p0 + p1) >= p0) else 0
            bits.append(b)
            kept = step.matrix if b else ~step.matrix
            state = np.where(kept, state, 0) / math.sqrt(p1 if b else p0)
        else:
            kept = step.matrix @ state
            if rng is None:
                state = kept
                continue
            total = np.vdot(state, state).real
            p_keep = np.vdot(kept, kept).real / total
            if rng.random() < p_keep:
                state = kept / math.sqrt(p_keep * total)
                keep *= p_keep
            else:
                lost = step.fail @ state
                state = lost / math.sqrt(np.vdot(lost, lost).real)
                return ExecutionResult(Register(n, state, keep), bits, failed=True)
    return ExecutionResult(Register(n, state, keep), bits)


def execute(reg: Register, gates, rng: np.random.Generator | None = None, fuse: bool = False) -> ExecutionResult:
    """Run a gate list.

    Without ``rng`` the run is exact: ``N(d)`` gates are applied as
    matrices and the state is left unnormalized. With ``rng`` readouts are
    sampled and each ``N(d)`` is a keep/fail event; a fail stops the run.
    """
    return _execute_steps(reg, compile_circuit(gates, reg.n_qubits, fuse=fuse), rng)


def circuit_matrix(gates, n_qubits: int) -> np.ndarray:
    """Product of all gate matrices (nonunitary ones included)."""
    out = np.eye(2**n_qubits, dtype=complex)
    for gate in gates:
        if gate.kind is GateKind.MEASURE:
            raise ValueError("circuit_matrix is undefined for circuits with readout")
        out = gate_matrix(gate, n_qubits) @ out
    return out


# --- the teleportation protocol ------------------------------------------------------


def singlet_preparation(first: int = 0, second: int = 1) -> list[GateSpec]:
    """H then CNOT; turns |1>|1> into the singlet."""
    return [g.h(first), g.cnot(first, second)]


def input_preparation(zeta: float, xi: float, qubit: int = 0) -> list[GateSpec]:
    return [g.ry(zeta, qubit), g.rz(xi, qubit)]


def protocol_preparation(zeta: float, xi: float) -> list[GateSpec]:
    """From |0000>: flip qubits 1 and 2 to |1>, prepare the input, share the singlet."""
    return [g.x(1), g.x(2)] + input_preparation(zeta, xi, 0) + singlet_preparation(1, 2)


@dataclass(frozen=True)
class ProtocolCircuits:
    zeta: float
    xi: float
    theta: float
    prep: tuple[GateSpec, ...]
    ejm: tuple[GateSpec, ...]
    corrections: dict[str, tuple[GateSpec, ...]]


def protocol_circuits(state: InputState, theta: float) -> ProtocolCircuits:
    zeta, xi = state.angles()
    return ProtocolCircuits(
        zeta=zeta,
        xi=xi,
        theta=theta,
        prep=tuple(protocol_preparation(zeta, xi)),
        ejm=tuple(ejm_measurement_circuit(theta, 0, 1)),
        corrections={
            k: tuple(correction_plan(theta, k).circuit(system=RECEIVER, ancilla=ANCILLA)) for k in LABELS
        },
    )


@dataclass(frozen=True)
class RunRecord:
    seed: int
    shot: int
    theta: float
    zeta: float
    xi: float
    ejm_outcome: str
    ancilla_outcome: int
    success: bool
    output_fidelity: float


@dataclass(frozen=True)
class _Compiled:
    circuits: ProtocolCircuits
    start: np.ndarray
    ejm: tuple[_Step, ...]
    corrections: dict[str, tuple[_Step, ...]]
    target: np.ndarray


def _compile(circuits: ProtocolCircuits, fuse: bool) -> _Compiled:
    n = N_PROTOCOL_QUBITS
    start = execute(Register.zeros(n), circuits.prep, fuse=fuse).register.state
    return _Compiled(
        circuits,
        start,
        compile_circuit(circuits.ejm, n, fuse),
        {k: compile_circuit(c, n, fuse) for k, c in circuits.corrections.items()},
        InputState.from_angles(circuits.zeta, circuits.xi).vector,
    )


def _run(compiled: _Compiled, seed: int, shot: int) -> RunRecord:
    rng = run_rng(seed, shot)
    n = N_PROTOCOL_QUBITS
    res = _execute_steps(Register(n, compiled.start), compiled.ejm, rng)
    label = "".join(str(b) for b in res.bits)
    res = _execute_steps(res.register, compiled.corrections[label], rng)
    rho = res.register.reduced(RECEIVER)
    t = compiled.target
    fid = float(np.vdot(t, rho @ t).real)
    c = compiled.circuits
    return RunRecord(
        seed=seed,
        shot=shot,
        theta=c.theta,
        zeta=c.zeta,
        xi=c.xi,
        ejm_outcome=label,
        ancilla_outcome=int(res.failed),
        success=not res.failed,
        output_fidelity=min(fid, 1.0),
    )


def run_teleportation(
    state: InputState,
    theta: float,
    seed: int,
    shot: int = 0,
    circuits: ProtocolCircuits | None = None,
) -> RunRecord:
    """One seeded end-to-end run, gate by gate.

    Preparation, EJM circuit and readout, then the correction circuit picked
    by the readout: ``V^dag``, controlled ``U(d_theta)`` onto the ancilla,
    ancilla post-selection, ``U``.
    """
    if circuits is None:
        circuits = protocol_circuits(state, theta)
    return _run(_compile(circuits, fuse=False), seed, shot)


def circuit_keep_probability(state: InputState, theta: float, label: str, circuits: ProtocolCircuits | None = None) -> float:
    """Exact keep probability of the correction circuit given EJM outcome ``label``."""
    if circuits is None:
        circuits = protocol_circuits(state, theta)
    n = N_PROTOCOL_QUBITS
    reg = execute(Register.zeros(n), circuits.prep).register
    unitary_part = [gt for gt in circuits.ejm if gt.kind is not GateKind.MEASURE]
    reg = execute(reg, unitary_part).register
    reg = project(reg, [0, 1], [int(label[0]), int(label[1])])
    reg = Register(n, reg.state / math.sqrt(reg.norm_sq))
    out = execute(reg, circuits.corrections[label]).register
    return out.norm_sq


# --- Monte Carlo --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloSummary:
    seed: int
    shots: int
    branch_counts: dict[str, int]
    success_counts: dict[str, int]
    min_success_fidelity: float

    @property
    def successes(self) -> int:
        return sum(self.success_counts.values())

    @property
    def success_rate(self) -> float:
        return self.successes / self.shots

    @property
    def success_stderr(self) -> float:
        return binomial_stderr(self.success_rate, self.shots)

    def branch_frequency(self, label: str) -> float:
        return self.branch_counts[label] / self.shots

    def branch_stderr(self, label: str) -> float:
        return binomial_stderr(self.branch_frequency(label), self.shots)

    def conditional_success(self, label: str) -> tuple[float, float]:
        """Success frequency given outcome ``label`` and its standard error (nan if unseen)."""
        n = self.branch_counts[label]
        if n == 0:
            return math.nan, math.nan
        p = self.success_counts[label] / n
        return p, binomial_stderr(p, n)

    def merge(self, other: MonteCarloSummary) -> MonteCarloSummary:
        if other.seed != self.seed:
            raise ValueError("can only merge summaries drawn from the same seed")
        return MonteCarloSummary(
            self.seed,
            self.shots + other.shots,
            {k: self.branch_counts[k] + other.branch_counts[k] for k in LABELS},
            {k: self.success_counts[k] + other.success_counts[k] for k in LABELS},
            min(self.min_success_fidelity, other.min_success_fidelity),
        )

    __add__ = merge


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n) if n else math.nan


def monte_carlo(
    state: InputState,
    theta: float,
    shots: int,
    seed: int,
    first_shot: int = 0,
    circuits: ProtocolCircuits | None = None,
) -> MonteCarloSummary:
    """Shots ``first_shot .. first_shot + shots - 1`` of the seeded protocol.

    Each shot is the same run :func:`run_teleportation` would produce for
    that ``(seed, shot)``; the circuits are compiled once with fused stages.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if circuits is None:
        circuits = protocol_circuits(state, theta)
    compiled = _compile(circuits, fuse=True)
    branch_counts = dict.fromkeys(LABELS, 0)
    success_counts = dict.fromkeys(LABELS, 0)
    min_fid = 1.0
    for shot in range(first_shot, first_shot + shots):
        rec = _run(compiled, seed, shot)
        branch_counts[rec.ejm_outcome] += 1
        if rec.success:
            success_counts[rec.ejm_outcome] += 1
            min_fid = min(min_fid, rec.output_fidelity)
    return MonteCarloSummary(seed, shots, branch_counts, success_counts, min_fid)
