"""Invariant checks run by ``ejmtele verify``.

Each check gets a :class:`Context` (theta grid and seed) and returns the
worst observed deviation together with its tolerance, so reports show how
close each invariant came to failing.
"""
from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .. import ejm, qmath, sim, teleport
from .. import gates as g
from ..ejm import LABELS, Side
from ..gates import GateKind
from ..teleport import InputState
from . import qasm


@dataclass(frozen=True)
class Context:
    theta_grid: tuple[float, ...]
    seed: int = 0

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.module}.{self.name}: worst {self.worst:.3e} vs tol {self.tolerance:.0e}{extra}"


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    tolerance: float
    fn: Callable[[Context], float | tuple[float, str]]

    def run(self, ctx: Context) -> CheckResult:
        try:
            out = self.fn(ctx)
        except Exception as exc:  # a crashing check is a failing check
            return CheckResult(self.module, self.name, False, math.inf, self.tolerance, f"{type(exc).__name__}: {exc}")
        worst, detail = out if isinstance(out, tuple) else (out, "")
        return CheckResult(self.module, self.name, bool(worst <= self.tolerance), float(worst), self.tolerance, detail)


REGISTRY: list[Check] = []


def check(module: str, tolerance: float):
    def deco(fn):
        REGISTRY.append(Check(module, fn.__name__, tolerance, fn))
        return fn

    return deco


def theta_grid(n: int) -> tuple[float, ...]:
    """``n`` uniform points on [0, pi/2] inclusive."""
    if n < 2:
        raise ValueError("theta grid needs at least 2 points")
    return tuple(np.linspace(0, math.pi / 2, n).tolist())


# --- qmath ---------------------------------------------------------------------


@check("qmath", 1e-14)
def tensor_associativity(ctx):
    rng = ctx.rng(1)
    worst = 0.0
    for _ in range(100):
        a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
        left = qmath.tensor(qmath.tensor(a, b), c).data
        right = qmath.tensor(a, qmath.tensor(b, c)).data
        worst = max(worst, qmath.max_abs_diff(left, right))
    return worst


@check("qmath", 1e-10)
def svd_factorization(ctx):
    rng = ctx.rng(2)
    worst = 0.0
    for _ in range(500):
        m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        res = qmath.svd_2x2(m)
        worst = max(
            worst,
            qmath.unitarity_defect(res.left),
            qmath.unitarity_defect(res.right_dagger),
            qmath.max_abs_diff(res.reconstruct(), m),
        )
    return worst


@check("qmath", 1e-12)
def svd_of_unitary(ctx):
    rng = ctx.rng(13)
    worst = 0.0
    for _ in range(200):
        res = qmath.svd_2x2(qmath.random_unitary(rng))
        worst = max(worst, max(abs(s - 1) for s in res.singulars))
    return worst


@check("qmath", 1e-10)
def zyz_reconstruction(ctx):
    rng = ctx.rng(3)
    worst = 0.0
    for _ in range(1000):
        u = qmath.random_unitary(rng)
        worst = max(worst, qmath.max_abs_diff(qmath.zyz_decompose(u).matrix(), u))
    return worst


# --- gates -----------------------------------------------------------------------------


@check("gates", 1e-12)
def unitary_kinds(ctx):
    rng = ctx.rng(4)
    worst = 0.0
    for gate in (g.h(0), g.s(0), g.x(0), g.y(0), g.z(0)):
        worst = max(worst, qmath.unitarity_defect(g.matrix_of(gate)))
    for _ in range(100):
        a = rng.uniform(-2 * math.pi, 2 * math.pi)
        for gate in (g.ry(a, 0), g.rz(a, 0), g.rz_su2(a, 0)):
            worst = max(worst, qmath.unitarity_defect(g.matrix_of(gate)))
    for d in np.linspace(0, 1, 21)[:-1]:
        m = g.matrix_of(g.nonunitary(d, 0)).data
        gram = m.conj().T @ m
        if not np.array_equal(gram, np.diag([1, d * d])):
            return math.inf, f"N({d}) gram is not diag(1, d^2)"
    return worst


@check("gates", 1e-12)
def ancilla_identity(ctx):
    rng = ctx.rng(5)
    worst = 0.0
    for _ in range(1000):
        a, b = qmath.random_state(rng, 2)
        d = rng.uniform(0, 1)
        cu = np.eye(4, dtype=complex)
        cu[2:, 2:] = g.u_of_d(d).data
        out = np.kron(np.eye(2), np.diag([1, 0])) @ cu @ np.kron([a, b], [1, 0])
        worst = max(
            worst,
            qmath.max_abs_diff(out[0::2], g.n_matrix(d) @ [a, b]),
            abs(np.vdot(out, out).real - g.n_success_probability(d, a, b)),
        )
    return worst


@check("gates", 1e-12)
def realization_blocks(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        for k in LABELS:
            plan = teleport.correction_plan(theta, k)
            worst = max(worst, qmath.max_abs_diff(plan.realization().kept_block(), plan.kraus_keep.data))
    return worst


# --- ejm -----------------------------------------------------------------------------


@check("ejm", 1e-12)
def basis_orthonormal_complete(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        b = ejm.build_basis(theta)
        worst = max(worst, qmath.max_abs_diff(b.gram(), np.eye(4)), qmath.max_abs_diff(b.completeness(), np.eye(4)))
    return worst


@check("ejm", 1e-10)
def tetrahedron_radius(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        b = ejm.build_basis(theta)
        r = math.sqrt(3) / 2 * math.cos(theta)
        reps = [ejm.reduced_tetrahedron(b, side) for side in Side]
        for rep in reps:
            worst = max(worst, abs(rep.common_radius - r))
            for v in rep.bloch_vectors:
                worst = max(worst, abs(np.linalg.norm(v) - rep.common_radius))
        worst = max(worst, abs(reps[0].common_radius - reps[1].common_radius))
    return worst


@check("ejm", 1e-8)
def tetrahedron_angles(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        b = ejm.build_basis(theta)
        for side in Side:
            rep = ejm.reduced_tetrahedron(b, side)
            if theta < math.pi / 2:
                worst = max(worst, max(abs(c + 1 / 3) for c in rep.pairwise_cosines))
    return worst


@check("ejm", 1e-10)
def equal_entanglement(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        b = ejm.build_basis(theta)
        cs = [ejm.concurrence(b[k]) for k in LABELS]
        worst = max(worst, max(cs) - min(cs))
    return worst


@check("ejm", 1e-10)
def circuit_identifies_basis(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        u = ejm.ejm_unitary(theta)
        b = ejm.build_basis(theta)
        for idx, k in enumerate(LABELS):
            target = np.zeros(4)
            target[idx] = 1
            worst = max(worst, 1 - qmath.fidelity(u @ b[k], target))
    return worst


@check("ejm", 1e-10)
def circuit_matches_projectors(ctx):
    rng = ctx.rng(6)
    worst = 0.0
    for _ in range(100):
        theta = rng.uniform(0, math.pi / 2)
        phi = qmath.random_state(rng, 4)
        circuit = np.abs(ejm.ejm_unitary(theta) @ phi) ** 2
        proj = ejm.build_basis(theta).probabilities(phi)
        worst = max(worst, 0.5 * float(np.sum(np.abs(circuit - proj))))
    return worst


# --- teleport ---------------------------------------------------------------------------


@check("teleport", 1e-10)
def recovery_exactness(ctx):
    rng = ctx.rng(7)
    worst = 0.0
    for _ in range(1000):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        k = LABELS[rng.integers(4)]
        out = teleport.correction_matrix(theta, k) @ teleport.branch_state(s, theta, k)
        worst = max(worst, 1 - qmath.fidelity(out, s.vector))
    return worst


@check("teleport", 1e-12)
def proportional_unitarity_boundary(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        for k in LABELS:
            a = teleport.correction_matrix(theta, k)
            gram = a.conj().T @ a
            defect = float(np.max(np.abs(gram - np.trace(gram).real / 2 * np.eye(2))))
            if theta == math.pi / 2:
                worst = max(worst, defect)
            elif defect <= 1e-12:
                return math.inf, f"A_{k} proportional to a unitary at theta={theta}"
    return worst


@check("teleport", 1e-10)
def svd_routes(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        c = teleport.correction_coefficient(theta)
        for k in LABELS:
            a = teleport.correction_matrix(theta, k)
            u, d, vd = teleport.printed_svd_factors(theta, k)
            res = qmath.svd_2x2(a)
            worst = max(
                worst,
                qmath.max_abs_diff(c * u @ d @ vd, a),
                abs(res.singulars[0] - abs(c) * teleport.d_plus(theta)),
                abs(res.singulars[1] - abs(c) * teleport.d_minus(theta)),
            )
    return worst


@check("teleport", 1e-12)
def kraus_completeness(ctx):
    worst = 0.0
    for theta in ctx.theta_grid:
        for k in LABELS:
            plan = teleport.correction_plan(theta, k)
            m0, m1 = plan.kraus_keep.data, plan.kraus_fail.data
            top = np.linalg.svd(m0, compute_uv=False)[0]
            worst = max(worst, qmath.max_abs_diff(m0.conj().T @ m0 + m1.conj().T @ m1, np.eye(2)), abs(top - 1))
    return worst


@check("teleport", 1e-10)
def branch_bookkeeping(ctx):
    rng = ctx.rng(8)
    worst = 0.0
    for _ in range(100):
        s = InputState.random(rng)
        theta = rng.uniform(0, math.pi / 2)
        outs = [teleport.branch(s, theta, k) for k in LABELS]
        for o in outs:
            worst = max(worst, abs(o.branch_probability - 1 / (8 * o.normalization**2)))
            printed = o.post_state_unnormalized
            worst = max(worst, qmath.max_abs_diff(printed, teleport.projected_branch_state(s, theta, o.label)))
        worst = max(worst, abs(sum(o.branch_probability for o in outs) - 1))
    return worst


@check("teleport", 1e-12)
def success_probability_consistency(ctx):
    rng = ctx.rng(9)
    worst = 0.0
    for theta in np.linspace(0, math.pi / 2, 20):
        totals = []
        for _ in range(100):
            s = InputState.random(rng)
            totals.append(sum(teleport.branch(s, theta, k).branch_probability * teleport.success_probability(s, theta, k) for k in LABELS))
            worst = max(worst, abs(teleport.success_probability_10_expanded(s, theta) - teleport.success_probability(s, theta, "10")))
        worst = max(worst, max(abs(t - teleport.total_success_probability(theta)) for t in totals))
        var = float(np.var(totals))
        if var > 1e-24:
            return math.inf, f"total varies over inputs at theta={theta} (variance {var:.2e})"
    return worst


# --- sim ----------------------------------------------------------------------------------


@check("sim", 1e-12)
def circuit_keep_probability(ctx):
    rng = ctx.rng(10)
    worst = 0.0
    for theta in ctx.theta_grid[:: max(1, len(ctx.theta_grid) // 10)]:
        s = InputState.random(rng)
        circuits = sim.protocol_circuits(s, theta)
        for k in LABELS:
            p = sim.circuit_keep_probability(s, theta, k, circuits)
            worst = max(worst, abs(p - teleport.success_probability(s, theta, k)))
    return worst


@check("sim", 0.0)
def seeded_determinism(ctx):
    s = InputState.from_angles(1.1, 0.4)
    a = [sim.run_teleportation(s, 0.3, ctx.seed, shot) for shot in range(30)]
    b = [sim.run_teleportation(s, 0.3, ctx.seed, shot) for shot in range(30)]
    return 0.0 if a == b else 1.0


@check("sim", 1e-10)
def conditional_perfection(ctx):
    rng = ctx.rng(11)
    worst = 0.0
    for shot in range(200):
        s = InputState.random(rng)
        theta = float(rng.uniform(0, math.pi / 2))
        rec = sim.run_teleportation(s, theta, ctx.seed, shot)
        if rec.success != (rec.ancilla_outcome == 0):
            return math.inf, "success flag disagrees with ancilla outcome"
        if rec.success:
            worst = max(worst, abs(1 - rec.output_fidelity))
    s = InputState.random(rng)
    for shot in range(50):
        rec = sim.run_teleportation(s, math.pi / 2, ctx.seed, shot)
        if not rec.success:
            return math.inf, "failure at theta = pi/2"
    return worst


@check("sim", 1e-14)
def unitary_norm_preserved(ctx):
    rng = ctx.rng(12)
    worst = 0.0
    reg = sim.Register(4, qmath.random_state(rng, 16))
    circuits = sim.protocol_circuits(InputState.random(rng), 0.4)
    for gate in circuits.prep + tuple(gt for gt in circuits.ejm if gt.kind is not GateKind.MEASURE):
        reg = sim.apply(reg, gate)
        worst = max(worst, abs(reg.norm_sq - 1))
    return worst


# --- tooling --------------------------------------------------------------------------------


@check("tooling", 1e-10)
def qasm_round_trip(ctx):
    rng = ctx.rng(14)
    worst = 0.0
    for theta in np.linspace(0, math.pi / 2, 10):
        circuits = sim.protocol_circuits(InputState.random(rng), float(theta))
        stages = {"prep": circuits.prep, **{f"correction_{k}": c for k, c in circuits.corrections.items()}}
        stages["ejm"] = tuple(gt for gt in circuits.ejm if gt.kind is not GateKind.MEASURE)
        for name, gates in stages.items():
            text = qasm.emit_qasm(gates, 4).source_text
            parsed = qasm.parse_qasm_subset(text)
            if qasm.emit_qasm(parsed).source_text != text:
                return math.inf, f"{name} at theta={theta} does not re-emit identically"
            worst = max(worst, qmath.max_abs_diff(sim.circuit_matrix(parsed, 4), sim.circuit_matrix(gates, 4)))
    return worst


def run_all(ctx: Context, modules=None) -> list[CheckResult]:
    return [c.run(ctx) for c in REGISTRY if modules is None or c.module in modules]
