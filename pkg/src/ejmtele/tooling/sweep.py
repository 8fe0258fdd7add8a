"""Success-probability sweeps over (theta, zeta) written as CSV.

Rows are ordered by theta index, zeta index, then branch label. Inputs are
``cos(zeta/2)|0> + e^{i xi} sin(zeta/2)|1>``. With ``shots`` set, every
(theta, zeta) point also gets a seeded Monte Carlo estimate of the
conditional success frequency per branch; the point's seed is derived from
``(seed, theta index, zeta index)`` so points can run in any order.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..ejm import LABELS, check_label
from ..sim import monte_carlo
from ..teleport import InputState, success_probability

COLUMNS = ("theta", "zeta", "branch", "p_analytic", "p_empirical", "stderr")


@dataclass(frozen=True)
class SweepConfig:
    theta_grid: tuple[float, ...]
    zeta_grid: tuple[float, ...]
    xi: float = 0.0
    branch: str | None = None
    shots: int | None = None
    seed: int = 0
    output_path: str | Path | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        object.__setattr__(self, "zeta_grid", tuple(float(z) for z in self.zeta_grid))
        if not self.theta_grid or not self.zeta_grid:
            raise ValueError("theta and zeta grids must be nonempty")
        if any(not 0.0 <= t <= math.pi / 2 for t in self.theta_grid):
            raise ValueError("theta values must lie in [0, pi/2]")
        if any(not 0.0 <= z <= 2 * math.pi for z in self.zeta_grid):
            raise ValueError("zeta values must lie in [0, 2 pi]")
        if self.branch is not None:
            check_label(self.branch)
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def branches(self) -> tuple[str, ...]:
        return (self.branch,) if self.branch else LABELS


@dataclass(frozen=True)
class SweepRow:
    theta: float
    zeta: float
    branch: str
    p_analytic: float
    p_empirical: float | None = None
    stderr: float | None = None


@dataclass(frozen=True)
class Extremes:
    theta: float
    branch: str
    p_min: float
    zeta_at_min: float
    p_max: float
    zeta_at_max: float


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow] = field(default_factory=list)

    def extremes(self) -> list[Extremes]:
        """Grid min and max over zeta for each theta and branch."""
        out = []
        for theta in self.config.theta_grid:
            for k in self.config.branches:
                cells = [r for r in self.rows if r.theta == theta and r.branch == k]
                lo = min(cells, key=lambda r: r.p_analytic)
                hi = max(cells, key=lambda r: r.p_analytic)
                out.append(Extremes(theta, k, lo.p_analytic, lo.zeta, hi.p_analytic, hi.zeta))
        return out


def uniform_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    """``n`` points from ``lo`` to ``hi`` inclusive (a single point is ``lo``)."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    return tuple(np.linspace(lo, hi, n).tolist()) if n > 1 else (float(lo),)


def point_seed(seed: int, theta_index: int, zeta_index: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(theta_index, zeta_index))
    return int(ss.generate_state(1, np.uint64)[0])


def _theta_rows(config: SweepConfig, ti: int) -> list[SweepRow]:
    theta = config.theta_grid[ti]
    rows = []
    for zi, zeta in enumerate(config.zeta_grid):
        state = InputState.from_angles(zeta, config.xi)
        summary = None
        if config.shots:
            summary = monte_carlo(state, theta, config.shots, point_seed(config.seed, ti, zi))
        for k in config.branches:
            emp = err = None
            if summary is not None:
                emp, err = summary.conditional_success(k)
                if math.isnan(emp):
                    emp = err = None
            rows.append(SweepRow(theta, zeta, k, success_probability(state, theta, k), emp, err))
    return rows


def sweep(config: SweepConfig) -> SweepResult:
    """Evaluate the grid; writes the CSV when ``config.output_path`` is set."""
    indices = range(len(config.theta_grid))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(lambda i: _theta_rows(config, i), indices))
    else:
        chunks = [_theta_rows(config, i) for i in indices]
    result = SweepResult(config, [r for chunk in chunks for r in chunk])
    if config.output_path is not None:
        write_csv(result, config.output_path)
    return result


def _num(x: float | None) -> str:
    # 17 significant digits: exact round trip through float()
    return "" if x is None else f"{x:.16e}"


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in result.rows:
        w.writerow([_num(r.theta), _num(r.zeta), r.branch, _num(r.p_analytic), _num(r.p_empirical), _num(r.stderr)])
    return buf.getvalue()


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(result))


def extremes_text(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("theta", "branch", "p_min", "zeta_at_min", "p_max", "zeta_at_max"))
    for e in result.extremes():
        w.writerow([_num(e.theta), e.branch, _num(e.p_min), _num(e.zeta_at_min), _num(e.p_max), _num(e.zeta_at_max)])
    return buf.getvalue()
