"""Command-line front end.

Exit codes: 0 success, 1 verification failure or I/O error, 2 usage error.
The default seed comes from ``EJM_SEED`` when set, else 0; ``--seed`` wins.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ejm import LABELS, Side, build_basis, concurrence, reduced_tetrahedron
from .errors import DomainError
from .sim import monte_carlo, protocol_circuits, run_teleportation
from .teleport import InputState
from .tooling import qasm, sweep, verify

SEED_ENV = "EJM_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"\n{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _label(text: str) -> str:
    if text not in LABELS:
        raise argparse.ArgumentTypeError(f"branch must be one of {', '.join(LABELS)}")
    return text


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return _seed(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{SEED_ENV}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ejmtele", description="Teleportation through the elegant joint measurement.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def seed_arg(sp):
        sp.add_argument("--seed", type=_seed, default=None, help=f"64-bit seed (default ${SEED_ENV} or 0)")

    t = sub.add_parser("teleport", help="one seeded run (or a Monte Carlo summary with --shots)")
    t.add_argument("--theta", type=float, required=True)
    t.add_argument("--zeta", type=float, default=0.0, help="input polar angle (default 0, i.e. |0>)")
    t.add_argument("--xi", type=float, default=0.0, help="input phase")
    t.add_argument("--shots", type=_positive, default=None)
    seed_arg(t)

    s = sub.add_parser("sweep", help="success probabilities over (theta, zeta) as CSV")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--theta", type=float, action="append", help="theta value (repeatable)")
    g.add_argument("--theta-grid", type=_positive, help="number of uniform theta points on [0, pi/2]")
    z = s.add_mutually_exclusive_group()
    z.add_argument("--zeta", type=float, action="append", help="zeta value (repeatable)")
    z.add_argument("--zeta-steps", type=_positive, default=629, help="intervals on [0, 2 pi] (default 629)")
    s.add_argument("--xi", type=float, default=0.0)
    s.add_argument("--branch", type=_label)
    s.add_argument("--shots", type=_positive, help="Monte Carlo shots per (theta, zeta) point")
    s.add_argument("--workers", type=_positive, default=1)
    s.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    seed_arg(s)

    v = sub.add_parser("verify", help="run every invariant check")
    v.add_argument("--theta-grid", type=int, default=50, help="theta grid size (default 50)")
    seed_arg(v)

    e = sub.add_parser("export", help="write the protocol circuits as OpenQASM 3")
    e.add_argument("--theta", type=float, required=True)
    e.add_argument("--zeta", type=float, default=0.0)
    e.add_argument("--xi", type=float, default=0.0)
    e.add_argument("--branch", type=_label, help="export only this correction stage")
    e.add_argument("--out", default="-", help="directory for <stage>.qasm files, '-' for stdout")

    b = sub.add_parser("basis", help="print the EJM basis and its tetrahedra")
    b.add_argument("--theta", type=float, required=True)
    p.commands = sub.choices
    return p


# --- commands ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _cmd_teleport(args, out) -> int:
    state = InputState.from_angles(args.zeta, args.xi)
    if args.shots:
        sm = monte_carlo(state, args.theta, args.shots, args.seed)
        print(f"seed={sm.seed}", f"shots={sm.shots}", f"theta={_fmt(args.theta)}", sep="\n", file=out)
        for k in LABELS:
            print(f"branch {k}: count={sm.branch_counts[k]} successes={sm.success_counts[k]}", file=out)
        print(f"success_rate={_fmt(sm.success_rate)}", f"stderr={_fmt(sm.success_stderr)}", sep="\n", file=out)
        return EXIT_OK
    rec = run_teleportation(state, args.theta, args.seed)
    for key, val in (
        ("seed", rec.seed),
        ("theta", _fmt(rec.theta)),
        ("zeta", _fmt(rec.zeta)),
        ("xi", _fmt(rec.xi)),
        ("ejm_outcome", rec.ejm_outcome),
        ("ancilla_outcome", rec.ancilla_outcome),
        ("success", str(rec.success).lower()),
        ("fidelity", _fmt(rec.output_fidelity)),
    ):
        print(f"{key}={val}", file=out)
    return EXIT_OK


def _cmd_sweep(args, out) -> int:
    thetas = args.theta if args.theta else sweep.uniform_grid(0.0, math.pi / 2, args.theta_grid)
    zetas = args.zeta if args.zeta else sweep.uniform_grid(0.0, 2 * math.pi, args.zeta_steps + 1)
    to_stdout = args.out == "-"
    cfg = sweep.SweepConfig(
        theta_grid=thetas,
        zeta_grid=zetas,
        xi=args.xi,
        branch=args.branch,
        shots=args.shots,
        seed=args.seed,
        workers=args.workers,
    )
    result = sweep.sweep(cfg)
    if to_stdout:
        out.write(sweep.csv_text(result))
        sys.stderr.write(sweep.extremes_text(result))
    else:
        sweep.write_csv(result, args.out)
        out.write(sweep.extremes_text(result))
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    ctx = verify.Context(verify.theta_grid(args.theta_grid), args.seed)
    results = verify.run_all(ctx)
    for r in results:
        print(r.line(), file=out)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=out)
    return EXIT_FAIL if failed else EXIT_OK


def _cmd_export(args, out) -> int:
    circuits = protocol_circuits(InputState.from_angles(args.zeta, args.xi), args.theta)
    programs = qasm.protocol_programs(circuits)
    if args.branch:
        programs = {k: v for k, v in programs.items() if not k.startswith("correction_") or k.endswith(args.branch)}
    if args.out == "-":
        for stage, prog in programs.items():
            out.write(f"// ==== {stage} ====\n{prog.source_text}")
        return EXIT_OK
    folder = Path(args.out)
    folder.mkdir(parents=True, exist_ok=True)
    for stage, prog in programs.items():
        path = folder / f"{stage}.qasm"
        prog.write(path)
        print(f"wrote {path} ({prog.gate_count} gates)", file=out)
    return EXIT_OK


def _cmd_basis(args, out) -> int:
    b = build_basis(args.theta)
    print(f"theta={_fmt(args.theta)}", file=out)
    with np.printoptions(precision=6, suppress=True):
        for k in LABELS:
            print(f"|e{k}> = {b[k]}  concurrence={_fmt(concurrence(b[k]))}", file=out)
        for side in Side:
            rep = reduced_tetrahedron(b, side)
            print(f"{side.value}: radius={_fmt(rep.common_radius)}", file=out)
            for k, v in zip(LABELS, rep.bloch_vectors):
                print(f"  m{k} = {np.asarray(v)}", file=out)
            if rep.pairwise_cosines is not None:
                cos = rep.pairwise_cosines
                print(f"  pairwise cosines in [{_fmt(min(cos))}, {_fmt(max(cos))}]", file=out)
            else:
                print("  degenerate (all vectors at the origin)", file=out)
    return EXIT_OK


COMMANDS = {
    "teleport": _cmd_teleport,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "export": _cmd_export,
    "basis": _cmd_basis,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    sub_parser = parser.commands[args.command]
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return COMMANDS[args.command](args, out)
    except (UsageError, DomainError, ValueError) as exc:
        sub_parser.print_help(sys.stderr)
        print(f"\nejmtele {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ejmtele {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
