"""OpenQASM 3 export and a parser for exactly the emitted subset.

Lowerings into ``stdgates.inc`` names (``rz``/``crz`` there are the
traceless rotations):

    Rz(x)             rz(x) q; gphase(x/2);
    C-Rz(p) c,t       crz(p) c,t; rz(p/2) c; gphase(p/4);
    controlled U      cu(gamma, beta, delta, alpha - (beta+delta)/2)   from zyz_decompose
    custom 1-qubit U  rz(delta); ry(gamma); rz(beta); gphase(alpha)
    N(0) on q         c[k] = measure q;  // postselect c[k] == 0

Angles are written with ``repr`` so parsing gives back the same floats and
re-emitting a parsed program reproduces the text exactly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .. import gates as g
from ..gates import GateKind, GateSpec
from ..qmath import zyz_decompose
from ..sim import ProtocolCircuits

HEADER = 'OPENQASM 3.0;\ninclude "stdgates.inc";\n'
QREG, CREG = "q", "c"
POSTSELECT = "postselect"

STAGES = ("prep", "ejm", "correction_00", "correction_01", "correction_10", "correction_11")


class UnsupportedGateError(ValueError):
    def __init__(self, gate: GateSpec, reason: str):
        super().__init__(f"cannot export {gate!r}: {reason}")
        self.gate = gate


class QasmParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class UnknownTokenError(QasmParseError):
    pass


class ArityError(QasmParseError):
    pass


class UndeclaredRegisterError(QasmParseError):
    pass


class MalformedAngleError(QasmParseError):
    pass


@dataclass(frozen=True)
class QasmProgram:
    source_text: str
    gate_count: int
    declared_qubits: int

    def write(self, path) -> None:
        Path(path).write_text(self.source_text, encoding="utf-8", newline="\n")


class ParsedCircuit(list):
    """Gate list that remembers the declared register sizes."""

    def __init__(self, gates=(), n_qubits: int | None = None, n_bits: int = 0):
        super().__init__(gates)
        self.n_qubits = n_qubits
        self.n_bits = n_bits


# --- emitter -----------------------------------------------------------------------


def _f(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite angle {x}")
    return repr(float(x))


def _q(i: int) -> str:
    return f"{QREG}[{i}]"


_SIMPLE = {GateKind.H: "h", GateKind.S: "s", GateKind.X: "x", GateKind.Y: "y", GateKind.Z: "z"}


def _lower(gate: GateSpec, bit: int) -> tuple[list[str], int]:
    """Lines for one gate and the number of classical bits it used."""
    k = gate.kind
    t = gate.targets[0] if gate.targets else None
    if k in _SIMPLE:
        return [f"{_SIMPLE[k]} {_q(t)};"], 0
    if k is GateKind.RY:
        return [f"ry({_f(gate.params[0])}) {_q(t)};"], 0
    if k is GateKind.RZ_SU2:
        return [f"rz({_f(gate.params[0])}) {_q(t)};"], 0
    if k is GateKind.RZ:
        x = gate.params[0]
        return [f"rz({_f(x)}) {_q(t)};", f"gphase({_f(x / 2)});"], 0
    if k is GateKind.CNOT:
        return [f"cx {_q(gate.controls[0])}, {_q(t)};"], 0
    if k is GateKind.CRZ_SU2:
        return [f"crz({_f(gate.params[0])}) {_q(gate.controls[0])}, {_q(t)};"], 0
    if k is GateKind.CRZ:
        p, c = gate.params[0], gate.controls[0]
        return [f"crz({_f(p)}) {_q(c)}, {_q(t)};", f"rz({_f(p / 2)}) {_q(c)};", f"gphase({_f(p / 4)});"], 0
    if k is GateKind.CU:
        args = ", ".join(_f(p) for p in gate.params)
        return [f"cu({args}) {_q(gate.controls[0])}, {_q(t)};"], 0
    if k is GateKind.CONTROLLED_U:
        a = zyz_decompose(gate.matrix)
        args = ", ".join(_f(p) for p in (a.gamma, a.beta, a.delta, a.alpha - (a.beta + a.delta) / 2))
        return [f"cu({args}) {_q(gate.controls[0])}, {_q(t)};"], 0
    if k is GateKind.CUSTOM:
        if len(gate.targets) != 1:
            raise UnsupportedGateError(gate, "only single-qubit custom unitaries can be lowered")
        try:
            a = zyz_decompose(gate.matrix)
        except ValueError as exc:
            raise UnsupportedGateError(gate, str(exc)) from None
        return [
            f"rz({_f(a.delta)}) {_q(t)};",
            f"ry({_f(a.gamma)}) {_q(t)};",
            f"rz({_f(a.beta)}) {_q(t)};",
            f"gphase({_f(a.alpha)});",
        ], 0
    if k is GateKind.GPHASE:
        return [f"gphase({_f(gate.params[0])});"], 0
    if k is GateKind.MEASURE:
        return [f"{CREG}[{bit}] = measure {_q(t)};"], 1
    if k is GateKind.N:
        if gate.params[0] != 0.0:
            raise UnsupportedGateError(gate, "only N(0) (ancilla post-selection) has an export form")
        return [f"{CREG}[{bit}] = measure {_q(t)};  // {POSTSELECT} {CREG}[{bit}] == 0"], 1
    raise UnsupportedGateError(gate, "no lowering for this kind")


def emit_qasm(gates, n_qubits: int | None = None) -> QasmProgram:
    gates = list(gates) if not isinstance(gates, ParsedCircuit) else gates
    if n_qubits is None:
        n_qubits = getattr(gates, "n_qubits", None)
    if n_qubits is None:
        n_qubits = max((q for gt in gates for q in gt.qubits), default=-1) + 1
    if n_qubits < 1:
        raise ValueError("circuit touches no qubits; pass n_qubits")
    body: list[str] = []
    bits = 0
    count = 0
    for gate in gates:
        if any(q >= n_qubits for q in gate.qubits):
            raise UnsupportedGateError(gate, f"qubit index beyond the {n_qubits}-qubit register")
        lines, used = _lower(gate, bits)
        bits += used
        count += sum(1 for ln in lines if " = measure " not in ln)
        body.extend(lines)
    decl = [f"qubit[{n_qubits}] {QREG};"]
    if bits:
        decl.append(f"bit[{bits}] {CREG};")
    text = HEADER + "\n".join(decl + body) + "\n"
    return QasmProgram(text, count, n_qubits)


# --- parser -------------------------------------------------------------------------


_TOKEN = re.compile(
    r"""\s*(?:
      (?P<num>[-+]?[0-9.][0-9A-Za-z_.+-]*)
    | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<sym>[\[\](),=])
    | (?P<str>"[^"]*")
    | (?P<bad>\S)
    )""",
    re.VERBOSE,
)
_FLOAT = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_INT = re.compile(r"\d+")
_POSTSELECT = re.compile(rf"{POSTSELECT}\s+(\w+)\[(\d+)\]\s*==\s*0")

# name -> (kind, n_params, n_qubits)
_GATES = {
    "h": (GateKind.H, 0, 1),
    "s": (GateKind.S, 0, 1),
    "x": (GateKind.X, 0, 1),
    "y": (GateKind.Y, 0, 1),
    "z": (GateKind.Z, 0, 1),
    "ry": (GateKind.RY, 1, 1),
    "rz": (GateKind.RZ_SU2, 1, 1),
    "cx": (GateKind.CNOT, 0, 2),
    "crz": (GateKind.CRZ_SU2, 1, 2),
    "cu": (GateKind.CU, 4, 2),
}


@dataclass
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


class _Statement:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks = toks
        self.pos = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def col(self) -> int:
        t = self.peek()
        return t.col if t else self.end_col

    def fail(self, cls, message: str, col: int | None = None):
        raise cls(message, self.line, self.col() if col is None else col)

    def next(self, what: str) -> _Tok:
        t = self.peek()
        if t is None:
            self.fail(QasmParseError, f"expected {what}, found end of statement")
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t is None or t.text != text:
            found = "end of statement" if t is None else repr(t.text)
            self.fail(UnknownTokenError, f"expected {text!r}, found {found}")
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text

    def done(self) -> None:
        t = self.peek()
        if t is not None:
            self.fail(UnknownTokenError, f"unexpected token {t.text!r}")

    def integer(self) -> int:
        t = self.next("an integer")
        if t.kind != "num" or not _INT.fullmatch(t.text):
            self.fail(UnknownTokenError, f"expected an integer, found {t.text!r}", t.col)
        return int(t.text)


def _lex(code: str, line: int, offset: int) -> list[_Tok]:
    toks = []
    for m in _TOKEN.finditer(code):
        kind = m.lastgroup
        if kind is None:
            continue
        text = m.group(kind)
        col = offset + m.start(kind) + 1
        if kind == "bad":
            raise UnknownTokenError(f"unexpected character {text!r}", line, col)
        toks.append(_Tok(kind, text, col))
    return toks


def _split_statements(code: str, line: int):
    """Yield (code, start offset) per ';'-terminated statement."""
    start = 0
    for i, ch in enumerate(code):
        if ch == ";":
            yield code[start:i], start, i + 1
            start = i + 1
    rest = code[start:]
    if rest.strip():
        col = start + len(rest) - len(rest.lstrip()) + 1
        raise QasmParseError("statement is missing its terminating ';'", line, col)


def parse_qasm_subset(text: str) -> ParsedCircuit:
    """Gate list for a program in the emitted subset; errors carry line and column."""
    out: list[GateSpec] = []
    qregs: dict[str, int] = {}
    cregs: dict[str, int] = {}
    saw_version = False

    def angle(st: _Statement) -> float:
        t = st.next("an angle")
        if t.kind != "num" or not _FLOAT.fullmatch(t.text):
            st.fail(MalformedAngleError, f"malformed angle literal {t.text!r}", t.col)
        return float(t.text)

    def angles(st: _Statement) -> list[float]:
        vals = []
        if not st.at("("):
            return vals
        st.expect("(")
        if st.at(")"):
            st.expect(")")
            return vals
        vals.append(angle(st))
        while st.at(","):
            st.expect(",")
            vals.append(angle(st))
        st.expect(")")
        return vals

    def reg_ref(st: _Statement, regs: dict[str, int], what: str) -> tuple[str, int]:
        t = st.next(f"a {what} reference")
        if t.kind != "id":
            st.fail(UnknownTokenError, f"expected a {what} register, found {t.text!r}", t.col)
        if t.text not in regs:
            st.fail(UndeclaredRegisterError, f"undeclared {what} register {t.text!r}", t.col)
        st.expect("[")
        icol = st.col()
        i = st.integer()
        st.expect("]")
        if i >= regs[t.text]:
            st.fail(UndeclaredRegisterError, f"index {i} outside {t.text}[{regs[t.text]}]", icol)
        return t.text, i

    lines = text.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        code, _, comment = raw.partition("//")
        pending_measures: list[tuple[int, str, int]] = []
        for stmt, offset, end in _split_statements(code, lineno):
            toks = _lex(stmt, lineno, offset)
            if not toks:
                continue
            st = _Statement(toks, lineno, end)
            head = toks[0]
            if not saw_version and head.text != "OPENQASM":
                st.fail(UnknownTokenError, "program must start with 'OPENQASM 3.0;'", head.col)
            if head.text == "OPENQASM":
                st.next("OPENQASM")
                v = st.next("a version")
                if saw_version or v.text not in ("3", "3.0"):
                    st.fail(UnknownTokenError, f"unsupported version statement {v.text!r}", v.col)
                st.done()
                saw_version = True
            elif head.text == "include":
                st.next("include")
                f = st.next("a file name")
                if f.kind != "str":
                    st.fail(UnknownTokenError, "include needs a quoted file name", f.col)
                st.done()
            elif head.text in ("qubit", "bit"):
                st.next(head.text)
                st.expect("[")
                size = st.integer()
                st.expect("]")
                name = st.next("a register name")
                if name.kind != "id":
                    st.fail(UnknownTokenError, f"bad register name {name.text!r}", name.col)
                st.done()
                if name.text in qregs or name.text in cregs:
                    st.fail(QasmParseError, f"register {name.text!r} declared twice", name.col)
                if size < 1:
                    st.fail(QasmParseError, "register size must be positive", head.col)
                (qregs if head.text == "qubit" else cregs)[name.text] = size
            elif head.kind == "id" and len(toks) > 1 and toks[1].text == "[" and head.text not in _GATES:
                creg, bit = reg_ref(st, cregs, "bit")
                st.expect("=")
                st.expect("measure")
                _, q = reg_ref(st, qregs, "qubit")
                st.done()
                pending_measures.append((len(out), f"{creg}[{bit}]", q))
                out.append(g.measure(q))
            elif head.text == "gphase":
                st.next("gphase")
                col = st.col()
                params = angles(st)
                if len(params) != 1:
                    st.fail(ArityError, f"gphase takes 1 angle, got {len(params)}", col)
                st.done()
                out.append(g.gphase(params[0]))
            elif head.kind == "id" and head.text in _GATES:
                kind, npar, nq = _GATES[head.text]
                st.next(head.text)
                pcol = st.col()
                params = angles(st)
                if len(params) != npar:
                    st.fail(ArityError, f"{head.text} takes {npar} angle(s), got {len(params)}", pcol)
                qcol = st.col()
                qs = [reg_ref(st, qregs, "qubit")[1]]
                while st.at(","):
                    st.expect(",")
                    qs.append(reg_ref(st, qregs, "qubit")[1])
                st.done()
                if len(qs) != nq:
                    st.fail(ArityError, f"{head.text} acts on {nq} qubit(s), got {len(qs)}", qcol)
                if len(set(qs)) != len(qs):
                    st.fail(ArityError, f"{head.text} repeats a qubit operand", qcol)
                controls, targets = (qs[:-1], qs[-1:])
                out.append(GateSpec(kind, tuple(targets), tuple(controls), tuple(params)))
            else:
                st.fail(UnknownTokenError, f"unknown instruction {head.text!r}", head.col)
        m = _POSTSELECT.search(comment)
        if m and pending_measures:
            idx, ref, q = pending_measures[-1]
            if ref == f"{m.group(1)}[{m.group(2)}]":
                out[idx] = g.nonunitary(0.0, q)
    if not saw_version:
        raise UnknownTokenError("program must start with 'OPENQASM 3.0;'", 1, 1)
    n_qubits = next(iter(qregs.values()), None)
    n_bits = next(iter(cregs.values()), 0)
    return ParsedCircuit(out, n_qubits, n_bits)


# --- protocol bundles ------------------------------------------------------------------


def protocol_programs(circuits: ProtocolCircuits, n_qubits: int = 4) -> dict[str, QasmProgram]:
    """One program per stage: ``prep``, ``ejm`` and ``correction_<label>``."""
    out = {
        "prep": emit_qasm(circuits.prep, n_qubits),
        "ejm": emit_qasm(circuits.ejm, n_qubits),
    }
    for label, gates in circuits.corrections.items():
        out[f"correction_{label}"] = emit_qasm(gates, n_qubits)
    return out


def circuits_from_programs(texts: dict[str, str], zeta: float, xi: float, theta: float) -> ProtocolCircuits:
    """Rebuild runnable protocol circuits from stage texts (see :func:`protocol_programs`)."""
    missing = [s for s in STAGES if s not in texts]
    if missing:
        raise KeyError(f"missing stage(s): {', '.join(missing)}")
    return ProtocolCircuits(
        zeta=zeta,
        xi=xi,
        theta=theta,
        prep=tuple(parse_qasm_subset(texts["prep"])),
        ejm=tuple(parse_qasm_subset(texts["ejm"])),
        corrections={s[-2:]: tuple(parse_qasm_subset(texts[s])) for s in STAGES[2:]},
    )

