"""Line-oriented protocol scripts (``.qps``): grammar, parser and printer.

Grammar (one statement per line, ``#`` starts a comment, tokens separated by
whitespace, every value introduced by its keyword)::

    atoms N
    cavities M truncation NMAX [floor NMIN]
    cavity LABEL truncation NMAX [floor NMIN]
    prepare-pair I J alpha A
    prepare-atoms I [J ...] amplitudes C C ...
    prepare-bell I J weights W W W W
    prepare-rho I J matrix C x16
    fock LABEL N
    interact I LABEL lt X
    rotate-x I angle X        (also rotate-y, rotate-z)
    measure-atom I basis z|x|pm outcome e|g|+|-
    measure-parity I J basis z|x|pm outcome same|different
    measure-cavity LABEL fock N
    trace-out T [T ...]

Atoms are numbered from 1, cavities are lettered from ``a``. The header
(``atoms``/``cavities``/``cavity``) comes first, then preparations, then the
dynamical steps. Numbers are plain literals; complex amplitudes are written
as Python literals such as ``0.5+0.1j``.
"""

from __future__ import annotations

import ast
import math
import operator
import string
from dataclasses import dataclass, field
from typing import Union


class ScriptError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class ModeSpec:
    label: str
    n_max: int
    floor: int = 0


@dataclass(frozen=True)
class PreparePair:
    atoms: tuple[int, int]
    alpha: float


@dataclass(frozen=True)
class PrepareAtoms:
    atoms: tuple[int, ...]
    amplitudes: tuple[complex, ...]


@dataclass(frozen=True)
class PrepareBell:
    atoms: tuple[int, int]
    weights: tuple[float, float, float, float]


@dataclass(frozen=True)
class PrepareRho:
    atoms: tuple[int, int]
    matrix: tuple[complex, ...]


@dataclass(frozen=True)
class PrepareCavity:
    mode: str
    n: int


@dataclass(frozen=True)
class Interact:
    atom: int
    mode: str
    lambda_t: float


@dataclass(frozen=True)
class Rotate:
    atom: int
    axis: str
    angle: float


@dataclass(frozen=True)
class MeasureAtom:
    atom: int
    basis: str
    outcome: str


@dataclass(frozen=True)
class MeasureParity:
    atoms: tuple[int, int]
    basis: str
    outcome: str


@dataclass(frozen=True)
class MeasureCavityFock:
    mode: str
    n: int


@dataclass(frozen=True)
class TraceOut:
    targets: tuple[str, ...]


Preparation = Union[PreparePair, PrepareAtoms, PrepareBell, PrepareRho, PrepareCavity]
Step = Union[Preparation, Interact, Rotate, MeasureAtom, MeasureParity, MeasureCavityFock, TraceOut]
PREPARATIONS = (PreparePair, PrepareAtoms, PrepareBell, PrepareRho, PrepareCavity)


@dataclass(frozen=True)
class Protocol:
    n_atoms: int
    modes: tuple[ModeSpec, ...]
    steps: tuple[Step, ...] = ()
    lines: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def mode_index(self, label: str) -> int:
        for i, m in enumerate(self.modes):
            if m.label == label:
                return i
        raise KeyError(label)

    def line_of(self, step_index: int) -> int:
        return self.lines[step_index] if step_index < len(self.lines) else 0


BASES = {"z": ("e", "g"), "x": ("+", "-"), "pm": ("+", "-")}
PARITY = ("same", "different")


class _Line:
    def __init__(self, lineno: int, raw: str):
        self.lineno = lineno
        self.raw = raw
        self.tokens = []
        pos = 0
        text = raw.split("#", 1)[0]
        for tok in text.split():
            col = text.index(tok, pos)
            self.tokens.append((tok, col + 1))
            pos = col + len(tok)
        self.i = 0

    def error(self, message: str, col: int = None) -> ScriptError:
        if col is None:
            col = self.tokens[min(self.i, len(self.tokens) - 1)][1] if self.tokens else 1
        return ScriptError(self.lineno, col, message)

    def next(self, what: str) -> tuple[str, int]:
        if self.i >= len(self.tokens):
            end = len(self.raw.split("#", 1)[0].rstrip()) + 1
            raise ScriptError(self.lineno, end, f"expected {what}")
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def keyword(self, kw: str) -> None:
        tok, col = self.next(f"keyword {kw!r}")
        if tok != kw:
            raise ScriptError(self.lineno, col, f"expected keyword {kw!r}, got {tok!r}")

    def integer(self, what: str) -> tuple[int, int]:
        tok, col = self.next(what)
        try:
            return int(tok), col
        except ValueError:
            raise ScriptError(self.lineno, col, f"malformed integer {tok!r} for {what}") from None

    def real(self, what: str) -> float:
        tok, col = self.next(what)
        try:
            v = float(tok)
        except ValueError:
            raise ScriptError(self.lineno, col, f"malformed number {tok!r} for {what}") from None
        if not math.isfinite(v):
            raise ScriptError(self.lineno, col, f"non-finite number for {what}")
        return v

    def cplx(self, what: str) -> complex:
        tok, col = self.next(what)
        try:
            return complex(tok)
        except ValueError:
            raise ScriptError(self.lineno, col, f"malformed number {tok!r} for {what}") from None

    def optional(self, kw: str) -> bool:
        if self.i < len(self.tokens) and self.tokens[self.i][0] == kw:
            self.i += 1
            return True
        return False

    def rest(self) -> list[tuple[str, int]]:
        out = self.tokens[self.i :]
        self.i = len(self.tokens)
        return out

    def done(self) -> None:
        if self.i < len(self.tokens):
            tok, col = self.tokens[self.i]
            raise ScriptError(self.lineno, col, f"unexpected token {tok!r}")


class _Parser:
    def __init__(self):
        self.n_atoms = None
        self.modes: dict[str, ModeSpec] = {}
        self.steps = []
        self.lines = []
        self.dynamic = False
        self.traced: set[str] = set()
        self.header_lines: dict[str, int] = {}

    # -- resolution helpers

    def atom(self, ln: _Line) -> int:
        a, col = ln.integer("atom number")
        if self.n_atoms is None:
            raise ScriptError(ln.lineno, col, "atoms must be declared first")
        if not 1 <= a <= self.n_atoms:
            raise ScriptError(ln.lineno, col, f"atom {a} out of range 1..{self.n_atoms}")
        if str(a) in self.traced:
            raise ScriptError(ln.lineno, col, f"atom {a} was traced out")
        return a

    def mode(self, ln: _Line) -> str:
        m, col = ln.next("cavity label")
        if m not in self.modes:
            raise ScriptError(ln.lineno, col, f"unknown cavity {m!r}")
        if m in self.traced:
            raise ScriptError(ln.lineno, col, f"cavity {m!r} was traced out")
        return m

    def basis(self, ln: _Line) -> str:
        ln.keyword("basis")
        b, col = ln.next("basis name")
        if b not in BASES:
            raise ScriptError(ln.lineno, col, f"unknown basis {b!r}")
        return b

    def step(self, ln: _Line, step) -> None:
        is_prep = isinstance(step, PREPARATIONS)
        if is_prep and self.dynamic:
            raise ln.error("preparations must precede interactions and measurements", ln.tokens[0][1])
        if not is_prep:
            self.dynamic = True
        self.steps.append(step)
        self.lines.append(ln.lineno)

    # -- statements

    def parse_line(self, ln: _Line) -> None:
        kw, col = ln.next("keyword")
        if kw == "atoms":
            if self.n_atoms is not None:
                raise ScriptError(ln.lineno, col, "atoms declared twice")
            n, c = ln.integer("atom count")
            if n < 0:
                raise ScriptError(ln.lineno, c, "atom count must be non-negative")
            self.n_atoms = n
        elif kw == "cavities":
            if self.modes:
                raise ScriptError(ln.lineno, col, "cavities declared twice")
            n, c = ln.integer("cavity count")
            if not 0 <= n <= 26:
                raise ScriptError(ln.lineno, c, "cavity count must be 0..26")
            nmax, floor = self.truncation(ln)
            for label in string.ascii_lowercase[:n]:
                self.modes[label] = ModeSpec(label, nmax, floor)
                self.header_lines[label] = ln.lineno
        elif kw == "cavity":
            label, c = ln.next("cavity label")
            if label not in self.modes:
                raise ScriptError(ln.lineno, c, f"unknown cavity {label!r}")
            nmax, floor = self.truncation(ln)
            self.modes[label] = ModeSpec(label, nmax, floor)
            self.header_lines[label] = ln.lineno
        elif kw == "prepare-pair":
            atoms = (self.atom(ln), self.atom(ln))
            ln.keyword("alpha")
            a = ln.real("alpha")
            if not 0 <= a <= 1:
                raise ln.error("alpha must lie in [0, 1]", ln.tokens[ln.i - 1][1])
            self.step(ln, PreparePair(atoms, a))
        elif kw == "prepare-atoms":
            atoms = []
            while ln.i < len(ln.tokens) and ln.tokens[ln.i][0] != "amplitudes":
                atoms.append(self.atom(ln))
            ln.keyword("amplitudes")
            amps = tuple(complex(t) for t in self.numbers(ln, 2 ** len(atoms), "amplitudes"))
            self.step(ln, PrepareAtoms(tuple(atoms), amps))
        elif kw == "prepare-bell":
            atoms = (self.atom(ln), self.atom(ln))
            ln.keyword("weights")
            w = tuple(float(self.real_of(ln, t, c)) for t, c in self.tokens_n(ln, 4, "weights"))
            self.step(ln, PrepareBell(atoms, w))
        elif kw == "prepare-rho":
            atoms = (self.atom(ln), self.atom(ln))
            ln.keyword("matrix")
            m = tuple(self.numbers(ln, 16, "matrix entries"))
            self.step(ln, PrepareRho(atoms, m))
        elif kw == "fock":
            label = self.mode(ln)
            n, _ = ln.integer("photon number")
            self.step(ln, PrepareCavity(label, n))
        elif kw == "interact":
            atom = self.atom(ln)
            label = self.mode(ln)
            ln.keyword("lt")
            lt = ln.real("interaction time")
            if lt < 0:
                raise ln.error("interaction time must be non-negative", ln.tokens[ln.i - 1][1])
            self.step(ln, Interact(atom, label, lt))
        elif kw in ("rotate-x", "rotate-y", "rotate-z"):
            atom = self.atom(ln)
            ln.keyword("angle")
            self.step(ln, Rotate(atom, kw[-1], ln.real("angle")))
        elif kw == "measure-atom":
            atom = self.atom(ln)
            b = self.basis(ln)
            ln.keyword("outcome")
            o, c = ln.next("outcome")
            if o not in BASES[b]:
                raise ScriptError(ln.lineno, c, f"outcome {o!r} not in basis {b!r}")
            self.step(ln, MeasureAtom(atom, b, o))
        elif kw == "measure-parity":
            atoms = (self.atom(ln), self.atom(ln))
            if atoms[0] == atoms[1]:
                raise ln.error("parity needs two different atoms")
            b = self.basis(ln)
            ln.keyword("outcome")
            o, c = ln.next("outcome")
            if o not in PARITY:
                raise ScriptError(ln.lineno, c, f"parity outcome must be one of {PARITY}")
            self.step(ln, MeasureParity(atoms, b, o))
        elif kw == "measure-cavity":
            label = self.mode(ln)
            ln.keyword("fock")
            n, c = ln.integer("photon number")
            spec = self.modes[label]
            if not spec.floor <= n <= spec.n_max:
                raise ScriptError(ln.lineno, c, f"photon number {n} outside {spec.floor}..{spec.n_max}")
            self.step(ln, MeasureCavityFock(label, n))
        elif kw == "trace-out":
            targets = []
            for tok, c in ln.rest():
                if tok.isdigit():
                    if not 1 <= int(tok) <= (self.n_atoms or 0):
                        raise ScriptError(ln.lineno, c, f"atom {tok} out of range")
                elif tok not in self.modes:
                    raise ScriptError(ln.lineno, c, f"unknown subsystem {tok!r}")
                if tok in self.traced or tok in targets:
                    raise ScriptError(ln.lineno, c, f"{tok!r} already traced out")
                targets.append(tok)
            if not targets:
                raise ln.error("trace-out needs at least one subsystem", col)
            self.step(ln, TraceOut(tuple(targets)))
            self.traced.update(targets)
        else:
            raise ScriptError(ln.lineno, col, f"unknown keyword {kw!r}")
        ln.done()

    def truncation(self, ln: _Line) -> tuple[int, int]:
        ln.keyword("truncation")
        nmax, c = ln.integer("truncation")
        floor = 0
        if ln.optional("floor"):
            floor, c2 = ln.integer("floor")
            if floor < 0:
                raise ScriptError(ln.lineno, c2, "floor must be non-negative")
        if nmax < floor + 1:
            raise ScriptError(ln.lineno, c, "truncation must exceed the floor")
        return nmax, floor

    def tokens_n(self, ln: _Line, n: int, what: str):
        return [ln.next(what) for _ in range(n)]

    def real_of(self, ln: _Line, tok: str, col: int) -> float:
        try:
            return float(tok)
        except ValueError:
            raise ScriptError(ln.lineno, col, f"malformed number {tok!r}") from None

    def numbers(self, ln: _Line, n: int, what: str) -> list[complex]:
        out = []
        for tok, col in self.tokens_n(ln, n, what):
            try:
                out.append(complex(tok))
            except ValueError:
                raise ScriptError(ln.lineno, col, f"malformed number {tok!r}") from None
        return out

    def finish(self) -> Protocol:
        if self.n_atoms is None:
            raise ScriptError(1, 1, "missing 'atoms' declaration")
        protocol = Protocol(self.n_atoms, tuple(self.modes.values()), tuple(self.steps), tuple(self.lines))
        self.check_truncation(protocol)
        return protocol

    def check_truncation(self, protocol: Protocol) -> None:
        """Excitation counting: every mode window must hold all reachable photon numbers."""
        for spec in protocol.modes:
            n0 = 0
            passes = 0
            for st in protocol.steps:
                if isinstance(st, PrepareCavity) and st.mode == spec.label:
                    n0 = st.n
                elif isinstance(st, Interact) and st.mode == spec.label:
                    passes += 1
            line = self.header_lines.get(spec.label, 1)
            if not spec.floor <= n0 <= spec.n_max:
                raise ScriptError(line, 1, f"cavity {spec.label}: initial photon number {n0} outside window")
            if spec.n_max < n0 + passes:
                raise ScriptError(
                    line, 1, f"cavity {spec.label}: truncation {spec.n_max} < {n0} photons + {passes} passages"
                )
            if spec.floor > max(0, n0 - passes):
                raise ScriptError(
                    line, 1, f"cavity {spec.label}: floor {spec.floor} > {n0} photons - {passes} passages"
                )


def parse_script(text: str) -> Protocol:
    """Parse protocol-script text; raises :class:`ScriptError` with line and column."""
    p = _Parser()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        ln = _Line(lineno, raw)
        if ln.tokens:
            p.parse_line(ln)
    return p.finish()


def _num(x) -> str:
    x = complex(x)
    if x.imag == 0:
        return repr(float(x.real))
    return repr(x).strip("()")


def format_protocol(protocol: Protocol) -> str:
    """Render a protocol as script text; ``parse_script`` of the result reproduces it."""
    out = [f"atoms {protocol.n_atoms}"]
    if protocol.modes:
        first = protocol.modes[0]
        head = f"cavities {len(protocol.modes)} truncation {first.n_max}"
        out.append(head + (f" floor {first.floor}" if first.floor else ""))
        for m in protocol.modes[1:]:
            if (m.n_max, m.floor) != (first.n_max, first.floor):
                out.append(f"cavity {m.label} truncation {m.n_max}" + (f" floor {m.floor}" if m.floor else ""))
    for st in protocol.steps:
        if isinstance(st, PreparePair):
            out.append(f"prepare-pair {st.atoms[0]} {st.atoms[1]} alpha {_num(st.alpha)}")
        elif isinstance(st, PrepareAtoms):
            atoms = " ".join(map(str, st.atoms))
            out.append(f"prepare-atoms {atoms} amplitudes " + " ".join(_num(a) for a in st.amplitudes))
        elif isinstance(st, PrepareBell):
            out.append(f"prepare-bell {st.atoms[0]} {st.atoms[1]} weights " + " ".join(_num(w) for w in st.weights))
        elif isinstance(st, PrepareRho):
            out.append(f"prepare-rho {st.atoms[0]} {st.atoms[1]} matrix " + " ".join(_num(w) for w in st.matrix))
        elif isinstance(st, PrepareCavity):
            out.append(f"fock {st.mode} {st.n}")
        elif isinstance(st, Interact):
            out.append(f"interact {st.atom} {st.mode} lt {_num(st.lambda_t)}")
        elif isinstance(st, Rotate):
            out.append(f"rotate-{st.axis} {st.atom} angle {_num(st.angle)}")
        elif isinstance(st, MeasureAtom):
            out.append(f"measure-atom {st.atom} basis {st.basis} outcome {st.outcome}")
        elif isinstance(st, MeasureParity):
            out.append(f"measure-parity {st.atoms[0]} {st.atoms[1]} basis {st.basis} outcome {st.outcome}")
        elif isinstance(st, MeasureCavityFock):
            out.append(f"measure-cavity {st.mode} fock {st.n}")
        elif isinstance(st, TraceOut):
            out.append("trace-out " + " ".join(st.targets))
        else:
            raise TypeError(f"unknown step {st!r}")
    return "\n".join(out) + "\n"


# -- symbolic preprocessor (used by the CLI's --expand-symbolic flag)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "asin": math.asin, "arcsin": math.asin}
_CONSTS = {"pi": math.pi}
_VALUE_KEYWORDS = {"lt", "angle", "alpha"}


def evaluate_expression(text: str) -> float:
    """Evaluate an arithmetic expression over numbers, ``pi`` and ``sqrt``/``sin``/``cos``/``asin``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(text, mode="eval"))


def expand_symbolic(text: str) -> str:
    """Replace symbolic values after ``lt``, ``angle`` and ``alpha`` with decimal literals.

    Expressions must not contain spaces, e.g. ``lt 2*sqrt(2)*pi``.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, hash_, comment = raw.partition("#")
        parts = body.split(" ")
        for i in range(1, len(parts)):
            if parts[i - 1] in _VALUE_KEYWORDS and parts[i]:
                try:
                    float(parts[i])
                except ValueError:
                    try:
                        parts[i] = repr(evaluate_expression(parts[i]))
                    except (ValueError, SyntaxError, ZeroDivisionError) as err:
                        col = len(" ".join(parts[:i])) + 2
                        raise ScriptError(lineno, col, f"cannot expand {parts[i]!r}: {err}") from None
        out.append(" ".join(parts) + hash_ + comment)
    return "\n".join(out) + ("\n" if text.endswith("\n") else "")
