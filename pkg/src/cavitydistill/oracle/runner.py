"""Brute-force execution of parsed protocols.

Only the state primitives and the Jaynes-Cummings propagator are used here, so
the results are independent of any closed-form expression elsewhere in the
package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import core
from ..core import G, EmptyBranchError, HilbertSpace, MixedState, PureState, State
from ..jc import LT_MAX, passage
from ..measures import BELL_MATRIX
from .script import (
    BASES,
    Interact,
    MeasureAtom,
    MeasureCavityFock,
    MeasureParity,
    PrepareAtoms,
    PrepareBell,
    PrepareCavity,
    PreparePair,
    PrepareRho,
    Protocol,
    Rotate,
    ScriptError,
    TraceOut,
    parse_script,
)


@dataclass(frozen=True)
class LogEntry:
    line: int
    step: str
    probability: float


@dataclass(frozen=True, eq=False)
class RunResult:
    state: State
    probability: float
    log: tuple[LogEntry, ...] = ()
    labels: tuple[str, ...] = field(default=())

    def reduced(self, keep) -> MixedState:
        """Reduced state on the named subsystems (atom numbers as ints or strings, cavity letters)."""
        idx = [self.labels.index(str(k)) for k in keep]
        return core.partial_trace(self.state, idx)


def _step_name(step) -> str:
    return type(step).__name__


def _initial_state(protocol: Protocol) -> tuple[State, list[str]]:
    labels = [str(i) for i in range(1, protocol.n_atoms + 1)] + [m.label for m in protocol.modes]
    groups: list[tuple[list[str], State]] = []
    owner: dict[str, int] = {}

    def claim(names, st, step_index):
        for nm in names:
            if nm in owner:
                line = protocol.line_of(step_index)
                raise ScriptError(line, 1, f"subsystem {nm} prepared twice")
            owner[nm] = len(groups)
        groups.append((list(names), st))

    two = HilbertSpace.build(n_qubits=2)
    for i, st in enumerate(protocol.steps):
        if isinstance(st, PreparePair):
            b = np.sqrt(1 - st.alpha**2)
            claim([str(a) for a in st.atoms], PureState(two, [st.alpha, 0, 0, b]), i)
        elif isinstance(st, PrepareAtoms):
            space = HilbertSpace.build(n_qubits=len(st.atoms))
            psi = PureState(space, st.amplitudes)
            if psi.norm < core.EMPTY_BRANCH_TOL:
                raise ScriptError(protocol.line_of(i), 1, "amplitudes vanish")
            claim([str(a) for a in st.atoms], psi.normalized(), i)
        elif isinstance(st, PrepareBell):
            w = np.asarray(st.weights, dtype=float)
            if (w < 0).any() or abs(w.sum() - 1) > core.ATOL:
                raise ScriptError(protocol.line_of(i), 1, "Bell weights must be non-negative and sum to 1")
            rho = MixedState(two, (BELL_MATRIX * w) @ BELL_MATRIX.conj().T)
            claim([str(a) for a in st.atoms], rho, i)
        elif isinstance(st, PrepareRho):
            rho = MixedState(two, np.asarray(st.matrix, dtype=complex).reshape(4, 4))
            try:
                rho.check()
            except ValueError as err:
                raise ScriptError(protocol.line_of(i), 1, str(err)) from None
            claim([str(a) for a in st.atoms], rho, i)
        elif isinstance(st, PrepareCavity):
            spec = protocol.modes[protocol.mode_index(st.mode)]
            claim([st.mode], core.fock_state(st.n, spec.n_max, spec.floor), i)

    # unprepared atoms start in |g>, unprepared modes in their lowest Fock state
    for nm in labels:
        if nm not in owner:
            if nm.isdigit():
                st = core.basis_state(HilbertSpace.build(n_qubits=1), (G,))
            else:
                spec = protocol.modes[protocol.mode_index(nm)]
                st = core.fock_state(spec.floor, spec.n_max, spec.floor)
            owner[nm] = len(groups)
            groups.append(([nm], st))

    order: list[str] = []
    state = None
    for names, st in groups:
        order.extend(names)
        state = st if state is None else core.tensor(state, st)
    state = core.permute_factors(state, [order.index(nm) for nm in labels])
    return state, labels


def _parity_projectors(basis: str, outcome: str) -> list[np.ndarray]:
    a, b = BASES[basis]
    pairs = [(a, a), (b, b)] if outcome == "same" else [(a, b), (b, a)]
    return [np.kron(core.qubit_projector(basis, s), core.qubit_projector(basis, t)) for s, t in pairs]


def run(protocol: Protocol, lt_max: float = LT_MAX) -> RunResult:
    """Execute the protocol, post-selecting every measurement on its stated outcome.

    Raises :class:`EmptyBranchError` (message carries the script line) when an
    outcome has probability below 1e-14.
    """
    state, labels = _initial_state(protocol)
    total = 1.0
    log = []

    def where(name: str) -> int:
        return labels.index(name)

    for i, st in enumerate(protocol.steps):
        line = protocol.line_of(i)
        p = 1.0
        try:
            if isinstance(st, Interact):
                state = passage(state, where(str(st.atom)), where(st.mode), st.lambda_t, lt_max)
            elif isinstance(st, Rotate):
                state = core.apply_local_unitary(state, (where(str(st.atom)),), core.rotation(st.axis, st.angle))
            elif isinstance(st, MeasureAtom):
                proj = core.qubit_projector(st.basis, st.outcome)
                rec = core.project(state, (where(str(st.atom)),), proj, outcome=st.outcome)
                state, p = rec.post_state, rec.probability
            elif isinstance(st, MeasureParity):
                targets = (where(str(st.atoms[0])), where(str(st.atoms[1])))
                rho0 = core.as_mixed(state)
                parts = [core.apply_operator(rho0, targets, pr) for pr in _parity_projectors(st.basis, st.outcome)]
                rho = MixedState(state.space, sum(x.matrix for x in parts))
                p = rho.trace / rho0.trace
                if p < core.EMPTY_BRANCH_TOL:
                    raise EmptyBranchError(f"parity outcome {st.outcome!r} has probability {p:.3g}", max(p, 0.0))
                state = rho.normalized()
            elif isinstance(st, MeasureCavityFock):
                k = where(st.mode)
                f = state.space.factors[k]
                proj = np.zeros((f.dim, f.dim))
                proj[st.n - f.floor, st.n - f.floor] = 1
                rec = core.project(state, (k,), proj, outcome=f"fock {st.n}")
                state, p = rec.post_state, rec.probability
            elif isinstance(st, TraceOut):
                drop = {where(t) for t in st.targets}
                keep = [j for j in range(len(labels)) if j not in drop]
                if not keep:
                    raise ScriptError(line, 1, "cannot trace out every subsystem")
                state = core.partial_trace(state, keep)
                labels = [labels[j] for j in keep]
            else:
                continue  # preparations are folded into the initial state
        except EmptyBranchError as err:
            raise EmptyBranchError(f"line {line}: {err}", err.probability) from None
        total *= p
        log.append(LogEntry(line, _step_name(st), p))
    return RunResult(state, total, tuple(log), tuple(labels))


def run_script(text: str, lt_max: float = LT_MAX) -> RunResult:
    return run(parse_script(text), lt_max)
