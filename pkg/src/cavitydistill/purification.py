"""Purification of Bell-diagonal two-qubit states with Fock-state cavity filters.

Two copies of a two-qubit state sit on qubit pairs (1,2) and (3,4). Qubits 1 and 3
cross cavity ``a``, qubits 2 and 4 cross cavity ``b``, and both fields are
post-selected on their initial photon number. In the large-photon-number limit
the field projection acts on each crossing pair as the filter

    |eg> -> |ge>,  |ge> -> |eg>,  |ee>, |gg> -> 0,

which keeps Phi x Phi and Psi x Psi products and removes the cross terms.
Qubits 1 and 2 are then measured in the ``|+>, |->`` basis.

Qubit order inside every 4-qubit state is 1, 2, 3, 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import core
from .core import E, G, EmptyBranchError, HilbertSpace, MixedState, PureState, State
from .jc import LT_MAX, JCParams, jc_propagator
from .measures import (
    PHI_MINUS,
    PHI_PLUS,
    PSI_PLUS,
    TWO_QUBITS,
    BellDiagonal,
    bell_decompose,
    fidelity,
    state_fidelity,
)

SQRT2 = np.sqrt(2.0)
FOUR_QUBITS = HilbertSpace.build(n_qubits=4)
BRANCH_PLUS = "plus"
BRANCH_MINUS = "minus"


@dataclass(frozen=True, eq=False)
class RoundOutcome:
    post_state: MixedState
    field_projection_probability: float
    measurement_branch: Optional[str] = None
    cumulative_probability: float = 1.0
    ideal_fidelity: Optional[float] = None

    def __post_init__(self):
        for p in (self.field_projection_probability, self.cumulative_probability):
            if not -core.ATOL <= p <= 1 + core.ATOL:
                raise ValueError(f"probability {p} outside [0, 1]")


@dataclass(frozen=True)
class SimplifiedParams:
    """Integers of the single-photon variant; the angles are derived from them."""

    m1: int
    m2: int
    theta1: float = field(init=False)
    theta2: float = field(init=False)

    def __post_init__(self):
        if self.m1 < 0 or self.m2 < 0:
            raise ValueError("m1 and m2 must be non-negative")
        object.__setattr__(self, "theta1", float(np.pi * SQRT2 * (self.m1 + 0.5)))
        object.__setattr__(self, "theta2", float(np.pi / SQRT2 * (self.m2 + 0.5)))

    @property
    def lambda_t(self) -> float:
        """Interaction time of the first pair, ``(m1 + 1/2) pi``."""
        return (self.m1 + 0.5) * np.pi

    @property
    def lambda_t_prime(self) -> float:
        """Interaction time of the second pair, ``(m2 + 1/2) pi / sqrt(2)``."""
        return (self.m2 + 0.5) * np.pi / SQRT2


@dataclass(frozen=True)
class MemsParam:
    g: float

    def __post_init__(self):
        if not 0 <= self.g <= 1:
            raise ValueError("g must lie in [0, 1]")


# -- filter operators


def _pair_kraus_ideal() -> np.ndarray:
    k = np.zeros((4, 4), dtype=complex)
    # (e,g) basis on (first, second) crossing atom: index 1 = eg, 2 = ge
    k[2, 1] = 1
    k[1, 2] = 1
    return k


def _pair_kraus_exact(n: int, lambda_t: float, lambda_t_second: Optional[float] = None) -> np.ndarray:
    # two atoms cross one cavity holding n photons; field projected back onto |n>
    lt2 = lambda_t if lambda_t_second is None else lambda_t_second
    lo, hi = max(0, n - 2), n + 2
    d = hi - lo + 1
    u1 = jc_propagator(JCParams(lambda_t, hi, lo, lt_max=np.inf))
    u2 = jc_propagator(JCParams(lt2, hi, lo, lt_max=np.inf))
    # full operators on atom1 (x) atom2 (x) mode
    U1 = np.einsum("amAM,bB->abmABM", u1.reshape(2, d, 2, d), np.eye(2)).reshape(4 * d, 4 * d)
    U2 = np.einsum("bmBM,aA->abmABM", u2.reshape(2, d, 2, d), np.eye(2)).reshape(4 * d, 4 * d)
    U = (U2 @ U1).reshape(4, d, 4, d)
    return U[:, n - lo, :, n - lo]


def filter_kraus(n: Optional[int] = None, lambda_t: Optional[float] = None) -> np.ndarray:
    """Operator on qubits (1, 2, 3, 4) implementing both cavity crossings plus the field projection.

    Without arguments this is the idealized filter. With ``n`` the two-atom
    transfer inside each cavity is computed from the exact propagator at
    ``sqrt(n) lt = pi/2`` (or the given ``lambda_t``); phases are kept.
    """
    if n is None:
        k = _pair_kraus_ideal()
    else:
        if n < 2:
            raise ValueError("the exact filter needs n >= 2")
        lt = np.pi / (2 * np.sqrt(n)) if lambda_t is None else lambda_t
        k = _pair_kraus_exact(n, lt)
    # k acts on (1,3) and on (2,4); reorder indices to qubits 1,2,3,4
    k4 = np.einsum("acAC,bdBD->abcdABCD", k.reshape(2, 2, 2, 2), k.reshape(2, 2, 2, 2))
    return k4.reshape(16, 16)


def _pair_state(state) -> MixedState:
    if isinstance(state, BellDiagonal):
        return state.to_state()
    rho = core.as_mixed(state)
    if rho.space.dims != (2, 2):
        raise ValueError("expected a two-qubit state")
    return rho


def filter_round(left, right, kraus: Optional[np.ndarray] = None) -> RoundOutcome:
    """Apply a filter to ``left`` on qubits (1,2) and ``right`` on qubits (3,4).

    Inputs may be :class:`BellDiagonal` weights or arbitrary two-qubit states.
    Raises :class:`EmptyBranchError` when nothing survives the filter.
    """
    k = filter_kraus() if kraus is None else kraus
    rho = core.tensor(_pair_state(left), _pair_state(right))
    out = k @ rho.matrix @ k.conj().T
    p = float(np.trace(out).real)
    if p < core.EMPTY_BRANCH_TOL:
        raise EmptyBranchError(f"filter output has probability {p:.3g}", max(p, 0.0))
    return RoundOutcome(MixedState(FOUR_QUBITS, out / p), p, None, p)


def ideal_filter_round(left: BellDiagonal, right: BellDiagonal) -> RoundOutcome:
    """Idealized filter round on two Bell-diagonal pairs; 4-qubit output."""
    return filter_round(left, right)


def measure_pair_pm(four_qubit: State, prior_probability: float = 1.0) -> tuple[RoundOutcome, RoundOutcome]:
    """Measure qubits 1 and 2 in the ``|+>, |->`` basis; return (same-outcome, different-outcome) branches.

    Each branch is the reduced state of qubits 3 and 4; outcomes inside a branch
    are mixed incoherently, as recorded measurement results would be.
    """
    rho = core.as_mixed(four_qubit)
    if rho.space.dims != (2, 2, 2, 2):
        raise ValueError("expected a four-qubit state")
    pm = {"+": core.PLUS, "-": core.MINUS}
    results = []
    for name, pairs in ((BRANCH_PLUS, ("++", "--")), (BRANCH_MINUS, ("+-", "-+"))):
        m = np.zeros((4, 4), dtype=complex)
        for s, t in pairs:
            bra = np.kron(pm[s], pm[t]).conj()
            # <st| rho |st> on qubits 1,2
            r = rho.matrix.reshape(4, 4, 4, 4)
            m += np.einsum("i,iajb,j->ab", bra, r, bra.conj())
        p = max(0.0, float(np.trace(m).real))
        # an empty branch carries a zero matrix rather than a normalized state
        post = m / p if p > core.EMPTY_BRANCH_TOL else np.zeros((4, 4))
        results.append(RoundOutcome(MixedState(TWO_QUBITS, post), 1.0, name, p * prior_probability))
    return results[0], results[1]


def relabel_minus(state: State) -> MixedState:
    """z rotation by pi on qubit 3 (the first factor): maps the minus branch onto the plus branch."""
    return core.as_mixed(core.apply_local_unitary(core.as_mixed(state), (0,), core.rz(np.pi)))


def ideal_round_weights(left: BellDiagonal, right: BellDiagonal) -> tuple[BellDiagonal, float]:
    """Bell weights of the same-outcome branch after one ideal round, and the filter probability.

    Phi_s x Phi_t feeds Phi_(st) and Psi_s x Psi_t feeds Psi_(st); cross terms vanish.
    """
    a1, a2, b1, b2 = left.weights
    c1, c2, d1, d2 = right.weights
    w = np.array([a1 * c1 + a2 * c2, a1 * c2 + a2 * c1, b1 * d1 + b2 * d2, b1 * d2 + b2 * d1])
    s = w.sum()
    if s < core.EMPTY_BRANCH_TOL:
        raise EmptyBranchError("no Phi x Phi or Psi x Psi component survives", 0.0)
    return BellDiagonal.from_weights(w / s), float(s / 2)


# -- iteration


def _simple(P: float) -> BellDiagonal:
    if not 0 <= P <= 1:
        raise ValueError("P must lie in [0, 1]")
    return BellDiagonal(P, 0.0, 1 - P, 0.0)


def iterate_ideal(P: float, q: int) -> tuple[BellDiagonal, float]:
    """State after purifying with ``q`` copies, and the aggregate probability ``(P^q + (1-P)^q) / 2^q``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    _simple(P)
    a, b = P**q, (1 - P) ** q
    return BellDiagonal(a / (a + b), 0.0, b / (a + b), 0.0), float((a + b) / 2**q)


@dataclass(frozen=True)
class Stage:
    state: BellDiagonal
    field_probability: float
    cumulative_probability: float


def iterate_stages(P: float, q: int) -> list[Stage]:
    """Explicit stage accounting: combine the running state with a fresh copy ``q - 1`` times.

    Each stage multiplies the cumulative probability by the field-projection
    probability; both measurement branches are kept (the minus branch is relabeled).
    The returned list starts with the input itself.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    fresh = _simple(P)
    cur = fresh
    stages = [Stage(cur, 1.0, 1.0)]
    cum = 1.0
    for _ in range(q - 1):
        cur, p = ideal_round_weights(cur, fresh)
        cum *= p
        stages.append(Stage(cur, p, cum))
    return stages


# -- GHZ extension


GHZ_TARGET = PureState(FOUR_QUBITS, np.eye(16)[FOUR_QUBITS.basis_index((G, E, E, E))] / SQRT2
                       + np.eye(16)[FOUR_QUBITS.basis_index((E, G, G, G))] / SQRT2)


def ghz_printed_probability(P: float) -> float:
    """``P^4 / (2 [P^2 + (1-P)^2]^2)``."""
    return float(P**4 / (2 * (P**2 + (1 - P) ** 2) ** 2))


def ghz_extend(rho1: State) -> tuple[PureState, float]:
    """Flip qubit 1, then filter qubits 1 and 2 in a third cavity.

    Returns the post-selected state (``(|geee> + |eggg>)/sqrt(2)`` for inputs of
    the Phi^2 / Psi^2 mixture form) and the simulated probability of that step.
    """
    rho = core.as_mixed(rho1)
    flip = np.array([[0, 1], [1, 0]], dtype=complex)
    rho = core.apply_local_unitary(rho, (0,), flip)
    k = np.kron(_pair_kraus_ideal(), np.eye(4))
    out = k @ rho.matrix @ k.conj().T
    p = float(np.trace(out).real)
    if p < core.EMPTY_BRANCH_TOL:
        raise EmptyBranchError("third filter removes the whole state", max(p, 0.0))
    return core.to_pure(MixedState(FOUR_QUBITS, out / p)), p


def ghz_filter_probability(P: float) -> float:
    """Simulated probability of the GHZ step on the one-round output of ``P Phi+ + (1-P) Psi+``."""
    rho1 = ideal_filter_round(_simple(P), _simple(P)).post_state
    try:
        return ghz_extend(rho1)[1]
    except EmptyBranchError:
        return 0.0


# -- Werner states


def werner_state(P: float) -> MixedState:
    return BellDiagonal.werner(P).to_state()


def werner_round1_weights(P: float) -> np.ndarray:
    """Unnormalized derived weights ``(P^2+Q^2, 2PQ, 2Q^2, 2Q^2)``; they sum to ``P^2 + 2PQ + 5Q^2``."""
    Q = (1 - P) / 3
    return np.array([P**2 + Q**2, 2 * P * Q, 2 * Q**2, 2 * Q**2])


def werner_round1_printed(P: float) -> np.ndarray:
    """Printed round-one coefficients ``(P^2+Q^2, 2PQ, 4Q^2, 4Q^2)`` renormalized to trace one."""
    Q = (1 - P) / 3
    w = np.array([P**2 + Q**2, 2 * P * Q, 4 * Q**2, 4 * Q**2])
    return w / w.sum()


def werner_round2_weights(P: float) -> np.ndarray:
    """Unnormalized printed round-two weights; they sum to ``P^4 + 10P^2Q^2 + 8PQ^3 + 13Q^4``."""
    Q = (1 - P) / 3
    x = 4 * (P**2 * Q**2 + Q**4)
    return np.array([P**4 + 2 * P**2 * Q**2 + 5 * Q**4, x, x, 8 * P * Q**3])


def rotate_pairs_y(state: State) -> MixedState:
    """pi/2 rotation of both qubits about y: Phi- <-> Psi+, Phi+ and Psi- fixed."""
    rho = core.as_mixed(state)
    r = core.ry(np.pi / 2)
    return core.as_mixed(core.apply_local_unitary(rho, (0, 1), np.kron(r, r)))


def _round_plus(left: State, right: State, kraus=None) -> tuple[MixedState, float]:
    out = filter_round(left, right, kraus)
    plus, _ = measure_pair_pm(out.post_state)
    return plus.post_state, out.field_projection_probability * plus.cumulative_probability


def werner_round(P: float, round: int) -> MixedState:
    """Output of the first or second Werner purification round (same-outcome branch, trace one)."""
    if not 0.5 < P <= 1:
        raise ValueError("Werner purification needs 1/2 < P <= 1")
    if round not in (1, 2):
        raise ValueError("round must be 1 or 2")
    rho1, _ = _round_plus(werner_state(P), werner_state(P))
    if round == 1:
        return rho1
    rot = rotate_pairs_y(rho1)
    rho2, _ = _round_plus(rot, rot)
    return rho2


def naive_reiteration(P: float, second_copy_round1: bool = True) -> MixedState:
    """Feed the round-one output back without rotations.

    With ``second_copy_round1`` both copies are round-one outputs; otherwise one
    copy is a fresh Werner state.
    """
    rho1 = werner_round(P, 1)
    other = rho1 if second_copy_round1 else werner_state(P)
    out, _ = _round_plus(rho1, other)
    return out


# -- MEMS


def mems_state(p: MemsParam) -> MixedState:
    g = p.g
    r = np.sqrt(1 + 3 * g**2)
    m = np.zeros((4, 4))
    m[0, 0] = m[3, 3] = (1 + r) / 6
    m[1, 1] = (2 - r) / 3
    m[0, 3] = m[3, 0] = g / 2
    return MixedState(TWO_QUBITS, m)


def mems_purify(p: MemsParam) -> MixedState:
    """Printed purified MEMS: diagonal ``(1/2, 0, 0, 1/2)``, coherence ``5/6 - 2/(3 sqrt(1+3g^2))``."""
    c = 5 / 6 - 2 / (3 * np.sqrt(1 + 3 * p.g**2))
    m = np.zeros((4, 4))
    m[0, 0] = m[3, 3] = 0.5
    m[0, 3] = m[3, 0] = c
    return MixedState(TWO_QUBITS, m)


def mems_purify_simulated(p: MemsParam, kraus: Optional[np.ndarray] = None) -> tuple[MixedState, float]:
    """Filter two MEMS copies and keep the same-outcome branch; returns (state, probability)."""
    rho = mems_state(p)
    return _round_plus(rho, rho, kraus)


# -- simplified single-photon variant


def simplified_map(params: SimplifiedParams) -> np.ndarray:
    """Printed effective operator on a crossing pair after the single-photon projection."""
    t1, t2 = params.theta1, params.theta2
    sign = (-1) ** params.m2
    k = np.zeros((4, 4), dtype=complex)
    k[1, 1] = np.cos(t1) * np.cos(t2)  # eg -> eg
    k[2, 1] = -1j * sign * np.sin(t1)  # eg -> ge
    k[1, 2] = np.sin(t2)  # ge -> eg
    return k


def simplified_map_exact(params: SimplifiedParams) -> np.ndarray:
    """The same operator from the exact propagator (first atom at lt, second at lt')."""
    return _pair_kraus_exact(1, params.lambda_t, params.lambda_t_prime)


def printed_primed_states(params: SimplifiedParams) -> tuple[PureState, PureState]:
    """Normalized Phi' and Psi' as printed."""
    t1, t2 = params.theta1, params.theta2
    c1, s1, c2, s2 = np.cos(t1), np.sin(t1), np.cos(t2), np.sin(t2)
    ph = -1j * (-1) ** params.m2
    # basis order ee, eg, ge, gg
    phi = np.array([-(s1**2), ph * c1 * c2 * s1, ph * c1 * c2 * s1, s2**2 + (c1 * c2) ** 2])
    psi = np.array([0, ph * s1 * s2, ph * s1 * s2, c1 * np.sin(2 * t2)])
    return PureState(TWO_QUBITS, phi).normalized(), PureState(TWO_QUBITS, psi).normalized()


def _simplified(k2: np.ndarray, P: float) -> tuple[MixedState, PureState, PureState, float]:
    k4 = np.einsum("acAC,bdBD->abcdABCD", k2.reshape(2, 2, 2, 2), k2.reshape(2, 2, 2, 2)).reshape(16, 16)
    plus = np.kron(core.PLUS, core.PLUS)
    states = []
    weights = []
    for bell in (PHI_PLUS, PSI_PLUS):
        v = bell.amplitudes
        out = k4 @ np.kron(v, v)
        # project qubits 1,2 onto |++>
        red = np.einsum("i,ij->j", plus.conj(), out.reshape(4, 4))
        n2 = float(np.vdot(red, red).real)
        weights.append(n2)
        states.append(PureState(TWO_QUBITS, red / np.sqrt(n2)) if n2 > core.EMPTY_BRANCH_TOL else None)
    w = np.array([P, 1 - P]) ** 2 * np.array(weights)
    if w.sum() < core.EMPTY_BRANCH_TOL:
        raise EmptyBranchError("simplified round has no surviving component", 0.0)
    m = sum(wi * s.density().matrix for wi, s in zip(w, states) if s is not None) / w.sum()
    phi_p, psi_p = states
    bell_fid = fidelity(PHI_MINUS, phi_p) if phi_p is not None else 0.0
    return MixedState(TWO_QUBITS, m), phi_p, psi_p, bell_fid


def simplified_round(params: SimplifiedParams, P: float) -> tuple[MixedState, PureState, PureState, float]:
    """Single-photon round with the printed effective map, both atoms 1 and 2 found in ``|+>``.

    Returns the output state, the conditional outputs Phi' and Psi' of the
    Phi+ x Phi+ and Psi+ x Psi+ components, and ``|<Phi-|Phi'>|^2``.
    """
    _simple(P)
    return _simplified(simplified_map(params), P)


def simplified_round_exact(params: SimplifiedParams, P: float) -> tuple[MixedState, PureState, PureState, float]:
    """As :func:`simplified_round`, with the pair operator taken from the exact propagator."""
    _simple(P)
    return _simplified(simplified_map_exact(params), P)


@dataclass(frozen=True)
class SimplifiedChoice:
    params: SimplifiedParams
    cos_residual: float
    three_photon_residual: float


def choose_simplified_params(search_depth: int, three_photon_threshold: Optional[float] = None) -> SimplifiedChoice:
    """Scan ``m1, m2 <= search_depth`` for the smallest ``max(|cos theta1|, |cos theta2|)``.

    With a threshold, only ``m2`` whose three-photon amplitude ``|sin(sqrt(3) theta2)|``
    lies below it are admitted. Ties go to the smallest ``(m1, m2)``.
    """
    if search_depth < 0:
        raise ValueError("search_depth must be non-negative")
    best = None
    for m1 in range(search_depth + 1):
        for m2 in range(search_depth + 1):
            sp = SimplifiedParams(m1, m2)
            r3 = abs(np.sin(np.sqrt(3) * sp.theta2))
            if three_photon_threshold is not None and r3 > three_photon_threshold:
                continue
            r = max(abs(np.cos(sp.theta1)), abs(np.cos(sp.theta2)))
            if best is None or r < best.cos_residual - 1e-15:
                best = SimplifiedChoice(sp, float(r), float(r3))
    if best is None:
        raise ValueError("no (m1, m2) satisfies the three-photon threshold")
    return best


# -- probe-atom photon detection


@dataclass(frozen=True, eq=False)
class ProbeResult:
    lambda_t: float
    k: int
    excited_probability: float
    excited_state: Optional[PureState]
    ground_state: Optional[PureState]


def probe_time(threshold: float = 0.05, lt_max: float = LT_MAX) -> tuple[float, int]:
    """Smallest ``lt = k pi / sqrt(2)`` (so ``sin(sqrt(2) lt) = 0``) with ``|cos(lt)| <= threshold``."""
    k = 1
    while True:
        lt = k * np.pi / SQRT2
        if lt > lt_max:
            raise ValueError(f"no probe time with |cos| <= {threshold} below lt = {lt_max:.6g}")
        if abs(np.cos(lt)) <= threshold:
            return float(lt), k
        k += 1


def probe_photon_detect(cavity_state: PureState, threshold: float = 0.05, lt_max: float = LT_MAX) -> ProbeResult:
    """Send a ground-state atom through a cavity holding at most two photons and read it out.

    Returns the probability of finding the atom excited and the conditional
    cavity states for both outcomes (None for an empty outcome).
    """
    f = cavity_state.space.factors
    if len(f) != 1 or f[0].kind != core.MODE or f[0].floor != 0:
        raise TypeError("expected a single Fock mode starting at the vacuum")
    amps = cavity_state.amplitudes / cavity_state.norm
    if np.linalg.norm(amps[3:]) > 1e-10:
        raise ValueError("cavity state has support above two photons")
    lt, k = probe_time(threshold, lt_max)
    window = np.zeros(4, dtype=complex)
    window[: min(3, len(amps))] = amps[:3]
    psi = core.tensor(core.basis_state(HilbertSpace.build(n_qubits=1), (G,)), PureState(HilbertSpace((core.mode(3),)), window))
    psi = core.apply_local_unitary(psi, (0, 1), jc_propagator(JCParams(lt, 3, lt_max=lt_max)))
    out = {}
    p_e = 0.0
    for label, idx in (("e", E), ("g", G)):
        proj = np.zeros((2, 2))
        proj[idx, idx] = 1
        rec = core.project(psi, (0,), proj, renormalize=False)
        if label == "e":
            p_e = rec.probability
        if rec.probability > core.EMPTY_BRANCH_TOL:
            cav = core.to_pure(core.partial_trace(rec.post_state.normalized(), (1,)))
            out[label] = cav
        else:
            out[label] = None
    return ProbeResult(lt, k, p_e, out["e"], out["g"])


# -- exact round through the oracle


def _prepare_line(atoms: tuple[int, int], state) -> str:
    if isinstance(state, BellDiagonal):
        return f"prepare-bell {atoms[0]} {atoms[1]} weights " + " ".join(repr(float(x)) for x in state.weights)
    m = _pair_state(state).matrix.reshape(-1)
    return f"prepare-rho {atoms[0]} {atoms[1]} matrix " + " ".join(repr(complex(x)).strip("()") for x in m)


def exact_round_script(n: int, left, right, outcome: str = "same", rotate_y: bool = False) -> str:
    """Protocol script for one round with ``n``-photon cavities at ``sqrt(n) lt = pi/2``.

    ``left`` and ``right`` are Bell weights or two-qubit states. With ``rotate_y``
    every atom first gets a pi/2 rotation about y.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    lt = repr(float(np.pi / (2 * np.sqrt(n))))
    lines = [
        "atoms 4",
        f"cavities 2 truncation {n + 2} floor {n - 2}",
        _prepare_line((1, 2), left),
        _prepare_line((3, 4), right),
        f"fock a {n}",
        f"fock b {n}",
    ]
    if rotate_y:
        lines += [f"rotate-y {i} angle {np.pi / 2!r}" for i in (1, 2, 3, 4)]
    lines += [
        f"interact 1 a lt {lt}",
        f"interact 3 a lt {lt}",
        f"interact 2 b lt {lt}",
        f"interact 4 b lt {lt}",
        f"measure-cavity a fock {n}",
        f"measure-cavity b fock {n}",
        f"measure-parity 1 2 basis pm outcome {outcome}",
        "trace-out 1 2 a b",
    ]
    return "\n".join(lines) + "\n"


def exact_round(n: int, left, right, outcome: str = "same", rotate_y: bool = False) -> RoundOutcome:
    """Full round with exact passages via the oracle, compared with the idealized round.

    ``ideal_fidelity`` is the Uhlmann fidelity between the exact two-qubit output
    and the idealized one for the same measurement branch.
    """
    from .oracle import run_script

    res = run_script(exact_round_script(n, left, right, outcome, rotate_y), lt_max=np.inf)
    field_p = res.log[-4].probability * res.log[-3].probability
    a, b = _pair_state(left), _pair_state(right)
    if rotate_y:
        a, b = rotate_pairs_y(a), rotate_pairs_y(b)
    plus, minus = measure_pair_pm(filter_round(a, b).post_state)
    ref = plus if outcome == "same" else minus
    f = state_fidelity(res.state, ref.post_state)
    branch = BRANCH_PLUS if outcome == "same" else BRANCH_MINUS
    return RoundOutcome(res.state, field_p, branch, res.probability, f)
