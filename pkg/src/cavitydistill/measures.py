"""Entanglement and mixedness functionals, plus the two-qubit Bell basis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ATOL,
    HilbertSpace,
    MixedState,
    PureState,
    State,
    as_mixed,
    partial_transpose,
    schmidt_coefficients,
)

TWO_QUBITS = HilbertSpace.build(n_qubits=2)

# |0> is the excited state e, matching the (e, g) qubit ordering
_S = 1 / np.sqrt(2)
PHI_PLUS = PureState(TWO_QUBITS, [_S, 0, 0, _S])
PHI_MINUS = PureState(TWO_QUBITS, [_S, 0, 0, -_S])
PSI_PLUS = PureState(TWO_QUBITS, [0, _S, _S, 0])
PSI_MINUS = PureState(TWO_QUBITS, [0, _S, -_S, 0])
BELL_STATES = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)
BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")
BELL_MATRIX = np.column_stack([b.amplitudes for b in BELL_STATES])


@dataclass(frozen=True)
class BellDiagonal:
    """Weights of |Phi+>, |Phi->, |Psi+>, |Psi-> in a Bell-diagonal two-qubit state."""

    a_plus: float
    a_minus: float = 0.0
    b_plus: float = 0.0
    b_minus: float = 0.0

    def __post_init__(self):
        w = self.weights
        if (w < -ATOL).any():
            raise ValueError(f"negative Bell weight in {w}")
        if abs(w.sum() - 1) > ATOL:
            raise ValueError(f"Bell weights sum to {w.sum()}, not 1")

    @classmethod
    def from_weights(cls, weights: Iterable[float], normalize: bool = False) -> "BellDiagonal":
        w = np.asarray(list(weights), dtype=float)
        if normalize:
            w = w / w.sum()
        return cls(*(float(x) for x in w))

    @classmethod
    def werner(cls, p: float) -> "BellDiagonal":
        q = (1 - p) / 3
        return cls(p, q, q, q)

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.a_plus, self.a_minus, self.b_plus, self.b_minus])

    def to_state(self) -> MixedState:
        return MixedState(TWO_QUBITS, (BELL_MATRIX * self.weights) @ BELL_MATRIX.conj().T)

    def negativity(self) -> float:
        return max(0.0, 2 * float(self.weights.max()) - 1)


def _pure(state: State) -> PureState:
    if not isinstance(state, PureState):
        raise TypeError("this measure is defined for pure states only")
    return state


def espp(state: PureState, bipartition: Sequence[int]) -> float:
    """Entanglement of single-pair purification: twice the smallest squared Schmidt coefficient.

    Only non-vanishing coefficients count, so a Fock-mode pair whose support is
    effectively two-dimensional is treated like a qubit pair.
    """
    s = schmidt_coefficients(_pure(state), bipartition)
    s = s[s > 1e-12]
    if len(s) < 2:
        return 0.0
    return float(2 * s[-1] ** 2)


def average_espp(ensemble: Iterable[tuple[float, PureState]], bipartition: Sequence[int]) -> float:
    """Probability-weighted ESPP of an ensemble of pure states."""
    total = 0.0
    psum = 0.0
    for p, psi in ensemble:
        if p < 0:
            raise ValueError("negative ensemble probability")
        psum += p
        if p > 0:
            total += p * espp(psi, bipartition)
    if abs(psum - 1) > 1e-9:
        raise ValueError(f"ensemble probabilities sum to {psum}")
    return total


def negativity(state: State, bipartition: Sequence[int] = (0,)) -> float:
    """Twice the absolute sum of the negative partial-transpose eigenvalues.

    With this doubled convention a Bell state has negativity 1 and a
    Bell-diagonal state with dominant weight A has negativity 2A - 1.
    """
    ev = np.linalg.eigvalsh(partial_transpose(state, bipartition))
    return max(0.0, float(-2 * ev[ev < 0].sum()))


def linear_entropy(state: State) -> float:
    """Normalized linear entropy d/(d-1) (1 - Tr rho^2); (4/3)(1 - Tr rho^2) for two qubits."""
    rho = as_mixed(state)
    d = rho.space.dim
    return float(d / (d - 1) * (1 - rho.purity()))


def fidelity(reference: PureState, state: State) -> float:
    """Overlap <ref|rho|ref> (or |<ref|psi>|^2 for a pure state)."""
    ref = reference.amplitudes
    if state.space.dim != ref.shape[0]:
        raise ValueError("reference and state live in different spaces")
    if isinstance(state, PureState):
        return float(abs(np.vdot(ref, state.amplitudes)) ** 2)
    return float(np.real(ref.conj() @ state.matrix @ ref))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    # eigenvalues at rounding level would contribute ~1e-8 after the square root
    w = np.where(w > 1e-14 * max(1.0, w.max()), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def state_fidelity(rho: State, sigma: State) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between two density matrices."""
    a, b = as_mixed(rho).matrix, as_mixed(sigma).matrix
    if a.shape != b.shape:
        raise ValueError("states live in different spaces")
    r = _psd_sqrt(a)
    w = np.linalg.eigvalsh(r @ b @ r)
    w = np.where(w > 1e-14 * max(1.0, w.max()), w, 0.0)
    return float(min(1.0, np.sum(np.sqrt(w)) ** 2))


def bell_decompose(state: State) -> tuple[BellDiagonal, float]:
    """Bell-basis diagonal weights and the Frobenius norm of the discarded off-diagonal part."""
    rho = as_mixed(state)
    if rho.space.dims != (2, 2):
        raise ValueError("Bell decomposition needs a two-qubit state")
    m = BELL_MATRIX.conj().T @ rho.matrix @ BELL_MATRIX
    w = np.clip(np.real(np.diag(m)), 0, None)
    residual = float(np.linalg.norm(m - np.diag(np.diag(m))))
    return BellDiagonal.from_weights(w, normalize=True), residual
