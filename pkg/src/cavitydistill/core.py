"""Composite qubit/Fock states and the primitive operations on them.

States are immutable: every operation returns a new value. Factor order is
fixed at construction; by convention atoms come before modes, and a qubit
has basis order (e, g) so that ``|e>`` is index 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

ATOL = 1e-12
POSITIVITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
EMPTY_BRANCH_TOL = 1e-14

QUBIT = "qubit"
MODE = "mode"

E, G = 0, 1


class EmptyBranchError(ValueError):
    """Raised when a post-selected outcome has (numerically) zero probability."""

    def __init__(self, message: str, probability: float = 0.0):
        super().__init__(message)
        self.probability = probability


@dataclass(frozen=True)
class Factor:
    """One tensor factor: a qubit, or a Fock mode holding photon numbers floor..floor+dim-1."""

    kind: str
    dim: int
    floor: int = 0

    def __post_init__(self):
        if self.kind not in (QUBIT, MODE):
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("every factor needs dimension >= 2")
        if self.kind == QUBIT and (self.dim != 2 or self.floor != 0):
            raise ValueError("a qubit factor has dimension 2")
        if self.floor < 0:
            raise ValueError("photon-number floor must be non-negative")

    @property
    def n_max(self) -> int:
        return self.floor + self.dim - 1


def qubit() -> Factor:
    return Factor(QUBIT, 2)


def mode(n_max: int, floor: int = 0) -> Factor:
    """Fock mode truncated to photon numbers ``floor..n_max``."""
    return Factor(MODE, n_max - floor + 1, floor)


@dataclass(frozen=True)
class HilbertSpace:
    factors: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a Hilbert space needs at least one factor")

    @classmethod
    def build(cls, n_qubits: int = 0, modes: Sequence[int] = ()) -> "HilbertSpace":
        """Atoms first, then modes given by their ``n_max``."""
        return cls((qubit(),) * n_qubits + tuple(mode(n) for n in modes))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self):
        return len(self.factors)

    def __add__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.factors + other.factors)

    def subspace(self, indices: Sequence[int]) -> "HilbertSpace":
        return HilbertSpace(tuple(self.factors[i] for i in indices))

    def basis_index(self, labels: Sequence[int]) -> int:
        """Flat index of a product basis state given per-factor local indices."""
        return int(np.ravel_multi_index(tuple(labels), self.dims))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.space.dim,):
            raise ValueError(f"expected {self.space.dim} amplitudes, got {amps.shape[0]}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "PureState":
        n = self.norm
        if n < EMPTY_BRANCH_TOL:
            raise EmptyBranchError("cannot normalize a null vector", 0.0)
        return PureState(self.space, self.amplitudes / n)

    def density(self) -> "MixedState":
        v = self.amplitudes
        return MixedState(self.space, np.outer(v, v.conj()))

    def amplitude(self, *labels: int) -> complex:
        return complex(self.amplitudes[self.space.basis_index(labels)])


@dataclass(frozen=True, eq=False)
class MixedState:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "MixedState":
        t = self.trace
        if t < EMPTY_BRANCH_TOL:
            raise EmptyBranchError("cannot normalize a zero-trace operator", max(t, 0.0))
        return MixedState(self.space, self.matrix / t)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def check(self, atol: float = ATOL) -> None:
        """Raise if this is not a valid density matrix."""
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=atol):
            raise ValueError("density matrix is not Hermitian")
        if abs(self.trace - 1) > atol:
            raise ValueError(f"density matrix has trace {self.trace}")
        if self.eigenvalues().min() < -POSITIVITY_TOL:
            raise ValueError("density matrix has a negative eigenvalue")


State = Union[PureState, MixedState]


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcome: str
    probability: float
    post_state: State


def as_mixed(state: State) -> MixedState:
    return state.density() if isinstance(state, PureState) else state


def to_pure(state: State, tol: float = POSITIVITY_TOL) -> PureState:
    """Return the pure state a rank-one density matrix describes (global phase is arbitrary)."""
    if isinstance(state, PureState):
        return state
    w, v = np.linalg.eigh(state.matrix)
    tr = w.sum()
    if abs(w[-1] - tr) > tol * max(1.0, abs(tr)):
        raise ValueError("state is not pure")
    return PureState(state.space, v[:, -1])


def tensor(a: State, b: State) -> State:
    space = a.space + b.space
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(space, np.kron(a.amplitudes, b.amplitudes))
    return MixedState(space, np.kron(as_mixed(a).matrix, as_mixed(b).matrix))


def basis_state(space: HilbertSpace, labels: Sequence[int]) -> PureState:
    """Product basis state; ``labels`` are local indices (for modes: photon number minus floor)."""
    v = np.zeros(space.dim, dtype=complex)
    v[space.basis_index(labels)] = 1.0
    return PureState(space, v)


def fock_state(n: int, n_max: int, floor: int = 0) -> PureState:
    space = HilbertSpace((mode(n_max, floor),))
    if not floor <= n <= n_max:
        raise ValueError(f"photon number {n} outside {floor}..{n_max}")
    return basis_state(space, [n - floor])


def _check_targets(space: HilbertSpace, targets: Sequence[int]) -> tuple[int, ...]:
    targets = tuple(int(t) for t in targets)
    if not targets:
        raise ValueError("no target factors given")
    if len(set(targets)) != len(targets):
        raise ValueError("repeated target factor")
    for t in targets:
        if not 0 <= t < len(space):
            raise IndexError(f"factor index {t} out of range for {len(space)} factors")
    return targets


def _apply_left(tensor_: np.ndarray, op: np.ndarray, targets, dims, offset: int = 0) -> np.ndarray:
    # contract ``op`` (shape (D, D) over the target factors) into axes offset+targets
    k = len(targets)
    sub = [dims[t] for t in targets]
    op_t = op.reshape(sub + sub)
    axes = [offset + t for t in targets]
    out = np.tensordot(op_t, tensor_, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_operator(state: State, targets: Sequence[int], op: np.ndarray) -> State:
    """Apply an arbitrary (not necessarily unitary) operator on the target factors."""
    space = state.space
    targets = _check_targets(space, targets)
    op = np.asarray(op, dtype=complex)
    d = int(np.prod([space.dims[t] for t in targets]))
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match target dimension {d}")
    dims = space.dims
    n = len(dims)
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape(dims)
        psi = _apply_left(psi, op, targets, dims)
        return PureState(space, psi.reshape(-1))
    rho = state.matrix.reshape(dims + dims)
    rho = _apply_left(rho, op, targets, dims)
    rho = _apply_left(rho, op.conj(), targets, dims, offset=n)
    return MixedState(space, rho.reshape(space.dim, space.dim))


def is_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), atol=tol
    )


def apply_local_unitary(state: State, targets: Sequence[int], u: np.ndarray) -> State:
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    return apply_operator(state, targets, u)


def permute_factors(state: State, order: Sequence[int]) -> State:
    """Reorder factors so that new factor i is old factor ``order[i]``."""
    order = tuple(order)
    if sorted(order) != list(range(len(state.space))):
        raise ValueError("order must be a permutation of the factor indices")
    space = state.space.subspace(order)
    dims = state.space.dims
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape(dims).transpose(order)
        return PureState(space, psi.reshape(-1))
    n = len(dims)
    rho = state.matrix.reshape(dims + dims).transpose(order + tuple(n + i for i in order))
    return MixedState(space, rho.reshape(space.dim, space.dim))


def partial_trace(state: State, keep: Sequence[int]) -> MixedState:
    """Reduced density matrix on the ``keep`` factors (kept in ascending order)."""
    space = state.space
    keep = tuple(sorted(_check_targets(space, keep)))
    dims = space.dims
    traced = [i for i in range(len(dims)) if i not in keep]
    sub = space.subspace(keep)
    if isinstance(state, PureState):
        psi = state.amplitudes.reshape(dims)
        psi = np.moveaxis(psi, keep, range(len(keep))).reshape(sub.dim, -1)
        return MixedState(sub, psi @ psi.conj().T)
    if not traced:
        return state
    n = len(dims)
    rho = state.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for t in traced:
        col[t] = row[t]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, rho)
    return MixedState(sub, red.reshape(sub.dim, sub.dim))


def partial_transpose(state: State, subsystem: Union[int, Sequence[int]]) -> np.ndarray:
    """Transpose the given factor(s) of a density matrix; returns the raw matrix."""
    rho = as_mixed(state)
    targets = (subsystem,) if np.isscalar(subsystem) else tuple(subsystem)
    targets = _check_targets(rho.space, targets)
    if len(targets) == len(rho.space):
        raise ValueError("a bipartition needs factors on both sides")
    dims = rho.space.dims
    n = len(dims)
    perm = list(range(2 * n))
    for t in targets:
        perm[t], perm[n + t] = perm[n + t], perm[t]
    m = rho.matrix.reshape(dims + dims).transpose(perm)
    return m.reshape(rho.space.dim, rho.space.dim)


def _is_projector(p: np.ndarray, tol: float = POSITIVITY_TOL) -> bool:
    return np.allclose(p @ p, p, atol=tol) and np.allclose(p, p.conj().T, atol=tol)


def project(
    state: State,
    targets: Sequence[int],
    projector: np.ndarray,
    renormalize: bool = True,
    outcome: str = "",
) -> MeasurementRecord:
    """Apply a projector on the target factors and report the outcome probability.

    With ``renormalize`` set, a branch of probability below 1e-14 raises
    :class:`EmptyBranchError`.
    """
    projector = np.asarray(projector, dtype=complex)
    if not _is_projector(projector):
        raise ValueError("projector must be Hermitian and idempotent")
    post = apply_operator(state, targets, projector)
    if isinstance(state, PureState):
        p = post.norm ** 2 / state.norm ** 2
    else:
        p = post.trace / state.trace
    p = float(min(max(p, 0.0), 1.0))
    if renormalize:
        if p < EMPTY_BRANCH_TOL:
            raise EmptyBranchError(f"outcome {outcome!r} has probability {p:.3g}", p)
        post = post.normalized()
    return MeasurementRecord(outcome, p, post)


def schmidt_coefficients(state: PureState, bipartition: Sequence[int]) -> np.ndarray:
    """Schmidt coefficients (descending) between ``bipartition`` and the remaining factors."""
    if not isinstance(state, PureState):
        raise TypeError("Schmidt decomposition needs a pure state")
    space = state.space
    left = _check_targets(space, bipartition)
    right = tuple(i for i in range(len(space)) if i not in left)
    if not right:
        raise ValueError("a bipartition needs factors on both sides")
    dims = space.dims
    psi = state.amplitudes.reshape(dims).transpose(left + right)
    dl = int(np.prod([dims[i] for i in left]))
    s = np.linalg.svd(psi.reshape(dl, -1) / state.norm, compute_uv=False)
    return s


# single-qubit gates in the (e, g) basis


def rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def rx(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation(axis: str, angle: float) -> np.ndarray:
    try:
        return {"x": rx, "y": ry, "z": rz}[axis](angle)
    except KeyError:
        raise ValueError(f"unknown rotation axis {axis!r}") from None


PLUS = np.array([1, 1]) / np.sqrt(2)
MINUS = np.array([1, -1]) / np.sqrt(2)


def qubit_projector(basis: str, outcome: str) -> np.ndarray:
    """Rank-one projector for outcome ``e``/``g`` (z basis) or ``+``/``-`` (x basis)."""
    vectors = {
        "z": {"e": np.array([1, 0]), "g": np.array([0, 1])},
        "x": {"+": PLUS, "-": MINUS},
    }
    basis = "x" if basis == "pm" else basis
    try:
        v = vectors[basis][outcome]
    except KeyError:
        raise ValueError(f"no outcome {outcome!r} in basis {basis!r}") from None
    return np.outer(v, v.conj()).astype(complex)
