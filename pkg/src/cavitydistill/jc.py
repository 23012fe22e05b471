"""Resonant Jaynes-Cummings propagator on a qubit and a truncated Fock mode."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import MODE, QUBIT, State, apply_local_unitary

LT_MAX = 100 * np.pi


class FeasibilityWarning(UserWarning):
    """Interaction time beyond the configured coherence bound."""


@dataclass(frozen=True)
class JCParams:
    """Rescaled interaction time ``lambda_t`` and the Fock window ``floor..n_max``."""

    lambda_t: float
    n_max: int
    floor: int = 0
    lt_max: float = LT_MAX

    def __post_init__(self):
        if self.lambda_t < 0:
            raise ValueError("lambda_t must be non-negative")
        if self.n_max < 1 or not 0 <= self.floor < self.n_max:
            raise ValueError("Fock window needs 0 <= floor < n_max")
        if self.lambda_t > self.lt_max:
            warnings.warn(
                f"lambda_t = {self.lambda_t:.6g} exceeds the feasibility bound {self.lt_max:.6g}",
                FeasibilityWarning,
                stacklevel=3,
            )


def jc_propagator(params: JCParams) -> np.ndarray:
    """Interaction-picture propagator on qubit (x) mode, index = atom * N + (n - floor).

    Couples ``|e,n>`` with ``|g,n+1>`` when both lie inside the window. States whose
    partner falls outside the window are left unchanged, which is exact whenever the
    window obeys the excitation-counting rule.
    """
    lt = params.lambda_t
    lo, hi = params.floor, params.n_max
    N = hi - lo + 1
    u = np.zeros((2 * N, 2 * N), dtype=complex)
    # edge states without a partner inside the window: |e,n_max> and |g,floor>
    u[N - 1, N - 1] = 1.0
    u[N, N] = 1.0
    for k in range(N - 1):
        r = np.sqrt(lo + k + 1) * lt
        c, s = np.cos(r), np.sin(r)
        ie, ig = k, N + k + 1  # |e,n> and |g,n+1>
        u[ie, ie] = c
        u[ig, ig] = c
        u[ig, ie] = -1j * s
        u[ie, ig] = -1j * s
    return u


def passage(state: State, atom_index: int, mode_index: int, lambda_t: float, lt_max: float = LT_MAX) -> State:
    """Let an atom interact with a cavity mode for rescaled time ``lambda_t``."""
    fa = state.space.factors[atom_index]
    fm = state.space.factors[mode_index]
    if fa.kind != QUBIT:
        raise TypeError(f"factor {atom_index} is not a qubit")
    if fm.kind != MODE:
        raise TypeError(f"factor {mode_index} is not a Fock mode")
    u = jc_propagator(JCParams(lambda_t, fm.n_max, fm.floor, lt_max))
    return apply_local_unitary(state, (atom_index, mode_index), u)


def excitation_number(space) -> np.ndarray:
    """Diagonal of the total excitation operator (excited atoms plus photons)."""
    grids = []
    for f in space.factors:
        if f.kind == QUBIT:
            grids.append(np.array([1.0, 0.0]))
        else:
            grids.append(np.arange(f.floor, f.n_max + 1, dtype=float))
    total = np.zeros(())
    for g in grids:
        total = np.add.outer(total, g)
    return total.reshape(-1)
