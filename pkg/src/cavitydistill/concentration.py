"""Symmetric and asymmetric entanglement concentration onto two cavity modes.

Two atoms in ``alpha|ee> + beta|gg>`` cross one cavity each. In the symmetric
scheme both cavities start with one photon and the atoms are post-selected in
``|ee>``; in the asymmetric scheme the cavities start empty and the atoms are
post-selected in ``|gg>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import core
from .core import E, G, EmptyBranchError, HilbertSpace, PureState
from .jc import LT_MAX, JCParams, jc_propagator, passage
from .measures import espp

SQRT2 = np.sqrt(2.0)
ALPHA_SYMMETRIC_MAX = 1 / SQRT2
GRID_STEP = np.pi / 400
BRANCHES = ("ee", "eg", "ge", "gg")


@dataclass(frozen=True)
class InputPair:
    """Amplitudes of the input ``alpha|ee> + beta|gg>`` with real ``alpha`` in [0, 1]."""

    alpha: float

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [0, 1]")

    @property
    def beta(self) -> float:
        return float(np.sqrt(1 - self.alpha**2))

    @property
    def espp(self) -> float:
        return 2 * min(self.alpha, self.beta) ** 2

    def atom_state(self) -> PureState:
        space = HilbertSpace.build(n_qubits=2)
        return PureState(space, [self.alpha, 0, 0, self.beta])


@dataclass(frozen=True, eq=False)
class ConcentrationOutcome:
    branch: str
    state: Optional[PureState]
    probability: float
    espp: float


@dataclass(frozen=True)
class GaussianAlpha:
    alpha_bar: float
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class TimeSearchResult:
    lambda_t_star: float
    p_max: float
    condition_residual: float
    k: Optional[int] = None
    feasible: bool = True
    branch_espp: float = float("nan")


def _symmetric_pair(pair: InputPair) -> InputPair:
    if pair.alpha > pair.beta + 1e-15:
        raise ValueError("the symmetric scheme needs alpha <= beta")
    return pair


def success_probability(alpha, lambda_t):
    """Probability of finding both atoms excited in the symmetric scheme."""
    alpha = np.asarray(alpha, dtype=float)
    beta2 = 1 - alpha**2
    return alpha**2 * np.cos(SQRT2 * lambda_t) ** 4 + beta2 * np.sin(lambda_t) ** 4


def condition_residual(alpha, lambda_t):
    """``alpha cos^2(sqrt2 lt) - beta sin^2(lt)``; zero when the ee branch is a Bell state."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.sqrt(1 - alpha**2)
    return alpha * np.cos(SQRT2 * lambda_t) ** 2 - beta * np.sin(lambda_t) ** 2


def evolve_symmetric(pair: InputPair, lambda_t: float, lt_max: float = LT_MAX) -> PureState:
    """Atoms 1, 2 with cavities a, b (one photon each) after equal interaction times."""
    cavities = core.tensor(core.fock_state(1, 2), core.fock_state(1, 2))
    psi = core.tensor(pair.atom_state(), cavities)
    psi = passage(psi, 0, 2, lambda_t, lt_max)
    return passage(psi, 1, 3, lambda_t, lt_max)


def _branch(psi: PureState, labels: tuple[int, int], name: str) -> ConcentrationOutcome:
    proj = np.zeros((4, 4), dtype=complex)
    idx = 2 * labels[0] + labels[1]
    proj[idx, idx] = 1
    try:
        rec = core.project(psi, (0, 1), proj, outcome=name)
    except EmptyBranchError as err:
        return ConcentrationOutcome(name, None, err.probability, 0.0)
    modes = core.to_pure(core.partial_trace(rec.post_state, (2, 3)))
    return ConcentrationOutcome(name, modes, rec.probability, espp(modes, (0,)))


def symmetric_branches(pair: InputPair, lambda_t: float, lt_max: float = LT_MAX) -> list[ConcentrationOutcome]:
    """All four post-selected two-mode branches, computed by exact evolution."""
    psi = evolve_symmetric(_symmetric_pair(pair), lambda_t, lt_max)
    labels = {"ee": (E, E), "eg": (E, G), "ge": (G, E), "gg": (G, G)}
    return [_branch(psi, labels[b], b) for b in BRANCHES]


def branch_table(pair: InputPair, lambda_ts) -> tuple[np.ndarray, np.ndarray]:
    """Batched exact evolution: branch probabilities and ESPPs, shape (len(lambda_ts), 4).

    Same computation as :func:`symmetric_branches`, vectorized over interaction
    times; columns follow :data:`BRANCHES`.
    """
    pair = _symmetric_pair(pair)
    lts = np.atleast_1d(np.asarray(lambda_ts, dtype=float))
    u = np.stack([jc_propagator(JCParams(lt, 2)) for lt in lts]).reshape(-1, 2, 3, 2, 3)
    psi0 = np.zeros((2, 2, 3, 3), dtype=complex)
    psi0[E, E, 1, 1] = pair.alpha
    psi0[G, G, 1, 1] = pair.beta
    psi = np.einsum("lxpam,abmn->lxbpn", u, psi0)
    psi = np.einsum("lyqbn,lxbpn->lxypq", u, psi)
    blocks = psi.reshape(len(lts), 4, 3, 3)
    probs = np.einsum("lkpq,lkpq->lk", blocks, blocks.conj()).real
    s = np.linalg.svd(blocks, compute_uv=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = s / np.sqrt(probs)[..., None]
    s = np.nan_to_num(s)
    live = s > 1e-12
    rank = live.sum(-1)
    smallest = np.where(live, s, np.inf).min(-1)
    espps = np.where(rank >= 2, 2 * smallest**2, 0.0)
    return probs, espps


def _golden_max(f, a: float, b: float, tol: float = 1e-12) -> float:
    invphi = (np.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def _window_edge(g, x0: float, step: float, direction: int, limit: float) -> float:
    # walk from a feasible point x0 until |residual| > eps, then bisect the edge
    x = x0
    for _ in range(64):
        nxt = x + direction * step
        if (direction > 0 and nxt >= limit) or (direction < 0 and nxt <= limit):
            if g(limit) <= 0:
                return limit
            return brentq(g, x, limit, xtol=1e-14)
        if g(nxt) > 0:
            return brentq(g, x, nxt, xtol=1e-14) if direction > 0 else brentq(g, nxt, x, xtol=1e-14)
        x = nxt
    return x


def optimal_time(
    pair: InputPair,
    bound: float,
    epsilon: float = 1e-3,
    step: float = GRID_STEP,
) -> TimeSearchResult:
    """Maximize the ee-branch probability over ``lambda_t <= bound`` subject to
    ``|alpha cos^2(sqrt2 lt) - beta sin^2(lt)| <= epsilon``.

    A coarse grid locates the feasible windows, each window edge is bisected,
    and the probability is maximized inside every window by golden-section
    search. Ties go to the smallest interaction time.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    pair = _symmetric_pair(pair)
    a = pair.alpha
    f = lambda x: float(condition_residual(a, x))  # noqa: E731
    g = lambda x: abs(f(x)) - epsilon  # noqa: E731
    xs = np.append(np.arange(0.0, bound, step), bound)
    r = condition_residual(a, xs)
    absr = np.abs(r)

    centres = []
    for i in range(len(xs) - 1):
        if r[i] == 0 or r[i] * r[i + 1] < 0:
            centres.append(xs[i] if r[i] == 0 else brentq(f, xs[i], xs[i + 1], xtol=1e-15))
    # tangential touches of zero (no sign change) show up as local minima of |r|
    for i in range(1, len(xs) - 1):
        crossing = r[i - 1] * r[i] <= 0 or r[i] * r[i + 1] <= 0
        if not crossing and absr[i] <= absr[i - 1] and absr[i] <= absr[i + 1]:
            res = minimize_scalar(lambda x: abs(f(x)), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                  options={"xatol": 1e-13})
            if abs(f(res.x)) <= epsilon:
                centres.append(float(res.x))
    if absr[0] <= epsilon:
        centres.append(0.0)
    if absr[-1] <= epsilon:
        centres.append(float(bound))

    if not centres:
        i = int(np.argmin(absr))
        return TimeSearchResult(float(xs[i]), 0.0, float(r[i]), feasible=False, branch_espp=0.0)

    best = None
    prob = lambda x: float(success_probability(a, x))  # noqa: E731
    for c in sorted(set(centres)):
        lo = _window_edge(g, c, step / 8, -1, 0.0)
        hi = _window_edge(g, c, step / 8, +1, float(bound))
        x = _golden_max(prob, lo, hi) if hi - lo > 1e-13 else c
        # golden search may settle on an edge; compare against the edges themselves
        cands = [x, lo, hi, c]
        cands = [y for y in cands if abs(f(y)) <= epsilon * (1 + 1e-9)]
        y = max(cands, key=lambda t: (prob(t), -t))
        if best is None or prob(y) > prob(best) + 1e-15:
            best = y
    outcome = symmetric_branches(pair, best)[0]
    return TimeSearchResult(float(best), prob(best), f(best), branch_espp=outcome.espp)


def k_condition_search(
    pair: InputPair,
    k_max: int,
    epsilon: float,
    on: str = "sin2",
) -> TimeSearchResult:
    """Smallest integer k with ``sin^2(k pi/sqrt2)`` within ``epsilon`` of ``alpha/beta``.

    Times ``lt = k pi / sqrt2`` make ``cos^2(sqrt2 lt) = 1``, so matching the
    second condition turns the ee branch into a Bell state. With ``on="sin"``
    the tolerance applies to ``|sin(k pi/sqrt2)|`` against ``sqrt(alpha/beta)``.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    pair = _symmetric_pair(pair)
    ratio = pair.alpha / pair.beta
    k = np.arange(0, k_max + 1)
    s = np.sin(k * np.pi / SQRT2)
    if on == "sin2":
        resid = np.abs(s**2 - ratio)
    elif on == "sin":
        resid = np.abs(np.abs(s) - np.sqrt(ratio))
    else:
        raise ValueError("on must be 'sin2' or 'sin'")
    hits = np.nonzero(resid <= epsilon)[0]
    if len(hits) == 0:
        i = int(np.argmin(resid))
        return TimeSearchResult(float(k[i] * np.pi / SQRT2), 0.0, float(resid[i]), int(k[i]), feasible=False)
    kk = int(hits[0])
    lt = kk * np.pi / SQRT2
    return TimeSearchResult(float(lt), float(success_probability(pair.alpha, lt)), float(resid[kk]), kk)


def trig_circle(k_max: int = 50) -> np.ndarray:
    """Rows (k, theta, cos theta, sin theta) for theta = k pi / sqrt2, k = 0..k_max."""
    k = np.arange(k_max + 1)
    theta = k * np.pi / SQRT2
    return np.column_stack([k, theta, np.cos(theta), np.sin(theta)])


def gaussian_average_success(g: GaussianAlpha, lambda_t, quadrature_points: int = 64):
    """Success probability averaged over a Gaussian spread of alpha clipped to [0, 1/sqrt2].

    Uses Gauss-Legendre quadrature on the part of the clipped support within
    eight standard deviations of the mean.
    """
    if quadrature_points < 16:
        raise ValueError("need at least 16 quadrature points")
    if g.sigma == 0:
        return success_probability(g.alpha_bar, lambda_t)
    lo = max(0.0, g.alpha_bar - 8 * g.sigma)
    hi = min(ALPHA_SYMMETRIC_MAX, g.alpha_bar + 8 * g.sigma)
    if hi <= lo:
        raise ValueError("Gaussian has no weight on [0, 1/sqrt2]")
    x, w = np.polynomial.legendre.leggauss(quadrature_points)
    a = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = w * np.exp(-0.5 * ((a - g.alpha_bar) / g.sigma) ** 2)
    w = w / w.sum()
    lt = np.asarray(lambda_t, dtype=float)
    vals = success_probability(a[:, None], lt.reshape(1, -1))
    out = w @ vals
    return float(out[0]) if lt.ndim == 0 else out


class AsymmetricResult(NamedTuple):
    lambda_t: float
    state: PureState
    probability: float


def asymmetric_run(pair: InputPair, lt_max: float = LT_MAX) -> AsymmetricResult:
    """Empty cavities, ``sin^2(lt) = beta/alpha``, atoms post-selected in ``|gg>``."""
    if pair.alpha <= pair.beta:
        raise ValueError("the asymmetric scheme needs alpha > beta")
    lt = float(np.arcsin(np.sqrt(pair.beta / pair.alpha)))
    cavities = core.tensor(core.fock_state(0, 1), core.fock_state(0, 1))
    psi = core.tensor(pair.atom_state(), cavities)
    psi = passage(psi, 0, 2, lt, lt_max)
    psi = passage(psi, 1, 3, lt, lt_max)
    proj = np.zeros((4, 4))
    proj[3, 3] = 1
    try:
        rec = core.project(psi, (0, 1), proj, outcome="gg")
    except EmptyBranchError as err:
        return AsymmetricResult(lt, None, err.probability)
    modes = core.to_pure(core.partial_trace(rec.post_state, (2, 3)))
    return AsymmetricResult(lt, modes, rec.probability)


def retrieve_entanglement(two_mode: PureState, tol: float = 1e-10) -> PureState:
    """Swap a two-mode state with at most one photon per mode onto two fresh ground-state atoms.

    Each atom spends a quarter Rabi cycle (``lt = pi/2``) in its cavity, which
    maps ``|g,1> -> -i|e,0>`` and leaves ``|g,0>`` alone. Returns the atomic state.
    """
    dims = two_mode.space.dims
    if len(dims) != 2 or any(f.kind != core.MODE for f in two_mode.space.factors):
        raise TypeError("expected a state of two Fock modes")
    if any(f.floor != 0 for f in two_mode.space.factors):
        raise ValueError("modes must include the vacuum")
    amps = two_mode.amplitudes.reshape(dims) / two_mode.norm
    outside = amps.copy()
    outside[:2, :2] = 0
    if np.linalg.norm(outside) > tol:
        raise ValueError("state has support outside the {0,1} x {0,1} photon subspace")
    atoms = core.basis_state(HilbertSpace.build(n_qubits=2), (G, G))
    psi = core.tensor(atoms, two_mode)
    psi = passage(psi, 0, 2, np.pi / 2)
    psi = passage(psi, 1, 3, np.pi / 2)
    vac = np.zeros((dims[0] * dims[1],) * 2)
    vac[0, 0] = 1
    rec = core.project(psi, (2, 3), vac, outcome="vacuum")
    return core.to_pure(core.partial_trace(rec.post_state, (0, 1)))
