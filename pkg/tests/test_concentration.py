import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitydistill import concentration as conc
from cavitydistill import core
from cavitydistill.core import E, G, HilbertSpace, PureState
from cavitydistill.measures import BELL_STATES, PSI_PLUS, TWO_QUBITS, average_espp, espp, fidelity

ANCHOR = conc.InputPair(0.253964)
LT_K4 = 2 * np.sqrt(2) * np.pi
SQ2 = np.sqrt(2)


def exact_pair(k):
    """alpha making the ee branch exactly Bell at lt = k pi/sqrt2."""
    s2 = np.sin(k * np.pi / SQ2) ** 2
    return conc.InputPair(s2 / np.sqrt(1 + s2**2)), k * np.pi / SQ2


def test_input_pair_validation():
    with pytest.raises(ValueError):
        conc.InputPair(1.2)
    assert conc.InputPair(0.6).beta == pytest.approx(0.8)
    assert conc.InputPair(0.6).espp == pytest.approx(0.72)
    with pytest.raises(ValueError):
        conc.symmetric_branches(conc.InputPair(0.8), 1.0)


def test_anchor_branch():
    ee = conc.symmetric_branches(ANCHOR, LT_K4)[0]
    assert ee.probability == pytest.approx(0.12943447722694726, abs=1e-12)  # frozen oracle value
    assert ee.probability == pytest.approx(0.12944, abs=1e-5)  # quoted to five digits
    assert ee.espp >= 0.996


def test_alpha_zero_branch():
    lt = 1.234
    ee = conc.symmetric_branches(conc.InputPair(0.0), lt)[0]
    assert ee.probability == pytest.approx(np.sin(lt) ** 4, abs=1e-14)
    assert ee.espp == 0
    assert abs(ee.state.amplitude(0, 0)) == pytest.approx(1, abs=1e-12)


def test_exact_condition_gives_bell_branch():
    pair, lt = exact_pair(3)
    ee = conc.symmetric_branches(pair, lt)[0]
    assert abs(conc.condition_residual(pair.alpha, lt)) < 1e-14
    assert ee.espp == pytest.approx(1, abs=1e-12)
    assert ee.probability == pytest.approx(2 * pair.alpha**2, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1 / np.sqrt(2)), st.floats(0, 20 * np.pi))
def test_branches_sum_to_one_and_match_closed_form(alpha, lt):
    pair = conc.InputPair(alpha)
    outs = conc.symmetric_branches(pair, lt)
    assert sum(o.probability for o in outs) == pytest.approx(1, abs=1e-12)
    assert outs[0].probability == pytest.approx(conc.success_probability(alpha, lt), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1 / np.sqrt(2)), st.floats(0, 20 * np.pi))
def test_average_espp_never_exceeds_input(alpha, lt):
    outs = conc.symmetric_branches(conc.InputPair(alpha), lt)
    ens = [(o.probability, o.state) for o in outs if o.state is not None]
    norm = sum(p for p, _ in ens)
    avg = average_espp([(p / norm, s) for p, s in ens], (0,)) * norm
    assert avg <= 2 * alpha**2 + 1e-9


def test_branch_table_matches_branches():
    rng = np.random.default_rng(5)
    pair = conc.InputPair(0.41)
    lts = rng.uniform(0, 20 * np.pi, 25)
    probs, espps = conc.branch_table(pair, lts)
    for row, lt in enumerate(lts):
        outs = conc.symmetric_branches(pair, lt)
        assert np.allclose(probs[row], [o.probability for o in outs], atol=1e-12)
        assert np.allclose(espps[row], [o.espp for o in outs], atol=1e-12)


def test_average_espp_ideal_and_vanishing_cases():
    pair, lt = exact_pair(4)
    outs = conc.symmetric_branches(pair, lt)
    ens = [(o.probability, o.state) for o in outs if o.state is not None]
    assert average_espp(ens, (0,)) == pytest.approx(2 * pair.alpha**2, abs=1e-12)
    # cos^2(sqrt2 lt) = 1 together with sin(lt) -> 0: only lt = 0 is exact, large k comes close
    ks = np.arange(1, 5000)
    k = int(ks[np.argmax(np.abs(np.sin(ks * np.pi / SQ2)) < 1e-3)])
    for lt0, bound in ((0.0, 1e-15), (k * np.pi / SQ2, 1e-5)):
        outs = conc.symmetric_branches(conc.InputPair(0.5), lt0, lt_max=np.inf)
        ens = [(o.probability, o.state) for o in outs if o.state is not None]
        assert average_espp(ens, (0,)) <= bound


# -- time search


def test_optimal_time_anchor():
    r = conc.optimal_time(ANCHOR, 5 * np.pi)
    assert r.lambda_t_star == pytest.approx(LT_K4, abs=1e-3)
    # the optimizer may slide inside the epsilon window, above the exact-k probability
    assert r.p_max == pytest.approx(0.1294, abs=2e-4)
    assert abs(conc.condition_residual(ANCHOR.alpha, r.lambda_t_star)) <= 1e-3
    assert r.lambda_t_star <= 5 * np.pi and 0 <= r.p_max <= 1


def test_optimal_time_short_bound_favorable_alpha():
    pair, lt = exact_pair(1)
    assert lt < np.pi
    r = conc.optimal_time(pair, np.pi)
    assert r.feasible
    assert r.p_max >= 0.99 * 2 * pair.alpha**2


def test_generous_bound_approaches_ideal():
    for a in np.linspace(0.05, 0.7, 8):
        r = conc.optimal_time(conc.InputPair(a), 20 * np.pi)
        assert r.p_max >= 0.95 * 2 * a**2


def test_p_max_non_decreasing_in_bound():
    for a in np.linspace(0.02, 0.7, 12):
        pair = conc.InputPair(a)
        p = [conc.optimal_time(pair, b).p_max for b in (np.pi, 5 * np.pi, 20 * np.pi)]
        assert p[0] <= p[1] + 1e-12 and p[1] <= p[2] + 1e-12


def test_optimal_time_infeasible_and_validation():
    r = conc.optimal_time(conc.InputPair(0.6), 0.05, epsilon=1e-6)
    assert not r.feasible and r.p_max == 0
    with pytest.raises(ValueError):
        conc.optimal_time(ANCHOR, -1.0)


def test_k_condition_anchor():
    r = conc.k_condition_search(ANCHOR, 50, 1e-2, on="sin")
    assert r.k == 4
    assert np.sin(r.lambda_t_star) == pytest.approx(0.513288, abs=1e-6)


def test_k_condition_zero_ratio():
    r = conc.k_condition_search(conc.InputPair(0.0), 10, 1e-3)
    assert r.k == 0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 0.7))
def test_k_condition_equidistribution(alpha):
    r = conc.k_condition_search(conc.InputPair(alpha), 10_000, 1e-3)
    assert r.feasible and r.condition_residual <= 1e-3


def test_k_condition_validation():
    with pytest.raises(ValueError):
        conc.k_condition_search(ANCHOR, 0, 1e-3)
    with pytest.raises(ValueError):
        conc.k_condition_search(ANCHOR, 5, 1e-3, on="cos")


def test_trig_circle_rows():
    t = conc.trig_circle(50)
    assert t.shape == (51, 4)
    assert np.allclose(t[:, 2] ** 2 + t[:, 3] ** 2, 1)
    assert t[4, 3] == pytest.approx(0.513288, abs=1e-6)


# -- Gaussian spread


def test_gaussian_zero_width():
    g = conc.GaussianAlpha(0.3, 0.0)
    assert conc.gaussian_average_success(g, 2.0) == pytest.approx(conc.success_probability(0.3, 2.0))


def test_gaussian_spread_lowers_peak_but_keeps_argmax():
    a = 0.3
    lts = np.linspace(0.05, 3 * np.pi, 600)
    base = conc.success_probability(a, lts)
    best = lts[np.argmax(base)]
    vals = [conc.gaussian_average_success(conc.GaussianAlpha(a, s), best) for s in (0.0, 0.02, 0.05)]
    assert vals[0] > vals[1] > vals[2]
    for s in (0.02, 0.05):
        curve = conc.gaussian_average_success(conc.GaussianAlpha(a, s), lts)
        assert lts[np.argmax(curve)] == best


def test_gaussian_validation():
    with pytest.raises(ValueError):
        conc.GaussianAlpha(0.3, -0.1)
    with pytest.raises(ValueError):
        conc.gaussian_average_success(conc.GaussianAlpha(0.3, 0.1), 1.0, quadrature_points=4)


# -- asymmetric scheme and retrieval


def test_asymmetric_two_thirds():
    r = conc.asymmetric_run(conc.InputPair(np.sqrt(2 / 3)))
    assert r.probability == pytest.approx(2 / 3, abs=1e-12)
    assert r.lambda_t == pytest.approx(np.arcsin(2**-0.25), abs=1e-12)
    assert r.lambda_t == pytest.approx(0.99894, abs=1e-5)
    assert espp(r.state, (0,)) == pytest.approx(1, abs=1e-10)


def test_asymmetric_product_input():
    r = conc.asymmetric_run(conc.InputPair(1.0))
    assert r.probability == 0 and r.state is None


def test_asymmetric_needs_alpha_above_beta():
    with pytest.raises(ValueError):
        conc.asymmetric_run(conc.InputPair(0.5))


def two_mode(amps):
    sp = HilbertSpace((core.mode(1), core.mode(1)))
    return PureState(sp, amps)


def test_retrieve_single_excitation():
    atoms = conc.retrieve_entanglement(two_mode(np.array([0, 1, 1, 0]) / np.sqrt(2)))
    assert fidelity(PSI_PLUS, atoms) == pytest.approx(1, abs=1e-12)
    assert espp(atoms, (0,)) == pytest.approx(1, abs=1e-12)


def test_retrieve_vacuum():
    atoms = conc.retrieve_entanglement(two_mode([1, 0, 0, 0]))
    assert abs(atoms.amplitude(G, G)) == pytest.approx(1, abs=1e-12)


def test_retrieve_asymmetric_output():
    r = conc.asymmetric_run(conc.InputPair(0.9))
    modes = core.to_pure(r.state)
    atoms = conc.retrieve_entanglement(modes)
    assert max(fidelity(b, atoms) for b in BELL_STATES) == pytest.approx(1, abs=1e-10)
    assert atoms.space == TWO_QUBITS


def test_retrieve_rejects_wrong_inputs():
    with pytest.raises(TypeError):
        conc.retrieve_entanglement(PSI_PLUS)
    sp = HilbertSpace((core.mode(2), core.mode(2)))
    with pytest.raises(ValueError):
        conc.retrieve_entanglement(core.basis_state(sp, (2, 0)))


def test_symmetric_state_uses_e_first_convention():
    psi = conc.evolve_symmetric(conc.InputPair(0.5), 0.0)
    assert psi.amplitude(E, E, 1, 1) == pytest.approx(0.5)
