import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

import analytic
from cavitydistill import core
from cavitydistill import purification as pur
from cavitydistill.core import E, G, EmptyBranchError, PureState
from cavitydistill.measures import (
    BELL_STATES,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    BellDiagonal,
    bell_decompose,
    fidelity,
    linear_entropy,
    negativity,
)

FOUR = pur.FOUR_QUBITS
P1_N100_INFIDELITY = 4.0e-9  # frozen from the first oracle run (3.77e-9)


def ket(*labels):
    return core.basis_state(FOUR, labels).amplitudes


PHI2 = PureState(FOUR, (ket(G, G, E, E) + ket(E, E, G, G)) / np.sqrt(2))
PSI2 = PureState(FOUR, (ket(G, E, E, G) + ket(E, G, G, E)) / np.sqrt(2))


def simple(P):
    return BellDiagonal(P, 0.0, 1 - P, 0.0)


# -- filter operators


def test_exact_filter_matches_closed_form():
    for n in (2, 5, 40, 100):
        for lt in (np.pi / (2 * np.sqrt(n)), 0.37):
            k = pur._pair_kraus_exact(n, lt)
            assert np.allclose(k, analytic.pair_kraus(n, lt), atol=1e-13)
            assert np.allclose(pur.filter_kraus(n, lt), analytic.four_qubit_filter(k), atol=1e-13)


def test_exact_filter_tends_to_ideal():
    gaps = [np.abs(pur.filter_kraus(n) - pur.filter_kraus()).max() for n in (10, 100, 10_000)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_filter_kraus_validation():
    with pytest.raises(ValueError):
        pur.filter_kraus(1)


# -- one ideal round


@pytest.mark.parametrize("P", [0.6, 0.75, 0.9])
def test_ideal_round_state_and_probability(P):
    out = pur.ideal_filter_round(simple(P), simple(P))
    a, b = P**2, (1 - P) ** 2
    expect = (a * PHI2.density().matrix + b * PSI2.density().matrix) / (a + b)
    assert np.allclose(out.post_state.matrix, expect, atol=1e-14)
    assert out.field_projection_probability == pytest.approx((a + b) / 2, abs=1e-14)


def test_cross_term_empty():
    with pytest.raises(EmptyBranchError):
        pur.ideal_filter_round(BellDiagonal(1.0), BellDiagonal(0, 0, 1.0, 0))


def test_pure_phi_input():
    out = pur.ideal_filter_round(BellDiagonal(1.0), BellDiagonal(1.0))
    assert fidelity(PHI2, out.post_state) == pytest.approx(1, abs=1e-14)
    assert out.field_projection_probability == pytest.approx(0.5)


def test_filter_annihilates_cross_terms():
    k = pur.filter_kraus()
    phis, psis = (PHI_PLUS, PHI_MINUS), (PSI_PLUS, PSI_MINUS)
    for a in phis:
        for b in psis:
            for x, y in ((a, b), (b, a)):
                v = k @ np.kron(x.amplitudes, y.amplitudes)
                assert np.abs(v).max() <= 1e-14


def test_bell_type_closure():
    # Phi- behaves like Phi+ and Psi- like Psi+: same surviving pattern
    k = pur.filter_kraus()
    for a in BELL_STATES:
        for b in BELL_STATES:
            same_type = (a in (PHI_PLUS, PHI_MINUS)) == (b in (PHI_PLUS, PHI_MINUS))
            norm = np.linalg.norm(k @ np.kron(a.amplitudes, b.amplitudes))
            assert (norm > 0.5) == same_type
            if same_type:
                assert norm**2 == pytest.approx(0.5, abs=1e-14)


# -- +/- measurement


def test_plus_branch_weights_and_negativity():
    out = pur.ideal_filter_round(simple(0.75), simple(0.75))
    plus, minus = pur.measure_pair_pm(out.post_state)
    assert np.allclose(bell_decompose(plus.post_state)[0].weights, [0.9, 0, 0.1, 0], atol=1e-12)
    assert negativity(plus.post_state) == pytest.approx(0.8, abs=1e-12)
    assert plus.cumulative_probability + minus.cumulative_probability == pytest.approx(1, abs=1e-12)


def test_minus_branch_relabels_onto_plus():
    out = pur.ideal_filter_round(simple(0.7), simple(0.7))
    plus, minus = pur.measure_pair_pm(out.post_state)
    assert not np.allclose(plus.post_state.matrix, minus.post_state.matrix)
    assert np.allclose(pur.relabel_minus(minus.post_state).matrix, plus.post_state.matrix, atol=1e-12)


def test_measure_pair_validation():
    with pytest.raises(ValueError):
        pur.measure_pair_pm(PHI_PLUS)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8).filter(lambda w: sum(w[:4]) > 0.1 and sum(w[4:]) > 0.1))
def test_round_weights_match_state_route(w):
    left = BellDiagonal.from_weights(w[:4], normalize=True)
    right = BellDiagonal.from_weights(w[4:], normalize=True)
    try:
        d, p = pur.ideal_round_weights(left, right)
    except EmptyBranchError:
        with pytest.raises(EmptyBranchError):
            pur.ideal_filter_round(left, right)
        return
    out = pur.ideal_filter_round(left, right)
    plus, _ = pur.measure_pair_pm(out.post_state)
    got, resid = bell_decompose(plus.post_state)
    assert resid < 1e-12
    assert np.allclose(got.weights, d.weights, atol=1e-12)
    assert out.field_projection_probability == pytest.approx(p, abs=1e-12)


# -- iteration


def test_iterate_examples():
    d, p = pur.iterate_ideal(0.6, 2)
    assert d.a_plus == pytest.approx(0.36 / 0.52, abs=1e-12)
    assert p == pytest.approx(0.13, abs=1e-12)
    d, p = pur.iterate_ideal(0.7, 1)
    assert d.a_plus == pytest.approx(0.7) and p == pytest.approx(0.5)
    for q in (1, 3, 6):
        d, p = pur.iterate_ideal(1.0, q)
        assert d.a_plus == 1 and p == pytest.approx(2.0**-q)


def test_half_is_fixed_point():
    for q in range(1, 6):
        assert pur.iterate_ideal(0.5, q)[0].a_plus == pytest.approx(0.5)


def test_stage_accounting_is_twice_printed():
    for P in (0.55, 0.8):
        stages = pur.iterate_stages(P, 5)
        for q, s in enumerate(stages, start=1):
            d, printed = pur.iterate_ideal(P, q)
            assert np.allclose(s.state.weights, d.weights, atol=1e-12)
            if q > 1:
                assert s.cumulative_probability == pytest.approx(2 * printed, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.51, 0.99))
def test_purification_monotone(P):
    assert pur.ideal_round_weights(simple(P), simple(P))[0].a_plus > P
    fids = [pur.iterate_ideal(P, q)[0].a_plus for q in range(1, 40)]
    probs = [pur.iterate_ideal(P, q)[1] for q in range(1, 40)]
    assert all(b > a for a, b in zip(fids, fids[1:]) if b < 1 - 1e-15)
    assert fids[-1] > 0.99 or P < 0.6
    assert all(b < a for a, b in zip(probs, probs[1:]))


def test_iterate_validation():
    with pytest.raises(ValueError):
        pur.iterate_ideal(0.7, 0)
    with pytest.raises(ValueError):
        pur.iterate_ideal(1.2, 2)


# -- GHZ extension


def test_ghz_printed_probabilities():
    assert pur.ghz_printed_probability(1.0) == pytest.approx(0.5)
    assert pur.ghz_printed_probability(0.75) == pytest.approx(0.3164 / (2 * 0.390625), abs=1e-4)
    assert pur.ghz_printed_probability(0.75) == pytest.approx(0.405, abs=1e-3)
    assert pur.ghz_printed_probability(0.0) == 0


def test_ghz_simulated_step():
    for P in (0.6, 0.75, 1.0):
        rho1 = pur.ideal_filter_round(simple(P), simple(P)).post_state
        psi, p = pur.ghz_extend(rho1)
        w = P**2 / (P**2 + (1 - P) ** 2)
        assert fidelity(pur.GHZ_TARGET, psi) == pytest.approx(1, abs=1e-12)
        assert p == pytest.approx(w, abs=1e-12)
        assert pur.ghz_printed_probability(P) == pytest.approx(w**2 / 2, abs=1e-12)
    assert pur.ghz_filter_probability(0.0) == 0


# -- Werner states


def test_werner_round_one_pure_input():
    assert fidelity(PHI_PLUS, pur.werner_round(1.0, 1)) == pytest.approx(1, abs=1e-14)


@pytest.mark.parametrize("P", [0.55, 0.7, 0.9])
def test_werner_round_one_weights(P):
    d, resid = bell_decompose(pur.werner_round(P, 1))
    w = pur.werner_round1_weights(P)
    Q = (1 - P) / 3
    assert w.sum() == pytest.approx(P**2 + 2 * P * Q + 5 * Q**2, abs=1e-14)
    assert np.allclose(d.weights, w / w.sum(), atol=1e-12) and resid < 1e-12


@pytest.mark.parametrize("P", [0.6, 0.8, 0.95])
def test_werner_round_two_weights(P):
    d, _ = bell_decompose(pur.werner_round(P, 2))
    w = pur.werner_round2_weights(P)
    Q = (1 - P) / 3
    assert w.sum() == pytest.approx(P**4 + 10 * P**2 * Q**2 + 8 * P * Q**3 + 13 * Q**4, abs=1e-14)
    assert np.allclose(d.weights, w / w.sum(), atol=1e-12)


def test_werner_round_two_quadratic_in_q():
    qs = np.array([0.01, 0.02, 0.04])
    infid = [1 - fidelity(PHI_PLUS, pur.werner_round(1 - 3 * q, 2)) for q in qs]
    assert np.polyfit(np.log(qs), np.log(infid), 1)[0] >= 2


def test_werner_round_one_against_oracle():
    w = BellDiagonal.werner(0.9)
    out = pur.exact_round(1000, w, w)
    ref = pur.werner_round1_weights(0.9)
    assert np.allclose(bell_decompose(out.post_state)[0].weights, ref / ref.sum(), atol=1e-10)


def test_werner_printed_round_one_differs():
    P = 0.7
    d = pur.werner_round1_weights(P)
    assert np.abs(pur.werner_round1_printed(P) - d / d.sum()).max() > 0.01
    assert pur.werner_round1_printed(P).sum() == pytest.approx(1)


def test_naive_reiteration():
    grid = np.linspace(0.55, 0.95, 9)
    below = [negativity(pur.naive_reiteration(P)) < negativity(pur.werner_state(P)) for P in grid]
    assert any(below)
    for P in grid:
        mixed = pur.naive_reiteration(P, second_copy_round1=False)
        assert negativity(mixed) == pytest.approx(negativity(pur.werner_state(P)), abs=1e-12)


def test_werner_validation():
    with pytest.raises(ValueError):
        pur.werner_round(0.5, 1)
    with pytest.raises(ValueError):
        pur.werner_round(0.8, 3)


def test_rotate_pairs_relabels():
    rho = BellDiagonal(0.5, 0.3, 0.15, 0.05).to_state()
    d, _ = bell_decompose(pur.rotate_pairs_y(rho))
    assert np.allclose(d.weights, [0.5, 0.15, 0.3, 0.05], atol=1e-12)


# -- MEMS


def test_mems_endpoints():
    assert fidelity(PHI_PLUS, pur.mems_state(pur.MemsParam(1.0))) == pytest.approx(1, abs=1e-14)
    assert pur.mems_purify(pur.MemsParam(1.0)).matrix[0, 3] == pytest.approx(0.5)
    z = pur.MemsParam(0.0)
    assert negativity(pur.mems_purify(z)) == pytest.approx(1 / 3, abs=1e-12)
    assert linear_entropy(pur.mems_purify(z)) < 8 / 9


@settings(max_examples=30, deadline=None)
@given(st.floats(0.001, 0.999))
def test_mems_purify_dominates(g):
    m = pur.MemsParam(g)
    rin, rout = pur.mems_state(m), pur.mems_purify(m)
    assert linear_entropy(rout) < linear_entropy(rin)
    assert negativity(rout) > negativity(rin)


def test_mems_purified_points_below_curve():
    def curve_entropy(target):
        if target >= 1 - 1e-12:
            return 0.0
        g = brentq(lambda x: negativity(pur.mems_state(pur.MemsParam(x))) - target, 0, 1, xtol=1e-14)
        return linear_entropy(pur.mems_state(pur.MemsParam(g)))

    for g in np.linspace(0, 1, 11):
        out = pur.mems_purify(pur.MemsParam(g))
        assert linear_entropy(out) <= curve_entropy(negativity(out)) + 1e-12


def test_mems_simulated_round_keeps_separable_input_separable():
    rho, p = pur.mems_purify_simulated(pur.MemsParam(0.0))
    assert negativity(rho) == pytest.approx(0, abs=1e-12)
    assert 0 < p < 1
    rho, _ = pur.mems_purify_simulated(pur.MemsParam(1.0))
    assert fidelity(PHI_PLUS, rho) == pytest.approx(1, abs=1e-12)


def test_mems_validation():
    with pytest.raises(ValueError):
        pur.MemsParam(1.5)


# -- simplified single-photon variant


def test_simplified_params_derive_angles():
    sp = pur.SimplifiedParams(2, 3)
    assert sp.theta1 == pytest.approx(np.pi * np.sqrt(2) * 2.5)
    assert sp.theta2 == pytest.approx(2.474874 * np.pi, abs=1e-6)
    assert np.sin(sp.theta2) ** 2 == pytest.approx(0.9938, abs=1e-4)
    assert sp.theta1 == pytest.approx(np.sqrt(2) * sp.lambda_t)
    assert sp.theta2 == pytest.approx(sp.lambda_t_prime)
    with pytest.raises(TypeError):
        pur.SimplifiedParams(1, 2, theta1=0.3)


def test_simplified_anchor_regression():
    # value produced by the printed map; the quoted anchor is checked in the acceptance suite
    _, phi, psi, f = pur.simplified_round(pur.SimplifiedParams(2, 3), 0.8)
    assert 1 - f == pytest.approx(8.7647e-5, rel=1e-4)
    assert fidelity(PSI_PLUS, psi) > 0.99


def test_simplified_map_moduli_match_exact():
    for m1, m2 in ((2, 3), (0, 5), (4, 1)):
        sp = pur.SimplifiedParams(m1, m2)
        printed, exact = pur.simplified_map(sp), pur.simplified_map_exact(sp)
        mask = np.abs(printed) > 0
        assert np.allclose(np.abs(printed[mask]), np.abs(exact[mask]), atol=1e-12)


def test_printed_primed_states_agree_with_map():
    sp = pur.SimplifiedParams(2, 3)
    _, phi, psi, _ = pur.simplified_round(sp, 0.9)
    phi_p, psi_p = pur.printed_primed_states(sp)
    assert fidelity(phi_p, phi) == pytest.approx(1, abs=1e-12)
    assert fidelity(psi_p, psi) == pytest.approx(1, abs=1e-12)


def test_choose_simplified_params():
    best = pur.choose_simplified_params(8)
    assert (best.params.m1, best.params.m2) == (2, 3)
    con = pur.choose_simplified_params(8, three_photon_threshold=0.6)
    assert con.params.m2 == 6 and con.three_photon_residual < 0.6
    shallow = pur.choose_simplified_params(1)
    assert (shallow.params.m1, shallow.params.m2) == (0, 0)
    assert shallow.cos_residual > best.cos_residual
    with pytest.raises(ValueError):
        pur.choose_simplified_params(3, three_photon_threshold=1e-6)


# -- probe detection


def cavity(amps):
    return PureState(core.HilbertSpace((core.mode(2),)), amps)


def test_probe_detection():
    lt, k = pur.probe_time()
    assert abs(np.sin(np.sqrt(2) * lt)) < 1e-12 and abs(np.cos(lt)) <= 0.05
    one = pur.probe_photon_detect(cavity([0, 1, 0]))
    assert one.excited_probability == pytest.approx(np.sin(lt) ** 2, abs=1e-12)
    assert one.excited_probability > 0.99
    assert pur.probe_photon_detect(cavity([1, 0, 0])).excited_probability == 0
    assert pur.probe_photon_detect(cavity([0, 0, 1])).excited_probability < 1e-20
    mix = pur.probe_photon_detect(cavity(np.ones(3) / np.sqrt(3)))
    assert mix.excited_probability == pytest.approx(1 / 3, abs=2e-3)


def test_probe_validation():
    with pytest.raises(TypeError):
        pur.probe_photon_detect(PHI_PLUS)
    with pytest.raises(ValueError):
        pur.probe_time(1e-9, lt_max=10.0)


# -- exact rounds


def test_exact_round_converges_with_n():
    d = simple(0.75)
    infid = [1 - pur.exact_round(n, d, d).ideal_fidelity for n in (10, 50, 200)]
    assert infid[0] > infid[1] > infid[2]
    assert 1 - pur.exact_round(2, d, d).ideal_fidelity > 1e-2


def test_exact_round_pure_input():
    out = pur.exact_round(100, BellDiagonal(1.0), BellDiagonal(1.0))
    assert 1 - fidelity(PHI_PLUS, out.post_state) <= P1_N100_INFIDELITY


def test_exact_round_minus_branch():
    d = simple(0.8)
    out = pur.exact_round(200, d, d, outcome="different")
    assert out.measurement_branch == "minus"
    assert 1 - out.ideal_fidelity < 1e-8


def test_exact_round_script_parses():
    from cavitydistill.oracle import parse_script

    text = pur.exact_round_script(9, simple(0.7), BellDiagonal.werner(0.8).to_state(), rotate_y=True)
    proto = parse_script(text)
    assert proto.n_atoms == 4 and len(proto.modes) == 2
