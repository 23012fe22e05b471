"""Purifying Bell-diagonal pairs through a shared cavity-field filter.

Run: python3 demos/purification_tour.py
"""

from cavitydistill import purification as pur
from cavitydistill.measures import PHI_PLUS, BellDiagonal, bell_decompose, fidelity, negativity

P = 0.75
d = BellDiagonal(P, 0.0, 1 - P, 0.0)

# one ideal round, then the +/- measurement on the first pair
out = pur.ideal_filter_round(d, d)
plus, minus = pur.measure_pair_pm(out.post_state)
w, _ = bell_decompose(plus.post_state)
print(f"P = {P}: filter passes with p = {out.field_projection_probability:.4f}")
print(f"  + branch weights {w.weights.round(4)}, E_N = {negativity(plus.post_state):.4f}")

# iterating the ideal map
for q in (1, 2, 4, 8):
    dq, p = pur.iterate_ideal(P, q)
    print(f"  q = {q}: A+ = {dq.a_plus:.6f}, probability = {p:.3e}")

# the same round with n-photon cavities, exact dynamics
for n in (10, 100, 1000):
    ex = pur.exact_round(n, d, d)
    print(f"  n = {n:4d}: infidelity to the ideal round = {1 - ex.ideal_fidelity:.2e}")

# Werner inputs need the relabeling rotation between rounds
for Pw in (0.7, 0.9):
    w2 = pur.werner_round(Pw, 2)
    print(f"Werner P = {Pw}: E_N {negativity(pur.werner_state(Pw)):.4f} -> {negativity(w2):.4f}, "
          f"F(Phi+) = {fidelity(PHI_PLUS, w2):.4f}")
