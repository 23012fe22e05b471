"""Concentrating a weakly entangled atom pair with one photon per cavity.

Run: python3 demos/concentration_tour.py
"""

import numpy as np

from cavitydistill import concentration as conc
from cavitydistill.oracle import bundled_script, run_script

pair = conc.InputPair(0.253964)
print(f"input pair: alpha = {pair.alpha:.6f}, ESPP = {pair.espp:.4f}")

# interaction time from the k-condition: sin(k pi / sqrt2) close to sqrt(alpha/beta)
k = conc.k_condition_search(pair, 50, 1e-2, on="sin")
print(f"k = {k.k}, lambda t = {k.lambda_t_star:.6f}, residual = {k.condition_residual:.2e}")

for out in conc.symmetric_branches(pair, k.lambda_t_star):
    if out.state is not None:
        print(f"  atoms {out.branch}: p = {out.probability:.6f}, field ESPP = {out.espp:.6f}")

# the same branch from the brute-force script engine
r = run_script(bundled_script("symmetric_k4.qps"))
print(f"oracle ee probability: {r.probability:.12f}")

# continuous search under a bound on lambda t
for bound in (np.pi, 5 * np.pi, 20 * np.pi):
    res = conc.optimal_time(pair, bound)
    print(f"bound {bound / np.pi:4.0f} pi: P_max = {res.p_max:.4f} at lambda t = {res.lambda_t_star:.4f}")

# asymmetric variant with empty cavities
asym = conc.asymmetric_run(conc.InputPair(np.sqrt(2 / 3)))
print(f"asymmetric scheme: p = {asym.probability:.6f} at lambda t = {asym.lambda_t:.5f}")
