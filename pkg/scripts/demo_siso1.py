#!/usr/bin/env python3
"""End-to-end walkthrough on the all-scalar fixture.

The model is E dx = A(theta) x + B u with closed-form response
H(j w, theta) = 1/(j w + 1 - theta), so every number printed here can be
checked by hand.
"""

import numpy as np

from lftident import freqplan, identifiability as ident, oracle, sloppiness as slop, testing

m = testing.siso1()
t0 = [0.0]

print("== model ==")
print(f"dims: {m.dims}")

v = ident.upsilon_test(m, t0, [1.0])
print("\n== identifiability at theta0 = 0, freqs = {1.0} ==")
print(f"status: {v.status}  ({v.reason})")

plan = freqplan.search_frequencies(m, t0)
print("\n== frequency search ==")
print(f"status: {plan.status}, selected: {plan.selected}, trace: {plan.rank_trace}")

freqs = [0.0, 1.0]
S = slop.s_matrices(m, t0, freqs)
rep = slop.metrics(S)
print(f"\n== sloppiness over freqs {freqs} ==")
print(f"mu: {rep.mu}  (hand value: sigma(J)^-2 = 1/1.25 = 0.8)")
print(f"absolute sloppiness: {rep.sm_abs:.6f}  (hand value: sqrt(0.8) = {np.sqrt(0.8):.6f})")

est = oracle.fd_jacobian(m, t0, freqs)
print(f"\n== oracle cross-check ==")
print(f"finite-difference Jacobian: {est.J.ravel()}  (hand value: [1, 0, 0, -0.5])")
print(f"jacobian route mu: {oracle.jacobian_sloppiness(est)}")

for eps in (1e-2, 1e-3, 1e-4):
    stats = oracle.ellipsoid_empirical_check(m, t0, freqs, eps=eps, samples=10, seed=1)
    print(f"ellipsoid boundary energy ratio at eps={eps:g}: "
          f"[{stats.min_ratio:.5f}, {stats.max_ratio:.5f}]")
