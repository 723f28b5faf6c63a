"""Do crypto-like assets add to a traditional opportunity set?

Each crypto asset is regressed on the traditional assets and tested for
spanning.  Then the strategies are pooled by the bootstrap vote on the
last estimation window and the vote shares are printed.

    python3 demos/spanning_and_model_votes.py
"""

import warnings

import numpy as np

from allocbench import BootstrapConfig, combine_bootstrap, spanning_tests
from allocbench.synthetic import synthetic_panel

panel, _ = synthetic_panel(5, 5, 1000, seed=9)
x = panel.values
liquid = np.array(panel.liquid)
bench = x[:, liquid]

print(f"{'asset':<8}{'alpha':>11}{'sum beta':>10}{'p(HK)':>8}{'p(F1)':>8}{'p(F2)':>8}")
for j in np.flatnonzero(~liquid):
    r = spanning_tests(bench, x[:, j])
    flag = "  rejects at 10%" if r.rejects(0.1) else ""
    print(f"{panel.assets[j]:<8}{r.alpha:11.2e}{r.beta_sum:10.3f}{r.p_hk:8.3f}{r.p1:8.3f}{r.p2:8.3f}{flag}")

# a traditional asset rebuilt from the others is spanned exactly
r = spanning_tests(bench[:, 1:], bench[:, 1:] @ np.array([0.4, 0.3, 0.2, 0.1]))
print(f"\nportfolio of benchmarks: F_HK={r.f_hk:.1f} F1={r.f1:.1f} F2={r.f2:.1f}")

models = ["EW", "MinVar", "MV-S", "ERC", "MinCVaR", "MD", "RR-MaxRet"]
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    shares, weights = combine_bootstrap(models, x[-252:], BootstrapConfig(B=100, seed=4))
print(f"\nbootstrap vote, expected block length {shares.block_length:.1f}")
for m, p, v in zip(models, shares.pi, shares.votes):
    print(f"  {m:<10}{p:6.2f}{v:5d}")
print("combined weights:", {a: round(float(w), 3) for a, w in zip(panel.assets, weights)})
