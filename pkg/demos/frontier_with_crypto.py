"""How adding crypto-like assets moves the efficient frontier.

Frontiers are traced on the last estimation window for three universes:
traditional assets only, all assets, and all assets under volume caps.
Adding the high-mean assets stretches the top of the frontier while the
minimum-risk end barely moves; the caps pull the top back in.

    python3 demos/frontier_with_crypto.py
"""

import warnings

import numpy as np

from allocbench import LiquiditySpec, compute_caps, trace_frontier
from allocbench.synthetic import synthetic_panel

panel, volumes = synthetic_panel(6, 4, 600, seed=2)
window = panel.values[-252:]
trad = np.array(panel.liquid)  # traditional assets are the liquid ones

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    caps = compute_caps(volumes.values[-252:], LiquiditySpec(1e7, 0.01), panel.liquid)

for measure in ("variance", "cvar"):
    universes = {
        "traditional": trace_frontier(window[:, trad], measure, 20),
        "all": trace_frontier(window, measure, 20),
        "all, capped": trace_frontier(window, measure, 20, caps),
    }
    print(f"\n== {measure} ==")
    print(f"{'universe':<14}{'min risk':>12}{'return there':>14}{'max return':>12}{'risk there':>12}")
    for name, f in universes.items():
        i = f.min_risk_index
        print(f"{name:<14}{f.risks[i]:12.3e}{f.target_returns[i]:14.3e}{f.target_returns[-1]:12.3e}{f.risks[-1]:12.3e}")

print("\ncaps:", {a: round(float(c), 3) for a, c in zip(panel.assets, caps.caps)})
