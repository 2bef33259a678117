"""An American put under fractional (pure-jump) dynamics.

In log price x = log S the price solves the obstacle problem with the put
payoff as obstacle, time running as time to expiry. The exercise region is
the contact set on the left; its right end is the exercise boundary.

Run: python3 demos/american_put.py [out_dir]
"""

import json
import sys
from pathlib import Path

import numpy as np

from fracobstacle.harness import price_american, resolve_config

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_put")
cfg = resolve_config({"out": str(out), "strike": "1.0", "t_final": "1.0"}, preset="american-put")
outcome = price_american(cfg)
print("exit status", outcome.status, "soft audits:", outcome.soft_failures or "none")

eb = np.genfromtxt(out / "exercise_boundary.csv", delimiter=",", names=True)
for i in np.linspace(0, eb.size - 1, 6).astype(int):
    print(f"tau = {eb['tau'][i]:.3f}   exercise below S* = {eb['S'][i]:.4f}")

report = json.loads((out / "report.json").read_text())
short = report["audits"]["provenance"]["diagnostics"]["short_expiry"]
print(f"short expiry: sup|price - payoff| = {short['sup_gap']:.2e} <= {short['bound']:.2e}")
print(f"boundary point {np.round(report['point'], 4)}: mu = {report['mu_hat']}, class {report['class']}")
