"""Compare the three chip models on a sharp-nosed V-tool over a feed sweep.

Run with ``python3 demos/vtool_comparison.py``.  Prints the force components
(N) for AL7075 at a = 1 mm.
"""
import numpy as np

from curvedchip import ProcessParams, ToolGeometry, al7075, max_feed, predict_turning

tool = ToolGeometry.from_degrees(kappa_r=60, epsilon=60, r_eps=0.2)
mat = al7075()
fmax = max_feed(tool, 1.0)
print(f"f_max = {fmax:.3f} mm")
print(f"{'f/fmax':>7} {'model':>8} {'Fx':>9} {'Fy':>9} {'Fz':>9}")
for q in np.linspace(0.1, 1.0, 4):
    proc = ProcessParams(feed=q * fmax, depth=1.0)
    for model in ("curved", "colwell", "young"):
        F = predict_turning(tool, proc, mat, model).F
        print(f"{q:7.2f} {model:>8} {F[0]:9.1f} {F[1]:9.1f} {F[2]:9.1f}")
