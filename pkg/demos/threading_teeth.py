"""Second tooth of a two-pass buttress threading cut, swept over the infeed step.

Colwell's chord runs along the feed axis here, so it predicts no feed force;
the curved and Young models do not.
"""
from curvedchip import aisi1045, build_threading_region, buttress_profile, predict_region

mat = aisi1045()
print(f"{'da':>5} {'model':>8} {'Fx':>8} {'Fy':>8} {'Fz':>8}")
for da in (0.02, 0.05, 0.1, 0.2):
    region = build_threading_region(buttress_profile(delta_a=da), 1)
    for model in ("curved", "colwell", "young"):
        F = predict_region(region, mat, model).F
        print(f"{da:5.2f} {model:>8} {F[0]:8.1f} {F[1]:8.1f} {F[2]:8.1f}")
