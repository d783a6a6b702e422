"""Tool-tip compliance compensation for a Ti-6Al-4V turning pass."""
from curvedchip import ComplianceModel, ToolGeometry, compensate_deflection, ti6al4v
from curvedchip.simulate import turning_force_of_depth

tool = ToolGeometry.from_degrees(kappa_r=90, epsilon=60, r_eps=0.4)
F_of_a = turning_force_of_depth(tool, feed=0.1, material=ti6al4v(), model="curved")
res = compensate_deflection(ComplianceModel(), F_of_a, a_nominal=1.0)
F0 = F_of_a(1.0)
print(f"rigid force      {F0.round(1)} N")
print(f"compensated      {res.F.round(1)} N after {res.iterations} iterations")
print(f"effective depth  {res.a_eff:.5f} mm (tip deflection {res.delta_r * 1e6} um)")
