"""Norm-bounded LQR design for the Furuta pendulum.

The controller state is [x; u_prev] because under logical execution time a
command computed at sample k is applied from sample k + 1.  The weight on
the two angles is raised until the feedback gain hits the norm bound.
Longer sampling periods need larger gains, so past roughly 230 ms no weight
ratio satisfies ||F|| <= 35.
"""

import numpy as np

from weaklyhard.control import augment_let, design_gain, discretize, furuta_plant
from weaklyhard.numerics import lqr_gain, spectral_radius

plant = furuta_plant()
print("continuous A:\n", plant.A)

pdt = discretize(plant, 0.132)
Az, Bz = augment_let(pdt)
print("\nnorm of F as the angle weight grows (T_c = 132 ms):")
for ratio in (1e-4, 1e-2, 1.0, 10.0, 100.0):
    F = lqr_gain(Az, Bz, np.diag([ratio, ratio, 0, 0, 0]), np.eye(1))
    print(f"  ratio {ratio:>8g}: ||F|| = {np.linalg.norm(F, 2):8.3f}")

g = design_gain(pdt, plant.q_template(), norm_bound=35.0)
print(f"\nchosen ratio {g.ratio:.5g}, ||F|| = {g.achieved_norm:.4f}")
print("nominal closed-loop spectral radius:", round(spectral_radius(Az - Bz @ g.F), 4))

print("\nfeasibility of the bound across periods:")
for T in (100, 150, 200, 225, 229, 230, 250):
    for bound in (30.0, 35.0):
        g = design_gain(discretize(plant, T / 1000), plant.q_template(), norm_bound=bound)
        tag = f"ratio {g.ratio:.3g}" if g.feasible else f"infeasible (min ||F|| {g.achieved_norm:.1f})"
        print(f"  T_c = {T:3d} ms, bound {bound:g}: {tag}")
