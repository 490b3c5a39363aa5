"""Bilinear interaction functional and its convexity lower bound.

With the weight psi(x, y) = |x - y| the interaction functional

    I(t) = sum_{mu,kappa} intint |x-y| m_mu(x) m_kappa(y)

is convex in time up to a nonnegative nonlinear contribution:

    d2I/dt2 >= 2 sum intint Lap psi grad m . grad m + N_(p,psi) .

In d = 1, Lap_x psi = 2 delta(x - y) collapses the double integrals to single
ones.  The demo verifies dI/dt against its identity, checks the second
difference against the lower bound at every interior snapshot, and shows the
erf-smoothed weight converging to the delta-collapse values as eps -> 0.
"""

import numpy as np

from nlskit import (CouplingSpec, GridSpec, MorawetzWeight, ScalarField,
                    StepParams, SystemState, evolve,
                    interaction_inequality_check, interaction_report)

grid = GridSpec(d=1, m=512, l=32.0)
coupling = CouplingSpec(2, np.array([[1.0, 0.5], [0.5, 1.0]]), p=1.0, d=1)
x = grid.x_mesh[0]
state = SystemState(0.0, (
    ScalarField(0.7 * np.exp(-x ** 2 / 8) * np.exp(0.3j * x), grid, "physical"),
    ScalarField(0.5 * np.exp(-(x - 2.0) ** 2 / 8), grid, "physical"),
), coupling)

weight = MorawetzWeight.abs_distance()
reports = []
evolve(state, StepParams(dt=1e-3, t_final=2.0, snapshot_stride=50),
       lambda s: reports.append(interaction_report(s, weight)))

check = interaction_inequality_check(reports)
print("   t        I(t)       d2I/dt2 (FD)   lower bound     margin")
for i in range(0, len(check.iddot_fd), 4):
    t = check.times[i + 1]
    print(f"  {t:5.2f}  {reports[i+1].I:10.5f}  {check.iddot_fd[i]:12.6f}"
          f"  {check.rhs_lower[i]:12.6f}  {check.margins[i]:10.6f}")
print()
print(f"dI/dt identity gap (max over snapshots): {check.idot_fd_gap:.2e}")
print(f"second-difference bound holds everywhere: {check.second_difference_ok}")
print(f"time-integrated form holds:               {check.integrated_ok}")
print(f"[dI/dt] increased (rhs >= 0 throughout):  {check.monotone_ok}")

print()
print("erf-smoothed weight vs the delta collapse (values at t = 0; the")
print("mollifier width must stay above the grid spacing h = %g):" % grid.h)
ref = interaction_report(state, weight)
print(f"  delta collapse: N = {ref.N_term:.6f}, gradient term = {ref.gradient_term:.6f}")
for eps in (0.8, 0.4, 0.2):
    rep = interaction_report(state, MorawetzWeight.erf_smoothed(eps))
    print(f"  eps = {eps:>4}:      N = {rep.N_term:.6f}, gradient term = "
          f"{rep.gradient_term:.6f}")
