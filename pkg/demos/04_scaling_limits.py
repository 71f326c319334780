"""Scaling limits: replica ensembles against closed-form and ODE references.

Two scaling families appear here.  The classical one rescales rates by
N^(|source|-1) and recovers the mass-action ODE.  The initial-state one
keeps the network untouched and sends the starting point to infinity; the
triangle cycle then shows three different regimes depending on where the
initial state sits.
"""

import io

import numpy as np

from crnlab import (
    ScalingSpec,
    Timescale,
    integrate_mass_action_ode,
    models,
    run_classical_scaling,
    run_scaling_experiment,
    triangle_regime_curves,
)

## Classical scaling of the infinite-server queue: X^N(t)/N converges to the
## linear relaxation ODE; errors shrink like 1/sqrt(N).
mm = models.mm_infinity(1.0, 1.0)
spec = ScalingSpec(
    initial_state=lambda n: (3 * n,),
    n_values=(300, 3000),
    replicas=20,
    space_exponents=(1.0,),
    timescale=Timescale("speed-up", 0.0),
    horizon=4.0,
    grid_points=100,
)
res = run_classical_scaling(mm, spec, seed=1, jobs=2)
print("classical scaling sup-errors:", [(p.n, round(p.mean, 4)) for p in res.per_n], res.monotone)

## Regime (a): both coordinates of order N, clock t/N.  The first coordinate
## freezes at alpha1 and the second decays exponentially.
t1 = models.triangle()
spec_a = ScalingSpec(
    initial_state=lambda n: (n - n // 2, n // 2),
    n_values=(500, 5000),
    replicas=20,
    space_exponents=(1.0, 1.0),
    timescale=Timescale("speed-up", 1.0),
    horizon=4.0,
    grid_points=100,
)
res_a = run_scaling_experiment(t1, spec_a, triangle_regime_curves("a", alpha1=0.5), seed=2, jobs=2)
print("regime (a) sup-errors:", [(p.n, round(p.mean, 4)) for p in res_a.per_n], res_a.monotone)

## Regime (b): first coordinate of order sqrt(N), clock t/sqrt(N); the limit
## is a genuine ODE pair.  No horizon is pinned by the theory near
## x2 ~ 0, so this one is reported rather than asserted.
spec_b = ScalingSpec(
    initial_state=lambda n: (0, n),
    n_values=(500, 2000),
    replicas=20,
    space_exponents=(0.5, 1.0),
    timescale=Timescale("speed-up", 0.5),
    horizon=5.0,
    grid_points=100,
)
res_b = run_scaling_experiment(
    t1, spec_b, triangle_regime_curves("b", beta=0.0, t_end=6.0), seed=3, jobs=2
)
print("regime (b) sup-errors (report only):", [(p.n, round(p.mean, 4)) for p in res_b.per_n])

## Regime (c): (N, k) start on the raw clock; only the first coordinate has
## a limit, exp(-k1 t).
spec_c = ScalingSpec(
    initial_state=lambda n: (n, 3),
    n_values=(500, 5000),
    replicas=20,
    space_exponents=(1.0, 1.0),
    timescale=Timescale("speed-up", 0.0),
    horizon=5.0,
    grid_points=100,
    compare_components=(0,),
)
res_c = run_scaling_experiment(t1, spec_c, triangle_regime_curves("c"), seed=4, jobs=2)
print("regime (c) sup-errors:", [(p.n, round(p.mean, 4)) for p in res_c.per_n])

## Limit curves integrate and export like any other table.
curve = integrate_mass_action_ode(models.triangle(2.0, 0.5, 3.0), [1.0, 1.0], t_end=2.0)
buf = io.StringIO()
curve.to_csv(np.linspace(0.0, 1.5, 4), buf)
print("curve CSV on a grid:\n" + buf.getvalue(), end="")

## The dominant-reaction ODE drops every reaction fired from a small
## complex; for the triangle from (a, 1-a) only the bimolecular one stays.
from crnlab import integrate_dominant_ode

dom = integrate_dominant_ode(t1, [0.4, 0.6], t_end=3.0)
print("dominant ODE at t=2:", np.round(dom(2.0), 4), "(first component frozen)")
