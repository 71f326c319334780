"""Stopped-energy drift estimates: positive recurrence probed numerically.

The criterion behind these estimates: if an energy f and an integrable
stopping time tau (at least the first jump, or a fixed eta) satisfy
E_x[f(X(tau))] - f(x) <= -gamma E_x[tau] for all large-energy x, the chain
is positive recurrent.  The estimator Monte-Carlos both sides at chosen
initial states; the choice of tau is what makes awkward networks tractable.
"""

from crnlab import (
    JumpExcluding,
    JumpOfType,
    NthJump,
    linear_energy,
    models,
    polynomial_energy,
    run_drift_survey,
)

## The autocatalytic network: from (N, q) the first jump INCREASES the norm
## (the source fires), so the one-jump criterion fails there.  Waiting until
## the first jump that is not the bulk conversion drains the norm by ~2N/3.
net = models.autocatalytic(3, 2)
rows = run_drift_survey(
    net,
    states=[(200, 2), (400, 2), (800, 2)],
    energy=linear_energy(),
    rule=JumpExcluding(reactions=(2,), count=1),
    replicas=150,
    seed=5,
)
print("autocatalytic network, f = norm, tau = first non-conversion jump:")
for row in rows:
    e = row.estimate
    print(
        f"  x0={e.x0}: E[df]={e.mean_change:9.1f} +- {e.stderr_change:5.1f}, "
        f"E[tau]={e.mean_tau:7.4f}, ratio f(stop)/f(start)={row.stopped_over_initial:.3f}"
    )

## Below the conversion threshold (x2 < q) only the source and sink fire,
## so the one-jump drift is positive no matter how large x1 is -- the
## flexible stopping time is what rescues the criterion on this strip.
one_jump = run_drift_survey(
    net, states=[(400, 1)], energy=linear_energy(), rule=NthJump(1), replicas=150, seed=6
)
print(f"one-jump drift at (400, 1): {one_jump[0].estimate.mean_change:+.3f} (positive)")

## The slow/fast pair network near the horizontal axis: the norm alone is a
## poor energy (returns from the vertical axis take N^(p-1) time), but
## f(x) = x1 + x2^p with tau = the n0-th pair annihilation decays.  Values
## reported, no assertion: the guarantee is asymptotic in N.
sf = models.slow_fast(2)
fp = polynomial_energy((1, 2))
rows = run_drift_survey(
    sf,
    states=[(300, 1), (600, 1), (1200, 1)],
    energy=fp,
    rule=JumpOfType(reactions=(1,), count=25),
    replicas=150,
    seed=7,
)
print("slow/fast network, f = x1 + x2^2, tau = 25th pair annihilation:")
for row in rows:
    e = row.estimate
    print(
        f"  x0={e.x0}: E[df]={e.mean_change:8.2f} +- {e.stderr_change:5.2f}, "
        f"E[tau]={e.mean_tau:8.4f}, censored={e.censored}"
    )
