"""Exact event-by-event simulation of the jump process.

Shows reproducible trajectories, thinning choices, CSV export, stopping
rules, and the drift estimator checked against the generator identity.
"""

import io

import numpy as np

from crnlab import (
    FixedTime,
    HitSet,
    JumpOfType,
    NthJump,
    SimConfig,
    Thinning,
    estimate_drift,
    generator_apply,
    linear_energy,
    models,
    run_until,
    simulate,
    total_rate,
    transitions,
)

## One trajectory of the infinite-server queue.  The same seed always gives
## the bit-identical record; replica streams are keyed off the master seed.
mm = models.mm_infinity(1.0, 1.0)
cfg = SimConfig(seed=7, max_time=30.0)
rec = simulate(mm, (0,), cfg)
again = simulate(mm, (0,), cfg)
print(f"{rec.event_count} events, termination={rec.termination}")
print("bit-identical rerun:", np.array_equal(rec.times, again.times))

## Thinning: every event, every k-th event, or states sampled on a grid.
coarse = simulate(mm, (0,), SimConfig(seed=7, max_time=30.0, thinning=Thinning.every(50)))
grid = simulate(
    mm, (0,), SimConfig(seed=7, max_time=30.0, thinning=Thinning.on_grid(5.0))
)
print("samples kept:", rec.times.size, coarse.times.size, grid.times.size)

## CSV export: header t,x_1,...,x_n plus a footer comment with the reason.
buf = io.StringIO()
grid.to_csv(buf)
print(buf.getvalue(), end="")

## Stopping rules: fixed horizons, jump counts, reaction types, hit sets.
sf = models.slow_fast(2)
res = run_until(
    sf, (0, 50), HitSet(coord=0, op=">=", value=2), SimConfig(seed=3, max_time=1e6)
)
print(f"climbed to p=2 at t={res.time:.2f} (state {res.state}, fired={res.fired})")

res = run_until(sf, (20, 5), JumpOfType(reactions=(1,), count=10), SimConfig(seed=3, max_time=1e6))
print(f"10th pair annihilation at t={res.time:.4f}, state={res.state}")

## The drift estimator at the first jump reproduces the generator:
## E[f(X(t1))] - f(x) = Q(f)(x) * E[t1].
net = models.showcase()
x0 = (4, 3)
f = linear_energy((2.0, 1.0))
est = estimate_drift(
    net, x0, f, NthJump(1), replicas=400,
    cfg=SimConfig(seed=11, max_time=1e6, thinning=Thinning.none()),
)
support = {x0} | {z for z, _ in transitions(net, x0)}
qf = generator_apply(net, {s: f(s) for s in support}, x0)
print(
    f"drift at first jump: measured {est.mean_change:.4f} +- {est.stderr_change:.4f}, "
    f"generator predicts {qf / total_rate(net, x0):.4f}"
)

## A deterministic clock works on absorbed chains too.
frozen = run_until(models.mm_infinity(), (3,), FixedTime(0.0), SimConfig(seed=1, max_time=1.0))
print("fixed-time(0) stops immediately:", frozen.time == 0.0)
