"""The slow/fast pair network end to end.

Started at (N, b) the first coordinate decays along a straight line on the
Nt clock, with endpoint t_inf = alpha1/(k0 (e^(k2/k3) - 1)); meanwhile the
second coordinate equilibrates to a conditioned Poisson law.  Started at
(a, N) with a < p the network climbs the boundary for a time of order
N^(p-1) and then crashes multiplicatively; the rescaled crash sizes follow
U^delta1 and the excursion clock follows the explosive limit jump process.
"""

import numpy as np
from scipy import stats

from crnlab import (
    FixedTime,
    HitSet,
    LimitJumpProcess,
    ScalingSpec,
    SimConfig,
    Thinning,
    Timescale,
    conditioned_poisson_pmf,
    hitting_time_sample,
    limit_jump_parameters,
    models,
    run_occupation_experiment,
    run_until,
    sample_limit_jump_paths,
    slow_fast_horizontal_curves,
)

net = models.slow_fast(p=2)  # all rates 1
curves = slow_fast_horizontal_curves(1.0, 1.0, 1.0, 1.0, alpha1=1.0)
print(f"endpoint of the linear decay: t_inf = {curves.t_inf:.6f} (= 1/(e-1))")

## Horizontal start (N, 1): sample X1 at the midpoint of the Nt clock.
N = 600
raw = N * curves.t_inf / 2
vals = []
for r in range(12):
    res = run_until(
        net, (N, 1), FixedTime(raw),
        SimConfig(seed=100, max_time=raw * 1.01, thinning=Thinning.none()), key=(r,),
    )
    vals.append(res.state[0] / N)
print(
    f"X1(N t_inf/2)/N at N={N}: {np.mean(vals):.3f} +- {np.std(vals):.3f} "
    f"(line predicts 0.500)"
)

## While X1 is large, the conditioned occupation of X2 is Poisson(k2/k3)
## restricted to >= 1 -- time at zero is excised, everything else kept.
spec = ScalingSpec(
    initial_state=lambda n: (n, 1),
    n_values=(300,),
    replicas=3,
    space_exponents=(1.0, 0.0),
    timescale=Timescale("speed-up", 0.0),
    horizon=25.0,
    grid_points=10,
)
occ = run_occupation_experiment(
    net, spec, conditioned_poisson_pmf(1.0, 30),
    projection=1, seed=101, condition_min=1, state_cap=40,
)
print(f"TV(conditioned occupation of X2, conditioned Poisson) = {occ.per_n[0].mean:.4f}")

## Vertical start (0, N): hitting p copies of S1 takes ~Exp(r1) N^(p-1).
r1, delta1 = limit_jump_parameters(2, 1.0, 1.0, 1.0)
samples = hitting_time_sample(
    net, (0, 400), HitSet(coord=0, op=">=", value=2), replicas=150,
    cfg=SimConfig(seed=102, max_time=1e9, thinning=Thinning.none()),
)
times = np.array([s.time for s in samples])
print(
    f"boundary climb at N=400: mean/N = {times.mean() / 400:.3f} (predicts 1/r1 = {1 / r1}), "
    f"CV = {times.std() / times.mean():.3f} (exponential limit has CV 1)"
)

## The crash that follows: X2 multiplies by U^delta1 per excursion.
proc = LimitJumpProcess(r1=r1, delta1=delta1, p=2, alpha=1.0)
spec_v = ScalingSpec(
    initial_state=lambda n: (0, n),
    n_values=(400,),
    replicas=80,
    space_exponents=(0.0, 1.0),
    timescale=Timescale("slow-down", 1.0),
    horizon=100.0,
    grid_points=10,
)
exc = run_occupation_experiment(net, spec_v, proc, projection=1, seed=103)
print(
    f"excursion ratio law: KS p = {exc.details['ks_pvalue']['400']:.3f}, "
    f"mean scaled duration = {exc.details['mean_scaled_duration']['400']:.3f}"
)

## A cousin network's late stage, for contrast: once the autocatalytic
## network's first coordinate has emptied, the second decays polynomially
## on the t/N^q clock.
from crnlab import ScalingSpec as _Spec
from crnlab import autocatalytic_curves, run_scaling_experiment

auto = models.autocatalytic(3, 2)
spec_f = _Spec(
    initial_state=lambda n: (int(round(n ** (1 / 3))), n),
    n_values=(2000,),
    replicas=10,
    space_exponents=(1.0, 1.0),
    timescale=Timescale("speed-up", 2.0),
    horizon=2.0,
    grid_points=100,
    compare_components=(1,),
)
final = run_scaling_experiment(auto, spec_f, autocatalytic_curves(3, 2).final_decay, seed=106)
print(f"autocatalytic final decay vs (1+2t)^(-1/2): sup-error {final.per_n[0].mean:.4f}")

## The limit object itself: an explosive multiplicative jump process whose
## jump times are summable -- it reaches zero in finite time.
t, v = sample_limit_jump_paths(proc, seed=105, n_paths=20000, n_jumps=30)
print(
    f"limit process: V_10 mean = {v[:, 9].mean():.5f} "
    f"(theory {(1 / (1 + delta1)) ** 10:.5f}), "
    f"total jump time converges to {t[:, -1].mean():.3f}"
)
ks = stats.kstest(-np.log(v[:, 0]) / delta1, "expon")
print(f"first jump ratio is U^delta1: KS p = {ks.pvalue:.3f}")
