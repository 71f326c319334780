"""Replica ensembles at increasing N compared against limit references.

Four experiment families:
  * run_scaling_experiment   initial-state scaling, trajectory sup-error
  * run_classical_scaling    rate rescaling kappa/N^(|source|-1), space 1/N
  * run_occupation_experiment time-marginal occupation vs a stationary law,
                              or excursion ratios vs the multiplicative
                              limit jump process
  * run_drift_survey         stopped-energy drift estimates over states

Everything is reproducible from (spec, seed): replica r of N-value index i
reads the stream keyed (i, r).  Replicas that hit the event limit are
excluded and counted; more than 10% exclusions aborts the experiment.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .errors import ContractError
from .limits import LimitCurve, LimitJumpProcess
from .network import ReactionNetwork
from .simulate import (
    DriftEstimate,
    Downcross,
    Energy,
    SimConfig,
    StopRule,
    Thinning,
    estimate_drift,
    occupation_measure,
    run_until,
    simulate,
)


@dataclass(frozen=True)
class Timescale:
    """Raw-time convention for a scaled horizon.

    speed-up: raw = t / N^exponent (limits reached by running a shorter raw
    clock); slow-down: raw = t * N^exponent.  Exponent is non-negative in
    both cases; no sign tricks.
    """

    direction: str = "speed-up"
    exponent: float = 0.0

    def __post_init__(self):
        if self.direction not in ("speed-up", "slow-down"):
            raise ContractError("direction must be 'speed-up' or 'slow-down'")
        if self.exponent < 0:
            raise ContractError("exponent must be >= 0 (choose the direction instead)")

    def raw(self, scaled_t: float, n: int) -> float:
        f = float(n) ** self.exponent
        return scaled_t / f if self.direction == "speed-up" else scaled_t * f


@dataclass(frozen=True)
class ScalingSpec:
    """One scaling family: initial states, scalings, replica counts, horizon."""

    initial_state: Callable[[int], Sequence[int]]
    n_values: tuple[int, ...]
    replicas: int
    space_exponents: tuple[float, ...]
    timescale: Timescale
    horizon: float
    grid_points: int = 200
    compare_components: tuple[int, ...] | None = None
    max_events: int = 10**8

    def __post_init__(self):
        if self.replicas < 1:
            raise ContractError("replicas must be >= 1")
        if self.horizon <= 0:
            raise ContractError("horizon must be positive")


@dataclass(frozen=True)
class PerNResult:
    n: int
    errors: np.ndarray  # per-replica statistic
    mean: float
    stderr: float
    excluded: int


@dataclass(frozen=True)
class ComparisonResult:
    kind: str
    metric: str  # "sup-error" | "tv" | "ks"
    per_n: tuple[PerNResult, ...]
    monotone: str  # "decreasing" | "not-decreasing" | "insufficient data"
    details: dict = field(default_factory=dict)

    @property
    def final_mean(self) -> float:
        return self.per_n[-1].mean

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "metric": self.metric,
            "per_n": [
                {
                    "n": p.n,
                    "mean": p.mean,
                    "stderr": p.stderr,
                    "excluded": p.excluded,
                    "errors": p.errors.tolist(),
                }
                for p in self.per_n
            ],
            "monotone": self.monotone,
            "details": self.details,
        }

    def to_json(self, fh, indent=2) -> None:
        json.dump(self.to_dict(), fh, indent=indent)
        fh.write("\n")

    def to_csv(self, fh) -> None:
        """Per-N matrix: one row per N, replica statistics in columns."""
        width = max(p.errors.size for p in self.per_n)
        fh.write("n,mean,stderr,excluded," + ",".join(f"r{i}" for i in range(width)) + "\n")
        for p in self.per_n:
            row = [str(p.n), repr(p.mean), repr(p.stderr), str(p.excluded)]
            row += [repr(float(e)) for e in p.errors]
            row += [""] * (width - p.errors.size)
            fh.write(",".join(row) + "\n")


def _monotone_verdict(per_n: Sequence[PerNResult]) -> str:
    if len(per_n) < 2:
        return "insufficient data"
    for a, b in zip(per_n, per_n[1:]):
        slack = math.hypot(a.stderr if a.stderr == a.stderr else 0.0,
                           b.stderr if b.stderr == b.stderr else 0.0)
        if b.mean > a.mean + slack:
            return "not-decreasing"
    return "decreasing"


def _aggregate(n: int, errors: list[float], excluded: int, replicas: int) -> PerNResult:
    if excluded > 0.10 * replicas:
        raise ContractError(
            f"{excluded}/{replicas} replicas excluded at N={n}; experiment invalid"
        )
    arr = np.asarray(errors, dtype=float)
    stderr = float(np.std(arr, ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return PerNResult(n=n, errors=arr, mean=float(np.mean(arr)), stderr=stderr, excluded=excluded)


def _run_replicas(fn: Callable[[int], float | None], replicas: int, jobs: int) -> tuple[list[float], int]:
    """Run fn(replica) -> statistic or None (excluded), optionally threaded."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(fn, range(replicas)))
    else:
        results = [fn(r) for r in range(replicas)]
    errors = [v for v in results if v is not None]
    return errors, results.count(None)


def _grid(spec: ScalingSpec) -> np.ndarray:
    # start at horizon/grid_points: regimes stated on open intervals make
    # t = 0 ambiguous, and the first sample is the initial state anyway
    eps = spec.horizon / spec.grid_points
    return np.linspace(eps, spec.horizon, spec.grid_points)


def run_scaling_experiment(
    net: ReactionNetwork,
    spec: ScalingSpec,
    reference: LimitCurve,
    seed: int,
    jobs: int = 1,
) -> ComparisonResult:
    """Sup-distance between scaled replica paths and a reference curve.

    For each N and replica, the process runs to the raw image of the scaled
    horizon, coordinates are divided by N^alpha_i, and the error is the sup
    over the scaled grid and compared components of |scaled - reference|.
    """
    scaled_grid = _grid(spec)
    if reference.t_end <= spec.horizon:
        raise ContractError("reference domain must cover the horizon")
    comps = spec.compare_components or reference.components
    ref_vals = reference.eval_grid(scaled_grid)  # (m, len(reference.components))
    col_of = {c: j for j, c in enumerate(reference.components)}
    per_n = []
    for i, n in enumerate(spec.n_values):
        x0 = tuple(int(v) for v in spec.initial_state(n))
        raw_grid = np.array([spec.timescale.raw(t, n) for t in scaled_grid])
        cfg = SimConfig(
            seed=seed,
            max_time=float(raw_grid[-1]),
            max_events=spec.max_events,
            thinning=Thinning.at_times(raw_grid),
        )
        scale = np.array([float(n) ** a for a in spec.space_exponents])

        def one(r: int, x0=x0, cfg=cfg, scale=scale, i=i) -> float | None:
            rec = simulate(net, x0, cfg, key=(i, r))
            if rec.termination == "event-limit":
                return None
            scaled = rec.states[1:] / scale[None, :]
            err = 0.0
            for c in comps:
                err = max(err, float(np.max(np.abs(scaled[:, c] - ref_vals[:, col_of[c]]))))
            return err

        errors, excluded = _run_replicas(one, spec.replicas, jobs)
        per_n.append(_aggregate(n, errors, excluded, spec.replicas))
    return ComparisonResult(
        kind="scaling",
        metric="sup-error",
        per_n=tuple(per_n),
        monotone=_monotone_verdict(per_n),
        details={"components": list(comps), "horizon": spec.horizon},
    )


def classical_rescale(net: ReactionNetwork, n: int) -> ReactionNetwork:
    """Rates kappa_r / N^(|y_r^-| - 1): the density-scaling of reaction rates."""
    return net.with_rates(
        [r.rate_constant / float(n) ** (r.source.size - 1) for r in net.reactions]
    )


def run_classical_scaling(
    net: ReactionNetwork,
    spec: ScalingSpec,
    seed: int,
    reference: LimitCurve | None = None,
    dt: float = 1e-3,
    jobs: int = 1,
) -> ComparisonResult:
    """Density scaling: rescaled rates, raw clock, space scaled by 1/N.

    The reference defaults to the mass-action ODE integrated from
    initial_state(N)/N for each N (the integrator is the oracle).
    """
    from .limits import integrate_mass_action_ode

    scaled_grid = _grid(spec)
    per_n = []
    comps = spec.compare_components or tuple(range(net.n_species))
    for i, n in enumerate(spec.n_values):
        x0 = tuple(int(v) for v in spec.initial_state(n))
        scaled_net = classical_rescale(net, n)
        if reference is None:
            ref = integrate_mass_action_ode(
                net, np.array(x0, dtype=float) / n, dt=dt, t_end=spec.horizon * 1.02
            )
        else:
            ref = reference
        ref_vals = ref.eval_grid(scaled_grid)
        col_of = {c: j for j, c in enumerate(ref.components)}
        cfg = SimConfig(
            seed=seed,
            max_time=float(scaled_grid[-1]),
            max_events=spec.max_events,
            thinning=Thinning.at_times(scaled_grid),
        )

        def one(r: int, x0=x0, cfg=cfg, scaled_net=scaled_net, ref_vals=ref_vals, col_of=col_of, i=i, n=n):
            rec = simulate(scaled_net, x0, cfg, key=(i, r))
            if rec.termination == "event-limit":
                return None
            scaled = rec.states[1:] / float(n)
            err = 0.0
            for c in comps:
                err = max(err, float(np.max(np.abs(scaled[:, c] - ref_vals[:, col_of[c]]))))
            return err

        errors, excluded = _run_replicas(one, spec.replicas, jobs)
        per_n.append(_aggregate(n, errors, excluded, spec.replicas))
    return ComparisonResult(
        kind="classical",
        metric="sup-error",
        per_n=tuple(per_n),
        monotone=_monotone_verdict(per_n),
        details={"components": list(comps), "horizon": spec.horizon},
    )


def tv_distance(emp: np.ndarray, ref: np.ndarray, emp_overflow: float = 0.0) -> float:
    """Total variation on a common integer support, tails counted in full."""
    m = max(emp.size, ref.size)
    e = np.zeros(m)
    r = np.zeros(m)
    e[: emp.size] = emp
    r[: ref.size] = ref
    ref_leak = max(0.0, 1.0 - float(ref.sum()))
    return 0.5 * (float(np.abs(e - r).sum()) + emp_overflow + ref_leak)


def run_occupation_experiment(
    net: ReactionNetwork,
    spec: ScalingSpec,
    reference: np.ndarray | LimitJumpProcess,
    projection: int,
    seed: int,
    condition_min: int = 0,
    state_cap: int | None = None,
    jobs: int = 1,
    min_excursions: int = 20,
) -> ComparisonResult:
    """Occupation-measure comparison, two reference flavors.

    Stationary pmf (ndarray over integers 0..M): per replica, the process
    runs to the raw horizon, the time marginal of the projected coordinate
    (conditioned on >= condition_min) is compared to the pmf by total
    variation; tail mass beyond the histogram and reference support counts
    toward the distance, never silently dropped.

    LimitJumpProcess: per replica, one boundary excursion is recorded (first
    downcrossing of coordinate 0 through level p); the statistic per N is
    the KS statistic of -ln(ratio)/delta1 against Exp(1), with the mean
    scaled duration reported in details.
    """
    if isinstance(reference, LimitJumpProcess):
        return _excursion_experiment(net, spec, reference, projection, seed, jobs, min_excursions)
    ref = np.asarray(reference, dtype=float)
    per_n = []
    for i, n in enumerate(spec.n_values):
        x0 = tuple(int(v) for v in spec.initial_state(n))
        cap = state_cap if state_cap is not None else max(4 * max(ref.size, 8), 64)
        raw_horizon = spec.timescale.raw(spec.horizon, n)
        cfg = SimConfig(seed=seed, max_time=raw_horizon, max_events=spec.max_events)

        def one(r: int, x0=x0, cfg=cfg, cap=cap, i=i, raw_horizon=raw_horizon):
            occ = occupation_measure(
                net, x0, projection,
                time_scale=1.0, space_scale=1.0,
                horizon=raw_horizon, cfg=cfg, state_cap=cap, key=(i, r),
            )
            mass = occ.mass.sum(axis=0)
            over = float(occ.overflow_mass.sum())
            if condition_min > 0:
                mass = mass.copy()
                mass[:condition_min] = 0.0
            tot = mass.sum() + over
            if tot <= 0:
                return None
            return tv_distance(mass / tot, ref, emp_overflow=over / tot)

        errors, excluded = _run_replicas(one, spec.replicas, jobs)
        per_n.append(_aggregate(n, errors, excluded, spec.replicas))
    return ComparisonResult(
        kind="occupation",
        metric="tv",
        per_n=tuple(per_n),
        monotone=_monotone_verdict(per_n),
        details={"projection": projection, "condition_min": condition_min},
    )


def _excursion_experiment(
    net: ReactionNetwork,
    spec: ScalingSpec,
    proc: LimitJumpProcess,
    projection: int,
    seed: int,
    jobs: int,
    min_excursions: int,
) -> ComparisonResult:
    per_n = []
    durations: dict[int, float] = {}
    counts: dict[int, int] = {}
    for i, n in enumerate(spec.n_values):
        x0 = tuple(int(v) for v in spec.initial_state(n))
        rule = Downcross(coord=0, level=proc.p, count=1)
        raw_horizon = spec.timescale.raw(spec.horizon, n)
        cfg = SimConfig(
            seed=seed, max_time=raw_horizon, max_events=spec.max_events,
            thinning=Thinning.none(),
        )

        def one(r: int, x0=x0, cfg=cfg, i=i):
            res = run_until(net, x0, rule, cfg, key=(i, r))
            if not res.fired:
                return None
            return (res.time, res.state[projection])

        results, excluded = _run_replicas(one, spec.replicas, jobs)
        if len(results) < min_excursions:
            raise ContractError(
                f"only {len(results)} excursions at N={n}; need {min_excursions}"
            )
        times = np.array([t for t, _ in results])
        finals = np.array([v for _, v in results], dtype=float)
        start = float(x0[projection])
        ratios = np.clip(finals / start, 1e-12, None)
        transformed = -np.log(ratios) / proc.delta1
        ks = stats.kstest(transformed, "expon")
        scaled_durations = times / start ** (proc.p - 1)
        durations[n] = float(np.mean(scaled_durations))
        counts[n] = len(results)
        per_n.append(
            PerNResult(
                n=n,
                errors=transformed,
                mean=float(ks.statistic),
                stderr=float("nan"),
                excluded=excluded,
            )
        )
    details = {
        "mean_scaled_duration": {str(k): v for k, v in durations.items()},
        "expected_duration": 1.0 / proc.r1,
        "delta1": proc.delta1,
        "excursions": {str(k): v for k, v in counts.items()},
        "ks_pvalue": {
            str(p.n): float(stats.kstest(p.errors, "expon").pvalue) for p in per_n
        },
    }
    return ComparisonResult(
        kind="occupation",
        metric="ks",
        per_n=tuple(per_n),
        monotone="insufficient data",
        details=details,
    )


@dataclass(frozen=True)
class DriftSurveyRow:
    estimate: DriftEstimate
    stopped_over_initial: float  # E[f(X(tau))] / f(x)
    tau_over_initial: float  # E[tau] / f(x)


def run_drift_survey(
    net: ReactionNetwork,
    states: Sequence[Sequence[int]],
    energy: Energy,
    rule: StopRule,
    replicas: int,
    seed: int,
    max_time: float = 1e9,
    max_events: int = 10**8,
) -> list[DriftSurveyRow]:
    """estimate_drift at each state, with the two scaled ratios reported.

    The ratios probe the positive-recurrence conditions: stopped energy over
    initial energy staying below 1, and mean stopping time growing at most
    linearly with the energy.
    """
    cfg = SimConfig(seed=seed, max_time=max_time, max_events=max_events, thinning=Thinning.none())
    rows = []
    for j, x0 in enumerate(states):
        est = estimate_drift(net, x0, energy, rule, replicas, cfg, key=(j,))
        f0 = est.energy_x0
        rows.append(
            DriftSurveyRow(
                estimate=est,
                stopped_over_initial=(f0 + est.mean_change) / f0 if f0 > 0 else float("nan"),
                tau_over_initial=est.mean_tau / f0 if f0 > 0 else float("nan"),
            )
        )
    return rows


def trajectory_curve(record, n: int, space_exponents: Sequence[float], timescale: Timescale) -> LimitCurve:
    """Scaled step-function view of a recorded trajectory.

    Evaluating another replica against its own curve gives error exactly 0;
    used as the self-comparison reference.
    """
    times = record.times
    scale = np.array([float(n) ** a for a in space_exponents])
    states = record.states / scale[None, :]

    def fn(t: float) -> np.ndarray:
        raw = timescale.raw(t, n)
        i = int(np.searchsorted(times, raw, side="right")) - 1
        return states[max(i, 0)]

    return LimitCurve(
        evaluator=fn,
        t_end=math.inf,
        components=tuple(range(states.shape[1])),
        parameters={"kind": "empirical"},
    )
