"""Exact simulation of the mass-action jump process plus Monte Carlo estimators.

Entry points:
  * simulate           one trajectory, thinned recording
  * run_until          trajectory up to a stopping rule
  * estimate_drift     replica estimate of E[f(X(tau))] - f(x) and E[tau]
  * occupation_measure sojourn-time histogram of a scaled coordinate
  * joint_occupation   sojourn-time histogram of the full state in a box
  * hitting_time_sample replica hitting times with censoring flags

Randomness: replica r of a run with master seed s reads the Philox stream
keyed by SeedSequence(s, spawn_key=(r, ...)), so any replica is reproducible
in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _engine
from .errors import ContractError, PropensityOverflowError
from .network import ReactionNetwork, State, as_state
from ._engine import ABSORBED, EXHAUSTED, OVERFLOWED, RUNNING, STOPPED, TIMED_OUT


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class Thinning:
    """What to keep from a trajectory: every event, every k-th, or a time grid."""

    kind: str = "every-event"  # "every-event" | "every-k" | "grid"
    k: int = 1
    dt: float | None = None
    times: tuple[float, ...] | None = None

    @staticmethod
    def every_event() -> "Thinning":
        return Thinning("every-event")

    @staticmethod
    def every(k: int) -> "Thinning":
        return Thinning("every-k", k=int(k))

    @staticmethod
    def on_grid(dt: float) -> "Thinning":
        return Thinning("grid", dt=float(dt))

    @staticmethod
    def at_times(times: Sequence[float]) -> "Thinning":
        return Thinning("grid", times=tuple(float(t) for t in times))

    @staticmethod
    def none() -> "Thinning":
        """Keep only the initial sample (cheapest)."""
        return Thinning("every-k", k=2**62)


@dataclass(frozen=True)
class SimConfig:
    """Run limits and reproducibility knobs.

    max_time is mandatory and max_events defaults to 1e8: polynomial rates
    can pack infinitely many jumps into finite time, so every run carries
    both guards and records which one ended it.
    """

    seed: int
    max_time: float
    max_events: int = 10**8
    thinning: Thinning = field(default_factory=Thinning.every_event)
    engine: str = "auto"  # "auto" | "numba" | "python"
    block: int = 1 << 17

    def __post_init__(self):
        if not (self.max_time > 0):
            raise ContractError("max_time must be positive")
        if not (self.max_events > 0):
            raise ContractError("max_events must be positive")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Thinned samples of one replica plus how the run ended."""

    times: np.ndarray  # (m,)
    states: np.ndarray  # (m, n)
    termination: str  # "time-limit" | "event-limit" | "absorbed" | "stop-rule"
    event_count: int
    final_time: float
    final_state: State

    def to_csv(self, fh) -> None:
        """CSV with header t,x_1,...,x_n and a footer comment with the termination."""
        n = self.states.shape[1]
        cols = ["t"] + [f"x_{i + 1}" for i in range(n)]
        fh.write(",".join(cols) + "\n")
        for t, row in zip(self.times, self.states):
            fh.write(",".join([repr(float(t))] + [str(int(v)) for v in row]) + "\n")
        fh.write(f"# termination: {self.termination}\n")


# -- stopping rules -----------------------------------------------------------


@dataclass(frozen=True)
class StopRule:
    """Base marker; concrete rules below."""


@dataclass(frozen=True)
class NthJump(StopRule):
    n: int = 1


@dataclass(frozen=True)
class FixedTime(StopRule):
    eta: float


@dataclass(frozen=True)
class HitSet(StopRule):
    """Stop when the state enters a set.

    Either a structured single-coordinate test (fast path) or an arbitrary
    predicate on states (checked after every jump, pure-Python pace).
    The initial state is tested too: a target containing x0 stops at t=0.
    """

    coord: int | None = None
    op: str | None = None  # ">=", "<=", "=="
    value: int | None = None
    predicate: Callable[[State], bool] | None = None

    def test(self, x: Sequence[int]) -> bool:
        if self.predicate is not None:
            return bool(self.predicate(tuple(int(v) for v in x)))
        v = x[self.coord]
        if self.op == ">=":
            return v >= self.value
        if self.op == "<=":
            return v <= self.value
        if self.op == "==":
            return v == self.value
        raise ContractError(f"bad comparison op {self.op!r}")


@dataclass(frozen=True)
class JumpOfType(StopRule):
    """Stop at the count-th firing of any reaction in the subset."""

    reactions: tuple[int, ...]
    count: int = 1


@dataclass(frozen=True)
class JumpExcluding(StopRule):
    """Stop at the count-th firing of any reaction NOT in the subset."""

    reactions: tuple[int, ...]
    count: int = 1


@dataclass(frozen=True)
class Displacement(StopRule):
    """Stop at the count-th jump with the given state change vector."""

    delta: tuple[int, ...]
    count: int = 1


@dataclass(frozen=True)
class Downcross(StopRule):
    """Stop at the count-th jump taking coordinate from >= level to < level."""

    coord: int
    level: int
    count: int = 1


@dataclass(frozen=True)
class RuleSequence(StopRule):
    """Stages run one after another; each stage's clock is relative to its start."""

    rules: tuple[StopRule, ...]


_OPS = {">=": 0, "<=": 1, "==": 2}


def _kernel_params(rule: StopRule, net: ReactionNetwork):
    """Translate a rule to kernel stop parameters; None -> needs python path."""
    n_r = len(net.reactions)
    mask = np.zeros(n_r, dtype=np.bool_)
    if isinstance(rule, NthJump):
        return (_engine.STOP_NTH, 0, 0, 0, int(rule.n), mask)
    if isinstance(rule, HitSet):
        if rule.predicate is not None:
            return None
        return (_engine.STOP_COORD, int(rule.coord), _OPS[rule.op], int(rule.value), 1, mask)
    if isinstance(rule, JumpOfType):
        mask[list(rule.reactions)] = True
        return (_engine.STOP_RTYPE, 0, 0, 0, int(rule.count), mask)
    if isinstance(rule, JumpExcluding):
        mask[:] = True
        mask[list(rule.reactions)] = False
        return (_engine.STOP_RTYPE, 0, 0, 0, int(rule.count), mask)
    if isinstance(rule, Displacement):
        want = tuple(int(v) for v in rule.delta)
        hits = [i for i, r in enumerate(net.reactions) if r.delta == want]
        mask[hits] = True
        return (_engine.STOP_RTYPE, 0, 0, 0, int(rule.count), mask)
    if isinstance(rule, Downcross):
        return (_engine.STOP_DOWN, int(rule.coord), 0, int(rule.level), int(rule.count), mask)
    raise ContractError(f"rule {rule!r} has no kernel form")


# -- the trajectory driver ----------------------------------------------------


def replica_rng(seed: int, key: Sequence[int] = ()) -> np.random.Generator:
    """Philox stream for (master seed, key); documented per-replica streams."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


class _Driver:
    """One trajectory: owns state, clock, RNG block, and kernel dispatch."""

    def __init__(self, net: ReactionNetwork, x0: Sequence[int], cfg: SimConfig, key=()):
        x0 = as_state(x0)
        if len(x0) != net.n_species:
            raise ContractError(
                f"initial state has {len(x0)} entries, network has {net.n_species} species"
            )
        self.net = net
        self.cfg = cfg
        self.sources = net.source_matrix()
        self.deltas = net.delta_matrix()
        self.kappa = net.rate_vector()
        self.n = net.n_species
        self.x = np.array(x0, dtype=np.int64)
        self.t = 0.0
        self.events = 0
        self.gen = replica_rng(cfg.seed, key)
        self.buf = self.gen.random(cfg.block)
        self.ptr = 0
        self.kernel, self.engine_name = _engine.get_kernel(cfg.engine)
        n_r = max(1, len(net.reactions))
        self._dummy_mask = np.zeros(n_r, dtype=np.bool_)
        self._dummy_grid = np.zeros(0)
        self._dummy_grid_x = np.zeros((0, self.n), dtype=np.int64)
        self._dummy_rec_t = np.zeros(0)
        self._dummy_rec_x = np.zeros((0, self.n), dtype=np.int64)
        self._dummy_occ = np.zeros((1, 1))
        self._dummy_occ_over = np.zeros(1)
        self._dummy_wsum = np.zeros((1, self.n))
        self._dummy_box = np.ones(self.n, dtype=np.int64)

    def _refill(self):
        self.buf = self.gen.random(self.cfg.block)
        self.ptr = 0

    def advance(
        self,
        max_time: float,
        stop=(0, 0, 0, 0, 1, None),
        rec_every: int = 0,
        collect=None,
        grid: np.ndarray | None = None,
        grid_x: np.ndarray | None = None,
        grid_pos: int = 0,
        occ=None,
    ):
        """Run until a terminal status; refills random blocks as needed.

        Returns (status, grid_pos).  collect, when given, receives
        (times, states) chunks of thinned samples.
        """
        mode, coord, op, level, count, mask = stop
        if mask is None:
            mask = self._dummy_mask
        if grid is None:
            grid, grid_x = self._dummy_grid, self._dummy_grid_x
        if occ is None:
            occ_mode, occ_proj, occ_tbin = 0, 0, 1.0
            occ_arr, occ_over, wsum, box = (
                self._dummy_occ,
                self._dummy_occ_over,
                self._dummy_wsum,
                self._dummy_box,
            )
        else:
            occ_mode, occ_proj, occ_tbin, box, occ_arr, occ_over, wsum = occ
        cap = 0
        if rec_every > 0:
            cap = self.cfg.block // (2 * rec_every) + 2
        while True:
            rec_t = np.empty(cap) if cap else self._dummy_rec_t
            rec_x = np.empty((cap, self.n), dtype=np.int64) if cap else self._dummy_rec_x
            events_left = self.cfg.max_events - self.events
            status, t, ptr, events_done, count, rec_pos, grid_pos = self.kernel(
                self.x,
                self.t,
                self.buf,
                self.ptr,
                self.sources,
                self.deltas,
                self.kappa,
                float(max_time),
                int(events_left),
                int(mode),
                int(coord),
                int(op),
                int(level),
                int(count),
                mask,
                int(rec_every),
                rec_t,
                rec_x,
                0,
                grid,
                grid_x,
                int(grid_pos),
                int(occ_mode),
                int(occ_proj),
                float(occ_tbin),
                box,
                occ_arr,
                occ_over,
                wsum,
                int(self.events),
            )
            self.t = t
            self.ptr = ptr
            self.events = events_done
            if collect is not None and rec_pos > 0:
                collect((rec_t[:rec_pos].copy(), rec_x[:rec_pos].copy()))
            if status == RUNNING:
                self._refill()
                continue
            if status == OVERFLOWED:
                raise PropensityOverflowError(
                    f"total jump rate overflowed at t={self.t}", state=tuple(self.x)
                )
            return status, grid_pos

    def state(self) -> State:
        return tuple(int(v) for v in self.x)


_TERMINATION = {
    TIMED_OUT: "time-limit",
    EXHAUSTED: "event-limit",
    ABSORBED: "absorbed",
    STOPPED: "stop-rule",
}


def _build_grid(thinning: Thinning, max_time: float) -> np.ndarray | None:
    if thinning.kind != "grid":
        return None
    if thinning.times is not None:
        g = np.asarray(thinning.times, dtype=float)
    else:
        g = np.arange(thinning.dt, max_time + 0.5 * thinning.dt, thinning.dt)
    if np.any(np.diff(g) <= 0) or (g.size and (g[0] < 0 or g[-1] > max_time)):
        raise ContractError("grid times must be increasing within [0, max_time]")
    return g


def simulate(
    net: ReactionNetwork, x0: Sequence[int], cfg: SimConfig, key: Sequence[int] = ()
) -> TrajectoryRecord:
    """One exact trajectory; deterministic given (net, x0, cfg, key)."""
    drv = _Driver(net, x0, cfg, key=key)
    chunks: list[tuple[np.ndarray, np.ndarray]] = []
    grid = _build_grid(cfg.thinning, cfg.max_time)
    if grid is not None:
        grid_x = np.zeros((grid.size, drv.n), dtype=np.int64)
        status, gpos = drv.advance(cfg.max_time, grid=grid, grid_x=grid_x, grid_pos=0)
        times = np.concatenate(([0.0], grid[:gpos]))
        states = np.vstack([np.array([as_state(x0)], dtype=np.int64), grid_x[:gpos]])
    else:
        rec_every = 1 if cfg.thinning.kind == "every-event" else cfg.thinning.k
        status, _ = drv.advance(cfg.max_time, rec_every=rec_every, collect=chunks.append)
        times = np.concatenate([[0.0]] + [c[0] for c in chunks])
        states = np.vstack([np.array([as_state(x0)], dtype=np.int64)] + [c[1] for c in chunks])
    return TrajectoryRecord(
        times=times,
        states=states,
        termination=_TERMINATION[status],
        event_count=drv.events,
        final_time=drv.t,
        final_state=drv.state(),
    )


@dataclass(frozen=True)
class RunResult:
    record: TrajectoryRecord
    state: State
    time: float
    fired: bool  # False -> censored by a limit (reported, not an error)


def _run_rule(drv: _Driver, rule: StopRule, cfg: SimConfig, collect=None, rec_every: int = 0):
    """Advance one driver until the rule fires or a limit censors it."""
    if isinstance(rule, RuleSequence):
        if not rule.rules:
            raise ContractError("empty rule sequence")
        for stage in rule.rules:
            status = _run_rule(drv, stage, cfg, collect=collect, rec_every=rec_every)
            if status != STOPPED:
                return status
        return STOPPED
    if isinstance(rule, FixedTime):
        if rule.eta < 0:
            raise ContractError("fixed-time rule needs eta >= 0")
        if rule.eta == 0:
            return STOPPED
        deadline = drv.t + rule.eta
        if deadline > cfg.max_time:
            # The rule cannot fire within limits; run out the clock, censored.
            status, _ = drv.advance(cfg.max_time, rec_every=rec_every, collect=collect)
            return status
        status, _ = drv.advance(deadline, rec_every=rec_every, collect=collect)
        if status in (TIMED_OUT, ABSORBED):
            # Absorption does not stop the clock: X(deadline) is well defined.
            drv.t = deadline
            return STOPPED
        return status
    if isinstance(rule, HitSet):
        if rule.test(drv.x):
            return STOPPED
        if rule.predicate is None:
            params = _kernel_params(rule, drv.net)
            status, _ = drv.advance(cfg.max_time, stop=params, rec_every=rec_every, collect=collect)
            return status
        while True:  # generic predicate: single-step pace
            status, _ = drv.advance(
                cfg.max_time,
                stop=(_engine.STOP_NTH, 0, 0, 0, 1, None),
                rec_every=rec_every,
                collect=collect,
            )
            if status != STOPPED:
                return status
            if rule.test(drv.x):
                return STOPPED
    params = _kernel_params(rule, drv.net)
    status, _ = drv.advance(cfg.max_time, stop=params, rec_every=rec_every, collect=collect)
    return status


def run_until(
    net: ReactionNetwork, x0: Sequence[int], rule: StopRule, cfg: SimConfig, key: Sequence[int] = ()
) -> RunResult:
    """Simulate until the rule fires; censored runs report fired=False."""
    drv = _Driver(net, x0, cfg, key=key)
    chunks: list[tuple[np.ndarray, np.ndarray]] = []
    rec_every = 0
    if cfg.thinning.kind == "every-event":
        rec_every = 1
    elif cfg.thinning.kind == "every-k" and cfg.thinning.k < 2**62:
        rec_every = cfg.thinning.k
    status = _run_rule(drv, rule, cfg, collect=chunks.append, rec_every=rec_every)
    times = np.concatenate([[0.0]] + [c[0] for c in chunks])
    states = np.vstack([np.array([as_state(x0)], dtype=np.int64)] + [c[1] for c in chunks])
    record = TrajectoryRecord(
        times=times,
        states=states,
        termination=_TERMINATION[status],
        event_count=drv.events,
        final_time=drv.t,
        final_state=drv.state(),
    )
    return RunResult(record=record, state=drv.state(), time=drv.t, fired=status == STOPPED)


# -- energies and drift -------------------------------------------------------


@dataclass(frozen=True)
class Energy:
    name: str
    fn: Callable[[State], float]

    def __call__(self, x: Sequence[int]) -> float:
        return self.fn(tuple(int(v) for v in x))


def linear_energy(weights: Sequence[float] | None = None) -> Energy:
    if weights is None:
        return Energy("norm", lambda x: float(sum(x)))
    w = tuple(float(v) for v in weights)
    return Energy("linear", lambda x: float(sum(wi * xi for wi, xi in zip(w, x))))


def entropy_energy() -> Energy:
    """sum_i (x_i ln x_i - x_i + 1), with the continuous extension 0 ln 0 = 0."""

    def fn(x):
        out = 0.0
        for v in x:
            out += (v * math.log(v) if v > 0 else 0.0) - v + 1.0
        return out

    return Energy("entropy", fn)


def polynomial_energy(exponents: Sequence[float], weights: Sequence[float] | None = None) -> Energy:
    e = tuple(float(v) for v in exponents)
    w = tuple(float(v) for v in weights) if weights is not None else (1.0,) * len(e)
    return Energy(
        "polynomial",
        lambda x: float(sum(wi * (xi**ei) for wi, ei, xi in zip(w, e, x))),
    )


@dataclass(frozen=True)
class DriftEstimate:
    """Monte Carlo estimate of the stopped energy drift at one initial state."""

    energy_name: str
    x0: State
    energy_x0: float
    mean_change: float
    stderr_change: float
    mean_tau: float
    stderr_tau: float
    drift_ratio: float  # mean_change / mean_tau
    replicas: int
    censored: int

    def to_dict(self) -> dict:
        return {
            "energy": self.energy_name,
            "x0": list(self.x0),
            "energy_x0": self.energy_x0,
            "mean_change": self.mean_change,
            "stderr_change": self.stderr_change,
            "mean_tau": self.mean_tau,
            "stderr_tau": self.stderr_tau,
            "drift_ratio": self.drift_ratio,
            "replicas": self.replicas,
            "censored": self.censored,
        }


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    if values.size < 2:
        return m, float("nan")
    return m, float(np.std(values, ddof=1) / math.sqrt(values.size))


def estimate_drift(
    net: ReactionNetwork,
    x0: Sequence[int],
    energy: Energy,
    rule: StopRule,
    replicas: int,
    cfg: SimConfig,
    key: Sequence[int] = (),
) -> DriftEstimate:
    """Estimate E_x[f(X(tau))] - f(x) and E_x[tau] over independent replicas.

    Censored replicas (limits hit before the rule fired) are excluded from
    the averages and reported in the count; all-censored is an error.
    """
    if replicas < 2:
        raise ContractError("need at least 2 replicas")
    x0 = as_state(x0)
    f0 = energy(x0)
    changes, taus = [], []
    censored = 0
    light = replace(cfg, thinning=Thinning.none())
    for r in range(replicas):
        res = run_until(net, x0, rule, light, key=(*key, r))
        if not res.fired:
            censored += 1
            continue
        changes.append(energy(res.state) - f0)
        taus.append(res.time)
    if not changes:
        raise ContractError("all replicas were censored; no drift estimate")
    mc, sc = _mean_stderr(np.array(changes))
    mt, st = _mean_stderr(np.array(taus))
    return DriftEstimate(
        energy_name=energy.name,
        x0=x0,
        energy_x0=f0,
        mean_change=mc,
        stderr_change=sc,
        mean_tau=mt,
        stderr_tau=st,
        drift_ratio=mc / mt if mt > 0 else float("nan"),
        replicas=replicas,
        censored=censored,
    )


# -- occupation measures ------------------------------------------------------


@dataclass(frozen=True)
class OccupationMeasure:
    """Sojourn mass over (scaled time bin) x (scaled state bin).

    mass[b, k] is the sojourn time (divided by time_scale) the projected
    coordinate spent at integer value k while the scaled clock was in bin b.
    Total mass equals the elapsed scaled horizon exactly; sojourn intervals
    are split across bin edges, never rounded.
    """

    time_edges: np.ndarray  # (B+1,) in scaled time
    state_values: np.ndarray  # (M,) scaled state values k / space_scale
    mass: np.ndarray  # (B, M)
    overflow_mass: np.ndarray  # (B,) sojourn above the histogram cap
    space_scale: float
    time_scale: float
    elapsed_scaled: float

    def total_mass(self) -> float:
        return float(self.mass.sum() + self.overflow_mass.sum())

    def time_marginal(self) -> np.ndarray:
        """Distribution over state bins, aggregated over the whole horizon."""
        m = self.mass.sum(axis=0)
        tot = m.sum() + self.overflow_mass.sum()
        return m / tot if tot > 0 else m

    def conditional_marginal(self, min_value: int) -> np.ndarray:
        """Time marginal conditioned on integer state >= min_value."""
        m = self.mass.sum(axis=0).copy()
        m[:min_value] = 0.0
        tot = m.sum()
        if tot == 0:
            raise ContractError("no mass above the conditioning threshold")
        return m / tot


def occupation_measure(
    net: ReactionNetwork,
    x0: Sequence[int],
    projection: int,
    time_scale: float,
    space_scale: float,
    horizon: float,
    cfg: SimConfig,
    time_bins: int = 1,
    state_cap: int | None = None,
    key: Sequence[int] = (),
) -> OccupationMeasure:
    """Exact sojourn accounting of one coordinate under time/space scaling.

    The trajectory runs to raw time horizon*time_scale; mass is deposited as
    raw sojourn / time_scale at the integer value of coordinate
    ``projection``, reported against scaled values value/space_scale.
    """
    if time_scale <= 0 or space_scale <= 0 or horizon <= 0:
        raise ContractError("scales and horizon must be positive")
    x0 = as_state(x0)
    raw_horizon = horizon * time_scale
    if raw_horizon > cfg.max_time:
        raise ContractError("cfg.max_time must cover horizon * time_scale")
    if state_cap is None:
        state_cap = 4 * x0[projection] + 256
    occ = np.zeros((time_bins, state_cap + 1))
    occ_over = np.zeros(time_bins)
    wsum = np.zeros((time_bins, net.n_species))
    box = np.ones(net.n_species, dtype=np.int64)
    tbin = raw_horizon / time_bins
    drv = _Driver(net, x0, cfg, key=key)
    drv.advance(
        raw_horizon,
        occ=(1, int(projection), tbin, box, occ, occ_over, wsum),
    )
    elapsed = min(drv.t, raw_horizon) / time_scale
    return OccupationMeasure(
        time_edges=np.linspace(0.0, horizon, time_bins + 1),
        state_values=np.arange(state_cap + 1) / space_scale,
        mass=occ / time_scale,
        overflow_mass=occ_over / time_scale,
        space_scale=space_scale,
        time_scale=time_scale,
        elapsed_scaled=elapsed,
    )


@dataclass(frozen=True)
class JointOccupation:
    """Sojourn time over full states inside a box, plus coordinate time-sums."""

    box: tuple[int, ...]
    mass: np.ndarray  # (B, prod(box)) raw sojourn seconds
    overflow_mass: np.ndarray  # (B,)
    weighted_sums: np.ndarray  # (B, n): integral of x_i dt per bin
    elapsed: float

    def state_probability(self) -> dict[State, float]:
        tot = self.mass.sum() + self.overflow_mass.sum()
        flat = self.mass.sum(axis=0)
        out = {}
        for idx in np.nonzero(flat)[0]:
            rem, key = int(idx), []
            for b in reversed(self.box):
                rem, v = divmod(rem, b)
                key.append(v)
            out[tuple(reversed(key))] = float(flat[idx] / tot)
        return out

    def time_average(self) -> np.ndarray:
        """Time average of each coordinate over the whole run."""
        return self.weighted_sums.sum(axis=0) / self.elapsed

    def batch_means(self) -> np.ndarray:
        """Per-time-bin coordinate averages (for batch-mean stderr)."""
        width = self.elapsed / self.mass.shape[0]
        return self.weighted_sums / width


def joint_occupation(
    net: ReactionNetwork,
    x0: Sequence[int],
    box: Sequence[int],
    cfg: SimConfig,
    horizon: float | None = None,
    time_bins: int = 1,
    key: Sequence[int] = (),
) -> JointOccupation:
    """Sojourn histogram of the whole state restricted to [0, box_i) per axis."""
    x0 = as_state(x0)
    box_arr = np.asarray(box, dtype=np.int64)
    if box_arr.shape != (net.n_species,) or np.any(box_arr <= 0):
        raise ContractError("box must give a positive cap per species")
    raw_horizon = cfg.max_time if horizon is None else float(horizon)
    size = int(np.prod(box_arr))
    occ = np.zeros((time_bins, size))
    occ_over = np.zeros(time_bins)
    wsum = np.zeros((time_bins, net.n_species))
    tbin = raw_horizon / time_bins
    drv = _Driver(net, x0, cfg, key=key)
    drv.advance(raw_horizon, occ=(2, 0, tbin, box_arr, occ, occ_over, wsum))
    return JointOccupation(
        box=tuple(int(b) for b in box_arr),
        mass=occ,
        overflow_mass=occ_over,
        weighted_sums=wsum,
        elapsed=min(drv.t, raw_horizon),
    )


# -- hitting times ------------------------------------------------------------


@dataclass(frozen=True)
class HittingSample:
    time: float
    censored: bool


def hitting_time_sample(
    net: ReactionNetwork,
    x0: Sequence[int],
    target: HitSet,
    replicas: int,
    cfg: SimConfig,
    key: Sequence[int] = (),
) -> list[HittingSample]:
    """Independent replica hitting times of a target set, censoring flagged."""
    if replicas < 1:
        raise ContractError("need at least 1 replica")
    light = replace(cfg, thinning=Thinning.none())
    out = []
    for r in range(replicas):
        res = run_until(net, x0, target, light, key=(*key, r))
        out.append(HittingSample(time=res.time, censored=not res.fired))
    return out


# -- reference event iterator -------------------------------------------------


def iter_events(
    net: ReactionNetwork, x0: Sequence[int], rng: np.random.Generator, max_events: int
) -> Iterator[tuple[float, int, State]]:
    """Plain-Python Gillespie, an independent oracle for the kernels.

    Yields (event time, reaction index, post-jump state).  Uses its own draw
    pattern (Generator.exponential), so it shares no code with the kernel
    path; tests lean on it for distributional cross-checks.
    """
    from .network import propensities as props

    x = as_state(x0)
    t = 0.0
    for _ in range(max_events):
        a = props(net, x)
        total = sum(a)
        if total == 0.0:
            return
        t += rng.exponential(1.0 / total)
        u = rng.random() * total
        acc = 0.0
        r = len(a) - 1
        for i, ai in enumerate(a):
            acc += ai
            if u < acc:
                r = i
                break
        x = tuple(v + d for v, d in zip(x, net.reactions[r].delta))
        yield t, r, x
