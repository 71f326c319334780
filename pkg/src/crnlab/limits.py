"""Closed-form and integrated limit curves for the scaling experiments.

A LimitCurve is an evaluator t -> vector on a finite or infinite domain
[0, t_end); evaluating outside raises.  ODE curves come from a fixed-step
fourth-order Runge-Kutta integrator with cubic Hermite evaluation between
nodes, so interpolation error matches the integrator's own order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ContractError
from .network import ReactionNetwork
from .structure import mass_action_field


@dataclass(frozen=True)
class LimitCurve:
    """Vector-valued curve on [0, t_end); t_end may be inf or a blow-up time."""

    evaluator: Callable[[float], np.ndarray]
    t_end: float
    components: tuple[int, ...]  # which process coordinates the values describe
    parameters: dict = field(default_factory=dict)
    blow_up: bool = False

    def __call__(self, t: float) -> np.ndarray:
        if t < 0 or t >= self.t_end:
            raise ContractError(f"t={t} outside curve domain [0, {self.t_end})")
        return np.atleast_1d(np.asarray(self.evaluator(t), dtype=float))

    def eval_grid(self, ts: Sequence[float]) -> np.ndarray:
        return np.vstack([self(float(t)) for t in ts])

    def to_csv(self, ts: Sequence[float], fh) -> None:
        vals = self.eval_grid(ts)
        fh.write("t," + ",".join(f"value_{i}" for i in range(vals.shape[1])) + "\n")
        for t, row in zip(ts, vals):
            fh.write(f"{float(t)!r}," + ",".join(repr(float(v)) for v in row) + "\n")


def closed_form(fn: Callable[[float], Sequence[float]], components=(0,), t_end=math.inf, **params) -> LimitCurve:
    return LimitCurve(
        evaluator=lambda t: np.asarray(fn(t), dtype=float),
        t_end=t_end,
        components=tuple(components),
        parameters=params,
    )


# -- fixed-step RK4 -----------------------------------------------------------


def _rk4(field, x0: np.ndarray, dt: float, t_end: float, ceiling: float):
    ts = [0.0]
    xs = [x0.copy()]
    ds = [field(x0)]
    t, x = 0.0, x0.copy()
    blew = False
    while t < t_end - 1e-15:
        h = min(dt, t_end - t)
        k1 = field(x)
        k2 = field(x + 0.5 * h * k1)
        k3 = field(x + 0.5 * h * k2)
        k4 = field(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > ceiling:
            blew = True
            break
        ts.append(t)
        xs.append(x.copy())
        ds.append(field(x))
    return np.array(ts), np.vstack(xs), np.vstack(ds), blew


def _hermite_curve(ts, xs, ds, components, params, blew) -> LimitCurve:
    t_end = float(ts[-1]) if blew else float(ts[-1]) + 1e-12
    # domain is [0, last accepted node); with blow-up the last node is the cut

    def evaluate(t: float) -> np.ndarray:
        i = int(np.searchsorted(ts, t, side="right")) - 1
        if i >= len(ts) - 1:
            return xs[-1]
        h = ts[i + 1] - ts[i]
        s = (t - ts[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * xs[i] + h * h10 * ds[i] + h01 * xs[i + 1] + h * h11 * ds[i + 1]

    return LimitCurve(
        evaluator=evaluate,
        t_end=t_end,
        components=tuple(components),
        parameters=params,
        blow_up=blew,
    )


def integrate_mass_action_ode(
    net: ReactionNetwork,
    x0: Sequence[float],
    dt: float = 1e-3,
    t_end: float = 10.0,
    ceiling: float = 1e9,
) -> LimitCurve:
    """Integrate the deterministic mass-action ODE (continuous powers).

    Blow-up is detected when any |x_i| exceeds ``ceiling`` or goes non-finite;
    the curve's domain is then truncated and flagged.
    """
    if dt <= 0:
        raise ContractError("dt must be positive")
    x0 = np.asarray(x0, dtype=float)
    fieldfn = mass_action_field(net)
    ts, xs, ds, blew = _rk4(fieldfn, x0, dt, t_end, ceiling)
    return _hermite_curve(
        ts, xs, ds, tuple(range(net.n_species)), {"dt": dt, "kind": "mass-action"}, blew
    )


def dominant_field(net: ReactionNetwork) -> Callable[[np.ndarray], np.ndarray]:
    """Mass-action field keeping only reactions with maximal source size.

    Under the initial-state scaling, reactions fired from smaller complexes
    vanish in the limit; only the fastest family survives.
    """
    top = net.max_source_size
    keep = [r for r in net.reactions if r.source.size == top]
    S = np.array([r.source.counts for r in keep], dtype=float).reshape(len(keep), net.n_species)
    D = np.array([r.delta for r in keep], dtype=float).reshape(len(keep), net.n_species)
    K = np.array([r.rate_constant for r in keep])

    def fieldfn(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        mono = np.prod(np.power(x[None, :], S), axis=1)
        return (K * mono) @ D

    return fieldfn


def integrate_dominant_ode(
    net: ReactionNetwork,
    x0: Sequence[float],
    dt: float = 1e-3,
    t_end: float = 10.0,
    ceiling: float = 1e9,
) -> LimitCurve:
    """Limit ODE of the initial-state scaling (dominant reactions only)."""
    if dt <= 0:
        raise ContractError("dt must be positive")
    x0 = np.asarray(x0, dtype=float)
    ts, xs, ds, blew = _rk4(dominant_field(net), x0, dt, t_end, ceiling)
    return _hermite_curve(
        ts, xs, ds, tuple(range(net.n_species)), {"dt": dt, "kind": "dominant"}, blew
    )


# -- triangle network regimes -------------------------------------------------


def triangle_regime_curves(
    kind: str,
    k2: float = 1.0,
    k12: float = 1.0,
    k1: float = 1.0,
    alpha1: float = 0.5,
    beta: float = 0.0,
    dt: float = 1e-3,
    t_end: float = 20.0,
) -> LimitCurve:
    """Limit curves of the triangle cycle for the three initial-state regimes.

    (a) both coordinates of order N, timescale t/N:
        (alpha1, (1-alpha1) exp(-k12 alpha1 t)), both components scaled by N.
    (b) first coordinate of order sqrt(N), timescale t/sqrt(N): the ODE
        x1' = k2 x2, x2' = -k12 x1 x2 from (beta, 1); component 0 scales by
        sqrt(N), component 1 by N.
    (c) state (N, k): first coordinate on the raw timescale decays as
        exp(-k1 t).
    """
    if kind == "a":
        if not 0 < alpha1 <= 1:
            raise ContractError("regime (a) needs alpha1 in (0, 1]")
        return closed_form(
            lambda t: (alpha1, (1 - alpha1) * math.exp(-k12 * alpha1 * t)),
            components=(0, 1),
            kind="a",
            alpha1=alpha1,
        )
    if kind == "b":
        fieldfn = lambda x: np.array([k2 * x[1], -k12 * x[0] * x[1]])
        ts, xs, ds, blew = _rk4(fieldfn, np.array([beta, 1.0]), dt, t_end, 1e9)
        return _hermite_curve(ts, xs, ds, (0, 1), {"kind": "b", "beta": beta}, blew)
    if kind == "c":
        return closed_form(lambda t: (math.exp(-k1 * t),), components=(0,), kind="c")
    raise ContractError(f"unknown regime {kind!r}")


# -- autocatalytic network curves ----------------------------------------------


@dataclass(frozen=True)
class AutocatalyticCurves:
    """Limit bundle for the network 0->S1+S2, S2->0, pS1+qS2->(q+1)S2->qS2.

    y1 is the power decay of the first coordinate on the t/N^(p-1) timescale
    (for the dominant two-reaction dynamics), y2 = (1 - y1)/p its companion,
    phi the clock change to the full network's t/N^(p+q-1) timescale (needs
    delta < 1 to converge), and final_decay the late-stage 1/(1+k4 q t)^(1/q).
    """

    p: int
    q: int
    k3: float
    k4: float
    delta: float
    y1: LimitCurve
    y2: LimitCurve
    final_decay: LimitCurve

    def phi(self, t: float) -> float:
        if self.delta >= 1:
            raise ContractError("phi diverges at delta = 1; start strictly inside (0,1)")
        val, _ = quad(
            lambda s: self.p**self.q / (1.0 - self._y1(s)) ** self.q, 0.0, t, limit=200
        )
        return float(val)

    def phi_inverse(self, u: float, hi: float = 1e6, tol: float = 1e-10) -> float:
        """Invert the monotone clock phi by bisection."""
        if u < 0:
            raise ContractError("phi_inverse needs u >= 0")
        lo, hi_ = 0.0, 1.0
        while self.phi(hi_) < u:
            hi_ *= 2.0
            if hi_ > hi:
                raise ContractError("phi_inverse bracket exceeded")
        while hi_ - lo > tol * max(1.0, hi_):
            mid = 0.5 * (lo + hi_)
            if self.phi(mid) < u:
                lo = mid
            else:
                hi_ = mid
        return 0.5 * (lo + hi_)

    def _y1(self, t: float) -> float:
        d, p, k3 = self.delta, self.p, self.k3
        return d / (p * (p - 1) * k3 * d ** (p - 1) * t + 1.0) ** (1.0 / (p - 1))

    def time_changed(self) -> LimitCurve:
        """(y1, (1-y1)/p) o phi^{-1}: the full network's scaled limit."""

        def fn(t):
            s = self.phi_inverse(t)
            y1 = self._y1(s)
            return (y1, (1.0 - y1) / self.p)

        return closed_form(fn, components=(0, 1), kind="time-changed", delta=self.delta)


def autocatalytic_curves(
    p: int, q: int, k3: float = 1.0, k4: float = 1.0, delta: float = 1.0
) -> AutocatalyticCurves:
    """Closed-form limit bundle; delta is the scaled starting point of y1."""
    if p < 2 or q < 1:
        raise ContractError("need p >= 2, q >= 1")
    if not 0 < delta <= 1:
        raise ContractError("delta must lie in (0, 1]")

    def y1fn(t):
        return (delta / (p * (p - 1) * k3 * delta ** (p - 1) * t + 1.0) ** (1.0 / (p - 1)),)

    def y2fn(t):
        return ((1.0 - y1fn(t)[0]) / p,)

    def finalfn(t):
        return ((1.0 + k4 * q * t) ** (-1.0 / q),)

    return AutocatalyticCurves(
        p=p,
        q=q,
        k3=k3,
        k4=k4,
        delta=delta,
        y1=closed_form(y1fn, components=(0,), kind="power-decay", p=p, q=q, delta=delta),
        y2=closed_form(y2fn, components=(1,), kind="companion", p=p, q=q, delta=delta),
        final_decay=closed_form(finalfn, components=(1,), kind="final-decay", q=q),
    )


# -- slow/fast network, horizontal regime --------------------------------------


@dataclass(frozen=True)
class SlowFastHorizontalCurves:
    """Limit bundle for the pair-creation network started at (alpha1 N, b).

    On the auxiliary clock the first coordinate follows
    y_inf(t) = alpha1 exp(-(k1 k2 / k3) t); the inserted idle periods stretch
    that clock by a(t), whose inverse turns y_inf into the straight line
    alpha1 (1 - t / t_inf) on the sped-up raw timescale Nt, with
    t_inf = alpha1 / (k0 (e^(k2/k3) - 1)).  Nothing is claimed at or past
    t_inf.
    """

    k0: float
    k1: float
    k2: float
    k3: float
    alpha1: float
    t_inf: float
    y_inf: LimitCurve
    clock: LimitCurve  # a(t)
    linear: LimitCurve  # alpha1 (1 - t/t_inf) on [0, t_inf)

    def clock_inverse(self, t: float) -> float:
        """Closed form a^{-1}(t) for t < t_inf."""
        if not 0 <= t < self.t_inf:
            raise ContractError(f"t={t} outside [0, t_inf={self.t_inf})")
        return -(self.k3 / (self.k1 * self.k2)) * math.log(1.0 - t / self.t_inf)

    def clock_inverse_bisect(self, t: float, tol: float = 1e-10) -> float:
        """Same inverse by bisection; cross-checks the closed form."""
        if not 0 <= t < self.t_inf:
            raise ContractError(f"t={t} outside [0, t_inf={self.t_inf})")
        lo, hi = 0.0, 1.0
        a = lambda s: self.clock(s)[0]
        while a(hi) < t:
            hi *= 2.0
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if a(mid) < t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def slow_fast_horizontal_curves(
    k0: float = 1.0, k1: float = 1.0, k2: float = 1.0, k3: float = 1.0, alpha1: float = 1.0
) -> SlowFastHorizontalCurves:
    if min(k0, k1, k2, k3) <= 0 or alpha1 <= 0:
        raise ContractError("rates and alpha1 must be positive")
    ex = math.expm1(k2 / k3)  # e^(k2/k3) - 1
    t_inf = alpha1 / (k0 * ex)
    rate = k1 * k2 / k3

    y_inf = closed_form(lambda t: (alpha1 * math.exp(-rate * t),), components=(0,), kind="aux-decay")
    clock = closed_form(
        lambda t: (alpha1 / (k0 * ex) * (1.0 - math.exp(-rate * t)),),
        components=(0,),
        kind="clock",
    )
    linear = closed_form(
        lambda t: (alpha1 * (1.0 - t / t_inf),),
        components=(0,),
        t_end=t_inf,
        kind="linear-decay",
    )
    return SlowFastHorizontalCurves(
        k0=k0, k1=k1, k2=k2, k3=k3, alpha1=alpha1, t_inf=t_inf,
        y_inf=y_inf, clock=clock, linear=linear,
    )


def conditioned_poisson_pmf(rate_ratio: float, support: int) -> np.ndarray:
    """Poisson(rate_ratio) conditioned to be >= 1, on {0, ..., support}.

    The stationary law of the fast coordinate in the slow/fast horizontal
    regime, with rate_ratio = k2/k3.
    """
    ks = np.arange(support + 1)
    with np.errstate(divide="ignore"):
        logp = ks * math.log(rate_ratio) - [math.lgamma(k + 1) for k in ks]
    p = np.exp(logp)
    p[0] = 0.0
    return p / math.expm1(rate_ratio)


# -- vertical regime: the multiplicative limit jump process --------------------


@dataclass(frozen=True)
class LimitJumpProcess:
    """Explosive multiplicative jump process on (0, 1].

    From state x it waits Exp(r1 / x^(p-1)) and jumps to x*U^delta1 with U
    uniform on (0, 1); started at alpha it converges to 0 with summable jump
    times.
    """

    r1: float
    delta1: float
    p: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.r1 <= 0 or self.delta1 <= 0 or self.p < 2 or not 0 < self.alpha <= 1:
            raise ContractError("need r1, delta1 > 0, p >= 2, alpha in (0, 1]")


def limit_jump_parameters(p: int, k0: float, k1: float, k3: float) -> tuple[float, float]:
    """(r1, delta1) of the vertical-regime limit from the network rates.

    r1 = k0/(p-1)! * (k0/k1)^(p-1) is the escape rate of the boundary climb;
    delta1 = k3 (p-1)!/k1 drives the multiplicative decay per excursion.
    """
    r1 = k0 / math.factorial(p - 1) * (k0 / k1) ** (p - 1)
    delta1 = k3 * math.factorial(p - 1) / k1
    return r1, delta1


def sample_limit_jump_process(
    proc: LimitJumpProcess, seed: int, n_jumps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exact embedded-chain sampling: (jump times t_k, values V_k), k=1..n.

    V_k = alpha exp(-delta1 sum E_i) and t_k = sum V_{i-1}^(p-1) phi_i / r1
    with independent unit exponentials E_i, phi_i.
    """
    if n_jumps < 1:
        raise ContractError("n_jumps must be >= 1")
    t, v = sample_limit_jump_paths(proc, seed, 1, n_jumps)
    return t[0], v[0]


def sample_limit_jump_paths(
    proc: LimitJumpProcess, seed: int, n_paths: int, n_jumps: int
) -> tuple[np.ndarray, np.ndarray]:
    """Independent paths of the embedded chain; arrays shaped (n_paths, n_jumps).

    Per-jump values shrink like exp(-delta1 k), so keep n_jumps below the
    underflow horizon (~600/delta1) when exact positivity matters.
    """
    if n_paths < 1 or n_jumps < 1:
        raise ContractError("need n_paths >= 1 and n_jumps >= 1")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    e = gen.exponential(size=(n_paths, n_jumps))
    phi = gen.exponential(size=(n_paths, n_jumps))
    v = proc.alpha * np.exp(-proc.delta1 * np.cumsum(e, axis=1))
    prev = np.concatenate((np.full((n_paths, 1), proc.alpha), v[:, :-1]), axis=1)
    t = np.cumsum(prev ** (proc.p - 1) * phi / proc.r1, axis=1)
    return t, v
