"""Built-in networks used throughout the tests, demos, and experiments."""

from __future__ import annotations

from .network import Complex, Reaction, ReactionNetwork


def _net(names, *reactions):
    n = len(names)

    def cx(counts):
        return Complex(tuple(counts) + (0,) * (n - len(counts)))

    return ReactionNetwork(
        tuple(names),
        tuple(Reaction(cx(s), cx(t), k) for s, t, k in reactions),
    )


def mm_infinity(lam: float = 1.0, mu: float = 1.0) -> ReactionNetwork:
    """One species with external input and per-copy removal: 0 <-> S1.

    The classic infinite-server queue; its stationary law is Poisson(lam/mu).
    """
    return _net(["S1"], ([0], [1], lam), ([1], [0], mu))


def triangle(k2: float = 1.0, k12: float = 1.0, k1: float = 1.0) -> ReactionNetwork:
    """Three-complex cycle S1 -> S2 -> S1+S2 -> S1 (weakly reversible, deficiency 0).

    Reaction order matches models/triangle.crn so the parsed file equals
    this builder.
    """
    return _net(
        ["S1", "S2"],
        ([1, 0], [0, 1], k1),   # S1 -> S2
        ([0, 1], [1, 1], k2),   # S2 -> S1 + S2
        ([1, 1], [1, 0], k12),  # S1 + S2 -> S1
    )


def triangle_with_sources(
    k2: float = 1.0, k12: float = 1.0, k1: float = 1.0, k01: float = 1.0, k02: float = 1.0
) -> ReactionNetwork:
    """The triangle cycle plus external sources 0 -> S1 and 0 -> S2.

    No longer weakly reversible; positive recurrence needs the drift criterion.
    """
    return _net(
        ["S1", "S2"],
        ([1, 0], [0, 1], k1),
        ([0, 1], [1, 1], k2),
        ([1, 1], [1, 0], k12),
        ([0, 0], [1, 0], k01),
        ([0, 0], [0, 1], k02),
    )


def showcase(
    k0: float = 1.0, k20: float = 1.0, k2: float = 1.0, k12: float = 1.0, k1: float = 1.0
) -> ReactionNetwork:
    """Two-species, five-reaction example with deficiency 1.

    0 <-> S2, S2 -> S1+S2 -> 2S1 -> S2.
    """
    return _net(
        ["S1", "S2"],
        ([1, 1], [2, 0], k12),  # S1 + S2 -> 2 S1
        ([2, 0], [0, 1], k1),   # 2 S1 -> S2
        ([0, 1], [1, 1], k2),   # S2 -> S1 + S2
        ([0, 0], [0, 1], k0),   # 0 -> S2
        ([0, 1], [0, 0], k20),  # S2 -> 0
    )


def slow_fast(
    p: int = 2, k0: float = 1.0, k1: float = 1.0, k2: float = 1.0, k3: float = 1.0
) -> ReactionNetwork:
    """Pair creation/annihilation plus a catalysed birth-death of S2.

    0 <-> S1+S2 and pS1+S2 <-> pS1+2S2.  The second linkage class needs p
    copies of S1 to fire, which makes returns from the vertical axis slow
    (time of order N^(p-1)) and drives the bi-modal behavior studied in the
    experiments.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    return _net(
        ["S1", "S2"],
        ([0, 0], [1, 1], k0),
        ([1, 1], [0, 0], k1),
        ([p, 1], [p, 2], k2),
        ([p, 2], [p, 1], k3),
    )


def autocatalytic(
    p: int = 3,
    q: int = 2,
    k1: float = 1.0,
    k2: float = 1.0,
    k3: float = 1.0,
    k4: float = 1.0,
) -> ReactionNetwork:
    """0 -> S1+S2, S2 -> 0, pS1+qS2 -> (q+1)S2, (q+1)S2 -> qS2.

    Only the first reaction increases the total copy number; the high-order
    third reaction converts S1 into S2 in bursts of p.
    """
    if p < 2 or q < 1:
        raise ValueError("need p >= 2 and q >= 1")
    return _net(
        ["S1", "S2"],
        ([0, 0], [1, 1], k1),
        ([0, 1], [0, 0], k2),
        ([p, q], [0, q + 1], k3),
        ([0, q + 1], [0, q], k4),
    )


def autocat_dominant(p: int = 3, k3: float = 1.0, k4: float = 1.0) -> ReactionNetwork:
    """Reduced two-reaction network pS1 -> S2, S2 -> 0.

    Keeps only the reactions that drive the autocatalytic network's first
    coordinate on the t/N^(p-1) timescale; used for the power-decay limit.
    """
    return _net(["S1", "S2"], ([p, 0], [0, 1], k3), ([0, 1], [0, 0], k4))


def cycle_1d(k1: float = 1.0, k2: float = 1.0, k3: float = 1.0) -> ReactionNetwork:
    """One-species triangular cycle 0 -> 2S1 -> 3S1 -> 0 (reducible to a 1-D chain)."""
    return _net(["S1"], ([0], [2], k1), ([2], [3], k2), ([3], [0], k3))


def conserved_pair(ka: float = 1.0, kb: float = 2.0) -> ReactionNetwork:
    """S1 <-> S2; total copy number is conserved exactly."""
    return _net(["S1", "S2"], ([1, 0], [0, 1], ka), ([0, 1], [1, 0], kb))


def conserved_triple(
    kab: float = 1.0, kba: float = 1.0, kbc: float = 1.0, kcb: float = 1.0, kauto: float = 0.5
) -> ReactionNetwork:
    """Three species exchanging mass: S1<->S2<->S3 plus S1+S2 -> 2S2.

    Conserves the total copy number, so the reachable class from any state is
    a finite simplex; used for exhaustive transition-frequency checks.
    """
    return _net(
        ["S1", "S2", "S3"],
        ([1, 0, 0], [0, 1, 0], kab),
        ([0, 1, 0], [1, 0, 0], kba),
        ([0, 1, 0], [0, 0, 1], kbc),
        ([0, 0, 1], [0, 1, 0], kcb),
        ([1, 1, 0], [0, 2, 0], kauto),
    )


def quadratic_growth(k: float = 1.0) -> ReactionNetwork:
    """2S1 -> 3S1; its fluid limit x' = k x^2 blows up in finite time."""
    return _net(["S1"], ([2], [3], k))
