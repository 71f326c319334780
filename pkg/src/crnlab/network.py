"""Core reaction-network data model and mass-action rate algebra.

A network is the usual triple (species, complexes, reactions) with one
positive rate constant per reaction.  States are tuples of non-negative
integers (copy numbers); all rate algebra is exact integer arithmetic
until the final conversion to float.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ContractError, DimensionError

State = tuple[int, ...]


def as_state(x: Sequence[int]) -> State:
    """Normalize a count vector to a tuple, rejecting negatives."""
    t = tuple(int(v) for v in x)
    if any(v < 0 for v in t):
        raise ContractError(f"negative count in state {t}")
    return t


def norm1(x: Sequence[int]) -> int:
    """Total number of molecules, sum_i x_i."""
    return sum(int(v) for v in x)


@dataclass(frozen=True, order=True)
class Complex:
    """A formal combination of species: counts[i] molecules of species i.

    The zero vector is the empty complex (rendered ``0`` in model files).
    """

    counts: State

    def __post_init__(self):
        object.__setattr__(self, "counts", as_state(self.counts))

    @property
    def size(self) -> int:
        return norm1(self.counts)

    def __len__(self) -> int:
        return len(self.counts)

    def is_empty(self) -> bool:
        return all(v == 0 for v in self.counts)


@dataclass(frozen=True)
class Reaction:
    """source -> target at mass-action rate rate_constant * x^(source)."""

    source: Complex
    target: Complex
    rate_constant: float

    def __post_init__(self):
        if len(self.source) != len(self.target):
            raise DimensionError("reaction endpoints have different lengths")
        if self.source == self.target:
            raise ContractError("self-loop reaction (source == target)")
        if not (self.rate_constant > 0):
            raise ContractError(f"rate constant must be positive, got {self.rate_constant}")

    @property
    def delta(self) -> tuple[int, ...]:
        """State change target - source (may be negative componentwise)."""
        return tuple(t - s for s, t in zip(self.source.counts, self.target.counts))


@dataclass(frozen=True)
class ReactionNetwork:
    """Immutable reaction network.

    species_names fixes the dimension; complexes are derived from reaction
    endpoints in order of first appearance, so every endpoint is a network
    complex by construction.
    """

    species_names: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    _complexes: tuple[Complex, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "species_names", tuple(self.species_names))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        n = len(self.species_names)
        if len(set(self.species_names)) != n:
            raise ContractError("duplicate species names")
        seen: dict[Complex, None] = {}
        for r in self.reactions:
            if len(r.source) != n:
                raise DimensionError(
                    f"reaction endpoint has {len(r.source)} species, network has {n}"
                )
            seen.setdefault(r.source)
            seen.setdefault(r.target)
        object.__setattr__(self, "_complexes", tuple(seen))

    @property
    def n_species(self) -> int:
        return len(self.species_names)

    @property
    def complexes(self) -> tuple[Complex, ...]:
        return self._complexes

    @property
    def max_source_size(self) -> int:
        """Largest source-complex size over all reactions (0 if no reactions)."""
        return max((r.source.size for r in self.reactions), default=0)

    @property
    def max_target_size(self) -> int:
        return max((r.target.size for r in self.reactions), default=0)

    def source_matrix(self) -> np.ndarray:
        """(R, n) int64 matrix of source complexes."""
        return np.array([r.source.counts for r in self.reactions], dtype=np.int64).reshape(
            len(self.reactions), self.n_species
        )

    def delta_matrix(self) -> np.ndarray:
        """(R, n) int64 matrix of state changes."""
        return np.array([r.delta for r in self.reactions], dtype=np.int64).reshape(
            len(self.reactions), self.n_species
        )

    def rate_vector(self) -> np.ndarray:
        return np.array([r.rate_constant for r in self.reactions], dtype=np.float64)

    def with_rates(self, rates: Sequence[float]) -> "ReactionNetwork":
        """Same topology with a new rate vector (used by classical scaling)."""
        if len(rates) != len(self.reactions):
            raise DimensionError("rate vector length does not match reaction count")
        new = tuple(
            Reaction(r.source, r.target, float(k)) for r, k in zip(self.reactions, rates)
        )
        return ReactionNetwork(self.species_names, new)


def falling_factorial(x: Sequence[int], y: Sequence[int] | Complex) -> int:
    """Generalized factorial x^(y) = prod_i x_i (x_i - 1) ... (x_i - y_i + 1).

    Zero as soon as some x_i < y_i; the empty product (all y_i = 0) is 1.
    Exact integer arithmetic, no overflow.
    """
    yc = y.counts if isinstance(y, Complex) else tuple(int(v) for v in y)
    xc = tuple(int(v) for v in x)
    if len(xc) != len(yc):
        raise DimensionError(f"state has length {len(xc)}, complex has length {len(yc)}")
    out = 1
    for xi, yi in zip(xc, yc):
        if yi < 0:
            raise ContractError("complex counts must be non-negative")
        if xi < yi:
            return 0
        for k in range(yi):
            out *= xi - k
    return out


def propensity(net: ReactionNetwork, reaction_index: int, x: Sequence[int]) -> float:
    """Mass-action jump rate kappa_r * x^(source_r) at state x."""
    r = net.reactions[reaction_index]
    ff = falling_factorial(x, r.source)
    if ff == 0:
        return 0.0
    return r.rate_constant * ff


def propensities(net: ReactionNetwork, x: Sequence[int]) -> list[float]:
    return [propensity(net, i, x) for i in range(len(net.reactions))]


def total_rate(net: ReactionNetwork, x: Sequence[int]) -> float:
    return sum(propensities(net, x))


def apply_jump(x: Sequence[int], reaction: Reaction) -> State:
    """State after one firing of ``reaction``; requires the reaction enabled at x."""
    xc = as_state(x)
    if falling_factorial(xc, reaction.source) == 0:
        raise ContractError(f"reaction {reaction.source.counts}->{reaction.target.counts} disabled at {xc}")
    return tuple(v + d for v, d in zip(xc, reaction.delta))


def generator_apply(net: ReactionNetwork, f: Mapping[State, float], x: Sequence[int]) -> float:
    """Apply the jump-process generator to a finitely supported function.

    f is a map state -> value; missing states read 0.  Returns
    sum_r kappa_r x^(y_r-) (f(x + delta_r) - f(x)).
    """
    xc = as_state(x)
    fx = float(f.get(xc, 0.0))
    out = 0.0
    for i, r in enumerate(net.reactions):
        a = propensity(net, i, xc)
        if a == 0.0:
            continue
        z = tuple(v + d for v, d in zip(xc, r.delta))
        out += a * (float(f.get(z, 0.0)) - fx)
    return out


def transitions(net: ReactionNetwork, x: Sequence[int]) -> list[tuple[State, float]]:
    """Enabled transitions (target state, rate) at x, one entry per enabled reaction."""
    xc = as_state(x)
    out = []
    for i, r in enumerate(net.reactions):
        a = propensity(net, i, xc)
        if a > 0.0:
            out.append((tuple(v + d for v, d in zip(xc, r.delta)), a))
    return out


# -- exact linear algebra on the stoichiometric matrix ----------------------
#
# Deficiency and conservation laws are integer invariants; ranks and null
# spaces are computed over the rationals to keep them exact.


def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices)."""
    rows = [list(r) for r in rows]
    m = len(rows)
    ncols = len(rows[0]) if m else 0
    pivots: list[int] = []
    ri = 0
    for col in range(ncols):
        piv = next((k for k in range(ri, m) if rows[k][col] != 0), None)
        if piv is None:
            continue
        rows[ri], rows[piv] = rows[piv], rows[ri]
        inv = rows[ri][col]
        rows[ri] = [v / inv for v in rows[ri]]
        for k in range(m):
            if k != ri and rows[k][col] != 0:
                fac = rows[k][col]
                rows[k] = [a - fac * b for a, b in zip(rows[k], rows[ri])]
        pivots.append(col)
        ri += 1
        if ri == m:
            break
    return rows, pivots


def rational_rank(vectors: Iterable[Sequence[int]]) -> int:
    rows = [[Fraction(int(v)) for v in vec] for vec in vectors]
    rows = [r for r in rows if any(v != 0 for v in r)]
    if not rows:
        return 0
    _, pivots = _rref(rows)
    return len(pivots)


def _primitive(vec: Sequence[Fraction]) -> tuple[int, ...]:
    """Clear denominators and divide by the gcd; make the first nonzero positive."""
    den = 1
    for v in vec:
        den = den * v.denominator // gcd(den, v.denominator)
    ints = [int(v * den) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    for v in ints:
        if v != 0:
            if v < 0:
                ints = [-w for w in ints]
            break
    return tuple(ints)


def conservation_vectors(net: ReactionNetwork) -> list[tuple[int, ...]]:
    """Primitive integer basis of {rho : <rho, delta_r> = 0 for all r}.

    This is the left null space of the stoichiometric matrix, computed in
    exact rational arithmetic; every returned rho satisfies the orthogonality
    exactly, so <rho, X(t)> is conserved along every trajectory.
    """
    n = net.n_species
    deltas = [r.delta for r in net.reactions if any(d != 0 for d in r.delta)]
    if not deltas:
        return [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    rows = [[Fraction(d) for d in vec] for vec in deltas]
    rref, pivots = _rref(rows)
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for j in free:
        sol = [Fraction(0)] * n
        sol[j] = Fraction(1)
        for ri, col in enumerate(pivots):
            sol[col] = -rref[ri][j]
        basis.append(_primitive(sol))
    return basis


def positive_conservation_vector(
    net: ReactionNetwork, coeff_bound: int = 6
) -> tuple[int, ...] | None:
    """Search for a strictly positive conserved vector.

    Tries integer combinations of the exact null-space basis with
    coefficients in [-coeff_bound, coeff_bound] and verifies positivity
    exactly.  Returns None when none is found within the bound; that means
    "not found", not "does not exist".
    """
    basis = conservation_vectors(net)
    if not basis:
        return None
    n = net.n_species

    def all_pos(v: Sequence[int]) -> bool:
        return all(c > 0 for c in v)

    for b in basis:
        if all_pos(b):
            return b
    k = len(basis)
    if k == 1:
        return None
    coeffs = range(-coeff_bound, coeff_bound + 1)
    stack = [()]
    for _ in range(k):
        stack = [c + (a,) for c in stack for a in coeffs]
    for combo in stack:
        if all(a == 0 for a in combo):
            continue
        v = [0] * n
        for a, b in zip(combo, basis):
            for i in range(n):
                v[i] += a * b[i]
        if all_pos(v):
            g = 0
            for c in v:
                g = gcd(g, c)
            return tuple(c // (g or 1) for c in v)
    return None
