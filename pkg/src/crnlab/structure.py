"""Graph and algebraic structure of a network.

Covers linkage classes, weak reversibility, stoichiometric rank, deficiency,
the positive equilibrium of the mass-action ODE for weakly reversible
deficiency-zero networks, the associated product-form stationary measure,
and the reduction of three-complex cycles to one-dimensional chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gcd
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, RefusalError
from .network import (
    Complex,
    Reaction,
    ReactionNetwork,
    State,
    as_state,
    falling_factorial,
    propensity,
    rational_rank,
    transitions,
)


@dataclass(frozen=True)
class StructuralReport:
    """Counts C, l, s and the deficiency delta = C - l - s (always >= 0)."""

    complex_count: int
    linkage_classes: tuple[tuple[int, ...], ...]  # partition of complex indices
    weakly_reversible: bool
    stoich_rank: int
    deficiency: int

    @property
    def n_linkage_classes(self) -> int:
        return len(self.linkage_classes)

    def to_dict(self) -> dict:
        return {
            "complex_count": self.complex_count,
            "linkage_classes": [list(c) for c in self.linkage_classes],
            "n_linkage_classes": self.n_linkage_classes,
            "weakly_reversible": self.weakly_reversible,
            "stoich_rank": self.stoich_rank,
            "deficiency": self.deficiency,
        }


def analyze(net: ReactionNetwork) -> StructuralReport:
    """Structural invariants of the reaction graph.

    Linkage classes are connected components of the undirected reaction
    graph; weak reversibility asks each class to be strongly connected in
    the directed graph; the rank is exact (rational arithmetic).
    """
    complexes = net.complexes
    index = {c: i for i, c in enumerate(complexes)}
    m = len(complexes)
    out_edges: list[set[int]] = [set() for _ in range(m)]
    und: list[set[int]] = [set() for _ in range(m)]
    for r in net.reactions:
        a, b = index[r.source], index[r.target]
        out_edges[a].add(b)
        und[a].add(b)
        und[b].add(a)

    seen = [False] * m
    classes: list[tuple[int, ...]] = []
    for start in range(m):
        if seen[start]:
            continue
        comp = []
        stack = [start]
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in und[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        classes.append(tuple(sorted(comp)))

    def reaches(src: int, targets: set[int]) -> set[int]:
        out = {src}
        stack = [src]
        while stack:
            v = stack.pop()
            for w in out_edges[v]:
                if w in targets and w not in out:
                    out.add(w)
                    stack.append(w)
        return out

    weakly_reversible = all(
        len(reaches(v, set(comp))) == len(comp) for comp in classes for v in comp
    )

    s = rational_rank([r.delta for r in net.reactions])
    delta = m - len(classes) - s
    return StructuralReport(
        complex_count=m,
        linkage_classes=tuple(classes),
        weakly_reversible=weakly_reversible,
        stoich_rank=s,
        deficiency=delta,
    )


# -- deterministic equilibrium ----------------------------------------------


def mass_action_field(net: ReactionNetwork) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side of the deterministic mass-action ODE.

    x' = sum_r kappa_r (prod_i x_i^(y-_ri)) (y+_r - y-_r), continuous powers.
    """
    S = net.source_matrix().astype(np.float64)
    D = net.delta_matrix().astype(np.float64)
    K = net.rate_vector()

    def field(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        mono = np.prod(np.power(x[None, :], S), axis=1)
        return (K * mono) @ D

    return field


def _complex_balance_guess(net: ReactionNetwork, report: StructuralReport) -> np.ndarray:
    """Positive equilibrium candidate from the complex-balance structure.

    On each linkage class the weighted complex Laplacian has a positive
    kernel vector psi; deficiency zero makes <y_eta, ln c> - mu_class =
    ln psi_eta a consistent linear system, so its least-squares solution
    exponentiates to a complex-balanced equilibrium.  Plain Newton from
    all-ones can slide into the boundary root (the field also vanishes on
    the boundary), so this is the starting point instead.
    """
    complexes = net.complexes
    index = {c: i for i, c in enumerate(complexes)}
    m = len(complexes)
    lap = np.zeros((m, m))
    for r in net.reactions:
        a, b = index[r.source], index[r.target]
        lap[b, a] += r.rate_constant
        lap[a, a] -= r.rate_constant
    psi = np.zeros(m)
    for cls in report.linkage_classes:
        idx = list(cls)
        block = lap[np.ix_(idx, idx)]
        _, _, vh = np.linalg.svd(block)
        vec = vh[-1]
        vec = np.abs(vec)  # kernel of an irreducible Laplacian is signed one way
        psi[idx] = vec / vec.max()
    n = net.n_species
    ell = len(report.linkage_classes)
    rows = np.zeros((m, n + ell))
    rhs = np.zeros(m)
    for li, cls in enumerate(report.linkage_classes):
        for ci in cls:
            rows[ci, :n] = complexes[ci].counts
            rows[ci, n + li] = -1.0
            rhs[ci] = math.log(psi[ci])
    sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return np.exp(sol[:n])


def deterministic_equilibrium(
    net: ReactionNetwork,
    initial_guess: Sequence[float] | None = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> np.ndarray:
    """Strictly positive root of the mass-action field.

    Only defined for weakly reversible, deficiency-zero networks (where the
    root exists and is unique within the positive class); refuses otherwise.
    A complex-balance solve provides the starting point; damped Newton
    (step halved until positivity holds and the residual decreases) then
    drives the sup-norm residual below tol.
    """
    report = analyze(net)
    if not (report.weakly_reversible and report.deficiency == 0):
        raise RefusalError(
            "equilibrium requires a weakly reversible, deficiency-zero network "
            f"(got weakly_reversible={report.weakly_reversible}, deficiency={report.deficiency})"
        )
    n = net.n_species
    field = mass_action_field(net)
    if initial_guess is None:
        x = _complex_balance_guess(net, report)
    else:
        x = np.asarray(initial_guess, dtype=float).copy()
    if np.any(x <= 0):
        raise ContractError("initial guess must be strictly positive")

    def jac(x: np.ndarray) -> np.ndarray:
        eps = 1e-7
        J = np.empty((n, n))
        f0 = field(x)
        for j in range(n):
            h = eps * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (field(xp) - f0) / h
        return J

    res = np.max(np.abs(field(x)))
    for _ in range(max_iter):
        if res < tol:
            return x
        J = jac(x)
        try:
            step = np.linalg.solve(J, -field(x))
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -field(x), rcond=None)[0]
        lam = 1.0
        for _ in range(60):
            cand = x + lam * step
            if np.all(cand > 0):
                cand_res = np.max(np.abs(field(cand)))
                if cand_res < res:
                    x, res = cand, cand_res
                    break
            lam *= 0.5
        else:
            raise RefusalError(f"Newton iteration stalled at residual {res:.3e}")
    if res < tol:
        return x
    raise RefusalError(f"no convergence after {max_iter} iterations, residual {res:.3e}")


# -- product-form stationary measure ----------------------------------------


def irreducible_class(
    net: ReactionNetwork, base: Sequence[int], window: Sequence[int]
) -> set[State]:
    """States inside the box [0, window_i] that communicate with ``base``.

    Forward/backward BFS restricted to the window: z belongs iff base -> z
    and z -> base through states that stay inside the window.
    """
    base = as_state(base)
    caps = tuple(int(w) for w in window)
    n = net.n_species
    if len(base) != n or len(caps) != n:
        raise ContractError("base/window dimension mismatch")

    def inside(z: State) -> bool:
        return all(0 <= v <= c for v, c in zip(z, caps))

    if not inside(base):
        raise ContractError("base state outside the window")

    deltas = [r.delta for r in net.reactions]

    def bfs(start: State, forward: bool) -> set[State]:
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for r_i, d in enumerate(deltas):
                if forward:
                    nxt = tuple(v + dd for v, dd in zip(x, d))
                    src = x
                else:
                    nxt = tuple(v - dd for v, dd in zip(x, d))
                    src = nxt
                    if any(v < 0 for v in nxt):
                        continue
                if propensity(net, r_i, src) == 0.0:
                    continue
                if inside(nxt) and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    return bfs(base, True) & bfs(base, False)


@dataclass(frozen=True)
class ProductFormMeasure:
    """pi(x) = prod_i c_i^(x_i) / x_i! restricted to an irreducible class.

    The normalization is over the truncated class only; ``boundary_leak`` is
    the normalized mass on class states that can jump outside the window in
    one step, an honest bound on what the truncation ignores.  No claim is
    made about summability on infinite classes.
    """

    equilibrium: tuple[float, ...]
    states: tuple[State, ...]
    probabilities: np.ndarray
    boundary_leak: float
    normalizable: bool

    def log_weight(self, x: Sequence[int]) -> float:
        """Unnormalized log pi(x), computed in log space to avoid overflow."""
        out = 0.0
        for xi, ci in zip(x, self.equilibrium):
            out += xi * math.log(ci) - math.lgamma(xi + 1)
        return out

    def probability(self, x: Sequence[int]) -> float:
        """Normalized probability within the truncated class (0 outside)."""
        key = as_state(x)
        try:
            i = self.states.index(key)
        except ValueError:
            return 0.0
        return float(self.probabilities[i])

    def as_dict(self) -> dict:
        return {
            "equilibrium": list(self.equilibrium),
            "states": [list(s) for s in self.states],
            "probabilities": self.probabilities.tolist(),
            "boundary_leak": self.boundary_leak,
            "normalizable": self.normalizable,
        }


def product_form_measure(
    net: ReactionNetwork,
    c: Sequence[float],
    base: Sequence[int],
    window: Sequence[int],
    leak_tol: float = 1e-6,
) -> ProductFormMeasure:
    """Product-of-Poissons stationary measure built from an equilibrium c.

    Enumerates the irreducible class of ``base`` inside the window and
    normalizes there.
    """
    c = tuple(float(v) for v in c)
    if any(v <= 0 for v in c):
        raise ContractError("equilibrium must be strictly positive")
    cls = irreducible_class(net, base, window)
    if not cls:
        raise ContractError("empty truncation window")
    states = tuple(sorted(cls))
    logw = np.array(
        [
            sum(xi * math.log(ci) - math.lgamma(xi + 1) for xi, ci in zip(s, c))
            for s in states
        ]
    )
    w = np.exp(logw - logw.max())
    probs = w / w.sum()

    caps = tuple(int(v) for v in window)
    leak = 0.0
    for s, pr in zip(states, probs):
        for r_i, r in enumerate(net.reactions):
            if propensity(net, r_i, s) > 0.0:
                z = tuple(v + d for v, d in zip(s, r.delta))
                if not all(0 <= v <= cap for v, cap in zip(z, caps)):
                    leak += float(pr)
                    break
    return ProductFormMeasure(
        equilibrium=c,
        states=states,
        probabilities=probs,
        boundary_leak=leak,
        normalizable=leak < leak_tol,
    )


def stationarity_residual(
    net: ReactionNetwork, measure: ProductFormMeasure, window: Sequence[int]
) -> float:
    """Brute-force global-balance check of a candidate stationary measure.

    For every interior state z (all in-neighbors inside the window) returns
    the worst |inflow - outflow| / (pi(z) * exit rate) over the enumerated
    transitions.  Independent of how the measure was produced, so it serves
    as the oracle for the product-form construction.
    """
    states = set(measure.states)
    caps = tuple(int(v) for v in window)
    prob = {s: float(p) for s, p in zip(measure.states, measure.probabilities)}
    deltas = [r.delta for r in net.reactions]

    worst = 0.0
    checked = 0
    for z in measure.states:
        interior = True
        inflow = 0.0
        for r_i, d in enumerate(deltas):
            x = tuple(v - dd for v, dd in zip(z, d))
            if any(v < 0 for v in x):
                continue
            a = propensity(net, r_i, x)
            if a == 0.0:
                continue
            if not all(0 <= v <= cap for v, cap in zip(x, caps)):
                interior = False
                break
            if x in states:
                inflow += prob[x] * a
            else:
                interior = False
                break
        if not interior:
            continue
        exit_rate = sum(a for _, a in transitions(net, z))
        if exit_rate == 0.0 or prob[z] == 0.0:
            continue
        outflow = prob[z] * exit_rate
        worst = max(worst, abs(inflow - outflow) / outflow)
        checked += 1
    if checked == 0:
        raise ContractError("window has no interior states to check")
    return worst


# -- triangular reductions ---------------------------------------------------


def shift_complexes(net: ReactionNetwork, species: int) -> ReactionNetwork:
    """Subtract one copy of a species from every complex.

    Requires every complex to contain the species.  Rate constants are
    unchanged; all propensities at corresponding states x and x - e_i divide
    by the same factor x_i, so the embedded jump chain is preserved.
    """
    i = int(species)
    if not all(c.counts[i] >= 1 for c in net.complexes):
        raise RefusalError(f"some complex lacks species index {i}; cannot shift")

    def drop(c: Complex) -> Complex:
        counts = list(c.counts)
        counts[i] -= 1
        return Complex(tuple(counts))

    return ReactionNetwork(
        net.species_names,
        tuple(Reaction(drop(r.source), drop(r.target), r.rate_constant) for r in net.reactions),
    )


@dataclass(frozen=True)
class TriangularReduction:
    """Outcome of reducing a three-complex cycle.

    verdict is one of:
      * "deficiency-zero": the cycle spans a 2-D stoichiometric space and the
        product-form machinery applies directly;
      * "finite-conserved": the common jump direction has mixed signs, a
        strictly positive conserved vector exists and the reachable class is
        finite;
      * "reduced-1d": dynamics live on the line anchor + k*step_vector and
        are those of a 1-D chain with jumps +p1, +p2, -(p1+p2).
    """

    verdict: str
    conserved: tuple[int, ...] | None = None
    step_vector: tuple[int, ...] | None = None
    p1: int | None = None
    p2: int | None = None
    p3: int | None = None
    anchor: State | None = None
    dropped_species: tuple[int, ...] = ()
    reduced_network: ReactionNetwork | None = None

    def state_for(self, k: int) -> State:
        """Point anchor + k * step_vector on the invariant line."""
        if self.step_vector is None or self.anchor is None:
            raise ContractError("not a reduced-1d outcome")
        return tuple(a + k * d for a, d in zip(self.anchor, self.step_vector))

    def index_of(self, state: Sequence[int]) -> int:
        if self.step_vector is None or self.anchor is None:
            raise ContractError("not a reduced-1d outcome")
        s = as_state(state)
        for i, (v, a, d) in enumerate(zip(s, self.anchor, self.step_vector)):
            if d != 0:
                k, rem = divmod(v - a, d)
                if rem != 0:
                    raise ContractError(f"{s} is not on the invariant line")
                break
        if self.state_for(k) != s:
            raise ContractError(f"{s} is not on the invariant line")
        return k

    def chain_rates(self, k: int) -> tuple[tuple[int, float], ...]:
        """Jump sizes and rates of the 1-D chain at index k.

        Returns ((+p1, r1), (+p2, r2), (-(p1+p2), r3)) where the rates are
        the reduced network's propensities at anchor + k*step_vector.
        """
        if self.reduced_network is None:
            raise ContractError("not a reduced-1d outcome")
        x = self.state_for(k)
        jumps = (self.p1, self.p2, -(self.p1 + self.p2))
        return tuple(
            (j, propensity(self.reduced_network, i, x)) for i, j in enumerate(jumps)
        )


def _cycle_order(net: ReactionNetwork) -> list[Reaction]:
    """The three reactions ordered as a directed cycle c1->c2->c3->c1."""
    if len(net.reactions) != 3 or len(net.complexes) != 3:
        raise RefusalError("not a triangular network (need exactly 3 complexes and 3 reactions)")
    succ = {r.source: r for r in net.reactions}
    if len(succ) != 3:
        raise RefusalError("not a triangular cycle (repeated source complex)")
    start = net.reactions[0]
    chain = [start]
    for _ in range(2):
        nxt = succ.get(chain[-1].target)
        if nxt is None:
            raise RefusalError("not a triangular cycle (broken chain)")
        chain.append(nxt)
    if chain[-1].target != chain[0].source:
        raise RefusalError("not a triangular cycle (does not close)")
    return chain


def triangular_reduce(net: ReactionNetwork, base: Sequence[int] | None = None) -> TriangularReduction:
    """Classify a three-complex cycle and, when 1-D, build its chain form.

    Follows the reduction: a 2-D stoichiometric space means deficiency zero;
    a mixed-sign direction means a finite conserved class; otherwise constant
    species are dropped, the primitive step vector D with y2-y1 = p1*D,
    y3-y2 = p2*D is computed exactly, indices are rotated so p1 > 0 and
    p1 + p2 > 0, the cycle is shifted so its first complex is empty, and the
    chain with jumps {+p1, +p2, -(p1+p2)} on anchor + k*D is returned.
    """
    chain = _cycle_order(net)
    y = [r.source.counts for r in chain]
    v1 = [b - a for a, b in zip(y[0], y[1])]
    v2 = [b - a for a, b in zip(y[1], y[2])]

    if rational_rank([v1, v2]) == 2:
        return TriangularReduction(verdict="deficiency-zero")

    u = v1
    has_pos = any(a > 0 for a in u)
    has_neg = any(a < 0 for a in u)
    if has_pos and has_neg:
        pos_sum = sum(a for a in u if a > 0)
        neg_sum = -sum(a for a in u if a < 0)
        rho = [neg_sum if a > 0 else (pos_sum if a < 0 else 1) for a in u]
        g = 0
        for v in rho:
            g = gcd(g, v)
        rho = tuple(v // (g or 1) for v in rho)
        assert sum(r * a for r, a in zip(rho, u)) == 0
        return TriangularReduction(verdict="finite-conserved", conserved=rho)

    keep = tuple(i for i, a in enumerate(u) if a != 0)
    dropped = tuple(i for i, a in enumerate(u) if a == 0)

    def proj(vec):
        return [vec[i] for i in keep]

    u_k = proj(u)
    v2_k = proj(v2)
    content = 0
    for a in u_k:
        content = gcd(content, abs(a))
    step = [abs(a) // content for a in u_k]  # primitive, strictly positive
    sign1 = 1 if u_k[0] > 0 else -1
    p1 = sign1 * content
    nz = next(i for i, d in enumerate(step) if d != 0)
    p2, rem = divmod(v2_k[nz], step[nz])
    if rem != 0 or [p2 * d for d in step] != v2_k:
        raise RefusalError("cycle directions are not integer multiples of a common step")
    p3 = -p1 - p2

    triples = [(p1, p2, p3), (p2, p3, p1), (p3, p1, p2)]
    for rot, (a, b, c) in enumerate(triples):
        if a > 0 and a + b > 0:
            chain = chain[rot:] + chain[:rot]
            p1, p2, p3 = a, b, c
            break
    else:
        raise RefusalError("no rotation with p1 > 0 and p1 + p2 > 0 exists")

    # Shift the (projected) cycle so its first complex is the empty one; then
    # the complexes are exactly {0, p1*D, (p1+p2)*D}.  Species dropped as
    # constant contribute a fixed factor to each propensity; when a base
    # state is known that factor is folded into the rate constants.
    names = tuple(net.species_names[i] for i in keep)
    y1 = [chain[0].source.counts[i] for i in keep]

    def reduce_complex(c: Complex) -> Complex:
        return Complex(tuple(c.counts[i] - b for i, b in zip(keep, y1)))

    def dropped_factor(r: Reaction) -> int:
        if base is None or not dropped:
            return 1
        xs = [as_state(base)[i] for i in dropped]
        ys = [r.source.counts[i] for i in dropped]
        f = falling_factorial(xs, ys)
        if f == 0:
            raise RefusalError("base state starves a constant species; cycle never fires")
        return f

    reduced = ReactionNetwork(
        names,
        tuple(
            Reaction(
                reduce_complex(r.source),
                reduce_complex(r.target),
                r.rate_constant * dropped_factor(r),
            )
            for r in chain
        ),
    )

    if base is not None:
        b = [as_state(base)[i] for i in keep]
    else:
        b = [0] * len(keep)
    k_max = min(bi // di for bi, di in zip(b, step) if di != 0)
    anchor = tuple(bi - k_max * di for bi, di in zip(b, step))

    return TriangularReduction(
        verdict="reduced-1d",
        step_vector=tuple(step),
        p1=p1,
        p2=p2,
        p3=p3,
        anchor=anchor,
        dropped_species=dropped,
        reduced_network=reduced,
    )
