"""Build, parse, and dissect reaction networks.

Covers the text format, canonical rendering, the structural report
(linkage classes, weak reversibility, deficiency), exact conservation
laws, and the reduction of three-complex cycles to 1-D chains.
"""

from crnlab import (
    analyze,
    conservation_vectors,
    models,
    parse_network,
    positive_conservation_vector,
    propensity,
    render_network,
    shift_complexes,
    triangular_reduce,
)

## Parse a model from text.  "@" separates chemistry from rates, "<->"
## expands into a forward/backward pair, species are numbered by first
## appearance.
net = parse_network(
    """
    # catalysed interconversion with an external source
    0 <-> S1 @ 1.0, 2.0
    S1 + S2 -> 2 S2 @ 0.5
    S2 -> S1 @ 0.25
    """
)
print("species:", net.species_names)
for r in net.reactions:
    print("  reaction:", r.source.counts, "->", r.target.counts, "@", r.rate_constant)
print("canonical form:\n" + render_network(net))

## Structural reports: the triangle cycle is weakly reversible with
## deficiency zero, the five-reaction showcase network has deficiency one.
for name, m in [("triangle", models.triangle()), ("showcase", models.showcase())]:
    rep = analyze(m)
    print(
        f"{name}: complexes={rep.complex_count} linkage classes={rep.n_linkage_classes} "
        f"rank={rep.stoich_rank} deficiency={rep.deficiency} "
        f"weakly reversible={rep.weakly_reversible}"
    )

## Conservation laws are exact integer vectors orthogonal to every jump.
pair = models.conserved_pair()
print("S1<->S2 conserved vectors:", conservation_vectors(pair))
print("strictly positive member:", positive_conservation_vector(pair))

## Three-complex cycles reduce.  A 2-D stoichiometric space means the
## product-form machinery applies; a 1-D one reduces to a chain on a line.
print("triangle cycle verdict:", triangular_reduce(models.triangle()).verdict)

red = triangular_reduce(models.cycle_1d(), base=(5,))
print(
    f"one-species cycle: verdict={red.verdict} step={red.step_vector} "
    f"jumps=({red.p1:+d}, {red.p2:+d}, {-(red.p1 + red.p2):+d}) anchor={red.anchor}"
)
for k in (0, 2, 5):
    print(f"  chain rates at k={k}:", red.chain_rates(k))

## Shifting removes one copy of a species from every complex; rate constants
## stay put and the embedded jump chain is unchanged (all propensities at
## matching states divide by the same factor).
up_down = parse_network("S1 -> 2 S1 @ 1.5\n2 S1 -> S1 @ 0.5")
shifted = shift_complexes(up_down, 0)
print("shifted reactions:", [(r.source.counts, r.target.counts) for r in shifted.reactions])
x = (7,)
ratios = [
    propensity(up_down, i, x) / propensity(shifted, i, (x[0] - 1,))
    for i in range(2)
]
print("propensity ratios at x=7 vs x=6 (equal by construction):", ratios)
