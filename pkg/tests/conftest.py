from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parent.parent
MODELS = REPO / "models"
CONFIGS = REPO / "configs"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS


@pytest.fixture(scope="session")
def configs_dir() -> Path:
    return CONFIGS


def random_network(rng: np.random.Generator):
    """Random small network whose species order matches first appearance.

    Every species index appears in some reaction endpoint, so the canonical
    text round-trips to a structurally identical object.
    """
    from crnlab.network import Complex, Reaction, ReactionNetwork

    while True:
        n = int(rng.integers(1, 5))
        n_reactions = int(rng.integers(1, 7))
        pool: list[tuple[int, ...]] = []
        for _ in range(3 + n_reactions):
            pool.append(tuple(int(v) for v in rng.integers(0, 4, size=n)))
        pool = list(dict.fromkeys(pool))
        pairs = set()
        reactions = []
        for _ in range(40):
            if len(reactions) == n_reactions:
                break
            a, b = rng.integers(0, len(pool), size=2)
            src, tgt = pool[int(a)], pool[int(b)]
            if src == tgt or (src, tgt) in pairs:
                continue
            pairs.add((src, tgt))
            rate = float(rng.choice([0.25, 0.5, 1.0, 1.75, 2.0, 3.5])) * float(
                rng.integers(1, 4)
            )
            reactions.append((src, tgt, rate))
        if not reactions:
            continue
        used = [False] * n
        for src, tgt, _ in reactions:
            for i in range(n):
                if src[i] or tgt[i]:
                    used[i] = True
        if not all(used):
            continue
        # relabel species so first appearance order equals index order
        order: list[int] = []
        for src, tgt, _ in reactions:
            for side in (src, tgt):
                for i in range(n):
                    if side[i] and i not in order:
                        order.append(i)
        for i in range(n):
            if i not in order:
                order.append(i)
        remap = {old: new for new, old in enumerate(order)}

        def rm(c):
            out = [0] * n
            for i, v in enumerate(c):
                out[remap[i]] = v
            return tuple(out)

        names = tuple(f"S{i + 1}" for i in range(n))
        return ReactionNetwork(
            names,
            tuple(Reaction(Complex(rm(s)), Complex(rm(t)), k) for s, t, k in reactions),
        )
