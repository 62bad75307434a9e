"""Shared generators for randomized tests."""

import random

from tropaffine.lattice import primitive, vadd
from tropaffine.loops import LegalLoop

BASE_LOOPS = (
    ((1, 0), (0, 1), (-1, -1)),
    ((1, 0), (0, 1), (-1, -1), (1, 0), (0, 1), (-1, -1)),
    ((-1, -1), (0, 1), (1, 0)),
    ((1, 0), (0, 1), (-1, 1)),
    ((1, 0), (0, 1), (-1, 3), (0, -1)),
    ((1, 1), (2, 1), (-4, -1), (1, -1)),
)


def _shear(k: int, lower: bool, v):
    if lower:
        return (v[0], k * v[0] + v[1])
    return (v[0] + k * v[1], v[1])


def random_legal_loop(rng: random.Random, moves: int = 8) -> LegalLoop:
    """A legal loop grown from a seed loop by refinements and shears.

    Refinements insert the primitive mediant between a consecutive pair
    and are dropped when the result fails validation, so every returned
    loop is legal by construction. Shears act by unimodular maps and
    keep winding and legality on the nose.
    """
    vectors = list(rng.choice(BASE_LOOPS))
    for _ in range(moves):
        if rng.random() < 0.6:
            i = rng.randrange(len(vectors))
            w = primitive(vadd(vectors[i], vectors[(i + 1) % len(vectors)]))
            candidate = vectors[: i + 1] + [w] + vectors[i + 1 :]
            try:
                LegalLoop(candidate)
            except ValueError:
                continue
            vectors = candidate
        else:
            k = rng.choice((-2, -1, 1, 2))
            lower = rng.random() < 0.5
            vectors = [_shear(k, lower, v) for v in vectors]
    return LegalLoop(vectors)
