import numpy as np

from pseudotoric.fibration import LevelValues, PseudotoricStructure
from pseudotoric.loops import FourierLoop
from pseudotoric.torus import TorusSpec


def make_spec(loop, levels):
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    return TorusSpec(PseudotoricStructure(levels.size), loop,
                     LevelValues(levels))


def random_fourier_spec(rng, k):
    """A seeded near-circular fourier loop away from the origin, with a
    small second harmonic, plus random levels in (-1, 1)^k."""
    center = complex(rng.uniform(2.5, 4.0), rng.uniform(-1.0, 1.0))
    a1 = complex(rng.uniform(0.3, 0.7), rng.uniform(-0.2, 0.2))
    b1 = complex(rng.uniform(-0.2, 0.2), rng.uniform(0.3, 0.7))
    a2 = complex(*rng.uniform(-0.05, 0.05, 2))
    b2 = complex(*rng.uniform(-0.05, 0.05, 2))
    loop = FourierLoop(center, [a1, a2], [b1, b2])
    return make_spec(loop, rng.uniform(-0.9, 0.9, k))
