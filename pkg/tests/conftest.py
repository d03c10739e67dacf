import numpy as np
import pytest

import biasforge as bf


@pytest.fixture
def rng():
    return bf.RandomSource(20260810)


@pytest.fixture
def uniform_sym():
    return bf.uniform(-1.0, 1.0)


def atoms_strategy():
    """Hypothesis strategy for small discrete laws on [-3, 3]."""
    from hypothesis import strategies as st

    def build(xs, raw_w):
        xs = sorted(set(round(x, 6) for x in xs))
        w = np.asarray(raw_w[: len(xs)], dtype=float) + 0.05
        w = w / w.sum()
        return bf.from_atoms(list(zip(xs, w)))

    return st.builds(
        build,
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=6, unique=True),
        st.lists(st.floats(0, 1, allow_nan=False), min_size=6, max_size=6),
    )
