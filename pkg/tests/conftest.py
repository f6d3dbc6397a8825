import itertools
import math

import numpy as np
import pytest

from pressurelab.shiftspace import LocallyConstantPotential, SubshiftSystem

P_BERNOULLI = (1 / 3, 2 / 3)
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


@pytest.fixture
def full2():
    return SubshiftSystem.full_shift(2)


@pytest.fixture
def golden():
    return SubshiftSystem.golden_mean()


@pytest.fixture
def bernoulli(full2):
    return LocallyConstantPotential.from_function(full2, 1, lambda w: math.log(P_BERNOULLI[w[0]]))


@pytest.fixture
def golden_depth2(golden):
    return LocallyConstantPotential(golden, 2, {(0, 0): 0.3, (0, 1): -0.2, (1, 0): 0.5})


def brute_force_words(A, n):
    """Every length-n word over range(k) with no forbidden adjacent pair."""
    A = np.asarray(A)
    k = len(A)
    return [
        w for w in itertools.product(range(k), repeat=n)
        if all(A[a, b] for a, b in zip(w, w[1:]))
    ]


def random_primitive_table(rng, k):
    while True:
        A = (rng.random((k, k)) < 0.6).astype(int)
        try:
            return SubshiftSystem(A)
        except ValueError:
            continue


def random_markov_marginal(rng, S, depth=2):
    """Depth-2 marginal of a random stationary Markov chain supported on S."""
    P = S.A * (rng.random(S.A.shape) + 0.05)
    P = P / P.sum(axis=1, keepdims=True)
    w, v = np.linalg.eig(P.T)
    pi = np.real(v[:, np.argmin(np.abs(w - 1))])
    pi = pi / pi.sum()
    from pressurelab.empirical import CylinderMeasure

    weights = {
        (a, b): pi[a] * P[a, b] for a in range(S.k) for b in range(S.k) if S.A[a, b]
    }
    return CylinderMeasure.from_dict(S, 2, weights)
