import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_force_words, random_primitive_table
from pressurelab.errors import ValidationError
from pressurelab.shiftspace import (
    LocallyConstantPotential,
    SubshiftSystem,
    SymbolicPoint,
    admissible_words,
    birkhoff_sum,
    bowen_distance,
    canonical_extension,
    format_word,
    parse_word,
    periodic_points,
)


def test_full_shift_words_are_all_words(full2):
    words = admissible_words(full2, 3)
    assert len(words) == 8
    assert words[0] == (0, 0, 0) and words[-1] == (1, 1, 1)


def test_golden_mean_words(golden):
    assert admissible_words(golden, 3) == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]


def test_single_letters(golden):
    assert admissible_words(golden, 1) == [(0,), (1,)]
    assert len(admissible_words(SubshiftSystem.full_shift(3), 1)) == 3


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
def test_word_count_matches_brute_force_and_matrix_power(seed, n):
    rng = np.random.default_rng(seed)
    S = random_primitive_table(rng, int(rng.integers(2, 4)))
    if S.k == 3 and n > 9:
        n = 9
    words = admissible_words(S, n)
    assert words == brute_force_words(S.A, n)
    assert len(words) == np.linalg.matrix_power(S.A, n - 1).sum()


@pytest.mark.parametrize("n", range(1, 13))
def test_periodic_point_count_is_trace(golden, n):
    pts = periodic_points(golden, n)
    assert len(pts) == np.trace(np.linalg.matrix_power(golden.A, n))
    assert len(set(pts)) == len(pts)


def test_periodic_points_examples(full2, golden):
    assert len(periodic_points(full2, 2)) == 4
    assert periodic_points(golden, 1) == [SymbolicPoint((), (0,))]
    assert {str(x) for x in periodic_points(golden, 3)} == {"(0)", "(001)", "(010)", "(100)"}


def test_rejects_bad_tables():
    with pytest.raises(ValidationError, match="primitive"):
        SubshiftSystem([[0, 1], [1, 0]])
    with pytest.raises(ValidationError, match="row and column"):
        SubshiftSystem([[1, 0], [1, 0]])
    with pytest.raises(ValidationError):
        SubshiftSystem([[1, 2], [1, 1]])
    with pytest.raises(ValidationError):
        SubshiftSystem([[1]])


def test_points_are_normalized():
    x = SymbolicPoint((1, 0, 1), (0, 1, 0, 1))
    assert x == SymbolicPoint((1,), (0, 1))
    assert str(x) == "(10)"
    assert SymbolicPoint((), (0, 0)) == SymbolicPoint((0, 0, 0), (0,))
    with pytest.raises(ValidationError):
        SymbolicPoint((0,), ())


def test_point_admissibility(golden):
    golden.point((0,), (0, 1))
    with pytest.raises(ValidationError):
        golden.point((1,), (1, 0))
    with pytest.raises(ValidationError):
        golden.point((), (1,))


def test_word_roundtrip():
    assert parse_word("0a9z") == (0, 10, 9, 35)
    assert format_word((0, 10, 9, 35)) == "0a9z"
    with pytest.raises(ValidationError):
        parse_word("0_")


def test_birkhoff_constant(golden):
    f = LocallyConstantPotential.constant(golden, 1.7)
    x = canonical_extension(golden, (1, 0, 0))
    assert birkhoff_sum(golden, f, x, 9) == pytest.approx(9 * 1.7)


def test_birkhoff_bernoulli(full2, bernoulli):
    x = SymbolicPoint((), (0, 1))
    expected = 2 * math.log(1 / 3) + 2 * math.log(2 / 3)
    assert birkhoff_sum(full2, bernoulli, x, 4) == pytest.approx(expected, abs=1e-14)


def test_birkhoff_depth2_golden(golden, golden_depth2):
    x = SymbolicPoint((), (0, 1))
    f = golden_depth2
    assert birkhoff_sum(golden, f, x, 6) == pytest.approx(3 * (f((0, 1)) + f((1, 0))))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    a=st.integers(1, 16),
    b=st.integers(1, 16),
    depth=st.integers(1, 3),
)
def test_birkhoff_cocycle(seed, a, b, depth):
    rng = np.random.default_rng(seed)
    S = random_primitive_table(rng, 3)
    f = LocallyConstantPotential.from_vector(
        S, depth, rng.normal(size=len(admissible_words(S, depth)))
    )
    words = admissible_words(S, int(rng.integers(1, 8)))
    x = canonical_extension(S, words[int(rng.integers(len(words)))])
    lhs = birkhoff_sum(S, f, x, a + b)
    rhs = birkhoff_sum(S, f, x, a) + birkhoff_sum(S, f, x.shift(a), b)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_bowen_examples(full2):
    zero = SymbolicPoint((), (0,))
    assert bowen_distance(full2, zero, zero, 5) == 0.0
    assert bowen_distance(full2, zero, SymbolicPoint((1,), (0,)), 1) == 1.0
    assert bowen_distance(full2, zero, SymbolicPoint((0, 0, 0, 1), (0,)), 2) == 0.25


def test_bowen_resolves_far_disagreements(full2):
    x = SymbolicPoint((0,) * 100, (1,))
    y = SymbolicPoint((), (0,))
    assert bowen_distance(full2, x, y, 1) == 2.0**-100
    # Same sequence written two ways.
    assert bowen_distance(full2, SymbolicPoint((0, 1), (0, 1)), SymbolicPoint((), (0, 1)), 3) == 0.0


def _brute_bowen(x, y, n, horizon=200):
    xs, ys = x.symbols(horizon + n), y.symbols(horizon + n)
    best = 0.0
    for j in range(n):
        diff = np.nonzero(xs[j:] != ys[j:])[0]
        if diff.size:
            best = max(best, 2.0 ** -int(diff[0]))
    return best


@settings(max_examples=80, deadline=None)
@given(
    pre1=st.lists(st.integers(0, 1), max_size=6),
    per1=st.lists(st.integers(0, 1), min_size=1, max_size=5),
    pre2=st.lists(st.integers(0, 1), max_size=6),
    per2=st.lists(st.integers(0, 1), min_size=1, max_size=5),
    n=st.integers(1, 8),
)
def test_bowen_properties(pre1, per1, pre2, per2, n):
    S = SubshiftSystem.full_shift(2)
    x, y = SymbolicPoint(tuple(pre1), tuple(per1)), SymbolicPoint(tuple(pre2), tuple(per2))
    d = bowen_distance(S, x, y, n)
    assert d == bowen_distance(S, y, x, n)
    assert d <= bowen_distance(S, x, y, n + 1)
    assert bowen_distance(S, x, x, n) == 0.0
    assert d == _brute_bowen(x, y, n)


def test_canonical_extension_examples(full2, golden):
    assert canonical_extension(full2, (0, 1)) == SymbolicPoint((), (0, 1))
    assert canonical_extension(golden, (0, 1)) == SymbolicPoint((), (0, 1))
    # Wrap 1 -> 1 is forbidden; the shortest continuation cycle is 0.
    assert canonical_extension(golden, (1,)) == SymbolicPoint((1,), (0,))
    with pytest.raises(ValidationError):
        canonical_extension(golden, (1, 1))


@pytest.mark.parametrize("seed", range(5))
def test_canonical_extension_starts_with_word(seed):
    rng = np.random.default_rng(seed)
    S = random_primitive_table(rng, 4)
    for w in admissible_words(S, 4):
        x = canonical_extension(S, w)
        assert S.contains(x)
        assert tuple(x.symbols(4)) == w


def test_potential_validation(golden):
    with pytest.raises(ValidationError, match="missing"):
        LocallyConstantPotential(golden, 2, {(0, 0): 0.0, (0, 1): 0.0})
    with pytest.raises(ValidationError, match="inadmissible"):
        LocallyConstantPotential(golden, 2, {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): 0})
    with pytest.raises(ValidationError, match="finite"):
        LocallyConstantPotential(golden, 1, {(0,): math.inf, (1,): 0.0})


def test_potential_algebra(golden, golden_depth2):
    f = golden_depth2
    g = LocallyConstantPotential.from_function(golden, 1, lambda w: w[0])
    h = f + g
    assert h.depth == 2
    assert h((1, 0)) == pytest.approx(1.5)
    assert (f + 2.0)((0, 0)) == pytest.approx(2.3)
    s = f.shifted()
    assert s.depth == 3 and s((1, 0, 1)) == f((0, 1))
    assert f.lift(3)((0, 1, 0)) == f((0, 1))
    assert LocallyConstantPotential.from_json(golden, f.to_json()).values == f.values
